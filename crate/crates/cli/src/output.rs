//! CSV and text outputs. Numbers are written with 17 significant digits so
//! they parse back to the same doubles; nothing time- or host-dependent is
//! written, which keeps repeated runs byte-identical.

use std::fs;
use std::path::Path;

use sorption_core::diagnostics::{EnergyAudit, PositivityAudit, Support};
use sorption_core::stepper::Trajectory;
use sorption_core::study::StudyResult;

use crate::CliError;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn row<I, S>(w: &mut csv::Writer<fs::File>, path: &Path, fields: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(fields).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `t,x,u_1..u_m`, one row per node of every stored level.
pub fn write_snapshots(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let m = traj.levels()[0].1.components();
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string(), "x".to_string()];
    header.extend((1..=m).map(|k| format!("u_{k}")));
    row(&mut w, path, &header)?;
    let grid = traj.grid();
    for (n, field) in traj.levels() {
        let t = num(traj.time().t(*n));
        for i in 0..grid.nodes() {
            let mut rec = vec![t.clone(), num(grid.x(i))];
            rec.extend(field.node(i).iter().map(|v| num(*v)));
            row(&mut w, path, &rec)?;
        }
    }
    finish(w, path)
}

fn support_fields(s: &Option<Support>) -> [String; 3] {
    match s {
        Some(s) => [num(s.left), num(s.right), s.gaps.len().to_string()],
        None => [String::new(), String::new(), "0".into()],
    }
}

/// One row per time level, including levels not kept as snapshots.
pub fn write_diagnostics(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let d = traj.diagnostics();
    let m = d[0].mass.len();
    let mut w = writer(path)?;
    let mut header: Vec<String> = ["step", "t", "energy", "dissipation", "min_value", "newton_iterations", "grad_norm"]
        .map(String::from)
        .to_vec();
    for k in 1..=m {
        header.extend([
            format!("mass_{k}"),
            format!("support_left_{k}"),
            format!("support_right_{k}"),
            format!("gaps_{k}"),
        ]);
    }
    row(&mut w, path, &header)?;
    for s in d {
        let (iters, grad) = match s.step.checked_sub(1).map(|k| &traj.reports()[k]) {
            Some(r) => (r.iterations.to_string(), num(r.grad_norm)),
            None => (String::new(), String::new()),
        };
        let mut rec = vec![
            s.step.to_string(),
            num(s.t),
            num(s.energy),
            num(s.dissipation),
            num(s.min_value),
            iters,
            grad,
        ];
        for k in 0..m {
            rec.push(num(s.mass[k]));
            rec.extend(support_fields(&s.supports[k]));
        }
        row(&mut w, path, &rec)?;
    }
    finish(w, path)
}

pub fn write_errors(path: &Path, result: &StudyResult) -> Result<(), CliError> {
    let mut w = writer(path)?;
    row(&mut w, path, ["m", "dx", "dt", "steps", "e2"])?;
    for p in &result.points {
        row(&mut w, path, [num(p.m), num(p.dx), num(p.dt), p.steps.to_string(), num(p.error)])?;
    }
    finish(w, path)
}

pub fn write_rates(path: &Path, result: &StudyResult) -> Result<(), CliError> {
    let mut w = writer(path)?;
    row(&mut w, path, ["m", "rate", "prefactor"])?;
    for r in &result.rates {
        row(&mut w, path, [num(r.m), num(r.rate), num(r.prefactor)])?;
    }
    finish(w, path)
}

pub fn describe_energy(audit: Option<&EnergyAudit>) -> String {
    match audit {
        None => "energy estimate: not applicable (nonzero source)\n".into(),
        Some(a) => format!(
            "energy estimate: {}\n  initial energy      {}\n  max energy          {}\n  total dissipation   {}\n  \
             max energy+dissip.  {}\n  bound               {}\n  margin              {}\n",
            if a.holds() { "holds" } else { "VIOLATED" },
            num(a.initial),
            num(a.max_energy),
            num(a.total_dissipation),
            num(a.max_combined),
            num(a.bound),
            num(a.margin),
        ),
    }
}

pub fn describe_positivity(audit: &PositivityAudit, applies: bool) -> String {
    format!(
        "positivity: {}\n  min value           {} (step {})\n  tolerance           {}\n",
        match (applies, audit.holds()) {
            (false, _) => "not required (data not nonnegative)",
            (true, true) => "holds",
            (true, false) => "VIOLATED",
        },
        num(audit.min_value),
        audit.step,
        num(-audit.tolerance),
    )
}
