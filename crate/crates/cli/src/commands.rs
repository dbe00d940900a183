use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sorption_core::checks::{run_identity_checks, CheckOptions, CheckOutcome};
use sorption_core::diagnostics::{audit_energy_estimate, audit_positivity, l2_qt_error, EnergyAudit, PositivityAudit};
use sorption_core::stepper::{run, Trajectory};
use sorption_core::study::StudyResult;

use crate::config::{Config, ConvergeConfig, RunConfig};
use crate::output::{self, num};
use crate::CliError;

pub const EFFECTIVE_CONFIG: &str = "effective.ini";

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Overrides the output directory of the config file.
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

impl Options {
    fn say(&self, text: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", text.as_ref());
        }
    }
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub trajectory: Trajectory,
    pub energy: Option<EnergyAudit>,
    pub positivity: PositivityAudit,
    pub positivity_applies: bool,
    /// Space-time error against the exact solution for ZKB runs that keep every level.
    pub zkb_error: Option<f64>,
}

pub fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    match Config::load(path)? {
        Config::Run(c) => Ok(c),
        Config::Converge(_) => Err(CliError::Input(format!(
            "{} is a convergence study; use `converge`",
            path.display()
        ))),
    }
}

pub fn load_converge_config(path: &Path) -> Result<ConvergeConfig, CliError> {
    match Config::load(path)? {
        Config::Converge(c) => Ok(c),
        Config::Run(_) => Err(CliError::Input(format!(
            "{} has no [converge] section; use `run`",
            path.display()
        ))),
    }
}

/// Runs one simulation and writes snapshots, diagnostics, report and the
/// effective configuration. Audits that apply and fail give a check error
/// after all files are written.
pub fn cmd_run(config: &Path, opts: &Options) -> Result<RunOutcome, CliError> {
    let mut cfg = load_run_config(config)?;
    if let Some(dir) = &opts.out {
        cfg.output.dir = dir.clone();
    }
    let spec = cfg.build_spec()?;
    let dir = cfg.output.dir.clone();
    prepare_dir(&dir)?;
    output::write_text(&dir.join(EFFECTIVE_CONFIG), &cfg.to_ini())?;

    let report_path = dir.join("report.txt");
    let traj = match run(&spec, &cfg.solver) {
        Ok(t) => t,
        Err(e) => {
            let err = CliError::from(e);
            output::write_text(&report_path, &format!("run failed: {err}\n"))?;
            return Err(err);
        }
    };
    output::write_snapshots(&dir.join("snapshots.csv"), &traj)?;
    output::write_diagnostics(&dir.join("diagnostics.csv"), &traj)?;

    let energy = traj.source_free().then(|| audit_energy_estimate(&traj)).transpose()?;
    let positivity = audit_positivity(&traj, 10.0 * cfg.solver.grad_tol);
    let positivity_applies = cfg.expects_positivity(spec.initial());
    let zkb_error = match cfg.zkb_profile()? {
        Some(z) if traj.is_complete() => Some(l2_qt_error(&traj, |t, x, out| {
            out[0] = z.u(t, x)?;
            Ok(())
        })?),
        _ => None,
    };

    let reports = traj.reports();
    let mut text = String::new();
    let _ = writeln!(text, "time steps          {}", reports.len());
    let _ = writeln!(text, "grid nodes          {}", traj.grid().nodes());
    let _ = writeln!(text, "newton iterations   {}", reports.iter().map(|r| r.iterations).sum::<usize>());
    let _ = writeln!(text, "fallback steps      {}", reports.iter().filter(|r| r.fallback_used).count());
    let worst = reports.iter().map(|r| r.grad_norm).fold(0.0, f64::max);
    let _ = writeln!(text, "max final gradient  {}", num(worst));
    text.push_str(&output::describe_energy(energy.as_ref()));
    text.push_str(&output::describe_positivity(&positivity, positivity_applies));
    if let Some(e) = zkb_error {
        let _ = writeln!(text, "L2(Q_T) error vs exact solution  {}", num(e));
    }
    output::write_text(&report_path, &text)?;
    opts.say(format!("wrote {} levels to {}", traj.levels().len(), dir.display()));
    opts.say(text.trim_end());

    if energy.as_ref().is_some_and(|a| !a.holds()) {
        return Err(CliError::Check("discrete energy estimate violated".into()));
    }
    if positivity_applies && !positivity.holds() {
        return Err(CliError::Check(format!(
            "negative value {} at step {}",
            positivity.min_value, positivity.step
        )));
    }
    Ok(RunOutcome {
        out_dir: dir,
        trajectory: traj,
        energy,
        positivity,
        positivity_applies,
        zkb_error,
    })
}

/// Runs the refinement study and writes `errors.csv` and `rates.csv`.
pub fn cmd_converge(config: &Path, opts: &Options) -> Result<StudyResult, CliError> {
    let mut cfg = load_converge_config(config)?;
    if let Some(dir) = &opts.out {
        cfg.output_dir = dir.clone();
    }
    let dir = cfg.output_dir.clone();
    prepare_dir(&dir)?;
    output::write_text(&dir.join(EFFECTIVE_CONFIG), &cfg.to_ini())?;
    let result = cfg.study.run(&cfg.solver, cfg.execution)?;
    output::write_errors(&dir.join("errors.csv"), &result)?;
    output::write_rates(&dir.join("rates.csv"), &result)?;

    opts.say(format!("{:>6} {:>8} {:>6} {:>12} {:>10} {:>7}", "m", "dx", "steps", "e2", "log10 e2", "order"));
    for fit in &result.rates {
        for (i, p) in result.points.iter().filter(|p| p.m == fit.m).enumerate() {
            let order = i.checked_sub(1).map_or(String::new(), |k| format!("{:.3}", fit.incremental[k]));
            opts.say(format!(
                "{:>6} {:>8} {:>6} {:>12.4e} {:>10.4} {:>7}",
                p.m,
                p.dx,
                p.steps,
                p.error,
                p.error.log10(),
                order
            ));
        }
        opts.say(format!("  m = {}: fitted rate {:.4}, prefactor {:.4e}", fit.m, fit.rate, fit.prefactor));
    }

    if let Some(p) = result.points.iter().find(|p| !p.energy.holds()) {
        return Err(CliError::Check(format!("energy estimate violated for m = {}, dx = {}", p.m, p.dx)));
    }
    if let Some(p) = result.points.iter().find(|p| !p.positivity.holds()) {
        return Err(CliError::Check(format!("negative values for m = {}, dx = {}", p.m, p.dx)));
    }
    Ok(result)
}

/// Runs the identity suite; with `--out`, also writes `validate.txt` there.
pub fn cmd_validate(opts: &Options, checks: &CheckOptions) -> Result<Vec<CheckOutcome>, CliError> {
    let results = run_identity_checks(checks);
    let mut text = String::new();
    for c in &results {
        let _ = writeln!(text, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(dir) = &opts.out {
        prepare_dir(dir)?;
        output::write_text(&dir.join("validate.txt"), &text)?;
    }
    opts.say(text.trim_end());
    let failed: Vec<&str> = results.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(results)
    } else {
        Err(CliError::Check(failed.join("; ")))
    }
}
