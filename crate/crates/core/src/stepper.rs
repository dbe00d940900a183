//! The implicit time loop: each level is the minimizer of the step functional
//! assembled from the previous one.

use std::fmt;
use std::sync::Arc;

use crate::diagnostics::StepDiagnostics;
use crate::energy::{DiscreteEnergy, StateField};
use crate::error::{Error, Result};
use crate::isotherm::Isotherm;
use crate::mesh::{Grid1D, TimePartition};
use crate::minimizer::{minimize, SolveReport, SolverConfig};

/// Source term `f(t, x)` written into an `m`-vector.
pub type SourceFn = dyn Fn(f64, f64, &mut [f64]) + Send + Sync;

/// Default threshold above which a nodal value counts as "inside the support".
pub const DEFAULT_SUPPORT_EPS: f64 = 1e-10;

/// A complete problem: isotherm, meshes, initial level, source, and storage
/// options. Boundary data are homogeneous Dirichlet.
#[derive(Clone)]
pub struct ProblemSpec {
    isotherm: Arc<dyn Isotherm>,
    grid: Grid1D,
    time: TimePartition,
    initial: StateField,
    source: Option<Arc<SourceFn>>,
    store_every: usize,
    support_eps: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("isotherm", &self.isotherm)
            .field("grid", &self.grid)
            .field("time", &self.time)
            .field("source", &self.source.as_ref().map(|_| "<fn>"))
            .field("store_every", &self.store_every)
            .field("support_eps", &self.support_eps)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        isotherm: Arc<dyn Isotherm>,
        time: TimePartition,
        initial: StateField,
    ) -> Result<Self> {
        if initial.components() != isotherm.components() {
            return Err(Error::Config(format!(
                "initial data has {} components, isotherm {}",
                initial.components(),
                isotherm.components()
            )));
        }
        Ok(Self {
            grid: *initial.grid(),
            isotherm,
            time,
            initial,
            source: None,
            store_every: 1,
            support_eps: DEFAULT_SUPPORT_EPS,
        })
    }

    /// Samples the initial condition `u0(x)` at the nodes.
    pub fn from_fn(
        isotherm: Arc<dyn Isotherm>,
        grid: Grid1D,
        time: TimePartition,
        initial: impl Fn(f64, &mut [f64]),
    ) -> Result<Self> {
        let m = isotherm.components();
        let u0 = StateField::sample(grid, m, initial)?;
        Self::new(isotherm, time, u0)
    }

    pub fn with_source(mut self, source: Arc<SourceFn>) -> Self {
        self.source = Some(source);
        self
    }

    /// Keep every `k`-th level (plus the final one) in the trajectory.
    pub fn store_every(mut self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("storage stride must be at least 1".into()));
        }
        self.store_every = k;
        Ok(self)
    }

    pub fn with_support_eps(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Config(format!("support_eps = {eps} must be positive")));
        }
        self.support_eps = eps;
        Ok(self)
    }

    pub fn isotherm(&self) -> &dyn Isotherm {
        &*self.isotherm
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn time(&self) -> &TimePartition {
        &self.time
    }

    pub fn initial(&self) -> &StateField {
        &self.initial
    }

    pub fn has_source(&self) -> bool {
        self.source.is_some()
    }

    fn sample_source(&self, t: f64) -> Result<Option<Vec<f64>>> {
        let Some(f) = &self.source else {
            return Ok(None);
        };
        let m = self.isotherm.components();
        let mut values = vec![0.0; self.grid.nodes() * m];
        for (i, row) in values.chunks_mut(m).enumerate() {
            f(t, self.grid.x(i), row);
        }
        crate::isotherm::ensure_finite(&values)?;
        Ok(Some(values))
    }
}

/// Stored levels, per-step solver reports and per-level diagnostics of a run.
///
/// Time queries follow the right-continuous piecewise-constant convention:
/// `U^n` represents `((n−1)Δt, nΔt]` and `U^0` the initial instant.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Grid1D,
    time: TimePartition,
    stride: usize,
    source_free: bool,
    levels: Vec<(usize, StateField)>,
    reports: Vec<SolveReport>,
    diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn time(&self) -> &TimePartition {
        &self.time
    }

    /// True when every level `0..=N` is stored.
    pub fn is_complete(&self) -> bool {
        self.stride == 1
    }

    pub fn source_free(&self) -> bool {
        self.source_free
    }

    /// Stored `(n, U^n)` pairs in increasing `n`.
    pub fn levels(&self) -> &[(usize, StateField)] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> Option<&StateField> {
        self.levels
            .binary_search_by_key(&n, |(k, _)| *k)
            .ok()
            .map(|i| &self.levels[i].1)
    }

    /// One report per time step (`N` entries).
    pub fn reports(&self) -> &[SolveReport] {
        &self.reports
    }

    /// One record per level (`N + 1` entries), computed for every level
    /// regardless of storage thinning.
    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    pub fn query(&self, t: f64) -> Result<&StateField> {
        let n = self.time.level_at(t)?;
        self.level(n).ok_or_else(|| {
            Error::Unsupported(format!(
                "level {n} (t = {t}) was not stored (storage stride {})",
                self.stride
            ))
        })
    }
}

/// Runs the time loop from `U^0` to `U^N`.
pub fn run(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let iso = spec.isotherm();
    let grid = spec.grid;
    let m = iso.components();
    let steps = spec.time.steps();
    let dt = spec.time.dt();

    let mut current = spec.initial.clone();
    let mut diagnostics = Vec::with_capacity(steps + 1);
    diagnostics.push(StepDiagnostics::compute(0, 0.0, &current, iso, 0.0, spec.support_eps));
    let mut levels = vec![(0, current.clone())];
    let mut reports = Vec::with_capacity(steps);
    let mut dissipation = 0.0;

    for n in 1..=steps {
        let t = spec.time.t(n);
        let source = spec.sample_source(t)?;
        let energy = DiscreteEnergy::assemble(iso, &current, dt, source.as_deref())?;
        let (u, report) = minimize(&energy, current.interior(), cfg).map_err(|e| e.at_step(n))?;
        current = StateField::from_interior(grid, m, &u);
        dissipation += dt * crate::diagnostics::dirichlet_seminorm_sq(&current);
        diagnostics.push(StepDiagnostics::compute(n, t, &current, iso, dissipation, spec.support_eps));
        reports.push(report);
        if n % spec.store_every == 0 || n == steps {
            levels.push((n, current.clone()));
        }
    }

    Ok(Trajectory {
        grid,
        time: spec.time,
        stride: spec.store_every,
        source_free: spec.source.is_none(),
        levels,
        reports,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotherm::Freundlich;

    fn bump_spec(steps: usize) -> ProblemSpec {
        let iso = Arc::new(Freundlich::new(1.0 / 3.0, 2).unwrap());
        let grid = Grid1D::new(-1.0, 1.0, 39).unwrap();
        let time = TimePartition::new(0.1, steps).unwrap();
        ProblemSpec::from_fn(iso, grid, time, |x, u| {
            u[0] = (1.0 - ((x + 0.3) / 0.3).powi(2)).max(0.0);
            u[1] = 0.5 * (1.0 - ((x - 0.3) / 0.3).powi(2)).max(0.0);
        })
        .unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let iso = Arc::new(Freundlich::new(0.5, 2).unwrap());
        let grid = Grid1D::new(0.0, 1.0, 9).unwrap();
        let time = TimePartition::new(1.0, 5).unwrap();
        let spec = ProblemSpec::new(iso, time, StateField::zeros(grid, 2)).unwrap();
        let traj = run(&spec, &SolverConfig::default()).unwrap();
        assert_eq!(traj.levels().len(), 6);
        for (_, s) in traj.levels() {
            assert!(s.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn levels_reports_and_queries() {
        let spec = bump_spec(10);
        let traj = run(&spec, &SolverConfig::default()).unwrap();
        assert_eq!(traj.levels().len(), 11);
        assert_eq!(traj.reports().len(), 10);
        assert_eq!(traj.diagnostics().len(), 11);
        assert_eq!(traj.level(0).unwrap(), spec.initial());
        assert_eq!(traj.query(0.0).unwrap(), spec.initial());
        assert_eq!(traj.query(0.005).unwrap(), traj.level(1).unwrap());
        assert_eq!(traj.query(0.1).unwrap(), traj.level(10).unwrap());
        assert!(matches!(traj.query(0.2), Err(Error::Range { .. })));
        for r in traj.reports() {
            assert!(r.converged && r.energy_decrease >= -1e-14);
        }
    }

    #[test]
    fn every_step_solves_the_implicit_equation() {
        let spec = bump_spec(5);
        let cfg = SolverConfig::default();
        let traj = run(&spec, &cfg).unwrap();
        let iso = spec.isotherm();
        for n in 1..=5 {
            let prev = traj.level(n - 1).unwrap();
            let next = traj.level(n).unwrap();
            let f = DiscreteEnergy::assemble(iso, prev, spec.time().dt(), None).unwrap();
            let res = f.euler_lagrange_residual(next.interior()).unwrap();
            assert!(res <= 1.0001 * cfg.grad_tol / spec.time().dt(), "step {n}: {res}");
        }
    }

    #[test]
    fn thinned_storage() {
        let spec = bump_spec(10).store_every(4).unwrap();
        let traj = run(&spec, &SolverConfig::default()).unwrap();
        let stored: Vec<usize> = traj.levels().iter().map(|(n, _)| *n).collect();
        assert_eq!(stored, vec![0, 4, 8, 10]);
        assert!(!traj.is_complete());
        assert_eq!(traj.diagnostics().len(), 11);
        assert!(matches!(traj.query(0.05), Err(Error::Unsupported(_))));
        assert!(traj.query(0.08).is_ok());
    }

    #[test]
    fn solver_failure_carries_the_step() {
        let spec = bump_spec(3);
        let cfg = SolverConfig {
            max_iters: 1,
            ..SolverConfig::default()
        };
        match run(&spec, &cfg) {
            Err(Error::NonConvergence { step, .. }) => assert_eq!(step, Some(1)),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn source_is_sampled_at_the_new_level() {
        let iso = Arc::new(Freundlich::new(0.5, 1).unwrap());
        let grid = Grid1D::new(0.0, 1.0, 9).unwrap();
        let time = TimePartition::new(0.2, 2).unwrap();
        let src: Arc<SourceFn> = Arc::new(|t, _x, f| f[0] = t);
        let spec = ProblemSpec::new(iso.clone(), time, StateField::zeros(grid, 1))
            .unwrap()
            .with_source(src);
        let cfg = SolverConfig::default();
        let traj = run(&spec, &cfg).unwrap();
        // first step must be driven by f(t^1) = 0.1
        let f_at = |v: f64| {
            let mut s = vec![v; 11];
            s[0] = 0.0;
            s[10] = 0.0;
            s
        };
        let e = DiscreteEnergy::assemble(&*iso, traj.level(0).unwrap(), 0.1, Some(&f_at(0.1))).unwrap();
        assert!(e.euler_lagrange_residual(traj.level(1).unwrap().interior()).unwrap() < 1e-8);
        assert!(!traj.source_free());
    }
}
