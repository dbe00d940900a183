//! Mesh-refinement studies against exact ZKB solutions of the scalar porous
//! medium equation.

use std::sync::Arc;

use crate::analytic::ZkbProfile;
use crate::diagnostics::{
    audit_energy_estimate, audit_positivity, fit_rate, incremental_orders, l2_qt_error, EnergyAudit,
    PositivityAudit,
};
use crate::error::{Error, Result};
use crate::isotherm::PorousMedium;
use crate::mesh::{Grid1D, TimePartition};
use crate::minimizer::SolverConfig;
use crate::par::Execution;
use crate::stepper::{run, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ZkbStudy {
    /// PME exponents `m > 1`; the solver runs with `p = 1/m`.
    pub exponents: Vec<f64>,
    pub spacings: Vec<f64>,
    /// `Δt ≈ dt_ratio·Δx`, rounded so that `T/Δt` is an integer.
    pub dt_ratio: f64,
    pub domain: (f64, f64),
    pub final_time: f64,
    pub c: f64,
    pub t0: f64,
    pub x0: f64,
}

impl Default for ZkbStudy {
    fn default() -> Self {
        Self {
            exponents: vec![2.0, 3.0],
            spacings: vec![0.04, 0.02, 0.01],
            dt_ratio: 2.0,
            domain: (-2.0, 2.0),
            final_time: 0.5,
            c: 0.1,
            t0: 1.0,
            x0: 0.0,
        }
    }
}

/// One simulation of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPoint {
    pub m: f64,
    pub dx: f64,
    pub dt: f64,
    pub steps: usize,
    pub error: f64,
    pub newton_iterations: usize,
    pub energy: EnergyAudit,
    pub positivity: PositivityAudit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub m: f64,
    pub rate: f64,
    pub prefactor: f64,
    pub incremental: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    /// Ordered by exponent, then by spacing as given.
    pub points: Vec<StudyPoint>,
    pub rates: Vec<RateFit>,
}

impl StudyResult {
    pub fn errors_for(&self, m: f64) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.m == m)
            .map(|p| (p.dx, p.error))
            .collect()
    }
}

impl ZkbStudy {
    pub fn validate(&self) -> Result<()> {
        if self.spacings.len() < 2 {
            return Err(Error::Config(format!(
                "a refinement study needs at least two spacings, got {}",
                self.spacings.len()
            )));
        }
        if self.exponents.is_empty() {
            return Err(Error::Config("no PME exponents given".into()));
        }
        if !(self.dt_ratio > 0.0) {
            return Err(Error::Config(format!("dt_ratio = {} must be positive", self.dt_ratio)));
        }
        for &m in &self.exponents {
            self.profile(m)?
                .validate_containment(self.domain.0, self.domain.1, self.final_time)?;
        }
        for &dx in &self.spacings {
            Grid1D::with_spacing(self.domain.0, self.domain.1, dx)?;
        }
        Ok(())
    }

    pub fn profile(&self, m: f64) -> Result<ZkbProfile> {
        ZkbProfile::new(self.c, self.t0, self.x0, m)
    }

    /// Time partition for spacing `dx`: `N = ceil(T/(ratio·Δx))`, `Δt = T/N`.
    pub fn time_partition(&self, dx: f64) -> Result<TimePartition> {
        let steps = (self.final_time / (self.dt_ratio * dx) - 1e-9).ceil().max(1.0) as usize;
        TimePartition::new(self.final_time, steps)
    }

    pub fn run_point(&self, m: f64, dx: f64, cfg: &SolverConfig) -> Result<StudyPoint> {
        let z = self.profile(m)?;
        let grid = Grid1D::with_spacing(self.domain.0, self.domain.1, dx)?;
        let time = self.time_partition(dx)?;
        let iso = Arc::new(PorousMedium::from_pme_exponent(m)?);
        let spec = ProblemSpec::from_fn(iso, grid, time, |x, u| u[0] = z.u(0.0, x).unwrap_or(0.0))?;
        let traj = run(&spec, cfg)?;
        let error = l2_qt_error(&traj, |t, x, out| {
            out[0] = z.u(t, x)?;
            Ok(())
        })?;
        Ok(StudyPoint {
            m,
            dx: grid.dx(),
            dt: time.dt(),
            steps: time.steps(),
            error,
            newton_iterations: traj.reports().iter().map(|r| r.iterations).sum(),
            energy: audit_energy_estimate(&traj)?,
            positivity: audit_positivity(&traj, 10.0 * cfg.grad_tol),
        })
    }

    /// Runs every `(m, Δx)` pair, independently and possibly in parallel.
    pub fn run(&self, cfg: &SolverConfig, execution: Execution) -> Result<StudyResult> {
        self.validate()?;
        cfg.validate()?;
        let jobs: Vec<(f64, f64)> = self
            .exponents
            .iter()
            .flat_map(|&m| self.spacings.iter().map(move |&dx| (m, dx)))
            .collect();
        let points = execution.try_map(&jobs, |&(m, dx)| self.run_point(m, dx, cfg))?;
        let mut result = StudyResult {
            points,
            rates: Vec::new(),
        };
        for &m in &self.exponents {
            let pts = result.errors_for(m);
            let (rate, prefactor) = fit_rate(&pts)?;
            result.rates.push(RateFit {
                m,
                rate,
                prefactor,
                incremental: incremental_orders(&pts),
            });
        }
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_rounding() {
        let s = ZkbStudy::default();
        let t = s.time_partition(0.04).unwrap();
        assert_eq!(t.steps(), 7);
        assert_eq!(s.time_partition(0.01).unwrap().steps(), 25);
        assert!((s.time_partition(0.01).unwrap().dt() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn invalid_studies() {
        let one = ZkbStudy {
            spacings: vec![0.04],
            ..ZkbStudy::default()
        };
        assert!(matches!(one.validate(), Err(Error::Config(_))));
        let tight = ZkbStudy {
            domain: (-1.0, 1.0),
            ..ZkbStudy::default()
        };
        assert!(tight.validate().is_err());
    }

    #[test]
    fn coarse_sweep_converges_in_both_modes() {
        let s = ZkbStudy {
            exponents: vec![2.0],
            spacings: vec![0.08, 0.04],
            ..ZkbStudy::default()
        };
        let cfg = SolverConfig::default();
        let par = s.run(&cfg, Execution::Parallel).unwrap();
        let seq = s.run(&cfg, Execution::Sequential).unwrap();
        assert_eq!(par, seq);
        let e = par.errors_for(2.0);
        assert!(e[1].1 < e[0].1, "{e:?}");
        assert!(par.points.iter().all(|p| p.energy.holds() && p.positivity.holds()));
    }
}
