//! Damped Newton minimization of a [`DiscreteEnergy`].
//!
//! Each iteration solves the regularized banded Newton system by Cholesky and
//! backtracks on the exact energy with an Armijo test. If the Newton direction
//! cannot be formed or is not a descent direction, a diagonally scaled
//! steepest-descent direction is used instead. Iterates are never projected:
//! for nonnegative data the minimizer is nonnegative on its own, and clamping
//! would hide violations.

use crate::energy::DiscreteEnergy;
use crate::error::{Error, Result};
use crate::isotherm::norm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Tolerance on `‖∇F‖_∞ / Δx`, the implicit-step residual per unit volume.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Backtracking factor in `(0, 1)`.
    pub shrink: f64,
    /// Armijo constant in `(0, 1)`.
    pub sufficient_decrease: f64,
    /// Radius below which the Jacobian of `b` is evaluated at a shifted point.
    pub regularization: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_iters: 200,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            regularization: crate::energy::DEFAULT_REGULARIZATION,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return bad("grad_tol must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("line-search shrink factor must lie in (0, 1)");
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return bad("sufficient-decrease constant must lie in (0, 1)");
        }
        if !(self.regularization > 0.0 && self.regularization.is_finite()) {
            return bad("regularization radius must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final `‖∇F‖_∞ / Δx`.
    pub grad_norm: f64,
    /// `F(U_init) − F(U_min)`.
    pub energy_decrease: f64,
    pub converged: bool,
    pub fallback_used: bool,
}

/// Maximum number of backtracking halvings per direction.
const MAX_BACKTRACKS: usize = 80;

pub fn minimize(
    energy: &DiscreteEnergy<'_>,
    initial: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    minimize_impl(energy, initial, cfg, None)
}

/// As [`minimize`], also returning the energy after every accepted iterate
/// (the first entry is `F(U_init)`).
pub fn minimize_traced(
    energy: &DiscreteEnergy<'_>,
    initial: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport, Vec<f64>)> {
    let mut trace = Vec::new();
    let (u, report) = minimize_impl(energy, initial, cfg, Some(&mut trace))?;
    Ok((u, report, trace))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nodes whose norm falls below `DEGENERATE_FACTOR · regularization` are
/// relaxed exactly and pinned out of the Newton system.
const DEGENERATE_FACTOR: f64 = 1.0;

fn minimize_impl(
    energy: &DiscreteEnergy<'_>,
    initial: &[f64],
    cfg: &SolverConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    let energy = &energy.clone().with_regularization(cfg.regularization);
    let dx = energy.grid().dx();
    let m = energy.components();
    let nodes = energy.grid().interior();
    let threshold = DEGENERATE_FACTOR * cfg.regularization;

    let mut u = initial.to_vec();
    let (mut value, mut scale) = energy.evaluate_with_scale(&u)?;
    if !value.is_finite() {
        return Err(Error::NonFiniteEnergy { step: None });
    }
    let start = value;
    if let Some(t) = trace.as_deref_mut() {
        t.push(value);
    }
    let mut grad = energy.gradient(&u)?;
    let mut report = SolveReport::default();
    let mut trial = vec![0.0; u.len()];
    let mut pinned = vec![false; nodes];
    // set when the last step was a poor Newton step; triggers a full sweep
    let mut sweep = false;

    loop {
        report.grad_norm = inf_norm(&grad) / dx;
        report.energy_decrease = start - value;
        if report.grad_norm <= cfg.grad_tol {
            report.converged = true;
            return Ok((u, report));
        }
        if report.iterations == cfg.max_iters {
            return Err(Error::NonConvergence { step: None, report });
        }
        report.iterations += 1;

        // Exact single-node minimization (never raises F) for nodes near the
        // origin, or for every node after a poor step; nodes left near the
        // origin are held fixed for the Newton step.
        let mut relaxed = false;
        for j in 0..nodes {
            pinned[j] = false;
            let near_origin = norm(&u[j * m..(j + 1) * m]) < threshold;
            if (sweep || near_origin) && energy.relax_node(&mut u, j) {
                relaxed = true;
                pinned[j] = norm(&u[j * m..(j + 1) * m]) < threshold;
            }
        }
        if relaxed {
            (value, scale) = energy.evaluate_with_scale(&u)?;
            energy.gradient_into(&u, &mut grad);
        }
        let mut free_grad = grad.clone();
        for (j, p) in pinned.iter().enumerate() {
            if *p {
                free_grad[j * m..(j + 1) * m].fill(0.0);
            }
        }

        if free_grad.iter().any(|g| *g != 0.0) {
            let mut hessian = energy.hessian_banded(&u);
            for (j, p) in pinned.iter().enumerate() {
                if *p {
                    (j * m..(j + 1) * m).for_each(|i| hessian.pin(i));
                }
            }
            let diag: Vec<f64> = (0..u.len()).map(|i| hessian.get(i, i)).collect();
            let newton = hessian
                .cholesky()
                .ok()
                .map(|chol| chol.solve(&free_grad).into_iter().map(|v| -v).collect::<Vec<f64>>())
                .filter(|d| d.iter().all(|v| v.is_finite()) && dot(&free_grad, d) < 0.0);
            let scaled = || -> Vec<f64> {
                free_grad
                    .iter()
                    .zip(&diag)
                    .map(|(g, h)| if *h > 0.0 { -g / h } else { -g })
                    .collect()
            };

            let mut accepted = false;
            for (is_fallback, dir) in newton
                .map(|d| (false, d))
                .into_iter()
                .chain(std::iter::once_with(|| (true, scaled())))
            {
                report.fallback_used |= is_fallback;
                let slope = dot(&free_grad, &dir);
                // F is evaluated to about eps·scale; below that a decrease is noise
                let slack = 32.0 * f64::EPSILON * scale;
                let mut alpha = 1.0;
                let mut damped = false;
                for _ in 0..MAX_BACKTRACKS {
                    for ((t, x), d) in trial.iter_mut().zip(&u).zip(&dir) {
                        *t = x + alpha * d;
                    }
                    if let Ok((v, s)) = energy.evaluate_with_scale(&trial) {
                        if v.is_finite()
                            && v <= value + cfg.sufficient_decrease * alpha * slope + slack
                        {
                            // a node crossing the origin means Newton overshot
                            let crossed = u
                                .chunks(m)
                                .zip(trial.chunks(m))
                                .any(|(a, b)| crate::isotherm::dot(a, b) < 0.0);
                            std::mem::swap(&mut u, &mut trial);
                            value = v;
                            scale = s;
                            accepted = true;
                            sweep = damped || crossed;
                            break;
                        }
                    }
                    alpha *= cfg.shrink;
                    damped = true;
                }
                if accepted {
                    break;
                }
            }
            if !accepted && !relaxed {
                report.energy_decrease = start - value;
                return Err(Error::NonConvergence { step: None, report });
            }
            let before = inf_norm(&grad);
            energy.gradient_into(&u, &mut grad);
            sweep |= !accepted || inf_norm(&grad) > 0.5 * before;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(value);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::StateField;
    use crate::isotherm::{Freundlich, Isotherm, PorousMedium};
    use crate::mesh::Grid1D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn interior_bump(grid: &Grid1D, m: usize) -> StateField {
        StateField::sample(*grid, m, |x, out| {
            for (k, o) in out.iter_mut().enumerate() {
                let c = -0.3 + 0.6 * k as f64;
                *o = (1.0 - ((x - c) / 0.4).powi(2)).max(0.0);
            }
        })
        .unwrap()
    }

    #[test]
    fn zero_data_converges_immediately() {
        let iso = Freundlich::new(1.0 / 3.0, 2).unwrap();
        let grid = Grid1D::new(-1.0, 1.0, 9).unwrap();
        let f = DiscreteEnergy::assemble(&iso, &StateField::zeros(grid, 2), 0.1, None).unwrap();
        let (u, r) = minimize(&f, &[0.0; 18], &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.converged && u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn converges_and_descends_monotonically() {
        let iso = Freundlich::new(1.0 / 3.0, 2).unwrap();
        let grid = Grid1D::new(-1.0, 1.0, 39).unwrap();
        let prev = interior_bump(&grid, 2);
        let f = DiscreteEnergy::assemble(&iso, &prev, 0.01, None).unwrap();
        let cfg = SolverConfig::default();
        let (u, r, trace) = minimize_traced(&f, prev.interior(), &cfg).unwrap();
        assert!(r.converged && r.grad_norm <= cfg.grad_tol);
        assert!(r.energy_decrease >= 0.0);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-13 * w[0].abs().max(1.0), "{w:?}");
        }
        let g = f.gradient(&u).unwrap();
        assert!(inf_norm(&g) / grid.dx() <= cfg.grad_tol);
        assert!(f.euler_lagrange_residual(&u).unwrap() <= cfg.grad_tol / f.dt() * 1.0001);
    }

    #[test]
    fn minimizer_is_independent_of_the_warm_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let iso = PorousMedium::new(0.5, 1).unwrap();
        let grid = Grid1D::new(-1.0, 1.0, 15).unwrap();
        let prev = interior_bump(&grid, 1);
        let f = DiscreteEnergy::assemble(&iso, &prev, 0.02, None).unwrap();
        let cfg = SolverConfig::default();
        let (reference, _) = minimize(&f, &[0.0; 15], &cfg).unwrap();
        let b_prev: Vec<f64> = f.b_prev()[1..16].to_vec();
        let mut starts = vec![b_prev];
        for _ in 0..5 {
            starts.push((0..15).map(|_| rng.random_range(-1.0..2.0)).collect());
        }
        for s in starts {
            let (u, _) = minimize(&f, &s, &cfg).unwrap();
            for (a, b) in u.iter().zip(&reference) {
                assert!((a - b).abs() <= 10.0 * cfg.grad_tol, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn parabolic_mesh_scaling_leaves_the_minimizer_unchanged() {
        // Δx → sΔx, Δt → s²Δt keeps Δt/Δx² and multiplies F by s
        let iso = Freundlich::new(0.5, 1).unwrap();
        let cfg = SolverConfig::default();
        let solve = |scale: f64| {
            let grid = Grid1D::new(0.0, scale, 9).unwrap();
            let bp: Vec<f64> = (0..11).map(|i| if i == 0 || i == 10 { 0.0 } else { 1.0 + 0.1 * i as f64 }).collect();
            let f = DiscreteEnergy::from_parts(&iso, grid, 0.01 * scale * scale, bp, None).unwrap();
            let (u, _) = minimize(&f, &[0.0; 9], &cfg).unwrap();
            (u, f.evaluate(&[0.3; 9]).unwrap())
        };
        let (u1, e1) = solve(1.0);
        let (u3, e3) = solve(3.0);
        assert!((e3 - 3.0 * e1).abs() < 1e-12 * e1.abs().max(1.0));
        for (a, b) in u1.iter().zip(&u3) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let iso = Freundlich::new(1.0 / 3.0, 2).unwrap();
        let grid = Grid1D::new(-1.0, 1.0, 19).unwrap();
        let prev = interior_bump(&grid, 2);
        let f = DiscreteEnergy::assemble(&iso, &prev, 0.1, None).unwrap();
        let cfg = SolverConfig {
            max_iters: 1,
            ..SolverConfig::default()
        };
        match minimize(&f, &[0.0; 38], &cfg) {
            Err(Error::NonConvergence { report, .. }) => {
                assert_eq!(report.iterations, 1);
                assert!(!report.converged);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config() {
        for cfg in [
            SolverConfig { grad_tol: 0.0, ..Default::default() },
            SolverConfig { shrink: 1.0, ..Default::default() },
            SolverConfig { sufficient_decrease: 0.0, ..Default::default() },
            SolverConfig { max_iters: 0, ..Default::default() },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn constant_source_shift_enters_the_gradient_linearly() {
        let iso = Freundlich::new(1.0 / 3.0, 1).unwrap();
        let grid = Grid1D::new(-1.0, 1.0, 9).unwrap();
        let prev = interior_bump(&grid, 1);
        let f0 = DiscreteEnergy::assemble(&iso, &prev, 0.05, None).unwrap();
        let (u, _) = minimize(&f0, prev.interior(), &SolverConfig::default()).unwrap();
        let c = 0.7;
        let src: Vec<f64> = (0..11).map(|i| if i == 0 || i == 10 { 0.0 } else { c }).collect();
        let f1 = DiscreteEnergy::assemble(&iso, &prev, 0.05, Some(&src)).unwrap();
        let g = f1.gradient(&u).unwrap();
        let tol = SolverConfig::default().grad_tol * grid.dx();
        for gi in g {
            assert!((gi + c * 0.05 * grid.dx()).abs() <= tol);
        }
        assert_eq!(iso.components(), 1);
    }
}
