//! Post-processing of trajectories: energies, supports, errors against a
//! reference solution, rate fits and the energy/positivity audits.

use crate::energy::StateField;
use crate::error::{Error, Result};
use crate::isotherm::Isotherm;
use crate::stepper::Trajectory;

/// Hull of the set `{x_i : U_i,k > eps}` plus the maximal runs of nodes inside
/// the hull where the component is `≤ eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub left: f64,
    pub right: f64,
    /// `(first, last)` node coordinates of each internal gap, left to right.
    pub gaps: Vec<(f64, f64)>,
}

impl Support {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn has_gap(&self) -> bool {
        !self.gaps.is_empty()
    }

    /// Whether `other` lies inside `self` after widening `self` by `slack`.
    pub fn contains(&self, other: &Support, slack: f64) -> bool {
        self.left - slack <= other.left && other.right <= self.right + slack
    }
}

/// Per-level observables.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    /// `Σ_i B(U_i) Δx`.
    pub energy: f64,
    /// `Σ_{k≤n} Δt Σ_cells |ΔU/Δx|² Δx`.
    pub dissipation: f64,
    pub min_value: f64,
    /// One entry per component, `None` when the component is below `eps`
    /// everywhere.
    pub supports: Vec<Option<Support>>,
    /// `Σ_i b(U_i) Δx` per component.
    pub mass: Vec<f64>,
}

impl StepDiagnostics {
    pub fn compute(
        step: usize,
        t: f64,
        field: &StateField,
        iso: &dyn Isotherm,
        dissipation: f64,
        support_eps: f64,
    ) -> Self {
        let grid = field.grid();
        let m = field.components();
        let mut energy = 0.0;
        let mut mass = vec![0.0; m];
        let mut b = vec![0.0; m];
        for i in 1..=grid.interior() {
            let u = field.node(i);
            energy += iso.conjugate_density(u);
            iso.b_into(u, &mut b);
            for (acc, v) in mass.iter_mut().zip(&b) {
                *acc += v;
            }
        }
        let dx = grid.dx();
        Self {
            step,
            t,
            energy: energy * dx,
            dissipation,
            min_value: field.min_value(),
            supports: (0..m).map(|k| extract_support(field, k, support_eps)).collect(),
            mass: mass.into_iter().map(|v| v * dx).collect(),
        }
    }
}

/// `Σ_cells |U_{i+1} − U_i|² / Δx`, including the two boundary cells.
pub fn dirichlet_seminorm_sq(field: &StateField) -> f64 {
    let m = field.components();
    let v = field.values();
    let sum: f64 = v
        .windows(2 * m)
        .step_by(m)
        .map(|w| (0..m).map(|k| (w[m + k] - w[k]).powi(2)).sum::<f64>())
        .sum();
    sum / field.grid().dx()
}

/// Support of component `k` at threshold `eps` (callers keep `eps > 0`).
pub fn extract_support(field: &StateField, k: usize, eps: f64) -> Option<Support> {
    let grid = field.grid();
    let m = field.components();
    let above = |i: usize| field.values()[i * m + k] > eps;
    let first = (0..grid.nodes()).find(|&i| above(i))?;
    let last = (0..grid.nodes()).rev().find(|&i| above(i))?;
    let mut gaps = Vec::new();
    let mut i = first;
    while i < last {
        if above(i) {
            i += 1;
            continue;
        }
        let start = i;
        while !above(i) {
            i += 1;
        }
        gaps.push((grid.x(start), grid.x(i - 1)));
    }
    Some(Support {
        left: grid.x(first),
        right: grid.x(last),
        gaps,
    })
}

fn require_complete(traj: &Trajectory) -> Result<()> {
    if traj.is_complete() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "space-time error needs every time level stored".into(),
        ))
    }
}

/// `sqrt(Σ_n Δt ∫ |U^n − exact(t^n, ·)|² dx)` over `n = 1..=N`, trapezoidal in
/// space, with the reference sampled at the right end of each slab.
pub fn l2_qt_error(
    traj: &Trajectory,
    exact: impl Fn(f64, f64, &mut [f64]) -> Result<()>,
) -> Result<f64> {
    require_complete(traj)?;
    let grid = traj.grid();
    let dt = traj.time().dt();
    let m = traj.levels()[0].1.components();
    let mut e = vec![0.0; m];
    let mut total = 0.0;
    for (n, field) in traj.levels().iter().skip(1) {
        let t = traj.time().t(*n);
        let mut sq = vec![0.0; grid.nodes()];
        for (i, s) in sq.iter_mut().enumerate() {
            exact(t, grid.x(i), &mut e)?;
            *s = field.node(i).iter().zip(&e).map(|(u, v)| (u - v).powi(2)).sum();
        }
        total += dt * grid.trapezoid(&sq)?;
    }
    Ok(total.sqrt())
}

/// Same functional with a second trajectory on the same meshes as reference.
pub fn l2_qt_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    require_complete(a)?;
    require_complete(b)?;
    if a.grid() != b.grid() || a.time() != b.time() {
        return Err(Error::Input("trajectories live on different meshes".into()));
    }
    l2_qt_error(a, |t, x, out| {
        let n = b.time().level_at(t)?;
        let i = ((x - b.grid().a()) / b.grid().dx()).round() as usize;
        out.copy_from_slice(b.level(n).expect("complete trajectory").node(i));
        Ok(())
    })
}

/// Least-squares fit `log e = log C + r log Δx`; returns `(r, C)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Input(format!(
            "a rate needs at least two points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|(h, e)| !(*h > 0.0 && *e > 0.0) || !h.is_finite() || !e.is_finite()) {
        return Err(Error::Input(format!("nonpositive or non-finite point {p:?}")));
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(h, e)| (h.ln(), e.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Input("all mesh sizes coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let r = sxy / sxx;
    Ok((r, (my - r * mx).exp()))
}

/// Orders `log(e_i/e_{i+1}) / log(Δx_i/Δx_{i+1})` between consecutive points.
pub fn incremental_orders(points: &[(f64, f64)]) -> Vec<f64> {
    points
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect()
}

/// Outcome of checking `max_n [E(n) + D(n)] ≤ E(0)(1 + 1e−8) + 1e−10`, where
/// `E` is the stored energy and `D` the cumulative dissipation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyAudit {
    pub initial: f64,
    pub max_energy: f64,
    pub total_dissipation: f64,
    /// `max_n [E(n) + D(n)]`.
    pub max_combined: f64,
    pub bound: f64,
    /// `bound − max_combined`; nonnegative iff the estimate holds.
    pub margin: f64,
}

impl EnergyAudit {
    pub const RELATIVE_SLACK: f64 = 1e-8;
    pub const ABSOLUTE_SLACK: f64 = 1e-10;

    pub fn holds(&self) -> bool {
        self.margin >= 0.0
    }
}

pub fn audit_energy_estimate(traj: &Trajectory) -> Result<EnergyAudit> {
    if !traj.source_free() {
        return Err(Error::Unsupported(
            "the energy estimate is only parameter-free without a source".into(),
        ));
    }
    let d = traj.diagnostics();
    let initial = d[0].energy;
    let max_energy = d.iter().map(|s| s.energy).fold(f64::NEG_INFINITY, f64::max);
    let max_combined = d
        .iter()
        .map(|s| s.energy + s.dissipation)
        .fold(f64::NEG_INFINITY, f64::max);
    let bound = initial * (1.0 + EnergyAudit::RELATIVE_SLACK) + EnergyAudit::ABSOLUTE_SLACK;
    Ok(EnergyAudit {
        initial,
        max_energy,
        total_dissipation: d.last().map_or(0.0, |s| s.dissipation),
        max_combined,
        bound,
        margin: bound - max_combined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityAudit {
    pub min_value: f64,
    /// Level at which the minimum occurs.
    pub step: usize,
    pub tolerance: f64,
}

impl PositivityAudit {
    pub fn holds(&self) -> bool {
        self.min_value >= -self.tolerance
    }
}

/// Smallest component value over all levels, compared against `−tolerance`.
pub fn audit_positivity(traj: &Trajectory, tolerance: f64) -> PositivityAudit {
    let (step, min_value) = traj
        .diagnostics()
        .iter()
        .map(|s| (s.step, s.min_value))
        .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
    PositivityAudit {
        min_value,
        step,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::ZkbProfile;
    use crate::isotherm::{Freundlich, PorousMedium};
    use crate::mesh::{Grid1D, TimePartition};
    use crate::minimizer::SolverConfig;
    use crate::stepper::{run, ProblemSpec};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn support_of_zero_and_of_a_block() {
        let grid = Grid1D::new(0.0, 1.0, 29).unwrap();
        assert!(extract_support(&StateField::zeros(grid, 1), 0, 1e-10).is_none());
        let mut v = vec![0.0; 31];
        for x in &mut v[10..=20] {
            *x = 1.0;
        }
        let f = StateField::from_nodal(grid, 1, v).unwrap();
        let s = extract_support(&f, 0, 1e-10).unwrap();
        assert_eq!((s.left, s.right), (grid.x(10), grid.x(20)));
        assert!(!s.has_gap());
    }

    #[test]
    fn gaps_and_eps_monotonicity() {
        let grid = Grid1D::new(0.0, 1.0, 9).unwrap();
        let v = vec![0.0, 1.0, 0.5, 0.0, 0.0, 0.2, 1e-3, 0.0, 1.0, 0.0, 0.0];
        let f = StateField::from_nodal(grid, 1, v).unwrap();
        let s = extract_support(&f, 0, 1e-10).unwrap();
        assert_eq!(s.gaps, vec![(grid.x(3), grid.x(4)), (grid.x(7), grid.x(7))]);
        let coarse = extract_support(&f, 0, 0.3).unwrap();
        assert!(s.contains(&coarse, 0.0));
        assert_eq!(coarse.gaps.len(), 1);
    }

    #[test]
    fn zkb_support_matches_the_radius() {
        let z = ZkbProfile::new(0.1, 1.0, 0.0, 2.0).unwrap();
        let grid = Grid1D::new(-2.0, 2.0, 399).unwrap();
        let f = StateField::sample(grid, 1, |x, u| u[0] = z.u(0.0, x).unwrap()).unwrap();
        let s = extract_support(&f, 0, 1e-10).unwrap();
        let r = z.support_radius(0.0).unwrap();
        assert!((s.right - r).abs() <= grid.dx() && (s.left + r).abs() <= grid.dx());
    }

    #[test]
    fn dirichlet_term_by_hand() {
        let grid = Grid1D::new(0.0, 1.0, 1).unwrap();
        let f = StateField::from_interior(grid, 2, &[1.0, 2.0]);
        // cells: (0→(1,2)) and ((1,2)→0), each |Δ|² = 5, dx = 0.5
        assert_relative_eq!(dirichlet_seminorm_sq(&f), 20.0);
    }

    fn zero_run() -> Trajectory {
        let iso = Arc::new(Freundlich::new(0.5, 1).unwrap());
        let grid = Grid1D::new(0.0, 1.0, 19).unwrap();
        let spec = ProblemSpec::new(iso, TimePartition::new(1.0, 4).unwrap(), StateField::zeros(grid, 1)).unwrap();
        run(&spec, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn l2_error_constant_integrand() {
        let traj = zero_run();
        let e = l2_qt_error(&traj, |_, _, out| {
            out[0] = 1.0;
            Ok(())
        })
        .unwrap();
        assert_relative_eq!(e, 1.0, max_relative = 1e-14);
        let zero = l2_qt_error(&traj, |_, _, out| {
            out[0] = 0.0;
            Ok(())
        })
        .unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn l2_distance_is_symmetric_and_definite() {
        let iso = Arc::new(PorousMedium::from_pme_exponent(2.0).unwrap());
        let grid = Grid1D::new(-1.0, 1.0, 19).unwrap();
        let time = TimePartition::new(0.1, 5).unwrap();
        let mk = |h: f64| {
            let spec = ProblemSpec::from_fn(iso.clone(), grid, time, |x, u| {
                u[0] = h * (1.0 - (x / 0.5).powi(2)).max(0.0)
            })
            .unwrap();
            run(&spec, &SolverConfig::default()).unwrap()
        };
        let (a, b) = (mk(1.0), mk(0.7));
        assert_eq!(l2_qt_distance(&a, &a).unwrap(), 0.0);
        let (ab, ba) = (l2_qt_distance(&a, &b).unwrap(), l2_qt_distance(&b, &a).unwrap());
        assert!(ab > 0.0);
        assert_relative_eq!(ab, ba, max_relative = 1e-14);
    }

    #[test]
    fn thinned_trajectories_are_rejected() {
        let iso = Arc::new(Freundlich::new(0.5, 1).unwrap());
        let grid = Grid1D::new(0.0, 1.0, 9).unwrap();
        let spec = ProblemSpec::new(iso, TimePartition::new(1.0, 4).unwrap(), StateField::zeros(grid, 1))
            .unwrap()
            .store_every(2)
            .unwrap();
        let traj = run(&spec, &SolverConfig::default()).unwrap();
        let err = l2_qt_error(&traj, |_, _, o| {
            o[0] = 0.0;
            Ok(())
        });
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    #[test]
    fn rate_fits() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&h| (h, h)).collect();
        let (r, c) = fit_rate(&pts).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-12);
        assert_relative_eq!(c, 1.0, max_relative = 1e-12);
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&h| (h, 3.0 * h * h)).collect();
        let (r, c) = fit_rate(&pts).unwrap();
        assert_relative_eq!(r, 2.0, max_relative = 1e-12);
        assert_relative_eq!(c, 3.0, max_relative = 1e-10);
        for o in incremental_orders(&pts) {
            assert_relative_eq!(o, 2.0, max_relative = 1e-12);
        }
        assert!(matches!(fit_rate(&pts[..1]), Err(Error::Input(_))));
        assert!(matches!(fit_rate(&[(0.1, 1.0), (0.05, 0.0)]), Err(Error::Input(_))));
    }

    #[test]
    fn audits_on_zero_and_bump_runs() {
        let a = audit_energy_estimate(&zero_run()).unwrap();
        assert_eq!(a.max_combined, 0.0);
        assert!(a.holds());

        let iso = Arc::new(Freundlich::new(1.0 / 3.0, 2).unwrap());
        let grid = Grid1D::new(-1.0, 1.0, 39).unwrap();
        let spec = ProblemSpec::from_fn(iso, grid, TimePartition::new(0.2, 10).unwrap(), |x, u| {
            u[0] = (1.0 - (x / 0.4).powi(2)).max(0.0);
            u[1] = 0.3 * (1.0 - ((x - 0.2) / 0.3).powi(2)).max(0.0);
        })
        .unwrap();
        let traj = run(&spec, &SolverConfig::default()).unwrap();
        let a = audit_energy_estimate(&traj).unwrap();
        assert!(a.holds() && a.margin > 0.0, "{a:?}");
        assert!(a.total_dissipation > 0.0 && a.max_energy == a.initial);
        assert!(audit_positivity(&traj, 1e-9).holds());
    }
}
