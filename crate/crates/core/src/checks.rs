//! Built-in identity checks: isotherm calculus, convexity and growth bounds,
//! consistency of the discrete energy, and exact-solution mass conservation.
//!
//! Every check is deterministic for a given seed. Sample batches go through
//! [`Execution`] so the same results come back in either mode.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::ZkbProfile;
use crate::energy::{DiscreteEnergy, StateField};
use crate::isotherm::{dot, norm, Freundlich, Isotherm, PorousMedium};
use crate::mesh::Grid1D;
use crate::par::Execution;

/// Tolerances used by the suite.
pub mod tol {
    pub const GRADIENT_REL: f64 = 1e-6;
    pub const IDENTITY_REL: f64 = 1e-12;
    pub const MASS_REL: f64 = 1e-6;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity (relative error, violation, ...).
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub seed: u64,
    pub execution: Execution,
    /// Adds `perturbation·u` to every `b` under test. Only for exercising the
    /// failure path.
    #[doc(hidden)]
    pub gradient_perturbation: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            execution: Execution::default(),
            gradient_perturbation: 0.0,
        }
    }
}

/// `b` shifted by `eps·u` while `φ` is left alone.
#[derive(Debug)]
struct Perturbed<'a> {
    inner: &'a dyn Isotherm,
    eps: f64,
}

impl Isotherm for Perturbed<'_> {
    fn components(&self) -> usize {
        self.inner.components()
    }
    fn exponent(&self) -> f64 {
        self.inner.exponent()
    }
    fn potential(&self, u: &[f64]) -> f64 {
        self.inner.potential(u)
    }
    fn b_into(&self, u: &[f64], out: &mut [f64]) {
        self.inner.b_into(u, out);
        for (o, v) in out.iter_mut().zip(u) {
            *o += self.eps * v;
        }
    }
    fn conjugate_density(&self, u: &[f64]) -> f64 {
        self.inner.conjugate_density(u)
    }
    fn jacobian_into(&self, u: &[f64], out: &mut [f64]) {
        self.inner.jacobian_into(u, out)
    }
}

fn test_isotherms() -> Vec<(&'static str, Box<dyn Isotherm>)> {
    vec![
        ("freundlich p=1/3", Box::new(Freundlich::new(1.0 / 3.0, 2).unwrap())),
        ("freundlich p=1/2", Box::new(Freundlich::new(0.5, 2).unwrap())),
        ("power p=1/2", Box::new(PorousMedium::new(0.5, 2).unwrap())),
    ]
}

/// Points in ℝ² with log-uniform radius in `[r_min, r_max]` and uniform angle.
pub fn sample_annulus(rng: &mut impl Rng, count: usize, r_min: f64, r_max: f64) -> Vec<[f64; 2]> {
    (0..count)
        .map(|_| {
            let r = (rng.random_range(r_min.ln()..=r_max.ln())).exp();
            let th = rng.random_range(0.0..2.0 * PI);
            [r * th.cos(), r * th.sin()]
        })
        .collect()
}

fn outcome(name: String, worst: f64, limit: f64, what: &str) -> CheckOutcome {
    CheckOutcome {
        passed: worst <= limit,
        detail: format!("worst {what} {worst:.3e} (limit {limit:.1e})"),
        name,
        worst,
    }
}

fn max_of(values: Vec<f64>) -> f64 {
    values.into_iter().fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

/// Relative error of central differences of `φ` against `b` at `u`.
fn gradient_error(iso: &dyn Isotherm, u: &[f64]) -> f64 {
    let h = 1e-5 * norm(u);
    let b = iso.b(u);
    let mut fd = vec![0.0; u.len()];
    let mut w = u.to_vec();
    for k in 0..u.len() {
        w[k] = u[k] + h;
        let plus = iso.potential(&w);
        w[k] = u[k] - h;
        let minus = iso.potential(&w);
        w[k] = u[k];
        fd[k] = (plus - minus) / (2.0 * h);
    }
    let diff: Vec<f64> = fd.iter().zip(&b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(&b)
}

fn check_isotherm(name: &str, iso: &dyn Isotherm, opts: &CheckOptions) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let ex = opts.execution;
    let points = sample_annulus(&mut rng, 100, 0.01, 10.0);

    let grad = max_of(ex.map(&points, |u| gradient_error(iso, u)));
    let identity = max_of(ex.map(&points, |u| {
        let closed = iso.conjugate_density(u);
        (closed - iso.conjugate_density_identity(u)).abs() / closed.abs()
    }));

    // monotonicity over 1000 pairs, reported as the worst normalized violation
    let pairs: Vec<([f64; 2], [f64; 2])> = (0..1000)
        .map(|_| {
            let p = sample_annulus(&mut rng, 2, 1e-3, 10.0);
            (p[0], p[1])
        })
        .collect();
    let mono = max_of(ex.map(&pairs, |(z, w)| {
        let db: Vec<f64> = iso.b(z).iter().zip(iso.b(w)).map(|(x, y)| x - y).collect();
        let dz = [z[0] - w[0], z[1] - w[1]];
        let scale = norm(&db) * norm(&dz);
        if scale == 0.0 {
            0.0
        } else {
            (-dot(&db, &dz) / scale).max(0.0)
        }
    }));

    // |b(z)| ≤ δB(z) + max_{|w|≤1/δ}|b(w)|, the max by dense sampling of the ball
    let zs = sample_annulus(&mut rng, 400, 1e-3, 1e3);
    let bb = max_of(
        [0.5, 1.0, 2.0]
            .iter()
            .map(|&delta| {
                let ball: Vec<[f64; 2]> = (1..=200)
                    .flat_map(|i| {
                        let r = i as f64 / 200.0 / delta;
                        (0..64).map(move |j| {
                            let th = 2.0 * PI * j as f64 / 64.0;
                            [r * th.cos(), r * th.sin()]
                        })
                    })
                    .collect();
                let cap = max_of(ex.map(&ball, |w| norm(&iso.b(w))));
                max_of(ex.map(&zs, |z| {
                    let lhs = norm(&iso.b(z));
                    let rhs = delta * iso.conjugate_density(z) + cap;
                    ((lhs - rhs) / rhs).max(0.0)
                }))
            })
            .collect(),
    );

    vec![
        outcome(format!("{name}: b = grad phi"), grad, tol::GRADIENT_REL, "relative error"),
        outcome(format!("{name}: B identity"), identity, tol::IDENTITY_REL, "relative error"),
        outcome(format!("{name}: monotonicity"), mono, 1e-14, "normalized violation"),
        outcome(format!("{name}: |b| <= dB + max"), bb, 0.0, "relative violation"),
    ]
}

fn check_energy_gradient(iso: &dyn Isotherm, opts: &CheckOptions) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let m = iso.components();
    let grid = Grid1D::new(-1.0, 1.0, 6).unwrap();
    let prev: Vec<f64> = (0..grid.interior() * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let prev = StateField::from_interior(grid, m, &prev);
    let mut source = vec![0.0; grid.nodes() * m];
    for v in &mut source[m..grid.nodes() * m - m] {
        *v = rng.random_range(-1.0..1.0);
    }
    let energy = DiscreteEnergy::assemble(iso, &prev, 0.05, Some(&source)).unwrap();
    let starts: Vec<Vec<f64>> = (0..20)
        .map(|_| (0..energy.dim()).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let worst = max_of(opts.execution.map(&starts, |u| {
        let g = energy.gradient(u).unwrap();
        let mut fd = vec![0.0; u.len()];
        let mut w = u.clone();
        for k in 0..u.len() {
            let h = 1e-6 * (1.0 + u[k].abs());
            w[k] = u[k] + h;
            let plus = energy.evaluate(&w).unwrap();
            w[k] = u[k] - h;
            let minus = energy.evaluate(&w).unwrap();
            w[k] = u[k];
            fd[k] = (plus - minus) / (2.0 * h);
        }
        let diff: Vec<f64> = fd.iter().zip(&g).map(|(a, b)| a - b).collect();
        norm(&diff) / norm(&g)
    }));
    outcome(
        "discrete energy: gradient vs differences".into(),
        worst,
        tol::GRADIENT_REL,
        "relative error",
    )
}

fn check_zkb_mass(opts: &CheckOptions) -> Vec<CheckOutcome> {
    let cases = [2.0, 3.0];
    opts.execution.map(&cases, |&m| {
        let z = ZkbProfile::new(0.1, 1.0, 0.0, m).unwrap();
        let grid = Grid1D::new(-3.0, 3.0, 40_000 - 1).unwrap();
        let exact = z.exact_mass_1d();
        let worst = [0.0, 0.25, 0.5]
            .iter()
            .map(|&t| (z.mass_on(&grid, t).unwrap() - exact).abs() / exact)
            .fold(0.0, f64::max);
        outcome(format!("zkb m={m}: mass conservation"), worst, tol::MASS_REL, "relative drift")
    })
}

/// Runs the whole suite.
pub fn run_identity_checks(opts: &CheckOptions) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for (name, iso) in test_isotherms() {
        let perturbed = Perturbed {
            inner: &*iso,
            eps: opts.gradient_perturbation,
        };
        let iso: &dyn Isotherm = if opts.gradient_perturbation != 0.0 { &perturbed } else { &*iso };
        out.extend(check_isotherm(name, iso, opts));
        if name.starts_with("freundlich p=1/3") {
            out.push(check_energy_gradient(iso, opts));
        }
    }
    out.extend(check_zkb_mass(opts));
    out
}
