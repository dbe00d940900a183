//! Equilibrium sorption isotherms written as gradients of convex potentials.
//!
//! The time-stepping scheme needs the capacity term `b` to be the gradient of a
//! strictly convex potential `φ`, so every isotherm here exposes the triple
//! `(φ, b = ∇φ, B)` where `B(z) = z·b(z) − φ(z)` is the conjugate energy
//! density. Two radial power laws are provided:
//!
//! * [`Freundlich`]: the idealized competitive Freundlich law
//!   `b(u) = u + |u|^{p−1} u`, `φ(u) = ½|u|² + |u|^{p+1}/(p+1)`,
//!   `B(u) = ½|u|² + p/(p+1)·|u|^{p+1}`, with the Euclidean norm of the
//!   whole concentration vector coupling the species.
//! * [`PorousMedium`]: the pure power law `b(u) = |u|^{p−1} u`,
//!   `φ(u) = |u|^{p+1}/(p+1)`, `B(u) = p/(p+1)·|u|^{p+1}`. In one component the
//!   substitution `z = b(u)` maps `∂t b(u) = Δu` onto the porous medium
//!   equation `∂t z = Δ(|z|^{m−1} z)` with `m = 1/p`.
//!
//! Both laws have an unbounded derivative at `u = 0` (the degeneracy that
//! produces finite propagation speed). The exact values exposed here are never
//! regularized; see [`crate::energy`] for how Newton handles the singular
//! Jacobian.
//!
//! Other multicomponent laws common in the sorption literature are *not*
//! usable as solver input because no convex potential is known for them:
//!
//! * Langmuir: `ψ_i(u) = N_i K_i u_i / (1 + Σ_j K_j u_j)`
//! * Sheindorf–Freundlich: `ψ_i(u) = C_i (Σ_j a_ij u_j)^{p_i − 1} u_i`
//!   with `a_ii = 1`.

use std::fmt;

use crate::error::{Error, Result};

/// Norms below this are treated as exactly zero in the power part of `b`.
pub const ZERO_NORM: f64 = 1e-300;

/// A capacity law `b = ∇φ` with strictly convex potential `φ`, `φ(0) = 0`.
pub trait Isotherm: Send + Sync + fmt::Debug {
    /// Number of species `m`.
    fn components(&self) -> usize;

    /// The power-law exponent `p ∈ (0, 1)`.
    fn exponent(&self) -> f64;

    fn potential(&self, u: &[f64]) -> f64;

    /// Writes `b(u)` into `out`.
    fn b_into(&self, u: &[f64], out: &mut [f64]);

    /// Closed form of `B(u) = u·b(u) − φ(u)`.
    fn conjugate_density(&self, u: &[f64]) -> f64;

    /// Writes the `m × m` Jacobian `D_u b(u)` (row-major) into `out`.
    ///
    /// Unbounded as `u → 0`; at `|u| <` [`ZERO_NORM`] the power part is
    /// dropped, which is only meaningful to callers that regularize.
    fn jacobian_into(&self, u: &[f64], out: &mut [f64]);

    /// `|b(r·e)|` for unit `e`, when `b` is radial (`b(u) ∥ u`, magnitude a
    /// function of `|u|` only). Enables exact single-node minimization.
    fn radial_profile(&self, _r: f64) -> Option<f64> {
        None
    }

    fn b(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.b_into(u, &mut out);
        out
    }

    /// `B` through the defining identity instead of the closed form.
    fn conjugate_density_identity(&self, u: &[f64]) -> f64 {
        let b = self.b(u);
        dot(u, &b) - self.potential(u)
    }

    fn try_potential(&self, u: &[f64]) -> Result<f64> {
        self.check_input(u)?;
        Ok(self.potential(u))
    }

    fn try_b(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_input(u)?;
        Ok(self.b(u))
    }

    fn try_conjugate_density(&self, u: &[f64]) -> Result<f64> {
        self.check_input(u)?;
        Ok(self.conjugate_density(u))
    }

    fn check_input(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.components() {
            return Err(Error::Domain(format!(
                "expected {} components, got {}",
                self.components(),
                u.len()
            )));
        }
        ensure_finite(u)
    }
}

pub(crate) fn ensure_finite(u: &[f64]) -> Result<()> {
    match u.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::Domain(format!("non-finite entry {} at index {k}", u[k]))),
        None => Ok(()),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm, scaled so that tiny vectors do not underflow.
pub fn norm(u: &[f64]) -> f64 {
    let scale = u.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * u.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

/// Shared radial power law `b(u) = linear·u + |u|^{p−1} u`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PowerLaw {
    p: f64,
    m: usize,
    linear: f64,
}

impl PowerLaw {
    fn new(p: f64, m: usize, linear: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Config(format!("exponent p = {p} must lie in (0, 1)")));
        }
        if m == 0 {
            return Err(Error::Config("at least one component is required".into()));
        }
        Ok(Self { p, m, linear })
    }

    /// `|u|^{p−1}`, or 0 at the origin.
    fn power_factor(&self, r: f64) -> f64 {
        if r < ZERO_NORM {
            0.0
        } else {
            r.powf(self.p - 1.0)
        }
    }

    fn potential(&self, u: &[f64]) -> f64 {
        let r = norm(u);
        0.5 * self.linear * r * r + r.powf(self.p + 1.0) / (self.p + 1.0)
    }

    fn b_into(&self, u: &[f64], out: &mut [f64]) {
        let c = self.linear + self.power_factor(norm(u));
        for (o, v) in out.iter_mut().zip(u) {
            *o = c * v;
        }
    }

    fn conjugate_density(&self, u: &[f64]) -> f64 {
        let r = norm(u);
        0.5 * self.linear * r * r + self.p / (self.p + 1.0) * r.powf(self.p + 1.0)
    }

    fn radial_profile(&self, r: f64) -> f64 {
        self.linear * r + self.power_factor(r) * r
    }

    fn jacobian_into(&self, u: &[f64], out: &mut [f64]) {
        let m = self.m;
        let r = norm(u);
        let pf = self.power_factor(r);
        let diag = self.linear + pf;
        // r^{p-1} (I + (p-1) û ûᵀ)
        let outer = if pf == 0.0 { 0.0 } else { pf * (self.p - 1.0) / (r * r) };
        for i in 0..m {
            for j in 0..m {
                let id = if i == j { diag } else { 0.0 };
                out[i * m + j] = id + outer * u[i] * u[j];
            }
        }
    }
}

/// Idealized multicomponent Freundlich isotherm `b(u) = u + |u|^{p−1} u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Freundlich {
    law: PowerLaw,
}

impl Freundlich {
    pub fn new(p: f64, components: usize) -> Result<Self> {
        Ok(Self {
            law: PowerLaw::new(p, components, 1.0)?,
        })
    }
}

/// Pure power law `b(u) = |u|^{p−1} u` (porous-medium pullback, `m = 1/p`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PorousMedium {
    law: PowerLaw,
}

impl PorousMedium {
    pub fn new(p: f64, components: usize) -> Result<Self> {
        Ok(Self {
            law: PowerLaw::new(p, components, 0.0)?,
        })
    }

    /// Scalar isotherm matching the porous medium exponent `m > 1`.
    pub fn from_pme_exponent(m: f64) -> Result<Self> {
        if !(m > 1.0) {
            return Err(Error::Config(format!("PME exponent m = {m} must exceed 1")));
        }
        Self::new(1.0 / m, 1)
    }
}

macro_rules! delegate_power_law {
    ($ty:ty) => {
        impl Isotherm for $ty {
            fn components(&self) -> usize {
                self.law.m
            }
            fn exponent(&self) -> f64 {
                self.law.p
            }
            fn potential(&self, u: &[f64]) -> f64 {
                self.law.potential(u)
            }
            fn b_into(&self, u: &[f64], out: &mut [f64]) {
                self.law.b_into(u, out)
            }
            fn conjugate_density(&self, u: &[f64]) -> f64 {
                self.law.conjugate_density(u)
            }
            fn jacobian_into(&self, u: &[f64], out: &mut [f64]) {
                self.law.jacobian_into(u, out)
            }
            fn radial_profile(&self, r: f64) -> Option<f64> {
                Some(self.law.radial_profile(r))
            }
        }
    };
}

delegate_power_law!(Freundlich);
delegate_power_law!(PorousMedium);

/// Runtime choice between the supported isotherms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsothermKind {
    Freundlich(Freundlich),
    PorousMedium(PorousMedium),
}

impl IsothermKind {
    fn inner(&self) -> &dyn Isotherm {
        match self {
            IsothermKind::Freundlich(i) => i,
            IsothermKind::PorousMedium(i) => i,
        }
    }
}

impl Isotherm for IsothermKind {
    fn components(&self) -> usize {
        self.inner().components()
    }
    fn exponent(&self) -> f64 {
        self.inner().exponent()
    }
    fn potential(&self, u: &[f64]) -> f64 {
        self.inner().potential(u)
    }
    fn b_into(&self, u: &[f64], out: &mut [f64]) {
        self.inner().b_into(u, out)
    }
    fn conjugate_density(&self, u: &[f64]) -> f64 {
        self.inner().conjugate_density(u)
    }
    fn jacobian_into(&self, u: &[f64], out: &mut [f64]) {
        self.inner().jacobian_into(u, out)
    }
    fn radial_profile(&self, r: f64) -> Option<f64> {
        self.inner().radial_profile(r)
    }
}

/// Smallest constants satisfying the linear and energy growth bounds
/// `|b(u)| ≤ C₁(|u| + 1)` and `|b(u)|² ≤ C₂(B(u) + 1)` over a sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthReport {
    pub linear: f64,
    pub energy: f64,
    pub samples: usize,
}

pub fn check_growth_conditions<S: Isotherm + ?Sized>(
    isotherm: &S,
    samples: &[Vec<f64>],
) -> Result<GrowthReport> {
    if samples.is_empty() {
        return Err(Error::Input("growth check needs at least one sample".into()));
    }
    let mut linear = 0.0_f64;
    let mut energy = 0.0_f64;
    for u in samples {
        isotherm.check_input(u)?;
        let b = norm(&isotherm.b(u));
        linear = linear.max(b / (norm(u) + 1.0));
        energy = energy.max(b * b / (isotherm.conjugate_density(u) + 1.0));
    }
    Ok(GrowthReport {
        linear,
        energy,
        samples: samples.len(),
    })
}
