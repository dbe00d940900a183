//! Zel'dovich–Kompaneets–Barenblatt (ZKB) self-similar solutions of the
//! porous medium equation `∂t z = Δ(|z|^{m−1} z)`,
//!
//! ```text
//! Z(t, x) = (t + t0)^{−α} · (C − k|x − x0|² (t + t0)^{−2β})_+^{1/(m−1)}
//! α = d / (d(m−1) + 2),   β = α / d,   k = α(m−1) / (2md)
//! ```
//!
//! and their pullback `u = Z^m` to the pure power-law isotherm
//! `b(u) = |u|^{p−1} u` with `p = 1/m`, used as the exact reference for error
//! studies. The mass `∫ Z dx` is constant in time and the support is the ball
//! of radius `sqrt(C/k)·(t + t0)^β`.

use crate::error::{Error, Result};
use crate::mesh::Grid1D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZkbProfile {
    c: f64,
    t0: f64,
    x0: f64,
    m: f64,
    d: usize,
    alpha: f64,
    beta: f64,
    k: f64,
}

impl ZkbProfile {
    /// One-dimensional profile centred at `x0`.
    pub fn new(c: f64, t0: f64, x0: f64, m: f64) -> Result<Self> {
        Self::with_dimension(c, t0, x0, m, 1)
    }

    /// Profile in `d` space dimensions; only the radial distance `|x − x0|`
    /// enters, see [`ZkbProfile::z_at_distance`].
    pub fn with_dimension(c: f64, t0: f64, x0: f64, m: f64, d: usize) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::Config(format!("PME exponent m = {m} must exceed 1")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("ZKB mass parameter C = {c} must be positive")));
        }
        if !(t0.is_finite() && x0.is_finite()) || d == 0 {
            return Err(Error::Config("ZKB shift parameters must be finite, d ≥ 1".into()));
        }
        let df = d as f64;
        let alpha = df / (df * (m - 1.0) + 2.0);
        let beta = alpha / df;
        let k = alpha * (m - 1.0) / (2.0 * m * df);
        Ok(Self {
            c,
            t0,
            x0,
            m,
            d,
            alpha,
            beta,
            k,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    fn shifted(&self, t: f64) -> Result<f64> {
        let s = t + self.t0;
        if !(s > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!(
                "ZKB profile undefined at t = {t} (needs t > −t0 = {})",
                -self.t0
            )));
        }
        Ok(s)
    }

    /// `Z` at radial distance `dist = |x − x0|`.
    pub fn z_at_distance(&self, t: f64, dist: f64) -> Result<f64> {
        let s = self.shifted(t)?;
        let inner = self.c - self.k * dist * dist * s.powf(-2.0 * self.beta);
        Ok(if inner > 0.0 {
            s.powf(-self.alpha) * inner.powf(1.0 / (self.m - 1.0))
        } else {
            0.0
        })
    }

    /// `Z(t, x)` in one space dimension.
    pub fn z(&self, t: f64, x: f64) -> Result<f64> {
        self.z_at_distance(t, (x - self.x0).abs())
    }

    /// Pullback `u = Z^m`, so that `b(u) = u^{1/m} = Z`.
    pub fn u(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.z(t, x)?.powf(self.m))
    }

    pub fn support_radius(&self, t: f64) -> Result<f64> {
        let s = self.shifted(t)?;
        Ok((self.c / self.k).sqrt() * s.powf(self.beta))
    }

    /// Rejects parameters whose support reaches the boundary of `[a, b]`
    /// before `final_time`, or that are singular at `t = 0`.
    pub fn validate_containment(&self, a: f64, b: f64, final_time: f64) -> Result<()> {
        if !(self.t0 > 0.0) {
            return Err(Error::Config(format!(
                "ZKB initial data needs t0 > 0, got {}",
                self.t0
            )));
        }
        let radius = self.support_radius(final_time)?;
        let room = (self.x0 - a).min(b - self.x0);
        if !(radius < room) {
            return Err(Error::Config(format!(
                "ZKB support radius {radius:.6} at T = {final_time} does not fit inside \
                 [{a}, {b}] around x0 = {} (room {room:.6})",
                self.x0
            )));
        }
        Ok(())
    }

    /// Trapezoidal mass `∫ Z(t, ·) dx` on a grid.
    pub fn mass_on(&self, grid: &Grid1D, t: f64) -> Result<f64> {
        let z: Vec<f64> = (0..grid.nodes())
            .map(|i| self.z(t, grid.x(i)))
            .collect::<Result<_>>()?;
        grid.trapezoid(&z)
    }

    /// 1D mass `C^{q + 1/2} k^{−1/2} ∫_{−1}^{1}(1 − s²)^q ds`, `q = 1/(m−1)`,
    /// independent of time.
    pub fn exact_mass_1d(&self) -> f64 {
        let q = 1.0 / (self.m - 1.0);
        // s = sin θ turns the integrand into cos^{2q+1} θ, smooth on [−π/2, π/2]
        let n = 4000;
        let h = std::f64::consts::PI / n as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let theta = -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * h;
                theta.cos().powf(2.0 * q + 1.0)
            })
            .sum::<f64>()
            * h;
        self.c.powf(q + 0.5) / self.k.sqrt() * integral
    }
}
