//! The per-step convex functional minimized by every implicit time step.
//!
//! With interior unknowns `U_1..U_I ∈ ℝ^m`, zero Dirichlet ghosts
//! `U_0 = U_{I+1} = 0`, previous capacity values `b^n_i = b(U^n_i)` and nodal
//! sources `f_i`, the functional is
//!
//! ```text
//! F(U) = Σ_i φ(U_i)Δx − Σ_i b^n_i·U_i Δx − Σ_i f_i·U_i ΔxΔt
//!        + Δt/2 Σ_{i=0}^{I} |(U_{i+1} − U_i)/Δx|² Δx
//! ```
//!
//! i.e. trapezoidal quadrature of `∫ φ(u) − b(u^n)·u − Δt f·u + Δt/2 |∇u|²`.
//! Its stationarity condition is the implicit Euler step
//! `(b(U_i) − b^n_i)/Δt − (U_{i+1} − 2U_i + U_{i−1})/Δx² = f_i`.
//!
//! # Regularized Hessian
//!
//! `D_u b` is unbounded at the origin. For Newton directions the Jacobian at a
//! node with `|U_i| < ε_reg` is evaluated at the radially shifted point
//! `ε_reg·U_i/|U_i|` (or `ε_reg·e₁` when `U_i = 0`). The value and gradient are
//! always exact, so only the Newton path changes, never the minimizer.

use crate::banded::BandedSpd;
use crate::error::{Error, Result};
use crate::isotherm::{ensure_finite, norm, Isotherm};
use crate::mesh::Grid1D;

pub const DEFAULT_REGULARIZATION: f64 = 1e-8;

/// Nodal values at one time level, boundary nodes included, node-major:
/// component `k` of node `i` is `values[i·m + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    grid: Grid1D,
    m: usize,
    values: Vec<f64>,
}

impl StateField {
    pub fn zeros(grid: Grid1D, m: usize) -> Self {
        Self {
            grid,
            m,
            values: vec![0.0; grid.nodes() * m],
        }
    }

    /// Field from all `I + 2` nodal rows; boundary rows must be exactly zero.
    pub fn from_nodal(grid: Grid1D, m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || values.len() != grid.nodes() * m {
            return Err(Error::Input(format!(
                "expected {} nodal values ({} nodes × {m}), got {}",
                grid.nodes() * m,
                grid.nodes(),
                values.len()
            )));
        }
        ensure_finite(&values)?;
        let last = grid.nodes() - 1;
        for i in [0, last] {
            if values[i * m..(i + 1) * m].iter().any(|v| *v != 0.0) {
                return Err(Error::Config(format!(
                    "homogeneous Dirichlet data violated at boundary node x = {}",
                    grid.x(i)
                )));
            }
        }
        Ok(Self { grid, m, values })
    }

    /// Field with the given interior unknowns (`I·m` values) and zero boundary.
    pub fn from_interior(grid: Grid1D, m: usize, interior: &[f64]) -> Self {
        assert_eq!(interior.len(), grid.interior() * m);
        let mut values = vec![0.0; grid.nodes() * m];
        values[m..m + interior.len()].copy_from_slice(interior);
        Self { grid, m, values }
    }

    /// Samples `g(x, out)` at every node; boundary samples must vanish.
    pub fn sample(grid: Grid1D, m: usize, g: impl Fn(f64, &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; grid.nodes() * m];
        for (i, row) in values.chunks_mut(m).enumerate() {
            g(grid.x(i), row);
        }
        Self::from_nodal(grid, m, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[self.m..self.values.len() - self.m]
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().skip(k).step_by(self.m).copied().collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// The functional `F` for one step, frozen once assembled.
#[derive(Debug, Clone)]
pub struct DiscreteEnergy<'a> {
    isotherm: &'a dyn Isotherm,
    grid: Grid1D,
    dt: f64,
    b_prev: Vec<f64>,
    source: Vec<f64>,
    regularization: f64,
}

impl<'a> DiscreteEnergy<'a> {
    /// Assembles `F` from the previous level `U^n` and the nodal source at `t^{n+1}`.
    pub fn assemble(
        isotherm: &'a dyn Isotherm,
        previous: &StateField,
        dt: f64,
        source: Option<&[f64]>,
    ) -> Result<Self> {
        let m = isotherm.components();
        if previous.components() != m {
            return Err(Error::Input(format!(
                "state has {} components, isotherm {m}",
                previous.components()
            )));
        }
        let mut b_prev = vec![0.0; previous.values().len()];
        for (u, b) in previous.values().chunks(m).zip(b_prev.chunks_mut(m)) {
            isotherm.b_into(u, b);
        }
        Self::from_parts(isotherm, *previous.grid(), dt, b_prev, source.map(<[f64]>::to_vec))
    }

    /// Assembles `F` directly from nodal `b^n` values (`(I + 2)·m`, boundary rows zero).
    pub fn from_parts(
        isotherm: &'a dyn Isotherm,
        grid: Grid1D,
        dt: f64,
        b_prev: Vec<f64>,
        source: Option<Vec<f64>>,
    ) -> Result<Self> {
        let m = isotherm.components();
        let len = grid.nodes() * m;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step dt = {dt} must be positive")));
        }
        if b_prev.len() != len {
            return Err(Error::Input(format!("b_prev needs {len} values, got {}", b_prev.len())));
        }
        ensure_finite(&b_prev)?;
        let source = match source {
            Some(s) if s.len() != len => {
                return Err(Error::Input(format!("source needs {len} values, got {}", s.len())))
            }
            Some(s) => {
                ensure_finite(&s)?;
                s
            }
            None => vec![0.0; len],
        };
        Ok(Self {
            isotherm,
            grid,
            dt,
            b_prev,
            source,
            regularization: DEFAULT_REGULARIZATION,
        })
    }

    pub fn with_regularization(mut self, eps: f64) -> Self {
        assert!(eps > 0.0, "regularization radius must be positive");
        self.regularization = eps;
        self
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn components(&self) -> usize {
        self.isotherm.components()
    }

    pub fn isotherm(&self) -> &'a dyn Isotherm {
        self.isotherm
    }

    /// Number of unknowns `I·m`.
    pub fn dim(&self) -> usize {
        self.grid.interior() * self.components()
    }

    pub fn b_prev(&self) -> &[f64] {
        &self.b_prev
    }

    /// Linear coefficient `b^n_i + Δt f_i` of interior node `j` (0-based).
    fn load(&self, j: usize, k: usize) -> f64 {
        let idx = (j + 1) * self.components() + k;
        self.b_prev[idx] + self.dt * self.source[idx]
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::Input(format!(
                "expected {} interior unknowns, got {}",
                self.dim(),
                u.len()
            )));
        }
        ensure_finite(u)
    }

    pub fn evaluate(&self, u: &[f64]) -> Result<f64> {
        self.evaluate_with_scale(u).map(|(v, _)| v)
    }

    /// Value of `F` together with the sum of the magnitudes of its terms,
    /// which bounds the rounding error of the value.
    pub(crate) fn evaluate_with_scale(&self, u: &[f64]) -> Result<(f64, f64)> {
        self.check(u)?;
        let m = self.components();
        let (dx, dt) = (self.grid.dx(), self.dt);
        let mut nodal = 0.0;
        let mut magnitude = 0.0;
        for (j, uj) in u.chunks(m).enumerate() {
            let lin: f64 = (0..m).map(|k| self.load(j, k) * uj[k]).sum();
            let phi = self.isotherm.potential(uj);
            nodal += phi - lin;
            magnitude += phi.abs() + lin.abs();
        }
        let mut dirichlet = 0.0;
        let n = self.grid.interior();
        for c in 0..=n {
            for k in 0..m {
                let right = if c < n { u[c * m + k] } else { 0.0 };
                let left = if c > 0 { u[(c - 1) * m + k] } else { 0.0 };
                dirichlet += (right - left).powi(2);
            }
        }
        let quad = 0.5 * dt / dx * dirichlet;
        Ok((nodal * dx + quad, magnitude * dx + quad))
    }

    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        let mut g = vec![0.0; u.len()];
        self.gradient_into(u, &mut g);
        Ok(g)
    }

    pub(crate) fn gradient_into(&self, u: &[f64], g: &mut [f64]) {
        let m = self.components();
        let n = self.grid.interior();
        let (dx, dt) = (self.grid.dx(), self.dt);
        let stiff = dt / dx;
        for j in 0..n {
            let uj = &u[j * m..(j + 1) * m];
            let gj = &mut g[j * m..(j + 1) * m];
            self.isotherm.b_into(uj, gj);
            for k in 0..m {
                let left = if j > 0 { u[(j - 1) * m + k] } else { 0.0 };
                let right = if j + 1 < n { u[(j + 1) * m + k] } else { 0.0 };
                gj[k] = (gj[k] - self.load(j, k)) * dx + stiff * (2.0 * uj[k] - left - right);
            }
        }
    }

    /// Point at which `D_u b` is evaluated for node value `u`.
    fn regularized_point(&self, u: &[f64], out: &mut [f64]) {
        let r = norm(u);
        let eps = self.regularization;
        if r >= eps {
            out.copy_from_slice(u);
        } else if r > 0.0 {
            for (o, v) in out.iter_mut().zip(u) {
                *o = v * (eps / r);
            }
        } else {
            out.fill(0.0);
            out[0] = eps;
        }
    }

    /// Regularized `Δx · D_u b` blocks, one `m × m` block per interior node.
    fn capacity_blocks(&self, u: &[f64]) -> Vec<f64> {
        let m = self.components();
        let dx = self.grid.dx();
        let mut point = vec![0.0; m];
        let mut blocks = vec![0.0; self.grid.interior() * m * m];
        for (uj, block) in u.chunks(m).zip(blocks.chunks_mut(m * m)) {
            self.regularized_point(uj, &mut point);
            self.isotherm.jacobian_into(&point, block);
            block.iter_mut().for_each(|v| *v *= dx);
        }
        blocks
    }

    /// Regularized Hessian–vector product `H(U)·V`.
    pub fn hessian_apply(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        self.check(v)?;
        let m = self.components();
        let n = self.grid.interior();
        let stiff = self.dt / self.grid.dx();
        let blocks = self.capacity_blocks(u);
        let mut out = vec![0.0; v.len()];
        for j in 0..n {
            let block = &blocks[j * m * m..(j + 1) * m * m];
            for a in 0..m {
                let mut s: f64 = (0..m).map(|c| block[a * m + c] * v[j * m + c]).sum();
                let left = if j > 0 { v[(j - 1) * m + a] } else { 0.0 };
                let right = if j + 1 < n { v[(j + 1) * m + a] } else { 0.0 };
                s += stiff * (2.0 * v[j * m + a] - left - right);
                out[j * m + a] = s;
            }
        }
        Ok(out)
    }

    /// Regularized Hessian in banded storage (half-bandwidth `m`).
    pub fn hessian_banded(&self, u: &[f64]) -> BandedSpd {
        let m = self.components();
        let n = self.grid.interior();
        let stiff = self.dt / self.grid.dx();
        let blocks = self.capacity_blocks(u);
        let mut h = BandedSpd::zeros(n * m, m);
        for j in 0..n {
            let block = &blocks[j * m * m..(j + 1) * m * m];
            for a in 0..m {
                for c in 0..=a {
                    // symmetrize; the exact block is symmetric
                    let v = 0.5 * (block[a * m + c] + block[c * m + a]);
                    h.add(j * m + a, j * m + c, v);
                }
                h.add(j * m + a, j * m + a, 2.0 * stiff);
                if j + 1 < n {
                    h.add((j + 1) * m + a, j * m + a, -stiff);
                }
            }
        }
        h
    }

    /// Replaces interior node `j` by the exact minimizer of `F` over that node
    /// with all other nodes held fixed. Returns `false` (and leaves `u`
    /// untouched) when the isotherm is not radial.
    ///
    /// For radial `b` the node optimum is `r·c/|c|`, where
    /// `c = (b^n_j + Δt f_j)Δx + Δt/Δx (U_{j−1} + U_{j+1})` and `r` solves the
    /// increasing scalar equation `|b(r)|Δx + 2Δt/Δx·r = |c|`, bisected in `ln r`.
    pub(crate) fn relax_node(&self, u: &mut [f64], j: usize) -> bool {
        let profile = |r: f64| self.isotherm.radial_profile(r);
        if profile(1.0).is_none() {
            return false;
        }
        let m = self.components();
        let n = self.grid.interior();
        let dx = self.grid.dx();
        let stiff = self.dt / dx;
        let mut c = vec![0.0; m];
        for (k, ck) in c.iter_mut().enumerate() {
            let left = if j > 0 { u[(j - 1) * m + k] } else { 0.0 };
            let right = if j + 1 < n { u[(j + 1) * m + k] } else { 0.0 };
            *ck = self.load(j, k) * dx + stiff * (left + right);
        }
        let target = norm(&c);
        let node = &mut u[j * m..(j + 1) * m];
        let h = |r: f64| profile(r).unwrap_or(0.0) * dx + 2.0 * stiff * r;
        let mut lo = crate::isotherm::ZERO_NORM;
        if target == 0.0 || h(lo) >= target {
            node.fill(0.0);
            return true;
        }
        let mut hi = target / (2.0 * stiff);
        while hi > lo * (1.0 + 4.0 * f64::EPSILON) {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = if target - h(lo) <= h(hi) - target { lo } else { hi };
        for (x, ck) in node.iter_mut().zip(&c) {
            *x = r * ck / target;
        }
        true
    }

    /// Largest nodal residual of the implicit Euler equation
    /// `(b(U_i) − b^n_i)/Δt − Δ_h U_i − f_i`, computed without the gradient.
    pub fn euler_lagrange_residual(&self, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        let m = self.components();
        let n = self.grid.interior();
        let (dx, dt) = (self.grid.dx(), self.dt);
        let at = |j: isize, k: usize| -> f64 {
            if j < 0 || j as usize >= n {
                0.0
            } else {
                u[j as usize * m + k]
            }
        };
        let mut worst = 0.0_f64;
        for j in 0..n {
            let b = self.isotherm.b(&u[j * m..(j + 1) * m]);
            for k in 0..m {
                let idx = (j + 1) * m + k;
                let ji = j as isize;
                let lap = (at(ji - 1, k) - 2.0 * at(ji, k) + at(ji + 1, k)) / (dx * dx);
                let r = (b[k] - self.b_prev[idx]) / dt - lap - self.source[idx];
                worst = worst.max(r.abs());
            }
        }
        Ok(worst)
    }
}
