//! Uniform space/time partitions and the nodal trapezoidal rule.

use crate::error::{Error, Result};

/// Uniform grid on `[a, b]` with `interior` unknown nodes and two boundary
/// nodes: `x_i = a + i·dx`, `i = 0..=interior+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    a: f64,
    b: f64,
    interior: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, interior: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!("grid needs finite a < b, got [{a}, {b}]")));
        }
        if interior < 1 {
            return Err(Error::Config("grid needs at least one interior node".into()));
        }
        Ok(Self {
            a,
            b,
            interior,
            dx: (b - a) / (interior + 1) as f64,
        })
    }

    /// Grid whose spacing is `dx`; `(b − a)/dx` must be an integer (to 1e−9).
    pub fn with_spacing(a: f64, b: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::Config(format!("spacing dx = {dx} must be positive")));
        }
        let cells = (b - a) / dx;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * rounded.max(1.0) || rounded < 2.0 {
            return Err(Error::Config(format!(
                "dx = {dx} does not divide [{a}, {b}] into at least two cells"
            )));
        }
        Self::new(a, b, rounded as usize - 1)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn interior(&self) -> usize {
        self.interior
    }

    /// Total node count including both boundary nodes.
    pub fn nodes(&self) -> usize {
        self.interior + 2
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.interior + 1 {
            self.b
        } else {
            self.a + i as f64 * self.dx
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.nodes()).map(|i| self.x(i)).collect()
    }

    /// The grid with `2I + 1` interior nodes (spacing halved).
    pub fn refined(&self) -> Self {
        Self::new(self.a, self.b, 2 * self.interior + 1).expect("refinement of a valid grid")
    }

    /// `Σ_{i=0}^{I} (g_i + g_{i+1})/2 · dx` over all `I + 2` nodal values.
    pub fn trapezoid(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nodes() {
            return Err(Error::Input(format!(
                "quadrature expects {} nodal values, got {}",
                self.nodes(),
                values.len()
            )));
        }
        Ok(self.trapezoid_with(|i| values[i]))
    }

    pub(crate) fn trapezoid_with(&self, g: impl Fn(usize) -> f64) -> f64 {
        let n = self.nodes();
        let inner: f64 = (1..n - 1).map(&g).sum();
        (inner + 0.5 * (g(0) + g(n - 1))) * self.dx
    }
}

/// Uniform time partition `t^n = n·dt`, `n = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePartition {
    final_time: f64,
    steps: usize,
    dt: f64,
}

impl TimePartition {
    pub fn new(final_time: f64, steps: usize) -> Result<Self> {
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::Config(format!("final time T = {final_time} must be positive")));
        }
        if steps < 1 {
            return Err(Error::Config("time partition needs at least one step".into()));
        }
        Ok(Self {
            final_time,
            steps,
            dt: final_time / steps as f64,
        })
    }

    /// Partition with step `dt`; `T/dt` must be an integer (to 1e−9).
    pub fn with_step(final_time: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step dt = {dt} must be positive")));
        }
        let n = final_time / dt;
        let rounded = n.round();
        if (n - rounded).abs() > 1e-9 * rounded.max(1.0) || rounded < 1.0 {
            return Err(Error::Config(format!(
                "dt = {dt} does not divide T = {final_time} into whole steps"
            )));
        }
        Self::new(final_time, rounded as usize)
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t(&self, n: usize) -> f64 {
        if n == self.steps {
            self.final_time
        } else {
            n as f64 * self.dt
        }
    }

    /// Index of the level representing time `t` under the right-continuous
    /// piecewise-constant convention: `U^n` on `((n−1)dt, n·dt]`, `U^0` at 0.
    pub fn level_at(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t <= self.final_time) {
            return Err(Error::Range {
                value: t,
                range: format!("[0, {}]", self.final_time),
            });
        }
        let n = (t / self.dt).ceil() as usize;
        // t may sit one rounding error above a level boundary
        let n = if n > 0 && (self.t(n - 1) - t).abs() <= 4.0 * f64::EPSILON * t.max(1.0) {
            n - 1
        } else {
            n
        };
        Ok(n.min(self.steps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_spacing_and_nodes() {
        let g = Grid1D::new(-2.0, 2.0, 399).unwrap();
        assert_relative_eq!(g.dx(), 0.01, max_relative = 1e-15);
        assert_eq!(g.x(400), 2.0);

        let g = Grid1D::new(0.0, 1.0, 1).unwrap();
        assert_eq!(g.coordinates(), vec![0.0, 0.5, 1.0]);

        let g = Grid1D::new(0.0, 1.0, 9).unwrap();
        assert_relative_eq!(g.dx(), 0.1, max_relative = 1e-15);
        assert_relative_eq!(g.x(3), 0.3, max_relative = 1e-15);
    }

    #[test]
    fn invalid_grids() {
        assert!(matches!(Grid1D::new(1.0, 1.0, 3), Err(Error::Config(_))));
        assert!(matches!(Grid1D::new(2.0, 1.0, 3), Err(Error::Config(_))));
        assert!(matches!(Grid1D::new(0.0, 1.0, 0), Err(Error::Config(_))));
        assert!(Grid1D::with_spacing(0.0, 1.0, 0.3).is_err());
        assert_eq!(Grid1D::with_spacing(-2.0, 2.0, 0.04).unwrap().interior(), 99);
    }

    #[test]
    fn refinement_halves_spacing() {
        let g = Grid1D::new(-1.0, 3.0, 7).unwrap();
        let r = g.refined();
        assert_eq!(r.interior(), 15);
        assert_eq!(r.dx(), g.dx() / 2.0);
    }

    #[test]
    fn trapezoid_rule() {
        for n in [1, 4, 17] {
            let g = Grid1D::new(0.0, 1.0, n).unwrap();
            assert_relative_eq!(g.trapezoid(&vec![1.0; n + 2]).unwrap(), 1.0, max_relative = 1e-14);
            let lin: Vec<f64> = g.coordinates();
            assert_relative_eq!(g.trapezoid(&lin).unwrap(), 0.5, max_relative = 1e-14);
        }
        let g = Grid1D::new(0.0, 1.0, 9).unwrap();
        let sq: Vec<f64> = g.coordinates().iter().map(|x| x * x).collect();
        assert_relative_eq!(g.trapezoid(&sq).unwrap(), 0.335, max_relative = 1e-14);
        assert!(matches!(g.trapezoid(&[1.0; 3]), Err(Error::Input(_))));
    }

    #[test]
    fn time_levels() {
        let tp = TimePartition::new(0.5, 50).unwrap();
        assert_eq!(tp.t(50), 0.5);
        assert_eq!(tp.level_at(0.0).unwrap(), 0);
        assert_eq!(tp.level_at(tp.dt() / 2.0).unwrap(), 1);
        assert_eq!(tp.level_at(tp.dt()).unwrap(), 1);
        assert_eq!(tp.level_at(0.05).unwrap(), 5);
        assert_eq!(tp.level_at(0.5).unwrap(), 50);
        assert!(matches!(tp.level_at(0.6), Err(Error::Range { .. })));
        assert!(tp.level_at(-1e-3).is_err());
        assert!(TimePartition::with_step(0.5, 0.08).is_err());
        assert_eq!(TimePartition::with_step(0.5, 0.02).unwrap().steps(), 25);
    }
}
