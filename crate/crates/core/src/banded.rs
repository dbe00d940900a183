//! Symmetric positive definite banded matrices and their Cholesky solve.
//!
//! Only the lower band is stored: `A(i, i − d)` for `d = 0..=half_bandwidth`.

#[derive(Debug, Clone, PartialEq)]
pub struct BandedSpd {
    n: usize,
    w: usize,
    data: Vec<f64>,
}

/// The matrix was not numerically positive definite at the given row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    pub row: usize,
}

impl BandedSpd {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        Self {
            n,
            w: half_bandwidth,
            data: vec![0.0; n * (half_bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.w
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.w && i < self.n);
        i * (self.w + 1) + (i - j)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.w {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to the symmetric pair `(i, j)`, `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.w, "entry ({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Replaces row and column `i` by the identity row/column.
    pub fn pin(&mut self, i: usize) {
        for j in i.saturating_sub(self.w)..i {
            let k = self.idx(i, j);
            self.data[k] = 0.0;
        }
        for j in i + 1..(i + self.w + 1).min(self.n) {
            let k = self.idx(j, i);
            self.data[k] = 0.0;
        }
        let k = self.idx(i, i);
        self.data[k] = 1.0;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.w)..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place band Cholesky `A = L Lᵀ`.
    pub fn cholesky(mut self) -> Result<BandCholesky, NotPositiveDefinite> {
        let w = self.w;
        for i in 0..self.n {
            for j in i.saturating_sub(w)..=i {
                let lo = i.saturating_sub(w).max(j.saturating_sub(w));
                let mut s = self.data[self.idx(i, j)];
                for k in lo..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                let k = self.idx(i, j);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(NotPositiveDefinite { row: i });
                    }
                    self.data[k] = s.sqrt();
                } else {
                    self.data[k] = s / self.data[self.idx(j, j)];
                }
            }
        }
        Ok(BandCholesky { factor: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    factor: BandedSpd,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.factor;
        let (n, w) = (l.n, l.w);
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(w)..i {
                s -= l.data[l.idx(i, k)] * y[k];
            }
            y[i] = s / l.data[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + w + 1).min(n) {
                s -= l.data[l.idx(k, i)] * y[k];
            }
            y[i] = s / l.data[l.idx(i, i)];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_spd(n: usize, w: usize, seed: &[f64]) -> BandedSpd {
        let mut a = BandedSpd::zeros(n, w);
        let mut s = seed.iter().cycle();
        for i in 0..n {
            for j in i.saturating_sub(w)..i {
                a.add(i, j, *s.next().unwrap() - 0.5);
            }
        }
        for i in 0..n {
            // diagonal dominance
            a.add(i, i, 2.0 * w as f64 + 1.0);
        }
        a
    }

    #[test]
    fn tridiagonal_laplacian() {
        let n = 5;
        let mut a = BandedSpd::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
        let b = a.mul_vec(&x_true);
        let x = a.cholesky().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = BandedSpd::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert_eq!(a.cholesky().unwrap_err(), NotPositiveDefinite { row: 1 });
    }

    proptest! {
        #[test]
        fn solve_inverts_mul(
            n in 1usize..20,
            w in 0usize..4,
            seed in proptest::collection::vec(0.0f64..1.0, 8),
            x in proptest::collection::vec(-10.0f64..10.0, 20),
        ) {
            let a = random_spd(n, w, &seed);
            let b = a.mul_vec(&x[..n]);
            let sol = a.clone().cholesky().unwrap().solve(&b);
            for (u, v) in sol.iter().zip(&x[..n]) {
                prop_assert!((u - v).abs() < 1e-10 * (1.0 + v.abs()));
            }
        }
    }
}
