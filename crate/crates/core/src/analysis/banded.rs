//! Banded Gaussian elimination with partial pivoting.

use crate::error::{Error, Result};

/// Pivot ratio above which a system is treated as numerically singular.
pub const MAX_PIVOT_RATIO: f64 = 1e13;

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored row-wise
/// with room for the `kl` extra super-diagonals created by row swaps.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    /// Adds `v` to entry `(i, j)`; `j` must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Solves `A x = b` in place, consuming the matrix. Returns the solution
    /// and the ratio of largest to smallest pivot magnitude.
    pub fn solve(mut self, mut b: Vec<f64>) -> Result<(Vec<f64>, f64)> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let reach = self.kl + self.ku;
        let mut pmax: f64 = 0.0;
        let mut pmin = f64::INFINITY;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let (mut piv, mut best) = (k, self.get(k, k).abs());
            for r in (k + 1)..=last_row {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::NumericalFailure {
                    message: format!("zero pivot in column {k} of a {n}×{n} system"),
                    condition_estimate: f64::INFINITY,
                });
            }
            pmax = pmax.max(best);
            pmin = pmin.min(best);
            let last_col = (k + reach).min(n - 1);
            if piv != k {
                for j in k..=last_col {
                    let (a, c) = (self.idx(k, j), self.idx(piv, j));
                    self.data.swap(a, c);
                }
                b.swap(k, piv);
            }
            let diag = self.data[self.idx(k, k)];
            for r in (k + 1)..=last_row {
                let lead = self.get(r, k);
                if lead == 0.0 {
                    continue;
                }
                let f = lead / diag;
                for j in k..=last_col {
                    let src = self.data[self.idx(k, j)];
                    let dst = self.idx(r, j);
                    self.data[dst] -= f * src;
                }
                b[r] -= f * b[k];
            }
        }
        let ratio = pmax / pmin;
        if ratio > MAX_PIVOT_RATIO {
            return Err(Error::NumericalFailure {
                message: format!("ill-conditioned {n}×{n} system"),
                condition_estimate: ratio,
            });
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let last_col = (i + reach).min(n - 1);
            let mut acc = b[i];
            for j in (i + 1)..=last_col {
                acc -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = acc / self.data[self.idx(i, i)];
        }
        Ok((x, ratio))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_mul(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn tridiagonal_poisson() {
        // -u'' = 1 on (0,1), u(0)=u(1)=0, exact for the quadratic solution
        let n = 99;
        let h = 1.0 / (n + 1) as f64;
        let mut a = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            a.add(i, i, 2.0 / (h * h));
            if i > 0 {
                a.add(i, i - 1, -1.0 / (h * h));
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0 / (h * h));
            }
        }
        let (u, _) = a.solve(vec![1.0; n]).unwrap();
        for (i, ui) in u.iter().enumerate() {
            let x = (i + 1) as f64 * h;
            assert!((ui - 0.5 * x * (1.0 - x)).abs() < 1e-12);
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let mut a = BandMatrix::zeros(2, 1, 1);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        let (x, _) = a.solve(vec![2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = BandMatrix::zeros(4, 1, 1);
        assert!(matches!(a.solve(vec![1.0; 4]), Err(Error::NumericalFailure { .. })));
    }

    proptest! {
        #[test]
        fn matches_dense_residual(seed in 0u64..500, kl in 0usize..4, ku in 0usize..4) {
            let n = 12;
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            };
            let mut dense = vec![vec![0.0; n]; n];
            let mut band = BandMatrix::zeros(n, kl, ku);
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    let v = next() + if i == j { 0.1 } else { 0.0 };
                    dense[i][j] = v;
                    band.add(i, j, v);
                }
            }
            let x_true: Vec<f64> = (0..n).map(|_| next()).collect();
            let b = dense_mul(&dense, &x_true);
            if let Ok((x, ratio)) = band.solve(b.clone()) {
                let r = dense_mul(&dense, &x);
                let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (ri, bi) in r.iter().zip(&b) {
                    prop_assert!((ri - bi).abs() < 1e-9 * scale * ratio.max(1.0));
                }
            }
        }
    }
}
