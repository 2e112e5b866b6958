//! Square band matrices and a direct banded LU solver with partial pivoting.

use crate::error::{Error, Result};

/// Largest pivot ratio accepted before a factorization is declared singular.
const MAX_CONDITION: f64 = 1e14;

/// Square matrix with `kl` sub- and `ku` super-diagonals.
///
/// Rows are stored with `kl` extra columns on the right so the LU factors
/// fit in place after row interchanges.
#[derive(Debug, Clone, PartialEq)]
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

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside the band");
        let k = self.slot(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside the band");
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    /// Nonzero pattern positions `(i, j, value)` inside the declared band.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            (lo..=hi).map(move |j| (i, j, self.get(i, j)))
        })
    }

    /// `self += alpha * other`; `other` must fit in this band.
    pub fn add_scaled(&mut self, alpha: f64, other: &BandMatrix) {
        assert_eq!(self.n, other.n);
        for (i, j, v) in other.entries() {
            if v != 0.0 {
                self.add(i, j, alpha * v);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul_vec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// Replaces row `i` by the identity row (Dirichlet constraint).
    pub fn pin_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            self.set(i, j, 0.0);
        }
        self.set(i, i, 1.0);
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.entries()
            .all(|(i, j, v)| (v - self.get(j, i)).abs() <= tol * (1.0 + v.abs()))
    }

    /// In-place LU with partial pivoting.
    pub fn factorize(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.kl + self.ku;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Singular {
                    condition: f64::INFINITY,
                });
            }
            for i in k + 1..=last_row {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                self.data[sik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let ukj = self.data[self.slot(k, j)];
                        let sij = self.slot(i, j);
                        self.data[sij] -= l * ukj;
                    }
                }
            }
        }
        let (lo, hi) = (0..n).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
            let d = self.data[self.slot(i, i)].abs();
            (lo.min(d), hi.max(d))
        });
        let condition = hi / lo;
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::Singular { condition });
        }
        Ok(BandLu {
            lu: self,
            pivots,
            condition,
        })
    }
}

/// Factors produced by [`BandMatrix::factorize`].
#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    pivots: Vec<usize>,
    condition: f64,
}

impl BandLu {
    /// Ratio of largest to smallest pivot magnitude; a cheap lower-quality
    /// stand-in for the condition number.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let a = &self.lu;
        let n = a.n;
        assert_eq!(rhs.len(), n);
        let mut b = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let last_row = (k + a.kl).min(n - 1);
            for i in k + 1..=last_row {
                b[i] -= a.data[a.slot(i, k)] * b[k];
            }
        }
        let reach = a.kl + a.ku;
        for i in (0..n).rev() {
            let last_col = (i + reach).min(n - 1);
            let mut s = b[i];
            for j in i + 1..=last_col {
                s -= a.data[a.slot(i, j)] * b[j];
            }
            b[i] = s / a.data[a.slot(i, i)];
        }
        b
    }
}

/// Direct banded solve of `matrix * x = rhs`.
pub fn solve_linear(matrix: &BandMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != matrix.n() {
        return Err(Error::Contract(format!(
            "rhs has length {}, matrix is {}x{}",
            rhs.len(),
            matrix.n(),
            matrix.n()
        )));
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side".into()));
    }
    let lu = matrix.clone().factorize()?;
    Ok(lu.solve(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residual(a: &BandMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mul_vec(x);
        ax.iter()
            .zip(b)
            .map(|(u, v)| (u - v).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn identity_returns_rhs() {
        let a = BandMatrix::identity(6);
        let b = vec![1.0, -2.0, 3.5, 0.0, 7.0, 1e-3];
        assert_eq!(solve_linear(&a, &b).unwrap(), b);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.set(0, 0, 1.0);
        a.set(1, 1, 1.0);
        let r = solve_linear(&a, &[1.0, 1.0, 1.0]);
        assert!(matches!(r, Err(Error::Singular { .. })));
    }

    #[test]
    fn needs_pivoting() {
        // zero on the diagonal, fine after a row swap
        let mut a = BandMatrix::zeros(2, 1, 1);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 1.0);
        let x = solve_linear(&a, &[2.0, 5.0]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn random_diagonally_weighted_band_systems(
            seed in prop::collection::vec(-1.0f64..1.0, 20 * 9),
            rhs in prop::collection::vec(-1.0f64..1.0, 20),
        ) {
            let n = 20;
            let (kl, ku) = (3, 5);
            let mut a = BandMatrix::zeros(n, kl, ku);
            let mut k = 0;
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    let v = seed[k % seed.len()];
                    k += 1;
                    a.set(i, j, if i == j { v.signum() * (9.0 + v.abs()) } else { v });
                }
            }
            let x = solve_linear(&a, &rhs).unwrap();
            let bn = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(residual(&a, &x, &rhs) <= 1e-10 * bn.max(1e-300));
        }
    }
}
