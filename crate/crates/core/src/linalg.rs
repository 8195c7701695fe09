//! Banded LU with partial pivoting, and the node ordering that keeps periodic
//! grids banded.

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row reserves `kl` extra super-diagonal slots so that row interchanges during
/// factorization never leave the stored band.
#[derive(Clone, Debug)]
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
        BandMatrix {
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

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    /// Entry (i, j); zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry (i, j).
    ///
    /// # Panics
    /// If (i, j) lies outside the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band (kl = {}, ku = {})",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// `self += alpha * other`; both must have the same shape.
    pub fn add_scaled(&mut self, alpha: f64, other: &BandMatrix) {
        assert_eq!((self.n, self.kl, self.ku), (other.n, other.kl, other.ku));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// Sum of all stored entries.
    pub fn total(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                s += self.data[self.slot(i, j)];
            }
        }
        s
    }

    /// Column sums, i.e. `1ᵀ A`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                out[j] += self.data[self.slot(i, j)];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Gaussian elimination with row partial pivoting.
    pub fn factorize(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut pivots = Vec::with_capacity(n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= scale * 1e-300 {
                return Err(Error::Singular { column: k });
            }
            pivots.push(p);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last_row {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                self.data[sik] = l;
                let len = last_col - k;
                if l == 0.0 || len == 0 {
                    continue;
                }
                let row_k = self.slot(k, k + 1);
                let row_i = self.slot(i, k + 1);
                for off in 0..len {
                    self.data[row_i + off] -= l * self.data[row_k + off];
                }
            }
        }
        Ok(BandLu { band: self, pivots })
    }
}

/// Factorized band matrix.
#[derive(Clone, Debug)]
pub struct BandLu {
    band: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.band;
        let n = a.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + a.kl).min(n - 1) {
                    b[i] -= a.data[a.slot(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + a.kl + a.ku).min(n - 1) {
                s -= a.data[a.slot(k, j)] * b[j];
            }
            b[k] = s / a.data[a.slot(k, k)];
        }
    }
}

/// Interleaved ordering of a periodic index set: 0, N-1, 1, N-2, 2, ...
///
/// Cyclic neighbours end up at most two positions apart, so a periodic
/// tensor-product grid with `m` unknowns per periodic index has bandwidth `2m + 1`.
#[derive(Clone, Debug)]
pub struct PeriodicOrdering {
    position: Vec<usize>,
}

impl PeriodicOrdering {
    pub fn new(n: usize) -> Self {
        let mut position = vec![0; n];
        let (mut lo, mut hi) = (0usize, n);
        let mut k = 0;
        while lo < hi {
            position[lo] = k;
            k += 1;
            lo += 1;
            if lo < hi {
                hi -= 1;
                position[hi] = k;
                k += 1;
            }
        }
        PeriodicOrdering { position }
    }

    #[inline]
    pub fn position(&self, i: usize) -> usize {
        self.position[i]
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let l = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= l * a[k][j];
                }
                b[i] -= l * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
            x[k] = (b[k] - s) / a[k][k];
        }
        x
    }

    #[test]
    fn ordering_keeps_cyclic_neighbours_close() {
        for n in [1usize, 2, 3, 8, 9, 64] {
            let ord = PeriodicOrdering::new(n);
            let mut seen = vec![false; n];
            for i in 0..n {
                seen[ord.position(i)] = true;
                let j = (i + 1) % n;
                assert!(ord.position(i).abs_diff(ord.position(j)) <= 2);
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        assert!(matches!(a.factorize(), Err(Error::Singular { column: 2 })));
    }

    proptest! {
        #[test]
        fn band_lu_matches_dense_elimination(
            n in 1usize..30,
            kl in 0usize..5,
            ku in 0usize..5,
            seed in proptest::collection::vec(-1.0f64..1.0, 30 * 11 + 30),
        ) {
            let mut band = BandMatrix::zeros(n, kl, ku);
            let mut dense = vec![vec![0.0; n]; n];
            let mut s = 0;
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    // weak diagonal so that pivoting actually happens
                    let v = seed[s % seed.len()] + if i == j { 0.1 } else { 0.0 };
                    s += 1;
                    band.add(i, j, v);
                    dense[i][j] = v;
                }
            }
            let rhs: Vec<f64> = (0..n).map(|i| seed[(i * 7) % seed.len()]).collect();
            let expected = dense_solve(dense.clone(), rhs.clone());
            prop_assume!(expected.iter().all(|v| v.is_finite() && v.abs() < 1e6));
            let lu = band.factorize().unwrap();
            let mut x = rhs.clone();
            lu.solve_in_place(&mut x);
            for (a, b) in x.iter().zip(&expected) {
                prop_assert!((a - b).abs() <= 1e-7 * (1.0 + b.abs()));
            }
        }
    }
}
