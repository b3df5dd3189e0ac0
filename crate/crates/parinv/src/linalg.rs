//! Banded direct solver for the per-step linear systems.
//!
//! The implicit-Euler/Crank-Nicolson step matrices are banded with bandwidth
//! 1 (1D, tridiagonal) or nx (2D, 5-point stencil). They are strictly
//! diagonally dominant in every configuration this crate produces, so LU
//! without pivoting is stable; a vanishing pivot is reported, never patched.

use crate::error::{Error, Result};

/// Square banded matrix with equal lower/upper bandwidth.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    /// Row-major band storage, width 2*bw+1 per row; entry (i, j) lives at
    /// data[i * width + (j - i + bw)].
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> BandedMatrix {
        BandedMatrix {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j + self.bw >= i && j <= i + self.bw, "outside band");
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// In-place LU factorization without pivoting. Returns an error if a
    /// pivot is (numerically) zero.
    pub fn factorize(mut self) -> Result<BandedLu> {
        let n = self.n;
        let bw = self.bw;
        for k in 0..n {
            let pivot = self.get(k, k);
            if pivot.abs() < 1e-300 {
                return Err(Error::SingularStepMatrix { level: 0 });
            }
            let i_max = (k + bw).min(n - 1);
            for i in k + 1..=i_max {
                let m = self.get(i, k) / pivot;
                self.set(i, k, m);
                let j_max = (k + bw).min(n - 1);
                for j in k + 1..=j_max {
                    let v = self.get(i, j) - m * self.get(k, j);
                    self.set(i, j, v);
                }
            }
        }
        Ok(BandedLu { lu: self })
    }
}

/// Factorized banded matrix; reusable across right-hand sides within a step.
#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandedMatrix,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        let bw = self.lu.bw;
        let mut x = rhs.to_vec();
        // forward: L has unit diagonal
        for i in 0..n {
            let j_min = i.saturating_sub(bw);
            let mut acc = x[i];
            for j in j_min..i {
                acc -= self.lu.get(i, j) * x[j];
            }
            x[i] = acc;
        }
        // backward
        for i in (0..n).rev() {
            let j_max = (i + bw).min(n - 1);
            let mut acc = x[i];
            for j in i + 1..=j_max {
                acc -= self.lu.get(i, j) * x[j];
            }
            x[i] = acc / self.lu.get(i, i);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        // -u'' = f discretization sanity: A = tridiag(-1, 2, -1), n=5
        let n = 5;
        let mut a = BandedMatrix::zeros(n, 1);
        for i in 0..n {
            a.set(i, i, 2.0);
            if i > 0 {
                a.set(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.set(i, i + 1, -1.0);
            }
        }
        let x_true = vec![1.0, -2.0, 3.0, 0.5, -1.5];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = 2.0 * x_true[i];
            if i > 0 {
                rhs[i] -= x_true[i - 1];
            }
            if i + 1 < n {
                rhs[i] -= x_true[i + 1];
            }
        }
        let lu = a.factorize().unwrap();
        let x = lu.solve(&rhs);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn solves_wider_band() {
        // diagonally dominant pentadiagonal
        let n = 12;
        let bw = 2;
        let mut a = BandedMatrix::zeros(n, bw);
        for i in 0..n {
            a.set(i, i, 5.0 + i as f64 * 0.1);
            for d in 1..=bw {
                if i >= d {
                    a.set(i, i - d, -0.7 / d as f64);
                }
                if i + d < n {
                    a.set(i, i + d, -0.9 / d as f64);
                }
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let j_min = i.saturating_sub(bw);
            let j_max = (i + bw).min(n - 1);
            for j in j_min..=j_max {
                rhs[i] += a.get(i, j) * x_true[j];
            }
        }
        let x = a.factorize().unwrap().solve(&rhs);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-11);
        }
    }

    #[test]
    fn reports_singular_pivot() {
        let mut a = BandedMatrix::zeros(3, 1);
        a.set(0, 0, 0.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 1.0);
        a.set(2, 2, 1.0);
        assert!(a.factorize().is_err());
    }
}
