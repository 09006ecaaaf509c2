//! Small dense complex matrices, column-major so that time-slot columns are
//! contiguous slices.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row-major nested rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Self::from_fn(n_rows, n_cols, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn column(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.rows..(k + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Matrix product; panics on inner-dimension mismatch.
    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for c in 0..rhs.cols {
            for k in 0..self.cols {
                let b = rhs[(k, c)];
                for r in 0..self.rows {
                    out.data[c * self.rows + r] += self[(r, k)] * b;
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn sub(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn conj_transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn max_abs_diff(&self, rhs: &CMat) -> f64 {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
        self.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// If `self · selfᴴ = c·I` for a scalar c (within `tol`), returns c.
    pub fn scaled_unitary_factor(&self, tol: f64) -> Option<f64> {
        if self.rows != self.cols {
            return None;
        }
        let gram = self.mul(&self.conj_transpose());
        let c = gram[(0, 0)].re;
        let target = CMat::identity(self.rows).scaled(c);
        (gram.max_abs_diff(&target) <= tol * c.abs().max(1.0)).then_some(c)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[c * self.rows + r]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[c * self.rows + r]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_and_conjugate() {
        let a = CMat::from_rows(&[vec![c(1.0, 1.0), c(0.0, 2.0)], vec![c(3.0, 0.0), c(-1.0, 0.0)]]);
        let b = CMat::from_rows(&[vec![c(2.0, 0.0)], vec![c(0.0, -1.0)]]);
        let p = a.mul(&b);
        assert_eq!(p[(0, 0)], c(4.0, 2.0));
        assert_eq!(p[(1, 0)], c(6.0, 1.0));
        assert_eq!(a.conj_transpose()[(1, 0)], c(0.0, -2.0));
        assert_eq!(a.column(1), &[c(0.0, 2.0), c(-1.0, 0.0)]);
    }

    #[test]
    fn scaled_unitary_detection() {
        let u = CMat::from_rows(&[vec![c(2.0, 0.0), c(-2.0, 0.0)], vec![c(2.0, 0.0), c(2.0, 0.0)]]);
        assert_eq!(u.scaled_unitary_factor(1e-12), Some(8.0));
        let n = CMat::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]);
        assert_eq!(n.scaled_unitary_factor(1e-12), None);
    }
}
