//! Small dense matrices for the element-local computations.
//!
//! Every system solved here is a local mass or interior-block matrix of
//! dimension at most a few dozen, so a plain row-major store with an
//! unpivoted Cholesky factorization is all that is needed.

use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DMat<R: Real> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> DMat<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![R::zero(); rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<R>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    /// `self * other`
    pub fn mul(&self, other: &DMat<R>) -> DMat<R> {
        assert_eq!(self.cols, other.rows);
        let mut out = DMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == R::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(l, j);
                }
            }
        }
        out
    }

    /// `self^T * other`
    pub fn tr_mul(&self, other: &DMat<R>) -> DMat<R> {
        assert_eq!(self.rows, other.rows);
        let mut out = DMat::zeros(self.cols, other.cols);
        for l in 0..self.rows {
            for i in 0..self.cols {
                let a = self.get(l, i);
                if a == R::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(l, j);
                }
            }
        }
        out
    }

    /// `self * x` for a vector `x`.
    pub fn mul_vec(&self, x: &[R]) -> Vec<R> {
        assert_eq!(self.cols, x.len());
        let mut y = vec![R::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = R::zero();
            for j in 0..self.cols {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// `self^T * x`.
    pub fn tr_mul_vec(&self, x: &[R]) -> Vec<R> {
        assert_eq!(self.rows, x.len());
        let mut y = vec![R::zero(); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for j in 0..self.cols {
                y[j] += self.get(i, j) * xi;
            }
        }
        y
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, v| m.max(v.abs()))
    }
}

/// Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<R: Real> {
    // lower-triangular factor, row-major, full square storage
    l: DMat<R>,
}

impl<R: Real> Cholesky<R> {
    /// Factors `a = L L^T`. Returns `None` when a pivot is not strictly
    /// positive relative to the matrix scale, i.e. `a` is not SPD.
    pub fn new(a: &DMat<R>) -> Option<Self> {
        assert_eq!(a.rows(), a.cols());
        let n = a.rows();
        let scale = a.max_abs();
        let tiny = R::epsilon() * scale * crate::real::real::<R>(16.0);
        let mut l = DMat::zeros(n, n);
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                let ljk = l.get(j, k);
                d -= ljk * ljk;
            }
            if n > 0 && !(d > tiny) {
                return None;
            }
            let dj = d.sqrt();
            l.set(j, j, dj);
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / dj);
            }
        }
        Some(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `a x = b` in place.
    pub fn solve_in_place(&self, b: &mut [R]) {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        // forward: L y = b
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l.get(i, k) * b[k];
            }
            b[i] = s / self.l.get(i, i);
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l.get(k, i) * b[k];
            }
            b[i] = s / self.l.get(i, i);
        }
    }

    pub fn solve_vec(&self, b: &[R]) -> Vec<R> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `a X = B` column by column.
    pub fn solve_mat(&self, b: &DMat<R>) -> DMat<R> {
        let n = self.l.rows();
        assert_eq!(b.rows(), n);
        let mut out = DMat::zeros(n, b.cols());
        let mut col = vec![R::zero(); n];
        for j in 0..b.cols() {
            for i in 0..n {
                col[i] = b.get(i, j);
            }
            self.solve_in_place(&mut col);
            for i in 0..n {
                out.set(i, j, col[i]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        // A = M^T M + I is SPD
        let m = DMat::<f64>::from_rows(3, 3, vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.5, 0.2, 1.5]);
        let mut a = m.tr_mul(&m);
        for i in 0..3 {
            a.add_to(i, i, 1.0);
        }
        let x_true = vec![1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let chol = Cholesky::new(&a).unwrap();
        let x = chol.solve_vec(&b);
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-13, "component {i}: {}", x[i]);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DMat::from_rows(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(Cholesky::new(&a).is_none());
    }

    #[test]
    fn matrix_products_agree_with_hand_computation() {
        let a = DMat::from_rows(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = DMat::from_rows(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let ab = a.mul(&b);
        assert_eq!(ab.data(), &[4.0, 5.0, 10.0, 11.0]);
        let ata = a.tr_mul(&a);
        assert_eq!(ata.get(0, 0), 17.0);
        assert_eq!(ata.get(2, 1), 2.0 * 3.0 + 5.0 * 6.0);
    }

    #[test]
    fn works_in_f32() {
        let a = DMat::<f32>::from_rows(2, 2, vec![4.0, 1.0, 1.0, 3.0]);
        let chol = Cholesky::new(&a).unwrap();
        let x = chol.solve_vec(&[5.0, 4.0]);
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] - 1.0).abs() < 1e-5);
    }
}
