//! Small dense linear-algebra kernels.
//!
//! Everything here is sized for dense problems with at most a few hundred
//! variables, so the implementations favour clarity over blocking or SIMD.
//! Matrices are row-major.

use serde::{Deserialize, Serialize};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row slices. All rows must have equal length.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `A x` for a slice `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y` for a slice `y` of length `rows`.
    pub fn tr_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let yi = y[i];
            for (o, a) in out.iter_mut().zip(row) {
                *o += yi * a;
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Euclidean norm of column `j`, restricted to rows `from..rows`.
    pub fn col_norm_from(&self, j: usize, from: usize) -> f64 {
        let mut s = 0.0;
        for i in from..self.rows {
            let v = self[(i, j)];
            s += v * v;
        }
        s.sqrt()
    }

    /// Swaps columns `a` and `b` in place.
    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product of two equally sized slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Max-abs norm.
pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y ← y + alpha x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `a - b` elementwise.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Solves `R[0..k,0..k] y = b` in place for upper-triangular `R` (back substitution).
///
/// Returns `false` if a diagonal entry is zero.
pub fn solve_upper(r: &Matrix, k: usize, b: &mut [f64]) -> bool {
    debug_assert!(b.len() >= k);
    for i in (0..k).rev() {
        let mut s = b[i];
        for j in i + 1..k {
            s -= r[(i, j)] * b[j];
        }
        let d = r[(i, i)];
        if d == 0.0 {
            return false;
        }
        b[i] = s / d;
    }
    true
}

/// Solves `R[0..k,0..k]ᵀ y = b` in place (forward substitution on the transpose).
pub fn solve_upper_transposed(r: &Matrix, k: usize, b: &mut [f64]) -> bool {
    debug_assert!(b.len() >= k);
    for i in 0..k {
        let mut s = b[i];
        for j in 0..i {
            s -= r[(j, i)] * b[j];
        }
        let d = r[(i, i)];
        if d == 0.0 {
            return false;
        }
        b[i] = s / d;
    }
    true
}

/// Solves the SPD system `A y = b` by unpivoted Cholesky, overwriting `b` with `y`.
///
/// `A` is destroyed. Returns `false` when a pivot is not strictly positive.
pub fn cholesky_solve(a: &mut Matrix, b: &mut [f64]) -> bool {
    let n = a.rows();
    debug_assert_eq!(a.cols(), n);
    debug_assert_eq!(b.len(), n);
    // Lower factor stored in the lower triangle of `a`.
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= a[(j, k)] * a[(j, k)];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = s / d;
        }
    }
    // Forward solve L z = b.
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[(i, k)] * b[k];
        }
        b[i] = s / a[(i, i)];
    }
    // Back solve Lᵀ y = z.
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[(k, i)] * b[k];
        }
        b[i] = s / a[(i, i)];
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose() {
        let a = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        assert_eq!(a.matvec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(a.tr_matvec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
        let t = a.transpose();
        assert_eq!(t.rows(), 3);
        assert_eq!(t[(2, 1)], 6.0);
    }

    #[test]
    fn triangular_solves() {
        let r = Matrix::from_rows(&[&[2.0, 1.0], &[0.0, 4.0]]);
        let mut b = vec![4.0, 8.0];
        assert!(solve_upper(&r, 2, &mut b));
        assert_eq!(b, vec![1.0, 2.0]); // 2y0 + y1 = 4, 4y1 = 8

        let mut b = vec![2.0, 9.0];
        assert!(solve_upper_transposed(&r, 2, &mut b));
        assert_eq!(b, vec![1.0, 2.0]); // 2y0 = 2, y0 + 4y1 = 9
    }

    #[test]
    fn singular_triangular_rejected() {
        let r = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 0.0]]);
        let mut b = vec![1.0, 1.0];
        assert!(!solve_upper(&r, 2, &mut b));
    }

    #[test]
    fn cholesky_spd() {
        // A = LLᵀ with L = [[2,0],[1,3]] → A = [[4,2],[2,10]]
        let mut a = Matrix::from_rows(&[&[4.0, 2.0], &[2.0, 10.0]]);
        let mut b = vec![10.0, 32.0];
        assert!(cholesky_solve(&mut a, &mut b));
        // Solution of [[4,2],[2,10]] y = (10,32) is y = (1,3).
        assert!((b[0] - 1.0).abs() < 1e-14);
        assert!((b[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let mut b = vec![1.0, 1.0];
        assert!(!cholesky_solve(&mut a, &mut b));
    }
}
