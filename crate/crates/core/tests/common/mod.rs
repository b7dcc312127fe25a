//! Shared oracles for integration tests, kept independent of the library's
//! factorization path: dense Gaussian elimination, Jacobi eigenvalues and
//! random test instances.

#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use adswitch_core::linalg::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Solves `A y = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);
    let mut m = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = a[(i, j)];
        }
        m[i][n] = b[i];
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        assert!(d != 0.0, "singular system in oracle");
        for row in col + 1..n {
            let factor = m[row][col] / d;
            for j in col..=n {
                m[row][j] -= factor * m[col][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = m[i][n];
        for j in i + 1..n {
            s -= m[i][j] * y[j];
        }
        y[i] = s / m[i][i];
    }
    y
}

/// `J Jᵀ` as a dense m×m matrix.
pub fn jjt(j: &Matrix) -> Matrix {
    let m = j.rows();
    let mut out = Matrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            out[(a, b)] = dot(j.row(a), j.row(b));
        }
    }
    out
}

/// `Jᵀ J` as a dense n×n matrix.
pub fn jtj(j: &Matrix) -> Matrix {
    let n = j.cols();
    let mut out = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for r in 0..j.rows() {
                s += j[(r, a)] * j[(r, b)];
            }
            out[(a, b)] = s;
        }
    }
    out
}

/// Explicit-formula projection oracle: `(I − Jᵀ(JJᵀ)⁻¹J) g` with the inverse
/// applied by a dense direct solve.
pub fn explicit_projection(j: &Matrix, g: &[f64]) -> Vec<f64> {
    let jg = j.matvec(g);
    let y = dense_solve(&jjt(j), &jg);
    let jty = j.tr_matvec(&y);
    g.iter().zip(&jty).map(|(gi, v)| gi - v).collect()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    let mut m = a.clone();
    for _ in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + m.max_abs()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Smallest singular value via the Jacobi eigen oracle on JJᵀ.
pub fn sigma_min_oracle(j: &Matrix) -> f64 {
    let eig = jacobi_eigenvalues(&jjt(j));
    eig[0].max(0.0).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale)
        .collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = (rng.random::<f64>() * 2.0 - 1.0) * scale;
        }
    }
    m
}

/// Random m×n Jacobian resampled until comfortably full rank, so 1e-10
/// oracle tolerances are meaningful.
pub fn random_full_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    loop {
        let j = random_matrix(rng, rows, cols, 1.0);
        if sigma_min_oracle(&j) > 0.2 {
            return j;
        }
    }
}
