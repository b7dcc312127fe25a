//! Tangent-space geometry built on a rank-revealing QR factorization of Jᵀ.
//!
//! A single factorization per iterate is the gateway to everything the solver
//! needs from the constraint Jacobian: the orthogonal projector onto the
//! nullspace of J (trailing columns of Q), least-squares Lagrange multipliers,
//! regularized Gauss-Newton directions in range(Jᵀ), and a smallest-singular-
//! value estimate.

use crate::error::Error;
use crate::linalg::{self, Matrix};

/// Default relative threshold on the R diagonal for the numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Column-pivoted Householder QR factorization of Jᵀ: `Jᵀ Π = Q R`.
///
/// `Q` is n×n orthogonal, `R` is n×m with an upper-triangular leading block
/// whose diagonal is nonincreasing in magnitude. Immutable once built; all
/// queries are read-only.
#[derive(Debug, Clone)]
pub struct QrFactors {
    q: Matrix,
    r: Matrix,
    perm: Vec<usize>,
    rank: usize,
    n: usize,
    m: usize,
    j_norm: f64,
}

impl QrFactors {
    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// `perm[k]` is the original constraint index placed in pivot position `k`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Numerical rank determined by the factorization's rank tolerance.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Cached estimate of ‖J‖ (max row norm of J = max column norm of Jᵀ).
    pub fn j_norm(&self) -> f64 {
        self.j_norm
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.m
    }
}

/// Factorizes the m×n Jacobian `J` (m ≤ n) as `Jᵀ Π = Q R` with column
/// pivoting, Householder reflections and no blocking.
///
/// The numerical rank is the number of diagonal entries of R exceeding
/// `rank_tol · |R₀₀|` in magnitude (zero when R vanishes).
pub fn factorize(j: &Matrix, rank_tol: f64) -> Result<QrFactors, Error> {
    let m = j.rows();
    let n = j.cols();
    if m > n {
        return Err(Error::DimensionMismatch {
            context: "factorize: constraint count m must not exceed n",
            expected: n,
            got: m,
        });
    }
    if !(rank_tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "rank_tol must be positive, got {rank_tol}"
        )));
    }
    if !j.is_finite() {
        return Err(Error::NonFinite("Jacobian"));
    }

    let j_norm = (0..m).map(|i| linalg::norm(j.row(i))).fold(0.0, f64::max);

    // Work on A = Jᵀ (n×m); A is reduced to R while Q accumulates reflectors.
    let mut a = j.transpose();
    let mut q = Matrix::identity(n);
    let mut perm: Vec<usize> = (0..m).collect();
    let mut v = vec![0.0; n];

    for k in 0..m {
        // Pivot: bring the remaining column of largest norm to position k.
        // Norms are recomputed from scratch; cheap at these sizes and immune
        // to downdating cancellation.
        let mut best = k;
        let mut best_norm = a.col_norm_from(k, k);
        for col in k + 1..m {
            let nrm = a.col_norm_from(col, k);
            if nrm > best_norm {
                best = col;
                best_norm = nrm;
            }
        }
        a.swap_cols(k, best);
        perm.swap(k, best);

        if best_norm == 0.0 {
            continue; // remaining block is exactly zero
        }

        // Householder vector for column k below the diagonal.
        for i in k..n {
            v[i] = a[(i, k)];
        }
        let alpha = -v[k].signum() * best_norm;
        v[k] -= alpha;
        let vsq = {
            let mut s = 0.0;
            for vi in &v[k..n] {
                s += vi * vi;
            }
            s
        };
        if vsq == 0.0 {
            continue;
        }
        let beta = 2.0 / vsq;

        // Apply H = I − βvvᵀ to the remaining columns of A.
        a[(k, k)] = alpha;
        for i in k + 1..n {
            a[(i, k)] = 0.0;
        }
        for col in k + 1..m {
            let mut s = 0.0;
            for i in k..n {
                s += v[i] * a[(i, col)];
            }
            let s = beta * s;
            for i in k..n {
                a[(i, col)] -= s * v[i];
            }
        }

        // Accumulate Q ← Q·H (apply the reflector from the right).
        for row in 0..n {
            let mut s = 0.0;
            for i in k..n {
                s += q[(row, i)] * v[i];
            }
            let s = beta * s;
            for i in k..n {
                q[(row, i)] -= s * v[i];
            }
        }
    }

    let rank = if m == 0 {
        0
    } else {
        let r00 = a[(0, 0)].abs();
        if r00 == 0.0 {
            0
        } else {
            (0..m).take_while(|&i| a[(i, i)].abs() > rank_tol * r00).count()
        }
    };

    Ok(QrFactors {
        q,
        r: a,
        perm,
        rank,
        n,
        m,
        j_norm,
    })
}

/// Projects `g` onto the nullspace of J using the trailing `n − rank` columns
/// of Q: `g_T = Q₂ (Q₂ᵀ g)`.
pub fn project_tangent(factors: &QrFactors, g: &[f64]) -> Vec<f64> {
    let n = factors.n;
    assert_eq!(g.len(), n, "gradient length mismatch");
    let r = factors.rank;
    let q = &factors.q;
    // w = Q₂ᵀ g
    let mut w = vec![0.0; n - r];
    for (jj, wj) in w.iter_mut().enumerate() {
        let col = r + jj;
        let mut s = 0.0;
        for i in 0..n {
            s += q[(i, col)] * g[i];
        }
        *wj = s;
    }
    // g_T = Q₂ w
    let mut gt = vec![0.0; n];
    for (jj, wj) in w.iter().enumerate() {
        let col = r + jj;
        for (i, gi) in gt.iter_mut().enumerate() {
            *gi += q[(i, col)] * wj;
        }
    }
    gt
}

/// Least-squares Lagrange multipliers: the solution of `(JJᵀ) λ̂ = −J g`,
/// computed by two triangular solves with the leading block of R.
///
/// Requires full numerical rank; satisfies `g + Jᵀλ̂ = g_T` up to roundoff.
pub fn multipliers(factors: &QrFactors, g: &[f64]) -> Result<Vec<f64>, Error> {
    let (n, m) = (factors.n, factors.m);
    assert_eq!(g.len(), n, "gradient length mismatch");
    if !factors.is_full_rank() {
        return Err(Error::RankDeficient {
            rank: factors.rank,
            m,
        });
    }
    // w = (Qᵀ g)[0..m]; the permuted right-hand side Πᵀ(−Jg) equals −R₁ᵀ w.
    let q = &factors.q;
    let mut w = vec![0.0; m];
    for (col, wc) in w.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..n {
            s += q[(i, col)] * g[i];
        }
        *wc = s;
    }
    let mut b = vec![0.0; m];
    for i in 0..m {
        let mut s = 0.0;
        for k in 0..=i {
            s += factors.r[(k, i)] * w[k];
        }
        b[i] = -s;
    }
    // (R₁ᵀR₁)(Πᵀλ) = Πᵀ(−Jg): forward then back substitution.
    if !linalg::solve_upper_transposed(&factors.r, m, &mut b) {
        return Err(Error::RankDeficient { rank: factors.rank, m });
    }
    if !linalg::solve_upper(&factors.r, m, &mut b) {
        return Err(Error::RankDeficient { rank: factors.rank, m });
    }
    // Undo the pivoting: λ = Π y.
    let mut lambda = vec![0.0; m];
    for (k, &orig) in factors.perm.iter().enumerate() {
        lambda[orig] = b[k];
    }
    Ok(lambda)
}

/// Regularized Gauss-Newton direction `d = −Jᵀ (JJᵀ + δI)⁻¹ c`, computed in
/// factored form so that `d` lies in the range of Jᵀ.
///
/// For `delta = 0` the Jacobian must have full numerical rank and a single
/// triangular solve is used. For `delta > 0` the damped system is solved on
/// the leading `rank` pivot columns, which keeps the direction defined at
/// rank-deficient iterates.
pub fn normal_direction(factors: &QrFactors, c: &[f64], delta: f64) -> Result<Vec<f64>, Error> {
    let (n, m) = (factors.n, factors.m);
    assert_eq!(c.len(), m, "constraint length mismatch");
    assert!(delta >= 0.0, "delta must be nonnegative");
    let rank = factors.rank;
    let q = &factors.q;
    let r = &factors.r;

    // Permuted residual Πᵀc.
    let cp: Vec<f64> = factors.perm.iter().map(|&orig| c[orig]).collect();

    let y = if delta == 0.0 {
        if !factors.is_full_rank() {
            return Err(Error::RankDeficient { rank, m });
        }
        // d = −Q[:,0..m] R₁⁻ᵀ Πᵀc
        let mut y = cp;
        if !linalg::solve_upper_transposed(r, m, &mut y) {
            return Err(Error::RankDeficient { rank, m });
        }
        y
    } else {
        if rank == 0 {
            return Ok(vec![0.0; n]);
        }
        // With B the leading rank×m block of R, solve (BBᵀ + δI) z = B Πᵀc
        // and set d = −Q[:,0..rank] z. At full rank this is the damped
        // triangular form −Q R₁ (R₁ᵀR₁ + δI)⁻¹ Πᵀc.
        let mut gram = Matrix::zeros(rank, rank);
        for i in 0..rank {
            for j in i..rank {
                let mut s = 0.0;
                for k in j..m {
                    s += r[(i, k)] * r[(j, k)];
                }
                gram[(i, j)] = s;
                gram[(j, i)] = s;
            }
            gram[(i, i)] += delta;
        }
        let mut rhs = vec![0.0; rank];
        for (i, ri) in rhs.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in i..m {
                s += r[(i, k)] * cp[k];
            }
            *ri = s;
        }
        if !linalg::cholesky_solve(&mut gram, &mut rhs) {
            return Err(Error::NonFinite("damped normal system"));
        }
        rhs
    };

    let cols = y.len();
    let mut d = vec![0.0; n];
    for (col, yc) in y.iter().enumerate().take(cols) {
        for (i, di) in d.iter_mut().enumerate() {
            *di -= q[(i, col)] * yc;
        }
    }
    Ok(d)
}

/// Smallest singular value of the leading rank×rank block of R (equal to
/// σ_min(J) at full rank), estimated by inverse iteration on R₁ᵀR₁.
pub fn sigma_min(factors: &QrFactors) -> f64 {
    let rank = factors.rank;
    if rank == 0 {
        return 0.0;
    }
    let r = &factors.r;
    let mut x = vec![1.0 / (rank as f64).sqrt(); rank];
    let mut nu_prev = 0.0;
    for _ in 0..500 {
        let mut z = x.clone();
        // z = (R₁ᵀR₁)⁻¹ x via forward and back substitution.
        if !linalg::solve_upper_transposed(r, rank, &mut z)
            || !linalg::solve_upper(r, rank, &mut z)
        {
            return 0.0;
        }
        let nu = linalg::norm(&z);
        if nu == 0.0 || !nu.is_finite() {
            return 0.0;
        }
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi = zi / nu;
        }
        if (nu - nu_prev).abs() <= 1e-13 * nu {
            nu_prev = nu;
            break;
        }
        nu_prev = nu;
    }
    1.0 / nu_prev.sqrt()
}
