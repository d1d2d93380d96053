//! Dense linear algebra used throughout: an unpivoted Cholesky factorization,
//! triangular solves and symmetric eigenvalue helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Pivot at which an unpivoted Cholesky factorization broke down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    pub pivot: usize,
}

/// Right-looking Cholesky factorization `A = L Lᵀ` without pivoting.
///
/// Only the lower triangle of `a` is read. Fails on the first pivot that is
/// not strictly positive (or not finite).
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>, NotPositiveDefinite> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky needs a square matrix");
    let mut l = a.clone();
    for k in 0..n {
        let pivot = l[(k, k)];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(NotPositiveDefinite { pivot: k });
        }
        let lkk = pivot.sqrt();
        l[(k, k)] = lkk;
        for i in (k + 1)..n {
            l[(i, k)] /= lkk;
        }
        // rank-1 update of the trailing lower triangle, column by column
        for j in (k + 1)..n {
            let ljk = l[(j, k)];
            if ljk == 0.0 {
                continue;
            }
            for i in j..n {
                let lik = l[(i, k)];
                l[(i, j)] -= lik * ljk;
            }
        }
    }
    for j in 1..n {
        for i in 0..j {
            l[(i, j)] = 0.0;
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn solve_upper_transposed(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `L Lᵀ x = b`.
pub fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    solve_upper_transposed(l, &solve_lower(l, b))
}

/// Inverse of `L Lᵀ` from its Cholesky factor.
pub fn cholesky_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut linv = DMatrix::<f64>::zeros(n, n);
    // L⁻¹ column by column
    for j in 0..n {
        linv[(j, j)] = 1.0 / l[(j, j)];
        for i in (j + 1)..n {
            let mut s = 0.0;
            for k in j..i {
                s -= l[(i, k)] * linv[(k, j)];
            }
            linv[(i, j)] = s / l[(i, i)];
        }
    }
    linv.transpose() * linv
}

/// Largest absolute asymmetry `max |M - Mᵀ|`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Extremal eigenpairs `(λ_min, v_min, λ_max, v_max)` of a symmetric matrix.
pub fn extremal_eigenpairs(m: &DMatrix<f64>) -> (f64, DVector<f64>, f64, DVector<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let (mut imin, mut imax) = (0, 0);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < eig.eigenvalues[imin] {
            imin = i;
        }
        if v > eig.eigenvalues[imax] {
            imax = i;
        }
    }
    (
        eig.eigenvalues[imin],
        eig.eigenvectors.column(imin).into_owned(),
        eig.eigenvalues[imax],
        eig.eigenvectors.column(imax).into_owned(),
    )
}
