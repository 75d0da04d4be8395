use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen, SVD};

use super::matrix::{ComplexMatrix, C64, I};
use crate::config::{TAU_EXACT, TAU_NILP};
use crate::error::{Error, Result};

/// `tr(C^† A)`.
pub fn frobenius_inner(c: &ComplexMatrix, a: &ComplexMatrix) -> Result<C64> {
    c.ensure_same_dim(a)?;
    Ok(c
        .as_dmatrix()
        .iter()
        .zip(a.as_dmatrix().iter())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// `XY - YX`.
pub fn commutator(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    x.ensure_same_dim(y)?;
    Ok(x * y - y * x)
}

/// Matrix of `A -> [omega, A]` acting on column-major vectorisations.
pub fn ad_operator(omega: &ComplexMatrix) -> DMatrix<C64> {
    let n = omega.dim();
    let nn = n * n;
    let mut ad = DMatrix::zeros(nn, nn);
    // vec([W, A]) = (I (x) W - W^T (x) I) vec(A), index = row + n * col
    for col in 0..n {
        for row in 0..n {
            let out = row + n * col;
            for k in 0..n {
                ad[(out, k + n * col)] += omega[(row, k)];
                ad[(out, row + n * k)] -= omega[(k, col)];
            }
        }
    }
    ad
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_dmatrix_unchecked(a.as_dmatrix().kronecker(b.as_dmatrix()))
}

pub fn direct_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (n1, n2) = (a.dim(), b.dim());
    let mut m = DMatrix::zeros(n1 + n2, n1 + n2);
    m.view_mut((0, 0), (n1, n1)).copy_from(a.as_dmatrix());
    m.view_mut((n1, n1), (n2, n2)).copy_from(b.as_dmatrix());
    ComplexMatrix::from_dmatrix_unchecked(m)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    let mut it = factors.into_iter();
    let first = it.next().expect("kron_all needs at least one factor").clone();
    it.fold(first, |acc, f| kron(&acc, f))
}

/// Spectral decomposition of a Hermitian matrix: real eigenvalues and unitary eigenvectors.
pub fn hermitian_eigen(h: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let sym = (h.as_dmatrix() + h.as_dmatrix().adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    (
        eig.eigenvalues.iter().copied().collect(),
        ComplexMatrix::from_dmatrix_unchecked(eig.eigenvectors),
    )
}

/// `exp(t * omega)` for skew-Hermitian `omega`, via the eigendecomposition of `i * omega`.
pub fn expm_skew(omega: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !omega.is_skew_hermitian(TAU_EXACT * omega.frobenius_norm().max(1.0)) {
        return Err(Error::Structure("skew-Hermitian"));
    }
    Ok(expm_skew_unchecked(omega, t))
}

pub(crate) fn expm_skew_unchecked(omega: &ComplexMatrix, t: f64) -> ComplexMatrix {
    // omega = -i H, H = V diag(h) V^†  =>  exp(t omega) = V diag(exp(-i t h)) V^†
    let h = omega.scale(I);
    let (vals, v) = hermitian_eigen(&h);
    let phases: Vec<C64> = vals.iter().map(|&x| C64::from_polar(1.0, -t * x)).collect();
    let d = ComplexMatrix::diag(&phases);
    &v * &d * v.adjoint()
}

/// Thin SVD of a complex matrix, singular values descending.
///
/// nalgebra's bidiagonal SVD loses accuracy on some complex inputs (relative
/// recomposition errors near 1e-2 were seen on 2x2 nilpotent matrices), so
/// factorizations come from faer and are returned in nalgebra's layout.
pub(crate) fn svd_complex(m: &DMatrix<C64>) -> SVD<C64, Dyn, Dyn> {
    let f = faer::Mat::<C64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = f.thin_svd().expect("SVD converges for finite input");
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    SVD {
        u: Some(DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)])),
        v_t: Some(DMatrix::from_fn(v.ncols(), v.nrows(), |i, j| v[(j, i)].conj())),
        singular_values: DVector::from_fn(s.nrows(), |i, _| s[i].re),
    }
}

/// Real counterpart of [`svd_complex`].
pub(crate) fn svd_real(m: &DMatrix<f64>) -> SVD<f64, Dyn, Dyn> {
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = f.thin_svd().expect("SVD converges for finite input");
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    SVD {
        u: Some(DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)])),
        v_t: Some(DMatrix::from_fn(v.ncols(), v.nrows(), |i, j| v[(j, i)])),
        singular_values: DVector::from_fn(s.nrows(), |i, _| s[i]),
    }
}

/// Singular values, descending.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = svd_complex(a.as_dmatrix())
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Orthonormal basis (as columns) of the numerical null space of the square
/// matrix `a`, using the relative threshold `tol * max(sigma_max, 1)`.
pub(crate) fn null_space(a: &DMatrix<C64>, tol: f64) -> DMatrix<C64> {
    let n = a.ncols();
    debug_assert_eq!(a.nrows(), n);
    let svd = svd_complex(a);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &x| m.max(x));
    let thresh = tol * smax.max(1.0);
    let rows: Vec<usize> = (0..n)
        .filter(|&k| svd.singular_values[k] <= thresh)
        .collect();
    DMatrix::from_fn(n, rows.len(), |i, j| v_t[(rows[j], i)].conj())
}

/// Orthonormal basis of the orthogonal complement of the columns of `q` (orthonormal).
fn complement(q: &DMatrix<C64>) -> DMatrix<C64> {
    let n = q.nrows();
    let proj = DMatrix::<C64>::identity(n, n) - q * q.adjoint();
    let eig = SymmetricEigen::new((&proj + proj.adjoint()) * C64::new(0.5, 0.0));
    let cols: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
    DMatrix::from_fn(n, cols.len(), |i, j| eig.eigenvectors[(i, cols[j])])
}

/// Nilpotency via unitary staircase reduction.
///
/// Repeatedly splits off the numerical kernel: with `Q = [K, R]`, `K` spanning
/// `ker B`, the matrix `Q^† B Q` has a zero first block column and the
/// remaining spectrum is that of `R^† B R`. `A` is nilpotent iff the
/// reduction exhausts the space, i.e. every diagonal block of the resulting
/// block-triangular Schur-type form is zero. Rank decisions use `TAU_NILP`
/// relative to `||A||_F`.
pub fn is_nilpotent(a: &ComplexMatrix) -> bool {
    is_nilpotent_with(a, TAU_NILP)
}

pub fn is_nilpotent_with(a: &ComplexMatrix, tol: f64) -> bool {
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return true;
    }
    let mut b = a.as_dmatrix() / C64::new(scale, 0.0);
    loop {
        let n = b.nrows();
        if n == 0 {
            return true;
        }
        if b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() <= tol {
            return true;
        }
        let ker = null_space(&b, tol);
        if ker.ncols() == 0 {
            return false;
        }
        let rest = complement(&ker);
        b = rest.adjoint() * &b * &rest;
    }
}

/// Real least squares `min ||M x - b||` via SVD with relative rank cut-off.
pub(crate) struct RealLstsq {
    pub x: DVector<f64>,
    pub residual: f64,
    pub singular_values: Vec<f64>,
}

pub(crate) fn real_lstsq(m: DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> RealLstsq {
    let svd = svd_real(&m);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let eps = rcond * smax.max(f64::MIN_POSITIVE);
    let x = svd
        .solve(b, eps)
        .unwrap_or_else(|_| DVector::zeros(m.ncols()));
    let residual = (&m * &x - b).norm();
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(|p, q| q.total_cmp(p));
    RealLstsq {
        x,
        residual,
        singular_values,
    }
}

/// Builds the real matrix whose columns are the realified `mats`.
pub(crate) fn realified_columns(mats: &[ComplexMatrix]) -> DMatrix<f64> {
    let rows = mats.first().map(|m| 2 * m.dim() * m.dim()).unwrap_or(0);
    let mut out = DMatrix::zeros(rows, mats.len());
    for (j, m) in mats.iter().enumerate() {
        for (i, v) in m.realify().into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}
