use nalgebra::DVector;

use super::GroupSpec;
use crate::config::{TAU_EXACT, TAU_FEAS};
use crate::error::{Error, Result};
use crate::linalg::{direct_sum, kron, real_inner, real_lstsq, realified_columns, ComplexMatrix, C64, I, ONE, ZERO};

/// Real basis of a Lie subalgebra of `u(N)`, stored as skew-Hermitian matrices.
#[derive(Clone, Debug)]
pub struct AlgebraBasis {
    dim_ambient: usize,
    elements: Vec<ComplexMatrix>,
}

impl AlgebraBasis {
    /// Validates skew-Hermiticity and real-linear independence.
    pub fn new(dim_ambient: usize, elements: Vec<ComplexMatrix>) -> Result<Self> {
        for e in &elements {
            if e.dim() != dim_ambient {
                return Err(Error::DimensionMismatch {
                    expected: dim_ambient,
                    found: e.dim(),
                });
            }
            if !e.is_skew_hermitian(TAU_EXACT * e.frobenius_norm().max(1.0)) {
                return Err(Error::Structure("skew-Hermitian"));
            }
        }
        let independent = Self::select_independent(dim_ambient, elements.clone(), TAU_EXACT);
        if independent.len() != elements.len() {
            return Err(Error::InvalidArgument(
                "algebra elements are not real-linearly independent".into(),
            ));
        }
        Ok(Self {
            dim_ambient,
            elements,
        })
    }

    /// Keeps the candidates that enlarge the real span, in order. Rank decisions use
    /// modified Gram-Schmidt (two passes) at relative tolerance `tol`.
    pub fn from_spanning(dim_ambient: usize, candidates: Vec<ComplexMatrix>) -> Self {
        let elements = Self::select_independent(dim_ambient, candidates, TAU_EXACT);
        Self {
            dim_ambient,
            elements,
        }
    }

    fn select_independent(
        _n: usize,
        candidates: Vec<ComplexMatrix>,
        tol: f64,
    ) -> Vec<ComplexMatrix> {
        let mut ortho: Vec<ComplexMatrix> = Vec::new();
        let mut kept = Vec::new();
        for c in candidates {
            let norm = c.frobenius_norm();
            if norm == 0.0 {
                continue;
            }
            let r = residual_against(&ortho, &c);
            let rn = r.frobenius_norm();
            if rn > tol * norm {
                ortho.push(r.scale_real(1.0 / rn));
                kept.push(c);
            }
        }
        kept
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim_ambient
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Orthonormal basis of the same span w.r.t. `Re tr(X^† Y)`.
    pub fn orthonormalized(&self) -> Vec<ComplexMatrix> {
        let mut ortho: Vec<ComplexMatrix> = Vec::new();
        for c in &self.elements {
            let r = residual_against(&ortho, c);
            let rn = r.frobenius_norm();
            if rn > 0.0 {
                ortho.push(r.scale_real(1.0 / rn));
            }
        }
        ortho
    }

    /// Least-squares real coefficients of `x` in this basis and the residual norm.
    pub fn project(&self, x: &ComplexMatrix) -> (Vec<f64>, f64) {
        if self.elements.is_empty() {
            return (Vec::new(), x.frobenius_norm());
        }
        let m = realified_columns(&self.elements);
        let b = DVector::from_vec(x.realify());
        let ls = real_lstsq(m, &b, 1e-13);
        (ls.x.iter().copied().collect(), ls.residual)
    }

    pub fn combine(&self, coeffs: &[f64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_ambient);
        for (c, e) in coeffs.iter().zip(&self.elements) {
            out = out + e.scale_real(*c);
        }
        out
    }

    /// Residual norm of `x` after projection onto the span.
    pub fn residual(&self, x: &ComplexMatrix) -> f64 {
        self.project(x).1
    }

    /// Whether all pairs of elements commute (within `TAU_EXACT`).
    pub fn is_abelian(&self) -> bool {
        self.elements.iter().enumerate().all(|(i, a)| {
            self.elements[i + 1..]
                .iter()
                .all(|b| (a * b - b * a).frobenius_norm() <= TAU_EXACT * (1.0 + a.frobenius_norm() * b.frobenius_norm()))
        })
    }
}

/// Gram-Schmidt residual of `c` against an orthonormal list, two passes.
pub(crate) fn residual_against(ortho: &[ComplexMatrix], c: &ComplexMatrix) -> ComplexMatrix {
    let mut r = c.clone();
    for _ in 0..2 {
        for q in ortho {
            let p = real_inner(q, &r);
            r = r - q.scale_real(p);
        }
    }
    r
}

fn su2_generators() -> [ComplexMatrix; 3] {
    // i sigma_x, i sigma_y, i sigma_z
    [
        ComplexMatrix::from_fn(2, |r, c| if r != c { I } else { ZERO }),
        ComplexMatrix::from_fn(2, |r, c| match (r, c) {
            (0, 1) => ONE,
            (1, 0) => -ONE,
            _ => ZERO,
        }),
        ComplexMatrix::diag(&[I, -I]),
    ]
}

/// `I_{2^j} (x) x (x) I_{2^{n-j-1}}`.
pub(crate) fn embed_qubit(x: &ComplexMatrix, j: usize, n: usize) -> ComplexMatrix {
    let left = ComplexMatrix::identity(1 << j);
    let right = ComplexMatrix::identity(1 << (n - j - 1));
    kron(&kron(&left, x), &right)
}

fn unitary_algebra(n: usize, traceless: bool) -> Vec<ComplexMatrix> {
    let mut out = diagonal_algebra(n, traceless);
    for k in 0..n {
        for l in (k + 1)..n {
            let mut a = ComplexMatrix::zeros(n);
            a[(k, l)] = ONE;
            a[(l, k)] = -ONE;
            out.push(a);
            let mut s = ComplexMatrix::zeros(n);
            s[(k, l)] = I;
            s[(l, k)] = I;
            out.push(s);
        }
    }
    out
}

fn diagonal_algebra(n: usize, traceless: bool) -> Vec<ComplexMatrix> {
    if traceless {
        (0..n.saturating_sub(1))
            .map(|k| {
                let mut d = ComplexMatrix::zeros(n);
                d[(k, k)] = I;
                d[(k + 1, k + 1)] = -I;
                d
            })
            .collect()
    } else {
        (0..n)
            .map(|k| {
                let mut d = ComplexMatrix::zeros(n);
                d[(k, k)] = I;
                d
            })
            .collect()
    }
}

fn torus_element(weights: &[i64]) -> ComplexMatrix {
    let d: Vec<C64> = weights.iter().map(|&w| I * w as f64).collect();
    ComplexMatrix::diag(&d)
}

/// `{ X1 (x) I + I (x) X2 }` from bases of both factors, duplicates removed.
pub(crate) fn hat_sum(a: &AlgebraBasis, b: &AlgebraBasis) -> AlgebraBasis {
    let (n1, n2) = (a.dim_ambient(), b.dim_ambient());
    let i1 = ComplexMatrix::identity(n1);
    let i2 = ComplexMatrix::identity(n2);
    let mut cands: Vec<ComplexMatrix> = a.elements().iter().map(|x| kron(x, &i2)).collect();
    cands.extend(b.elements().iter().map(|y| kron(&i1, y)));
    AlgebraBasis::from_spanning(n1 * n2, cands)
}

fn block_sum(a: &AlgebraBasis, b: &AlgebraBasis) -> AlgebraBasis {
    let (n1, n2) = (a.dim_ambient(), b.dim_ambient());
    let z1 = ComplexMatrix::zeros(n1);
    let z2 = ComplexMatrix::zeros(n2);
    let mut els: Vec<ComplexMatrix> = a.elements().iter().map(|x| direct_sum(x, &z2)).collect();
    els.extend(b.elements().iter().map(|y| direct_sum(&z1, y)));
    AlgebraBasis {
        dim_ambient: n1 + n2,
        elements: els,
    }
}

/// Real basis of the Lie algebra of `spec`.
pub fn algebra_basis(spec: &GroupSpec) -> AlgebraBasis {
    let n = spec.ambient_dim();
    match spec {
        GroupSpec::FullUnitary(n) => AlgebraBasis::from_spanning(*n, unitary_algebra(*n, false)),
        GroupSpec::SpecialUnitary(n) => AlgebraBasis::from_spanning(*n, unitary_algebra(*n, true)),
        GroupSpec::Torus(w) => AlgebraBasis::from_spanning(n, vec![torus_element(w)]),
        GroupSpec::Local(q) => {
            let gens = su2_generators();
            let els = (0..*q)
                .flat_map(|j| gens.iter().map(move |g| embed_qubit(g, j, *q)))
                .collect();
            AlgebraBasis::from_spanning(n, els)
        }
        GroupSpec::TensorProd(a, b) => hat_sum(&algebra_basis(a), &algebra_basis(b)),
        GroupSpec::DirectSum(a, b) => block_sum(&algebra_basis(a), &algebra_basis(b)),
    }
}

/// Maximal Abelian subalgebra of diagonal matrices in the Lie algebra of `spec`.
pub fn torus_basis(spec: &GroupSpec) -> AlgebraBasis {
    let n = spec.ambient_dim();
    match spec {
        GroupSpec::FullUnitary(n) => AlgebraBasis::from_spanning(*n, diagonal_algebra(*n, false)),
        GroupSpec::SpecialUnitary(n) => AlgebraBasis::from_spanning(*n, diagonal_algebra(*n, true)),
        GroupSpec::Torus(w) => AlgebraBasis::from_spanning(n, vec![torus_element(w)]),
        GroupSpec::Local(q) => {
            let z = ComplexMatrix::diag(&[I, -I]);
            let els = (0..*q).map(|j| embed_qubit(&z, j, *q)).collect();
            AlgebraBasis::from_spanning(n, els)
        }
        GroupSpec::TensorProd(a, b) => hat_sum(&torus_basis(a), &torus_basis(b)),
        GroupSpec::DirectSum(a, b) => block_sum(&torus_basis(a), &torus_basis(b)),
    }
}

/// Whether the skew-Hermitian `omega` lies in the Lie algebra of `spec`.
pub fn contains_algebra(spec: &GroupSpec, omega: &ComplexMatrix) -> Result<bool> {
    if omega.dim() != spec.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.ambient_dim(),
            found: omega.dim(),
        });
    }
    let scale = omega.frobenius_norm().max(1.0);
    if !omega.is_skew_hermitian(TAU_EXACT * scale) {
        return Err(Error::Structure("skew-Hermitian"));
    }
    Ok(algebra_basis(spec).residual(omega) <= TAU_FEAS * scale)
}
