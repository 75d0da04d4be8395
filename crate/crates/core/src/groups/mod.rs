//! Subgroups `K` of `U(N)`: symbolic specs, Lie algebra bases and seeded sampling.

mod algebra;
mod spec;

pub use algebra::{algebra_basis, contains_algebra, torus_basis, AlgebraBasis};
pub(crate) use algebra::residual_against;
#[cfg(test)]
pub(crate) use algebra::hat_sum;
pub use spec::GroupSpec;

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::linalg::{direct_sum, kron, ComplexMatrix, C64};
use crate::rng::{complex_normal, real_normal, rng_from_seed, Rng};

/// A random element of the group described by `spec`, deterministic in `seed`.
pub fn haar_sample(spec: &GroupSpec, seed: u64) -> ComplexMatrix {
    haar_sample_with_rng(spec, &mut rng_from_seed(seed))
}

pub fn haar_sample_with_rng(spec: &GroupSpec, rng: &mut Rng) -> ComplexMatrix {
    match spec {
        GroupSpec::FullUnitary(n) => haar_unitary(*n, rng),
        GroupSpec::SpecialUnitary(2) => haar_su2(rng),
        GroupSpec::SpecialUnitary(n) => {
            let u = haar_unitary(*n, rng);
            let det = u.determinant();
            let root = C64::from_polar(1.0, -det.arg() / *n as f64);
            u.scale(root)
        }
        GroupSpec::Torus(w) => {
            let phi = rng.random::<f64>() * TAU;
            let d: Vec<C64> = w
                .iter()
                .map(|&a| C64::from_polar(1.0, a as f64 * phi))
                .collect();
            ComplexMatrix::diag(&d)
        }
        GroupSpec::Local(q) => {
            let mut out = haar_su2(rng);
            for _ in 1..*q {
                out = kron(&out, &haar_su2(rng));
            }
            out
        }
        GroupSpec::TensorProd(a, b) => {
            let ua = haar_sample_with_rng(a, rng);
            kron(&ua, &haar_sample_with_rng(b, rng))
        }
        GroupSpec::DirectSum(a, b) => {
            let ua = haar_sample_with_rng(a, rng);
            direct_sum(&ua, &haar_sample_with_rng(b, rng))
        }
    }
}

/// Haar unitary: QR of a Ginibre matrix with the phases of `diag(R)` moved into `Q`.
fn haar_unitary(n: usize, rng: &mut Rng) -> ComplexMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let q = DMatrix::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        q[(i, j)] * ph
    });
    ComplexMatrix::from_dmatrix_unchecked(q)
}

/// Haar element of SU(2) from a normalized Gaussian quaternion.
fn haar_su2(rng: &mut Rng) -> ComplexMatrix {
    let mut v = [0.0f64; 4];
    let mut norm = 0.0;
    while norm < 1e-12 {
        for x in &mut v {
            *x = real_normal(rng);
        }
        norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    let [a, b, c, d] = v.map(|x| x / norm);
    let alpha = C64::new(a, b);
    let beta = C64::new(c, d);
    ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => alpha,
        (0, 1) => beta,
        (1, 0) => -beta.conj(),
        _ => alpha.conj(),
    })
}
