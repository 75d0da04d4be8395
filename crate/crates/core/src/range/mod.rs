//! Sampling and optimization of `W_K(C, A)`.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::TAU_EXACT;
use crate::error::{Error, Result};
use crate::groups::{algebra_basis, haar_sample, haar_sample_with_rng, GroupSpec};
use crate::linalg::{
    expm_skew_unchecked, fmt_f64, frobenius_inner, hermitian_eigen, matrix_to_json, real_inner,
    ComplexMatrix, C64,
};
use crate::rng::{derive_seed, rng_from_seed};

/// Largest number of pairs formed by the composition rules before subsampling.
pub const COMPOSE_CAP: usize = 1_000_000;

/// `tr(C^† U A U^†)`.
pub fn trace_point(c: &ComplexMatrix, a: &ComplexMatrix, u: &ComplexMatrix) -> Result<C64> {
    c.ensure_same_dim(a)?;
    c.ensure_same_dim(u)?;
    if !u.is_unitary(TAU_EXACT * (u.dim() as f64).sqrt()) {
        return Err(Error::Structure("unitary"));
    }
    frobenius_inner(c, &u.conjugate(a))
}

/// Hex SHA-256 of the canonical JSON encoding of `m`.
pub fn matrix_hash(m: &ComplexMatrix) -> String {
    let text = matrix_to_json(m).expect("finite matrix");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Finite sample of `W_K(C, A)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RangeCloud {
    pub points: Vec<C64>,
    pub spec: GroupSpec,
    pub seed: u64,
    pub count: usize,
    pub c_hash: String,
    pub a_hash: String,
}

impl RangeCloud {
    pub fn min_modulus(&self) -> f64 {
        self.points.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Writes `re,im` rows with 17 significant digits.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_points_csv(&self.points, path)
    }
}

pub fn write_points_csv(points: &[C64], path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "re,im")?;
    for z in points {
        writeln!(out, "{},{}", fmt_f64(z.re), fmt_f64(z.im))?;
    }
    out.flush()?;
    Ok(())
}

fn check_spec_dims(c: &ComplexMatrix, a: &ComplexMatrix, spec: &GroupSpec) -> Result<()> {
    c.ensure_same_dim(a)?;
    if spec.ambient_dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.ambient_dim(),
            found: a.dim(),
        });
    }
    Ok(())
}

/// `count` points `tr(C^† U_i A U_i^†)`, `U_i = haar_sample(spec, derive_seed(seed, i))`.
pub fn sample_range(
    c: &ComplexMatrix,
    a: &ComplexMatrix,
    spec: &GroupSpec,
    count: usize,
    seed: u64,
) -> Result<RangeCloud> {
    check_spec_dims(c, a, spec)?;
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let points = (0..count as u64)
        .map(|i| {
            let u = haar_sample(spec, derive_seed(seed, i));
            frobenius_inner(c, &u.conjugate(a)).expect("dimensions checked")
        })
        .collect();
    Ok(RangeCloud {
        points,
        spec: spec.clone(),
        seed,
        count,
        c_hash: matrix_hash(c),
        a_hash: matrix_hash(a),
    })
}

/// Samples `x^† A x` over product vectors `x = x_1 (x) ... (x) x_n` with Haar-uniform unit factors.
///
/// Equals `W_K(E_11, A)` for `K = SU(2)^{(x) n}`; the cloud records that `C`.
pub fn local_numerical_range(
    a: &ComplexMatrix,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<RangeCloud> {
    let spec = GroupSpec::Local(n);
    spec.validate()?;
    let e11 = ComplexMatrix::unit(a.dim(), 0, 0);
    check_spec_dims(&e11, a, &spec)?;
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let factor = GroupSpec::FullUnitary(2);
    let points = (0..count as u64)
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i));
            let mut x = vec![C64::new(1.0, 0.0)];
            for _ in 0..n {
                // first column of a Haar unitary is a uniform unit vector
                let u = haar_sample_with_rng(&factor, &mut rng);
                let v = [u[(0, 0)], u[(1, 0)]];
                x = x.iter().flat_map(|p| v.iter().map(move |q| p * q)).collect();
            }
            let mut acc = C64::new(0.0, 0.0);
            for (r, xr) in x.iter().enumerate() {
                for (s, xs) in x.iter().enumerate() {
                    acc += xr.conj() * a[(r, s)] * xs;
                }
            }
            acc
        })
        .collect();
    Ok(RangeCloud {
        points,
        spec,
        seed,
        count,
        c_hash: matrix_hash(&e11),
        a_hash: matrix_hash(a),
    })
}

/// Endpoints `(a, b)` of `W(C, A)` for Hermitian `C`, `A`.
pub fn hermitian_interval(c: &ComplexMatrix, a: &ComplexMatrix) -> Result<(f64, f64)> {
    c.ensure_same_dim(a)?;
    for m in [c, a] {
        if !m.is_hermitian(TAU_EXACT * m.frobenius_norm().max(1.0)) {
            return Err(Error::Structure("Hermitian"));
        }
    }
    let desc = |m: &ComplexMatrix| {
        let mut v = hermitian_eigen(m).0;
        v.sort_by(|x, y| y.total_cmp(x));
        v
    };
    let (alpha, gamma) = (desc(a), desc(c));
    let b = alpha.iter().zip(&gamma).map(|(x, y)| x * y).sum();
    let lo = alpha.iter().zip(gamma.iter().rev()).map(|(x, y)| x * y).sum();
    Ok((lo, b))
}

/// Interval of a direct sum from the intervals of its blocks.
pub fn sum_interval((a1, b1): (f64, f64), (a2, b2): (f64, f64)) -> (f64, f64) {
    (a1 + a2, b1 + b2)
}

/// Interval of a tensor product from the intervals of its factors: the extreme
/// values of the four endpoint products. When an interval contains negative
/// values `min/max {a1 a2, b1 b2}` alone is not enough.
pub fn product_interval((a1, b1): (f64, f64), (a2, b2): (f64, f64)) -> (f64, f64) {
    let p = [a1 * a2, a1 * b2, b1 * a2, b1 * b2];
    (
        p.iter().copied().fold(f64::INFINITY, f64::min),
        p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

/// Index pairs used by the composition rules: the full product when it has at
/// most `COMPOSE_CAP` entries. Otherwise every pair of hull vertices is kept
/// (so the hull of a composed sum is exact) and the remaining budget is filled
/// with pairs that use every first index equally often and spread the second
/// index with a stride coprime to `n2`.
fn pairing(w1: &[C64], w2: &[C64]) -> Vec<(usize, usize)> {
    let (n1, n2) = (w1.len(), w2.len());
    if n1.saturating_mul(n2) <= COMPOSE_CAP {
        return (0..n1).flat_map(|i| (0..n2).map(move |j| (i, j))).collect();
    }
    let (h1, h2) = (hull_indices(w1), hull_indices(w2));
    let mut pairs: Vec<(usize, usize)> = h1
        .iter()
        .flat_map(|&i| h2.iter().map(move |&j| (i, j)))
        .take(COMPOSE_CAP / 2)
        .collect();
    let rest = COMPOSE_CAP - pairs.len();
    let mut stride = ((n2 as f64) * 0.618_033_988_749_895) as usize | 1;
    while gcd(stride, n2) != 1 {
        stride += 2;
    }
    pairs.extend((0..rest).map(|k| (k * n1 / rest, k.wrapping_mul(stride) % n2)));
    pairs
}

fn hull_indices(points: &[C64]) -> Vec<usize> {
    let hull = crate::geometry::convex_hull(points);
    let mut idx: Vec<usize> = hull
        .iter()
        .filter_map(|h| points.iter().position(|p| p == h))
        .collect();
    idx.sort_unstable();
    idx
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn compose(
    w1: &RangeCloud,
    w2: &RangeCloud,
    op: impl Fn(C64, C64) -> C64,
    spec: GroupSpec,
    tag: &str,
) -> Result<RangeCloud> {
    if w1.points.is_empty() || w2.points.is_empty() {
        return Err(Error::InvalidArgument("cannot compose an empty cloud".into()));
    }
    let points: Vec<C64> = pairing(&w1.points, &w2.points)
        .into_iter()
        .map(|(i, j)| op(w1.points[i], w2.points[j]))
        .collect();
    Ok(RangeCloud {
        count: points.len(),
        points,
        spec,
        seed: derive_seed(w1.seed, w2.seed),
        c_hash: format!("{tag}({},{})", w1.c_hash, w2.c_hash),
        a_hash: format!("{tag}({},{})", w1.a_hash, w2.a_hash),
    })
}

/// Minkowski sum `W_1 + W_2`, the range of a direct sum.
pub fn compose_sum(w1: &RangeCloud, w2: &RangeCloud) -> Result<RangeCloud> {
    let spec = GroupSpec::sum(w1.spec.clone(), w2.spec.clone());
    compose(w1, w2, |x, y| x + y, spec, "sum")
}

/// Product set `W_1 * W_2`, the range of a tensor product.
pub fn compose_product(w1: &RangeCloud, w2: &RangeCloud) -> Result<RangeCloud> {
    let spec = GroupSpec::prod(w1.spec.clone(), w2.spec.clone());
    compose(w1, w2, |x, y| x * y, spec, "prod")
}

/// Result of maximizing `|tr(C^† U A U^†)|` over `K`.
#[derive(Clone, Debug, Serialize)]
pub struct RadiusResult {
    pub value: f64,
    pub maximizer: ComplexMatrix,
    /// Starts actually run; fewer than requested when a start attains `||C|| ||A||`.
    pub restarts: usize,
    pub converged: bool,
}

/// Iteration limits for the ascent on `K`.
#[derive(Clone, Copy, Debug)]
pub struct AscentOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Clone, Copy)]
enum Objective {
    /// `|z|^2`
    ModulusSq,
    /// `Re(conj(w) z)`
    Directional(C64),
}

impl Objective {
    fn value(self, z: C64) -> f64 {
        match self {
            Self::ModulusSq => z.norm_sqr(),
            Self::Directional(w) => (w.conj() * z).re,
        }
    }

    /// Weight `y` with `df(B) = Re( y * tr([X, C^†] B) )`.
    fn weight(self, z: C64) -> C64 {
        match self {
            Self::ModulusSq => z.conj() * 2.0,
            Self::Directional(w) => w.conj(),
        }
    }
}

struct Ascent<'a> {
    c: &'a ComplexMatrix,
    a: &'a ComplexMatrix,
    basis: Vec<ComplexMatrix>,
    objective: Objective,
    opts: AscentOptions,
}

struct AscentEnd {
    u: ComplexMatrix,
    z: C64,
    converged: bool,
}

impl Ascent<'_> {
    fn point(&self, u: &ComplexMatrix) -> (C64, ComplexMatrix) {
        let x = u.conjugate(self.a);
        (frobenius_inner(self.c, &x).expect("same dims"), x)
    }

    /// Riemannian gradient in the Lie algebra and its norm.
    fn gradient(&self, z: C64, x: &ComplexMatrix) -> (ComplexMatrix, f64) {
        let cd = self.c.adjoint();
        // df(B) = Re tr(Y B) = <Y^†, B>
        let y = (x * &cd - &cd * x).scale(self.objective.weight(z)).adjoint();
        let mut g = ComplexMatrix::zeros(x.dim());
        let mut norm_sq = 0.0;
        for b in &self.basis {
            let coef = real_inner(&y, b);
            if coef != 0.0 {
                g = g + b.scale_real(coef);
                norm_sq += coef * coef;
            }
        }
        (g, norm_sq.sqrt())
    }

    fn run(&self, start: ComplexMatrix) -> AscentEnd {
        let mut u = start;
        let (mut z, mut x) = self.point(&u);
        let mut f = self.objective.value(z);
        // previous gradient and accepted step, for Barzilai-Borwein step lengths
        let mut prev: Option<(ComplexMatrix, f64)> = None;
        for _ in 0..self.opts.max_iter {
            let (g, gnorm) = self.gradient(z, &x);
            if gnorm <= self.opts.grad_tol {
                return AscentEnd { u, z, converged: true };
            }
            // first trial rotates by about half a radian
            let mut s = match &prev {
                None => 0.5 / gnorm,
                Some((gp, sp)) => {
                    let dy = gp - &g;
                    let curv = sp * real_inner(gp, &dy);
                    let ss = sp * sp * real_inner(gp, gp);
                    if curv > 0.0 { (ss / curv).min(1e3 / gnorm) } else { 2.0 * sp }
                }
            };
            let mut accepted = false;
            for _ in 0..60 {
                let cand = expm_skew_unchecked(&g, s) * &u;
                let (zc, xc) = self.point(&cand);
                let fc = self.objective.value(zc);
                if fc >= f + 1e-4 * s * gnorm * gnorm {
                    u = cand;
                    z = zc;
                    x = xc;
                    f = fc;
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            if !accepted {
                // no ascent possible at working precision
                let (_, gnorm) = self.gradient(z, &x);
                return AscentEnd {
                    u,
                    z,
                    converged: gnorm <= self.opts.grad_tol,
                };
            }
            prev = Some((g, s));
        }
        let (_, gnorm) = self.gradient(z, &x);
        AscentEnd {
            u,
            z,
            converged: gnorm <= self.opts.grad_tol,
        }
    }
}

fn orthonormal_algebra(spec: &GroupSpec) -> Vec<ComplexMatrix> {
    algebra_basis(spec).orthonormalized()
}

/// `r_K(C, A)` by gradient ascent of `|tr(C^† U A U^†)|^2` over `K`.
///
/// Restart 0 starts at the identity, the others at `haar_sample(spec, derive_seed(seed, r))`.
pub fn radius(
    c: &ComplexMatrix,
    a: &ComplexMatrix,
    spec: &GroupSpec,
    restarts: usize,
    seed: u64,
) -> Result<RadiusResult> {
    radius_with(c, a, spec, restarts, seed, AscentOptions::default())
}

pub fn radius_with(
    c: &ComplexMatrix,
    a: &ComplexMatrix,
    spec: &GroupSpec,
    restarts: usize,
    seed: u64,
    opts: AscentOptions,
) -> Result<RadiusResult> {
    check_spec_dims(c, a, spec)?;
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let ascent = Ascent {
        c,
        a,
        basis: orthonormal_algebra(spec),
        objective: Objective::ModulusSq,
        opts,
    };
    // |tr(C^† X)| <= ||C|| ||A||; a start attaining it needs no further restarts
    let bound = c.frobenius_norm() * a.frobenius_norm();
    let mut best: Option<AscentEnd> = None;
    let mut performed = 0;
    for r in 0..restarts {
        if best.as_ref().is_some_and(|b| b.z.norm() >= bound * (1.0 - 4.0 * f64::EPSILON)) {
            break;
        }
        let start = if r == 0 {
            ComplexMatrix::identity(a.dim())
        } else {
            haar_sample(spec, derive_seed(seed, r as u64))
        };
        let end = ascent.run(start);
        performed += 1;
        if best.as_ref().is_none_or(|b| end.z.norm() > b.z.norm()) {
            best = Some(end);
        }
    }
    let best = best.expect("at least one restart");
    Ok(RadiusResult {
        value: best.z.norm(),
        maximizer: best.u,
        restarts: performed,
        converged: best.converged,
    })
}

/// Points of `W_K(C, A)` maximizing `Re(e^{-i theta} z)` for `directions` equally
/// spaced angles, each from `restarts` starts. These approximate the support
/// points of the set and complement random sampling near its outer boundary.
pub fn support_points(
    c: &ComplexMatrix,
    a: &ComplexMatrix,
    spec: &GroupSpec,
    directions: usize,
    restarts: usize,
    seed: u64,
) -> Result<Vec<C64>> {
    check_spec_dims(c, a, spec)?;
    let basis = orthonormal_algebra(spec);
    let mut out = Vec::with_capacity(directions);
    for d in 0..directions {
        let theta = std::f64::consts::TAU * d as f64 / directions as f64;
        let ascent = Ascent {
            c,
            a,
            basis: basis.clone(),
            objective: Objective::Directional(C64::from_polar(1.0, theta)),
            opts: AscentOptions {
                max_iter: 200,
                grad_tol: 1e-10,
            },
        };
        let best = (0..restarts.max(1))
            .map(|r| {
                let s = derive_seed(seed, (d * restarts.max(1) + r) as u64);
                ascent.run(haar_sample(spec, s)).z
            })
            .max_by(|p, q| {
                let w = C64::from_polar(1.0, -theta);
                (w * p).re.total_cmp(&(w * q).re)
            })
            .expect("at least one start");
        out.push(best);
    }
    Ok(out)
}
