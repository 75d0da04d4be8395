//! Rotational symmetry of `K`-orbits decided as linear feasibility over the Lie algebra of `K`.
//!
//! `A` has a weakly rotationally symmetric `K`-orbit iff `[Omega, A] = i phi A`
//! for some `Omega` in the algebra and `phi != 0`. Rescaling `Omega` fixes `phi = 1`,
//! which leaves a real linear system in the coordinates of `Omega`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::config::{Tolerances, TAU_EXACT, TAU_FEAS, TAU_NILP};
use crate::error::{Error, Result};
use crate::groups::{algebra_basis, residual_against, AlgebraBasis, GroupSpec};
use crate::linalg::{
    commutator, svd_real, hermitian_eigen, real_lstsq, realified_columns, singular_values, BlockPartition,
    ComplexMatrix, C64, I,
};
use crate::rng::{real_normal, rng_from_seed};

/// Witness `(Omega, phi)` with `[Omega, A] = i phi A`, or the least-squares refutation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetryCertificate {
    pub verdict: bool,
    pub omega: Option<ComplexMatrix>,
    pub phi: f64,
    pub residual: f64,
    /// Singular values of the realified system, descending.
    pub singular_values: Vec<f64>,
}

impl SymmetryCertificate {
    /// `||[Omega, A] - i phi A||_F` for the stored witness.
    pub fn witness_error(&self, a: &ComplexMatrix) -> Option<f64> {
        self.omega.as_ref().map(|w| {
            (commutator(w, a).expect("same dims") - a.scale(I * self.phi)).frobenius_norm()
        })
    }
}

fn ensure_nonzero(a: &ComplexMatrix) -> Result<()> {
    if a.frobenius_norm() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(())
}

/// Decides whether some `Omega` in the algebra of `spec` satisfies `[Omega, A] = i A`.
pub fn detect_weak_symmetry(a: &ComplexMatrix, spec: &GroupSpec) -> Result<SymmetryCertificate> {
    detect_weak_symmetry_with(a, spec, &Tolerances::default())
}

pub fn detect_weak_symmetry_with(
    a: &ComplexMatrix,
    spec: &GroupSpec,
    tol: &Tolerances,
) -> Result<SymmetryCertificate> {
    if spec.ambient_dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.ambient_dim(),
            found: a.dim(),
        });
    }
    let basis = algebra_basis(spec);
    // orthonormal coordinates make the least-norm solution the least Frobenius-norm witness
    let ortho = AlgebraBasis::new(basis.dim_ambient(), basis.orthonormalized())?;
    solve_in_algebra(a, &ortho, tol.feas)
}

pub(crate) fn solve_in_algebra(
    a: &ComplexMatrix,
    basis: &AlgebraBasis,
    feas: f64,
) -> Result<SymmetryCertificate> {
    ensure_nonzero(a)?;
    let norm = a.frobenius_norm();
    let images: Vec<ComplexMatrix> = basis
        .elements()
        .iter()
        .map(|b| b * a - a * b)
        .collect();
    let target = DVector::from_vec(a.scale(I).realify());
    if images.is_empty() {
        return Ok(SymmetryCertificate {
            verdict: false,
            omega: None,
            phi: 1.0,
            residual: norm,
            singular_values: Vec::new(),
        });
    }
    let ls = real_lstsq(realified_columns(&images), &target, 1e-12);
    let coeffs: Vec<f64> = ls.x.iter().copied().collect();
    let omega = basis.combine(&coeffs);
    // re-evaluate on the assembled witness rather than trusting the solver residual
    let residual = (commutator(&omega, a)? - a.scale(I)).frobenius_norm();
    let verdict = residual <= feas * norm;
    Ok(SymmetryCertificate {
        verdict,
        omega: verdict.then_some(omega),
        phi: 1.0,
        residual,
        singular_values: ls.singular_values,
    })
}

/// A diagonal skew-Hermitian `Delta = i diag(lambda)` and an eigenvalue `phi`.
#[derive(Clone, Debug)]
pub struct EigenspaceQuery {
    delta: ComplexMatrix,
    phi: f64,
}

impl EigenspaceQuery {
    pub fn new(delta: ComplexMatrix, phi: f64) -> Result<Self> {
        let scale = delta.frobenius_norm().max(1.0);
        if !delta.is_diagonal(TAU_EXACT * scale) {
            return Err(Error::Structure("diagonal"));
        }
        if !delta.is_skew_hermitian(TAU_EXACT * scale) {
            return Err(Error::Structure("skew-Hermitian"));
        }
        Ok(Self { delta, phi })
    }

    pub fn from_lambdas(lambdas: &[f64], phi: f64) -> Self {
        let d: Vec<C64> = lambdas.iter().map(|&l| I * l).collect();
        Self {
            delta: ComplexMatrix::diag(&d),
            phi,
        }
    }

    pub fn delta(&self) -> &ComplexMatrix {
        &self.delta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.delta.diagonal().iter().map(|z| z.im).collect()
    }
}

/// Positions `(k, l)` (zero-based) with `lambda_k - lambda_l = phi`.
pub fn eigenspace_pairs(lambdas: &[f64], phi: f64, tol: f64) -> Vec<(usize, usize)> {
    let n = lambdas.len();
    (0..n)
        .flat_map(|k| (0..n).map(move |l| (k, l)))
        .filter(|&(k, l)| (lambdas[k] - lambdas[l] - phi).abs() <= tol)
        .collect()
}

/// Matrix units spanning the eigenspace of `ad_Delta` for the eigenvalue `i phi`.
pub fn eigenspace_basis(q: &EigenspaceQuery, n: usize) -> Result<Vec<ComplexMatrix>> {
    if q.delta.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: q.delta.dim(),
        });
    }
    let tol = TAU_EXACT * q.phi.abs().max(1.0);
    Ok(eigenspace_pairs(&q.lambdas(), q.phi, tol)
        .into_iter()
        .map(|(k, l)| ComplexMatrix::unit(n, k, l))
        .collect())
}

/// `M = U A U^†` in block-shift form, with the data that produced it.
#[derive(Clone, Debug)]
pub struct BlockShiftForm {
    pub u: ComplexMatrix,
    pub partition: BlockPartition,
    pub m: ComplexMatrix,
    pub omega: ComplexMatrix,
    pub off_shift_mass: f64,
}

#[derive(Clone, Debug)]
pub enum BlockShift {
    Found(BlockShiftForm),
    Refuted(SymmetryCertificate),
}

/// Unitary similarity of `A` to a block-shift matrix, read off from a `u(N)` witness.
///
/// Eigenvalues of `-i Omega` closer than `1e-6` times their spread are merged.
/// Values that differ by exactly one form chains; within each chain consecutive
/// values go to consecutive blocks, and all chains end in the last block. `M`
/// can only be nonzero where an eigenvalue exceeds another by one, i.e. between
/// consecutive chain members, so `M_kl = 0` unless `block(k) = block(l) + 1`.
pub fn blockshift_canonical(a: &ComplexMatrix) -> Result<BlockShift> {
    ensure_nonzero(a)?;
    let n = a.dim();
    let cert = detect_weak_symmetry(a, &GroupSpec::FullUnitary(n))?;
    let Some(omega) = cert.omega.clone() else {
        return Ok(BlockShift::Refuted(cert));
    };
    let d_mat = omega.scale(-I);
    let (vals, vecs) = hermitian_eigen(&d_mat);
    let clusters = cluster_eigenvalues(&vals);
    let levels = chain_levels(&clusters.iter().map(|c| c.value).collect::<Vec<_>>());
    let num_levels = levels.iter().copied().max().unwrap_or(0) + 1;

    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut sizes = vec![0usize; num_levels];
    for (lvl, size) in sizes.iter_mut().enumerate() {
        let members: Vec<usize> = clusters
            .iter()
            .zip(&levels)
            .filter(|&(_, &l)| l == lvl)
            .flat_map(|(c, _)| c.members.iter().copied())
            .collect();
        for v in level_vectors(&vecs, &members) {
            columns.push(v);
            *size += 1;
        }
    }
    // rows of U are the adjoints of the ordered eigenvectors
    let u = ComplexMatrix::from_fn(n, |i, j| columns[i][j].conj());
    let m = u.conjugate(a);
    let partition = BlockPartition::new(sizes)?;
    let mass = partition.off_shift_mass(&m);
    if mass > TAU_FEAS * a.frobenius_norm() {
        return Ok(BlockShift::Refuted(SymmetryCertificate {
            verdict: false,
            residual: mass,
            ..cert
        }));
    }
    Ok(BlockShift::Found(BlockShiftForm {
        u,
        partition,
        m,
        omega,
        off_shift_mass: mass,
    }))
}

struct Cluster {
    value: f64,
    members: Vec<usize>,
}

/// Groups sorted eigenvalues whose gaps are below `1e-6 * spread`.
fn cluster_eigenvalues(vals: &[f64]) -> Vec<Cluster> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&p, &q| vals[p].total_cmp(&vals[q]));
    let spread = vals[order[order.len() - 1]] - vals[order[0]];
    let gap = 1e-6 * spread.max(1.0);
    let mut out: Vec<Cluster> = Vec::new();
    for &k in &order {
        match out.last_mut() {
            Some(c) if vals[k] - vals[*c.members.last().unwrap()] <= gap => c.members.push(k),
            _ => out.push(Cluster {
                value: vals[k],
                members: vec![k],
            }),
        }
    }
    for c in &mut out {
        c.value = c.members.iter().map(|&k| vals[k]).sum::<f64>() / c.members.len() as f64;
    }
    out
}

/// Block level of every (ascending) cluster value: chains `v, v + 1, v + 2, ...`
/// are right-aligned so that every chain ends in the last level.
fn chain_levels(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let tol = 1e-6;
    let next: Vec<Option<usize>> = (0..n)
        .map(|i| (0..n).find(|&j| (values[j] - values[i] - 1.0).abs() <= tol))
        .collect();
    let has_prev: Vec<bool> = (0..n).map(|j| next.iter().any(|&x| x == Some(j))).collect();
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for start in (0..n).filter(|&i| !has_prev[i]) {
        let mut chain = vec![start];
        while let Some(j) = next[*chain.last().unwrap()] {
            chain.push(j);
        }
        chains.push(chain);
    }
    let longest = chains.iter().map(Vec::len).max().unwrap_or(1);
    let mut level = vec![0usize; n];
    for chain in &chains {
        let offset = longest - chain.len();
        for (pos, &i) in chain.iter().enumerate() {
            level[i] = offset + pos;
        }
    }
    level
}

/// Orthonormal vectors spanning one block; coordinate vectors when the block
/// is spanned by them, so canonical forms stay in the given basis.
fn level_vectors(vecs: &ComplexMatrix, members: &[usize]) -> Vec<Vec<C64>> {
    let n = vecs.dim();
    let mut weight = vec![0.0f64; n];
    for &k in members {
        for (i, w) in weight.iter_mut().enumerate() {
            *w += vecs[(i, k)].norm_sqr();
        }
    }
    // the projector is diagonal with 0/1 entries iff the vectors span coordinate axes
    let coords: Vec<usize> = (0..n).filter(|&i| weight[i] > 0.5).collect();
    let is_coordinate = coords.len() == members.len()
        && weight.iter().all(|&w| w < 1e-12 || (w - 1.0).abs() < 1e-12)
        && {
            let mut off = 0.0;
            for &p in &coords {
                for &q in &coords {
                    if p < q {
                        let s: C64 = members.iter().map(|&k| vecs[(p, k)] * vecs[(q, k)].conj()).sum();
                        off += s.norm_sqr();
                    }
                }
            }
            off < 1e-24
        };
    if is_coordinate {
        coords
            .into_iter()
            .map(|i| (0..n).map(|r| if r == i { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect())
            .collect()
    } else {
        members
            .iter()
            .map(|&k| (0..n).map(|r| vecs[(r, k)]).collect())
            .collect()
    }
}

/// Exact `I_s(A) = 1` decision and a witness-based upper bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationIndexResult {
    pub is_one: bool,
    pub upper_bound: Option<usize>,
    pub witness: Option<(ComplexMatrix, f64)>,
}

/// `I_s(A) = 1` iff `A` is unitarily similar to a multiple of a matrix unit
/// `E_ij` (`i != j`), i.e. rank one with `A^2 = 0`.
///
/// The upper bound is the smallest `dim E_1(Omega)` over the minimal-norm
/// witness `Omega_0` of `[Omega, A] = i A` and a few perturbations
/// `Omega_0 + Z` with `Z` a random skew-Hermitian matrix commuting with `A`.
/// These are witnesses too, and generic ones split accidental coincidences.
pub fn separation_index(a: &ComplexMatrix) -> Result<SeparationIndexResult> {
    ensure_nonzero(a)?;
    let norm = a.frobenius_norm();
    let sv = singular_values(a);
    let rank_one = sv.get(1).is_none_or(|&s| s <= TAU_NILP * sv[0]);
    let square_zero = (a * a).frobenius_norm() <= TAU_NILP * norm * norm;
    let is_one = rank_one && square_zero;

    let n = a.dim();
    let cert = detect_weak_symmetry(a, &GroupSpec::FullUnitary(n))?;
    let Some(omega0) = cert.omega else {
        return Ok(SeparationIndexResult {
            is_one,
            upper_bound: None,
            witness: None,
        });
    };
    let centralizer = skew_centralizer(a);
    let mut rng = rng_from_seed(0x5EED);
    let mut best = (eigenspace_dim(&omega0), omega0.clone());
    for _ in 0..8 {
        if centralizer.is_empty() {
            break;
        }
        let mut z = ComplexMatrix::zeros(n);
        for b in &centralizer {
            z = z + b.scale_real(real_normal(&mut rng));
        }
        let cand = &omega0 + &z;
        let d = eigenspace_dim(&cand);
        if d < best.0 {
            best = (d, cand);
        }
    }
    Ok(SeparationIndexResult {
        is_one,
        upper_bound: Some(if is_one { 1 } else { best.0 }),
        witness: Some((best.1, 1.0)),
    })
}

/// `dim E_1(Omega)` from the spectrum of `-i Omega`.
fn eigenspace_dim(omega: &ComplexMatrix) -> usize {
    let (vals, _) = hermitian_eigen(&omega.scale(-I));
    eigenspace_pairs(&vals, 1.0, 1e-6).len()
}

/// Orthonormal basis of `{ Z in u(N) : [Z, A] = 0 }`.
fn skew_centralizer(a: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let n = a.dim();
    let basis = algebra_basis(&GroupSpec::FullUnitary(n)).orthonormalized();
    let images: Vec<ComplexMatrix> = basis.iter().map(|b| b * a - a * b).collect();
    let m = realified_columns(&images);
    let svd = svd_real(&m);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().fold(0.0f64, |p, &q| p.max(q));
    let cols = basis.len();
    let mut out = Vec::new();
    for r in 0..v_t.nrows() {
        if svd.singular_values[r] <= 1e-10 * smax.max(1.0) {
            let mut z = ComplexMatrix::zeros(n);
            for (k, b) in basis.iter().enumerate().take(cols) {
                z = z + b.scale_real(v_t[(r, k)]);
            }
            out.push(z);
        }
    }
    out
}

/// The real Lie algebra generated by skew-Hermitian matrices, as an orthonormal basis.
pub fn lie_closure(generators: &[ComplexMatrix]) -> Result<AlgebraBasis> {
    let Some(first) = generators.first() else {
        return Err(Error::InvalidArgument("no generators".into()));
    };
    let n = first.dim();
    for g in generators {
        g.ensure_same_dim(first)?;
        if !g.is_skew_hermitian(TAU_EXACT * g.frobenius_norm().max(1.0)) {
            return Err(Error::Structure("skew-Hermitian"));
        }
    }
    let mut ortho: Vec<ComplexMatrix> = Vec::new();
    let add = |ortho: &mut Vec<ComplexMatrix>, x: &ComplexMatrix, scale: f64| -> bool {
        let nx = x.frobenius_norm();
        if nx <= TAU_EXACT * scale {
            return false;
        }
        let r = residual_against(ortho, x);
        let nr = r.frobenius_norm();
        if nr > TAU_EXACT * nx.max(scale) {
            ortho.push(r.scale_real(1.0 / nr));
            true
        } else {
            false
        }
    };
    for g in generators {
        add(&mut ortho, g, g.frobenius_norm().max(f64::MIN_POSITIVE));
    }
    // brackets of orthonormal elements have norm at most 2
    let mut done = 0;
    while done < ortho.len() {
        let k = done;
        let mut i = 0;
        while i < ortho.len() {
            let br = &ortho[k] * &ortho[i] - &ortho[i] * &ortho[k];
            add(&mut ortho, &br, 1.0);
            i += 1;
        }
        done += 1;
        if ortho.len() > n * n {
            return Err(Error::InvalidArgument("closure exceeded u(N)".into()));
        }
    }
    AlgebraBasis::new(n, ortho)
}

/// `A - A^†`, `i (A + A^†)` and `i [A, A^†]`.
pub fn su2_candidate_generators(a: &ComplexMatrix) -> [ComplexMatrix; 3] {
    let ad = a.adjoint();
    [
        a - &ad,
        (a + &ad).scale(I),
        (a * &ad - &ad * a).scale(I),
    ]
}

/// Structure constants `[X_i, X_j] = sum_k c[i][j][k] X_k`; fails if the span is not closed.
fn structure_constants(basis: &AlgebraBasis) -> Result<Vec<Vec<Vec<f64>>>> {
    let els = basis.elements();
    let d = els.len();
    let mut c = vec![vec![vec![0.0; d]; d]; d];
    for i in 0..d {
        for j in 0..d {
            let br = &els[i] * &els[j] - &els[j] * &els[i];
            let (coef, res) = basis.project(&br);
            let scale = els[i].frobenius_norm() * els[j].frobenius_norm();
            if res > TAU_FEAS * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Structure("closed under commutators"));
            }
            c[i][j] = coef;
        }
    }
    Ok(c)
}

/// Killing form `B(X_i, X_j) = tr(ad X_i ad X_j)`.
pub fn killing_form(basis: &AlgebraBasis) -> Result<DMatrix<f64>> {
    let c = structure_constants(basis)?;
    let d = c.len();
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let mut s = 0.0;
        for k in 0..d {
            for l in 0..d {
                s += c[i][k][l] * c[j][l][k];
            }
        }
        s
    }))
}

/// Three-dimensional with negative definite Killing form.
pub fn is_su2(basis: &AlgebraBasis) -> Result<bool> {
    let kf = killing_form(basis)?;
    if basis.len() != 3 {
        return Ok(false);
    }
    let scale = kf.norm();
    if scale == 0.0 {
        return Ok(false);
    }
    let eig = SymmetricEigen::new((&kf + kf.transpose()) * 0.5);
    Ok(eig.eigenvalues.iter().all(|&v| v < -1e-8 * scale))
}
