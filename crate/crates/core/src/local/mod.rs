//! The local group `SU(2)^{(x)n}`: exact torus feasibility, the 4x4 case
//! classification, signed local permutations and the block-shift conjecture.

mod homotopy;
mod perm;
pub mod rational;

pub use homotopy::{homotopy_check, local_torus_coordinates, HomotopyCheck};
pub use perm::{
    block_shift_levels, conjecture_check, invariance_check_etloc, perm_group_ex, random_etloc_element,
    p_out, ConjectureOutcome, PermGroupEx, ShiftPattern, SignedPerm,
};

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::config::{TAU_EXACT, TAU_FEAS};
use crate::error::{Error, Result};
use crate::groups::{algebra_basis, haar_sample, GroupSpec};
use crate::linalg::{expm_skew_unchecked, ComplexMatrix, C64, I};
use crate::rng::derive_seed;
use crate::symmetry::SymmetryCertificate;
use rational::{q, to_f64, Q};

/// Diagonal of `Z` on qubit `j` (most significant first).
pub fn z_diagonal(j: usize, n: usize) -> Vec<i64> {
    (0..1usize << n)
        .map(|k| if (k >> (n - 1 - j)) & 1 == 0 { 1 } else { -1 })
        .collect()
}

/// `X_loc mu = 0` (torus membership of `i diag(mu)`) and `X_ad mu = phi (1, ..., 1)`.
#[derive(Clone, Debug)]
pub struct FeasibilitySystem {
    pub n: usize,
    /// `2^n - n` rows spanning the orthogonal complement of the `Z` diagonals.
    pub x_loc: Vec<Vec<Q>>,
    /// One row `e_k - e_l` per nonzero off-diagonal entry `(k, l)` of `A`.
    pub x_ad: Vec<Vec<i8>>,
    pub support: Vec<(usize, usize)>,
}

impl FeasibilitySystem {
    pub fn new(n: usize, support: Vec<(usize, usize)>) -> Self {
        let dim = 1usize << n;
        let zs: Vec<Vec<Q>> = (0..n)
            .map(|j| z_diagonal(j, n).into_iter().map(q).collect())
            .collect();
        let x_loc = rational::kernel(&zs, dim);
        let x_ad = support
            .iter()
            .map(|&(k, l)| {
                let mut row = vec![0i8; dim];
                row[k] = 1;
                row[l] = -1;
                row
            })
            .collect();
        Self {
            n,
            x_loc,
            x_ad,
            support,
        }
    }

    /// Exact solution with `phi = 1` and free variables set to zero.
    pub fn solve(&self) -> Option<Vec<Q>> {
        let dim = 1usize << self.n;
        let mut rows = self.x_loc.clone();
        let mut rhs = vec![Q::zero(); rows.len()];
        for r in &self.x_ad {
            rows.push(r.iter().map(|&v| q(v as i64)).collect());
            rhs.push(Q::one());
        }
        if rows.is_empty() {
            return Some(vec![Q::zero(); dim]);
        }
        rational::solve(&rows, &rhs)
    }
}

/// Positions of entries above `TAU_EXACT ||A||_F` off the diagonal.
pub fn support_of(a: &ComplexMatrix) -> Vec<(usize, usize)> {
    let thresh = TAU_EXACT * a.frobenius_norm();
    let n = a.dim();
    (0..n)
        .flat_map(|k| (0..n).map(move |l| (k, l)))
        .filter(|&(k, l)| k != l && a[(k, l)].norm() > thresh)
        .collect()
}

/// Floating certificate plus the exact rational witness `mu` (`Delta = i diag(mu)`, `phi = 1`).
#[derive(Clone, Debug)]
pub struct TlocCertificate {
    pub certificate: SymmetryCertificate,
    pub mu: Option<Vec<Q>>,
    pub system: FeasibilitySystem,
}

impl TlocCertificate {
    pub fn feasible(&self) -> bool {
        self.certificate.verdict
    }

    /// `(lambda, mu)` of `Delta = i diag(lambda, mu, -mu, -lambda)` when `n = 2`.
    pub fn lambda_mu(&self) -> Option<(Q, Q)> {
        match (&self.mu, self.system.n) {
            (Some(m), 2) => Some((m[0].clone(), m[1].clone())),
            _ => None,
        }
    }
}

/// Decides `[Delta, A] = i A` for `Delta` in the local torus by exact elimination.
pub fn tloc_feasibility(a: &ComplexMatrix, n: usize) -> Result<TlocCertificate> {
    let dim = 1usize << n;
    if a.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: a.dim(),
        });
    }
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    if a.diagonal().iter().any(|z| z.norm() > TAU_EXACT * norm) {
        return Err(Error::Precondition("diagonal of A must vanish".into()));
    }
    let system = FeasibilitySystem::new(n, support_of(a));
    let mu = system.solve();
    let certificate = match &mu {
        Some(m) => {
            let omega = ComplexMatrix::diag(&m.iter().map(|x| I * to_f64(x)).collect::<Vec<_>>());
            let residual = (&omega * a - a * &omega - a.scale(I)).frobenius_norm();
            let verdict = residual <= TAU_FEAS * norm;
            SymmetryCertificate {
                verdict,
                omega: verdict.then_some(omega),
                phi: 1.0,
                residual,
                singular_values: Vec::new(),
            }
        }
        None => SymmetryCertificate {
            verdict: false,
            omega: None,
            phi: 1.0,
            residual: norm,
            singular_values: Vec::new(),
        },
    };
    Ok(TlocCertificate {
        certificate,
        mu,
        system,
    })
}

/// One of the 16 tabulated 4x4 patterns or its transpose.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaseLabel {
    pub index: u8,
    pub transposed: bool,
}

/// Nonzero positions (1-based) of the 16 patterns.
const PATTERNS: [&[(usize, usize)]; 16] = [
    &[(2, 1), (4, 3)],
    &[(3, 1), (4, 2)],
    &[(4, 1)],
    &[(3, 2)],
    &[(2, 1), (3, 1), (4, 2), (4, 3)],
    &[(1, 3), (2, 1), (2, 4), (4, 3)],
    &[(2, 1), (4, 1), (4, 3)],
    &[(1, 4), (2, 1), (4, 3)],
    &[(2, 1), (3, 2), (4, 3)],
    &[(2, 1), (2, 3), (4, 3)],
    &[(3, 1), (4, 1), (4, 2)],
    &[(1, 4), (3, 1), (4, 2)],
    &[(3, 1), (3, 2), (4, 2)],
    &[(2, 3), (3, 1), (4, 2)],
    &[(3, 1), (3, 2), (4, 1), (4, 2)],
    &[(2, 1), (2, 3), (4, 1), (4, 3)],
];

/// Linear relations `a lambda + b mu + c phi = 0` of each untransposed row.
const RELATIONS: [&[[i64; 3]]; 16] = [
    &[[1, -1, 1]],
    &[[1, 1, 1]],
    &[[2, 0, 1]],
    &[[0, 2, 1]],
    &[[1, -1, 1], [1, 1, 1]],
    &[[1, -1, 1], [-1, -1, 1]],
    &[[1, -1, 1], [2, 0, 1]],
    &[[1, -1, 1], [-2, 0, 1]],
    &[[1, -1, 1], [0, 2, 1]],
    &[[1, -1, 1], [0, -2, 1]],
    &[[1, 1, 1], [2, 0, 1]],
    &[[1, 1, 1], [-2, 0, 1]],
    &[[1, 1, 1], [0, 2, 1]],
    &[[1, 1, 1], [0, -2, 1]],
    &[[2, 0, 1], [0, 2, 1]],
    &[[2, 0, 1], [0, -2, 1]],
];

impl CaseLabel {
    pub fn new(index: u8, transposed: bool) -> Result<Self> {
        if !(1..=16).contains(&index) {
            return Err(Error::InvalidArgument(format!("case index {index} not in 1..=16")));
        }
        Ok(Self { index, transposed })
    }

    /// All 32 labels, untransposed first.
    pub fn all() -> Vec<Self> {
        [false, true]
            .into_iter()
            .flat_map(|t| (1..=16).map(move |i| Self { index: i, transposed: t }))
            .collect()
    }

    /// Zero-based positions allowed to be nonzero.
    pub fn pattern(&self) -> Vec<(usize, usize)> {
        PATTERNS[self.index as usize - 1]
            .iter()
            .map(|&(r, c)| if self.transposed { (c - 1, r - 1) } else { (r - 1, c - 1) })
            .collect()
    }

    /// Relations on `(lambda, mu, phi)`; transposition flips the sign of `phi`.
    pub fn relations(&self) -> Vec<[i64; 3]> {
        RELATIONS[self.index as usize - 1]
            .iter()
            .map(|&[a, b, c]| [a, b, if self.transposed { -c } else { c }])
            .collect()
    }

    pub fn relations_hold(&self, lambda: &Q, mu: &Q, phi: &Q) -> bool {
        self.relations()
            .iter()
            .all(|&[a, b, c]| (q(a) * lambda + q(b) * mu + q(c) * phi).is_zero())
    }

    /// Matrix with the given entries on the pattern, in pattern order.
    pub fn instantiate(&self, entries: &[C64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4);
        for (&(r, c), &z) in self.pattern().iter().zip(entries) {
            m[(r, c)] = z;
        }
        m
    }

    /// Frobenius norm of the entries of `m` outside the pattern.
    pub fn off_pattern_mass(&self, m: &ComplexMatrix) -> f64 {
        off_pattern_mask(&self.pattern())
            .iter()
            .map(|&(r, c)| m[(r, c)].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.transposed {
            write!(f, "Case {} (transposed)", self.index)
        } else {
            write!(f, "Case {}", self.index)
        }
    }
}

fn off_pattern_mask(pattern: &[(usize, usize)]) -> Vec<(usize, usize)> {
    (0..4)
        .flat_map(|r| (0..4).map(move |c| (r, c)))
        .filter(|p| !pattern.contains(p))
        .collect()
}

/// Labels ordered from the sparsest pattern to the densest, ties by index.
fn labels_by_specificity() -> Vec<CaseLabel> {
    let mut all = CaseLabel::all();
    all.sort_by_key(|l| (l.pattern().len(), l.transposed, l.index));
    all
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseReport {
    pub label: CaseLabel,
    pub witness_u: ComplexMatrix,
    pub off_pattern_mass: f64,
    /// Start at which the witness was found (0 is the identity).
    pub restart: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Classification {
    Found(CaseReport),
    /// No pattern reached within the restart budget; not a proof of absence.
    NotFound {
        best_label: CaseLabel,
        best_mass: f64,
        restarts: usize,
    },
}

/// Searches `U` in `SU(2) (x) SU(2)` with `U A U^†` inside one of the 32 patterns.
///
/// For each start (the identity, then seeded Haar samples) every pattern is
/// tried from sparsest to densest by Levenberg-Marquardt on the off-pattern
/// entries, with updates `U <- exp(X) U` for `X` in the local algebra.
pub fn classify_4x4(a: &ComplexMatrix, restarts: usize, seed: u64) -> Result<Classification> {
    if a.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: a.dim(),
        });
    }
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let target = TAU_FEAS * norm;
    let labels = labels_by_specificity();
    let basis = algebra_basis(&GroupSpec::Local(2)).orthonormalized();
    let loc = GroupSpec::Local(2);
    let mut best = (labels[0], f64::INFINITY);

    // exact fits at the identity take precedence over descent
    for l in &labels {
        let mass = l.off_pattern_mass(a);
        if mass <= target {
            return Ok(Classification::Found(CaseReport {
                label: *l,
                witness_u: ComplexMatrix::identity(4),
                off_pattern_mass: mass,
                restart: 0,
            }));
        }
    }
    let starts = restarts.max(1);
    for r in 0..starts {
        let u0 = if r == 0 {
            ComplexMatrix::identity(4)
        } else {
            haar_sample(&loc, derive_seed(seed, r as u64))
        };
        for l in &labels {
            let (u, mass) = fit_pattern(a, &u0, &off_pattern_mask(&l.pattern()), &basis, target);
            if mass < best.1 {
                best = (*l, mass);
            }
            if mass <= target {
                return Ok(Classification::Found(CaseReport {
                    label: *l,
                    witness_u: u,
                    off_pattern_mass: mass,
                    restart: r,
                }));
            }
        }
    }
    Ok(Classification::NotFound {
        best_label: best.0,
        best_mass: best.1,
        restarts: starts,
    })
}

fn off_residual(m: &ComplexMatrix, mask: &[(usize, usize)]) -> DVector<f64> {
    let mut r = DVector::zeros(2 * mask.len());
    for (i, &(p, c)) in mask.iter().enumerate() {
        r[2 * i] = m[(p, c)].re;
        r[2 * i + 1] = m[(p, c)].im;
    }
    r
}

/// Levenberg-Marquardt for `min ||P_off(U A U^†)||` over the local group.
fn fit_pattern(
    a: &ComplexMatrix,
    u0: &ComplexMatrix,
    mask: &[(usize, usize)],
    basis: &[ComplexMatrix],
    target: f64,
) -> (ComplexMatrix, f64) {
    let k = basis.len();
    let mut u = u0.clone();
    let mut m = u.conjugate(a);
    let mut r = off_residual(&m, mask);
    let mut cost = r.norm();
    let mut damping = 1e-3;
    for _ in 0..100 {
        if cost <= target {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(r.len(), k);
        for (j, b) in basis.iter().enumerate() {
            jac.set_column(j, &off_residual(&(b * &m - &m * b), mask));
        }
        let jt = jac.transpose();
        let g = &jt * &r;
        if g.norm() <= 1e-14 * (1.0 + cost) * a.frobenius_norm() {
            break;
        }
        let jtj = &jt * &jac;
        let mut accepted = false;
        while damping < 1e12 {
            let mut sys = jtj.clone();
            for d in 0..k {
                sys[(d, d)] += damping * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = sys.cholesky().map(|c| c.solve(&(-&g))) else {
                damping *= 10.0;
                continue;
            };
            let mut x = ComplexMatrix::zeros(4);
            for (b, s) in basis.iter().zip(step.iter()) {
                x = x + b.scale_real(*s);
            }
            let u_new = &expm_skew_unchecked(&x, 1.0) * &u;
            let m_new = u_new.conjugate(a);
            let r_new = off_residual(&m_new, mask);
            let c_new = r_new.norm();
            if c_new < cost {
                let gain = cost - c_new;
                u = u_new;
                m = m_new;
                r = r_new;
                cost = c_new;
                damping = (damping / 3.0).max(1e-12);
                accepted = true;
                if gain <= 1e-12 * cost {
                    return (u, cost);
                }
                break;
            }
            damping *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    (u, cost)
}

#[cfg(test)]
mod tests;
