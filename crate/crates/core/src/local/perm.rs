//! Signed local permutations, the factor-swap element and the block-shift search.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::Zero;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::rational::{q, Q};
use super::{support_of, tloc_feasibility, z_diagonal};
use crate::error::{Error, Result};
use crate::linalg::{BlockPartition, ComplexMatrix, C64, ONE};
use crate::rng::{complex_normal, rng_from_seed, Rng};

/// `P e_j = sign[j] e_{perm[j]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignedPerm {
    pub perm: Vec<usize>,
    pub sign: Vec<i8>,
}

impl SignedPerm {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            sign: vec![1; n],
        }
    }

    /// Reads a matrix with exactly one entry `+-1` per column.
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        let n = m.dim();
        let mut perm = Vec::with_capacity(n);
        let mut sign = Vec::with_capacity(n);
        for j in 0..n {
            let nz: Vec<usize> = (0..n).filter(|&i| m[(i, j)].norm() > 0.5).collect();
            let [i] = nz[..] else {
                return Err(Error::Structure("signed permutation"));
            };
            let v = m[(i, j)];
            if (v.re.abs() - 1.0).abs() > 1e-12 || v.im.abs() > 1e-12 {
                return Err(Error::Structure("signed permutation"));
            }
            perm.push(i);
            sign.push(if v.re > 0.0 { 1 } else { -1 });
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::Structure("signed permutation"));
            }
        }
        Ok(Self { perm, sign })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        let perm = other.perm.iter().map(|&j| self.perm[j]).collect();
        let sign = other
            .perm
            .iter()
            .zip(&other.sign)
            .map(|(&j, &s)| s * self.sign[j])
            .collect();
        Self { perm, sign }
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim());
        for (j, (&i, &s)) in self.perm.iter().zip(&self.sign).enumerate() {
            m[(i, j)] = ONE * s as f64;
        }
        m
    }

    /// `P A P^†` without matrix products.
    pub fn conjugate(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n);
        for k in 0..n {
            for l in 0..n {
                let s = (self.sign[k] * self.sign[l]) as f64;
                out[(self.perm[k], self.perm[l])] = a[(k, l)] * s;
            }
        }
        out
    }
}

/// The group generated by the signed local permutations and the embedded factor swaps.
#[derive(Clone, Debug)]
pub struct PermGroupEx {
    pub n: usize,
    /// All elements; the local subgroup comes first.
    pub elements: Vec<SignedPerm>,
    pub loc_len: usize,
    pub out: Vec<SignedPerm>,
}

impl PermGroupEx {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn loc(&self) -> &[SignedPerm] {
        &self.elements[..self.loc_len]
    }

    pub fn matrices(&self) -> Vec<ComplexMatrix> {
        self.elements.iter().map(SignedPerm::to_matrix).collect()
    }

    pub fn contains(&self, p: &SignedPerm) -> bool {
        self.elements.contains(p)
    }

    pub fn is_closed(&self) -> bool {
        let set: HashSet<&SignedPerm> = self.elements.iter().collect();
        self.elements
            .iter()
            .all(|a| self.elements.iter().all(|b| set.contains(&a.compose(b))))
    }
}

fn j_factor() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).expect("2x2")
}

/// The factor swap with a sign, acting on two neighbouring qubits.
pub fn p_out() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, -1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
    .expect("4x4")
}

fn embed(x: &ComplexMatrix, j: usize, width: usize, n: usize) -> ComplexMatrix {
    let left = ComplexMatrix::identity(1 << j);
    let right = ComplexMatrix::identity(1 << (n - j - width));
    crate::linalg::kron(&crate::linalg::kron(&left, x), &right)
}

fn closure(generators: &[SignedPerm], dim: usize) -> Vec<SignedPerm> {
    let id = SignedPerm::identity(dim);
    let mut seen: HashSet<SignedPerm> = HashSet::from([id.clone()]);
    let mut order = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in generators {
            let y = g.compose(&x);
            if seen.insert(y.clone()) {
                order.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    order
}

fn build(n: usize) -> PermGroupEx {
    let dim = 1usize << n;
    let as_perm = |m: &ComplexMatrix| SignedPerm::from_matrix(m).expect("signed permutation");
    let mut loc_gens: Vec<SignedPerm> = (0..n).map(|j| as_perm(&embed(&j_factor(), j, 1, n))).collect();
    loc_gens.push(as_perm(&ComplexMatrix::identity(dim).scale_real(-1.0)));
    let out_gens: Vec<SignedPerm> = (0..n.saturating_sub(1))
        .map(|j| as_perm(&embed(&p_out(), j, 2, n)))
        .collect();
    let loc = closure(&loc_gens, dim);
    let out = closure(&out_gens, dim);
    let mut all_gens = loc_gens;
    all_gens.extend(out_gens);
    let full = closure(&all_gens, dim);
    let loc_set: HashSet<&SignedPerm> = loc.iter().collect();
    let mut elements = loc.clone();
    elements.extend(full.iter().filter(|p| !loc_set.contains(p)).cloned());
    PermGroupEx {
        n,
        loc_len: loc.len(),
        elements,
        out,
    }
}

/// The group for `n` qubits; built once per `n` and shared.
pub fn perm_group_ex(n: usize) -> Result<Arc<PermGroupEx>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if n > 4 {
        return Err(Error::InvalidArgument(format!("n = {n} is too large to enumerate")));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<PermGroupEx>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("cache lock");
    Ok(map.entry(n).or_insert_with(|| Arc::new(build(n))).clone())
}

/// Consecutive blocks together with a chain position for each block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftPattern {
    pub sizes: Vec<usize>,
    /// `order[b]` is the position of block `b` in the shift chain.
    pub order: Vec<usize>,
}

impl ShiftPattern {
    pub fn block_of(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
            .collect()
    }

    /// Frobenius mass of `m` outside the positions the chain allows.
    pub fn off_shift_mass(&self, m: &ComplexMatrix) -> f64 {
        let block = self.block_of();
        let mut sum = 0.0;
        for (k, &bk) in block.iter().enumerate() {
            for (l, &bl) in block.iter().enumerate() {
                if self.order[bk] != self.order[bl] + 1 {
                    sum += m[(k, l)].norm_sqr();
                }
            }
        }
        sum.sqrt()
    }
}

fn chain_order(support: &[(usize, usize)], block: &[usize], blocks: usize) -> Option<Vec<usize>> {
    let mut adj = vec![Vec::new(); blocks];
    for &(k, l) in support {
        let (bk, bl) = (block[k], block[l]);
        adj[bl].push((bk, 1i64));
        adj[bk].push((bl, -1i64));
    }
    let mut value: Vec<Option<i64>> = vec![None; blocks];
    let mut order = vec![0usize; blocks];
    let mut next = 0usize;
    for root in 0..blocks {
        if value[root].is_some() {
            continue;
        }
        value[root] = Some(0);
        let mut comp = vec![root];
        let mut stack = vec![root];
        while let Some(b) = stack.pop() {
            let vb = value[b].expect("visited");
            for &(c, d) in &adj[b] {
                match value[c] {
                    None => {
                        value[c] = Some(vb + d);
                        comp.push(c);
                        stack.push(c);
                    }
                    Some(vc) if vc != vb + d => return None,
                    Some(_) => {}
                }
            }
        }
        let lo = comp.iter().map(|&b| value[b].expect("visited")).min().expect("nonempty");
        let mut used = HashSet::new();
        for &b in &comp {
            let v = (value[b].expect("visited") - lo) as usize;
            if !used.insert(v) {
                return None;
            }
            order[b] = next + v;
        }
        next += comp.len();
    }
    Some(order)
}

/// Consecutive blocks making `support` a block-shift pattern for some chain
/// ordering of the blocks, fewest blocks first. The natural order is used
/// whenever it works.
pub fn block_shift_levels(support: &[(usize, usize)], dim: usize) -> Option<ShiftPattern> {
    if dim == 0 || dim > 20 {
        return None;
    }
    let mut masks: Vec<u64> = (0..1u64 << (dim - 1)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut relaxed = None;
    for mask in masks {
        let mut block = vec![0usize; dim];
        for i in 1..dim {
            block[i] = block[i - 1] + ((mask >> (i - 1)) & 1) as usize;
        }
        let blocks = block[dim - 1] + 1;
        let mut sizes = vec![0usize; blocks];
        for &b in &block {
            sizes[b] += 1;
        }
        if support.iter().all(|&(k, l)| block[k] == block[l] + 1) {
            return Some(ShiftPattern {
                sizes,
                order: (0..blocks).collect(),
            });
        }
        if relaxed.is_none() {
            if let Some(order) = chain_order(support, &block, blocks) {
                relaxed = Some(ShiftPattern { sizes, order });
            }
        }
    }
    relaxed
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ConjectureOutcome {
    Witness {
        p: ComplexMatrix,
        partition: BlockPartition,
        /// Chain position of each block of `partition`.
        block_order: Vec<usize>,
        /// Whether `P` already lies in the signed local permutations.
        in_loc: bool,
    },
    Counterexample {
        support: Vec<(usize, usize)>,
        searched: usize,
    },
}

/// Exhaustive search for `P` in the extended group with `P A P^†` in block-shift form.
pub fn conjecture_check(a: &ComplexMatrix, n: usize) -> Result<ConjectureOutcome> {
    let cert = tloc_feasibility(a, n)?;
    if !cert.feasible() {
        return Err(Error::Precondition("A is not in E(t_loc)".into()));
    }
    let group = perm_group_ex(n)?;
    let dim = 1usize << n;
    let support = support_of(a);
    // the zero pattern of P A P^† does not depend on the signs of P
    let mut tried: HashSet<Vec<usize>> = HashSet::new();
    for (i, p) in group.elements.iter().enumerate() {
        if !tried.insert(p.perm.clone()) {
            continue;
        }
        let moved: Vec<(usize, usize)> = support.iter().map(|&(k, l)| (p.perm[k], p.perm[l])).collect();
        if let Some(pattern) = block_shift_levels(&moved, dim) {
            return Ok(ConjectureOutcome::Witness {
                p: p.to_matrix(),
                partition: BlockPartition::new(pattern.sizes)?,
                block_order: pattern.order,
                in_loc: i < group.loc_len,
            });
        }
    }
    Ok(ConjectureOutcome::Counterexample {
        support,
        searched: tried.len(),
    })
}

/// A random element of `E(t_loc)`: random entries on the `phi`-eigenspace of a
/// random rational local torus element, `phi` one of its nonzero differences.
pub fn random_etloc_element(n: usize, rng: &mut Rng) -> (ComplexMatrix, Q) {
    let dim = 1usize << n;
    loop {
        let lambdas: Vec<Q> = (0..n)
            .map(|_| Q::new(rng.random_range(-3i64..=3).into(), rng.random_range(1i64..=3).into()))
            .collect();
        let mut mu = vec![Q::zero(); dim];
        for (j, l) in lambdas.iter().enumerate() {
            for (m, z) in mu.iter_mut().zip(z_diagonal(j, n)) {
                *m += l * q(z);
            }
        }
        let diffs: Vec<Q> = (0..dim)
            .flat_map(|k| (0..dim).map(move |l| (k, l)))
            .map(|(k, l)| &mu[k] - &mu[l])
            .filter(|d| !d.is_zero())
            .collect();
        if diffs.is_empty() {
            continue;
        }
        let phi = diffs[rng.random_range(0..diffs.len())].clone();
        let mut a = ComplexMatrix::zeros(dim);
        for k in 0..dim {
            for l in 0..dim {
                if &mu[k] - &mu[l] == phi {
                    a[(k, l)] = nonzero_normal(rng);
                }
            }
        }
        return (a, phi);
    }
}

fn nonzero_normal(rng: &mut Rng) -> C64 {
    loop {
        let z = complex_normal(rng);
        if z.norm() > 1e-3 {
            return z;
        }
    }
}

/// Checks that conjugation by random group elements keeps random elements of `E(t_loc)` there.
pub fn invariance_check_etloc(n: usize, trials: usize, seed: u64) -> Result<bool> {
    let group = perm_group_ex(n)?;
    let mut rng = rng_from_seed(seed);
    for _ in 0..trials {
        let (a, _) = random_etloc_element(n, &mut rng);
        let p = &group.elements[rng.random_range(0..group.len())];
        if !tloc_feasibility(&p.conjugate(&a), n)?.feasible() {
            return Ok(false);
        }
    }
    Ok(true)
}
