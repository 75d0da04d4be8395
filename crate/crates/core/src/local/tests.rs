use std::f64::consts::SQRT_2;

use num_traits::{One, Zero};
use rand::Rng as _;

use super::rational::{kernel, rank};
use super::*;
use crate::groups::torus_basis;
use crate::linalg::{is_nilpotent, ONE, ZERO};
use crate::range::sample_range;
use crate::rng::{complex_normal, rng_from_seed};
use crate::symmetry::{detect_weak_symmetry, solve_in_algebra};

fn e(n: usize, row: usize, col: usize) -> ComplexMatrix {
    ComplexMatrix::unit(n, row - 1, col - 1)
}

fn example4() -> ComplexMatrix {
    e(4, 2, 1) + e(4, 3, 1) + e(4, 4, 1)
}

fn random_entries(k: usize, seed: u64) -> Vec<C64> {
    let mut rng = rng_from_seed(seed);
    (0..k)
        .map(|_| loop {
            let z = complex_normal(&mut rng);
            if z.norm() > 0.1 {
                break z;
            }
        })
        .collect()
}

fn instance(label: CaseLabel, seed: u64) -> ComplexMatrix {
    label.instantiate(&random_entries(4, seed))
}

#[test]
fn local_constraints_have_expected_shape() {
    for n in 1..=4 {
        let sys = FeasibilitySystem::new(n, vec![]);
        let dim = 1usize << n;
        assert_eq!(sys.x_loc.len(), dim - n);
        assert_eq!(rank(&sys.x_loc, dim), dim - n);
        for j in 0..n {
            let z: Vec<Q> = z_diagonal(j, n).into_iter().map(q).collect();
            for row in &sys.x_loc {
                assert!(rational::dot(row, &z).is_zero());
            }
        }
    }
    // n = 2: the torus is i diag(l, m, -m, -l)
    let sys = FeasibilitySystem::new(2, vec![]);
    let ker = kernel(&sys.x_loc, 4);
    assert_eq!(ker.len(), 2);
    for v in ker {
        assert_eq!(v[0], -v[3].clone());
        assert_eq!(v[1], -v[2].clone());
    }
}

#[test]
fn exact_solve_examples() {
    let case1 = e(4, 2, 1) + e(4, 4, 3);
    let cert = tloc_feasibility(&case1, 2).unwrap();
    assert!(cert.feasible());
    let (lam, mu) = cert.lambda_mu().unwrap();
    assert_eq!((lam, mu), (Q::zero(), Q::one()));
    assert_eq!(cert.mu.unwrap(), vec![q(0), q(1), q(-1), q(0)]);

    let swap = e(4, 2, 1) + e(4, 1, 2);
    let cert = tloc_feasibility(&swap, 2).unwrap();
    assert!(!cert.feasible());
    assert!(cert.mu.is_none());

    // a witness with irrational lambda exists; a rational one is returned
    let lam = SQRT_2;
    let delta = ComplexMatrix::diag(&[I * lam, I * (lam + 1.0), -I * (lam + 1.0), -I * lam]);
    let a = e(4, 2, 1).scale(C64::new(0.3, 1.1)) + e(4, 4, 3).scale(C64::new(-2.0, 0.5));
    assert!((&delta * &a - &a * &delta - a.scale(I)).frobenius_norm() < 1e-12);
    let cert = tloc_feasibility(&a, 2).unwrap();
    assert!(cert.feasible());
    assert!(cert.mu.unwrap().iter().all(|x| x.is_integer() || x.denom() > &num_bigint::BigInt::zero()));
}

#[test]
fn exact_solve_errors() {
    assert!(matches!(tloc_feasibility(&e(3, 2, 1), 2), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(
        tloc_feasibility(&(e(4, 2, 1) + e(4, 1, 1)), 2),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(tloc_feasibility(&ComplexMatrix::zeros(4), 2), Err(Error::ZeroMatrix)));
}

#[test]
fn all_case_patterns_are_exactly_feasible() {
    let labels = CaseLabel::all();
    assert_eq!(labels.len(), 32);
    let distinct: std::collections::HashSet<Vec<(usize, usize)>> = labels
        .iter()
        .map(|l| {
            let mut p = l.pattern();
            p.sort();
            p
        })
        .collect();
    assert_eq!(distinct.len(), 32);
    for (k, label) in labels.iter().enumerate() {
        let a = instance(*label, k as u64);
        let cert = tloc_feasibility(&a, 2).unwrap();
        assert!(cert.feasible(), "{label}");
        let mu = cert.mu.clone().unwrap();
        // [Delta, A] = i A on the support, in rational arithmetic
        for &(r, c) in &label.pattern() {
            assert_eq!(&mu[r] - &mu[c], Q::one(), "{label}");
        }
        let (lam, m) = cert.lambda_mu().unwrap();
        assert!(label.relations_hold(&lam, &m, &Q::one()), "{label}: {lam} {m}");
        assert!(is_nilpotent(&a));
    }
}

#[test]
fn transposition_flips_phi() {
    for label in CaseLabel::all().into_iter().filter(|l| !l.transposed) {
        let a = instance(label, 7);
        let mu = tloc_feasibility(&a, 2).unwrap().mu.unwrap();
        let at = a.transpose();
        // -mu works for the transpose with phi = 1, i.e. mu works with phi = -1
        for &(r, c) in &support_of(&at) {
            assert_eq!(&mu[r] - &mu[c], -Q::one());
        }
        let tl = CaseLabel::new(label.index, true).unwrap();
        assert!(tl.off_pattern_mass(&at) == 0.0);
        assert!(tloc_feasibility(&at, 2).unwrap().feasible());
        let (lam, m) = (mu[0].clone(), mu[1].clone());
        assert!(tl.relations_hold(&lam, &m, &-Q::one()));
    }
}

#[test]
fn relations_reject_wrong_rows() {
    let c1 = CaseLabel::new(1, false).unwrap();
    assert!(c1.relations_hold(&q(0), &q(1), &q(1)));
    assert!(!c1.relations_hold(&q(1), &q(1), &q(1)));
    assert!(CaseLabel::new(17, false).is_err());
    assert_eq!(CaseLabel::new(16, true).unwrap().to_string(), "Case 16 (transposed)");
}

#[test]
fn exact_and_floating_torus_solves_agree() {
    let mut rng = rng_from_seed(99);
    let torus = torus_basis(&GroupSpec::Local(2));
    let torus3 = torus_basis(&GroupSpec::Local(3));
    let mut positives = 0;
    for trial in 0..200 {
        let n = if trial % 4 == 3 { 3 } else { 2 };
        let dim = 1usize << n;
        let a = if trial % 2 == 0 {
            random_etloc_element(n, &mut rng).0
        } else {
            // random off-diagonal support
            let mut a = ComplexMatrix::zeros(dim);
            while a.frobenius_norm() == 0.0 {
                for k in 0..dim {
                    for l in 0..dim {
                        if k != l && rng.random::<f64>() < 0.15 {
                            a[(k, l)] = complex_normal(&mut rng);
                        }
                    }
                }
            }
            a
        };
        let exact = tloc_feasibility(&a, n).unwrap().feasible();
        let t = if n == 2 { &torus } else { &torus3 };
        let float = solve_in_algebra(&a, t, TAU_FEAS).unwrap().verdict;
        assert_eq!(exact, float, "trial {trial}");
        positives += exact as usize;
    }
    assert!(positives >= 100);
}

#[test]
fn classify_finds_case_16_at_identity() {
    let label = CaseLabel::new(16, false).unwrap();
    let a = instance(label, 3);
    let Classification::Found(r) = classify_4x4(&a, 4, 0).unwrap() else {
        panic!()
    };
    assert_eq!(r.label, label);
    assert_eq!(r.witness_u, ComplexMatrix::identity(4));
    assert_eq!(r.restart, 0);
}

#[test]
fn classify_recovers_planted_patterns() {
    for (k, idx) in [1u8, 3, 6, 9, 12, 16].into_iter().enumerate() {
        let label = CaseLabel::new(idx, k % 2 == 1).unwrap();
        let a0 = instance(label, 20 + k as u64);
        let v = haar_sample(&GroupSpec::Local(2), 40 + k as u64);
        let a = v.conjugate(&a0);
        let Classification::Found(r) = classify_4x4(&a, 64, k as u64).unwrap() else {
            panic!("{label}")
        };
        assert!(r.witness_u.is_unitary(1e-10));
        let m = r.witness_u.conjugate(&a);
        assert!(r.label.off_pattern_mass(&m) <= TAU_FEAS * a.frobenius_norm());
        assert!((r.witness_u.determinant() - ONE).norm() < 1e-8);
    }
}

#[test]
fn classify_does_not_place_example4() {
    let out = classify_4x4(&example4(), 16, 5).unwrap();
    let Classification::NotFound { best_mass, restarts, .. } = out else {
        panic!("unexpected pattern")
    };
    assert_eq!(restarts, 16);
    assert!(best_mass > 0.1);
    assert!(classify_4x4(&e(2, 2, 1), 1, 0).is_err());
}

#[test]
fn signed_permutation_basics() {
    let p = SignedPerm::from_matrix(&p_out()).unwrap();
    assert_eq!(p.to_matrix(), p_out());
    let a = example4();
    assert!(p.conjugate(&a).distance(&p_out().conjugate(&a)) == 0.0);
    let p2 = p.compose(&p);
    assert_eq!(p2.to_matrix(), &p_out() * &p_out());
    assert!(SignedPerm::from_matrix(&ComplexMatrix::identity(2).scale(I)).is_err());
    assert!(SignedPerm::from_matrix(&(e(2, 1, 1) + e(2, 1, 2))).is_err());
}

#[test]
fn group_sizes_and_closure() {
    let g1 = perm_group_ex(1).unwrap();
    assert_eq!(g1.len(), 4);
    assert_eq!(g1.out.len(), 1);

    let g2 = perm_group_ex(2).unwrap();
    assert_eq!(g2.out.len(), 4);
    assert_eq!(g2.loc().len(), 8);
    assert_eq!(g2.len(), 64);
    assert!(g2.is_closed());
    for m in g2.matrices() {
        assert!(m.is_unitary(0.0));
        assert!(m.vec().iter().all(|z| z.im == 0.0 && z.re.fract() == 0.0));
    }
    // P_out has order 4
    let p = SignedPerm::from_matrix(&p_out()).unwrap();
    let p4 = p.compose(&p).compose(&p).compose(&p);
    assert_eq!(p4, SignedPerm::identity(4));
    assert_ne!(p.compose(&p), SignedPerm::identity(4));

    let g3 = perm_group_ex(3).unwrap();
    assert_eq!(g3.len(), 768);
    assert!(g3.is_closed());
    assert!(std::sync::Arc::ptr_eq(&g3, &perm_group_ex(3).unwrap()));
    assert!(perm_group_ex(0).is_err());
}

#[test]
fn local_and_swap_elements_do_not_commute() {
    // conjugation by P_out moves a sign between the tensor factors, so the
    // product set of the two subgroups is not closed
    let g = perm_group_ex(2).unwrap();
    let p = &g.out[1];
    let noncommuting = g.loc().iter().filter(|l| l.compose(p) != p.compose(l)).count();
    assert!(noncommuting > 0);
    let products: std::collections::HashSet<SignedPerm> = g
        .loc()
        .iter()
        .flat_map(|l| g.out.iter().map(move |o| l.compose(o)))
        .collect();
    assert_eq!(products.len(), 32);
    assert!(products.len() < g.len());
}

fn natural(sizes: &[usize]) -> Option<ShiftPattern> {
    Some(ShiftPattern {
        sizes: sizes.to_vec(),
        order: (0..sizes.len()).collect(),
    })
}

#[test]
fn block_shift_levels_examples() {
    assert_eq!(block_shift_levels(&[(1, 0)], 2), natural(&[1, 1]));
    assert_eq!(block_shift_levels(&[(1, 0), (2, 0), (3, 0)], 4), natural(&[1, 3]));
    assert_eq!(block_shift_levels(&[(1, 0), (3, 2)], 4), natural(&[1, 2, 1]));
    assert_eq!(block_shift_levels(&[], 3), natural(&[3]));
    // reversed chain
    let up = block_shift_levels(&[(0, 1)], 2).unwrap();
    assert_eq!(up.order, vec![1, 0]);
    let m = e(2, 1, 2);
    assert_eq!(up.off_shift_mass(&m), 0.0);
    assert_eq!(up.off_shift_mass(&e(2, 2, 1)), 1.0);
    // Case 16 as given: the level sets {1, 3} and {2, 4} interleave
    assert_eq!(block_shift_levels(&[(1, 0), (1, 2), (3, 0), (3, 2)], 4), None);
    // two levels inside one component may not share a block
    assert_eq!(block_shift_levels(&[(1, 0), (2, 1), (0, 2)], 3), None);
}

fn witness(a: &ComplexMatrix, n: usize) -> (ComplexMatrix, ShiftPattern, bool) {
    match conjecture_check(a, n).unwrap() {
        ConjectureOutcome::Witness {
            p,
            partition,
            block_order,
            in_loc,
        } => (
            p,
            ShiftPattern {
                sizes: partition.sizes().to_vec(),
                order: block_order,
            },
            in_loc,
        ),
        other => panic!("no witness: {other:?}"),
    }
}

#[test]
fn conjecture_holds_for_all_patterns() {
    for (k, label) in CaseLabel::all().into_iter().enumerate() {
        let a = instance(label, 100 + k as u64);
        let (p, pattern, in_loc) = witness(&a, 2);
        assert_eq!(pattern.off_shift_mass(&p.conjugate(&a)), 0.0, "{label}");
        if label == CaseLabel::new(1, false).unwrap() {
            assert!(in_loc);
            assert_eq!(p, ComplexMatrix::identity(4));
        }
        if label == CaseLabel::new(16, false).unwrap() {
            assert!(!in_loc);
        }
    }
    assert!(matches!(conjecture_check(&example4(), 2), Err(Error::Precondition(_))));
}

/// Sum of `E_kl` over basis pairs whose Hamming weights satisfy `w(l) = w(k) + 1`.
fn weight_lowering(n: usize) -> ComplexMatrix {
    let dim = 1usize << n;
    let w = |i: usize| i.count_ones();
    ComplexMatrix::from_fn(dim, |k, l| if w(l) == w(k) + 1 { ONE } else { ZERO })
}

#[test]
fn three_qubit_sampling() {
    let mut rng = rng_from_seed(5);
    let mut found = 0;
    for _ in 0..40 {
        let (a, _) = random_etloc_element(3, &mut rng);
        if let ConjectureOutcome::Witness {
            p,
            partition,
            block_order,
            ..
        } = conjecture_check(&a, 3).unwrap()
        {
            let pattern = ShiftPattern {
                sizes: partition.sizes().to_vec(),
                order: block_order,
            };
            assert_eq!(pattern.off_shift_mass(&p.conjugate(&a)), 0.0);
            found += 1;
        }
    }
    assert!(found >= 20, "{found}");
}

#[test]
fn three_qubit_counterexample() {
    // lambda = (1/2, 1/2, 1/2): mu = 3/2 - w, phi = 1
    let a = weight_lowering(3);
    let cert = tloc_feasibility(&a, 3).unwrap();
    assert!(cert.feasible());
    assert!(detect_weak_symmetry(&a, &GroupSpec::Local(3)).unwrap().verdict);
    assert!(matches!(
        conjecture_check(&a, 3).unwrap(),
        ConjectureOutcome::Counterexample { searched: 48, .. }
    ));

    // independent check: the support graph is connected, so every block-shift
    // form sorts the weight classes into intervals
    let support = support_of(&a);
    let mut comp: Vec<usize> = (0..8).collect();
    fn find(c: &mut [usize], x: usize) -> usize {
        if c[x] != x {
            let r = find(c, c[x]);
            c[x] = r;
        }
        c[x]
    }
    for &(k, l) in &support {
        let (rk, rl) = (find(&mut comp, k), find(&mut comp, l));
        comp[rk] = rl;
    }
    let root = find(&mut comp, 0);
    assert!((0..8).all(|i| find(&mut comp, i) == root));
    let g = perm_group_ex(3).unwrap();
    for p in &g.elements {
        let broken = (0..=3u32).any(|w| {
            let mut pos: Vec<usize> = (0..8usize).filter(|i| i.count_ones() == w).map(|i| p.perm[i]).collect();
            pos.sort();
            pos.windows(2).any(|x| x[1] != x[0] + 1)
        });
        assert!(broken);
    }
    // a plain permutation sorting by weight does the job
    let mut by_weight: Vec<usize> = (0..8).collect();
    by_weight.sort_by_key(|&i| (std::cmp::Reverse(i.count_ones()), i));
    let mut perm = vec![0; 8];
    for (pos, &i) in by_weight.iter().enumerate() {
        perm[i] = pos;
    }
    let sorted = SignedPerm { perm, sign: vec![1; 8] }.conjugate(&a);
    let block = natural(&[1, 3, 3, 1]).unwrap();
    assert_eq!(block.off_shift_mass(&sorted), 0.0);
}

#[test]
fn etloc_is_invariant_under_the_group() {
    assert!(invariance_check_etloc(2, 100, 1).unwrap());
    assert!(invariance_check_etloc(3, 30, 2).unwrap());
    let case1 = e(4, 2, 1) + e(4, 4, 3);
    let moved = SignedPerm::from_matrix(&p_out()).unwrap().conjugate(&case1);
    assert!(tloc_feasibility(&moved, 2).unwrap().feasible());
    assert!(tloc_feasibility(&SignedPerm::identity(4).conjugate(&case1), 2).unwrap().feasible());
}

#[test]
fn random_etloc_elements_are_certified() {
    let mut rng = rng_from_seed(8);
    for n in [1, 2, 3] {
        for _ in 0..10 {
            let (a, phi) = random_etloc_element(n, &mut rng);
            assert!(!phi.is_zero());
            assert!(tloc_feasibility(&a, n).unwrap().feasible());
            assert!(detect_weak_symmetry(&a, &GroupSpec::Local(n)).unwrap().verdict);
        }
    }
}

#[test]
fn torus_coordinates_round_trip() {
    let mu = vec![q(0), q(1), q(-1), q(0)];
    let l = local_torus_coordinates(&mu, 2).unwrap();
    assert_eq!(l, vec![Q::new(1.into(), 2.into()), Q::new((-1).into(), 2.into())]);
    assert!(local_torus_coordinates(&[q(1), q(0), q(0), q(0)], 2).is_none());
}

#[test]
fn homotopy_crosses_origin() {
    let a = e(4, 2, 1) + e(4, 4, 3).scale_real(2.0);
    let mut rng = rng_from_seed(4);
    let c = ComplexMatrix::from_fn(4, |_, _| complex_normal(&mut rng));
    let h = homotopy_check(&c, &a, 2, 800, 200).unwrap();
    assert_eq!(h.m, 2);
    assert_eq!(h.predicted_winding, 2);
    assert_eq!(h.winding_start, 2);
    assert_eq!(h.winding_end, -2);
    assert!(h.min_modulus <= 0.05 * h.max_modulus, "{h:?}");

    assert!(homotopy_check(&c, &example4(), 2, 100, 10).is_err());
    // tr(C^† A) = 0
    assert!(homotopy_check(&ComplexMatrix::identity(4), &a, 2, 100, 10).is_err());
}

#[test]
fn local_symmetric_clouds_reach_the_origin() {
    let g = GroupSpec::Local(2);
    let mut rng = rng_from_seed(12);
    for k in 0..3 {
        let (a, _) = random_etloc_element(2, &mut rng);
        let c = ComplexMatrix::from_fn(4, |_, _| complex_normal(&mut rng));
        let cloud = sample_range(&c, &a, &g, 20_000, k).unwrap();
        assert!(cloud.min_modulus() <= 0.05 * cloud.max_modulus());
    }
    let _ = (ZERO, TAU_EXACT);
}
