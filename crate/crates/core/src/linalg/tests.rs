use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;

use super::*;
use crate::groups::{haar_sample, GroupSpec};
use crate::rng::{complex_normal, rng_from_seed};

fn e(n: usize, row: usize, col: usize) -> ComplexMatrix {
    ComplexMatrix::unit(n, row - 1, col - 1)
}

fn example4() -> ComplexMatrix {
    e(4, 2, 1) + e(4, 3, 1) + e(4, 4, 1)
}

fn random_matrix(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = rng_from_seed(seed);
    ComplexMatrix::from_fn(n, |_, _| complex_normal(&mut rng))
}

fn random_skew(n: usize, seed: u64) -> ComplexMatrix {
    let g = random_matrix(n, seed);
    (&g - &g.adjoint()).scale_real(0.5)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn inner_product_examples() {
    let i2 = ComplexMatrix::identity(2);
    assert_eq!(frobenius_inner(&i2, &i2).unwrap(), c(2.0, 0.0));
    assert_eq!(frobenius_inner(&e(2, 2, 1), &e(2, 2, 1)).unwrap(), ONE);
    assert_eq!(frobenius_inner(&e(2, 1, 2), &e(2, 2, 1)).unwrap(), ZERO);
    let a = example4();
    assert_eq!(frobenius_inner(&a, &a).unwrap(), c(3.0, 0.0));
    assert!(frobenius_inner(&a, &i2).is_err());
}

#[test]
fn inner_product_is_conjugate_symmetric() {
    let a = random_matrix(3, 1);
    let b = random_matrix(3, 2);
    let ab = frobenius_inner(&a, &b).unwrap();
    let ba = frobenius_inner(&b, &a).unwrap();
    assert!((ab - ba.conj()).norm() < 1e-14);
}

#[test]
fn commutator_examples() {
    let (l1, l2) = (0.7, -1.3);
    let d = ComplexMatrix::diag(&[I * l1, I * l2]);
    let got = commutator(&d, &e(2, 2, 1)).unwrap();
    assert!(got.distance(&e(2, 2, 1).scale(I * (l2 - l1))) < 1e-15);

    let x = random_matrix(3, 5);
    assert!(commutator(&x, &x).unwrap().is_zero(0.0));

    let a = e(4, 2, 1) + e(4, 4, 3).scale_real(2.0);
    let aa = commutator(&a, &a.adjoint()).unwrap();
    assert!(aa.distance(&ComplexMatrix::real_diag(&[-1.0, 1.0, -4.0, 4.0])) < 1e-15);
    assert!(commutator(&a, &x).is_err());
}

#[test]
fn ad_operator_examples() {
    let z = ad_operator(&ComplexMatrix::zeros(3));
    assert!(z.iter().all(|v| *v == ZERO));

    let lam = 0.8;
    let ad = ad_operator(&ComplexMatrix::diag(&[I * lam, -I * lam]));
    // diagonal in the matrix-unit basis
    let mut eig: Vec<f64> = (0..4).map(|k| ad[(k, k)].im).collect();
    eig.sort_by(f64::total_cmp);
    let want = [-2.0 * lam, 0.0, 0.0, 2.0 * lam];
    for (g, w) in eig.iter().zip(want) {
        assert!((g - w).abs() < 1e-15);
    }
    assert!(ComplexMatrix::new(ad).unwrap().is_diagonal(0.0));
}

#[test]
fn ad_operator_is_skew_for_skew_input() {
    let w = random_skew(3, 9);
    let ad = ComplexMatrix::new(ad_operator(&w)).unwrap();
    assert!(ad.is_skew_hermitian(1e-13));
    let (vals, _) = hermitian_eigen(&ad.scale(I));
    assert_eq!(vals.len(), 9);
}

#[test]
fn kron_examples() {
    let i2 = ComplexMatrix::identity(2);
    assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
    let a1 = ComplexMatrix::real_diag(&[1.0, -1.0]);
    let a2 = ComplexMatrix::diag(&[c(1.0, 1.0), c(1.0, -1.0)]);
    let a = kron(&a1, &a2);
    let want = ComplexMatrix::diag(&[c(1.0, 1.0), c(1.0, -1.0), c(-1.0, -1.0), c(-1.0, 1.0)]);
    assert_eq!(a, want);
    assert_eq!(a.trace(), ZERO);
}

#[test]
fn direct_sum_examples() {
    let s = direct_sum(&ComplexMatrix::identity(1), &ComplexMatrix::identity(2));
    assert_eq!(s, ComplexMatrix::identity(3));
    let s = direct_sum(&e(2, 2, 1), &ComplexMatrix::zeros(2));
    assert_eq!(s, e(4, 2, 1));

    let (c1, c2, a1, a2) = (random_matrix(2, 1), random_matrix(3, 2), random_matrix(2, 3), random_matrix(3, 4));
    let lhs = frobenius_inner(&direct_sum(&c1, &c2), &direct_sum(&a1, &a2)).unwrap();
    let rhs = frobenius_inner(&c1, &a1).unwrap() + frobenius_inner(&c2, &a2).unwrap();
    assert!((lhs - rhs).norm() < 1e-13);
}

#[test]
fn expm_examples() {
    assert!(expm_skew(&ComplexMatrix::zeros(3), 2.5)
        .unwrap()
        .distance(&ComplexMatrix::identity(3))
        < 1e-15);

    let omega0 = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]])
        .unwrap()
        .scale_real(FRAC_PI_2);
    let u0 = expm_skew(&omega0, 1.0).unwrap();
    let want = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap();
    assert!(u0.distance(&want) < 1e-14);

    let d = expm_skew(&ComplexMatrix::diag(&[I, -I]), PI).unwrap();
    assert!(d.distance(&ComplexMatrix::real_diag(&[-1.0, -1.0])) < 1e-14);

    assert!(expm_skew(&ComplexMatrix::identity(2), 1.0).is_err());
}

#[test]
fn expm_is_unitary() {
    for n in [2, 5, 8] {
        let w = random_skew(n, n as u64).scale_real(10.0);
        let u = expm_skew(&w, 1.3).unwrap();
        let err = (u.adjoint() * &u).distance(&ComplexMatrix::identity(n));
        assert!(err <= 1e-12 * n as f64, "n={n}, err={err}");
    }
}

#[test]
fn nilpotency_examples() {
    assert!(is_nilpotent(&e(2, 2, 1)));
    assert!(!is_nilpotent(&ComplexMatrix::identity(3)));
    assert!(is_nilpotent(&example4()));
    assert!(is_nilpotent(&ComplexMatrix::zeros(2)));
    assert!(!is_nilpotent(&(e(2, 2, 1) + e(2, 1, 2))));

    // a 16x16 Jordan block, conjugated by a random unitary
    let mut j = ComplexMatrix::zeros(16);
    for k in 1..16 {
        j[(k, k - 1)] = ONE;
    }
    let u = haar_sample(&GroupSpec::FullUnitary(16), 5);
    assert!(is_nilpotent(&u.conjugate(&j)));
    // corner entry 1e-3 moves every eigenvalue to modulus ~0.65
    let mut jq = j.clone();
    jq[(0, 15)] = c(1e-3, 0.0);
    assert!(!is_nilpotent(&u.conjugate(&jq)));
}

#[test]
fn nilpotent_strictly_triangular_random() {
    for seed in 0..10 {
        let mut t = random_matrix(6, seed);
        for i in 0..6 {
            for jj in i..6 {
                t[(i, jj)] = ZERO;
            }
        }
        let u = haar_sample(&GroupSpec::FullUnitary(6), seed + 100);
        assert!(is_nilpotent(&u.conjugate(&t)));
        let mut s = t.clone();
        s[(3, 3)] = c(1e-3, 0.0);
        assert!(!is_nilpotent(&u.conjugate(&s)));
    }
}

#[test]
fn predicates() {
    let h = random_matrix(3, 1);
    let herm = (&h + &h.adjoint()).scale_real(0.5);
    assert!(herm.is_hermitian(1e-15));
    assert!(herm.scale(I).is_skew_hermitian(1e-15));
    assert!(!h.is_hermitian(1e-10));
    let u = haar_sample(&GroupSpec::FullUnitary(3), 1);
    assert!(u.is_unitary(1e-12));
    assert!(example4().is_traceless(0.0));
    assert!(!ComplexMatrix::identity(2).is_traceless(1e-10));
}

#[test]
fn singular_values_descending() {
    let s = singular_values(&example4());
    assert!((s[0] - 3f64.sqrt()).abs() < 1e-14);
    assert!(s[1..].iter().all(|&x| x < 1e-14));
    assert!(s.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn block_partition() {
    assert!(BlockPartition::new(vec![]).is_err());
    assert!(BlockPartition::new(vec![2, 0]).is_err());
    let p = BlockPartition::new(vec![1, 3]).unwrap();
    assert_eq!(p.total(), 4);
    assert_eq!(p.block_of_index(), vec![0, 1, 1, 1]);
    assert_eq!(p.off_shift_mass(&example4()), 0.0);
    assert!((p.off_shift_mass(&example4().adjoint()) - 3f64.sqrt()).abs() < 1e-15);
}

#[test]
fn json_round_trip_is_exact() {
    for seed in 0..5 {
        let m = random_matrix(3, seed).scale_real(1e-7 * (seed as f64 + 1.0));
        let text = matrix_to_json(&m).unwrap();
        assert_eq!(matrix_from_json(&text).unwrap(), m);
    }
    let text = matrix_to_json(&e(2, 2, 1)).unwrap();
    assert!(text.starts_with("{\"n\":2,\"entries\":[[["));
    assert!(text.contains("1.0000000000000000e0"));
}

#[test]
fn json_rejects_bad_shapes() {
    for bad in [
        r#"{"n":2,"entries":[[[0,0],[0,0]]]}"#,
        r#"{"n":0,"entries":[]}"#,
        r#"{"n":2,"entries":[[[0,0],[0,0]],[[0,0]]]}"#,
        r#"{"n":1,"entries":[[[0]]]}"#,
        "not json",
    ] {
        assert!(matrix_from_json(bad).is_err(), "{bad}");
    }
    assert!(matrix_from_json(r#"{"n":1,"entries":[[[1.5,-2]]]}"#).is_ok());
}

#[test]
fn json_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("crange-json-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.json");
    let m = random_matrix(4, 77);
    write_matrix(&path, &m).unwrap();
    assert_eq!(read_matrix(&path).unwrap(), m);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sig17_rejects_non_finite() {
    assert!(serde_json::to_string(&Sig17(f64::NAN)).is_err());
    assert_eq!(serde_json::to_string(&Sig17(0.1)).unwrap(), "1.0000000000000001e-1");
}

#[test]
fn factorizations_reconstruct() {
    // low-rank, nilpotent and degenerate inputs as well as generic ones
    let mut inputs = vec![
        example4(),
        e(2, 1, 2).scale(c(0.15, -0.19)) + e(2, 1, 1).scale(c(0.04, 0.004)) - e(2, 2, 2).scale(c(0.04, 0.004)),
        ComplexMatrix::identity(3),
        ComplexMatrix::zeros(2),
    ];
    for seed in 0..20 {
        let n = 2 + (seed as usize % 8);
        inputs.push(random_matrix(n, seed));
        inputs.push(random_matrix(n, seed + 100).conjugate(&e(n, 1, n)));
    }
    for a in &inputs {
        let m = a.as_dmatrix();
        let svd = svd_complex(m);
        let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
        let sigma = nalgebra::DMatrix::from_diagonal(&svd.singular_values.map(|x| c(x, 0.0)));
        assert!((u * sigma * v_t - m).norm() <= 1e-13 * m.norm().max(1.0));

        let h = (a + &a.adjoint()).scale_real(0.5);
        let (vals, vecs) = hermitian_eigen(&h);
        let d = ComplexMatrix::real_diag(&vals);
        assert!(vecs.is_unitary(1e-12));
        assert!((&vecs * &d * vecs.adjoint()).distance(&h) <= 1e-12 * h.frobenius_norm().max(1.0));
    }
}

fn seed_strategy() -> impl Strategy<Value = (usize, u64)> {
    (1usize..6, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ad_matches_commutator((n, seed) in seed_strategy()) {
        let w = random_matrix(n, seed);
        let a = random_matrix(n, seed ^ 0xABCD);
        let lhs = ad_operator(&w) * nalgebra::DVector::from_vec(a.vec());
        let rhs = commutator(&w, &a).unwrap().vec();
        let err: f64 = lhs.iter().zip(&rhs).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-12);
    }

    #[test]
    fn expm_group_law((n, seed) in seed_strategy(), s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let w = random_skew(n, seed);
        let lhs = expm_skew(&w, s).unwrap() * expm_skew(&w, t).unwrap();
        prop_assert!(lhs.distance(&expm_skew(&w, s + t).unwrap()) <= 1e-10);
    }

    #[test]
    fn trace_identities((n, seed) in seed_strategy(), m in 1usize..4) {
        let a = random_matrix(n, seed);
        let b = random_matrix(m, seed.wrapping_add(1));
        prop_assert!((kron(&a, &b).trace() - a.trace() * b.trace()).norm() <= 1e-12);
        prop_assert!((direct_sum(&a, &b).trace() - a.trace() - b.trace()).norm() <= 1e-12);
    }

    #[test]
    fn inner_product_unitary_invariance((n, seed) in seed_strategy()) {
        let a = random_matrix(n, seed);
        let cm = random_matrix(n, seed.wrapping_add(7));
        let u = haar_sample(&GroupSpec::FullUnitary(n), seed.wrapping_add(13));
        let lhs = frobenius_inner(&u.conjugate(&a), &u.conjugate(&cm)).unwrap();
        let rhs = frobenius_inner(&a, &cm).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }
}
