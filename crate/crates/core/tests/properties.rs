use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use qhyper::decision::Verdict;
use qhyper::gram::{congruent, orbit_equal, reconstruct_gram, semi_normalize};
use qhyper::hlinalg::{complex_embed, herm_unchecked, HVector};
use qhyper::invariants::{angular_invariant, cross_ratio_class, profile};
use qhyper::isom::{conjugate_single, equal_by_invariants, is_member};
use qhyper::pairs::pair_conjugate;
use qhyper::quat::{conjugate_by, sp1_align, Quaternion, SimilarityClass};
use qhyper::sampling::{
    random_bounded_member, random_config, random_conjugation, random_isometry, random_unit, random_unit_rescaling, task_rng,
};

fn quat() -> impl Strategy<Value = Quaternion> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c, d)| Quaternion::new(a, b, c, d))
}

fn close(a: Quaternion, b: Quaternion, tol: f64) -> bool {
    a.dist(b) <= tol * a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn multiplication_is_associative(a in quat(), b in quat(), c in quat()) {
        prop_assert!(close((a * b) * c, a * (b * c), 1e-13));
    }

    #[test]
    fn norm_is_multiplicative(a in quat(), b in quat()) {
        prop_assert!(((a * b).norm() - a.norm() * b.norm()).abs() <= 1e-13 * (1.0 + a.norm() * b.norm()));
    }

    #[test]
    fn conjugation_reverses_products(a in quat(), b in quat()) {
        prop_assert!(close((a * b).conj(), b.conj() * a.conj(), 1e-13));
    }

    #[test]
    fn inverse_is_two_sided(a in quat()) {
        prop_assume!(a.norm() > 1e-3);
        prop_assert!(close(a * a.inv(), Quaternion::ONE, 1e-12));
        prop_assert!(close(a.inv() * a, Quaternion::ONE, 1e-12));
    }

    #[test]
    fn similarity_class_ignores_conjugation(a in quat(), m in quat()) {
        prop_assume!(m.norm() > 1e-2);
        let b = m.inv() * a * m;
        prop_assert!(SimilarityClass::of(a).approx_eq(&SimilarityClass::of(b), 1e-12));
    }

    #[test]
    fn alignment_recovers_units(seed in any::<u64>(), k in 1usize..4) {
        let mut r = task_rng(seed, 0);
        let mu = random_unit(&mut r);
        let w: Vec<Quaternion> = (0..k).map(|_| qhyper::isom::random_quaternion(&mut r)).collect();
        let v: Vec<Quaternion> = w.iter().map(|x| conjugate_by(mu, *x)).collect();
        let found = sp1_align(&v, &w, 1e-9).unwrap();
        prop_assert!(found.is_some());
        let nu = found.unwrap();
        for (a, b) in v.iter().zip(&w) {
            prop_assert!(close(conjugate_by(nu, *b), *a, 1e-9));
        }
    }

    #[test]
    fn pairing_is_sesquilinear_and_hermitian(seed in any::<u64>(), l in quat(), m in quat()) {
        let mut r = task_rng(seed, 0);
        let z = qhyper::isom::random_hvector(3, &mut r);
        let w = qhyper::isom::random_hvector(3, &mut r);
        let lhs = herm_unchecked(&z.scale(l), &w.scale(m));
        let rhs = m.conj() * herm_unchecked(&z, &w) * l;
        prop_assert!(close(lhs, rhs, 1e-12));
        prop_assert!(close(herm_unchecked(&z, &w).conj(), herm_unchecked(&w, &z), 1e-13));
    }

    #[test]
    fn group_preserves_the_form(seed in any::<u64>(), n in 1usize..4) {
        let mut r = task_rng(seed, 0);
        let c = random_bounded_member(n, &mut r).unwrap();
        prop_assert!(is_member(&c, 1e-9));
        let z = qhyper::isom::random_hvector(n + 1, &mut r);
        let w = qhyper::isom::random_hvector(n + 1, &mut r);
        let before = herm_unchecked(&z, &w);
        let after = herm_unchecked(&c.mul_vec(&z), &c.mul_vec(&w));
        prop_assert!(before.dist(after) <= 1e-9 * c.norm().powi(2));
    }

    #[test]
    fn embedding_respects_adjoints(seed in any::<u64>(), n in 1usize..4) {
        let mut r = task_rng(seed, 0);
        let a = random_bounded_member(n, &mut r).unwrap();
        let e = complex_embed(&a);
        prop_assert!((complex_embed(&a.adjoint()) - e.adjoint()).norm() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn angular_invariant_is_lift_free_and_bounded(seed in any::<u64>(), i in 0usize..4) {
        let mut r = task_rng(seed, 0);
        let c = random_config(2, 3, i, &mut r).unwrap();
        let d = random_unit_rescaling(&c, &mut r).unwrap();
        let (p, q) = (c.points(), d.points());
        let a = angular_invariant(&p[0], &p[1], &p[2]).unwrap();
        let b = angular_invariant(&q[0], &q[1], &q[2]).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((0.0..=FRAC_PI_2 + 1e-12).contains(&a));
    }

    #[test]
    fn cross_ratio_class_is_invariant(seed in any::<u64>()) {
        let mut r = task_rng(seed, 0);
        let c = random_config(2, 4, 4, &mut r).unwrap();
        let g = random_bounded_member(2, &mut r).unwrap();
        let d = random_unit_rescaling(&c.act(&g).unwrap(), &mut r).unwrap();
        let (p, q) = (c.points(), d.points());
        let x = cross_ratio_class(&p[0], &p[1], &p[2], &p[3]).unwrap();
        let y = cross_ratio_class(&q[0], &q[1], &q[2], &q[3]).unwrap();
        prop_assert!(x.approx_eq(&y, 1e-8));
    }

    #[test]
    fn profile_reconstructs_the_gram_orbit(seed in any::<u64>(), shape in 0usize..5) {
        let (m, i) = [(4, 4), (4, 3), (5, 5), (5, 0), (6, 3)][shape];
        let mut r = task_rng(seed, 0);
        let c = random_config(2, m, i, &mut r).unwrap();
        let g = reconstruct_gram(&profile(&c).unwrap()).unwrap();
        prop_assert!(orbit_equal(&semi_normalize(&c).unwrap(), &g, 1e-7).unwrap().is_some());
    }

    #[test]
    fn images_are_congruent(seed in any::<u64>(), shape in 0usize..4) {
        let (m, i) = [(4, 4), (4, 3), (5, 0), (3, 3)][shape];
        let mut r = task_rng(seed, 0);
        let a = random_config(3, m, i, &mut r).unwrap();
        let g = random_bounded_member(3, &mut r).unwrap();
        let b = random_unit_rescaling(&a.act(&g).unwrap(), &mut r).unwrap();
        let d = congruent(&a, &b, 1e-9).unwrap();
        prop_assert_eq!(d.verdict, Verdict::Congruent);
        prop_assert!(d.residual.unwrap() < 1e-7);
    }

    #[test]
    fn real_trace_is_a_class_function(seed in any::<u64>(), n in 1usize..5) {
        let mut r = task_rng(seed, 0);
        let (_, a) = random_isometry(n, &mut r).unwrap();
        let (_, img) = random_conjugation(&[&a], &mut r).unwrap();
        let b = &img[0];
        prop_assert!(a.real_trace().approx_eq(b.real_trace(), 1e-8));
        prop_assert_eq!(a.classification(), b.classification());
        prop_assert!(conjugate_single(&a, b, 1e-9).unwrap());
    }

    #[test]
    fn equal_by_invariants_is_reflexive(seed in any::<u64>(), n in 1usize..4) {
        let mut r = task_rng(seed, 0);
        let (_, a) = random_isometry(n, &mut r).unwrap();
        prop_assert!(equal_by_invariants(&a, &a, 1e-9).unwrap());
    }

    #[test]
    fn conjugate_pairs_are_recognised(seed in any::<u64>(), n in 1usize..4) {
        let mut r = task_rng(seed, 0);
        let (_, a) = random_isometry(n, &mut r).unwrap();
        let (_, b) = random_isometry(n, &mut r).unwrap();
        let (_, img) = random_conjugation(&[&a, &b], &mut r).unwrap();
        let d = pair_conjugate(&a, &b, &img[0], &img[1], 1e-9).unwrap();
        prop_assert_eq!(d.verdict, Verdict::Conjugate);
        prop_assert!(d.residual.unwrap() < 1e-7);
    }
}

#[test]
fn null_lifts_stay_null_under_the_group() {
    let mut r = task_rng(5, 0);
    for n in 1..4 {
        let c = random_bounded_member(n, &mut r).unwrap();
        let z = qhyper::sampling::random_null_point(n, &mut r);
        let w: HVector = c.mul_vec(&z);
        assert!(herm_unchecked(&w, &w).norm() <= 1e-10 * w.norm_sqr());
    }
}
