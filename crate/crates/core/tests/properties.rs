use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use opcalc::bounds::{
    defect_diff_check, dilation_diff_check, series_bound_check, sqrt_lipschitz_check, strict_pair_check, DiffNorms,
};
use opcalc::calculus::{finite_dilation, fourier_eval, Contraction};
use opcalc::campaign::{CampaignConfig, CheckId, Overrides};
use opcalc::circlefn::{divided_difference, zoo, CircleFunction};
use opcalc::doi::{doi_algebra_check, left_character, right_character, DoiSymbol};
use opcalc::gen::{gen_contraction, gen_pair_with_gap, gen_psd_rng, gen_unitary};
use opcalc::linalg::{schatten_norm, unitary_eig, CMat, SchattenOrder, C64};
use opcalc::shift::{eta_recover, trace_formula_check, ShiftFunction};

fn order() -> impl Strategy<Value = SchattenOrder> {
    prop_oneof![
        (1.0f64..8.0).prop_map(SchattenOrder::Finite),
        Just(SchattenOrder::Finite(2.0)),
        Just(SchattenOrder::Inf),
    ]
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e3f64..1e3]
}

fn matrix() -> impl Strategy<Value = CMat> {
    (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
        proptest::collection::vec((finite(), finite()), r * c).prop_map(move |v| {
            CMat::from_row_major(r, c, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap()
        })
    })
}

fn poly() -> impl Strategy<Value = CircleFunction> {
    proptest::collection::btree_map(-6i64..=6, (-1.0f64..1.0, -1.0f64..1.0), 1..6)
        .prop_map(|m| CircleFunction::from_coeffs(m.into_iter().map(|(n, (a, b))| (n, C64::new(a, b)))))
}

fn zoo_fn() -> impl Strategy<Value = &'static CircleFunction> {
    (0..zoo::all().len()).prop_map(|k| &zoo::all()[k])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matrix_json_is_bit_exact(m in matrix()) {
        let back = CMat::from_json(&m.to_json()).unwrap();
        let bits = |m: &CMat| m.row_major().iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&m));
        prop_assert_eq!((back.rows(), back.cols()), (m.rows(), m.cols()));
    }

    #[test]
    fn circle_function_json_round_trip(f in poly()) {
        let back = CircleFunction::from_json(&f.to_json()).unwrap();
        for n in -6..=6 {
            prop_assert_eq!(back.coeff(n), f.coeff(n));
        }
    }

    #[test]
    fn shift_function_json_round_trip(coeffs in proptest::collection::vec((finite(), finite()), 1..10)) {
        let n = coeffs.len();
        let pairs = coeffs.iter().enumerate().map(|(k, &(a, b))| (if k % 2 == 0 { k as i64 + 1 } else { -(k as i64) }, C64::new(a, b)));
        let eta = ShiftFunction::from_coeffs(n, pairs).unwrap();
        prop_assert_eq!(ShiftFunction::from_json(&eta.to_json()).unwrap(), eta);
    }

    #[test]
    fn schatten_norms_decrease_in_p(seed in any::<u64>(), n in 1usize..6, a in 1.0f64..6.0, b in 1.0f64..6.0) {
        let m = gen_contraction(seed, n, 0.7).unwrap().into_mat();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let nl = schatten_norm(&m, SchattenOrder::Finite(lo)).unwrap();
        let nh = schatten_norm(&m, SchattenOrder::Finite(hi)).unwrap();
        let ni = schatten_norm(&m, SchattenOrder::Inf).unwrap();
        prop_assert!(nh <= nl * (1.0 + 1e-12));
        prop_assert!(ni <= nh * (1.0 + 1e-12));
    }

    #[test]
    fn schatten_norms_unitarily_invariant(seed in any::<u64>(), n in 1usize..6, p in order()) {
        let m = gen_contraction(seed, n, 0.5).unwrap().into_mat();
        let (u, v) = (gen_unitary(seed ^ 1, n), gen_unitary(seed ^ 2, n));
        let a = schatten_norm(&m, p).unwrap();
        let b = schatten_norm(&(&(&u * &m) * &v), p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        prop_assert_eq!(DiffNorms::new(&m).unwrap().norm(p), a);
    }

    #[test]
    fn dilation_is_unitary_and_reproduces_powers(seed in any::<u64>(), n in 1usize..5, degree in 1usize..8, norm in 0.0f64..=1.0) {
        let t = gen_contraction(seed, n, norm).unwrap();
        let u = finite_dilation(&t, degree).unwrap();
        prop_assert!(u.unitarity_residual() <= 1e-10);
        prop_assert!(u.power_residual(&t) <= 1e-9);
        prop_assert_eq!(u.u().rows(), (degree + 1) * n);
    }

    #[test]
    fn fourier_calculus_is_linear(seed in any::<u64>(), f in poly(), g in poly(), a in -2.0f64..2.0) {
        let t = gen_contraction(seed, 3, 0.8).unwrap();
        let h = CircleFunction::lin_comb(C64::new(a, 0.0), &f, C64::new(1.0, 0.0), &g);
        let lhs = fourier_eval(&h, t.mat()).unwrap();
        let rhs = &fourier_eval(&f, t.mat()).unwrap().scale_re(a) + &fourier_eval(&g, t.mat()).unwrap();
        prop_assert!((&lhs - &rhs).op_norm() <= 1e-12 * (1.0 + rhs.op_norm()));
    }

    #[test]
    fn series_and_strict_bounds_hold(seed in any::<u64>(), n in 1usize..5, gap in 1e-3f64..1.0, p in order(), f in zoo_fn()) {
        let s = gen_pair_with_gap(seed, n, 0.7, gap, p).unwrap();
        prop_assert!(series_bound_check(f, &s.t0, &s.t1, p).unwrap().pass());
        if s.t1.is_strict() {
            prop_assert!(strict_pair_check(f, &s.t0, &s.t1, p).unwrap().pass());
        }
    }

    #[test]
    fn defect_and_dilation_bounds_hold(seed in any::<u64>(), n in 1usize..5, delta in 0.05f64..1.0, gap in 1e-3f64..1.0, p in order(), degree in 1usize..6) {
        let norm0 = ((1.0 - delta) * (1.0 + delta)).sqrt();
        let s = gen_pair_with_gap(seed, n, norm0, gap, p).unwrap();
        prop_assert!(defect_diff_check(&s.t0, &s.t1, p).unwrap().pass());
        prop_assert!(dilation_diff_check(&s.t0, &s.t1, degree, p).unwrap().pass());
    }

    #[test]
    fn sqrt_lipschitz_holds(seed in any::<u64>(), n in 1usize..5, delta in 0.1f64..0.9, p in order()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = gen_psd_rng(&mut rng, n, delta, 1.0);
        let a = gen_psd_rng(&mut rng, n, 0.0, 1.0);
        prop_assert!(sqrt_lipschitz_check(&a, &b, delta, p).unwrap().pass());
    }

    #[test]
    fn divided_difference_is_symmetric_and_bounded(f in zoo_fn(), l in 0.0f64..6.3, m in 0.0f64..6.3) {
        let a = divided_difference(f, l, m, 1e-12);
        let b = divided_difference(f, m, l, 1e-12);
        prop_assert_eq!(a, b);
        prop_assert!(a.norm() <= f.lip_chordal().unwrap() * (1.0 + 1e-8) + 1e-14);
    }

    #[test]
    fn doi_is_multiplicative_and_linear(seed in any::<u64>(), n in 1usize..5, j in -4i64..4, k in -4i64..4) {
        let (u, v) = (gen_unitary(seed, n), gen_unitary(seed.wrapping_add(1), n));
        let x = gen_contraction(seed ^ 7, n, 1.0).unwrap().into_mat();
        let (e, f) = (unitary_eig(&u, 1e-10).unwrap(), unitary_eig(&v, 1e-10).unwrap());
        let (phi, psi) = (left_character(j), right_character(k));
        let (mult, lin) = doi_algebra_check(&e, &f, &phi, &psi, &x).unwrap();
        prop_assert!(mult <= 1e-12 && lin <= 1e-12);
        let one = opcalc::doi::doi_apply(&DoiSymbol::constant(C64::new(1.0, 0.0)), &e, &f, &x).unwrap();
        prop_assert!((&one - &x).frobenius() <= 1e-12);
    }

    #[test]
    fn trace_formula_holds(seed in any::<u64>(), n in 1usize..5, gap in 1e-3f64..1.0, f in poly()) {
        let s = gen_pair_with_gap(seed, n, 0.9, gap, SchattenOrder::Finite(2.0)).unwrap();
        let x = gen_unitary(seed ^ 3, n);
        let eta = eta_recover(s.t0.mat(), s.t1.mat(), &x, 8).unwrap();
        prop_assert!(trace_formula_check(&f, s.t0.mat(), s.t1.mat(), &x, &eta).unwrap() <= 1e-10);
    }

    #[test]
    fn contraction_rejects_large_norms(seed in any::<u64>(), n in 1usize..4, excess in 1e-6f64..1.0) {
        let m = gen_contraction(seed, n, 1.0).unwrap().into_mat().scale_re(1.0 + excess);
        prop_assert!(Contraction::new(m).is_err());
    }

    #[test]
    fn check_overrides_are_canonical(picks in proptest::collection::vec(0usize..10, 0..12)) {
        let mut cfg = CampaignConfig::default();
        let checks: Vec<CheckId> = picks.iter().map(|&k| CheckId::ALL[k]).collect();
        cfg.apply(&Overrides { checks: checks.clone(), ..Overrides::default() });
        if checks.is_empty() {
            prop_assert_eq!(cfg.checks, CheckId::ALL.to_vec());
        } else {
            prop_assert!(cfg.checks.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(checks.iter().all(|c| cfg.checks.contains(c)));
        }
    }
}
