use std::cmp::Ordering;
use std::f64::consts::PI;

use concave_help::funcspace::{
    check_admissible, check_concave, random_admissible_function, random_concave_polynomial_weight,
    random_concave_weight, random_half_sine_function, random_monotone_concave_weight, Concavity, FunctionBody, Offset,
    SineCombination, WeightBody,
};
use concave_help::kappa::{
    compute_kappa_with, epsilon_equivalence_check, lemma4_residual, make_equality_case, parts_identity_residual,
    reflect_even, sweep, verify_corollary, FunctionSource, GenParams, KappaOptions,
};
use concave_help::poly::Polynomial;
use concave_help::quadrature::{ModeRequest, QuadratureMode};
use concave_help::scalar::rational;
use concave_help::{
    compute_kappa, verify_theorem, BoundaryCondition, Error, Interval, PiecewisePolynomial, Rational, TestFunction,
    WeightSpec,
};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn unit() -> Interval<Rational> {
    Interval::unit()
}

fn sine(iv: &Interval<Rational>, c: i64, mode: u32) -> TestFunction<Rational> {
    TestFunction::sine(SineCombination::single(iv.clone(), rational(c, 1), mode).unwrap())
}

fn tent() -> WeightSpec<Rational> {
    WeightSpec::piecewise_linear(
        vec![rational(0, 1), rational(1, 2), rational(1, 1)],
        vec![rational(0, 1), rational(1, 2), rational(0, 1)],
    )
    .unwrap()
}

fn x_times(iv: &Interval<Rational>) -> WeightSpec<Rational> {
    WeightSpec::polynomial(iv.clone(), Polynomial::linear(rational(0, 1), rational(1, 1))).unwrap()
}

#[test]
fn compute_kappa_examples() {
    let iv = unit();
    let one = WeightSpec::constant(iv.clone(), rational(1, 1)).unwrap();
    let r = compute_kappa(&one, &sine(&iv, 1, 1), &iv).unwrap();
    assert_eq!(r.kappa, rational(1, 1));
    assert_eq!(r.i0, rational(1, 2));
    assert!((r.i1.to_f64().unwrap() - PI * PI / 2.0).abs() <= 1e-14);
    assert!((r.i2.to_f64().unwrap() - PI.powi(4) / 2.0).abs() <= 1e-12);

    // w = 1 - x against the quarter wave
    let w = WeightSpec::polynomial(iv.clone(), Polynomial::linear(rational(1, 1), rational(-1, 1))).unwrap();
    let f = TestFunction::half_sine(SineCombination::single(iv.clone(), rational(1, 1), 1).unwrap());
    let r = compute_kappa(&w, &f, &iv).unwrap();
    let closed = ((PI * PI + 4.0) / (PI * PI - 4.0)).powi(2);
    assert!((r.kappa_f64() - closed).abs() <= 1e-12);
    assert!((r.kappa_f64() - 5.5835).abs() <= 1e-4);
    assert_eq!(r.exact.unwrap().versus_one, Some(Ordering::Greater));

    let r = compute_kappa(&x_times(&iv), &sine(&iv, 1, 1), &iv).unwrap();
    assert_eq!(r.mode, QuadratureMode::Exact);
    assert_eq!(r.kappa, rational(1, 1));
}

#[test]
fn degenerate_inputs() {
    let iv = unit();
    let zero_w = WeightSpec::constant(iv.clone(), rational(0, 1)).unwrap();
    assert!(matches!(compute_kappa(&zero_w, &sine(&iv, 1, 1), &iv), Err(Error::Degenerate(_))));
    let one = WeightSpec::constant(iv.clone(), rational(1, 1)).unwrap();
    assert!(matches!(compute_kappa(&one, &sine(&iv, 0, 3), &iv), Err(Error::Degenerate(_))));
}

#[test]
fn theorem_examples() {
    let iv = unit();
    let witness = concave_help::build_witness(&rational(1, 100)).unwrap();
    let quartic = concave_help::witness::quartic_weight();
    assert!(matches!(verify_theorem(&quartic, &witness, &iv, 1e-9), Err(Error::Hypothesis(_))));

    let case = make_equality_case(&iv, 2, rational(3, 1), &[rational(0, 1), rational(1, 1), rational(0, 1)]).unwrap();
    let v = verify_theorem(&case.weight, &case.function, &iv, 1e-9).unwrap();
    assert!(v.passed);
    assert_eq!(v.slack, 0.0);
    assert_eq!(v.report.kappa, rational(1, 1));

    // tent weight is min(2x, 2 - 2x) up to the factor 2, which κ ignores
    assert_eq!(case.weight.eval(&rational(1, 4)).unwrap(), rational(1, 2));
    assert_eq!(case.weight.eval(&rational(3, 4)).unwrap(), rational(1, 2));

    // a half-sine function is refused: the Theorem needs f(b) = 0
    let half = TestFunction::half_sine(SineCombination::single(iv.clone(), rational(1, 1), 1).unwrap());
    assert!(matches!(verify_theorem(&tent(), &half, &iv, 1e-9), Err(Error::Hypothesis(_))));

    // sampled weights are never certified
    let sampled = WeightSpec::sampled(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 0.0]).unwrap();
    let f = TestFunction::sine(SineCombination::single(Interval::unit(), 1.0, 1).unwrap());
    assert!(matches!(verify_theorem(&sampled, &f, &Interval::unit(), 1e-9), Err(Error::Hypothesis(_))));
}

#[test]
fn equality_case_examples() {
    let iv = unit();
    let n1 = make_equality_case(&iv, 1, rational(1, 1), &[rational(1, 1), rational(1, 1)]).unwrap();
    assert_eq!(n1.weight.eval(&rational(1, 3)).unwrap(), rational(1, 1));
    assert_eq!(compute_kappa(&n1.weight, &n1.function, &iv).unwrap().kappa, rational(1, 1));
    let bad = make_equality_case(&iv, 2, rational(1, 1), &[rational(0, 1), rational(1, 1), rational(3, 1)]);
    assert!(matches!(bad, Err(Error::Concavity(_))));
    let zero = make_equality_case(&iv, 3, rational(1, 1), &vec![rational(0, 1); 4]);
    assert!(matches!(zero, Err(Error::Degenerate(_))));
    assert!(matches!(
        make_equality_case(&iv, 2, rational(0, 1), &[rational(0, 1), rational(1, 1), rational(0, 1)]),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(make_equality_case(&iv, 2, rational(1, 1), &[rational(1, 1)]), Err(Error::Parameter(_))));

    // on a non-unit interval, adaptive mode gets within 1e-9
    let ivf = Interval::<f64>::new(-1.0, 2.0).unwrap();
    let case = make_equality_case(&ivf, 3, -0.7, &[0.0, 1.0, 1.5, 1.0]).unwrap();
    let opts = KappaOptions { mode: ModeRequest::Adaptive, ..Default::default() };
    let r = compute_kappa_with(&case.weight, &case.function, &ivf, opts).unwrap();
    assert!((r.kappa - 1.0).abs() <= 1e-9, "{}", r.kappa);
}

#[test]
fn breaking_linearity_on_one_subinterval_lowers_kappa() {
    let iv = unit();
    let f = sine(&iv, 1, 2);
    // lift the midpoint of J_1: still concave, no longer linear there
    for eps in [rational(1, 10), rational(1, 100), rational(1, 10_000)] {
        let w = WeightSpec::piecewise_linear(
            vec![rational(0, 1), rational(1, 4), rational(1, 2), rational(1, 1)],
            vec![rational(0, 1), rational(1, 2) + &eps, rational(1, 1), rational(0, 1)],
        )
        .unwrap();
        assert_eq!(check_concave(&w).verdict, Concavity::CertifiedConcave);
        let r = compute_kappa(&w, &f, &iv).unwrap();
        assert_eq!(r.mode, QuadratureMode::Exact);
        assert_eq!(r.exact.unwrap().versus_one, Some(Ordering::Less), "eps = {eps}");
    }
}

#[test]
fn reflect_examples() {
    let iv = unit();
    let half = TestFunction::half_sine(SineCombination::single(iv.clone(), rational(1, 1), 1).unwrap());
    let (rw, rf, riv) = reflect_even(&x_times(&iv), &half, &iv).unwrap();
    assert_eq!(riv, Interval::new(rational(0, 1), rational(2, 1)).unwrap());
    for (x, expected) in [(rational(1, 2), rational(1, 2)), (rational(3, 2), rational(1, 2)), (rational(1, 1), rational(1, 1))] {
        assert_eq!(rw.eval(&x).unwrap(), expected);
    }
    let FunctionBody::Sine(s) = rf.body() else { panic!("sine") };
    assert_eq!((s.terms().len(), s.terms()[0].mode), (1, 1));
    assert_eq!(s.interval(), &riv);

    // the constant weight reflects to itself
    let one = WeightSpec::constant(iv.clone(), rational(1, 1)).unwrap();
    let f = random_half_sine_function::<Rational>(5, &iv, 3).unwrap();
    let (rw, rf, riv) = reflect_even(&one, &f, &iv).unwrap();
    assert_eq!(rw, WeightSpec::constant(riv.clone(), rational(1, 1)).unwrap());
    assert_eq!(rf.bc(), BoundaryCondition::DirichletDirichlet);
    let c = verify_corollary(&one, &f, &iv, 1e-9).unwrap();
    assert!(c.passed && c.agree);

    let decreasing = WeightSpec::polynomial(iv.clone(), Polynomial::linear(rational(1, 1), rational(-1, 1))).unwrap();
    assert!(matches!(reflect_even(&decreasing, &half, &iv), Err(Error::Hypothesis(_))));
    assert!(matches!(reflect_even(&one, &sine(&iv, 1, 1), &iv), Err(Error::Hypothesis(_))));
}

#[test]
fn parts_identity_examples() {
    let iv = unit();
    let w = WeightSpec::polynomial(iv.clone(), Polynomial::new(vec![rational(0, 1), rational(1, 1), rational(-1, 1)])).unwrap();
    let r = parts_identity_residual(&w, &sine(&iv, 1, 1), &iv).unwrap();
    assert!(r.residual <= 1e-10);
    assert!((r.lhs + 1.0).abs() <= 1e-12 && (r.rhs + 1.0).abs() <= 1e-12);

    let one = WeightSpec::constant(iv.clone(), rational(1, 1)).unwrap();
    let f = random_admissible_function::<Rational>(11, &iv, 4).unwrap();
    let r = parts_identity_residual(&one, &f, &iv).unwrap();
    assert_eq!(r.lhs, 0.0);
    assert!(r.residual <= 1e-10);

    let ivf = Interval::<f64>::unit();
    let x2 = WeightSpec::polynomial(ivf.clone(), Polynomial::monomial(1.0, 2)).unwrap();
    let f2 = TestFunction::sine(SineCombination::single(ivf.clone(), 1.0, 2).unwrap());
    assert!(parts_identity_residual(&x2, &f2, &ivf).unwrap().residual <= 1e-10);

    assert!(matches!(parts_identity_residual(&tent(), &sine(&iv, 1, 1), &iv), Err(Error::Mode(_))));
}

#[test]
fn lemma4_examples() {
    let iv = unit();
    let bump = PiecewisePolynomial::single(&iv, Polynomial::new(vec![rational(0, 1), rational(1, 1), rational(-1, 1)]));
    let f = TestFunction::piecewise(bump, BoundaryCondition::DirichletDirichlet);
    let r = lemma4_residual(&tent(), &f, &iv).unwrap();
    assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    assert!(r.residual <= 1e-12);

    let r = lemma4_residual(&tent(), &sine(&iv, 1, 2), &iv).unwrap();
    assert!(r.residual <= 1e-10);
    // ∫ min(x, 1-x) 2π cos(2πx) dx = -2/π
    let expected = -2.0 / PI;
    assert!((r.lhs - expected).abs() <= 1e-12, "{}", r.lhs);

    let r = lemma4_residual(&x_times(&iv), &sine(&iv, 1, 1), &iv).unwrap();
    assert!((r.lhs + 2.0 / PI).abs() <= 1e-12 && (r.rhs + 2.0 / PI).abs() <= 1e-12);
    assert!(r.residual <= 1e-10);
}

#[test]
fn epsilon_examples() {
    let q = |p| rational(p, 1);
    let r = epsilon_equivalence_check(&q(1), &q(1), &q(1), &[rational(1, 4), rational(1, 2), q(2)], 0.0).unwrap();
    assert!(r.cauchy_holds && r.eps_star_holds && r.consistent);
    assert!(r.grid.iter().all(|(_, h)| *h));
    let r = epsilon_equivalence_check(&q(1), &q(2), &q(1), &[q(1)], 0.0).unwrap();
    assert!(!r.cauchy_holds && !r.eps_star_holds && r.consistent);
    assert_eq!(r.grid, vec![(1.0, false)]);
    assert!(matches!(epsilon_equivalence_check(&q(1), &q(-1), &q(1), &[q(1)], 0.0), Err(Error::Parameter(_))));
    assert!(matches!(epsilon_equivalence_check(&q(1), &q(1), &q(1), &[q(0)], 0.0), Err(Error::Parameter(_))));

    let iv = unit();
    let v = verify_theorem(&tent(), &random_admissible_function::<Rational>(3, &iv, 3).unwrap(), &iv, 1e-9).unwrap();
    assert!(v.passed);
    let (a, b, c) = (&v.report.i0, &v.report.i1, &v.report.i2);
    let star = b / (rational(2, 1) * a);
    let eps: Vec<Rational> = (0..=6).map(|k| &star * rational(1 << k, 8)).collect();
    let r = epsilon_equivalence_check(a, b, c, &eps, 0.0).unwrap();
    assert!(r.cauchy_holds && r.eps_star_holds && r.consistent);
}

#[test]
fn sweep_examples() {
    let iv = Interval::<f64>::unit();
    let one = sweep(9, 1, &iv, &GenParams::default()).unwrap();
    assert_eq!(one.entries.len(), 1);
    assert_eq!(one.closest_to_one.len(), 1);
    assert!(matches!(sweep(9, 0, &iv, &GenParams::default()), Err(Error::Parameter(_))));

    let params = GenParams { source: FunctionSource::EqualityCases { max_n: 5 }, slack: 1e-9 };
    let r = sweep(4, 40, &iv, &params).unwrap();
    assert!((r.max_kappa - 1.0).abs() <= 1e-9 && (r.min_kappa - 1.0).abs() <= 1e-9);
    assert!(r.failures.is_empty());

    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 41);
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["entries"].as_array().unwrap().len(), 40);
    assert!(json["entries"][0]["I0"].is_number());
}

fn random_pair(seed: u64, pieces: usize, modes: u32) -> (WeightSpec<f64>, TestFunction<f64>) {
    let iv = Interval::<f64>::unit();
    (
        random_concave_weight(seed, &iv, pieces).unwrap(),
        random_admissible_function(seed.wrapping_add(1), &iv, modes).unwrap(),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn kappa_is_scale_invariant(seed in any::<u64>(), pieces in 1usize..6, modes in 1u32..6, c in 1u32..50) {
        let iv = Interval::<f64>::unit();
        let (w, f) = random_pair(seed, pieces, modes);
        let base = compute_kappa(&w, &f, &iv).unwrap().kappa;
        for lambda in [-3.0, 1.0 / 7.0, 10.0] {
            let k = compute_kappa(&w, &f.scale(&lambda), &iv).unwrap().kappa;
            prop_assert!(rel(k, base) <= 1e-12, "λ = {}: {} vs {}", lambda, k, base);
        }
        let k = compute_kappa(&w.scale(&(c as f64 / 8.0)).unwrap(), &f, &iv).unwrap().kappa;
        prop_assert!(rel(k, base) <= 1e-12, "{} vs {}", k, base);
    }

    #[test]
    fn kappa_is_dilation_invariant(seed in any::<u64>(), pieces in 1usize..5, modes in 1u32..5, a in -5i64..5, len in 1i64..7) {
        let iv = unit();
        let w = random_concave_weight::<Rational>(seed, &iv, pieces).unwrap();
        let f = random_admissible_function::<Rational>(seed ^ 77, &iv, modes).unwrap();
        let target = Interval::new(rational(a, 1), rational(a, 1) + rational(len, 2)).unwrap();
        let base = compute_kappa(&w, &f, &iv).unwrap();
        let moved = compute_kappa(&w.transport(&target).unwrap(), &f.transport(&target).unwrap(), &target).unwrap();
        if let (Some(b), Some(m)) = (&base.exact, &moved.exact) {
            // κ is a ratio of π-Laurent polynomials; compare cross products exactly
            prop_assert_eq!(b.i1.mul(&b.i1).mul(&m.i0).mul(&m.i2), m.i1.mul(&m.i1).mul(&b.i0).mul(&b.i2));
        } else {
            prop_assert!(rel(base.kappa_f64(), moved.kappa_f64()) <= 1e-10);
        }
    }

    #[test]
    fn theorem_and_chain_hold(seed in any::<u64>(), pieces in 1usize..8, modes in 1u32..7) {
        let iv = Interval::<f64>::unit();
        let (w, f) = random_pair(seed, pieces, modes);
        let v = verify_theorem(&w, &f, &iv, 1e-9).unwrap();
        prop_assert!(v.passed, "κ = {}", v.report.kappa);
        prop_assert!(v.report.kappa <= 1.0 + 1e-9);
        prop_assert!(v.chain.holds, "{:?}", v.chain);
        let r = &v.report;
        prop_assert!(r.i1 <= r.mid + 1e-9 * r.i1.abs());
        prop_assert!(r.mid <= (r.i0 * r.i2).sqrt() * (1.0 + 1e-9));
    }

    #[test]
    fn theorem_holds_exactly_for_polynomial_weights(seed in any::<u64>(), degree in 0usize..4, modes in 1u32..5) {
        let iv = unit();
        let w = random_concave_polynomial_weight::<Rational>(seed, &iv, degree, Offset::Random).unwrap();
        let f = random_admissible_function::<Rational>(seed ^ 5, &iv, modes).unwrap();
        let v = verify_theorem(&w, &f, &iv, 0.0).unwrap();
        prop_assert_eq!(v.report.mode, QuadratureMode::Exact);
        prop_assert!(v.passed);
        prop_assert_ne!(v.report.exact.as_ref().unwrap().versus_one, Some(Ordering::Greater));
    }

    #[test]
    fn reflection_meets_the_theorem_hypotheses(seed in any::<u64>(), pieces in 1usize..6, modes in 1u32..5) {
        let iv = unit();
        let w = random_monotone_concave_weight::<Rational>(seed, &iv, pieces, Offset::Random).unwrap();
        let f = random_half_sine_function::<Rational>(seed ^ 3, &iv, modes).unwrap();
        let (rw, rf, riv) = reflect_even(&w, &f, &iv).unwrap();
        prop_assert_eq!(check_concave(&rw).verdict, Concavity::CertifiedConcave);
        prop_assert!(rw.is_certified_nonnegative());
        prop_assert!(check_admissible(&rf, &riv).passed());
        prop_assert_eq!(rf.bc(), BoundaryCondition::DirichletDirichlet);
        if let WeightBody::PiecewiseLinear { nodes, .. } = rw.body() {
            for x in nodes {
                let mirror = riv.a() + riv.b() - x;
                prop_assert_eq!(rw.eval(x).unwrap(), rw.eval(&mirror).unwrap());
            }
        }
        let c = verify_corollary(&w, &f, &iv, 1e-9).unwrap();
        prop_assert!(c.passed && c.agree, "{:?}", c.difference);
    }
}
