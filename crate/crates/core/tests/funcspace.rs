use std::f64::consts::PI;

use concave_help::funcspace::schema::ProblemJson;
use concave_help::funcspace::{
    check_admissible, check_concave, eval_derivatives, random_admissible_function, random_concave_weight,
    random_concave_weight_with, Concavity, FunctionBody, Nonnegativity, Offset, SineCombination, WeightBody,
};
use concave_help::poly::Polynomial;
use concave_help::scalar::rational;
use concave_help::witness::build_witness;
use concave_help::{BoundaryCondition, Error, Interval, PiecewisePolynomial, Rational, TestFunction, WeightSpec};
use proptest::prelude::*;

fn unit() -> Interval<f64> {
    Interval::unit()
}

fn sine(mode: u32) -> TestFunction<f64> {
    TestFunction::sine(SineCombination::single(unit(), 1.0, mode).unwrap())
}

fn tent() -> WeightSpec<Rational> {
    WeightSpec::piecewise_linear(
        vec![rational(0, 1), rational(1, 2), rational(1, 1)],
        vec![rational(0, 1), rational(1, 2), rational(0, 1)],
    )
    .unwrap()
}

#[test]
fn first_mode_derivatives() {
    let (v, d1, d2) = eval_derivatives(&sine(1), 0.5).unwrap();
    assert!((v - 1.0).abs() < 1e-15);
    assert!(d1.abs() < 1e-15);
    assert!((d2 + PI * PI).abs() < 1e-13);
    let (v, d1, d2) = eval_derivatives(&sine(1), 0.0).unwrap();
    assert_eq!(v, 0.0);
    assert!((d1 - PI).abs() < 1e-15);
    assert_eq!(d2, 0.0);
    assert!(matches!(eval_derivatives(&sine(1), 1.5), Err(Error::Domain(_))));
}

#[test]
fn witness_linear_piece() {
    let f = build_witness(&rational(1, 4)).unwrap();
    let FunctionBody::Piecewise(p) = f.body() else { panic!("witness is piecewise") };
    let values = p.eval_derivatives(&rational(1, 8)).unwrap();
    assert_eq!(values, (rational(1, 2), rational(4, 1), rational(0, 1)));
}

#[test]
fn concavity_examples() {
    let iv = Interval::<Rational>::unit();
    let quartic = WeightSpec::polynomial(iv.clone(), Polynomial::monomial(rational(1, 1), 4)).unwrap();
    assert_eq!(check_concave(&quartic).verdict, Concavity::CertifiedNotConcave);
    assert!(check_concave(&quartic).certificate.is_some());
    let decreasing = WeightSpec::polynomial(iv, Polynomial::linear(rational(1, 1), rational(-1, 1))).unwrap();
    assert_eq!(check_concave(&decreasing).verdict, Concavity::CertifiedConcave);
    assert_eq!(check_concave(&tent()).verdict, Concavity::CertifiedConcave);
}

#[test]
fn sampled_weights_are_never_certified() {
    let w = WeightSpec::sampled(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 0.0]).unwrap();
    assert_eq!(w.concavity(), Concavity::Unknown);
    assert_eq!(w.nonnegativity(), Nonnegativity::Unknown);
}

#[test]
fn admissibility_examples() {
    assert!(check_admissible(&sine(2), &unit()).passed());
    let identity = PiecewisePolynomial::single(&unit(), Polynomial::linear(0.0, 1.0));
    let f = TestFunction::piecewise(identity, BoundaryCondition::DirichletDirichlet);
    assert!(!check_admissible(&f, &unit()).passed());
    let w = build_witness(&rational(1, 4)).unwrap();
    match check_admissible(&w, &Interval::unit()) {
        concave_help::funcspace::Admissibility::Pass { junctions } => {
            assert_eq!(junctions, vec![rational(1, 4), rational(1, 2)]);
        }
        other => panic!("{other:?}"),
    }
}

fn slopes(w: &WeightSpec<Rational>) -> Vec<Rational> {
    let WeightBody::PiecewiseLinear { nodes, values } = w.body() else { panic!("piecewise linear") };
    nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| (&y[1] - &y[0]) / (&x[1] - &x[0]))
        .collect()
}

fn node_values(w: &WeightSpec<Rational>) -> Vec<Rational> {
    let WeightBody::PiecewiseLinear { values, .. } = w.body() else { panic!("piecewise linear") };
    values.clone()
}

#[test]
fn generator_examples() {
    let iv = Interval::<Rational>::unit();
    let one = random_concave_weight(1, &iv, 1).unwrap();
    assert!(one.is_certified_nonnegative());
    assert_eq!(slopes(&one).len(), 1);
    let five = random_concave_weight(7, &iv, 5).unwrap();
    let s = slopes(&five);
    assert!(s.windows(2).all(|p| p[1] < p[0]));
    assert_eq!(node_values(&five).into_iter().min().unwrap(), rational(0, 1));
    assert!(matches!(random_concave_weight(3, &iv, 0), Err(Error::Parameter(_))));

    let f = random_admissible_function(0, &unit(), 1).unwrap();
    let FunctionBody::Sine(c) = f.body() else { panic!("sine") };
    assert_eq!(c.terms().len(), 1);
    assert_ne!(c.terms()[0].coefficient, 0.0);
    let g = random_admissible_function(3, &unit(), 4).unwrap();
    assert!(check_admissible(&g, &unit()).passed());
    assert_eq!(g, random_admissible_function(3, &unit(), 4).unwrap());
    assert!(matches!(random_admissible_function(3, &unit(), 0), Err(Error::Parameter(_))));
}

#[test]
fn problem_json_round_trip() {
    let text = r#"{"interval": ["0", "1"],
        "weight": {"kind": "piecewise_linear", "nodes": ["0", "1/2", 1], "values": [0, "0.5", "0"]},
        "function": {"kind": "sine", "terms": [{"coefficient": "3", "mode": 2}]}}"#;
    let p = ProblemJson::parse(text).unwrap();
    let w = p.weight::<Rational>().unwrap();
    assert_eq!(w, tent());
    let f = p.function::<Rational>().unwrap();
    assert_eq!(f.bc(), BoundaryCondition::DirichletDirichlet);
    let back = ProblemJson::from_specs(&p.interval::<Rational>().unwrap(), Some(&w), Some(&f)).unwrap();
    assert_eq!(ProblemJson::parse(&serde_json::to_string(&back).unwrap()).unwrap(), back);
    assert!(matches!(ProblemJson::parse(r#"{"interval": [0, 1], "extra": 1}"#), Err(Error::Schema(_))));
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-40i64..=40, 1i64..=12).prop_map(|(p, q)| rational(p, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sine_combinations_vanish_at_both_ends(
        a in -5.0f64..5.0,
        len in 0.1f64..10.0,
        terms in prop::collection::vec((-3.0f64..3.0, 1u32..12), 1..5),
    ) {
        let iv = Interval::new(a, a + len).unwrap();
        let s = SineCombination::new(
            iv.clone(),
            terms.iter().map(|&(c, m)| concave_help::funcspace::SineTerm { coefficient: c, mode: m }).collect(),
        ).unwrap();
        let f = TestFunction::sine(s);
        prop_assert_eq!(eval_derivatives(&f, *iv.a()).unwrap().0, 0.0);
        prop_assert_eq!(eval_derivatives(&f, *iv.b()).unwrap().0, 0.0);
    }

    #[test]
    fn slope_order_decides_concavity(
        seed in any::<u64>(),
        pieces in 2usize..8,
        kink in any::<prop::sample::Index>(),
    ) {
        let iv = Interval::<Rational>::unit();
        let w = random_concave_weight_with(seed, &iv, pieces, Offset::Random).unwrap();
        prop_assert_eq!(check_concave(&w).verdict, Concavity::CertifiedConcave);
        // raise the slope after one interior node above the slope before it
        let WeightBody::PiecewiseLinear { nodes, values } = w.body() else { unreachable!() };
        let j = 1 + kink.index(nodes.len() - 2);
        let s = slopes(&w);
        let bump = &s[j - 1] - &s[j] + rational(1, 1);
        let bent: Vec<Rational> = values
            .iter()
            .zip(nodes)
            .map(|(v, x)| if x > &nodes[j] { v + &bump * (x - &nodes[j]) } else { v.clone() })
            .collect();
        let flipped = WeightSpec::piecewise_linear(nodes.clone(), bent).unwrap();
        prop_assert_eq!(check_concave(&flipped).verdict, Concavity::CertifiedNotConcave);
    }

    #[test]
    fn quadratic_curvature_sign_decides_concavity(c in small_rational(), b in small_rational(), d in small_rational()) {
        prop_assume!(c != rational(0, 1));
        let iv = Interval::<Rational>::unit();
        // c x(1-x) + b x + d has w'' = -2c everywhere
        let p = Polynomial::new(vec![d, &c + &b, -c.clone()]);
        let w = WeightSpec::polynomial(iv, p).unwrap();
        let expected = if c > rational(0, 1) { Concavity::CertifiedConcave } else { Concavity::CertifiedNotConcave };
        prop_assert_eq!(check_concave(&w).verdict, expected);
    }

    #[test]
    fn piecewise_derivatives_match_finite_differences(
        cuts in prop::collection::btree_set(1u32..100, 1..5),
        coeffs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 1..7), 6),
        samples in prop::collection::vec(0.0f64..1.0, 100),
    ) {
        let mut bps = vec![0.0];
        bps.extend(cuts.iter().map(|&k| k as f64 / 100.0));
        bps.push(1.0);
        let pieces: Vec<Polynomial<f64>> = coeffs[..bps.len() - 1].iter().map(|c| Polynomial::new(c.clone())).collect();
        let p = PiecewisePolynomial::from_pieces(bps.clone(), pieces).unwrap();
        let h = 1e-5;
        for x in samples {
            if bps.iter().any(|b| (x - b).abs() < 2.0 * h) {
                continue;
            }
            let (_, d1, d2) = p.eval_derivatives(&x).unwrap();
            let (vm, vp) = (p.eval(&(x - h)).unwrap(), p.eval(&(x + h)).unwrap());
            let fd1 = (vp - vm) / (2.0 * h);
            prop_assert!((fd1 - d1).abs() <= 1e-6 * d1.abs().max(1.0), "f' at {}: {} vs {}", x, d1, fd1);
            let (_, d1m, _) = p.eval_derivatives(&(x - h)).unwrap();
            let (_, d1p, _) = p.eval_derivatives(&(x + h)).unwrap();
            let fd2 = (d1p - d1m) / (2.0 * h);
            prop_assert!((fd2 - d2).abs() <= 1e-6 * d2.abs().max(1.0), "f'' at {}: {} vs {}", x, d2, fd2);
        }
    }

    #[test]
    fn weight_json_round_trips(seed in any::<u64>(), pieces in 1usize..6) {
        let iv = Interval::<Rational>::unit();
        let w = random_concave_weight_with(seed, &iv, pieces, Offset::Random).unwrap();
        let p = ProblemJson::from_specs(&iv, Some(&w), None).unwrap();
        let back = ProblemJson::parse(&serde_json::to_string(&p).unwrap()).unwrap().weight::<Rational>().unwrap();
        prop_assert_eq!(back, w);
    }
}
