//! One test per acceptance criterion. Tolerances are fixed here.

use std::time::{Duration, Instant};

use concave_help::funcspace::{
    random_admissible_function, random_concave_polynomial_weight, random_concave_weight, random_half_sine_function,
    random_monotone_concave_weight, Offset, SineCombination, Smoothness, WeightBody,
};
use concave_help::kappa::{
    lemma4_residual, parts_identity_residual, random_equality_case, reflect_even, sweep, verify_corollary, GenParams,
};
use concave_help::poly::Polynomial;
use concave_help::scalar::rational;
use concave_help::search::{gradient_check, SearchOptions};
use concave_help::smoothing::smoothing_convergence;
use concave_help::witness::{
    limit_delta_kappa, monotonicity_closed_form, monotonicity_example, paper_coefficients,
    solve_coefficients, witness_study,
};
use concave_help::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn within(start: Instant, limit: Duration) {
    let t = start.elapsed();
    assert!(t < limit, "took {t:?}, limit {limit:?}");
}

fn random_delta(rng: &mut ChaCha8Rng) -> Rational {
    let q: i64 = rng.random_range(101..=999);
    let p: i64 = rng.random_range(q / 100 + 1..=(49 * q - 1) / 100);
    rational(p, q)
}

#[test]
fn c01_monotonicity_example() {
    let t = Instant::now();
    let r = monotonicity_example().unwrap();
    assert!((r.kappa - 5.5835).abs() <= 1e-4, "κ = {}", r.kappa);
    assert!((r.kappa - monotonicity_closed_form()).abs() <= 1e-9);
    within(t, Duration::from_secs(1));
}

#[test]
fn c02_witness_coefficients() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let d = random_delta(&mut rng);
        assert_eq!(solve_coefficients(&d).unwrap(), paper_coefficients(&d).unwrap(), "δ = {d}");
    }
    within(t, Duration::from_secs(5));
}

#[test]
fn c03_witness_kappa() {
    let t = Instant::now();
    let deltas: Vec<Rational> = [(2, 5), (1, 4), (1, 10), (1, 20), (1, 100)]
        .into_iter()
        .map(|(p, q)| rational(p, q))
        .collect();
    let rows = witness_study(&deltas).unwrap();
    for r in &rows {
        assert!(r.matches, "δ = {}: exact {} vs closed form {}", r.delta, r.kappa_exact, r.kappa_paper);
    }
    let small = witness_study(&[rational(1, 1000)]).unwrap();
    let limit = limit_delta_kappa().to_f64_lossy();
    let dk = small[0].delta_times_kappa.to_f64_lossy();
    assert!(((dk - limit) / limit).abs() <= 0.01, "δκ(1/1000) = {dk}, limit {limit}");
    within(t, Duration::from_secs(30));
    let kappas: Vec<f64> = rows.iter().map(|r| r.kappa_exact.to_f64_lossy()).collect();
    for (w, pair) in rows.windows(2).zip(kappas.windows(2)) {
        assert!(
            pair[1] > pair[0],
            "κ does not increase from δ = {} (κ = {}) to δ = {} (κ = {})",
            w[0].delta,
            pair[0],
            w[1].delta,
            pair[1]
        );
    }
}

#[test]
fn c04_theorem_sweep() {
    let t = Instant::now();
    let r = sweep(4, 1000, &Domain::unit(), &GenParams::default()).unwrap();
    assert!(r.failures.is_empty(), "κ > 1 + 1e-9 at {:?}", r.failures);
    assert!(r.chain_failures.is_empty(), "chain broken at {:?}", r.chain_failures);
    assert!(r.max_kappa <= 1.0 + 1e-9);
    within(t, Duration::from_secs(60));
}

/// `w + ε (L - |x - m|)` with `m` the midpoint of `J_k`: concave, nonnegative, not linear on `J_k`.
fn bend(w: &Weight, n: u32, k: u32, eps: f64) -> Weight {
    let WeightBody::PiecewiseLinear { nodes, .. } = w.body() else { panic!("equality weights are piecewise linear") };
    let (a, len) = (*w.interval().a(), w.interval().length());
    let m = a + len * (k as f64 + 0.5) / n as f64;
    let mut xs = nodes.clone();
    xs.push(m);
    xs.sort_by(f64::total_cmp);
    let ys = xs.iter().map(|x| w.eval(x).unwrap() + eps * (len - (x - m).abs())).collect();
    WeightSpec::piecewise_linear(xs, ys).unwrap()
}

#[test]
fn c05_equality_suite() {
    let iv = Domain::unit();
    let exact_iv = ExactDomain::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=3u32 {
        for _ in 0..10 {
            let seed = rng.random();
            let case = random_equality_case(seed, &iv, n).unwrap();
            let k = compute_kappa(&case.weight, &case.function, &iv).unwrap().kappa;
            assert!((k - 1.0).abs() <= 1e-9, "n = {n}: κ = {k}");

            let exact = random_equality_case(seed, &exact_iv, n).unwrap();
            let report = compute_kappa(&exact.weight, &exact.function, &exact_iv).unwrap();
            assert_eq!(report.exact.and_then(|e| e.kappa), Some(rational(1, 1)));

            let top = case.weight.to_piecewise().global_pieces().iter().map(|p| p.coeff(0).abs() + p.coeff(1).abs()).fold(1.0, f64::max);
            let bent = bend(&case.weight, n, rng.random_range(0..n), 0.2 * top);
            assert!(bent.is_certified_concave() && bent.is_certified_nonnegative());
            let k = compute_kappa(&bent, &case.function, &iv).unwrap().kappa;
            assert!(k < 1.0 - 1e-6, "n = {n}: bent κ = {k}");
        }
    }
}

#[test]
fn c06_corollary_suite() {
    let iv = Domain::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..200 {
        let pieces = rng.random_range(1..=6);
        let w = random_monotone_concave_weight(rng.random(), &iv, pieces, Offset::Random).unwrap();
        let f = random_half_sine_function(rng.random(), &iv, rng.random_range(1..=5)).unwrap();
        let v = verify_corollary(&w, &f, &iv, 1e-9).unwrap();
        assert!(v.direct.kappa <= 1.0 + 1e-9, "instance {i}: direct κ = {}", v.direct.kappa);
        assert!(v.reflected.report.kappa <= 1.0 + 1e-9, "instance {i}: reflected κ = {}", v.reflected.report.kappa);
        assert!(v.difference <= 1e-9, "instance {i}: paths differ by {}", v.difference);
    }
    let decreasing = WeightSpec::polynomial(iv.clone(), Polynomial::linear(1.0, -1.0)).unwrap();
    let f = TestFunction::half_sine(SineCombination::single(iv.clone(), 1.0, 1).unwrap());
    assert!(matches!(reflect_even(&decreasing, &f, &iv), Err(Error::Hypothesis(_))));
}

#[test]
fn c07_identity_checks() {
    let iv = Domain::unit();
    let exact_iv = ExactDomain::unit();
    let w = ExactWeight::polynomial(
        exact_iv.clone(),
        Polynomial::new(vec![rational(0, 1), rational(1, 1), rational(-1, 1)]),
    )
    .unwrap();
    let f = ExactFunction::sine(SineCombination::single(exact_iv.clone(), rational(1, 1), 1).unwrap());
    let r = parts_identity_residual(&w, &f, &exact_iv).unwrap();
    assert!((r.lhs + 1.0).abs() <= 1e-12 && (r.rhs + 1.0).abs() <= 1e-12);
    assert!(r.residual <= 1e-9);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..100 {
        let w = random_concave_polynomial_weight(rng.random(), &iv, rng.random_range(0..=3), Offset::Random).unwrap();
        let f = random_admissible_function(rng.random(), &iv, rng.random_range(1..=6)).unwrap();
        let r = parts_identity_residual(&w, &f, &iv).unwrap();
        assert!(r.residual <= 1e-9, "polynomial instance {i}: residual {}", r.residual);
    }
    for i in 0..100 {
        let w = random_concave_weight(rng.random(), &iv, rng.random_range(1..=6)).unwrap();
        let f = random_admissible_function(rng.random(), &iv, rng.random_range(1..=6)).unwrap();
        let r = lemma4_residual(&w, &f, &iv).unwrap();
        assert!(r.residual <= 1e-9, "piecewise-linear instance {i}: residual {}", r.residual);
    }
}

#[test]
fn c08_smoothing() {
    let tent = ExactWeight::piecewise_linear(
        vec![rational(0, 1), rational(1, 2), rational(1, 1)],
        vec![rational(0, 1), rational(1, 2), rational(0, 1)],
    )
    .unwrap();
    let schedule = ExactSchedule::new(tent, 6).unwrap();
    let mut deepest = None;
    for n in 1..=6 {
        let w = smooth_concave(&schedule, n).unwrap();
        assert!(w.is_certified_concave() && w.is_certified_nonnegative(), "level {n}");
        let WeightBody::Piecewise(p) = w.body() else { panic!("level {n} is not piecewise") };
        assert_eq!(p.smoothness(), Smoothness::C2, "level {n}");
        deepest = Some(w);
    }
    let report = smoothing_convergence(&schedule).unwrap();
    for pair in report.levels.windows(2) {
        let ratio = pair[1].sup_distance / pair[0].sup_distance;
        assert!((0.45..=0.55).contains(&ratio), "levels {}-{}: ratio {ratio}", pair[0].level, pair[1].level);
    }
    let iv = Domain::unit();
    let w: Weight = deepest.unwrap().cast().unwrap();
    let f = Function::sine(SineCombination::single(iv.clone(), 1.0, 2).unwrap());
    let k = compute_kappa(&w, &f, &iv).unwrap().kappa;
    assert!((k - 1.0).abs() <= 1e-3, "κ(w_6, sin 2πx) = {k}");
}

#[test]
fn c09_search() {
    let iv = Domain::unit();
    let opts = SearchOptions::default();
    let one = Weight::constant(iv.clone(), 1.0).unwrap();
    let forms = assemble_forms(&one, &iv, 24).unwrap();
    let r = maximize_kappa(&forms, 9, &opts).unwrap();
    assert!(r.best_kappa >= 1.0 - 1e-4 && r.best_kappa <= 1.0 + 1e-6, "w = 1: κ = {}", r.best_kappa);
    assert!(r.correlation >= 0.999, "correlation {}", r.correlation);

    let quartic = Weight::polynomial(iv.clone(), Polynomial::monomial(1.0, 4)).unwrap();
    let best: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&m| maximize_kappa(&assemble_forms(&quartic, &iv, m).unwrap(), 9, &opts).unwrap().best_kappa)
        .collect();
    assert!(best[0] > 1.0 && best[0] < best[1] && best[1] < best[2], "x⁴: {best:?}");
    assert!(best[2] > 1.5);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c: Vec<f64> = (0..24).map(|_| rng.random_range(-1.0..1.0)).collect();
    assert!(gradient_check(&forms, &c, 1e-6).unwrap() <= 1e-5);
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn c10_invariance_battery() {
    let iv = Domain::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let instance = |rng: &mut ChaCha8Rng| {
        let w = random_concave_weight(rng.random(), &iv, rng.random_range(1..=6)).unwrap();
        let f = random_admissible_function(rng.random(), &iv, rng.random_range(1..=6)).unwrap();
        let k = compute_kappa(&w, &f, &iv).unwrap().kappa;
        (w, f, k)
    };
    for i in 0..50 {
        let (w, f, k) = instance(&mut rng);
        let alpha = rng.random_range(0.1..10.0) * if rng.random() { 1.0 } else { -1.0 };
        let scaled = compute_kappa(&w, &f.scale(&alpha), &iv).unwrap().kappa;
        assert!(rel(scaled, k) <= 1e-10, "f-scaling {i}: {scaled} vs {k}");
    }
    for i in 0..50 {
        let (w, f, k) = instance(&mut rng);
        let beta = rng.random_range(0.1..10.0);
        let scaled = compute_kappa(&w.scale(&beta).unwrap(), &f, &iv).unwrap().kappa;
        assert!(rel(scaled, k) <= 1e-10, "w-scaling {i}: {scaled} vs {k}");
    }
    for i in 0..50 {
        let (w, f, k) = instance(&mut rng);
        let a = rng.random_range(-5.0..5.0);
        let target = Domain::new(a, a + rng.random_range(0.2..5.0)).unwrap();
        let moved = compute_kappa(&w.transport(&target).unwrap(), &f.transport(&target).unwrap(), &target)
            .unwrap()
            .kappa;
        assert!(rel(moved, k) <= 1e-10, "dilation {i}: {moved} vs {k}");
    }
}
