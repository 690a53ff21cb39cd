//! A C² family `f_δ` on `[0, 1]` for which `κ(x⁴, f_δ)` grows like `1/δ`.
//!
//! `f_δ = x/δ` on `[0, δ]`, a quintic on `[δ, 2δ]`, `(1 - x)/(1 - 2δ)` on
//! `[2δ, 1]`. The quintic matches value, slope and curvature of the outer
//! pieces at both junctions.

use std::io::Write;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::{BoundaryCondition, Interval, PiecewisePolynomial, SineCombination, Smoothness, TestFunction, WeightSpec};
use crate::kappa::{compute_kappa, KappaReport};
use crate::linalg::solve;
use crate::poly::Polynomial;
use crate::scalar::{format_rational, rational, Rational, Scalar};

/// Default `δ` grid for [`witness_study`].
pub fn default_deltas() -> Vec<Rational> {
    [(2, 5), (1, 4), (1, 10), (1, 20), (1, 100), (1, 1000)]
        .into_iter()
        .map(|(p, q)| rational(p, q))
        .collect()
}

/// `lim δκ(δ)` as `δ -> 0`: `3003² / (26 · 858 · 2042)`.
pub fn limit_delta_kappa() -> Rational {
    rational(3003 * 3003, 26 * 858 * 2042)
}

fn check_delta(delta: &Rational) -> Result<()> {
    if *delta <= Rational::zero() || *delta >= rational(1, 2) {
        return Err(Error::Parameter(format!("δ = {} must lie in (0, 1/2)", format_rational(delta))));
    }
    Ok(())
}

/// Row of `p^{(order)}(x)` in the monomial basis of degree 5.
fn hermite_row(x: &Rational, order: usize) -> Vec<Rational> {
    (0..6)
        .map(|k| {
            if k < order {
                return Rational::zero();
            }
            let falling: i64 = (0..order).map(|j| (k - j) as i64).product();
            Rational::from_integer(falling.into()) * num_traits::pow(x.clone(), k - order)
        })
        .collect()
}

/// Coefficients `a0..a5` of the middle quintic, from the 6×6 interpolation system.
pub fn solve_coefficients(delta: &Rational) -> Result<[Rational; 6]> {
    check_delta(delta)?;
    let d = delta.clone();
    let two_d = &d * rational(2, 1);
    let right_slope = -Rational::one() / (Rational::one() - &two_d);
    let conditions = [
        (d.clone(), 0, Rational::one()),
        (two_d.clone(), 0, Rational::one()),
        (d.clone(), 1, Rational::one() / &d),
        (two_d.clone(), 1, right_slope),
        (d.clone(), 2, Rational::zero()),
        (two_d, 2, Rational::zero()),
    ];
    let (rows, rhs): (Vec<_>, Vec<_>) = conditions
        .iter()
        .map(|(x, k, v)| (hermite_row(x, *k), v.clone()))
        .unzip();
    let a = solve(rows, rhs).map_err(|e| Error::Internal(format!("witness system: {e}")))?;
    a.try_into().map_err(|_| Error::Internal("witness system size".into()))
}

/// The published closed forms of `a0..a5`.
pub fn paper_coefficients(delta: &Rational) -> Result<[Rational; 6]> {
    check_delta(delta)?;
    let d = delta.clone();
    let q = |x: i64| rational(x, 1);
    let e = &d * q(2) - q(1);
    let p = |k: usize| num_traits::pow(d.clone(), k);
    Ok([
        (&d * q(48) - q(17)) / &e,
        -(&d * q(183) - q(64)) / (&d * &e),
        q(12) * (&d * q(23) - q(8)) / (p(2) * &e),
        -q(2) * (&d * q(99) - q(34)) / (p(3) * &e),
        (&d * q(68) - q(23)) / (p(4) * &e),
        -q(3) * (&d * q(3) - q(1)) / (p(5) * &e),
    ])
}

/// The witness `f_δ`, Dirichlet at both ends.
pub fn build_witness(delta: &Rational) -> Result<TestFunction<Rational>> {
    let a = solve_coefficients(delta)?;
    let d = delta.clone();
    let one = Rational::one();
    let pieces = vec![
        Polynomial::linear(Rational::zero(), &one / &d),
        Polynomial::new(a.to_vec()),
        Polynomial::linear(&one / (&one - &d * rational(2, 1)), -&one / (&one - &d * rational(2, 1))),
    ];
    let p = PiecewisePolynomial::new(
        vec![Rational::zero(), d.clone(), &d * rational(2, 1), one],
        pieces,
        Smoothness::C2,
    )?;
    Ok(TestFunction::piecewise(p, BoundaryCondition::DirichletDirichlet))
}

/// The published expression for `κ(x⁴, f_δ)`.
pub fn kappa_closed_form(delta: &Rational) -> Result<Rational> {
    check_delta(delta)?;
    let d = |k: usize| num_traits::pow(delta.clone(), k);
    let q = |x: i64| rational(x, 1);
    let num = q(3003) + q(14474) * d(3) - q(53525) * d(4) - q(12344) * d(5);
    let den = q(26)
        * d(1)
        * (q(858) + q(72450) * d(5) - q(531793) * d(6) + q(674178) * d(7))
        * (q(2042) - q(11999) * d(1) + q(20182) * d(2));
    Ok(&num * &num / den)
}

pub fn quartic_weight() -> WeightSpec<Rational> {
    let p = Polynomial::monomial(Rational::one(), 4);
    WeightSpec::polynomial(Interval::unit(), p).expect("x^4 on [0, 1] is a valid weight")
}

/// End-to-end exact `κ(x⁴, f_δ)`.
pub fn kappa_exact(delta: &Rational) -> Result<Rational> {
    let f = build_witness(delta)?;
    let report = compute_kappa(&quartic_weight(), &f, &Interval::unit())?;
    report
        .exact
        .and_then(|e| e.kappa)
        .ok_or_else(|| Error::Internal("witness integrals did not reduce to rationals".into()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessResult {
    pub delta: Rational,
    pub coefficients: [Rational; 6],
    pub kappa_exact: Rational,
    pub kappa_paper: Rational,
    pub matches: bool,
    pub delta_times_kappa: Rational,
}

impl Serialize for WitnessResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out {
            delta: String,
            a0: String,
            a1: String,
            a2: String,
            a3: String,
            a4: String,
            a5: String,
            kappa_exact: String,
            kappa_exact_decimal: f64,
            kappa_paper: String,
            #[serde(rename = "match")]
            matches: bool,
            delta_times_kappa: String,
            delta_times_kappa_decimal: f64,
        }
        let f = format_rational;
        let c = &self.coefficients;
        Out {
            delta: f(&self.delta),
            a0: f(&c[0]),
            a1: f(&c[1]),
            a2: f(&c[2]),
            a3: f(&c[3]),
            a4: f(&c[4]),
            a5: f(&c[5]),
            kappa_exact: f(&self.kappa_exact),
            kappa_exact_decimal: self.kappa_exact.to_f64_lossy(),
            kappa_paper: f(&self.kappa_paper),
            matches: self.matches,
            delta_times_kappa: f(&self.delta_times_kappa),
            delta_times_kappa_decimal: self.delta_times_kappa.to_f64_lossy(),
        }
        .serialize(s)
    }
}

pub fn witness_result(delta: &Rational) -> Result<WitnessResult> {
    let coefficients = solve_coefficients(delta)?;
    let kappa_exact = kappa_exact(delta)?;
    let kappa_paper = kappa_closed_form(delta)?;
    Ok(WitnessResult {
        delta: delta.clone(),
        coefficients,
        matches: kappa_exact == kappa_paper,
        delta_times_kappa: delta * &kappa_exact,
        kappa_exact,
        kappa_paper,
    })
}

/// One [`WitnessResult`] per `δ`, in input order.
pub fn witness_study(deltas: &[Rational]) -> Result<Vec<WitnessResult>> {
    deltas.iter().try_for_each(check_delta)?;
    deltas.par_iter().map(witness_result).collect()
}

/// CSV with columns `delta,a0..a5,kappa_exact,kappa_exact_decimal,kappa_paper,match,delta_times_kappa`.
pub fn write_csv<W: Write>(results: &[WitnessResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record([
        "delta",
        "a0",
        "a1",
        "a2",
        "a3",
        "a4",
        "a5",
        "kappa_exact",
        "kappa_exact_decimal",
        "kappa_paper",
        "match",
        "delta_times_kappa",
    ])
    .map_err(io)?;
    for r in results {
        let mut row = vec![format_rational(&r.delta)];
        row.extend(r.coefficients.iter().map(format_rational));
        row.extend([
            format_rational(&r.kappa_exact),
            format!("{:.17e}", r.kappa_exact.to_f64_lossy()),
            format_rational(&r.kappa_paper),
            r.matches.to_string(),
            format_rational(&r.delta_times_kappa),
        ]);
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Internal(e.to_string()))
}

/// `((π² + 4)/(π² - 4))²`.
pub fn monotonicity_closed_form() -> f64 {
    let p2 = std::f64::consts::PI.powi(2);
    ((p2 + 4.0) / (p2 - 4.0)).powi(2)
}

/// `κ(1 - x, sin(πx/2))` on `[0, 1]`: a decreasing weight with `f(0) = f'(1) = 0`.
pub fn monotonicity_example() -> Result<KappaReport<f64>> {
    let iv = Interval::<f64>::unit();
    let w = WeightSpec::polynomial(iv.clone(), Polynomial::linear(1.0, -1.0))?;
    let f = TestFunction::half_sine(SineCombination::single(iv.clone(), 1.0, 1)?);
    compute_kappa(&w, &f, &iv)
}
