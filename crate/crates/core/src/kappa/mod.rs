//! The quotient `κ(w, f) = (∫w f'²)² / (∫w f² · ∫w f''²)` and the checks built on it.

mod identities;
mod sweep;
mod theorem;

pub use identities::{
    epsilon_equivalence_check, lemma4_residual, parts_identity_residual, EpsilonCheck, IdentityResidual,
};
pub use sweep::{random_equality_case, sweep, FunctionSource, GenParams, SweepEntry, SweepReport};
pub use theorem::{
    make_equality_case, reflect_even, verify_corollary, verify_theorem, verify_theorem_with, ChainCheck, CorollaryVerdict,
    EqualityCase, TheoremVerdict,
};

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::PiLaurent;
use crate::funcspace::{FunctionBody, Interval, Nonnegativity, TestFunction, WeightSpec};
use crate::quadrature::{
    weighted_product_integral, Factor, ModeRequest, QuadratureMode, QuadratureResult, DEFAULT_TOL,
};
use crate::scalar::{format_rational, Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaOptions {
    /// Absolute tolerance of each adaptive integral.
    pub tol: f64,
    pub mode: ModeRequest,
}

impl Default for KappaOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            mode: ModeRequest::Auto,
        }
    }
}

/// Closed forms of the integrals in exact mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactKappa {
    pub i0: PiLaurent,
    pub i1: PiLaurent,
    pub i2: PiLaurent,
    pub mid: PiLaurent,
    /// `κ` when it is rational (the usual case: `I1²` and `I0 I2` share their powers of `pi`).
    #[serde(serialize_with = "ser_opt_rational")]
    pub kappa: Option<Rational>,
    /// Certified comparison of `κ` with 1.
    #[serde(serialize_with = "ser_ordering")]
    pub versus_one: Option<Ordering>,
}

fn ser_opt_rational<S: serde::Serializer>(q: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match q {
        Some(q) => s.serialize_some(&format_rational(q)),
        None => s.serialize_none(),
    }
}

fn ser_ordering<S: serde::Serializer>(o: &Option<Ordering>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match o {
        Some(Ordering::Less) => "below",
        Some(Ordering::Equal) => "equal",
        Some(Ordering::Greater) => "above",
        None => "unresolved",
    })
}

/// `I0 = ∫w f²`, `I1 = ∫w f'²`, `I2 = ∫w f''²`, `mid = -∫w f f''` and `κ`.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaReport<T> {
    pub i0: T,
    pub i1: T,
    pub i2: T,
    pub mid: T,
    pub kappa: T,
    pub mode: QuadratureMode,
    /// First-order bound on `|κ - κ_true|` from the quadrature error estimates.
    pub error_bound: f64,
    /// Error estimates of `I0, I1, I2, mid`.
    pub integral_errors: [f64; 4],
    pub exact: Option<ExactKappa>,
}

impl<T: Scalar> KappaReport<T> {
    pub fn kappa_f64(&self) -> f64 {
        self.kappa.to_f64_lossy()
    }

    pub fn to_f64(&self) -> KappaReport<f64> {
        KappaReport {
            i0: self.i0.to_f64_lossy(),
            i1: self.i1.to_f64_lossy(),
            i2: self.i2.to_f64_lossy(),
            mid: self.mid.to_f64_lossy(),
            kappa: self.kappa.to_f64_lossy(),
            mode: self.mode,
            error_bound: self.error_bound,
            integral_errors: self.integral_errors,
            exact: self.exact.clone(),
        }
    }
}

impl<T: Scalar> Serialize for KappaReport<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            #[serde(rename = "I0")]
            i0: f64,
            #[serde(rename = "I1")]
            i1: f64,
            #[serde(rename = "I2")]
            i2: f64,
            mid: f64,
            kappa: f64,
            mode: QuadratureMode,
            error_bound: f64,
            integral_errors: [f64; 4],
            #[serde(skip_serializing_if = "Option::is_none")]
            exact: Option<&'a ExactKappa>,
        }
        Out {
            i0: self.i0.to_f64_lossy(),
            i1: self.i1.to_f64_lossy(),
            i2: self.i2.to_f64_lossy(),
            mid: self.mid.to_f64_lossy(),
            kappa: self.kappa.to_f64_lossy(),
            mode: self.mode,
            error_bound: self.error_bound,
            integral_errors: self.integral_errors,
            exact: self.exact.as_ref(),
        }
        .serialize(s)
    }
}

fn is_zero_function<T: Scalar>(f: &TestFunction<T>) -> bool {
    match f.body() {
        FunctionBody::Sine(s) | FunctionBody::HalfSine(s) => s.terms().iter().all(|t| t.coefficient.is_zero()),
        FunctionBody::Piecewise(p) => p.local_pieces().iter().all(|q| q.is_zero()),
    }
}

pub fn compute_kappa<T: Scalar>(w: &WeightSpec<T>, f: &TestFunction<T>, iv: &Interval<T>) -> Result<KappaReport<T>> {
    compute_kappa_with(w, f, iv, KappaOptions::default())
}

/// Computes the three integrals, the middle quantity and `κ`.
///
/// `f` is expected to satisfy its boundary conditions; this is not checked
/// here so that non-admissible functions can still be measured.
pub fn compute_kappa_with<T: Scalar>(
    w: &WeightSpec<T>,
    f: &TestFunction<T>,
    iv: &Interval<T>,
    opts: KappaOptions,
) -> Result<KappaReport<T>> {
    if !f.interval().matches(iv) {
        return Err(Error::Parameter("function and interval differ".into()));
    }
    if w.nonnegativity() == Nonnegativity::CertifiedNegative {
        return Err(Error::Hypothesis("weight takes negative values".into()));
    }
    if w.is_identically_zero() {
        return Err(Error::Degenerate("w vanishes identically".into()));
    }
    if is_zero_function(f) {
        return Err(Error::Degenerate("f vanishes identically".into()));
    }
    let integral = |u, v| weighted_product_integral(w, u, v, iv, opts.tol, opts.mode);
    let mut r = [
        integral(Factor::value(f), Factor::value(f))?,
        integral(Factor::first(f), Factor::first(f))?,
        integral(Factor::second(f), Factor::second(f))?,
        integral(Factor::value(f), Factor::second(f))?,
    ];
    // Mixed modes happen when only some integrals fall back to adaptive.
    if r.iter().any(|q| q.mode == QuadratureMode::Adaptive) && r.iter().any(|q| q.mode == QuadratureMode::Exact) {
        let mut adaptive = opts;
        adaptive.mode = ModeRequest::Adaptive;
        let integral = |u, v| weighted_product_integral(w, u, v, iv, adaptive.tol, adaptive.mode);
        r = [
            integral(Factor::value(f), Factor::value(f))?,
            integral(Factor::first(f), Factor::first(f))?,
            integral(Factor::second(f), Factor::second(f))?,
            integral(Factor::value(f), Factor::second(f))?,
        ];
    }
    let [q0, q1, q2, qm] = r;
    assemble(q0, q1, q2, qm)
}

fn assemble<T: Scalar>(
    q0: QuadratureResult<T>,
    q1: QuadratureResult<T>,
    q2: QuadratureResult<T>,
    qm: QuadratureResult<T>,
) -> Result<KappaReport<T>> {
    let mode = q0.mode;
    let exact = match (&q0.exact, &q1.exact, &q2.exact, &qm.exact) {
        (Some(e0), Some(e1), Some(e2), Some(em)) => {
            if e0.is_zero() || e2.is_zero() {
                return Err(Error::Degenerate("I0 * I2 = 0".into()));
            }
            let num = e1.mul(e1);
            let den = e0.mul(e2);
            Some(ExactKappa {
                i0: e0.clone(),
                i1: e1.clone(),
                i2: e2.clone(),
                mid: em.scale(&-Rational::from_integer(1.into())),
                kappa: num.ratio_to(&den),
                versus_one: num.compare(&den),
            })
        }
        _ => None,
    };
    let (i0, i1, i2) = (q0.value, q1.value, q2.value);
    let mid = -qm.value;
    if !(i0 > T::zero() && i2 > T::zero()) {
        return Err(Error::Degenerate(format!("I0 = {i0}, I2 = {i2}; the quotient is undefined")));
    }
    let kappa = match exact.as_ref().and_then(|e| e.kappa.clone()) {
        Some(k) => T::from_rational(&k),
        None => i1.clone() * i1.clone() / (i0.clone() * i2.clone()),
    };
    let errors = [
        q0.abs_error_estimate,
        q1.abs_error_estimate,
        q2.abs_error_estimate,
        qm.abs_error_estimate,
    ];
    let rel = |e: f64, v: &T| e / v.to_f64_lossy().abs().max(f64::MIN_POSITIVE);
    let k = kappa.to_f64_lossy();
    let error_bound = if mode == QuadratureMode::Exact {
        0.0
    } else {
        let first_order = k * (rel(errors[0], &i0) + 2.0 * rel(errors[1], &i1) + rel(errors[2], &i2));
        first_order + 8.0 * f64::EPSILON * k
    };
    Ok(KappaReport {
        i0,
        i1,
        i2,
        mid,
        kappa,
        mode,
        error_bound,
        integral_errors: errors,
        exact,
    })
}
