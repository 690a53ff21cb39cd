use std::cmp::Ordering;

use serde::Serialize;

use super::{compute_kappa_with, KappaOptions, KappaReport};
use crate::error::{Error, Result};
use crate::funcspace::{
    check_admissible, check_concave, check_monotone, Admissibility, BoundaryCondition, FunctionBody, Interval,
    Monotonicity, SineCombination, SineTerm, TestFunction, WeightBody, WeightSpec,
};
use crate::quadrature::QuadratureMode;
use crate::scalar::{format_rational, Scalar};

/// The two inequalities `I1 <= mid` and `mid <= sqrt(I0 I2)` of the proof chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainCheck {
    /// `(I1 - mid) / I1`; nonpositive when the first step holds.
    pub first_residual: f64,
    /// `(mid - sqrt(I0 I2)) / sqrt(I0 I2)`.
    pub second_residual: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremVerdict<T> {
    pub passed: bool,
    /// Slack actually applied (zero in exact mode).
    pub slack: f64,
    pub report: KappaReport<T>,
    pub chain: ChainCheck,
}

pub const CHAIN_TOL: f64 = 1e-9;

fn require_concave_nonnegative<T: Scalar>(w: &WeightSpec<T>) -> Result<()> {
    if !w.is_certified_concave() {
        let r = check_concave(w);
        let why = match (&r.certificate, &r.note) {
            (Some(c), _) => c.to_string(),
            (None, Some(n)) => n.clone(),
            (None, None) => "concavity not certified".into(),
        };
        return Err(Error::Hypothesis(format!("weight is not certified concave: {why}")));
    }
    if !w.is_certified_nonnegative() {
        return Err(Error::Hypothesis("weight is not certified nonnegative".into()));
    }
    Ok(())
}

fn require_admissible<T: Scalar>(f: &TestFunction<T>, iv: &Interval<T>, bc: BoundaryCondition) -> Result<()> {
    if f.bc() != bc {
        return Err(Error::Hypothesis(format!("expected {bc:?} boundary conditions, got {:?}", f.bc())));
    }
    match check_admissible(f, iv) {
        Admissibility::Pass { .. } => Ok(()),
        Admissibility::Fail(msg) => Err(Error::Hypothesis(format!("function not admissible: {msg}"))),
    }
}

fn chain<T: Scalar>(r: &KappaReport<T>) -> ChainCheck {
    if let Some(e) = &r.exact {
        // mid >= I1 >= 0, so mid <= sqrt(I0 I2) iff mid^2 <= I0 I2.
        let first = e.mid.compare(&e.i1).is_some_and(|o| o != Ordering::Less);
        let second = e.i0.mul(&e.i2).compare(&e.mid.mul(&e.mid)).is_some_and(|o| o != Ordering::Less);
        let (i1, mid) = (e.i1.to_f64(), e.mid.to_f64());
        let root = (e.i0.to_f64() * e.i2.to_f64()).sqrt();
        return ChainCheck {
            first_residual: (i1 - mid) / i1,
            second_residual: (mid - root) / root,
            holds: first && second,
        };
    }
    let (i0, i1, i2, mid) = (
        r.i0.to_f64_lossy(),
        r.i1.to_f64_lossy(),
        r.i2.to_f64_lossy(),
        r.mid.to_f64_lossy(),
    );
    let root = (i0 * i2).sqrt();
    let first_residual = (i1 - mid) / i1;
    let second_residual = (mid - root) / root;
    ChainCheck {
        first_residual,
        second_residual,
        holds: first_residual <= CHAIN_TOL && second_residual <= CHAIN_TOL,
    }
}

/// Checks `κ <= 1` for a certified concave, nonnegative weight and a
/// Dirichlet-Dirichlet function.
///
/// Adaptive results pass when `κ <= 1 + max(slack, 10 * error_bound)`;
/// exact results are compared with 1 exactly.
pub fn verify_theorem<T: Scalar>(
    w: &WeightSpec<T>,
    f: &TestFunction<T>,
    iv: &Interval<T>,
    slack: f64,
) -> Result<TheoremVerdict<T>> {
    verify_theorem_with(w, f, iv, slack, KappaOptions::default())
}

pub fn verify_theorem_with<T: Scalar>(
    w: &WeightSpec<T>,
    f: &TestFunction<T>,
    iv: &Interval<T>,
    slack: f64,
    opts: KappaOptions,
) -> Result<TheoremVerdict<T>> {
    require_concave_nonnegative(w)?;
    require_admissible(f, iv, BoundaryCondition::DirichletDirichlet)?;
    let report = compute_kappa_with(w, f, iv, opts)?;
    Ok(judge(report, slack))
}

fn judge<T: Scalar>(report: KappaReport<T>, slack: f64) -> TheoremVerdict<T> {
    let (passed, slack) = match (&report.exact, report.mode) {
        (Some(e), QuadratureMode::Exact) => (e.versus_one.is_some_and(|o| o != Ordering::Greater), 0.0),
        _ => {
            let s = slack.max(10.0 * report.error_bound);
            (report.kappa_f64() <= 1.0 + s, s)
        }
    };
    let chain = chain(&report);
    TheoremVerdict {
        passed,
        slack,
        report,
        chain,
    }
}

/// `λ sin(nπ(x-a)/(b-a))` with a weight linear on each `J_k = [a + (k-1)h, a + kh]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EqualityCase<T> {
    pub interval: Interval<T>,
    pub n: u32,
    pub lambda: T,
    pub weight: WeightSpec<T>,
    pub function: TestFunction<T>,
}

pub fn make_equality_case<T: Scalar>(
    iv: &Interval<T>,
    n: u32,
    lambda: T,
    node_values: &[T],
) -> Result<EqualityCase<T>> {
    if n < 1 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if lambda.is_zero() {
        return Err(Error::Parameter("lambda must be nonzero".into()));
    }
    if node_values.len() != n as usize + 1 {
        return Err(Error::Parameter(format!(
            "expected {} node values, got {}",
            n + 1,
            node_values.len()
        )));
    }
    if node_values.iter().any(|v| v.is_negative()) {
        return Err(Error::Parameter("node values must be nonnegative".into()));
    }
    if node_values.iter().all(|v| v.is_zero()) {
        return Err(Error::Degenerate("all node values are zero".into()));
    }
    let h = iv.length() / T::from_int(n as i64);
    let nodes: Vec<T> = (0..=n)
        .map(|k| {
            if k == n {
                iv.b().clone()
            } else {
                iv.a().clone() + h.clone() * T::from_int(k as i64)
            }
        })
        .collect();
    let weight = WeightSpec::piecewise_linear(nodes, node_values.to_vec())?;
    if !weight.is_certified_concave() {
        let why = check_concave(&weight)
            .certificate
            .map(|c| c.to_string())
            .unwrap_or_else(|| "concavity not certified".into());
        return Err(Error::Concavity(why));
    }
    let function = TestFunction::sine(SineCombination::single(iv.clone(), lambda.clone(), n)?);
    Ok(EqualityCase {
        interval: iv.clone(),
        n,
        lambda,
        weight,
        function,
    })
}

/// Even extension of `(w, f)` about `b` onto `[a, 2b - a]`.
///
/// Requires `f(a) = f'(b) = 0` and `w` concave, nonnegative and non-decreasing;
/// the extension then meets the hypotheses of the Dirichlet-Dirichlet case.
pub fn reflect_even<T: Scalar>(
    w: &WeightSpec<T>,
    f: &TestFunction<T>,
    iv: &Interval<T>,
) -> Result<(WeightSpec<T>, TestFunction<T>, Interval<T>)> {
    require_admissible(f, iv, BoundaryCondition::DirichletNeumann)?;
    require_concave_nonnegative(w)?;
    match check_monotone(w) {
        Monotonicity::NonDecreasing => {}
        Monotonicity::Decreasing { x } => {
            return Err(Error::Hypothesis(format!(
                "weight decreases near x = {}; its reflection would not be concave",
                format_rational(&x)
            )))
        }
        Monotonicity::Unknown => return Err(Error::Hypothesis("monotonicity of the weight is not certified".into())),
    }
    let ext = iv.reflected_right();
    let two_b = iv.b().clone() + iv.b().clone();
    let weight = match w.body() {
        WeightBody::Constant(c) => WeightSpec::constant(ext.clone(), c.clone())?,
        WeightBody::PiecewiseLinear { nodes, values } => {
            let mut n = nodes.clone();
            n.extend(nodes.iter().rev().skip(1).map(|x| two_b.clone() - x.clone()));
            let mut v = values.clone();
            v.extend(values.iter().rev().skip(1).cloned());
            WeightSpec::piecewise_linear(n, v)?
        }
        WeightBody::Polynomial(_) | WeightBody::Piecewise(_) => WeightSpec::piecewise(w.to_piecewise().reflect_about_right()?)?,
        WeightBody::Sampled { .. } => unreachable!("sampled weights are never certified concave"),
    };
    let function = match f.body() {
        // sin((2n-1)π(x-a)/(2L)) is the full mode 2n-1 on the doubled interval.
        FunctionBody::HalfSine(s) => TestFunction::sine(SineCombination::new(
            ext.clone(),
            s.terms()
                .iter()
                .map(|t| SineTerm {
                    coefficient: t.coefficient.clone(),
                    mode: 2 * t.mode - 1,
                })
                .collect(),
        )?),
        FunctionBody::Piecewise(p) => TestFunction::piecewise(p.reflect_about_right()?, BoundaryCondition::DirichletDirichlet),
        FunctionBody::Sine(_) => {
            return Err(Error::Mode(
                "even reflection of full sine modes with Neumann data has no sine-series form".into(),
            ))
        }
    };
    Ok((weight, function, ext))
}

/// Both routes for `f(a) = f'(b) = 0`: `κ` on `[a, b]` directly, and `κ` of
/// the even reflection on `[a, 2b - a]` through [`verify_theorem`].
#[derive(Clone, Debug, PartialEq)]
pub struct CorollaryVerdict<T> {
    pub direct: KappaReport<T>,
    pub reflected: TheoremVerdict<T>,
    pub direct_passed: bool,
    /// `|κ_direct - κ_reflected|`.
    pub difference: f64,
    pub agree: bool,
    pub passed: bool,
}

pub const AGREEMENT_TOL: f64 = 1e-9;

pub fn verify_corollary<T: Scalar>(
    w: &WeightSpec<T>,
    f: &TestFunction<T>,
    iv: &Interval<T>,
    slack: f64,
) -> Result<CorollaryVerdict<T>> {
    let (rw, rf, riv) = reflect_even(w, f, iv)?;
    let opts = KappaOptions::default();
    let direct = compute_kappa_with(w, f, iv, opts)?;
    let reflected = verify_theorem_with(&rw, &rf, &riv, slack, opts)?;
    let direct_verdict = judge(direct.clone(), slack);
    let difference = (direct.kappa_f64() - reflected.report.kappa_f64()).abs();
    let agree = match (&direct.exact, &reflected.report.exact) {
        // κ_d = κ_r  iff  I1d² I0r I2r = I1r² I0d I2d, decided on the closed forms
        (Some(d), Some(r)) => {
            let lhs = d.i1.mul(&d.i1).mul(&r.i0).mul(&r.i2);
            let rhs = r.i1.mul(&r.i1).mul(&d.i0).mul(&d.i2);
            lhs == rhs
        }
        _ => difference <= AGREEMENT_TOL.max(10.0 * (direct.error_bound + reflected.report.error_bound)),
    };
    let direct_passed = direct_verdict.passed;
    Ok(CorollaryVerdict {
        passed: direct_passed && reflected.passed && agree,
        direct,
        reflected,
        direct_passed,
        difference,
        agree,
    })
}
