use num_traits::{Signed, Zero};

use super::{Interval, PiecewisePolynomial};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::roots::{find_negative_point, find_positive_point};
use crate::scalar::{format_rational, Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum WeightBody<T> {
    /// Linear interpolation of `values` at strictly increasing `nodes`.
    PiecewiseLinear { nodes: Vec<T>, values: Vec<T> },
    /// Measured samples, interpolated linearly but never certified.
    Sampled { nodes: Vec<T>, values: Vec<T> },
    Polynomial(Polynomial<T>),
    Constant(T),
    /// Piecewise polynomial in the global variable, as produced by smoothing.
    Piecewise(PiecewisePolynomial<T>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Concavity {
    CertifiedConcave,
    CertifiedNotConcave,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonnegativity {
    CertifiedNonnegative,
    CertifiedNegative,
    Unknown,
}

/// Evidence that a weight is not concave, in exact arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub enum NotConcave {
    /// Slope on segment `index + 1` exceeds the slope on segment `index`.
    SlopeIncrease {
        index: usize,
        left: Rational,
        right: Rational,
    },
    /// `w''(x) > 0`.
    PositiveCurvature { x: Rational },
    /// One-sided slopes increase across a junction.
    JunctionSlopeIncrease {
        x: Rational,
        left: Rational,
        right: Rational,
    },
    /// Interior discontinuity.
    ValueJump { x: Rational },
}

impl std::fmt::Display for NotConcave {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::SlopeIncrease { index, left, right } => write!(
                f,
                "slope increases from {} to {} after segment {index}",
                format_rational(left),
                format_rational(right)
            ),
            Self::PositiveCurvature { x } => write!(f, "w'' > 0 at x = {}", format_rational(x)),
            Self::JunctionSlopeIncrease { x, left, right } => write!(
                f,
                "slope increases from {} to {} at x = {}",
                format_rational(left),
                format_rational(right),
                format_rational(x)
            ),
            Self::ValueJump { x } => write!(f, "w jumps at x = {}", format_rational(x)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcavityReport {
    pub verdict: Concavity,
    pub certificate: Option<NotConcave>,
    pub note: Option<String>,
}

impl ConcavityReport {
    fn concave() -> Self {
        Self {
            verdict: Concavity::CertifiedConcave,
            certificate: None,
            note: None,
        }
    }

    fn not_concave(c: NotConcave) -> Self {
        Self {
            verdict: Concavity::CertifiedNotConcave,
            certificate: Some(c),
            note: None,
        }
    }

    fn unknown(note: impl Into<String>) -> Self {
        Self {
            verdict: Concavity::Unknown,
            certificate: None,
            note: Some(note.into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Monotonicity {
    NonDecreasing,
    /// `w' < 0` somewhere; carries a witness point.
    Decreasing { x: Rational },
    Unknown,
}

/// A weight `w >= 0` on an interval with cached concavity and sign verdicts.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSpec<T> {
    interval: Interval<T>,
    body: WeightBody<T>,
    concavity: Concavity,
    nonnegativity: Nonnegativity,
}

impl<T: Scalar> WeightSpec<T> {
    pub fn new(interval: Interval<T>, body: WeightBody<T>) -> Result<Self> {
        match &body {
            WeightBody::PiecewiseLinear { nodes, values } | WeightBody::Sampled { nodes, values } => {
                if nodes.len() < 2 || nodes.len() != values.len() {
                    return Err(Error::Parameter(format!(
                        "{} nodes with {} values; need at least two of each",
                        nodes.len(),
                        values.len()
                    )));
                }
                if nodes.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Parameter("weight nodes must be strictly increasing".into()));
                }
                if nodes[0] != *interval.a() || nodes[nodes.len() - 1] != *interval.b() {
                    return Err(Error::Parameter("weight nodes must span the interval".into()));
                }
            }
            WeightBody::Piecewise(p) => {
                if p.interval() != interval {
                    return Err(Error::Parameter("piecewise weight must span the interval".into()));
                }
            }
            WeightBody::Polynomial(_) | WeightBody::Constant(_) => {}
        }
        let mut w = Self {
            interval,
            body,
            concavity: Concavity::Unknown,
            nonnegativity: Nonnegativity::Unknown,
        };
        w.concavity = check_concave(&w).verdict;
        w.nonnegativity = check_nonnegative(&w);
        Ok(w)
    }

    pub fn constant(interval: Interval<T>, c: T) -> Result<Self> {
        Self::new(interval, WeightBody::Constant(c))
    }

    pub fn polynomial(interval: Interval<T>, p: Polynomial<T>) -> Result<Self> {
        Self::new(interval, WeightBody::Polynomial(p))
    }

    /// Piecewise-linear weight; the interval is `[nodes[0], nodes[last]]`.
    pub fn piecewise_linear(nodes: Vec<T>, values: Vec<T>) -> Result<Self> {
        let interval = span(&nodes)?;
        Self::new(interval, WeightBody::PiecewiseLinear { nodes, values })
    }

    pub fn sampled(nodes: Vec<T>, values: Vec<T>) -> Result<Self> {
        let interval = span(&nodes)?;
        Self::new(interval, WeightBody::Sampled { nodes, values })
    }

    pub fn piecewise(p: PiecewisePolynomial<T>) -> Result<Self> {
        Self::new(p.interval(), WeightBody::Piecewise(p))
    }

    pub fn interval(&self) -> &Interval<T> {
        &self.interval
    }

    pub fn body(&self) -> &WeightBody<T> {
        &self.body
    }

    pub fn concavity(&self) -> Concavity {
        self.concavity
    }

    pub fn nonnegativity(&self) -> Nonnegativity {
        self.nonnegativity
    }

    pub fn is_certified_concave(&self) -> bool {
        self.concavity == Concavity::CertifiedConcave
    }

    pub fn is_certified_nonnegative(&self) -> bool {
        self.nonnegativity == Nonnegativity::CertifiedNonnegative
    }

    /// The same weight as explicit polynomial pieces.
    pub fn to_piecewise(&self) -> PiecewisePolynomial<T> {
        match &self.body {
            WeightBody::PiecewiseLinear { nodes, values } | WeightBody::Sampled { nodes, values } => {
                let pieces = nodes
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(x, y)| {
                        let slope = (y[1].clone() - y[0].clone()) / (x[1].clone() - x[0].clone());
                        Polynomial::linear(y[0].clone() - slope.clone() * x[0].clone(), slope)
                    })
                    .collect();
                PiecewisePolynomial::from_pieces(nodes.clone(), pieces).expect("validated nodes")
            }
            WeightBody::Polynomial(p) => PiecewisePolynomial::single(&self.interval, p.clone()),
            WeightBody::Constant(c) => PiecewisePolynomial::single(&self.interval, Polynomial::constant(c.clone())),
            WeightBody::Piecewise(p) => p.clone(),
        }
    }

    /// Breakpoints of the body, including both endpoints.
    pub fn breakpoints(&self) -> Vec<T> {
        self.to_piecewise().breakpoints().to_vec()
    }

    pub fn eval(&self, x: &T) -> Result<T> {
        match &self.body {
            WeightBody::Polynomial(p) => {
                self.interval.check_contains(x)?;
                Ok(p.eval(x))
            }
            WeightBody::Constant(c) => {
                self.interval.check_contains(x)?;
                Ok(c.clone())
            }
            _ => self.to_piecewise().eval(x),
        }
    }

    /// Left derivative `w'_-(x)`; the right derivative at `x = a`.
    pub fn left_slope(&self, x: &T) -> Result<T> {
        let p = self.to_piecewise();
        let i = p.piece_index(x)?;
        Ok(p.eval_piece_derivatives(i, x).1)
    }

    /// True when the body vanishes identically.
    pub fn is_identically_zero(&self) -> bool {
        self.to_piecewise().local_pieces().iter().all(Polynomial::is_zero)
    }

    /// `c w`, verdicts recomputed.
    pub fn scale(&self, c: &T) -> Result<Self> {
        let s = |v: &Vec<T>| v.iter().map(|x| x.clone() * c.clone()).collect::<Vec<_>>();
        let body = match &self.body {
            WeightBody::PiecewiseLinear { nodes, values } => WeightBody::PiecewiseLinear {
                nodes: nodes.clone(),
                values: s(values),
            },
            WeightBody::Sampled { nodes, values } => WeightBody::Sampled {
                nodes: nodes.clone(),
                values: s(values),
            },
            WeightBody::Polynomial(p) => WeightBody::Polynomial(p.scale(c)),
            WeightBody::Constant(v) => WeightBody::Constant(v.clone() * c.clone()),
            WeightBody::Piecewise(p) => WeightBody::Piecewise(p.scale(c)),
        };
        Self::new(self.interval.clone(), body)
    }

    /// `w + c`.
    pub fn shift(&self, c: &T) -> Result<Self> {
        let body = match &self.body {
            WeightBody::PiecewiseLinear { nodes, values } => WeightBody::PiecewiseLinear {
                nodes: nodes.clone(),
                values: values.iter().map(|v| v.clone() + c.clone()).collect(),
            },
            WeightBody::Sampled { nodes, values } => WeightBody::Sampled {
                nodes: nodes.clone(),
                values: values.iter().map(|v| v.clone() + c.clone()).collect(),
            },
            WeightBody::Polynomial(p) => WeightBody::Polynomial(p + &Polynomial::constant(c.clone())),
            WeightBody::Constant(v) => WeightBody::Constant(v.clone() + c.clone()),
            WeightBody::Piecewise(p) => WeightBody::Piecewise(p.add_constant(c)),
        };
        Self::new(self.interval.clone(), body)
    }

    /// The same weight transported affinely onto `target`.
    pub fn transport(&self, target: &Interval<T>) -> Result<Self> {
        let src = &self.interval;
        let ratio = target.length() / src.length();
        let map = |x: &T| target.a().clone() + (x.clone() - src.a().clone()) * ratio.clone();
        let body = match &self.body {
            WeightBody::PiecewiseLinear { nodes, values } => WeightBody::PiecewiseLinear {
                nodes: nodes.iter().map(map).collect(),
                values: values.clone(),
            },
            WeightBody::Sampled { nodes, values } => WeightBody::Sampled {
                nodes: nodes.iter().map(map).collect(),
                values: values.clone(),
            },
            WeightBody::Constant(c) => WeightBody::Constant(c.clone()),
            WeightBody::Polynomial(p) => {
                let alpha = T::one() / ratio.clone();
                let beta = src.a().clone() - target.a().clone() * alpha.clone();
                WeightBody::Polynomial(p.compose_affine(&alpha, &beta))
            }
            WeightBody::Piecewise(p) => WeightBody::Piecewise(p.transport(target)?),
        };
        Self::new(target.clone(), body)
    }

    pub fn cast<U: Scalar>(&self) -> Result<WeightSpec<U>> {
        let v = |xs: &Vec<T>| xs.iter().map(|x| x.cast()).collect::<Result<Vec<U>>>();
        let body = match &self.body {
            WeightBody::PiecewiseLinear { nodes, values } => WeightBody::PiecewiseLinear {
                nodes: v(nodes)?,
                values: v(values)?,
            },
            WeightBody::Sampled { nodes, values } => WeightBody::Sampled {
                nodes: v(nodes)?,
                values: v(values)?,
            },
            WeightBody::Polynomial(p) => WeightBody::Polynomial(p.cast()?),
            WeightBody::Constant(c) => WeightBody::Constant(c.cast()?),
            WeightBody::Piecewise(p) => WeightBody::Piecewise(p.cast()?),
        };
        WeightSpec::new(self.interval.cast()?, body)
    }
}

fn span<T: Scalar>(nodes: &[T]) -> Result<Interval<T>> {
    match (nodes.first(), nodes.last()) {
        (Some(a), Some(b)) => Interval::new(a.clone(), b.clone()),
        _ => Err(Error::Parameter("weight needs at least two nodes".into())),
    }
}

fn to_q<T: Scalar>(x: &T) -> Option<Rational> {
    x.to_rational()
}

/// Slopes of consecutive segments, exactly.
fn exact_slopes<T: Scalar>(nodes: &[T], values: &[T]) -> Option<Vec<Rational>> {
    let xs: Vec<Rational> = nodes.iter().map(to_q).collect::<Option<_>>()?;
    let ys: Vec<Rational> = values.iter().map(to_q).collect::<Option<_>>()?;
    Some(
        xs.windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| (&y[1] - &y[0]) / (&x[1] - &x[0]))
            .collect(),
    )
}

/// Concavity verdict with a certificate.
///
/// Certification is exact: every stored coefficient is converted to its
/// exact rational value (floats are dyadic rationals), slopes are compared
/// exactly and `w''` is sign-checked by root isolation. The one tolerance
/// appears at junctions of floating piecewise bodies, where a slope increase
/// below the certification tolerance yields `Unknown` rather than a verdict.
pub fn check_concave<T: Scalar>(w: &WeightSpec<T>) -> ConcavityReport {
    match &w.body {
        WeightBody::Constant(_) => ConcavityReport::concave(),
        WeightBody::Sampled { .. } => ConcavityReport::unknown("sampled data is never certified"),
        WeightBody::PiecewiseLinear { nodes, values } => {
            let Some(slopes) = exact_slopes(nodes, values) else {
                return ConcavityReport::unknown("non-finite node data");
            };
            for (index, s) in slopes.windows(2).enumerate() {
                if s[1] > s[0] {
                    return ConcavityReport::not_concave(NotConcave::SlopeIncrease {
                        index,
                        left: s[0].clone(),
                        right: s[1].clone(),
                    });
                }
            }
            ConcavityReport::concave()
        }
        WeightBody::Polynomial(p) => {
            let (Ok(q), Some(a), Some(b)) = (p.to_rational(), to_q(w.interval.a()), to_q(w.interval.b())) else {
                return ConcavityReport::unknown("non-finite coefficients");
            };
            match find_positive_point(&q.nth_derivative(2), &a, &b) {
                Some(x) => ConcavityReport::not_concave(NotConcave::PositiveCurvature { x }),
                None => ConcavityReport::concave(),
            }
        }
        WeightBody::Piecewise(p) => check_piecewise(p),
    }
}

fn check_piecewise<T: Scalar>(p: &PiecewisePolynomial<T>) -> ConcavityReport {
    let Ok(q) = p.to_rational() else {
        return ConcavityReport::unknown("non-finite coefficients");
    };
    let bps = q.breakpoints();
    let pieces = q.global_pieces();
    for (i, piece) in pieces.iter().enumerate() {
        if let Some(x) = find_positive_point(&piece.nth_derivative(2), &bps[i], &bps[i + 1]) {
            return ConcavityReport::not_concave(NotConcave::PositiveCurvature { x });
        }
    }
    let tol = Rational::from_float(T::certify_tolerance()).unwrap_or_else(Rational::zero);
    let mut within_tolerance = false;
    for i in 1..pieces.len() {
        let x = &bps[i];
        let (l, r) = (&pieces[i - 1], &pieces[i]);
        let jump = (l.eval(x) - r.eval(x)).abs();
        let scale = Rational::from_integer(1.into()) + l.eval_magnitude(x) + r.eval_magnitude(x);
        if !jump.is_zero() {
            if jump > &tol * &scale {
                return ConcavityReport::not_concave(NotConcave::ValueJump { x: x.clone() });
            }
            within_tolerance = true;
        }
        let (dl, dr) = (l.derivative(), r.derivative());
        let (sl, sr) = (dl.eval(x), dr.eval(x));
        if sr > sl {
            let dscale = Rational::from_integer(1.into()) + dl.eval_magnitude(x) + dr.eval_magnitude(x);
            if &sr - &sl > &tol * &dscale {
                return ConcavityReport::not_concave(NotConcave::JunctionSlopeIncrease {
                    x: x.clone(),
                    left: sl,
                    right: sr,
                });
            }
            within_tolerance = true;
        }
    }
    if within_tolerance {
        ConcavityReport::unknown("junction mismatch below rounding tolerance")
    } else {
        ConcavityReport::concave()
    }
}

fn check_nonnegative<T: Scalar>(w: &WeightSpec<T>) -> Nonnegativity {
    match &w.body {
        WeightBody::Sampled { .. } => Nonnegativity::Unknown,
        WeightBody::Constant(c) => verdict(!c.is_negative()),
        WeightBody::PiecewiseLinear { values, .. } => verdict(values.iter().all(|v| !v.is_negative())),
        WeightBody::Polynomial(_) | WeightBody::Piecewise(_) => {
            let Ok(q) = w.to_piecewise().to_rational() else {
                return Nonnegativity::Unknown;
            };
            let bps = q.breakpoints();
            verdict(
                q.global_pieces()
                    .iter()
                    .enumerate()
                    .all(|(i, p)| find_negative_point(p, &bps[i], &bps[i + 1]).is_none()),
            )
        }
    }
}

fn verdict(ok: bool) -> Nonnegativity {
    if ok {
        Nonnegativity::CertifiedNonnegative
    } else {
        Nonnegativity::CertifiedNegative
    }
}

/// Whether `w` is non-decreasing, decided exactly.
pub fn check_monotone<T: Scalar>(w: &WeightSpec<T>) -> Monotonicity {
    match &w.body {
        WeightBody::Sampled { .. } => Monotonicity::Unknown,
        WeightBody::Constant(_) => Monotonicity::NonDecreasing,
        WeightBody::PiecewiseLinear { nodes, values } => {
            let Some(slopes) = exact_slopes(nodes, values) else {
                return Monotonicity::Unknown;
            };
            match slopes.iter().position(|s| s.is_negative()) {
                Some(i) => Monotonicity::Decreasing {
                    x: (to_q(&nodes[i]).unwrap() + to_q(&nodes[i + 1]).unwrap()) / Rational::from_integer(2.into()),
                },
                None => Monotonicity::NonDecreasing,
            }
        }
        WeightBody::Polynomial(_) | WeightBody::Piecewise(_) => {
            let Ok(q) = w.to_piecewise().to_rational() else {
                return Monotonicity::Unknown;
            };
            let bps = q.breakpoints();
            let pieces = q.global_pieces();
            for (i, p) in pieces.iter().enumerate() {
                if let Some(x) = find_negative_point(&p.derivative(), &bps[i], &bps[i + 1]) {
                    return Monotonicity::Decreasing { x };
                }
            }
            for i in 1..pieces.len() {
                if pieces[i].eval(&bps[i]) < pieces[i - 1].eval(&bps[i]) {
                    return Monotonicity::Decreasing { x: bps[i].clone() };
                }
            }
            Monotonicity::NonDecreasing
        }
    }
}
