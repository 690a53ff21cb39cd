//! Exact and adaptive integration of weighted products.
//!
//! Exact mode multiplies rational piecewise polynomials (and sine terms whose
//! phases land on multiples of `pi/2` at every breakpoint) and integrates in
//! closed form. Adaptive mode runs Gauss-Legendre panels of 16 and 32 nodes,
//! splitting first at all declared breakpoints.

use std::sync::OnceLock;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{ExactPiecewise, Phase, PiLaurent, Trig, TrigSum};
use crate::funcspace::{FunctionBody, Interval, PiecewisePolynomial, TestFunction, WeightSpec};
use crate::poly::Polynomial;
use crate::scalar::{Rational, Real, Scalar};

pub const DEFAULT_TOL: f64 = 1e-11;
pub const DEFAULT_MAX_PANELS: usize = 20_000;
const LOW: usize = 16;
const HIGH: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureMode {
    Exact,
    Adaptive,
}

/// Requested arithmetic for [`weighted_product_integral`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ModeRequest {
    /// Exact when every factor allows it, adaptive otherwise.
    #[default]
    Auto,
    Exact,
    Adaptive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    /// Closed form `sum c_k pi^k` in exact mode.
    pub exact: Option<PiLaurent>,
    pub abs_error_estimate: f64,
    pub mode: QuadratureMode,
    /// Number of panels in the final partition (1 per piece in exact mode).
    pub subdivisions: usize,
}

/// A real function with optional points where it is only piecewise smooth.
pub trait Integrand<T> {
    fn value(&self, x: T) -> T;

    fn breakpoints(&self) -> Vec<T> {
        Vec::new()
    }
}

impl<T, F: Fn(T) -> T> Integrand<T> for F {
    fn value(&self, x: T) -> T {
        self(x)
    }
}

/// A closure together with its breakpoints.
pub struct Piecewise<F, T> {
    pub f: F,
    pub points: Vec<T>,
}

impl<T: Copy, F: Fn(T) -> T> Integrand<T> for Piecewise<F, T> {
    fn value(&self, x: T) -> T {
        (self.f)(x)
    }

    fn breakpoints(&self) -> Vec<T> {
        self.points.clone()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static R16: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static R32: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match n {
        LOW => R16.get_or_init(|| gauss_legendre(LOW)),
        HIGH => R32.get_or_init(|| gauss_legendre(HIGH)),
        _ => unreachable!("only 16- and 32-node rules are used"),
    }
}

/// `(sum w g, sum w |g|)` of an `n`-node rule on `[l, h]`.
fn panel<T: Real, G: Integrand<T> + ?Sized>(g: &G, l: T, h: T, n: usize) -> (T, T) {
    let (nodes, weights) = rule(n);
    let half = (h - l) / T::from_int(2);
    let mid = l + half;
    let (mut s, mut a) = (T::zero(), T::zero());
    for (x, w) in nodes.iter().zip(weights) {
        let v = g.value(mid + half * T::from_f64(*x).unwrap());
        let w = T::from_f64(*w).unwrap();
        s = s + w * v;
        a = a + w * v.abs();
    }
    (s * half, a * half)
}

/// Adaptive Gauss-Legendre integration with absolute tolerance `tol`.
///
/// A panel is accepted when `|Q32 - Q16|` is below its share of `tol` or below
/// the rounding floor `64 eps ∫|g|` of that panel, whichever is larger.
pub fn integrate_adaptive<T: Real, G: Integrand<T> + ?Sized>(
    g: &G,
    iv: &Interval<T>,
    tol: T,
) -> Result<QuadratureResult<T>> {
    integrate_adaptive_with(g, iv, tol, DEFAULT_MAX_PANELS)
}

pub fn integrate_adaptive_with<T: Real, G: Integrand<T> + ?Sized>(
    g: &G,
    iv: &Interval<T>,
    tol: T,
    max_panels: usize,
) -> Result<QuadratureResult<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let (a, b) = (*iv.a(), *iv.b());
    let len = b - a;
    let mut edges = vec![a, b];
    edges.extend(g.breakpoints().into_iter().filter(|x| *x > a && *x < b));
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    edges.dedup();
    let mut stack: Vec<(T, T)> = edges.windows(2).rev().map(|w| (w[0], w[1])).collect();
    let floor_factor = T::epsilon() * T::from_int(64);
    let (mut value, mut error) = (T::zero(), T::zero());
    let mut panels = stack.len();
    while let Some((l, h)) = stack.pop() {
        let (coarse, _) = panel(g, l, h, LOW);
        let (fine, magnitude) = panel(g, l, h, HIGH);
        let err = (fine - coarse).abs();
        let share = tol * (h - l) / len;
        let mid = l + (h - l) / T::from_int(2);
        let splittable = mid > l && mid < h;
        if err <= share.max(floor_factor * magnitude) || !splittable {
            value = value + fine;
            error = error + err;
            continue;
        }
        if panels >= max_panels {
            let rest: T = stack
                .iter()
                .map(|&(l, h)| panel(g, l, h, HIGH).0)
                .fold(T::zero(), |s, v| s + v);
            return Err(Error::Convergence {
                estimate: (value + fine + rest).to_f64_lossy(),
                error_estimate: (error + err).to_f64_lossy(),
                subdivisions: panels,
            });
        }
        panels += 1;
        stack.push((mid, h));
        stack.push((l, mid));
    }
    if !value.is_finite() {
        return Err(Error::Domain("integrand is not finite".into()));
    }
    Ok(QuadratureResult {
        value,
        exact: None,
        abs_error_estimate: error.to_f64_lossy(),
        mode: QuadratureMode::Adaptive,
        subdivisions: panels,
    })
}

/// `∫ p` over `iv`, exactly: the sum over pieces of antiderivative differences.
pub fn integrate_poly_exact<T: Scalar>(p: &PiecewisePolynomial<T>, iv: &Interval<T>) -> Result<Rational> {
    let q = p
        .to_rational()
        .map_err(|_| Error::Mode("coefficients have no exact rational value; use adaptive mode".into()))?;
    let (lo, hi) = (
        iv.a().to_rational().ok_or_else(|| Error::Mode("non-finite endpoint".into()))?,
        iv.b().to_rational().ok_or_else(|| Error::Mode("non-finite endpoint".into()))?,
    );
    let own = q.interval();
    if lo < *own.a() || hi > *own.b() {
        return Err(Error::Domain("integration interval exceeds the polynomial's domain".into()));
    }
    let bps = q.breakpoints();
    let mut total = Rational::from_integer(0.into());
    for (i, piece) in q.global_pieces().iter().enumerate() {
        let l = std::cmp::max(&bps[i], &lo);
        let h = std::cmp::min(&bps[i + 1], &hi);
        if l < h {
            total += piece.integrate(l, h);
        }
    }
    Ok(total)
}

/// One factor of a weighted product.
#[derive(Debug)]
pub enum Factor<'a, T> {
    One,
    /// `f^(order)` with `order <= 2`.
    Derivative(&'a TestFunction<T>, usize),
}

impl<T> Clone for Factor<'_, T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T> Copy for Factor<'_, T> {}

impl<'a, T> Factor<'a, T> {
    pub fn value(f: &'a TestFunction<T>) -> Self {
        Self::Derivative(f, 0)
    }

    pub fn first(f: &'a TestFunction<T>) -> Self {
        Self::Derivative(f, 1)
    }

    pub fn second(f: &'a TestFunction<T>) -> Self {
        Self::Derivative(f, 2)
    }
}

fn exact_weight<T: Scalar>(w: &WeightSpec<T>) -> Result<ExactPiecewise> {
    let q = w
        .to_piecewise()
        .to_rational()
        .map_err(|_| Error::Mode("weight has non-finite data".into()))?;
    ExactPiecewise::new(
        q.breakpoints().to_vec(),
        q.global_pieces().into_iter().map(TrigSum::polynomial).collect(),
        None,
    )
}

fn exact_factor<T: Scalar>(factor: &Factor<'_, T>, iv: &Interval<Rational>) -> Result<ExactPiecewise> {
    let (f, order) = match factor {
        Factor::One => return ExactPiecewise::constant(iv.a().clone(), iv.b().clone(), Rational::from_integer(1.into())),
        Factor::Derivative(f, order) => (*f, *order),
    };
    let mode_err = |_| Error::Mode("function has non-finite data".into());
    match f.body() {
        FunctionBody::Piecewise(p) => {
            let q = p.to_rational().map_err(mode_err)?.nth_derivative(order);
            ExactPiecewise::new(
                q.breakpoints().to_vec(),
                q.global_pieces().into_iter().map(TrigSum::polynomial).collect(),
                None,
            )
        }
        FunctionBody::Sine(s) | FunctionBody::HalfSine(s) => {
            let s = s.cast::<Rational>().map_err(mode_err)?;
            let len = s.interval().length();
            let mut sum = TrigSum::zero();
            for t in s.terms() {
                let rho = f.frequency(t.mode).expect("sine body");
                // d^k/dx^k sin(k0 x') = k0^k * (sin, cos, -sin, -cos)[k mod 4], k0 = rho pi / L
                let factor = num_traits::pow(rho.clone() / &len, order) * &t.coefficient;
                let (trig, sign) = match order % 4 {
                    0 => (Trig::Sin(rho), 1),
                    1 => (Trig::Cos(rho), 1),
                    2 => (Trig::Sin(rho), -1),
                    _ => (Trig::Cos(rho), -1),
                };
                let c = factor * Rational::from_integer(sign.into());
                sum.add_term(order as i32, trig, Polynomial::constant(c));
            }
            let phase = Phase {
                origin: s.interval().a().clone(),
                length: len,
            };
            ExactPiecewise::single(s.interval().a().clone(), s.interval().b().clone(), sum, Some(phase))
        }
    }
}

/// Exact `∫ w u v` as a Laurent polynomial in `pi`.
pub fn weighted_product_exact<T: Scalar>(
    w: &WeightSpec<T>,
    u: Factor<'_, T>,
    v: Factor<'_, T>,
    iv: &Interval<T>,
) -> Result<(PiLaurent, usize)> {
    let ivq = iv.cast::<Rational>().map_err(|_| Error::Mode("non-finite interval".into()))?;
    let prod = exact_weight(w)?
        .mul(&exact_factor(&u, &ivq)?)?
        .mul(&exact_factor(&v, &ivq)?)?;
    let restricted = prod.mul(&ExactPiecewise::constant(
        ivq.a().clone(),
        ivq.b().clone(),
        Rational::from_integer(1.into()),
    )?)?;
    if restricted.breakpoints().first() != Some(ivq.a()) || restricted.breakpoints().last() != Some(ivq.b()) {
        return Err(Error::Domain("factors do not cover the integration interval".into()));
    }
    let pieces = restricted.breakpoints().len() - 1;
    Ok((restricted.integrate()?, pieces))
}

/// Floating evaluator of `w`, `u` and `v` prepared once per integral.
struct ProductIntegrand {
    weight: PiecewisePolynomial<f64>,
    u: FactorEval,
    v: FactorEval,
    points: Vec<f64>,
}

enum FactorEval {
    One,
    Poly(PiecewisePolynomial<f64>),
    /// `(coefficient * k^order, k, phase shift in quarter turns)` per term, argument `k (x - a)`.
    Trig { a: f64, terms: Vec<(f64, f64)>, order: usize },
}

impl FactorEval {
    fn new<T: Scalar>(factor: &Factor<'_, T>) -> Result<Self> {
        let (f, order) = match factor {
            Factor::One => return Ok(Self::One),
            Factor::Derivative(f, order) => (*f, *order),
        };
        let f = f.cast::<f64>()?;
        Ok(match f.body() {
            FunctionBody::Piecewise(p) => Self::Poly(p.nth_derivative(order)),
            FunctionBody::Sine(s) | FunctionBody::HalfSine(s) => {
                let len = s.interval().length();
                let terms = s
                    .terms()
                    .iter()
                    .map(|t| {
                        let rho = f.frequency(t.mode).unwrap().to_f64().unwrap();
                        let k = rho * std::f64::consts::PI / len;
                        (t.coefficient * k.powi(order as i32), k)
                    })
                    .collect();
                Self::Trig {
                    a: *s.interval().a(),
                    terms,
                    order,
                }
            }
        })
    }

    fn eval(&self, x: f64) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Poly(p) => {
                let i = p.piece_index(&x).unwrap_or(0);
                p.eval_piece(i, &x)
            }
            Self::Trig { a, terms, order } => {
                let u = x - a;
                terms
                    .iter()
                    .map(|(c, k)| {
                        let (s, co) = (k * u).sin_cos();
                        c * match order % 4 {
                            0 => s,
                            1 => co,
                            2 => -s,
                            _ => -co,
                        }
                    })
                    .sum()
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Poly(p) => p.breakpoints().to_vec(),
            _ => Vec::new(),
        }
    }
}

impl Integrand<f64> for ProductIntegrand {
    fn value(&self, x: f64) -> f64 {
        let i = self.weight.piece_index(&x).unwrap_or(0);
        self.weight.eval_piece(i, &x) * self.u.eval(x) * self.v.eval(x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.points.clone()
    }
}

/// Adaptive `∫ w u v` in `f64`.
pub fn weighted_product_adaptive<T: Scalar>(
    w: &WeightSpec<T>,
    u: Factor<'_, T>,
    v: Factor<'_, T>,
    iv: &Interval<T>,
    tol: f64,
) -> Result<QuadratureResult<f64>> {
    let weight = w.to_piecewise().cast::<f64>()?;
    let (u, v) = (FactorEval::new(&u)?, FactorEval::new(&v)?);
    let mut points = weight.breakpoints().to_vec();
    points.extend(u.breakpoints());
    points.extend(v.breakpoints());
    let g = ProductIntegrand { weight, u, v, points };
    integrate_adaptive(&g, &iv.cast::<f64>()?, tol)
}

/// `∫ w u v` over `iv`, exact whenever the data allow it (see [`ModeRequest`]).
pub fn weighted_product_integral<T: Scalar>(
    w: &WeightSpec<T>,
    u: Factor<'_, T>,
    v: Factor<'_, T>,
    iv: &Interval<T>,
    tol: f64,
    mode: ModeRequest,
) -> Result<QuadratureResult<T>> {
    if mode != ModeRequest::Adaptive {
        match weighted_product_exact(w, u, v, iv) {
            Ok((exact, pieces)) => {
                let value = match exact.as_rational() {
                    Some(q) => T::from_rational(&q),
                    None => T::from_f64(exact.to_f64())
                        .unwrap_or_else(|| T::from_rational(&exact.to_rational_approx())),
                };
                return Ok(QuadratureResult {
                    value,
                    exact: Some(exact),
                    abs_error_estimate: 0.0,
                    mode: QuadratureMode::Exact,
                    subdivisions: pieces,
                });
            }
            Err(Error::Mode(msg)) if mode == ModeRequest::Exact => return Err(Error::Mode(msg)),
            Err(Error::Mode(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let r = weighted_product_adaptive(w, u, v, iv, tol)?;
    Ok(QuadratureResult {
        value: T::from_f64(r.value).ok_or_else(|| Error::Internal("non-finite integral".into()))?,
        exact: None,
        abs_error_estimate: r.abs_error_estimate,
        mode: r.mode,
        subdivisions: r.subdivisions,
    })
}
