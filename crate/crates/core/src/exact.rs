//! Exact integration of piecewise trigonometric polynomials.
//!
//! Integrands are sums of `pi^p * P(x) * trig(rho * pi * (x - origin) / length)`
//! with rational polynomial `P`, rational frequency `rho` and `trig` one of
//! `1`, `cos`, `sin`. Whenever every integration endpoint sits at a phase that
//! is a multiple of `pi/2`, the definite integral is a Laurent polynomial in
//! `pi` with rational coefficients, represented by [`PiLaurent`]. Because `pi`
//! is transcendental, two such values are equal exactly when their
//! coefficients agree.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{format_rational, parse_rational, Rational};

type QPoly = Polynomial<Rational>;

const PI_DIGITS: &str = "3.14159265358979323846264338327950288419716939937510582097494459230781640628620899";

fn pi_bounds() -> &'static (Rational, Rational) {
    static BOUNDS: OnceLock<(Rational, Rational)> = OnceLock::new();
    BOUNDS.get_or_init(|| {
        let lo = parse_rational(PI_DIGITS).expect("pi literal");
        let decimals = PI_DIGITS.len() - 2;
        let ulp = Rational::new(BigInt::one(), num_traits::pow(BigInt::from(10), decimals));
        let hi = lo.clone() + ulp;
        (lo, hi)
    })
}

/// Rational enclosure `[lo, hi]` of pi, one unit in the 79th decimal wide.
pub fn pi_enclosure() -> (Rational, Rational) {
    pi_bounds().clone()
}

/// `sum_k c_k * pi^k` with rational `c_k` and integer (possibly negative) `k`.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct PiLaurent {
    terms: BTreeMap<i32, Rational>,
}

impl PiLaurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_rational(c: Rational) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: Rational, power: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(power, c);
        }
        Self { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &Rational)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value when it carries no power of pi.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&0).cloned(),
            _ => None,
        }
    }

    pub fn add_term(&mut self, c: Rational, power: i32) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(power).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&power);
        }
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, c)| (*k, c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                out.add_term(a * b, i + j);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(c.clone(), *k);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    /// `self = r * other` for a rational `r`, if such `r` exists.
    pub fn ratio_to(&self, other: &Self) -> Option<Rational> {
        if other.is_zero() {
            return None;
        }
        let (k, lead) = other.terms.iter().next_back()?;
        let r = self.terms.get(k).cloned().unwrap_or_else(Rational::zero) / lead;
        (other.scale(&r) == *self).then_some(r)
    }

    /// Evaluates with a 79-digit rational value of pi.
    pub fn to_rational_approx(&self) -> Rational {
        let (pi, _) = pi_bounds();
        self.terms
            .iter()
            .map(|(k, c)| c * pow_signed(pi, *k))
            .fold(Rational::zero(), |acc, v| acc + v)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational_approx().to_f64().unwrap_or(f64::NAN)
    }

    /// Certified sign, by interval evaluation over the enclosure of pi.
    ///
    /// `None` only when the value is nonzero but smaller than the enclosure resolves.
    pub fn sign(&self) -> Option<Ordering> {
        if self.is_zero() {
            return Some(Ordering::Equal);
        }
        let (plo, phi) = pi_bounds();
        let mut lo = Rational::zero();
        let mut hi = Rational::zero();
        for (k, c) in &self.terms {
            let (a, b) = {
                let x = pow_signed(plo, *k);
                let y = pow_signed(phi, *k);
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            };
            if c.is_positive() {
                lo += c * a;
                hi += c * b;
            } else {
                lo += c * b;
                hi += c * a;
            }
        }
        if lo.is_positive() {
            Some(Ordering::Greater)
        } else if hi.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// Certified comparison `self` vs `other`.
    pub fn compare(&self, other: &Self) -> Option<Ordering> {
        self.sub(other).sign()
    }
}

fn pow_signed(x: &Rational, k: i32) -> Rational {
    let p = num_traits::pow(x.clone(), k.unsigned_abs() as usize);
    if k >= 0 {
        p
    } else {
        p.recip()
    }
}

impl fmt::Debug for PiLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PiLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(k, c)| match k {
                0 => format_rational(c),
                _ => format!("{}*pi^{}", format_rational(c), k),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Serialize for PiLaurent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, String> = self
            .terms
            .iter()
            .map(|(k, c)| (format!("pi^{k}"), format_rational(c)))
            .collect();
        map.serialize(s)
    }
}

/// Angular factor of a term; the argument is `rho * pi * (x - origin) / length`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Trig {
    One,
    Cos(Rational),
    Sin(Rational),
}

/// Reference point and length fixing the trigonometric argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase {
    pub origin: Rational,
    pub length: Rational,
}

/// Sum of `pi^p * P(x) * trig` terms, keyed by `(p, trig)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigSum {
    terms: BTreeMap<(i32, Trig), QPoly>,
}

impl TrigSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn polynomial(p: QPoly) -> Self {
        let mut s = Self::zero();
        s.add_term(0, Trig::One, p);
        s
    }

    /// Adds `pi^power * poly * trig`, normalizing negative and zero frequencies.
    pub fn add_term(&mut self, power: i32, trig: Trig, poly: QPoly) {
        let (trig, poly) = match trig {
            Trig::Cos(r) if r.is_zero() => (Trig::One, poly),
            Trig::Sin(r) if r.is_zero() => return,
            Trig::Cos(r) if r.is_negative() => (Trig::Cos(-r), poly),
            Trig::Sin(r) if r.is_negative() => (Trig::Sin(-r), -poly),
            t => (t, poly),
        };
        if poly.is_zero() {
            return;
        }
        let key = (power, trig);
        let sum = match self.terms.remove(&key) {
            Some(existing) => &existing + &poly,
            None => poly,
        };
        if !sum.is_zero() {
            self.terms.insert(key, sum);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_trig(&self) -> bool {
        self.terms.keys().any(|(_, t)| *t != Trig::One)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        let mut out = Self::zero();
        for ((p, s), a) in &self.terms {
            for ((q, t), b) in &other.terms {
                let prod = a * b;
                let power = p + q;
                match (s, t) {
                    (Trig::One, t) | (t, Trig::One) => out.add_term(power, t.clone(), prod),
                    (Trig::Cos(x), Trig::Cos(y)) => {
                        let h = prod.scale(&half);
                        out.add_term(power, Trig::Cos(x - y), h.clone());
                        out.add_term(power, Trig::Cos(x + y), h);
                    }
                    (Trig::Sin(x), Trig::Sin(y)) => {
                        let h = prod.scale(&half);
                        out.add_term(power, Trig::Cos(x - y), h.clone());
                        out.add_term(power, Trig::Cos(x + y), -h);
                    }
                    (Trig::Sin(x), Trig::Cos(y)) | (Trig::Cos(y), Trig::Sin(x)) => {
                        let h = prod.scale(&half);
                        out.add_term(power, Trig::Sin(x + y), h.clone());
                        out.add_term(power, Trig::Sin(x - y), h);
                    }
                }
            }
        }
        out
    }

    /// Exact definite integral over `[lo, hi]`.
    pub fn integrate(&self, phase: Option<&Phase>, lo: &Rational, hi: &Rational) -> Result<PiLaurent> {
        let mut total = PiLaurent::zero();
        for ((power, trig), poly) in &self.terms {
            match trig {
                Trig::One => total.add_term(poly.integrate(lo, hi), *power),
                Trig::Cos(rho) | Trig::Sin(rho) => {
                    let phase = phase.ok_or_else(|| Error::Internal("trigonometric term without phase".into()))?;
                    let is_sin = matches!(trig, Trig::Sin(_));
                    let upper = trig_antiderivative(poly, rho, is_sin, phase, hi)?;
                    let lower = trig_antiderivative(poly, rho, is_sin, phase, lo)?;
                    for (k, c) in upper.sub(&lower).terms() {
                        total.add_term(c.clone(), k + power);
                    }
                }
            }
        }
        Ok(total)
    }
}

/// Multiple of `pi/2` of the phase at `x`, if integral.
fn quarter_turns(rho: &Rational, phase: &Phase, x: &Rational) -> Result<BigInt> {
    let m = Rational::from_integer(BigInt::from(2)) * rho * (x - &phase.origin) / &phase.length;
    if m.is_integer() {
        Ok(m.to_integer())
    } else {
        Err(Error::Mode(format!(
            "phase at x = {} is not a multiple of pi/2; exact trigonometric integration unavailable",
            format_rational(x)
        )))
    }
}

/// `sin(j * pi / 2)` for integer `j`.
fn sin_quarter(j: &BigInt) -> i64 {
    match j.mod_floor(&BigInt::from(4)).to_u8().unwrap_or(0) {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

/// Antiderivative of `P(x) * cos(w (x - x0))` (or `sin`) at `x`, with `w = rho * pi / L`.
///
/// Repeated integration by parts: `sum_k P^(k)(x) g_k(phi) / w^(k+1)` where
/// `g_k = sin(phi + k pi/2)` for cosine and `-cos(phi + k pi/2)` for sine.
fn trig_antiderivative(poly: &QPoly, rho: &Rational, is_sin: bool, phase: &Phase, x: &Rational) -> Result<PiLaurent> {
    let m = quarter_turns(rho, phase, x)?;
    let inv_w = &phase.length / rho;
    let mut out = PiLaurent::zero();
    let mut deriv = poly.clone();
    let mut inv_w_pow = inv_w.clone();
    let mut k: i64 = 0;
    while !deriv.is_zero() {
        let j = &m + BigInt::from(k);
        let g = if is_sin {
            -sin_quarter(&(j + BigInt::one()))
        } else {
            sin_quarter(&j)
        };
        if g != 0 {
            let c = deriv.eval(x) * &inv_w_pow * Rational::from_integer(BigInt::from(g));
            out.add_term(c, -(k as i32) - 1);
        }
        deriv = deriv.derivative();
        inv_w_pow = &inv_w_pow * &inv_w;
        k += 1;
    }
    Ok(out)
}

/// Piecewise [`TrigSum`] on a partition, with one shared phase.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactPiecewise {
    breakpoints: Vec<Rational>,
    pieces: Vec<TrigSum>,
    phase: Option<Phase>,
}

impl ExactPiecewise {
    pub fn new(breakpoints: Vec<Rational>, pieces: Vec<TrigSum>, phase: Option<Phase>) -> Result<Self> {
        if breakpoints.len() < 2 || pieces.len() + 1 != breakpoints.len() {
            return Err(Error::Internal("exact piecewise shape mismatch".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Internal("exact piecewise breakpoints not increasing".into()));
        }
        if phase.is_none() && pieces.iter().any(TrigSum::has_trig) {
            return Err(Error::Internal("trigonometric pieces need a phase".into()));
        }
        Ok(Self {
            breakpoints,
            pieces,
            phase,
        })
    }

    pub fn single(lo: Rational, hi: Rational, piece: TrigSum, phase: Option<Phase>) -> Result<Self> {
        Self::new(vec![lo, hi], vec![piece], phase)
    }

    pub fn constant(lo: Rational, hi: Rational, c: Rational) -> Result<Self> {
        Self::single(lo, hi, TrigSum::polynomial(QPoly::constant(c)), None)
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    fn piece_at(&self, mid: &Rational) -> &TrigSum {
        let i = self.breakpoints[1..]
            .iter()
            .position(|b| mid < b)
            .unwrap_or(self.pieces.len() - 1);
        &self.pieces[i]
    }

    /// Pointwise product over the merged partition of the common domain.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let phase = match (&self.phase, &other.phase) {
            (Some(p), Some(q)) if p != q => {
                return Err(Error::Mode("factors use different trigonometric phases".into()))
            }
            (Some(p), _) | (None, Some(p)) => Some(p.clone()),
            (None, None) => None,
        };
        let lo = std::cmp::max(&self.breakpoints[0], &other.breakpoints[0]).clone();
        let hi = std::cmp::min(self.breakpoints.last().unwrap(), other.breakpoints.last().unwrap()).clone();
        if lo >= hi {
            return Err(Error::Domain("factors have disjoint domains".into()));
        }
        let mut merged: Vec<Rational> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .filter(|b| **b >= lo && **b <= hi)
            .cloned()
            .collect();
        merged.sort();
        merged.dedup();
        let two = Rational::from_integer(BigInt::from(2));
        let pieces = merged
            .windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / &two;
                self.piece_at(&mid).mul(other.piece_at(&mid))
            })
            .collect();
        Self::new(merged, pieces, phase)
    }

    /// Exact integral over the whole domain.
    pub fn integrate(&self) -> Result<PiLaurent> {
        let mut total = PiLaurent::zero();
        for (w, piece) in self.breakpoints.windows(2).zip(&self.pieces) {
            total = total.add(&piece.integrate(self.phase.as_ref(), &w[0], &w[1])?);
        }
        Ok(total)
    }
}
