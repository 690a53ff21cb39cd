//! C² concave approximations of piecewise-linear concave weights.
//!
//! The target is extended beyond `[a, b]` by its boundary lines and convolved
//! with `K_h(t) = K(t/h)/h`, `K(t) = (35/32)(1 - t²)³` on `[-1, 1]`. Writing
//! the extension as `L(x) + Σ Δ_j (x - x_j)_+` with `Δ_j` the slope change at
//! node `x_j`, the convolution is `L(x) + Σ Δ_j h G((x - x_j)/h)` where
//! `G(u) = ∫ (u - t)_+ K(t) dt` is a degree-8 polynomial on `[-1, 1]`, zero to
//! the left and `u` to the right. The result is piecewise polynomial, C², and
//! concave because `K >= 0` and every `Δ_j <= 0`.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::{Interval, PiecewisePolynomial, Smoothness, WeightBody, WeightSpec};
use crate::poly::Polynomial;
use crate::scalar::{rational, Rational, Scalar};

/// Number of grid points used by [`smoothing_convergence`].
pub const GRID_POINTS: usize = 4097;

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingSchedule<T> {
    target: WeightSpec<T>,
    levels: usize,
}

impl<T: Scalar> SmoothingSchedule<T> {
    pub fn new(target: WeightSpec<T>, levels: usize) -> Result<Self> {
        if levels < 1 {
            return Err(Error::Parameter("a schedule needs at least one level".into()));
        }
        Ok(Self { target, levels })
    }

    pub fn target(&self) -> &WeightSpec<T> {
        &self.target
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Kernel half-width `h(n) = (b - a) / (8 * 2^n)`.
    pub fn halfwidth(&self, n: usize) -> T {
        let den = T::from_int(8) * num_traits::pow(T::from_int(2), n);
        self.target.interval().length() / den
    }
}

/// `K(t) = (35/32)(1 - t²)³`.
pub fn kernel() -> Polynomial<Rational> {
    let one_minus_t2 = Polynomial::new(vec![rational(1, 1), rational(0, 1), rational(-1, 1)]);
    (&(&one_minus_t2 * &one_minus_t2) * &one_minus_t2).scale(&rational(35, 32))
}

/// `G(u) = ∫_{-1}^{u} (u - t) K(t) dt` on `[-1, 1]`.
pub fn ramp() -> Polynomial<Rational> {
    let at = |p: &Polynomial<Rational>| p.eval(&-Rational::one());
    let k1 = kernel().antiderivative();
    let k1 = &k1 - &Polynomial::constant(at(&k1));
    let g = k1.antiderivative();
    &g - &Polynomial::constant(at(&g))
}

/// Nodes and values of a piecewise-linear (or affine) target.
fn linear_data<T: Scalar>(w: &WeightSpec<T>) -> Result<(Vec<T>, Vec<T>)> {
    let iv = w.interval();
    match w.body() {
        WeightBody::PiecewiseLinear { nodes, values } => Ok((nodes.clone(), values.clone())),
        WeightBody::Constant(c) => Ok((vec![iv.a().clone(), iv.b().clone()], vec![c.clone(), c.clone()])),
        WeightBody::Polynomial(p) if p.degree().unwrap_or(0) <= 1 => Ok((
            vec![iv.a().clone(), iv.b().clone()],
            vec![p.eval(iv.a()), p.eval(iv.b())],
        )),
        _ => Err(Error::Mode("smoothing needs a piecewise-linear target".into())),
    }
}

/// Level-`n` smoothed weight: C², concave, nonnegative, within `h(n) max|slope|` of the target.
pub fn smooth_concave<T: Scalar>(schedule: &SmoothingSchedule<T>, n: usize) -> Result<WeightSpec<T>> {
    if n < 1 || n > schedule.levels {
        return Err(Error::Parameter(format!("level {n} outside 1..={}", schedule.levels)));
    }
    let target = &schedule.target;
    if !target.is_certified_concave() {
        return Err(Error::Hypothesis("smoothing target is not certified concave".into()));
    }
    if !target.is_certified_nonnegative() {
        return Err(Error::Hypothesis("smoothing target is not certified nonnegative".into()));
    }
    let (nodes, values) = linear_data(target)?;
    // built exactly, then cast: the pieces have h^-7 coefficients
    let q = |v: &T| v.to_rational().ok_or_else(|| Error::Mode("non-finite target data".into()));
    let nodes: Vec<Rational> = nodes.iter().map(q).collect::<Result<_>>()?;
    let values: Vec<Rational> = values.iter().map(q).collect::<Result<_>>()?;
    let (a, b) = (nodes[0].clone(), nodes.last().unwrap().clone());
    let h = (&b - &a) / (rational(8, 1) * num_traits::pow(rational(2, 1), n));
    let slopes: Vec<Rational> = nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| (&y[1] - &y[0]) / (&x[1] - &x[0]))
        .collect();
    let line = Polynomial::linear(&values[0] - &slopes[0] * &a, slopes[0].clone());
    // (node, slope change, ramp in x on [node - h, node + h])
    let g = ramp();
    let inv_h = Rational::one() / &h;
    let kinks: Vec<(Rational, Rational, Polynomial<Rational>)> = (1..nodes.len() - 1)
        .filter_map(|j| {
            let delta = &slopes[j] - &slopes[j - 1];
            if delta.is_zero() {
                return None;
            }
            let xj = nodes[j].clone();
            let local = g.compose_affine(&inv_h, &(-&xj * &inv_h)).scale(&(&delta * &h));
            Some((xj, delta, local))
        })
        .collect();
    let mut cuts = vec![a.clone(), b.clone()];
    for (xj, _, _) in &kinks {
        for c in [xj - &h, xj + &h] {
            if c > a && c < b {
                cuts.push(c);
            }
        }
    }
    cuts.sort();
    cuts.dedup();
    let pieces: Vec<Polynomial<Rational>> = cuts
        .windows(2)
        .map(|c| {
            let mid = (&c[0] + &c[1]) / rational(2, 1);
            kinks.iter().fold(line.clone(), |acc, (xj, delta, local)| {
                if mid <= xj - &h {
                    acc
                } else if mid >= xj + &h {
                    &acc + &Polynomial::linear(-delta * xj, delta.clone())
                } else {
                    &acc + local
                }
            })
        })
        .collect();
    let p: PiecewisePolynomial<T> = PiecewisePolynomial::new(cuts, pieces, Smoothness::C2)?.cast()?;
    let (a, b) = (target.interval().a(), target.interval().b());
    let lowest = [p.eval(a)?, p.eval(b)?]
        .into_iter()
        .fold(T::zero(), |m, v| if v < m { v } else { m });
    let w = WeightSpec::piecewise(p)?;
    if lowest < T::zero() {
        w.shift(&-lowest)
    } else {
        Ok(w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelDistance {
    pub level: usize,
    pub halfwidth: f64,
    /// `max |w_n - w|` over the grid.
    pub sup_distance: f64,
    /// `C h(n)` with `C` the Lipschitz constant of the target.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub lipschitz: f64,
    pub grid_points: usize,
    /// The true sup distance exceeds the grid value by at most this amount.
    pub grid_error_bound: f64,
    pub levels: Vec<LevelDistance>,
}

/// Grid-measured sup distance between each level and the target.
pub fn smoothing_convergence<T: Scalar>(schedule: &SmoothingSchedule<T>) -> Result<ConvergenceReport> {
    let target = schedule.target.to_piecewise().cast::<f64>()?;
    let iv: Interval<f64> = schedule.target.interval().cast()?;
    let (a, len) = (*iv.a(), iv.length());
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| if i + 1 == GRID_POINTS { *iv.b() } else { a + len * i as f64 / (GRID_POINTS - 1) as f64 })
        .collect();
    let lipschitz = target
        .local_pieces()
        .iter()
        .map(|p| p.coeff(1).abs())
        .fold(0.0, f64::max);
    let reference: Vec<f64> = grid.iter().map(|x| target.eval(x)).collect::<Result<_>>()?;
    let levels = (1..=schedule.levels)
        .map(|n| {
            let w = smooth_concave(schedule, n)?.to_piecewise().cast::<f64>()?;
            let mut sup: f64 = 0.0;
            for (x, r) in grid.iter().zip(&reference) {
                sup = sup.max((w.eval(x)? - r).abs());
            }
            let h = schedule.halfwidth(n).to_f64_lossy();
            Ok(LevelDistance {
                level: n,
                halfwidth: h,
                sup_distance: sup,
                bound: lipschitz * h,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConvergenceReport {
        lipschitz,
        grid_points: GRID_POINTS,
        grid_error_bound: lipschitz * len / (GRID_POINTS - 1) as f64,
        levels,
    })
}
