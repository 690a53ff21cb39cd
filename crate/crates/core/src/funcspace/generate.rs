//! Seeded generators for property sweeps.
//!
//! Random data is drawn on rational grids (slopes in steps of 1/100,
//! breakpoints on a uniform grid) so every generated instance is exactly
//! representable in rational mode and its verdicts hold by construction.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Interval, SineCombination, SineTerm, TestFunction, WeightSpec};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{rational, Rational, Scalar};

/// Constant added after shifting the minimum of a generated weight to zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Offset {
    Zero,
    /// Uniform in `[0, 1]` on a 1/100 grid.
    Random,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_pieces(pieces: usize) -> Result<()> {
    if pieces < 1 {
        Err(Error::Parameter("a piecewise-linear weight needs at least one piece".into()))
    } else {
        Ok(())
    }
}

/// Sorted interior breakpoints on a uniform grid plus both endpoints, as rationals.
fn grid_nodes(rng: &mut ChaCha8Rng, iv: &Interval<Rational>, pieces: usize) -> Vec<Rational> {
    let cells = 64.max(4 * pieces);
    let mut idx: Vec<usize> = sample(rng, cells - 1, pieces - 1).into_iter().map(|i| i + 1).collect();
    idx.sort_unstable();
    let len = iv.length();
    let mut nodes = vec![iv.a().clone()];
    nodes.extend(
        idx.into_iter()
            .map(|i| iv.a() + &len * rational(i as i64, cells as i64)),
    );
    nodes.push(iv.b().clone());
    nodes
}

/// Strictly decreasing slopes in steps of 1/100 with gaps of at least 1/20.
fn decreasing_slopes(rng: &mut ChaCha8Rng, pieces: usize, nonnegative: bool) -> Vec<Rational> {
    let gaps: Vec<i64> = (1..pieces).map(|_| rng.random_range(5..=100)).collect();
    let total: i64 = gaps.iter().sum();
    let last = if nonnegative {
        rng.random_range(0..=200)
    } else {
        rng.random_range(-200 - total..=200)
    };
    let mut slopes = vec![last];
    for g in gaps.iter().rev() {
        let next = slopes.last().unwrap() + g;
        slopes.push(next);
    }
    slopes.reverse();
    if pieces == 1 && slopes[0] == 0 {
        slopes[0] = if nonnegative { 1 } else { -1 };
    }
    slopes.into_iter().map(|s| rational(s, 100)).collect()
}

fn offset_value(rng: &mut ChaCha8Rng, offset: Offset) -> Rational {
    match offset {
        Offset::Zero => rational(0, 1),
        Offset::Random => rational(rng.random_range(0..=100), 100),
    }
}

fn assemble<T: Scalar>(nodes: Vec<Rational>, slopes: &[Rational], offset: Rational) -> Result<WeightSpec<T>> {
    let mut values = vec![rational(0, 1)];
    for (w, s) in nodes.windows(2).zip(slopes) {
        let next = values.last().unwrap() + s * (&w[1] - &w[0]);
        values.push(next);
    }
    let min = values.iter().min().unwrap().clone();
    let values: Vec<Rational> = values.into_iter().map(|v| v - &min + &offset).collect();
    WeightSpec::<Rational>::piecewise_linear(nodes, values)?.cast()
}

/// Concave piecewise-linear weight whose minimum is zero.
pub fn random_concave_weight<T: Scalar>(seed: u64, iv: &Interval<T>, pieces: usize) -> Result<WeightSpec<T>> {
    random_concave_weight_with(seed, iv, pieces, Offset::Zero)
}

pub fn random_concave_weight_with<T: Scalar>(
    seed: u64,
    iv: &Interval<T>,
    pieces: usize,
    offset: Offset,
) -> Result<WeightSpec<T>> {
    check_pieces(pieces)?;
    let iv = iv.cast::<Rational>()?;
    let mut rng = rng(seed);
    let nodes = grid_nodes(&mut rng, &iv, pieces);
    let slopes = decreasing_slopes(&mut rng, pieces, false);
    let c = offset_value(&mut rng, offset);
    assemble(nodes, &slopes, c)
}

/// Concave, non-decreasing piecewise-linear weight (all slopes `>= 0`).
pub fn random_monotone_concave_weight<T: Scalar>(
    seed: u64,
    iv: &Interval<T>,
    pieces: usize,
    offset: Offset,
) -> Result<WeightSpec<T>> {
    check_pieces(pieces)?;
    let iv = iv.cast::<Rational>()?;
    let mut rng = rng(seed);
    let nodes = grid_nodes(&mut rng, &iv, pieces);
    let slopes = decreasing_slopes(&mut rng, pieces, true);
    let c = offset_value(&mut rng, offset);
    assemble(nodes, &slopes, c)
}

/// Concave polynomial weight of degree `degree + 2`.
///
/// `w'' = -q((x - a)/(b - a))` with `q` a Bernstein combination with
/// nonnegative coefficients, integrated twice with a random linear part and
/// shifted so that the smaller endpoint value (the minimum) equals the offset.
pub fn random_concave_polynomial_weight<T: Scalar>(
    seed: u64,
    iv: &Interval<T>,
    degree: usize,
    offset: Offset,
) -> Result<WeightSpec<T>> {
    let iv = iv.cast::<Rational>()?;
    let mut rng = rng(seed);
    let t = Polynomial::linear(rational(0, 1), rational(1, 1));
    let one_minus_t = Polynomial::linear(rational(1, 1), rational(-1, 1));
    let mut q = Polynomial::zero();
    for k in 0..=degree {
        let c = if k == 0 {
            rng.random_range(1..=100)
        } else {
            rng.random_range(0..=100)
        };
        let mut basis = Polynomial::constant(rational(c, 10));
        for _ in 0..k {
            basis = &basis * &t;
        }
        for _ in k..degree {
            basis = &basis * &one_minus_t;
        }
        q = &q + &basis;
    }
    let slope = rational(rng.random_range(-300..=300), 100);
    let w_t = &(-q).antiderivative().antiderivative() + &Polynomial::linear(rational(0, 1), slope);
    let len = iv.length();
    let w = w_t.compose_affine(&(rational(1, 1) / &len), &(-iv.a() / &len));
    let min = std::cmp::min(w.eval(iv.a()), w.eval(iv.b()));
    let shift = offset_value(&mut rng, offset) - min;
    let w = &w + &Polynomial::constant(shift);
    WeightSpec::polynomial(iv, w)?.cast()
}

fn random_coefficients(rng: &mut ChaCha8Rng, max_mode: u32) -> Vec<Rational> {
    loop {
        let c: Vec<Rational> = (0..max_mode)
            .map(|_| rational(rng.random_range(-1000..=1000), 1000))
            .collect();
        if c.iter().any(|x| *x != rational(0, 1)) {
            return c;
        }
    }
}

fn combination<T: Scalar>(seed: u64, iv: &Interval<T>, max_mode: u32) -> Result<SineCombination<T>> {
    if max_mode < 1 {
        return Err(Error::Parameter("max_mode must be at least 1".into()));
    }
    let mut rng = rng(seed);
    let terms = random_coefficients(&mut rng, max_mode)
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            Ok(SineTerm {
                coefficient: c.cast()?,
                mode: i as u32 + 1,
            })
        })
        .collect::<Result<_>>()?;
    SineCombination::new(iv.clone(), terms)
}

/// Sine combination over modes `1..=max_mode` with coefficients in `[-1, 1]`.
pub fn random_admissible_function<T: Scalar>(seed: u64, iv: &Interval<T>, max_mode: u32) -> Result<TestFunction<T>> {
    Ok(TestFunction::sine(combination(seed, iv, max_mode)?))
}

/// Quarter-wave combination with `f(a) = f'(b) = 0`.
pub fn random_half_sine_function<T: Scalar>(seed: u64, iv: &Interval<T>, max_mode: u32) -> Result<TestFunction<T>> {
    Ok(TestFunction::half_sine(combination(seed, iv, max_mode)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{check_admissible, check_monotone, Monotonicity, WeightBody};

    fn slopes(w: &WeightSpec<Rational>) -> Vec<Rational> {
        let WeightBody::PiecewiseLinear { nodes, values } = w.body() else {
            panic!("expected a piecewise-linear body")
        };
        nodes
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, y)| (&y[1] - &y[0]) / (&x[1] - &x[0]))
            .collect()
    }

    #[test]
    fn generated_weights_meet_postconditions() {
        let iv = Interval::<Rational>::unit();
        let w = random_concave_weight(7, &iv, 5).unwrap();
        let s = slopes(&w);
        assert_eq!(s.len(), 5);
        assert!(s.windows(2).all(|p| p[1] < p[0]));
        let WeightBody::PiecewiseLinear { values, .. } = w.body() else { unreachable!() };
        assert_eq!(values.iter().min().unwrap(), &rational(0, 1));
        assert!(w.is_certified_concave() && w.is_certified_nonnegative());

        let one = random_concave_weight(1, &iv, 1).unwrap();
        assert!(one.is_certified_nonnegative());
        assert!(matches!(random_concave_weight(3, &iv, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn monotone_and_polynomial_generators() {
        let iv = Interval::<Rational>::unit();
        for seed in 0..20 {
            let w = random_monotone_concave_weight(seed, &iv, 4, Offset::Random).unwrap();
            assert!(w.is_certified_concave());
            assert_eq!(check_monotone(&w), Monotonicity::NonDecreasing);
            let p = random_concave_polynomial_weight(seed, &iv, 3, Offset::Zero).unwrap();
            assert!(p.is_certified_concave() && p.is_certified_nonnegative(), "seed {seed}");
        }
    }

    #[test]
    fn functions_are_deterministic_and_admissible() {
        let iv = Interval::<f64>::unit();
        let f = random_admissible_function(3, &iv, 4).unwrap();
        assert_eq!(f, random_admissible_function(3, &iv, 4).unwrap());
        assert!(check_admissible(&f, &iv).passed());
        let h = random_half_sine_function(3, &iv, 4).unwrap();
        assert!(check_admissible(&h, &iv).passed());
        assert!(random_admissible_function::<f64>(0, &iv, 0).is_err());
    }
}
