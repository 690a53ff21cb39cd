use serde::{Deserialize, Serialize};

use super::Interval;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{certify_eq, Rational, Scalar};

/// Continuity class certified at interior breakpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Discontinuous,
    C0,
    C1,
    C2,
}

impl Smoothness {
    /// Highest derivative order that must agree across junctions.
    pub fn order(self) -> Option<usize> {
        match self {
            Self::Discontinuous => None,
            Self::C0 => Some(0),
            Self::C1 => Some(1),
            Self::C2 => Some(2),
        }
    }

    fn from_order(order: Option<usize>) -> Self {
        match order {
            None => Self::Discontinuous,
            Some(0) => Self::C0,
            Some(1) => Self::C1,
            Some(_) => Self::C2,
        }
    }

    /// Class of the derivative.
    pub fn lowered(self) -> Self {
        Self::from_order(self.order().and_then(|k| k.checked_sub(1)))
    }
}

/// First junction where two pieces disagree.
#[derive(Clone, Debug, PartialEq)]
pub struct JunctionViolation {
    /// Index of the interior breakpoint (1-based position in the breakpoint list).
    pub index: usize,
    pub derivative: usize,
    pub x: f64,
    pub left: f64,
    pub right: f64,
}

/// Polynomial pieces on a partition of `[a, b]`.
///
/// Piece `i` is stored in the local variable `t = x - x_i`, `x_i` its left
/// breakpoint, so that narrow pieces far from the origin stay well conditioned
/// in floating point. At an interior breakpoint the left piece is used.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePolynomial<T> {
    breakpoints: Vec<T>,
    pieces: Vec<Polynomial<T>>,
    smoothness: Smoothness,
}

impl<T: Scalar> PiecewisePolynomial<T> {
    /// Builds the function from pieces in the global variable and certifies
    /// the declared smoothness at every junction.
    pub fn new(breakpoints: Vec<T>, pieces: Vec<Polynomial<T>>, smoothness: Smoothness) -> Result<Self> {
        let local = localize(&breakpoints, pieces)?;
        Self::from_local(breakpoints, local, smoothness)
    }

    /// Global pieces; the smoothness class is the highest its junctions certify.
    pub fn from_pieces(breakpoints: Vec<T>, pieces: Vec<Polynomial<T>>) -> Result<Self> {
        let local = localize(&breakpoints, pieces)?;
        Self::from_local_pieces(breakpoints, local)
    }

    /// Like [`Self::new`] with pieces already in the local variables.
    pub fn from_local(breakpoints: Vec<T>, local: Vec<Polynomial<T>>, smoothness: Smoothness) -> Result<Self> {
        let p = Self::unchecked(breakpoints, local)?;
        if let Some(v) = p.junction_violation(smoothness) {
            return Err(Error::Parameter(format!(
                "derivative {} jumps at breakpoint {} (x = {}): {} vs {}",
                v.derivative, v.index, v.x, v.left, v.right
            )));
        }
        Ok(Self { smoothness, ..p })
    }

    pub fn from_local_pieces(breakpoints: Vec<T>, local: Vec<Polynomial<T>>) -> Result<Self> {
        let mut p = Self::unchecked(breakpoints, local)?;
        p.smoothness = [Smoothness::C2, Smoothness::C1, Smoothness::C0]
            .into_iter()
            .find(|&s| p.junction_violation(s).is_none())
            .unwrap_or(Smoothness::Discontinuous);
        Ok(p)
    }

    pub fn single(interval: &Interval<T>, p: Polynomial<T>) -> Self {
        Self {
            breakpoints: vec![interval.a().clone(), interval.b().clone()],
            pieces: vec![p.compose_affine(&T::one(), interval.a())],
            smoothness: Smoothness::C2,
        }
    }

    fn unchecked(breakpoints: Vec<T>, pieces: Vec<Polynomial<T>>) -> Result<Self> {
        check_partition(&breakpoints, pieces.len())?;
        Ok(Self {
            breakpoints,
            pieces,
            smoothness: Smoothness::Discontinuous,
        })
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    /// Pieces in their local variables `x - x_i`.
    pub fn local_pieces(&self) -> &[Polynomial<T>] {
        &self.pieces
    }

    /// Pieces in the global variable `x`. Exact for rationals; in floating
    /// point the expansion can lose most significant digits on narrow pieces.
    pub fn global_pieces(&self) -> Vec<Polynomial<T>> {
        self.pieces
            .iter()
            .zip(&self.breakpoints)
            .map(|(p, x0)| p.compose_affine(&T::one(), &-x0.clone()))
            .collect()
    }

    /// Global pieces with exact rational coefficients.
    pub fn exact_global_pieces(&self) -> Result<Vec<Polynomial<Rational>>> {
        Ok(self.to_rational()?.global_pieces())
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn interval(&self) -> Interval<T> {
        Interval::new(self.breakpoints[0].clone(), self.breakpoints.last().unwrap().clone())
            .expect("breakpoints are increasing")
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().filter_map(Polynomial::degree).max().unwrap_or(0)
    }

    /// Length of piece `i`.
    pub fn width(&self, i: usize) -> T {
        self.breakpoints[i + 1].clone() - self.breakpoints[i].clone()
    }

    /// First junction where a derivative up to the class order differs beyond tolerance.
    pub fn junction_violation(&self, smoothness: Smoothness) -> Option<JunctionViolation> {
        let order = smoothness.order()?;
        for i in 1..self.pieces.len() {
            let x = &self.breakpoints[i];
            let (tl, tr) = (self.width(i - 1), T::zero());
            let (mut l, mut r) = (self.pieces[i - 1].clone(), self.pieces[i].clone());
            for k in 0..=order {
                let (lv, rv) = (l.eval(&tl), r.eval(&tr));
                let scale = l.eval_magnitude(&tl) + r.eval_magnitude(&tr);
                if !certify_eq(&lv, &rv, &scale) {
                    return Some(JunctionViolation {
                        index: i,
                        derivative: k,
                        x: x.to_f64_lossy(),
                        left: lv.to_f64_lossy(),
                        right: rv.to_f64_lossy(),
                    });
                }
                l = l.derivative();
                r = r.derivative();
            }
        }
        None
    }

    /// Index of the piece used at `x` (left piece at interior breakpoints).
    pub fn piece_index(&self, x: &T) -> Result<usize> {
        self.interval().check_contains(x)?;
        Ok(self.breakpoints[1..]
            .iter()
            .position(|b| x <= b)
            .unwrap_or(self.pieces.len() - 1))
    }

    /// Piece `i` evaluated at `x`, whether or not `x` lies in its cell.
    pub fn eval_piece(&self, i: usize, x: &T) -> T {
        self.pieces[i].eval(&(x.clone() - self.breakpoints[i].clone()))
    }

    /// `(p, p', p'')` of piece `i` at `x`.
    pub fn eval_piece_derivatives(&self, i: usize, x: &T) -> (T, T, T) {
        let t = x.clone() - self.breakpoints[i].clone();
        let p = &self.pieces[i];
        let d1 = p.derivative();
        let d2 = d1.derivative();
        (p.eval(&t), d1.eval(&t), d2.eval(&t))
    }

    pub fn eval(&self, x: &T) -> Result<T> {
        Ok(self.eval_piece(self.piece_index(x)?, x))
    }

    /// `(p, p', p'')` at `x`.
    pub fn eval_derivatives(&self, x: &T) -> Result<(T, T, T)> {
        Ok(self.eval_piece_derivatives(self.piece_index(x)?, x))
    }

    pub fn derivative(&self) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(Polynomial::derivative).collect(),
            smoothness: self.smoothness.lowered(),
        }
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, c: &T) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p.scale(c)).collect(),
            smoothness: self.smoothness,
        }
    }

    /// `p + c`.
    pub fn add_constant(&self, c: &T) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p + &Polynomial::constant(c.clone())).collect(),
            smoothness: self.smoothness,
        }
    }

    /// Piece `i` mirrored: `t -> width - t`.
    fn mirrored(&self, i: usize) -> Polynomial<T> {
        self.pieces[i].compose_affine(&-T::one(), &self.width(i))
    }

    /// Even extension about the right endpoint `b`, onto `[a, 2b - a]`.
    pub fn reflect_about_right(&self) -> Result<Self> {
        let b = self.breakpoints.last().unwrap().clone();
        let two_b = b.clone() + b;
        let mut breakpoints = self.breakpoints.clone();
        breakpoints.extend(self.breakpoints.iter().rev().skip(1).map(|x| two_b.clone() - x.clone()));
        let mut pieces = self.pieces.clone();
        pieces.extend((0..self.pieces.len()).rev().map(|i| self.mirrored(i)));
        self.reflected(breakpoints, pieces)
    }

    /// Even extension about the left endpoint `a`, onto `[2a - b, b]`.
    pub fn reflect_about_left(&self) -> Result<Self> {
        let a = self.breakpoints[0].clone();
        let two_a = a.clone() + a;
        let mut breakpoints: Vec<T> = self
            .breakpoints
            .iter()
            .rev()
            .map(|x| two_a.clone() - x.clone())
            .collect();
        breakpoints.extend(self.breakpoints.iter().skip(1).cloned());
        let mut pieces: Vec<Polynomial<T>> = (0..self.pieces.len()).rev().map(|i| self.mirrored(i)).collect();
        pieces.extend(self.pieces.iter().cloned());
        self.reflected(breakpoints, pieces)
    }

    fn reflected(&self, breakpoints: Vec<T>, pieces: Vec<Polynomial<T>>) -> Result<Self> {
        let mut out = Self::from_local_pieces(breakpoints, pieces)?;
        out.smoothness = out.smoothness.min(self.smoothness);
        Ok(out)
    }

    /// The same function transported affinely onto `target`: `q(sigma(x)) = p(x)`.
    pub fn transport(&self, target: &Interval<T>) -> Result<Self> {
        let src = self.interval();
        let ratio = target.length() / src.length();
        let map = |x: &T| target.a().clone() + (x.clone() - src.a().clone()) * ratio.clone();
        let alpha = T::one() / ratio.clone();
        Ok(Self {
            breakpoints: self.breakpoints.iter().map(map).collect(),
            pieces: self.pieces.iter().map(|p| p.compose_affine(&alpha, &T::zero())).collect(),
            smoothness: self.smoothness,
        })
    }

    pub fn cast<U: Scalar>(&self) -> Result<PiecewisePolynomial<U>> {
        Ok(PiecewisePolynomial {
            breakpoints: self.breakpoints.iter().map(|b| b.cast()).collect::<Result<_>>()?,
            pieces: self.pieces.iter().map(Polynomial::cast).collect::<Result<_>>()?,
            smoothness: self.smoothness,
        })
    }

    pub fn to_rational(&self) -> Result<PiecewisePolynomial<Rational>> {
        self.cast()
    }
}

fn check_partition<T: Scalar>(breakpoints: &[T], pieces: usize) -> Result<()> {
    if breakpoints.len() < 2 || pieces + 1 != breakpoints.len() {
        return Err(Error::Parameter(format!(
            "{} breakpoints cannot carry {} pieces",
            breakpoints.len(),
            pieces
        )));
    }
    if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("breakpoints must be strictly increasing".into()));
    }
    Ok(())
}

fn localize<T: Scalar>(breakpoints: &[T], pieces: Vec<Polynomial<T>>) -> Result<Vec<Polynomial<T>>> {
    check_partition(breakpoints, pieces.len())?;
    Ok(pieces
        .iter()
        .zip(breakpoints)
        .map(|(p, x0)| p.compose_affine(&T::one(), x0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn hat() -> PiecewisePolynomial<Rational> {
        PiecewisePolynomial::from_pieces(
            vec![rational(0, 1), rational(1, 2), rational(1, 1)],
            vec![
                Polynomial::linear(rational(0, 1), rational(1, 1)),
                Polynomial::linear(rational(1, 1), rational(-1, 1)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn detects_smoothness_class() {
        let h = hat();
        assert_eq!(h.smoothness(), Smoothness::C0);
        let err = PiecewisePolynomial::new(h.breakpoints().to_vec(), h.global_pieces(), Smoothness::C1);
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn left_piece_at_breakpoints() {
        let h = hat();
        let (v, d1, _) = h.eval_derivatives(&rational(1, 2)).unwrap();
        assert_eq!(v, rational(1, 2));
        assert_eq!(d1, rational(1, 1));
        assert!(matches!(h.eval(&rational(3, 2)), Err(Error::Domain(_))));
    }

    #[test]
    fn reflection_is_even() {
        let p = PiecewisePolynomial::from_pieces(
            vec![rational(0, 1), rational(1, 1)],
            vec![Polynomial::new(vec![rational(0, 1), rational(2, 1), rational(-1, 1)])],
        )
        .unwrap();
        let r = p.reflect_about_right().unwrap();
        assert_eq!(r.interval(), Interval::new(rational(0, 1), rational(2, 1)).unwrap());
        assert_eq!(r.smoothness(), Smoothness::C2);
        for k in 0..=8 {
            let s = rational(k, 8);
            let right = rational(1, 1) + s.clone();
            let left = rational(1, 1) - s;
            assert_eq!(r.eval(&right).unwrap(), r.eval(&left).unwrap());
        }
        let l = p.reflect_about_left().unwrap();
        assert_eq!(l.eval(&rational(-1, 3)).unwrap(), p.eval(&rational(1, 3)).unwrap());
        // slope 2 at the left end: the reflection has a kink there
        assert_eq!(l.smoothness(), Smoothness::C0);
    }

    #[test]
    fn transport_preserves_values() {
        let h = hat();
        let target = Interval::new(rational(2, 1), rational(5, 1)).unwrap();
        let t = h.transport(&target).unwrap();
        assert_eq!(t.breakpoints(), &[rational(2, 1), rational(7, 2), rational(5, 1)]);
        assert_eq!(t.eval(&rational(11, 4)).unwrap(), h.eval(&rational(1, 4)).unwrap());
    }
}
