//! Weights, test functions, admissibility and concavity certification.

mod function;
mod generate;
mod piecewise;
pub mod schema;
mod weight;

pub use function::{
    check_admissible, eval_derivatives, Admissibility, Derivative, FunctionBody, SineCombination, SineTerm,
    TestFunction,
};
pub use generate::{
    random_admissible_function, random_concave_polynomial_weight, random_concave_weight,
    random_concave_weight_with, random_half_sine_function, random_monotone_concave_weight, Offset,
};
pub use piecewise::{JunctionViolation, PiecewisePolynomial, Smoothness};
pub use weight::{
    check_concave, check_monotone, Concavity, ConcavityReport, Monotonicity, Nonnegativity,
    NotConcave, WeightBody, WeightSpec,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Closed interval `[a, b]` with `a < b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval<T> {
    a: T,
    b: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if a < b {
            Ok(Self { a, b })
        } else {
            Err(Error::Parameter(format!("interval requires a < b, got [{a}, {b}]")))
        }
    }

    pub fn unit() -> Self {
        Self {
            a: T::zero(),
            b: T::one(),
        }
    }

    pub fn a(&self) -> &T {
        &self.a
    }

    pub fn b(&self) -> &T {
        &self.b
    }

    pub fn length(&self) -> T {
        self.b.clone() - self.a.clone()
    }

    pub fn contains(&self, x: &T) -> bool {
        *x >= self.a && *x <= self.b
    }

    /// `2b - a`: right end of the interval reflected about `b`.
    pub fn reflected_right(&self) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone() + self.b.clone() - self.a.clone(),
        }
    }

    /// `[2a - b, b]`.
    pub fn reflected_left(&self) -> Self {
        Self {
            a: self.a.clone() + self.a.clone() - self.b.clone(),
            b: self.b.clone(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Result<Interval<U>> {
        Interval::new(self.a.cast()?, self.b.cast()?)
    }

    /// Endpoint-wise equality up to the scalar's certification tolerance.
    pub fn matches(&self, other: &Self) -> bool {
        let scale = self.b.abs() + self.a.abs();
        crate::scalar::certify_eq(&self.a, &other.a, &scale) && crate::scalar::certify_eq(&self.b, &other.b, &scale)
    }

    pub(crate) fn check_contains(&self, x: &T) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!("x = {x} outside [{}, {}]", self.a, self.b)))
        }
    }
}

/// Boundary conditions imposed on a test function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// `f(a) = f(b) = 0`
    DirichletDirichlet,
    /// `f(a) = f'(b) = 0`
    DirichletNeumann,
    /// `f'(a) = f(b) = 0`
    NeumannDirichlet,
}

impl BoundaryCondition {
    /// `(derivative order at a, derivative order at b)` that must vanish.
    pub fn orders(self) -> (usize, usize) {
        match self {
            Self::DirichletDirichlet => (0, 0),
            Self::DirichletNeumann => (0, 1),
            Self::NeumannDirichlet => (1, 0),
        }
    }
}
