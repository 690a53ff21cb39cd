//! Weighted Hardy-Littlewood inequality `(∫w f'²)² <= ∫w f² · ∫w f''²` for
//! concave weights on a finite interval.
//!
//! Numeric code is generic over [`Scalar`]: `f32`, `f64` or the exact
//! [`Rational`]. The aliases below fix the common choices.

pub mod error;
pub mod exact;
pub mod funcspace;
pub mod kappa;
pub mod linalg;
pub mod poly;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod search;
pub mod smoothing;
pub mod witness;

pub use error::{Error, Result};
pub use exact::PiLaurent;
pub use funcspace::{BoundaryCondition, Interval, PiecewisePolynomial, TestFunction, WeightSpec};
pub use kappa::{compute_kappa, verify_theorem, KappaReport};
pub use scalar::{Rational, Real, Scalar};
pub use search::{assemble_forms, maximize_kappa, QuadraticForms, SearchResult};
pub use smoothing::{smooth_concave, SmoothingSchedule};
pub use witness::{build_witness, witness_study, WitnessResult};

pub type Weight = WeightSpec<f64>;
pub type ExactWeight = WeightSpec<Rational>;
pub type Function = TestFunction<f64>;
pub type ExactFunction = TestFunction<Rational>;
pub type Domain = Interval<f64>;
pub type ExactDomain = Interval<Rational>;
pub type Schedule = SmoothingSchedule<f64>;
pub type ExactSchedule = SmoothingSchedule<Rational>;
