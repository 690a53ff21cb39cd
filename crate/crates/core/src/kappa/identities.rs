use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::PiLaurent;
use crate::funcspace::{
    check_admissible, Admissibility, BoundaryCondition, Interval, PiecewisePolynomial, Smoothness, TestFunction,
    WeightBody, WeightSpec,
};
use crate::quadrature::{weighted_product_integral, Factor, ModeRequest, QuadratureResult, DEFAULT_TOL};
use crate::scalar::Scalar;

/// Both sides of an integral identity and their difference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `lhs - rhs` in closed form when every integral was exact.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_difference: Option<PiLaurent>,
}

fn require_dirichlet<T: Scalar>(f: &TestFunction<T>, iv: &Interval<T>) -> Result<()> {
    if f.bc() != BoundaryCondition::DirichletDirichlet {
        return Err(Error::Hypothesis("identity needs f(a) = f(b) = 0".into()));
    }
    match check_admissible(f, iv) {
        Admissibility::Pass { .. } => Ok(()),
        Admissibility::Fail(msg) => Err(Error::Hypothesis(msg)),
    }
}

fn combine<T: Scalar>(lhs: &[(f64, &QuadratureResult<T>)], rhs: &[(f64, &QuadratureResult<T>)]) -> IdentityResidual {
    let side = |terms: &[(f64, &QuadratureResult<T>)]| -> f64 {
        terms.iter().map(|(c, q)| c * q.value.to_f64_lossy()).sum()
    };
    let exact_side = |terms: &[(f64, &QuadratureResult<T>)]| -> Option<PiLaurent> {
        terms.iter().try_fold(PiLaurent::zero(), |acc, (c, q)| {
            let c = crate::scalar::Rational::from_float(*c)?;
            Some(acc.add(&q.exact.as_ref()?.scale(&c)))
        })
    };
    let (l, r) = (side(lhs), side(rhs));
    let exact_difference = match (exact_side(lhs), exact_side(rhs)) {
        (Some(a), Some(b)) => Some(a.sub(&b)),
        _ => None,
    };
    let residual = match &exact_difference {
        Some(d) => d.to_f64().abs(),
        None => (l - r).abs(),
    };
    IdentityResidual {
        lhs: l,
        rhs: r,
        residual,
        exact_difference,
    }
}

/// `|∫w'' f² - 2∫w (f f'' + f'²)|` for a weight with a continuous derivative.
pub fn parts_identity_residual<T: Scalar>(
    w: &WeightSpec<T>,
    f: &TestFunction<T>,
    iv: &Interval<T>,
) -> Result<IdentityResidual> {
    let curvature = match w.body() {
        WeightBody::Polynomial(p) => WeightSpec::polynomial(w.interval().clone(), p.nth_derivative(2))?,
        WeightBody::Constant(_) => WeightSpec::constant(w.interval().clone(), T::zero())?,
        WeightBody::Piecewise(p) if p.smoothness() >= Smoothness::C1 => {
            let d2 = p.nth_derivative(2);
            WeightSpec::piecewise(PiecewisePolynomial::from_local_pieces(d2.breakpoints().to_vec(), d2.local_pieces().to_vec())?)?
        }
        _ => {
            return Err(Error::Mode(
                "w'' is only a measure for this weight; use lemma4_residual".into(),
            ))
        }
    };
    require_dirichlet(f, iv)?;
    let int = |w: &WeightSpec<T>, u, v| weighted_product_integral(w, u, v, iv, DEFAULT_TOL, ModeRequest::Auto);
    let lhs = int(&curvature, Factor::value(f), Factor::value(f))?;
    let ff2 = int(w, Factor::value(f), Factor::second(f))?;
    let f1f1 = int(w, Factor::first(f), Factor::first(f))?;
    Ok(combine(&[(1.0, &lhs)], &[(2.0, &ff2), (2.0, &f1f1)]))
}

/// `|∫w f' + ∫w'_- f|` for `f(a) = f(b) = 0`, with `w'_-` the left slope.
pub fn lemma4_residual<T: Scalar>(w: &WeightSpec<T>, f: &TestFunction<T>, iv: &Interval<T>) -> Result<IdentityResidual> {
    require_dirichlet(f, iv)?;
    let slope = w.to_piecewise().derivative();
    let slope = WeightSpec::piecewise(PiecewisePolynomial::from_local_pieces(
        slope.breakpoints().to_vec(),
        slope.local_pieces().to_vec(),
    )?)?;
    let int = |w: &WeightSpec<T>, u| weighted_product_integral(w, u, Factor::One, iv, DEFAULT_TOL, ModeRequest::Auto);
    let lhs = int(w, Factor::first(f))?;
    let rhs = int(&slope, Factor::value(f))?;
    Ok(combine(&[(1.0, &lhs)], &[(-1.0, &rhs)]))
}

/// Outcome of [`epsilon_equivalence_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonCheck {
    /// `B² <= A C`.
    pub cauchy_holds: bool,
    /// `(ε, B <= εA + C/(4ε))` on the grid.
    pub grid: Vec<(f64, bool)>,
    /// `ε* = B/(2A)`; at this point the ε-bound holds exactly when `B² <= AC`.
    pub eps_star: f64,
    pub eps_star_holds: bool,
    /// The two formulations agree.
    pub consistent: bool,
}

/// Compares `B² <= AC` with `B <= εA + C/(4ε)` over a grid of `ε`.
///
/// `rel_slack` loosens both inequalities by the factor `1 + rel_slack`
/// (use 0 for exact scalars).
pub fn epsilon_equivalence_check<T: Scalar>(a: &T, b: &T, c: &T, eps_grid: &[T], rel_slack: f64) -> Result<EpsilonCheck> {
    let positive = |x: &T| *x > T::zero();
    if !(positive(a) && positive(b) && positive(c)) || !eps_grid.iter().all(positive) {
        return Err(Error::Parameter("A, B, C and every ε must be positive".into()));
    }
    let loosen = T::from_f64(1.0 + rel_slack).unwrap_or_else(T::one);
    let four = T::from_int(4);
    let bound = |eps: &T| (eps.clone() * a.clone() + c.clone() / (four.clone() * eps.clone())) * loosen.clone();
    let cauchy_holds = b.clone() * b.clone() <= a.clone() * c.clone() * loosen.clone();
    let grid: Vec<(f64, bool)> = eps_grid
        .iter()
        .map(|e| (e.to_f64_lossy(), *b <= bound(e)))
        .collect();
    let eps_star = b.clone() / (T::from_int(2) * a.clone());
    let eps_star_holds = *b <= bound(&eps_star);
    let grid_ok = !cauchy_holds || grid.iter().all(|(_, h)| *h);
    Ok(EpsilonCheck {
        cauchy_holds,
        grid,
        eps_star: eps_star.to_f64_lossy(),
        eps_star_holds,
        consistent: cauchy_holds == eps_star_holds && grid_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::SineCombination;
    use crate::poly::Polynomial;
    use crate::scalar::{rational, Rational};

    #[test]
    fn parts_identity_closed_form_instance() {
        let iv = Interval::<Rational>::unit();
        let w = WeightSpec::polynomial(iv.clone(), Polynomial::new(vec![rational(0, 1), rational(1, 1), rational(-1, 1)]))
            .unwrap();
        let f = TestFunction::sine(SineCombination::single(iv.clone(), rational(1, 1), 1).unwrap());
        let r = parts_identity_residual(&w, &f, &iv).unwrap();
        assert_eq!(r.exact_difference, Some(PiLaurent::zero()));
        assert!((r.lhs + 1.0).abs() < 1e-15 && (r.rhs + 1.0).abs() < 1e-12);
        let tent = WeightSpec::piecewise_linear(
            vec![rational(0, 1), rational(1, 2), rational(1, 1)],
            vec![rational(0, 1), rational(1, 2), rational(0, 1)],
        )
        .unwrap();
        assert!(matches!(parts_identity_residual(&tent, &f, &iv), Err(Error::Mode(_))));
    }

    #[test]
    fn lemma4_linear_weight() {
        let iv = Interval::<f64>::unit();
        let w = WeightSpec::polynomial(iv.clone(), Polynomial::linear(0.0, 1.0)).unwrap();
        let f = TestFunction::sine(SineCombination::single(iv.clone(), 1.0, 1).unwrap());
        let r = lemma4_residual(&w, &f, &iv).unwrap();
        let expected = -2.0 / std::f64::consts::PI;
        assert!((r.lhs - expected).abs() < 1e-12 && (r.rhs - expected).abs() < 1e-12);
        assert!(r.residual <= 1e-12);
    }

    #[test]
    fn epsilon_cases() {
        let one = rational(1, 1);
        let r = epsilon_equivalence_check(&one, &one, &one, &[rational(1, 4), rational(1, 2), one.clone()], 0.0).unwrap();
        assert!(r.cauchy_holds && r.eps_star_holds && r.consistent);
        assert_eq!(r.eps_star, 0.5);
        let r = epsilon_equivalence_check(&one, &rational(2, 1), &one, &[rational(1, 3)], 0.0).unwrap();
        assert!(!r.cauchy_holds && !r.eps_star_holds && r.consistent);
        assert_eq!(r.eps_star, 1.0);
        assert!(epsilon_equivalence_check(&one, &rational(0, 1), &one, &[one.clone()], 0.0).is_err());
    }
}
