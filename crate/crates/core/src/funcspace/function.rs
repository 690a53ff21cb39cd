use super::{BoundaryCondition, Interval, PiecewisePolynomial, Smoothness};
use crate::error::{Error, Result};
use crate::scalar::{certify_eq, Rational, Real, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct SineTerm<T> {
    pub coefficient: T,
    /// Mode index, at least 1.
    pub mode: u32,
}

/// `sum lambda_n sin(rho_n pi (x - a) / (b - a))` with `rho_n = n` (full modes)
/// or `rho_n = (2n - 1) / 2` (half modes, vanishing slope at `b`).
#[derive(Clone, Debug, PartialEq)]
pub struct SineCombination<T> {
    interval: Interval<T>,
    terms: Vec<SineTerm<T>>,
}

impl<T: Scalar> SineCombination<T> {
    pub fn new(interval: Interval<T>, terms: Vec<SineTerm<T>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Parameter("sine combination needs at least one term".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.mode == 0) {
            return Err(Error::Parameter(format!("sine mode must be >= 1, got {}", t.mode)));
        }
        Ok(Self { interval, terms })
    }

    pub fn single(interval: Interval<T>, coefficient: T, mode: u32) -> Result<Self> {
        Self::new(interval, vec![SineTerm { coefficient, mode }])
    }

    pub fn interval(&self) -> &Interval<T> {
        &self.interval
    }

    pub fn terms(&self) -> &[SineTerm<T>] {
        &self.terms
    }

    pub fn cast<U: Scalar>(&self) -> Result<SineCombination<U>> {
        Ok(SineCombination {
            interval: self.interval.cast()?,
            terms: self
                .terms
                .iter()
                .map(|t| {
                    Ok(SineTerm {
                        coefficient: t.coefficient.cast()?,
                        mode: t.mode,
                    })
                })
                .collect::<Result<_>>()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionBody<T> {
    Sine(SineCombination<T>),
    /// Quarter-wave modes `sin((2n - 1) pi (x - a) / (2 (b - a)))`.
    HalfSine(SineCombination<T>),
    Piecewise(PiecewisePolynomial<T>),
}

/// Which derivative of a test function an integrand uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Derivative {
    Value,
    First,
    Second,
}

impl Derivative {
    pub fn order(self) -> usize {
        match self {
            Self::Value => 0,
            Self::First => 1,
            Self::Second => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction<T> {
    body: FunctionBody<T>,
    bc: BoundaryCondition,
}

impl<T: Scalar> TestFunction<T> {
    pub fn new(body: FunctionBody<T>, bc: BoundaryCondition) -> Self {
        Self { body, bc }
    }

    /// Dirichlet-Dirichlet sine combination.
    pub fn sine(s: SineCombination<T>) -> Self {
        Self::new(FunctionBody::Sine(s), BoundaryCondition::DirichletDirichlet)
    }

    /// Dirichlet-Neumann quarter-wave combination.
    pub fn half_sine(s: SineCombination<T>) -> Self {
        Self::new(FunctionBody::HalfSine(s), BoundaryCondition::DirichletNeumann)
    }

    pub fn piecewise(p: PiecewisePolynomial<T>, bc: BoundaryCondition) -> Self {
        Self::new(FunctionBody::Piecewise(p), bc)
    }

    pub fn body(&self) -> &FunctionBody<T> {
        &self.body
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn interval(&self) -> Interval<T> {
        match &self.body {
            FunctionBody::Sine(s) | FunctionBody::HalfSine(s) => s.interval.clone(),
            FunctionBody::Piecewise(p) => p.interval(),
        }
    }

    /// Interior breakpoints where the function is only piecewise smooth.
    pub fn breakpoints(&self) -> Vec<T> {
        match &self.body {
            FunctionBody::Piecewise(p) => p.breakpoints().to_vec(),
            _ => {
                let iv = self.interval();
                vec![iv.a().clone(), iv.b().clone()]
            }
        }
    }

    /// Frequency multiplier `rho` of a mode, as an exact rational.
    pub fn frequency(&self, mode: u32) -> Option<Rational> {
        match &self.body {
            FunctionBody::Sine(_) => Some(Rational::from_integer(mode.into())),
            FunctionBody::HalfSine(_) => Some(Rational::new((2 * mode - 1).into(), 2.into())),
            FunctionBody::Piecewise(_) => None,
        }
    }

    /// `lambda f`.
    pub fn scale(&self, lambda: &T) -> Self {
        let body = match &self.body {
            FunctionBody::Sine(s) | FunctionBody::HalfSine(s) => {
                let s = SineCombination {
                    interval: s.interval.clone(),
                    terms: s
                        .terms
                        .iter()
                        .map(|t| SineTerm {
                            coefficient: t.coefficient.clone() * lambda.clone(),
                            mode: t.mode,
                        })
                        .collect(),
                };
                if matches!(self.body, FunctionBody::Sine(_)) {
                    FunctionBody::Sine(s)
                } else {
                    FunctionBody::HalfSine(s)
                }
            }
            FunctionBody::Piecewise(p) => FunctionBody::Piecewise(p.scale(lambda)),
        };
        Self { body, bc: self.bc }
    }

    /// The function composed with the affine map sending `target` back to its own interval.
    pub fn transport(&self, target: &Interval<T>) -> Result<Self> {
        let body = match &self.body {
            FunctionBody::Sine(s) => FunctionBody::Sine(SineCombination {
                interval: target.clone(),
                terms: s.terms.clone(),
            }),
            FunctionBody::HalfSine(s) => FunctionBody::HalfSine(SineCombination {
                interval: target.clone(),
                terms: s.terms.clone(),
            }),
            FunctionBody::Piecewise(p) => FunctionBody::Piecewise(p.transport(target)?),
        };
        Ok(Self { body, bc: self.bc })
    }

    pub fn cast<U: Scalar>(&self) -> Result<TestFunction<U>> {
        let body = match &self.body {
            FunctionBody::Sine(s) => FunctionBody::Sine(s.cast()?),
            FunctionBody::HalfSine(s) => FunctionBody::HalfSine(s.cast()?),
            FunctionBody::Piecewise(p) => FunctionBody::Piecewise(p.cast()?),
        };
        Ok(TestFunction { body, bc: self.bc })
    }

    /// Symbolic values of `f` and `f'` at both ends, each divided by a nonzero
    /// constant (`pi / (b - a)` for derivatives of sine bodies).
    fn boundary_data(&self) -> [[T; 2]; 2] {
        match &self.body {
            FunctionBody::Sine(s) => {
                let mut d_a = T::zero();
                let mut d_b = T::zero();
                for t in &s.terms {
                    let n = T::from_int(t.mode as i64);
                    d_a = d_a + t.coefficient.clone() * n.clone();
                    let sign = if t.mode % 2 == 0 { T::one() } else { -T::one() };
                    d_b = d_b + t.coefficient.clone() * n * sign;
                }
                [[T::zero(), T::zero()], [d_a, d_b]]
            }
            FunctionBody::HalfSine(s) => {
                let mut v_b = T::zero();
                let mut d_a = T::zero();
                for t in &s.terms {
                    let sign = if t.mode % 2 == 1 { T::one() } else { -T::one() };
                    v_b = v_b + t.coefficient.clone() * sign;
                    d_a = d_a + t.coefficient.clone() * T::ratio(2 * t.mode as i64 - 1, 2);
                }
                [[T::zero(), v_b], [d_a, T::zero()]]
            }
            FunctionBody::Piecewise(p) => {
                let n = p.len() - 1;
                let (a, b) = (&p.breakpoints()[0], p.breakpoints().last().unwrap());
                let (va, da, _) = p.eval_piece_derivatives(0, a);
                let (vb, db, _) = p.eval_piece_derivatives(n, b);
                [[va, vb], [da, db]]
            }
        }
    }

    fn boundary_scale(&self) -> T {
        match &self.body {
            FunctionBody::Piecewise(p) => {
                let first = &p.local_pieces()[0];
                let last = p.local_pieces().last().unwrap();
                let (t0, t1) = (T::zero(), p.width(p.len() - 1));
                first.eval_magnitude(&t0)
                    + last.eval_magnitude(&t1)
                    + first.derivative().eval_magnitude(&t0)
                    + last.derivative().eval_magnitude(&t1)
            }
            FunctionBody::Sine(s) | FunctionBody::HalfSine(s) => s
                .terms
                .iter()
                .fold(T::zero(), |acc, t| acc + t.coefficient.abs() * T::from_int(t.mode as i64)),
        }
    }
}

/// `(sin(πt), cos(πt))`, exact at integers and half-integers.
fn sin_cos_pi<T: Real>(t: T) -> (T, T) {
    let two = T::from_int(2);
    let half = T::one() / two;
    let r = t - two * (t / two).round();
    let pi = T::PI();
    if r == half {
        (T::one(), T::zero())
    } else if r == -half {
        (-T::one(), T::zero())
    } else if r > half {
        let (s, c) = (pi * (T::one() - r)).sin_cos();
        (s, -c)
    } else if r < -half {
        let (s, c) = (pi * (T::one() + r)).sin_cos();
        (-s, -c)
    } else {
        (pi * r).sin_cos()
    }
}

/// `(f(x), f'(x), f''(x))`; left-piece values at interior breakpoints of piecewise bodies.
pub fn eval_derivatives<T: Real>(f: &TestFunction<T>, x: T) -> Result<(T, T, T)> {
    let iv = f.interval();
    iv.check_contains(&x)?;
    match &f.body {
        FunctionBody::Piecewise(p) => p.eval_derivatives(&x),
        FunctionBody::Sine(s) | FunctionBody::HalfSine(s) => {
            let half = matches!(f.body, FunctionBody::HalfSine(_));
            let scale = T::PI() / iv.length();
            let s_rel = (x - *iv.a()) / iv.length();
            let (mut v, mut d1, mut d2) = (T::zero(), T::zero(), T::zero());
            for t in &s.terms {
                let rho = if half {
                    T::from_int(2 * t.mode as i64 - 1) / T::from_int(2)
                } else {
                    T::from_int(t.mode as i64)
                };
                let k = rho * scale;
                let (sin, cos) = sin_cos_pi(rho * s_rel);
                v = v + t.coefficient * sin;
                d1 = d1 + t.coefficient * k * cos;
                d2 = d2 - t.coefficient * k * k * sin;
            }
            Ok((v, d1, d2))
        }
    }
}

/// Outcome of [`check_admissible`].
#[derive(Clone, Debug, PartialEq)]
pub enum Admissibility<T> {
    /// Boundary conditions hold; `junctions` lists interior breakpoints certified C2.
    Pass { junctions: Vec<T> },
    Fail(String),
}

impl<T> Admissibility<T> {
    pub fn passed(&self) -> bool {
        matches!(self, Self::Pass { .. })
    }
}

/// Checks the declared boundary conditions and, for piecewise bodies, C2 junctions.
pub fn check_admissible<T: Scalar>(f: &TestFunction<T>, iv: &Interval<T>) -> Admissibility<T> {
    let own = f.interval();
    if !own.matches(iv) {
        return Admissibility::Fail(format!(
            "function lives on [{}, {}], not on [{}, {}]",
            own.a(),
            own.b(),
            iv.a(),
            iv.b()
        ));
    }
    let data = f.boundary_data();
    let scale = f.boundary_scale();
    let (oa, ob) = f.bc.orders();
    let names = ["f", "f'"];
    for (order, end, name) in [(oa, 0, iv.a()), (ob, 1, iv.b())] {
        let v = &data[order][end];
        if !certify_eq(v, &T::zero(), &scale) {
            return Admissibility::Fail(format!("{}({}) = {} is not zero", names[order], name, v));
        }
    }
    match &f.body {
        FunctionBody::Piecewise(p) => match p.junction_violation(Smoothness::C2) {
            Some(v) => Admissibility::Fail(format!(
                "derivative {} jumps at x = {}: {} vs {}",
                v.derivative, v.x, v.left, v.right
            )),
            None => Admissibility::Pass {
                junctions: p.breakpoints()[1..p.breakpoints().len() - 1].to_vec(),
            },
        },
        _ => Admissibility::Pass { junctions: Vec::new() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::scalar::rational;
    use std::f64::consts::PI;

    #[test]
    fn sine_endpoints_are_exact() {
        let iv = Interval::new(0.3, 2.1).unwrap();
        for mode in 1..=9 {
            let f = TestFunction::sine(SineCombination::single(iv.clone(), 1.7, mode).unwrap());
            assert_eq!(eval_derivatives(&f, 0.3).unwrap().0, 0.0);
            assert_eq!(eval_derivatives(&f, 2.1).unwrap().0, 0.0);
            let g = TestFunction::half_sine(SineCombination::single(iv.clone(), 1.7, mode).unwrap());
            assert_eq!(eval_derivatives(&g, 2.1).unwrap().1, 0.0);
        }
        let (s, c) = sin_cos_pi(0.25f64);
        assert!((s - 0.5f64.sqrt()).abs() < 1e-15 && (c - 0.5f64.sqrt()).abs() < 1e-15);
        let (s, c) = sin_cos_pi(-3.7f64);
        assert!((s - (-3.7 * PI).sin()).abs() < 1e-14 && (c - (-3.7 * PI).cos()).abs() < 1e-14);
    }

    fn sine(mode: u32) -> TestFunction<f64> {
        TestFunction::sine(SineCombination::single(Interval::unit(), 1.0, mode).unwrap())
    }

    #[test]
    fn first_sine_mode_values() {
        let (v, d1, d2) = eval_derivatives(&sine(1), 0.5).unwrap();
        assert!((v - 1.0).abs() < 1e-15 && d1.abs() < 1e-15 && (d2 + PI * PI).abs() < 1e-12);
        assert_eq!(eval_derivatives(&sine(1), 0.0).unwrap(), (0.0, PI, 0.0));
        assert!(matches!(eval_derivatives(&sine(1), 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn admissibility_of_sines_and_identity() {
        assert!(check_admissible(&sine(2), &Interval::unit()).passed());
        let x = TestFunction::piecewise(
            PiecewisePolynomial::single(&Interval::unit(), Polynomial::linear(rational(0, 1), rational(1, 1))),
            BoundaryCondition::DirichletDirichlet,
        );
        match check_admissible(&x, &Interval::unit()) {
            Admissibility::Fail(msg) => assert!(msg.contains("f(1)"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn boundary_conditions_of_half_sines() {
        let iv = Interval::<Rational>::unit();
        let s = SineCombination::new(
            iv.clone(),
            vec![
                SineTerm {
                    coefficient: rational(1, 1),
                    mode: 1,
                },
                SineTerm {
                    coefficient: rational(-2, 3),
                    mode: 2,
                },
            ],
        )
        .unwrap();
        assert!(check_admissible(&TestFunction::half_sine(s.clone()), &iv).passed());
        // declared Dirichlet at b, but f(1) = 1 + 2/3
        let wrong = TestFunction::new(FunctionBody::HalfSine(s), BoundaryCondition::DirichletDirichlet);
        assert!(!check_admissible(&wrong, &iv).passed());
    }

    #[test]
    fn wrong_interval_fails() {
        let iv = Interval::new(0.0, 2.0).unwrap();
        assert!(!check_admissible(&sine(1), &iv).passed());
    }
}
