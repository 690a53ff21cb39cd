//! JSON form of problems: an interval, a weight and a test function.
//!
//! ```json
//! {"interval": ["0", "1"],
//!  "weight":   {"kind": "polynomial", "coefficients": ["1", "-1"]},
//!  "function": {"kind": "half_sine", "terms": [{"coefficient": "1", "mode": 1}],
//!               "bc": "dirichlet_neumann"}}
//! ```
//!
//! Numbers may be JSON numbers or strings (`"p/q"`, integers, decimals);
//! decimals are read exactly (`0.1` is `1/10`). Output always uses strings.

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use super::{
    BoundaryCondition, FunctionBody, Interval, PiecewisePolynomial, SineCombination, SineTerm, Smoothness,
    TestFunction, WeightBody, WeightSpec,
};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

/// An exact number in JSON.
#[derive(Clone, Debug, PartialEq)]
pub struct Number(pub Rational);

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Num(serde_json::Number),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(s) => s,
            Raw::Num(n) => n.to_string(),
        };
        parse_rational(&text).map(Number).map_err(de::Error::custom)
    }
}

impl Number {
    pub fn from_scalar<T: Scalar>(x: &T) -> Result<Self> {
        Ok(Self(x.cast()?))
    }

    pub fn get<T: Scalar>(&self) -> T {
        T::from_rational(&self.0)
    }
}

fn nums<T: Scalar>(xs: &[T]) -> Result<Vec<Number>> {
    xs.iter().map(Number::from_scalar).collect()
}

fn vals<T: Scalar>(xs: &[Number]) -> Vec<T> {
    xs.iter().map(Number::get).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightJson {
    Constant { value: Number },
    Polynomial { coefficients: Vec<Number> },
    PiecewiseLinear { nodes: Vec<Number>, values: Vec<Number> },
    Sampled { nodes: Vec<Number>, values: Vec<Number> },
    PiecewisePolynomial { breakpoints: Vec<Number>, pieces: Vec<Vec<Number>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub coefficient: Number,
    pub mode: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionJson {
    Sine {
        terms: Vec<TermJson>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bc: Option<BoundaryCondition>,
    },
    HalfSine {
        terms: Vec<TermJson>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bc: Option<BoundaryCondition>,
    },
    PiecewisePolynomial {
        breakpoints: Vec<Number>,
        pieces: Vec<Vec<Number>>,
        bc: BoundaryCondition,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        smoothness: Option<Smoothness>,
    },
}

/// A full problem description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemJson {
    pub interval: [Number; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionJson>,
}

impl ProblemJson {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn interval<T: Scalar>(&self) -> Result<Interval<T>> {
        Interval::new(self.interval[0].get(), self.interval[1].get())
    }

    pub fn weight<T: Scalar>(&self) -> Result<WeightSpec<T>> {
        let w = self
            .weight
            .as_ref()
            .ok_or_else(|| Error::Schema("missing field `weight`".into()))?;
        w.to_spec(&self.interval()?)
    }

    pub fn function<T: Scalar>(&self) -> Result<TestFunction<T>> {
        let f = self
            .function
            .as_ref()
            .ok_or_else(|| Error::Schema("missing field `function`".into()))?;
        f.to_spec(&self.interval()?)
    }

    pub fn from_specs<T: Scalar>(
        interval: &Interval<T>,
        weight: Option<&WeightSpec<T>>,
        function: Option<&TestFunction<T>>,
    ) -> Result<Self> {
        Ok(Self {
            interval: [Number::from_scalar(interval.a())?, Number::from_scalar(interval.b())?],
            weight: weight.map(WeightJson::from_spec).transpose()?,
            function: function.map(FunctionJson::from_spec).transpose()?,
        })
    }
}

fn pieces_to_polys<T: Scalar>(pieces: &[Vec<Number>]) -> Vec<Polynomial<T>> {
    pieces.iter().map(|c| Polynomial::new(vals(c))).collect()
}

fn polys_to_pieces<T: Scalar>(pieces: &[Polynomial<T>]) -> Result<Vec<Vec<Number>>> {
    pieces.iter().map(|p| nums(p.coeffs())).collect()
}

impl WeightJson {
    pub fn to_spec<T: Scalar>(&self, iv: &Interval<T>) -> Result<WeightSpec<T>> {
        let body = match self {
            Self::Constant { value } => WeightBody::Constant(value.get()),
            Self::Polynomial { coefficients } => WeightBody::Polynomial(Polynomial::new(vals(coefficients))),
            Self::PiecewiseLinear { nodes, values } => WeightBody::PiecewiseLinear {
                nodes: vals(nodes),
                values: vals(values),
            },
            Self::Sampled { nodes, values } => WeightBody::Sampled {
                nodes: vals(nodes),
                values: vals(values),
            },
            Self::PiecewisePolynomial { breakpoints, pieces } => WeightBody::Piecewise(
                PiecewisePolynomial::from_pieces(vals(breakpoints), pieces_to_polys(pieces))?,
            ),
        };
        WeightSpec::new(iv.clone(), body)
    }

    pub fn from_spec<T: Scalar>(w: &WeightSpec<T>) -> Result<Self> {
        Ok(match w.body() {
            WeightBody::Constant(c) => Self::Constant {
                value: Number::from_scalar(c)?,
            },
            WeightBody::Polynomial(p) => Self::Polynomial {
                coefficients: nums(p.coeffs())?,
            },
            WeightBody::PiecewiseLinear { nodes, values } => Self::PiecewiseLinear {
                nodes: nums(nodes)?,
                values: nums(values)?,
            },
            WeightBody::Sampled { nodes, values } => Self::Sampled {
                nodes: nums(nodes)?,
                values: nums(values)?,
            },
            WeightBody::Piecewise(p) => Self::PiecewisePolynomial {
                breakpoints: nums(p.breakpoints())?,
                pieces: polys_to_pieces(&p.exact_global_pieces()?)?,
            },
        })
    }
}

fn terms_of<T: Scalar>(terms: &[TermJson]) -> Vec<SineTerm<T>> {
    terms
        .iter()
        .map(|t| SineTerm {
            coefficient: t.coefficient.get(),
            mode: t.mode,
        })
        .collect()
}

fn terms_json<T: Scalar>(s: &SineCombination<T>) -> Result<Vec<TermJson>> {
    s.terms()
        .iter()
        .map(|t| {
            Ok(TermJson {
                coefficient: Number::from_scalar(&t.coefficient)?,
                mode: t.mode,
            })
        })
        .collect()
}

impl FunctionJson {
    pub fn to_spec<T: Scalar>(&self, iv: &Interval<T>) -> Result<TestFunction<T>> {
        Ok(match self {
            Self::Sine { terms, bc } => TestFunction::new(
                FunctionBody::Sine(SineCombination::new(iv.clone(), terms_of(terms))?),
                bc.unwrap_or(BoundaryCondition::DirichletDirichlet),
            ),
            Self::HalfSine { terms, bc } => TestFunction::new(
                FunctionBody::HalfSine(SineCombination::new(iv.clone(), terms_of(terms))?),
                bc.unwrap_or(BoundaryCondition::DirichletNeumann),
            ),
            Self::PiecewisePolynomial {
                breakpoints,
                pieces,
                bc,
                smoothness,
            } => {
                let (b, p) = (vals(breakpoints), pieces_to_polys(pieces));
                let pp = match smoothness {
                    Some(s) => PiecewisePolynomial::new(b, p, *s)?,
                    None => PiecewisePolynomial::from_pieces(b, p)?,
                };
                if !pp.interval().matches(iv) {
                    return Err(Error::Schema("function breakpoints must span the interval".into()));
                }
                TestFunction::piecewise(pp, *bc)
            }
        })
    }

    pub fn from_spec<T: Scalar>(f: &TestFunction<T>) -> Result<Self> {
        Ok(match f.body() {
            FunctionBody::Sine(s) => Self::Sine {
                terms: terms_json(s)?,
                bc: Some(f.bc()),
            },
            FunctionBody::HalfSine(s) => Self::HalfSine {
                terms: terms_json(s)?,
                bc: Some(f.bc()),
            },
            FunctionBody::Piecewise(p) => Self::PiecewisePolynomial {
                breakpoints: nums(p.breakpoints())?,
                pieces: polys_to_pieces(&p.exact_global_pieces()?)?,
                bc: f.bc(),
                smoothness: Some(p.smoothness()),
            },
        })
    }
}
