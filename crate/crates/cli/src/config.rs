//! Run configuration: a strict JSON file merged with command-line flags.

use std::path::Path;

use concave_help::funcspace::schema::{FunctionJson, Number, ProblemJson, WeightJson};
use concave_help::scalar::parse_rational;
use concave_help::{Error, Rational};
use serde::{Deserialize, Serialize};

/// Every field is optional; unset numeric options take the subcommand's default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand this file was written for; checked when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[Number; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<Number>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    /// Smoothing levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    /// Mode number of an equality case.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Number>,
    /// Weight values on the equality grid; random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_values: Option<Vec<Number>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Grid of ε values for the ε-bound check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<Number>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    pub fn problem(&self) -> ProblemJson {
        ProblemJson {
            interval: self.interval.clone().unwrap_or_else(unit),
            weight: self.weight.clone(),
            function: self.function.clone(),
        }
    }
}

pub fn unit() -> [Number; 2] {
    [Number(Rational::from_integer(0.into())), Number(Rational::from_integer(1.into()))]
}

/// `"1/4,1/10,0.01"`.
pub fn parse_list(text: &str) -> Result<Vec<Number>, Error> {
    text.split(',')
        .map(|s| parse_rational(s.trim()).map(Number))
        .collect()
}
