use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::theorem::{make_equality_case, verify_theorem, EqualityCase};
use crate::error::{Error, Result};
use crate::funcspace::schema::{FunctionJson, WeightJson};
use crate::funcspace::{random_admissible_function, random_concave_weight, Interval, TestFunction, WeightSpec};
use crate::quadrature::QuadratureMode;
use crate::scalar::{rational, Rational, Scalar};

/// Where sweep instances come from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSource {
    /// Random concave piecewise-linear weights with random sine combinations.
    Random { max_pieces: usize, max_mode: u32 },
    /// Equality cases with `n` drawn from `1..=max_n`.
    EqualityCases { max_n: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenParams {
    pub source: FunctionSource,
    /// Slack passed to [`verify_theorem`].
    pub slack: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            source: FunctionSource::Random {
                max_pieces: 6,
                max_mode: 6,
            },
            slack: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepEntry {
    pub index: usize,
    pub kappa: f64,
    #[serde(rename = "I0")]
    pub i0: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    pub mid: f64,
    pub mode: QuadratureMode,
    pub passed: bool,
    pub chain_holds: bool,
    pub weight_hash: String,
    pub function_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub count: usize,
    pub max_kappa: f64,
    pub min_kappa: f64,
    /// Indices with `κ > 1 + slack`.
    pub failures: Vec<usize>,
    /// Indices where the two-step chain `I1 <= mid <= sqrt(I0 I2)` failed.
    pub chain_failures: Vec<usize>,
    /// The ten entries with `κ` closest to 1.
    pub closest_to_one: Vec<SweepEntry>,
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    /// CSV with columns `index,kappa,I0,I1,I2,weight_hash,function_hash`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Internal(e.to_string());
        w.write_record(["index", "kappa", "I0", "I1", "I2", "weight_hash", "function_hash"])
            .map_err(io)?;
        for e in &self.entries {
            w.write_record([
                e.index.to_string(),
                format!("{:.17e}", e.kappa),
                format!("{:.17e}", e.i0),
                format!("{:.17e}", e.i1),
                format!("{:.17e}", e.i2),
                e.weight_hash.clone(),
                e.function_hash.clone(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Per-index seed, independent of evaluation order.
fn derive_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn hash(json: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(json).unwrap_or_default();
    hex::encode(&Sha256::digest(&bytes)[..8])
}

/// Equality case with random concave node values on the `J_k` grid.
pub fn random_equality_case<T: Scalar>(seed: u64, iv: &Interval<T>, n: u32) -> Result<EqualityCase<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_us = n as usize;
    // Non-increasing slopes, then shifted so the minimum node value is a random offset >= 0.
    let mut slope = rational(rng.random_range(-200..=200), 100);
    let mut values = vec![rational(0, 1)];
    for _ in 0..n_us {
        let next = values.last().unwrap() + &slope;
        values.push(next);
        slope -= rational(rng.random_range(0..=100), 100);
    }
    let min = values.iter().min().unwrap().clone();
    let offset = rational(rng.random_range(0..=100), 100);
    let mut values: Vec<Rational> = values.into_iter().map(|v| v - &min + &offset).collect();
    if values.iter().all(|v| *v == rational(0, 1)) {
        values = vec![rational(1, 1); n_us + 1];
    }
    let lambda = loop {
        let l = rng.random_range(-1000..=1000);
        if l != 0 {
            break rational(l, 100);
        }
    };
    let values: Vec<T> = values.iter().map(|v| v.cast()).collect::<Result<_>>()?;
    make_equality_case(iv, n, lambda.cast()?, &values)
}

fn instance<T: Scalar>(
    seed: u64,
    index: usize,
    iv: &Interval<T>,
    params: &GenParams,
) -> Result<(WeightSpec<T>, TestFunction<T>)> {
    let s = derive_seed(seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    match params.source {
        FunctionSource::Random { max_pieces, max_mode } => {
            if max_pieces < 1 || max_mode < 1 {
                return Err(Error::Parameter("max_pieces and max_mode must be at least 1".into()));
            }
            let pieces = rng.random_range(1..=max_pieces);
            let modes = rng.random_range(1..=max_mode);
            let w = random_concave_weight(rng.random(), iv, pieces)?;
            let f = random_admissible_function(rng.random(), iv, modes)?;
            Ok((w, f))
        }
        FunctionSource::EqualityCases { max_n } => {
            if max_n < 1 {
                return Err(Error::Parameter("max_n must be at least 1".into()));
            }
            let n = rng.random_range(1..=max_n);
            let case = random_equality_case(rng.random(), iv, n)?;
            Ok((case.weight, case.function))
        }
    }
}

/// Runs [`verify_theorem`] on `count` generated pairs in parallel; entries are keyed by index.
pub fn sweep<T: Scalar>(seed: u64, count: usize, iv: &Interval<T>, params: &GenParams) -> Result<SweepReport> {
    if count < 1 {
        return Err(Error::Parameter("count must be at least 1".into()));
    }
    let entries: Vec<SweepEntry> = (0..count)
        .into_par_iter()
        .map(|index| {
            let (w, f) = instance(seed, index, iv, params)?;
            let v = verify_theorem(&w, &f, iv, params.slack)?;
            let r = v.report.to_f64();
            Ok(SweepEntry {
                index,
                kappa: r.kappa,
                i0: r.i0,
                i1: r.i1,
                i2: r.i2,
                mid: r.mid,
                mode: r.mode,
                passed: v.passed,
                chain_holds: v.chain.holds,
                weight_hash: hash(&WeightJson::from_spec(&w)?),
                function_hash: hash(&FunctionJson::from_spec(&f)?),
            })
        })
        .collect::<Result<_>>()?;
    let max_kappa = entries.iter().map(|e| e.kappa).fold(f64::NEG_INFINITY, f64::max);
    let min_kappa = entries.iter().map(|e| e.kappa).fold(f64::INFINITY, f64::min);
    let mut closest = entries.clone();
    closest.sort_by(|a, b| {
        (a.kappa - 1.0)
            .abs()
            .total_cmp(&(b.kappa - 1.0).abs())
            .then(a.index.cmp(&b.index))
    });
    closest.truncate(10);
    Ok(SweepReport {
        seed,
        count,
        max_kappa,
        min_kappa,
        failures: entries.iter().filter(|e| !e.passed).map(|e| e.index).collect(),
        chain_failures: entries.iter().filter(|e| !e.chain_holds).map(|e| e.index).collect(),
        closest_to_one: closest,
        entries,
    })
}
