use concave_help::funcspace::schema::Number;
use concave_help::kappa::{
    compute_kappa_with, epsilon_equivalence_check, lemma4_residual, make_equality_case, parts_identity_residual,
    random_equality_case, sweep, verify_corollary, verify_theorem_with, GenParams, KappaOptions, TheoremVerdict,
};
use concave_help::quadrature::{ModeRequest, DEFAULT_TOL};
use concave_help::search::{gradient_check, maximize_multistart, SearchOptions};
use concave_help::smoothing::smoothing_convergence;
use concave_help::witness::{default_deltas, monotonicity_closed_form, monotonicity_example, write_csv};
use concave_help::{assemble_forms, witness_study, Error, Rational, Result, Scalar, SmoothingSchedule};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{parse_list, unit, RunConfig};
use crate::{Format, Overrides};

pub struct Outcome {
    pub text: String,
    pub passed: bool,
    pub failure: Option<String>,
}

/// What a subcommand produced before formatting.
struct Produced {
    result: Value,
    csv: Option<String>,
    failure: Option<String>,
}

impl Produced {
    fn json(result: Value) -> Self {
        Self {
            result,
            csv: None,
            failure: None,
        }
    }

    fn failing_if(mut self, bad: bool, why: impl FnOnce() -> String) -> Self {
        if bad {
            self.failure = Some(why());
        }
        self
    }
}

fn to_value(x: &impl Serialize) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Internal(e.to_string()))
}

fn csv_text(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
}

pub fn run(name: &str, mut cfg: RunConfig, o: &Overrides, format: Format) -> Result<Outcome> {
    cfg.command = Some(name.to_string());
    cfg.interval.get_or_insert_with(unit);
    if o.exact {
        cfg.exact = Some(true);
    }
    let exact = cfg.exact.unwrap_or(false);
    let produced = match name {
        "kappa" => {
            let tol = *cfg.tol.insert(o.tol.or(cfg.tol).unwrap_or(DEFAULT_TOL));
            cfg.exact = Some(exact);
            if exact {
                kappa::<Rational>(&cfg, tol, ModeRequest::Exact)?
            } else {
                kappa::<f64>(&cfg, tol, ModeRequest::Auto)?
            }
        }
        "verify" => {
            let seed = *cfg.seed.insert(o.seed.or(cfg.seed).unwrap_or(42));
            let count = *cfg.count.insert(o.count.or(cfg.count).unwrap_or(1000));
            let tol = *cfg.tol.insert(o.tol.or(cfg.tol).unwrap_or(1e-9));
            cfg.exact = Some(exact);
            if exact {
                verify::<Rational>(&cfg, seed, count, tol)?
            } else {
                verify::<f64>(&cfg, seed, count, tol)?
            }
        }
        "equality" => {
            let tol = *cfg.tol.insert(o.tol.or(cfg.tol).unwrap_or(1e-9));
            let n = *cfg.n.get_or_insert(1);
            if cfg.node_values.is_none() {
                cfg.seed = Some(o.seed.or(cfg.seed).unwrap_or(0));
            } else {
                cfg.lambda.get_or_insert_with(|| Number(Rational::from_integer(1.into())));
            }
            cfg.exact = Some(exact);
            if exact {
                equality::<Rational>(&cfg, n, tol)?
            } else {
                equality::<f64>(&cfg, n, tol)?
            }
        }
        "reflect" => {
            let tol = *cfg.tol.insert(o.tol.or(cfg.tol).unwrap_or(1e-9));
            cfg.exact = Some(exact);
            if exact {
                reflect::<Rational>(&cfg, tol)?
            } else {
                reflect::<f64>(&cfg, tol)?
            }
        }
        "witness" => {
            let deltas = match &o.deltas {
                Some(text) => parse_list(text)?,
                None => cfg
                    .deltas
                    .clone()
                    .unwrap_or_else(|| default_deltas().into_iter().map(Number).collect()),
            };
            cfg.deltas = Some(deltas.clone());
            witness(&deltas.into_iter().map(|d| d.0).collect::<Vec<_>>())?
        }
        "monotonicity" => monotonicity()?,
        "smooth" => {
            let levels = *cfg.levels.insert(o.levels.or(cfg.levels).unwrap_or(6));
            cfg.exact = Some(exact);
            if exact {
                smooth::<Rational>(&cfg, levels)?
            } else {
                smooth::<f64>(&cfg, levels)?
            }
        }
        "search" => {
            let seed = *cfg.seed.insert(o.seed.or(cfg.seed).unwrap_or(0));
            let count = *cfg.count.insert(o.count.or(cfg.count).unwrap_or(1));
            let m = *cfg.basis_size.insert(o.basis_size.or(cfg.basis_size).unwrap_or(24));
            let defaults = SearchOptions::default();
            let opts = SearchOptions {
                grad_tol: *cfg.tol.insert(o.tol.or(cfg.tol).unwrap_or(defaults.grad_tol)),
                max_iter: *cfg.max_iter.get_or_insert(defaults.max_iter),
                ..defaults
            };
            search(&cfg, seed, count, m, &opts)?
        }
        "identities" => {
            let tol = *cfg.tol.insert(o.tol.or(cfg.tol).unwrap_or(1e-9));
            cfg.exact = Some(exact);
            if exact {
                identities::<Rational>(&cfg, tol)?
            } else {
                identities::<f64>(&cfg, tol)?
            }
        }
        other => return Err(Error::Parameter(format!("unknown subcommand `{other}`"))),
    };
    let passed = produced.failure.is_none();
    let text = match format {
        Format::Json => {
            let report = json!({
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "command": name,
                "config": to_value(&cfg)?,
                "passed": passed,
                "result": produced.result,
            });
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => produced
            .csv
            .ok_or_else(|| Error::Parameter(format!("csv output is not available for `{name}`")))?,
    };
    Ok(Outcome {
        text,
        passed,
        failure: produced.failure,
    })
}

fn kappa<T: Scalar>(cfg: &RunConfig, tol: f64, mode: ModeRequest) -> Result<Produced> {
    let p = cfg.problem();
    let (iv, w, f) = (p.interval::<T>()?, p.weight::<T>()?, p.function::<T>()?);
    let report = compute_kappa_with(&w, &f, &iv, KappaOptions { tol, mode })?;
    Ok(Produced::json(to_value(&report)?))
}

fn verify<T: Scalar>(cfg: &RunConfig, seed: u64, count: usize, slack: f64) -> Result<Produced> {
    let iv = cfg.problem().interval::<T>()?;
    let params = GenParams {
        slack,
        ..GenParams::default()
    };
    let report = sweep(seed, count, &iv, &params)?;
    let csv = csv_text(|b| report.write_csv(b))?;
    let bad = !report.failures.is_empty() || !report.chain_failures.is_empty();
    let why = format!(
        "{} instances exceed 1 + {slack}, {} break the chain",
        report.failures.len(),
        report.chain_failures.len()
    );
    Ok(Produced {
        result: to_value(&report)?,
        csv: Some(csv),
        failure: None,
    }
    .failing_if(bad, || why))
}

fn verdict_json<T: Scalar>(v: &TheoremVerdict<T>) -> Result<Value> {
    Ok(json!({
        "passed": v.passed,
        "slack": v.slack,
        "chain": to_value(&v.chain)?,
        "report": to_value(&v.report)?,
    }))
}

fn equality<T: Scalar>(cfg: &RunConfig, n: u32, tol: f64) -> Result<Produced> {
    let iv = cfg.problem().interval::<T>()?;
    let case = match &cfg.node_values {
        Some(values) => {
            let lambda = cfg.lambda.as_ref().map(Number::get).unwrap_or_else(T::one);
            make_equality_case(&iv, n, lambda, &values.iter().map(Number::get).collect::<Vec<T>>())?
        }
        None => random_equality_case(cfg.seed.unwrap_or(0), &iv, n)?,
    };
    let v = verify_theorem_with(&case.weight, &case.function, &iv, tol, KappaOptions::default())?;
    let exact_one = v
        .report
        .exact
        .as_ref()
        .and_then(|e| e.kappa.clone())
        .map(|k| k == Rational::from_integer(1.into()));
    let gap = (v.report.kappa_f64() - 1.0).abs();
    let bad = match exact_one {
        Some(one) => !one,
        None => gap > tol,
    };
    let problem = concave_help::funcspace::schema::ProblemJson::from_specs(&iv, Some(&case.weight), Some(&case.function))?;
    let result = json!({
        "n": case.n,
        "lambda": Number::from_scalar(&case.lambda)?,
        "problem": to_value(&problem)?,
        "kappa_minus_one": gap,
        "exactly_one": exact_one,
        "verdict": verdict_json(&v)?,
    });
    Ok(Produced::json(result).failing_if(bad, || format!("|κ - 1| = {gap:e} exceeds {tol:e}")))
}

fn reflect<T: Scalar>(cfg: &RunConfig, slack: f64) -> Result<Produced> {
    let p = cfg.problem();
    let (iv, w, f) = (p.interval::<T>()?, p.weight::<T>()?, p.function::<T>()?);
    let v = verify_corollary(&w, &f, &iv, slack)?;
    let result = json!({
        "direct": to_value(&v.direct)?,
        "reflected": verdict_json(&v.reflected)?,
        "direct_passed": v.direct_passed,
        "difference": v.difference,
        "agree": v.agree,
        "passed": v.passed,
    });
    Ok(Produced::json(result).failing_if(!v.passed, || {
        format!(
            "direct κ = {}, reflected κ = {}, agree = {}",
            v.direct.kappa_f64(),
            v.reflected.report.kappa_f64(),
            v.agree
        )
    }))
}

fn witness(deltas: &[Rational]) -> Result<Produced> {
    let rows = witness_study(deltas)?;
    let csv = csv_text(|b| write_csv(&rows, b))?;
    let mismatched: Vec<String> = rows
        .iter()
        .filter(|r| !r.matches)
        .map(|r| concave_help::scalar::format_rational(&r.delta))
        .collect();
    Ok(Produced {
        result: to_value(&rows)?,
        csv: Some(csv),
        failure: None,
    }
    .failing_if(!mismatched.is_empty(), || {
        format!("closed form disagrees at δ = {}", mismatched.join(", "))
    }))
}

fn monotonicity() -> Result<Produced> {
    let report = monotonicity_example()?;
    Ok(Produced::json(json!({
        "weight": "1 - x",
        "function": "sin(pi x / 2)",
        "kappa": report.kappa,
        "closed_form": monotonicity_closed_form(),
        "report": to_value(&report)?,
    })))
}

fn smooth<T: Scalar>(cfg: &RunConfig, levels: usize) -> Result<Produced> {
    let target = cfg.problem().weight::<T>()?;
    let report = smoothing_convergence(&SmoothingSchedule::new(target, levels)?)?;
    let csv = csv_text(|b| {
        let mut w = csv::Writer::from_writer(b);
        let io = |e: csv::Error| Error::Internal(e.to_string());
        w.write_record(["level", "halfwidth", "sup_distance", "bound"]).map_err(io)?;
        for l in &report.levels {
            w.write_record([
                l.level.to_string(),
                format!("{:.17e}", l.halfwidth),
                format!("{:.17e}", l.sup_distance),
                format!("{:.17e}", l.bound),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))
    })?;
    let over: Vec<usize> = report
        .levels
        .iter()
        .filter(|l| l.sup_distance > l.bound + report.grid_error_bound)
        .map(|l| l.level)
        .collect();
    Ok(Produced {
        result: to_value(&report)?,
        csv: Some(csv),
        failure: None,
    }
    .failing_if(!over.is_empty(), || format!("levels {over:?} exceed C h(n)")))
}

fn search(cfg: &RunConfig, seed: u64, count: usize, m: usize, opts: &SearchOptions) -> Result<Produced> {
    let p = cfg.problem();
    let (iv, w) = (p.interval::<Rational>()?, p.weight::<Rational>()?);
    let forms = assemble_forms(&w, &iv, m)?;
    let seeds: Vec<u64> = (0..count as u64).map(|k| seed.wrapping_add(k)).collect();
    let runs = maximize_multistart(&forms, &seeds, opts)?;
    let best = runs
        .iter()
        .max_by(|a, b| a.best_kappa.total_cmp(&b.best_kappa))
        .ok_or_else(|| Error::Parameter("search needs at least one start".into()))?;
    // away from the maximizer, where the relative error is meaningful
    let probe: Vec<f64> = (0..forms.size()).map(|k| 1.0 + ((k * 7919) % 13) as f64 / 13.0).collect();
    let grad_error = gradient_check(&forms, &probe, 1e-6)?;
    let concave = w.is_certified_concave();
    let bound_broken = concave && best.best_kappa > 1.0 + 1e-6;
    let csv = csv_text(|b| {
        let mut wtr = csv::Writer::from_writer(b);
        let io = |e: csv::Error| Error::Internal(e.to_string());
        wtr.write_record(["x", "f"]).map_err(io)?;
        for [x, y] in &best.samples {
            wtr.write_record([format!("{x:.17e}"), format!("{y:.17e}")]).map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::Internal(e.to_string()))
    })?;
    let result = json!({
        "basis_size": m,
        "weight_certified_concave": concave,
        "best_kappa": best.best_kappa,
        "best_seed": best.seed,
        "gradient_check": grad_error,
        "runs": to_value(&runs)?,
    });
    let kappa = best.best_kappa;
    Ok(Produced {
        result,
        csv: Some(csv),
        failure: None,
    }
    .failing_if(bound_broken, || format!("κ = {kappa} exceeds 1 for a concave weight")))
}

fn identities<T: Scalar>(cfg: &RunConfig, tol: f64) -> Result<Produced> {
    let p = cfg.problem();
    let (iv, w, f) = (p.interval::<T>()?, p.weight::<T>()?, p.function::<T>()?);
    let mut problems = Vec::new();
    let mut check = |label: &str, r: Result<concave_help::kappa::IdentityResidual>| -> Result<Value> {
        match r {
            Ok(r) => {
                if r.residual > tol {
                    problems.push(format!("{label} residual {:e}", r.residual));
                }
                to_value(&r)
            }
            Err(e @ (Error::Hypothesis(_) | Error::Mode(_))) => Ok(json!({ "skipped": e.to_string() })),
            Err(e) => Err(e),
        }
    };
    let parts = check("parts", parts_identity_residual(&w, &f, &iv))?;
    let lemma4 = check("left-slope", lemma4_residual(&w, &f, &iv))?;
    let report = compute_kappa_with(&w, &f, &iv, KappaOptions::default())?.to_f64();
    let (a, b, c) = (report.i0, report.i1, report.i2);
    let grid: Vec<f64> = match &cfg.eps_grid {
        Some(g) => g.iter().map(Number::get).collect(),
        None => {
            let star = b / (2.0 * a);
            (-3..=3).map(|k| star * 2f64.powi(k)).collect()
        }
    };
    let eps = epsilon_equivalence_check(&a, &b, &c, &grid, 1e-12)?;
    if !eps.consistent {
        problems.push("ε-bound and Cauchy-Schwarz forms disagree".into());
    }
    let result = json!({
        "parts_identity": parts,
        "lemma4": lemma4,
        "epsilon": to_value(&eps)?,
        "kappa": report.kappa,
    });
    Ok(Produced::json(result).failing_if(!problems.is_empty(), || problems.join("; ")))
}
