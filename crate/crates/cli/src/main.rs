mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "concave-help", version, about = "Weighted Hardy-Littlewood inequality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Io {
    /// JSON run configuration (interval, weight, function, options)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the report here instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// κ(w, f) and its three integrals for the configured problem
    Kappa {
        #[command(flatten)]
        io: Io,
        /// Absolute tolerance per adaptive integral [default: 1e-11]
        #[arg(long)]
        tol: Option<f64>,
        /// Require exact rational/π arithmetic
        #[arg(long)]
        exact: bool,
    },
    /// Seeded sweep of random concave weights and sine combinations; fails if any κ > 1 + tol
    Verify {
        #[command(flatten)]
        io: Io,
        /// Sweep seed [default: 42]
        #[arg(long)]
        seed: Option<u64>,
        /// Number of instances [default: 1000]
        #[arg(long)]
        count: Option<usize>,
        /// Slack on κ <= 1 [default: 1e-9]
        #[arg(long)]
        tol: Option<f64>,
        /// Run every instance in rational arithmetic
        #[arg(long)]
        exact: bool,
    },
    /// Builds an equality case λ sin(nπx) and checks κ = 1
    Equality {
        #[command(flatten)]
        io: Io,
        /// Seed for random node values when the config gives none [default: 0]
        #[arg(long)]
        seed: Option<u64>,
        /// Allowed |κ - 1| [default: 1e-9]
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        exact: bool,
    },
    /// Corollary route for f(a) = f'(b) = 0: direct κ against the even reflection
    Reflect {
        #[command(flatten)]
        io: Io,
        /// Slack on κ <= 1 [default: 1e-9]
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        exact: bool,
    },
    /// Exact κ(x⁴, f_δ) for the quintic witness family
    Witness {
        #[command(flatten)]
        io: Io,
        /// Comma-separated rationals in (0, 1/2) [default: 2/5,1/4,1/10,1/20,1/100,1/1000]
        #[arg(long, value_name = "LIST")]
        deltas: Option<String>,
    },
    /// κ(1 - x, sin(πx/2)) on [0, 1]: a decreasing weight with κ > 1
    Monotonicity {
        #[command(flatten)]
        io: Io,
    },
    /// Sup distance of the smoothed weights from a piecewise-linear concave target
    Smooth {
        #[command(flatten)]
        io: Io,
        /// Number of levels [default: 6]
        #[arg(long)]
        levels: Option<usize>,
        /// Smooth in rational arithmetic
        #[arg(long)]
        exact: bool,
    },
    /// Spline ascent on κ for a fixed weight
    Search {
        #[command(flatten)]
        io: Io,
        /// First seed [default: 0]
        #[arg(long)]
        seed: Option<u64>,
        /// Number of starts, seeds seed..seed+count [default: 1]
        #[arg(long)]
        count: Option<usize>,
        /// Spline basis size m [default: 24]
        #[arg(long, value_name = "M")]
        basis_size: Option<usize>,
        /// Gradient-norm stopping tolerance [default: 1e-8]
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Integration-by-parts, left-slope and ε-bound checks on the configured problem
    Identities {
        #[command(flatten)]
        io: Io,
        /// Allowed residual [default: 1e-9]
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        exact: bool,
    },
}

/// Flags that override config fields.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub deltas: Option<String>,
    pub basis_size: Option<usize>,
    pub tol: Option<f64>,
    pub exact: bool,
    pub levels: Option<usize>,
}

impl Command {
    fn split(self) -> (&'static str, Io, Overrides) {
        let o = Overrides::default();
        match self {
            Self::Kappa { io, tol, exact } => ("kappa", io, Overrides { tol, exact, ..o }),
            Self::Verify { io, seed, count, tol, exact } => ("verify", io, Overrides { seed, count, tol, exact, ..o }),
            Self::Equality { io, seed, tol, exact } => ("equality", io, Overrides { seed, tol, exact, ..o }),
            Self::Reflect { io, tol, exact } => ("reflect", io, Overrides { tol, exact, ..o }),
            Self::Witness { io, deltas } => ("witness", io, Overrides { deltas, ..o }),
            Self::Monotonicity { io } => ("monotonicity", io, o),
            Self::Smooth { io, levels, exact } => ("smooth", io, Overrides { levels, exact, ..o }),
            Self::Search {
                io,
                seed,
                count,
                basis_size,
                tol,
            } => (
                "search",
                io,
                Overrides {
                    seed,
                    count,
                    basis_size,
                    tol,
                    ..o
                },
            ),
            Self::Identities { io, tol, exact } => ("identities", io, Overrides { tol, exact, ..o }),
        }
    }
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    let line = msg.to_string().replace('\n', " ");
    eprintln!("error: {line}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, io, overrides) = cli.command.split();
    let cfg = match &io.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => return fail(e),
        },
        None => RunConfig::default(),
    };
    if let Some(c) = &cfg.command {
        if c != name {
            return fail(format!("config is for `{c}`, not `{name}`"));
        }
    }
    let outcome = match commands::run(name, cfg, &overrides, io.format) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let written = match &io.out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .write_all(outcome.text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        return fail(e);
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        if let Some(why) = &outcome.failure {
            eprintln!("verification failed: {why}");
        }
        ExitCode::from(1)
    }
}
