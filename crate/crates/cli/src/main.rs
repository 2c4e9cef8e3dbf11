//! `vlos`: LOS probabilities, coverage and parameter sweeps from the command
//! line.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 failed
//! validation, 3 numerical budget exceeded.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use vlos_core::analytic::{los_prob_joint, los_prob_single_multilane};
use vlos_core::coverage::{coverage_prob, write_terms_csv, CoverageKind, CoverageQuery};
use vlos_core::experiment::{load_experiment, recipe, run_experiment, write_csv, write_outputs};
use vlos_core::scenario::{load_scenario, resolve_scenario};
use vlos_core::simulator::{
    sim_coverage, sim_coverage_trials, sim_ergodic_los, sim_joint_los, sim_los_single, sim_volume_fraction,
    write_trials_csv, SimConfig,
};
use vlos_core::validate::validate;
use vlos_core::{Error, Method, ProbEstimate, ScenarioParams, TransmitterSet};

#[derive(Parser)]
#[command(name = "vlos", version, about = "LOS blockage and coverage for vehicular networks")]
struct Cli {
    /// Worker threads (default: all cores). Results are identical for any count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file, or a name looked up in $VLOS_SCENARIO_DIR (default ./scenarios).
    #[arg(long, default_value = "standard")]
    scenario: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Samples for stochastic methods.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// LOS probability to one transmitter at (x, d1 + d2).
    Los {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, default_value = "closed-form")]
        method: Method,
    },
    /// Joint LOS probability to a set of transmitters.
    Joint {
        #[command(flatten)]
        common: Common,
        /// Transmitter x-coordinates in meters, comma separated (`--tx=-10,0`
        /// when the first is negative).
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        tx: Vec<f64>,
        #[arg(long, default_value = "closed-form")]
        method: Method,
    },
    /// Full (default) or k-LOS coverage of the typical receiver.
    Coverage {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cov: CoverageArgs,
        #[arg(long, default_value = "conditional-mc")]
        method: Method,
        #[arg(long, default_value_t = 64)]
        quad_nodes: usize,
        /// Largest truncation point accepted for k-LOS.
        #[arg(long, default_value_t = vlos_core::coverage::DEFAULT_ANALYTIC_CAP)]
        analytic_cap: usize,
        /// Write the contribution of each transmitter count as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Direct Monte-Carlo estimate of one quantity.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "coverage")]
        quantity: SimQuantity,
        #[command(flatten)]
        cov: CoverageArgs,
        /// Transmitters for `los` (one value) and `joint`.
        #[arg(long, value_delimiter = ',', default_value = "0", allow_negative_numbers = true)]
        tx: Vec<f64>,
        /// Write one row per coverage trial as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Cross-method checks of a scenario; exits 2 when any check fails.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Run an experiment and write CSV plus a JSON sidecar.
    Sweep {
        /// Built-in recipe: fig5, fig6, fig8, klos.
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        recipe: Option<String>,
        /// Experiment file.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Replaces the experiment's methods (repeatable).
        #[arg(long)]
        method: Vec<Method>,
        #[arg(long)]
        eps_tail: Option<f64>,
        /// CSV path; the sidecar goes next to it. Default: <name>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CoverageArgs {
    /// LOS to at least k transmitters instead of all of them.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = vlos_core::coverage::DEFAULT_EPS_TAIL)]
    eps_tail: f64,
    /// Count an empty detection window as covered (full coverage only).
    #[arg(long)]
    include_empty: bool,
}

impl CoverageArgs {
    fn kind(&self) -> CoverageKind {
        self.k.map_or(CoverageKind::Full, CoverageKind::AtLeast)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SimQuantity {
    Los,
    Joint,
    Coverage,
    Volume,
    Ergodic,
}

enum Failure {
    Error(Error),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn scenario(name: &str) -> Result<ScenarioParams, Error> {
    load_scenario(&resolve_scenario(name)?)
}

fn emit(out: Option<&Path>, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)? + "\n";
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn estimate_json(e: &ProbEstimate) -> serde_json::Value {
    serde_json::to_value(e).expect("estimates serialize")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Los { common, x, method } => {
            let p = scenario(&common.scenario)?;
            let e = match method {
                Method::ClosedForm => ProbEstimate::closed_form(los_prob_single_multilane(&p.lanes)),
                Method::Simulate => sim_los_single(&SimConfig::new(p, common.trials, common.seed), x)?.to_prob(),
                m => return Err(Error::Usage(format!("`los` has no `{m}` evaluator")).into()),
            };
            emit(common.out.as_deref(), &estimate_json(&e))
        }
        Command::Joint { common, tx, method } => {
            let p = scenario(&common.scenario)?;
            let txs = TransmitterSet::from_unsorted(tx)?;
            let e = match method {
                Method::ClosedForm => ProbEstimate::closed_form(los_prob_joint(&p, &txs)?),
                Method::Simulate => sim_joint_los(&SimConfig::new(p, common.trials, common.seed), &txs)?.to_prob(),
                m => return Err(Error::Usage(format!("`joint` has no `{m}` evaluator")).into()),
            };
            emit(common.out.as_deref(), &estimate_json(&e))
        }
        Command::Coverage {
            common,
            cov,
            method,
            quad_nodes,
            analytic_cap,
            dump,
        } => {
            let p = scenario(&common.scenario)?;
            let mut q = CoverageQuery::new(p, cov.kind(), method);
            q.budget = common.trials;
            q.seed = common.seed;
            q.eps_tail = cov.eps_tail;
            q.include_empty = cov.include_empty;
            q.quad_nodes = quad_nodes;
            q.analytic_cap = analytic_cap;
            let r = coverage_prob(&q)?;
            if let Some(w) = &r.warning {
                eprintln!("warning: {w}");
            }
            if let Some(path) = dump {
                write_terms_csv(&r, File::create(path)?)?;
            }
            emit(
                common.out.as_deref(),
                &json!({
                    "kind": cov.kind().label(),
                    "estimate": estimate_json(&r.estimate),
                    "n_max": r.n_max,
                    "wall_clock_s": r.wall_clock.as_secs_f64(),
                    "warning": r.warning,
                }),
            )
        }
        Command::Simulate {
            common,
            quantity,
            cov,
            tx,
            dump,
        } => {
            let p = scenario(&common.scenario)?;
            let cfg = SimConfig::new(p.clone(), common.trials, common.seed);
            let s = match quantity {
                SimQuantity::Los => sim_los_single(&cfg, tx[0])?,
                SimQuantity::Joint => sim_joint_los(&cfg, &TransmitterSet::from_unsorted(tx)?)?,
                SimQuantity::Volume => sim_volume_fraction(&cfg)?,
                SimQuantity::Ergodic => sim_ergodic_los(&SimConfig::ergodic(p, common.seed), tx[0])?,
                SimQuantity::Coverage => {
                    if let Some(path) = dump {
                        let trials = sim_coverage_trials(&cfg, cov.kind(), cov.include_empty)?;
                        write_trials_csv(&trials, File::create(path)?)?;
                    }
                    sim_coverage(&cfg, cov.kind(), cov.include_empty)?
                }
            };
            if s.low_count {
                eprintln!("warning: fewer than 30 successes or failures; the normal interval is unreliable");
            }
            emit(common.out.as_deref(), &serde_json::to_value(s).map_err(Error::from)?)
        }
        Command::Validate { common } => {
            let p = scenario(&common.scenario)?;
            let report = validate(&p, common.trials, common.seed)?;
            for c in &report.checks {
                eprintln!(
                    "{} {:<36} measured={} reference={} deviation={:.3e} tolerance={:.3e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.reference,
                    c.deviation,
                    c.tolerance
                );
            }
            emit(common.out.as_deref(), &serde_json::to_value(&report).map_err(Error::from)?)?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Validation)
            }
        }
        Command::Sweep {
            recipe: name,
            spec,
            seed,
            trials,
            method,
            eps_tail,
            out,
        } => {
            let mut spec = match (name, spec) {
                (Some(name), _) => recipe(&name)?,
                (None, Some(path)) => load_experiment(&path)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(t) = trials {
                spec.trials = t;
            }
            if !method.is_empty() {
                spec.methods = method;
            }
            if let Some(e) = eps_tail {
                spec.eps_tail = e;
            }
            let output = run_experiment(&spec)?;
            for w in &output.warnings {
                eprintln!("warning: {w}");
            }
            let csv = out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.name)));
            if csv.as_os_str() == "-" {
                write_csv(&spec, &output, std::io::stdout().lock())?;
            } else {
                let sidecar = write_outputs(&spec, &output, &csv)?;
                eprintln!("wrote {} and {}", csv.display(), sidecar.display());
            }
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(2),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
