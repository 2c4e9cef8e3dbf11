//! Parameter sweeps written as CSV, with a JSON sidecar holding the resolved
//! configuration.
//!
//! An experiment evaluates one quantity on a grid of one sweep variable,
//! optionally repeated for each value of a series variable, with one or more
//! methods. Rows come out in grid order; grid points run in parallel.
//!
//! Every grid point reuses the experiment seed, so stochastic columns share
//! random numbers across the sweep and curves are smoother than their
//! pointwise standard errors suggest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{los_prob_joint, los_prob_pair, los_prob_single_multilane};
use crate::coverage::{coverage_prob, CoverageKind, CoverageQuery, DEFAULT_EPS_TAIL, DEFAULT_QUAD_NODES};
use crate::error::{Error, Result};
use crate::estimate::{Method, ProbEstimate};
use crate::geometry::TransmitterSet;
use crate::params::{Detection, ScenarioParams};
use crate::scenario::{load_scenario, resolve_scenario};
use crate::simulator::{sim_ergodic_los, sim_joint_los, sim_los_single, sim_volume_fraction, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    LosSingle,
    LosPair,
    LosJoint,
    CoverageFull,
    CoverageK,
    VolumeFraction,
    Ergodic,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::LosSingle => "los-single",
            Quantity::LosPair => "los-pair",
            Quantity::LosJoint => "los-joint",
            Quantity::CoverageFull => "coverage-full",
            Quantity::CoverageK => "coverage-k",
            Quantity::VolumeFraction => "volume-fraction",
            Quantity::Ergodic => "ergodic",
        }
    }

    pub fn methods(&self) -> &'static [Method] {
        match self {
            Quantity::CoverageFull | Quantity::CoverageK => {
                &[Method::ConditionalMc, Method::Quadrature, Method::Simulate]
            }
            _ => &[Method::ClosedForm, Method::Simulate],
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Usage(format!("unknown quantity `{s}`")))
    }
}

/// Sweepable variables, named by their CSV column header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    /// Separation of the second transmitter from the first.
    #[serde(rename = "d_m")]
    Separation,
    #[serde(rename = "lambda_b_per_km")]
    LambdaB,
    #[serde(rename = "lambda_t_per_km")]
    LambdaT,
    /// Mean full obstacle length `2/mu`.
    #[serde(rename = "mean_length_m")]
    MeanLength,
    #[serde(rename = "mean_half_length_m")]
    MeanHalfLength,
    #[serde(rename = "d_star_m")]
    DStar,
    #[serde(rename = "d2_m")]
    D2,
    #[serde(rename = "k")]
    K,
    #[serde(rename = "v_mps")]
    V,
    #[serde(rename = "vo_mps")]
    VO,
}

impl Variable {
    pub fn header(&self) -> &'static str {
        match self {
            Variable::Separation => "d_m",
            Variable::LambdaB => "lambda_b_per_km",
            Variable::LambdaT => "lambda_t_per_km",
            Variable::MeanLength => "mean_length_m",
            Variable::MeanHalfLength => "mean_half_length_m",
            Variable::DStar => "d_star_m",
            Variable::D2 => "d2_m",
            Variable::K => "k",
            Variable::V => "v_mps",
            Variable::VO => "vo_mps",
        }
    }

    fn apply(&self, value: f64, point: &mut Point) -> Result<()> {
        let p = &mut point.params;
        match self {
            Variable::Separation => point.separation = value,
            Variable::LambdaB => p.set_lambda_b(value / 1000.0),
            Variable::LambdaT => p.lambda_t = value / 1000.0,
            Variable::MeanLength => p.set_mean_length(value),
            Variable::MeanHalfLength => p.set_mean_length(2.0 * value),
            Variable::DStar => p.detection = Detection::Radius(value),
            Variable::D2 => p.d2 = value,
            Variable::K => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::config("k", format!("must be a positive integer, got {value}")));
                }
                point.k = value as usize;
            }
            Variable::V => p.speeds.v = value,
            Variable::VO => p.speeds.v_o = value,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub variable: Variable,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn new(variable: Variable, values: Vec<f64>) -> Self {
        Sweep { variable, values }
    }

    /// `start, start + step, ...` up to `stop` inclusive.
    pub fn range(variable: Variable, start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
            return Err(Error::config(
                variable.header(),
                format!("bad range start={start} stop={stop} step={step}"),
            ));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok(Sweep::new(variable, (0..n).map(|i| start + i as f64 * step).collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub quantity: Quantity,
    pub params: ScenarioParams,
    pub sweep: Sweep,
    pub series: Option<Sweep>,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Samples per grid point for stochastic methods.
    pub trials: u64,
    /// Independent realizations for the ergodic quantity.
    pub realizations: u64,
    pub k: usize,
    /// Transmitter for the single-link quantities, and the first of a pair.
    pub tx_x: f64,
    pub separation: f64,
    /// Transmitter layout for `los-joint`.
    pub transmitters: Vec<f64>,
    pub eps_tail: f64,
    pub quad_nodes: usize,
    pub include_empty: bool,
}

impl ExperimentSpec {
    pub fn new(name: &str, quantity: Quantity, params: ScenarioParams, sweep: Sweep) -> Self {
        ExperimentSpec {
            name: name.to_string(),
            quantity,
            params,
            sweep,
            series: None,
            methods: quantity.methods().to_vec(),
            seed: 1,
            trials: 100_000,
            realizations: 1,
            k: 1,
            tx_x: 0.0,
            separation: 0.0,
            transmitters: Vec::new(),
            eps_tail: DEFAULT_EPS_TAIL,
            quad_nodes: DEFAULT_QUAD_NODES,
            include_empty: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.values.is_empty() || self.series.as_ref().is_some_and(|s| s.values.is_empty()) {
            return Err(Error::config("sweep", "grid is empty"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        for m in &self.methods {
            if !self.quantity.methods().contains(m) {
                return Err(Error::Usage(format!("quantity `{}` has no `{m}` evaluator", self.quantity)));
            }
        }
        if self.quantity == Quantity::LosJoint && self.transmitters.is_empty() {
            return Err(Error::config("transmitters", "los-joint needs a transmitter layout"));
        }
        if self.trials == 0 || self.realizations == 0 {
            return Err(Error::config("trials", "must be positive"));
        }
        self.params.validate()
    }

    fn points(&self) -> Vec<(Option<f64>, f64)> {
        let series: Vec<Option<f64>> = match &self.series {
            Some(s) => s.values.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        series
            .into_iter()
            .flat_map(|s| self.sweep.values.iter().map(move |&x| (s, x)))
            .collect()
    }

    fn point(&self, series: Option<f64>, x: f64) -> Result<Point> {
        let mut point = Point {
            params: self.params.clone(),
            separation: self.separation,
            k: self.k,
        };
        if let (Some(s), Some(v)) = (&self.series, series) {
            s.variable.apply(v, &mut point)?;
        }
        self.sweep.variable.apply(x, &mut point)?;
        Ok(point)
    }
}

struct Point {
    params: ScenarioParams,
    separation: f64,
    k: usize,
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub series: Option<f64>,
    pub x: f64,
    pub estimates: Vec<ProbEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub rows: Vec<Row>,
    pub warnings: Vec<String>,
}

// coincident transmitters are one LOS event, so duplicates merge exactly
fn layout(mut xs: Vec<f64>) -> Result<TransmitterSet> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    TransmitterSet::new(xs)
}

fn evaluate(spec: &ExperimentSpec, point: &Point, method: Method) -> Result<(ProbEstimate, Option<String>)> {
    let p = &point.params;
    let sim = || SimConfig::new(p.clone(), spec.trials, spec.seed);
    let pair = || layout(vec![spec.tx_x, spec.tx_x + point.separation]);
    let est = match (spec.quantity, method) {
        (Quantity::LosSingle | Quantity::Ergodic, Method::ClosedForm) => {
            ProbEstimate::closed_form(los_prob_single_multilane(&p.lanes))
        }
        (Quantity::LosSingle, Method::Simulate) => sim_los_single(&sim(), spec.tx_x)?.to_prob(),
        (Quantity::LosPair, Method::ClosedForm) => {
            ProbEstimate::closed_form(los_prob_pair(p, spec.tx_x, spec.tx_x + point.separation)?)
        }
        (Quantity::LosPair, Method::Simulate) => sim_joint_los(&sim(), &pair()?)?.to_prob(),
        (Quantity::LosJoint, Method::ClosedForm) => {
            let txs = layout(spec.transmitters.clone())?;
            ProbEstimate::closed_form(los_prob_joint(p, &txs)?)
        }
        (Quantity::LosJoint, Method::Simulate) => {
            let txs = layout(spec.transmitters.clone())?;
            sim_joint_los(&sim(), &txs)?.to_prob()
        }
        (Quantity::VolumeFraction, Method::ClosedForm) => {
            ProbEstimate::closed_form(1.0 - los_prob_single_multilane(&p.lanes))
        }
        (Quantity::VolumeFraction, Method::Simulate) => sim_volume_fraction(&sim())?.to_prob(),
        (Quantity::Ergodic, Method::Simulate) => {
            let mut cfg = SimConfig::ergodic(p.clone(), spec.seed);
            cfg.n_trials = spec.realizations;
            sim_ergodic_los(&cfg, spec.tx_x)?.to_prob()
        }
        (Quantity::CoverageFull | Quantity::CoverageK, _) => {
            let kind = match spec.quantity {
                Quantity::CoverageFull => CoverageKind::Full,
                _ => CoverageKind::AtLeast(point.k),
            };
            let mut q = CoverageQuery::new(p.clone(), kind, method);
            q.budget = spec.trials;
            q.seed = spec.seed;
            q.eps_tail = spec.eps_tail;
            q.quad_nodes = spec.quad_nodes;
            q.include_empty = spec.include_empty;
            let r = coverage_prob(&q)?;
            return Ok((r.estimate, r.warning));
        }
        (q, m) => return Err(Error::Usage(format!("quantity `{q}` has no `{m}` evaluator"))),
    };
    Ok((est, None))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let evaluated: Vec<(Row, Vec<String>)> = spec
        .points()
        .into_par_iter()
        .map(|(series, x)| {
            let point = spec.point(series, x)?;
            let mut estimates = Vec::with_capacity(spec.methods.len());
            let mut warnings = Vec::new();
            for &m in &spec.methods {
                let (e, w) = evaluate(spec, &point, m)?;
                estimates.push(e);
                warnings.extend(w.map(|w| format!("{} = {x}: {w}", spec.sweep.variable.header())));
            }
            Ok((Row { series, x, estimates }, warnings))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(evaluated.len());
    let mut warnings = Vec::new();
    for (row, w) in evaluated {
        rows.push(row);
        warnings.extend(w);
    }
    Ok(ExperimentOutput { rows, warnings })
}

pub fn csv_header(spec: &ExperimentSpec) -> Vec<String> {
    let mut h = Vec::new();
    if let Some(s) = &spec.series {
        h.push(s.variable.header().to_string());
    }
    h.push(spec.sweep.variable.header().to_string());
    for m in &spec.methods {
        h.push(m.as_str().to_string());
        if m.is_stochastic() {
            h.push(format!("{m}_stderr"));
        }
    }
    h
}

pub fn write_csv<W: std::io::Write>(spec: &ExperimentSpec, output: &ExperimentOutput, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(spec))?;
    for row in &output.rows {
        let mut rec = Vec::new();
        rec.extend(row.series.map(|s| s.to_string()));
        rec.push(row.x.to_string());
        for (m, e) in spec.methods.iter().zip(&row.estimates) {
            rec.push(e.value.to_string());
            if m.is_stochastic() {
                rec.push(e.stderr_or_zero().to_string());
            }
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Corrections applied to the closed forms, recorded in every sidecar.
pub fn errata_flags() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        (
            "single_link_exponent",
            "LOS exponent is -2*lambda_b/mu; the form -2*lambda_b*mu is dimensionally inconsistent",
        ),
        (
            "joint_prefix_count",
            "joint LOS of n transmitters uses the prefix -2*lambda_b*n/mu",
        ),
        (
            "subset_size_prefix",
            "inclusion-exclusion terms over a subset of size j use the prefix -2*lambda_b*j/mu",
        ),
        (
            "ordered_simplex_density",
            "integrals over ordered projections carry the order-statistic density n!/xi_hat^n",
        ),
        (
            "empty_window",
            "n = 0 detectable transmitters counts as covered only with include_empty",
        ),
    ])
}

#[derive(Serialize)]
struct Sidecar<'a> {
    version: &'static str,
    csv: String,
    rows: usize,
    spec: &'a ExperimentSpec,
    d_star_m: f64,
    errata: BTreeMap<&'static str, &'static str>,
    warnings: &'a [String],
}

/// Writes `csv_path` and the sidecar next to it (same stem, `.json`).
pub fn write_outputs(spec: &ExperimentSpec, output: &ExperimentOutput, csv_path: &Path) -> Result<PathBuf> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_csv(spec, output, std::fs::File::create(csv_path)?)?;
    let sidecar = csv_path.with_extension("json");
    let doc = Sidecar {
        version: env!("CARGO_PKG_VERSION"),
        csv: csv_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        rows: output.rows.len(),
        spec,
        d_star_m: spec.params.d_star(),
        errata: errata_flags(),
        warnings: &output.warnings,
    };
    std::fs::write(&sidecar, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(sidecar)
}

// ---- experiment files ----

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDef {
    variable: Variable,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

impl GridDef {
    fn resolve(self, key: &str) -> Result<Sweep> {
        match (self.values, self.start, self.stop, self.step) {
            (Some(v), None, None, None) => Ok(Sweep::new(self.variable, v)),
            (None, Some(a), Some(b), Some(s)) => Sweep::range(self.variable, a, b, s),
            _ => Err(Error::config(key, "give either `values` or `start`, `stop` and `step`")),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    name: Option<String>,
    scenario: String,
    quantity: Quantity,
    sweep: GridDef,
    series: Option<GridDef>,
    methods: Option<Vec<Method>>,
    seed: Option<u64>,
    trials: Option<u64>,
    realizations: Option<u64>,
    k: Option<usize>,
    tx_x_m: Option<f64>,
    separation_m: Option<f64>,
    transmitters_m: Option<Vec<f64>>,
    eps_tail: Option<f64>,
    quad_nodes: Option<usize>,
    include_empty: Option<bool>,
}

/// Parses an experiment file. `scenario` names a scenario file, looked up
/// next to the experiment file first and then as in [`resolve_scenario`].
pub fn parse_experiment(text: &str, base_dir: Option<&Path>, default_name: &str) -> Result<ExperimentSpec> {
    let f: ExperimentFile = toml::from_str(text).map_err(|e| {
        // toml names the offending key in its message; surface the key itself when it can
        let msg = e.message().to_string();
        let key = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.starts_with("unknown field") || msg.starts_with("missing field"))
            .unwrap_or("<file>")
            .to_string();
        Error::config(key, msg)
    })?;
    let local = base_dir.map(|d| d.join(&f.scenario)).filter(|p| p.is_file());
    let path = match local {
        Some(p) => p,
        None => resolve_scenario(&f.scenario)?,
    };
    let params = load_scenario(&path)?;
    let mut spec = ExperimentSpec::new(
        f.name.as_deref().unwrap_or(default_name),
        f.quantity,
        params,
        f.sweep.resolve("sweep")?,
    );
    spec.series = f.series.map(|s| s.resolve("series")).transpose()?;
    if let Some(m) = f.methods {
        spec.methods = m;
    }
    spec.seed = f.seed.unwrap_or(spec.seed);
    spec.trials = f.trials.unwrap_or(spec.trials);
    spec.realizations = f.realizations.unwrap_or(spec.realizations);
    spec.k = f.k.unwrap_or(spec.k);
    spec.tx_x = f.tx_x_m.unwrap_or(spec.tx_x);
    spec.separation = f.separation_m.unwrap_or(spec.separation);
    spec.transmitters = f.transmitters_m.unwrap_or_default();
    spec.eps_tail = f.eps_tail.unwrap_or(spec.eps_tail);
    spec.quad_nodes = f.quad_nodes.unwrap_or(spec.quad_nodes);
    spec.include_empty = f.include_empty.unwrap_or(false);
    spec.validate()?;
    Ok(spec)
}

pub fn load_experiment(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_experiment(&text, path.parent(), &stem)
}

// ---- built-in recipes ----

pub const RECIPES: [&str; 4] = ["fig5", "fig6", "fig8", "klos"];

/// Pair LOS against transmitter separation, `d1 = d2 = 10 m`.
pub fn recipe_fig5() -> ExperimentSpec {
    let params = ScenarioParams::single_lane(0.004, 0.02, 0.4, 10.0, 10.0, 1500.0);
    let sweep = Sweep::range(Variable::Separation, 0.0, 300.0, 5.0).expect("static grid");
    ExperimentSpec::new("fig5", Quantity::LosPair, params, sweep)
}

/// Pair LOS against obstacle density, `d1 = 10 m`, `d2 = 40 m`, for a few
/// separations.
pub fn recipe_fig6() -> ExperimentSpec {
    let params = ScenarioParams::single_lane(0.004, 0.02, 0.4, 10.0, 40.0, 1500.0);
    let sweep = Sweep::range(Variable::LambdaB, 0.0, 50.0, 2.0).expect("static grid");
    let mut spec = ExperimentSpec::new("fig6", Quantity::LosPair, params, sweep);
    spec.series = Some(Sweep::new(Variable::Separation, vec![0.0, 25.0, 50.0, 100.0, 200.0]));
    spec
}

/// Full coverage against mean obstacle length at `d_star = 1.5 km`,
/// `lambda_t = 4/km`, for `lambda_b` in {6, 10, 14}/km.
pub fn recipe_fig8() -> ExperimentSpec {
    let params = ScenarioParams::single_lane(0.004, 0.01, 0.4, 10.0, 10.0, 1500.0);
    let sweep = Sweep::range(Variable::MeanLength, 1.0, 10.0, 1.0).expect("static grid");
    let mut spec = ExperimentSpec::new("fig8", Quantity::CoverageFull, params, sweep);
    spec.series = Some(Sweep::new(Variable::LambdaB, vec![6.0, 10.0, 14.0]));
    spec
}

/// k-LOS coverage with about four detectable transmitters on average.
pub fn recipe_klos() -> ExperimentSpec {
    let params = ScenarioParams::single_lane(0.004, 0.01, 0.4, 10.0, 10.0, 500.0);
    let sweep = Sweep::range(Variable::MeanLength, 1.0, 10.0, 1.0).expect("static grid");
    let mut spec = ExperimentSpec::new("klos", Quantity::CoverageK, params, sweep);
    spec.series = Some(Sweep::new(Variable::K, vec![1.0, 2.0, 3.0]));
    spec
}

pub fn recipe(name: &str) -> Result<ExperimentSpec> {
    match name {
        "fig5" => Ok(recipe_fig5()),
        "fig6" => Ok(recipe_fig6()),
        "fig8" => Ok(recipe_fig8()),
        "klos" => Ok(recipe_klos()),
        other => Err(Error::Usage(format!(
            "unknown recipe `{other}` (available: {})",
            RECIPES.join(", ")
        ))),
    }
}
