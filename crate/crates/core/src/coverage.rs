//! Full and k-LOS coverage of the typical receiver.
//!
//! A transmitter is detectable when it lies within the detection radius
//! `d_star`, i.e. on the segment `[-xi/2, xi/2]` of `y = d1 + d2`. Given `n`
//! detectable transmitters, their projections onto the obstacle line are the
//! order statistics of `n` uniforms on `[-xi_hat/2, xi_hat/2]`,
//! `xi_hat = d1 xi / (d1 + d2)`, and the conditional coverage probability is
//! a closed form in those projections (joint LOS for full coverage,
//! inclusion–exclusion for k-LOS). The coverage probability is its
//! expectation, summed over the Poisson count up to a truncation point.
//!
//! Two evaluators compute that expectation:
//!
//! * conditional Monte Carlo samples only the transmitters and averages the
//!   exact conditional probability;
//! * nested quadrature integrates the `n <= 3` terms over the ordered simplex
//!   with Gauss–Legendre rules and uses sorted-uniform Monte Carlo per `n`
//!   above that.
//!
//! `n = 0` counts as covered only for full coverage with `include_empty`.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::log_joint_sorted;
use crate::error::{Error, Result};
use crate::estimate::{clamp_prob, par_accumulate, Method, Moments, ProbEstimate, Truncation};
use crate::inclusion_exclusion::at_least_k;
use crate::params::ScenarioParams;
use crate::poisson::{poisson_pmf, poisson_tail, poisson_truncation};
use crate::quadrature::SimplexQuadrature;
use crate::sampling::{poisson_count, stream_rng};
use crate::simulator::{sim_coverage_detailed, SimConfig};

pub use crate::simulator::CoverageKind;

pub const DEFAULT_EPS_TAIL: f64 = 1e-8;
pub const DEFAULT_BUDGET: u64 = 100_000;
pub const DEFAULT_QUAD_NODES: usize = 64;
/// Largest `n` integrated deterministically by the quadrature evaluator.
pub const QUAD_MAX_N: usize = 3;
/// Largest transmitter count the k-LOS series is evaluated for.
pub const DEFAULT_ANALYTIC_CAP: usize = 64;

// keeps per-n quadrature strata off the streams used by conditional MC
const STRATUM_STREAM_BASE: u64 = 1 << 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageQuery {
    pub params: ScenarioParams,
    pub kind: CoverageKind,
    pub method: Method,
    /// Monte-Carlo samples (conditional MC, simulation, and the `n > 3`
    /// strata of the quadrature evaluator).
    pub budget: u64,
    /// Gauss–Legendre nodes per simplex dimension.
    pub quad_nodes: usize,
    pub eps_tail: f64,
    pub include_empty: bool,
    pub seed: u64,
    /// Largest Poisson truncation point accepted for k-LOS.
    pub analytic_cap: usize,
    /// Replaces the truncation point from `eps_tail`.
    pub n_max_override: Option<usize>,
}

impl CoverageQuery {
    pub fn new(params: ScenarioParams, kind: CoverageKind, method: Method) -> Self {
        CoverageQuery {
            params,
            kind,
            method,
            budget: DEFAULT_BUDGET,
            quad_nodes: DEFAULT_QUAD_NODES,
            eps_tail: DEFAULT_EPS_TAIL,
            include_empty: false,
            seed: 0,
            analytic_cap: DEFAULT_ANALYTIC_CAP,
            n_max_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let CoverageKind::AtLeast(0) = self.kind {
            return Err(Error::InvalidParameter {
                name: "k",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if !(self.eps_tail > 0.0 && self.eps_tail < 1.0) {
            return Err(Error::InvalidParameter {
                name: "eps_tail",
                value: self.eps_tail,
                reason: "must lie in (0, 1)",
            });
        }
        if self.budget == 0 {
            return Err(Error::InvalidParameter {
                name: "budget",
                value: 0.0,
                reason: "must be positive",
            });
        }
        if !matches!(self.method, Method::ConditionalMc | Method::Quadrature | Method::Simulate) {
            return Err(Error::Usage(format!("coverage has no `{}` evaluator", self.method)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub estimate: ProbEstimate,
    pub n_max: usize,
    /// Contribution of each transmitter count `n` to the estimate.
    pub terms: Vec<f64>,
    pub wall_clock: Duration,
    pub warning: Option<String>,
}

/// Conditional coverage probability given sorted projections.
fn conditional(kind: CoverageKind, lambda_b: f64, mu: f64, proj: &[f64], include_empty: bool) -> f64 {
    match kind {
        CoverageKind::Full if proj.is_empty() => f64::from(u8::from(include_empty)),
        CoverageKind::Full => log_joint_sorted(lambda_b, mu, proj).exp(),
        CoverageKind::AtLeast(k) => at_least_k(lambda_b, mu, proj, k),
    }
}

/// Coverage probability by the method in `query`.
pub fn coverage_prob(query: &CoverageQuery) -> Result<CoverageResult> {
    query.validate()?;
    let started = Instant::now();
    let p = &query.params;

    let xi = match p.window_length() {
        Ok(xi) => xi,
        Err(Error::NoDetectableRegion { d_star, offset }) => {
            let value = match query.kind {
                CoverageKind::Full if query.include_empty => 1.0,
                _ => 0.0,
            };
            let mut estimate = ProbEstimate::closed_form(value);
            estimate.method = query.method;
            return Ok(CoverageResult {
                estimate,
                n_max: 0,
                terms: vec![value],
                wall_clock: started.elapsed(),
                warning: Some(format!(
                    "no detectable region: d_star = {d_star} m <= d1 + d2 = {offset} m"
                )),
            });
        }
        Err(e) => return Err(e),
    };

    let mean = p.lambda_t * xi;
    let (n_max, _) = match query.n_max_override {
        Some(n) => (n, poisson_tail(mean, n)),
        None => poisson_truncation(mean, query.eps_tail),
    };
    let tail_bound = poisson_tail(mean, n_max);

    if query.method == Method::Simulate {
        let mut cfg = SimConfig::new(p.clone(), query.budget, query.seed);
        cfg.l_win = None;
        let (e, terms) = sim_coverage_detailed(&cfg, query.kind, query.include_empty)?;
        return Ok(CoverageResult {
            estimate: e.to_prob(),
            n_max: terms.len().saturating_sub(1),
            terms,
            wall_clock: started.elapsed(),
            warning: e.low_count.then(|| "fewer than 30 covered or uncovered trials".to_string()),
        });
    }

    let lane = p.single("coverage")?;
    if let CoverageKind::AtLeast(_) = query.kind {
        if n_max > query.analytic_cap {
            return Err(Error::BudgetExceeded {
                what: "k-LOS inclusion-exclusion",
                needed: n_max,
                cap: query.analytic_cap,
            });
        }
    }
    let half_hat = 0.5 * xi * p.projection_scale();
    let (lb, mu) = (lane.lambda_b, lane.mu);

    let (mut estimate, terms) = match query.method {
        Method::ConditionalMc => {
            let m = par_accumulate(query.budget, |i, m| {
                let mut rng = stream_rng(query.seed, i);
                let n = poisson_count(mean, &mut rng) as usize;
                if n > n_max {
                    m.push(0.0);
                    return;
                }
                let mut proj: Vec<f64> = (0..n)
                    .map(|_| half_hat * (2.0 * rng.random::<f64>() - 1.0))
                    .collect();
                proj.sort_by(f64::total_cmp);
                m.push_bucketed(n, conditional(query.kind, lb, mu, &proj, query.include_empty));
            });
            let total = m.count as f64;
            let mut terms: Vec<f64> = m.buckets.iter().map(|s| s / total).collect();
            terms.resize(n_max + 1, 0.0);
            (
                ProbEstimate::sampled(Method::ConditionalMc, m.mean(), m.stderr(), m.count),
                terms,
            )
        }
        Method::Quadrature => quadrature_evaluator(query, mean, n_max, half_hat, lb, mu),
        _ => unreachable!("validated above"),
    };
    estimate.truncation = Some(Truncation { n_max, tail_bound });
    Ok(CoverageResult {
        estimate,
        n_max,
        terms,
        wall_clock: started.elapsed(),
        warning: None,
    })
}

fn quadrature_evaluator(
    query: &CoverageQuery,
    mean: f64,
    n_max: usize,
    half_hat: f64,
    lambda_b: f64,
    mu: f64,
) -> (ProbEstimate, Vec<f64>) {
    let pmf = poisson_pmf(mean, n_max);
    let quad = SimplexQuadrature::new(query.quad_nodes, 1.0 / mu);
    let g = |proj: &[f64]| conditional(query.kind, lambda_b, mu, proj, query.include_empty);

    let mut terms = vec![0.0; n_max + 1];
    let mut variance = 0.0;
    let mut samples = 0u64;
    let mc_mass: f64 = pmf.iter().skip(QUAD_MAX_N + 1).sum();
    for n in 0..=n_max {
        let expectation = if n <= QUAD_MAX_N {
            quad.expect_sorted(n, -half_hat, half_hat, g)
        } else {
            let share = if mc_mass > 0.0 { pmf[n] / mc_mass } else { 0.0 };
            let m_n = ((query.budget as f64 * share).ceil() as u64).max(256);
            let stratum = sorted_uniform_mc(n, m_n, half_hat, query.seed, STRATUM_STREAM_BASE * n as u64, &g);
            variance += pmf[n] * pmf[n] * stratum.stderr().powi(2);
            samples += m_n;
            stratum.mean()
        };
        terms[n] = pmf[n] * expectation;
    }
    let value: f64 = terms.iter().sum();
    let estimate = ProbEstimate {
        value: clamp_prob(value),
        method: Method::Quadrature,
        stderr: Some(variance.sqrt()),
        n_samples: Some(samples),
        truncation: None,
    };
    (estimate, terms)
}

fn sorted_uniform_mc<G>(n: usize, samples: u64, half: f64, seed: u64, stream_base: u64, g: &G) -> Moments
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    par_accumulate(samples, |i, m| {
        let mut rng = stream_rng(seed, stream_base + i);
        let mut proj: Vec<f64> = (0..n).map(|_| half * (2.0 * rng.random::<f64>() - 1.0)).collect();
        proj.sort_by(f64::total_cmp);
        m.push(g(&proj));
    })
}

/// `E[coverage | n transmitters]` by nested quadrature (`n <= 3` is
/// practical; cost grows as `nodes^n`).
pub fn conditional_coverage_quadrature(params: &ScenarioParams, kind: CoverageKind, n: usize, nodes: usize) -> Result<f64> {
    let lane = params.single("conditional_coverage_quadrature")?;
    let half_hat = 0.5 * params.window_length()? * params.projection_scale();
    let quad = SimplexQuadrature::new(nodes, 1.0 / lane.mu);
    Ok(quad.expect_sorted(n, -half_hat, half_hat, |proj| {
        conditional(kind, lane.lambda_b, lane.mu, proj, false)
    }))
}

/// `E[coverage | n transmitters]` by sorted-uniform Monte Carlo; returns
/// `(mean, stderr)`.
pub fn conditional_coverage_mc(params: &ScenarioParams, kind: CoverageKind, n: usize, samples: u64, seed: u64) -> Result<(f64, f64)> {
    let lane = params.single("conditional_coverage_mc")?;
    let half_hat = 0.5 * params.window_length()? * params.projection_scale();
    let (lb, mu) = (lane.lambda_b, lane.mu);
    let m = sorted_uniform_mc(n, samples, half_hat, seed, 0, &|proj: &[f64]| {
        conditional(kind, lb, mu, proj, false)
    });
    Ok((m.mean(), m.stderr()))
}

pub fn full_coverage_prob(query: &CoverageQuery) -> Result<CoverageResult> {
    let mut q = query.clone();
    q.kind = CoverageKind::Full;
    coverage_prob(&q)
}

pub fn k_los_prob(query: &CoverageQuery, k: usize) -> Result<CoverageResult> {
    let mut q = query.clone();
    q.kind = CoverageKind::AtLeast(k);
    coverage_prob(&q)
}

/// Writes `n,term` rows.
pub fn write_terms_csv<W: std::io::Write>(result: &CoverageResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "contribution"])?;
    for (n, t) in result.terms.iter().enumerate() {
        w.write_record([n.to_string(), t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
