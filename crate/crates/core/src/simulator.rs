//! Monte-Carlo oracle: samples every process and applies the exact
//! blockage geometry.
//!
//! Snapshot estimators run independent trials, trial `i` drawing from
//! [`stream_rng`]`(seed, i)`, so estimates are bit-identical for any thread
//! count. The ergodic estimator follows one receiver through a single moving
//! realization per stream and reports a batch-means standard error.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{par_accumulate, Method, Moments, ProbEstimate};
use crate::geometry::{project_lane, Obstacle, ObstacleSet, TransmitterSet, Window};
use crate::params::ScenarioParams;
use crate::sampling::{sample_obstacles_with, sample_transmitters, stream_rng};

/// Number of batches for the batch-means standard error in ergodic mode.
pub const ERGODIC_BATCHES: usize = 30;

/// Below this many successes or failures a Bernoulli estimate is flagged.
pub const LOW_COUNT: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Snapshot,
    /// `horizon` and `dt` in seconds.
    Ergodic { horizon: f64, dt: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ScenarioParams,
    pub n_trials: u64,
    pub seed: u64,
    /// Half-length of the observation window. `None` picks the smallest
    /// window the estimator needs.
    pub l_win: Option<f64>,
    pub mode: SimMode,
}

impl SimConfig {
    pub fn new(params: ScenarioParams, n_trials: u64, seed: u64) -> Self {
        SimConfig {
            params,
            n_trials,
            seed,
            l_win: None,
            mode: SimMode::Snapshot,
        }
    }

    /// Ergodic mode with a horizon long enough that the faster of the two
    /// movers covers `10^4` mean half-lengths, stepping a tenth of a mean
    /// half-length of relative motion per step.
    pub fn ergodic(params: ScenarioParams, seed: u64) -> Self {
        let mu_min = params.lanes.iter().map(|l| l.mu).fold(f64::INFINITY, f64::min);
        let mu_max = params.lanes.iter().map(|l| l.mu).fold(0.0, f64::max);
        let fast = params.speeds.v.max(params.speeds.v_o);
        let sum = params.speeds.v + params.speeds.v_o;
        let mode = if fast > 0.0 && mu_min.is_finite() {
            SimMode::Ergodic {
                horizon: 1e4 / (mu_min * fast),
                dt: 0.1 / (mu_max * sum),
            }
        } else {
            SimMode::Ergodic { horizon: 1.0, dt: 1.0 }
        };
        SimConfig {
            params,
            n_trials: 1,
            seed,
            l_win: None,
            mode,
        }
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_trials == 0 {
            return Err(Error::InvalidParameter {
                name: "n_trials",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    fn window(&self, need: f64) -> Result<Window> {
        match self.l_win {
            Some(have) if have < need => Err(Error::WindowTooSmall { have, need }),
            Some(have) => Ok(Window::symmetric(have)),
            None => Ok(Window::symmetric(need)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_trials: u64,
    pub seed: u64,
    pub ergodic: bool,
    /// Fewer than [`LOW_COUNT`] successes or failures; the normal
    /// approximation behind `stderr` is poor.
    pub low_count: bool,
}

impl SimEstimate {
    fn bernoulli(m: &Moments, seed: u64) -> Self {
        let n = m.count;
        let p = m.mean();
        let successes = m.sum.round() as u64;
        SimEstimate {
            value: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            n_trials: n,
            seed,
            ergodic: false,
            low_count: successes < LOW_COUNT || n - successes < LOW_COUNT,
        }
    }

    pub fn to_prob(&self) -> ProbEstimate {
        ProbEstimate::sampled(Method::Simulate, self.value, self.stderr, self.n_trials)
    }

    /// `|value - reference| <= z * stderr`.
    pub fn covers(&self, reference: f64, z: f64) -> bool {
        (self.value - reference).abs() <= z * self.stderr
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// LOS fraction from a receiver at the origin to a transmitter at
/// `(tx_x, d1 + d2)`, over every obstacle lane.
pub fn sim_los_single(config: &SimConfig, tx_x: f64) -> Result<SimEstimate> {
    sim_joint_los_xs(config, &[tx_x])
}

/// Fraction of trials in which every transmitter in `txs` is LOS.
pub fn sim_joint_los(config: &SimConfig, txs: &TransmitterSet) -> Result<SimEstimate> {
    sim_joint_los_xs(config, txs.xs())
}

fn sim_joint_los_xs(config: &SimConfig, xs: &[f64]) -> Result<SimEstimate> {
    config.validate()?;
    let p = &config.params;
    let offset = p.offset();
    let need = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let window = config.window(need)?;
    let m = par_accumulate(config.n_trials, |i, m| {
        let mut rng = stream_rng(config.seed, i);
        let obstacles = sample_obstacles_with(&p.lanes, window, &mut rng);
        m.push(indicator(xs.iter().all(|&x| !obstacles.is_blocked(x, 0.0, offset))));
    });
    Ok(SimEstimate::bernoulli(&m, config.seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageKind {
    /// LOS to every detectable transmitter.
    Full,
    /// LOS to at least `k >= 1` detectable transmitters.
    AtLeast(usize),
}

impl CoverageKind {
    pub fn covered(&self, n_tx: usize, n_los: usize, include_empty: bool) -> bool {
        match *self {
            CoverageKind::Full if n_tx == 0 => include_empty,
            CoverageKind::Full => n_los == n_tx,
            CoverageKind::AtLeast(k) => n_los >= k,
        }
    }

    pub fn label(&self) -> String {
        match self {
            CoverageKind::Full => "full".to_string(),
            CoverageKind::AtLeast(k) => format!("at-least-{k}"),
        }
    }
}

/// One coverage trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub n_tx: usize,
    pub n_los: usize,
    pub covered: bool,
}

struct CoverageScene {
    half_xi: f64,
    window: Window,
}

fn coverage_scene(config: &SimConfig) -> Result<CoverageScene> {
    config.validate()?;
    let half_xi = match config.params.window_length() {
        Ok(xi) => 0.5 * xi,
        Err(Error::NoDetectableRegion { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    let window = config.window(half_xi)?;
    Ok(CoverageScene { half_xi, window })
}

fn coverage_trial(config: &SimConfig, scene: &CoverageScene, kind: CoverageKind, include_empty: bool, i: u64) -> TrialRecord {
    let p = &config.params;
    let mut rng = stream_rng(config.seed, i);
    let txs = if scene.half_xi > 0.0 {
        sample_transmitters(p.lambda_t, scene.half_xi, &mut rng)
    } else {
        TransmitterSet::new(Vec::new()).expect("empty set")
    };
    let obstacles = sample_obstacles_with(&p.lanes, scene.window, &mut rng);
    let offset = p.offset();
    let n_los = txs
        .xs()
        .iter()
        .filter(|&&x| !obstacles.is_blocked(x, 0.0, offset))
        .count();
    TrialRecord {
        trial: i,
        n_tx: txs.len(),
        n_los,
        covered: kind.covered(txs.len(), n_los, include_empty),
    }
}

/// Coverage of the typical receiver. Each trial resamples both the
/// transmitters on the detectable segment and the obstacle field.
pub fn sim_coverage(config: &SimConfig, kind: CoverageKind, include_empty: bool) -> Result<SimEstimate> {
    sim_coverage_detailed(config, kind, include_empty).map(|(e, _)| e)
}

/// As [`sim_coverage`], also returning the contribution of each
/// transmitter count `n` to the estimate.
pub fn sim_coverage_detailed(config: &SimConfig, kind: CoverageKind, include_empty: bool) -> Result<(SimEstimate, Vec<f64>)> {
    let scene = coverage_scene(config)?;
    let m = par_accumulate(config.n_trials, |i, m| {
        let r = coverage_trial(config, &scene, kind, include_empty, i);
        m.push_bucketed(r.n_tx, indicator(r.covered));
    });
    let n = m.count as f64;
    let terms = m.buckets.iter().map(|s| s / n).collect();
    Ok((SimEstimate::bernoulli(&m, config.seed), terms))
}

/// Every coverage trial, in trial order.
pub fn sim_coverage_trials(config: &SimConfig, kind: CoverageKind, include_empty: bool) -> Result<Vec<TrialRecord>> {
    use rayon::prelude::*;
    let scene = coverage_scene(config)?;
    Ok((0..config.n_trials)
        .into_par_iter()
        .map(|i| coverage_trial(config, &scene, kind, include_empty, i))
        .collect())
}

/// CSV dump: one row per trial.
pub fn write_trials_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "n_tx", "n_los", "covered"])?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.n_tx.to_string(),
            r.n_los.to_string(),
            u8::from(r.covered).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Grid resolution of the volume-fraction probe, in mean half-lengths.
pub const VOLUME_STEP_HALF_LENGTHS: f64 = 0.01;

/// Default probe half-length, in mean half-lengths.
pub const VOLUME_PROBE_HALF_LENGTHS: f64 = 50.0;

/// Fraction of a probe interval on `y = d1` covered by the (projected)
/// obstacle field, estimated on a grid of step `0.01/mu`. The standard
/// error comes from the spread of the per-trial fractions.
pub fn sim_volume_fraction(config: &SimConfig) -> Result<SimEstimate> {
    config.validate()?;
    let p = &config.params;
    let mu_max = p.lanes.iter().map(|l| l.mu).fold(0.0, f64::max);
    let mu_min = p.lanes.iter().map(|l| l.mu).fold(f64::INFINITY, f64::min);
    if p.lanes.is_empty() {
        return Ok(SimEstimate {
            value: 0.0,
            stderr: 0.0,
            n_trials: config.n_trials,
            seed: config.seed,
            ergodic: false,
            low_count: true,
        });
    }
    let half = config.l_win.unwrap_or(VOLUME_PROBE_HALF_LENGTHS / mu_min);
    let step = VOLUME_STEP_HALF_LENGTHS / mu_max;
    let points = ((2.0 * half / step).floor() as usize).max(1);
    let max_ratio = p.lanes.iter().map(|l| l.height / p.d1).fold(0.0, f64::max);
    let sample_window = Window::symmetric(half * max_ratio.max(1.0));

    let m = par_accumulate(config.n_trials, |i, m| {
        let mut rng = stream_rng(config.seed, i);
        let obstacles = sample_obstacles_with(&p.lanes, sample_window, &mut rng);
        let covered = covered_grid_points(&obstacles, p.d1, -half, step, points);
        m.push(covered as f64 / points as f64);
    });
    Ok(SimEstimate {
        value: m.mean(),
        stderr: m.stderr(),
        n_trials: m.count,
        seed: config.seed,
        ergodic: false,
        low_count: m.count < LOW_COUNT,
    })
}

/// Counts grid points `lo + (i + 1/2) step`, `i < points`, covered by the
/// union of obstacles projected onto `y = d1` through the origin.
fn covered_grid_points(obstacles: &ObstacleSet, d1: f64, lo: f64, step: f64, points: usize) -> usize {
    let mut intervals: Vec<(f64, f64)> = obstacles
        .obstacles()
        .iter()
        .map(|o| {
            let s = d1 / o.lane_height;
            (o.left() * s, o.right() * s)
        })
        .collect();
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut count = 0;
    let mut merged: Option<(f64, f64)> = None;
    let mut flush = |(a, b): (f64, f64)| {
        // indices with lo + (i + 0.5) step in [a, b]
        let first = ((a - lo) / step - 0.5).ceil().max(0.0);
        let last = ((b - lo) / step - 0.5).floor().min(points as f64 - 1.0);
        if last >= first {
            count += (last - first) as usize + 1;
        }
    };
    for (a, b) in intervals {
        merged = match merged {
            Some((ma, mb)) if a <= mb => Some((ma, mb.max(b))),
            Some(done) => {
                flush(done);
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some(done) = merged {
        flush(done);
    }
    count
}

/// Time-averaged LOS indicator of one receiver moving at speed `v` while
/// obstacles drift at `v_o`, each in a direction drawn uniformly at time 0,
/// towards a static transmitter at `(tx_x, d1 + d2)`.
///
/// `n_trials` independent realizations are run; the reported error is the
/// batch-means standard error over [`ERGODIC_BATCHES`] consecutive time
/// batches of each realization.
pub fn sim_ergodic_los(config: &SimConfig, tx_x: f64) -> Result<SimEstimate> {
    use rand::Rng;
    use rayon::prelude::*;

    config.validate()?;
    let SimMode::Ergodic { horizon, dt } = config.mode else {
        return Err(Error::Usage("sim_ergodic_los needs an ergodic SimConfig".into()));
    };
    if !(horizon > 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "horizon and time step must be positive",
        });
    }
    let p = &config.params;
    let offset = p.offset();
    let (v, v_o) = (p.speeds.v, p.speeds.v_o);
    let steps = ((horizon / dt).ceil() as usize).max(ERGODIC_BATCHES);
    let dt = horizon / steps as f64;
    let per_batch = steps / ERGODIC_BATCHES;

    let batch_means: Vec<Vec<f64>> = (0..config.n_trials)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(config.seed, r);
            let heading = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let receiver = |t: f64| heading * v * t;

            // the path point on each lane moves linearly in t
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for lane in &p.lanes {
                for t in [0.0, horizon] {
                    let q = project_lane(tx_x, lane.height, offset, receiver(t));
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
            }
            let drift = v_o * horizon;
            let window = Window::new(lo - drift, hi + drift);
            let field = sample_obstacles_with(&p.lanes, window, &mut rng);
            let (mut right, mut left): (Vec<Obstacle>, Vec<Obstacle>) = (Vec::new(), Vec::new());
            for o in field.obstacles() {
                if rng.random::<bool>() {
                    right.push(*o);
                } else {
                    left.push(*o);
                }
            }
            // each direction group is rigid, so query it in its own frame
            let groups = [
                (v_o, ObstacleSet::new(right, window, field.margin())),
                (-v_o, ObstacleSet::new(left, window, field.margin())),
            ];

            let mut means = Vec::with_capacity(ERGODIC_BATCHES);
            let mut step = 0;
            for b in 0..ERGODIC_BATCHES {
                let end = if b + 1 == ERGODIC_BATCHES { steps } else { (b + 1) * per_batch };
                let mut los = 0usize;
                let len = end - step;
                while step < end {
                    let t = (step as f64 + 0.5) * dt;
                    let rx = receiver(t);
                    let blocked = groups
                        .iter()
                        .any(|(vel, set)| set.is_blocked(tx_x - vel * t, rx - vel * t, offset));
                    los += usize::from(!blocked);
                    step += 1;
                }
                means.push(los as f64 / len as f64);
            }
            means
        })
        .collect();

    let mut m = Moments::default();
    let mut weighted = 0.0;
    for realization in &batch_means {
        for &b in realization {
            m.push(b);
        }
    }
    // overall time average weights batches by length; equal up to one batch remainder
    let total_steps = steps as f64 * config.n_trials as f64;
    for realization in &batch_means {
        for (b, &mean) in realization.iter().enumerate() {
            let len = if b + 1 == ERGODIC_BATCHES {
                steps - per_batch * (ERGODIC_BATCHES - 1)
            } else {
                per_batch
            };
            weighted += mean * len as f64;
        }
    }
    let value = weighted / total_steps;
    let los_steps = weighted.round() as u64;
    let all = total_steps as u64;
    Ok(SimEstimate {
        value,
        stderr: m.stderr(),
        n_trials: config.n_trials,
        seed: config.seed,
        ergodic: true,
        low_count: los_steps < LOW_COUNT || all - los_steps < LOW_COUNT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{los_prob_pair, los_prob_single, los_prob_single_multilane};
    use crate::params::{Lane, Speeds};

    fn scenario(lambda_b: f64, mu: f64) -> ScenarioParams {
        ScenarioParams::single_lane(0.004, lambda_b, mu, 10.0, 10.0, 1500.0)
    }

    #[test]
    fn obstacle_free_is_always_los() {
        let cfg = SimConfig::new(scenario(0.0, 0.4), 1000, 1);
        let e = sim_los_single(&cfg, 250.0).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.stderr, 0.0);
        assert!(e.low_count);
    }

    #[test]
    fn single_matches_closed_form() {
        let cfg = SimConfig::new(scenario(0.02, 0.4), 100_000, 11);
        let e = sim_los_single(&cfg, 37.0).unwrap();
        assert!(e.covers(los_prob_single(0.02, 0.4), 3.0), "{e:?}");
    }

    #[test]
    fn two_lane_superposition() {
        let mut p = scenario(0.01, 0.4);
        p.lanes.push(Lane { height: 5.0, ..p.lanes[0] });
        let cfg = SimConfig::new(p.clone(), 100_000, 12);
        let e = sim_los_single(&cfg, -80.0).unwrap();
        assert!(e.covers(los_prob_single_multilane(&p.lanes), 3.0), "{e:?}");
        assert!((los_prob_single_multilane(&p.lanes) - 0.904_837_418).abs() < 1e-9);
    }

    #[test]
    fn pair_matches_closed_form() {
        let p = scenario(0.02, 0.4);
        let cfg = SimConfig::new(p.clone(), 100_000, 13);
        let txs = TransmitterSet::new(vec![0.0, 10.0]).unwrap();
        let e = sim_joint_los(&cfg, &txs).unwrap();
        assert!(e.covers(los_prob_pair(&p, 0.0, 10.0).unwrap(), 3.0), "{e:?}");

        let far = TransmitterSet::new(vec![-500.0, 500.0]).unwrap();
        let e = sim_joint_los(&cfg, &far).unwrap();
        assert!(e.covers((-0.2f64).exp(), 3.0), "{e:?}");
    }

    #[test]
    fn window_too_small_is_reported() {
        let mut cfg = SimConfig::new(scenario(0.02, 0.4), 10, 1);
        cfg.l_win = Some(10.0);
        assert!(matches!(sim_los_single(&cfg, 100.0), Err(Error::WindowTooSmall { .. })));
    }

    #[test]
    fn coverage_without_obstacles_counts_transmitters() {
        let p = scenario(0.0, 0.4);
        let xi = p.window_length().unwrap();
        let cfg = SimConfig::new(p, 20_000, 3);
        let e = sim_coverage(&cfg, CoverageKind::Full, false).unwrap();
        assert!(e.covers(1.0 - (-0.004 * xi).exp(), 3.0) || e.value == 1.0);
        let e = sim_coverage(&cfg, CoverageKind::AtLeast(200), false).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn coverage_without_detectable_region() {
        let mut p = scenario(0.02, 0.4);
        p.detection = crate::params::Detection::Radius(15.0);
        let cfg = SimConfig::new(p, 100, 3);
        assert_eq!(sim_coverage(&cfg, CoverageKind::Full, true).unwrap().value, 1.0);
        assert_eq!(sim_coverage(&cfg, CoverageKind::Full, false).unwrap().value, 0.0);
    }

    #[test]
    fn trial_dump_matches_estimate() {
        let cfg = SimConfig::new(scenario(0.014, 0.4), 3000, 21);
        let recs = sim_coverage_trials(&cfg, CoverageKind::AtLeast(2), false).unwrap();
        let e = sim_coverage(&cfg, CoverageKind::AtLeast(2), false).unwrap();
        let frac = recs.iter().filter(|r| r.covered).count() as f64 / recs.len() as f64;
        assert_eq!(frac, e.value);
        let mut buf = Vec::new();
        write_trials_csv(&recs[..3], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trial,n_tx,n_los,covered\n0,"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn volume_fraction_matches_complement() {
        let cfg = SimConfig::new(scenario(0.02, 0.4), 4000, 5);
        let e = sim_volume_fraction(&cfg).unwrap();
        let expected = 1.0 - (-0.1f64).exp();
        assert!(e.covers(expected, 3.0), "{e:?} vs {expected}");
        assert_eq!(sim_volume_fraction(&SimConfig::new(scenario(0.0, 0.4), 50, 5)).unwrap().value, 0.0);
        let points = sim_volume_fraction(&SimConfig::new(scenario(0.02, 1e6), 200, 5)).unwrap();
        assert!(points.value < 1e-4);
    }

    #[test]
    fn grid_counting() {
        let set = ObstacleSet::new(
            vec![
                Obstacle { center: 1.0, v_tilde: 1.0, w_tilde: 1.0, lane_height: 10.0 },
                Obstacle { center: 2.5, v_tilde: 0.5, w_tilde: 0.5, lane_height: 10.0 },
                Obstacle { center: 8.0, v_tilde: 0.2, w_tilde: 0.2, lane_height: 10.0 },
            ],
            Window::new(0.0, 10.0),
            0.0,
        );
        // grid 0.5, 1.5, ..., 9.5; union [0, 3] and [7.8, 8.2]
        assert_eq!(covered_grid_points(&set, 10.0, 0.0, 1.0, 10), 3);
    }

    #[test]
    fn ergodic_frozen_scene_is_indicator() {
        let mut p = scenario(0.02, 0.4);
        p.speeds = Speeds { v: 0.0, v_o: 0.0 };
        let cfg = SimConfig::ergodic(p, 4);
        let e = sim_ergodic_los(&cfg, 30.0).unwrap();
        assert!(e.value == 0.0 || e.value == 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn ergodic_obstacle_motion_alone_mixes() {
        let mut p = scenario(0.02, 0.4);
        p.speeds = Speeds { v: 0.0, v_o: 10.0 };
        let cfg = SimConfig::ergodic(p, 8);
        let e = sim_ergodic_los(&cfg, 30.0).unwrap();
        assert!(e.covers(los_prob_single(0.02, 0.4), 3.0), "{e:?}");
    }

    #[test]
    fn ergodic_requires_ergodic_mode() {
        let cfg = SimConfig::new(scenario(0.02, 0.4), 1, 1);
        assert!(sim_ergodic_los(&cfg, 0.0).is_err());
    }

    #[test]
    fn calibration_three_sigma_coverage() {
        // 99.7% intervals should cover the closed form in at least 99% of runs
        let p = scenario(0.02, 0.4);
        let exact = los_prob_single(0.02, 0.4);
        let runs = 200;
        let hits = (0..runs)
            .filter(|&r| {
                let cfg = SimConfig::new(p.clone(), 2000, 1000 + r);
                sim_los_single(&cfg, 0.0).unwrap().covers(exact, 3.0)
            })
            .count();
        assert!(hits as f64 >= 0.99 * runs as f64, "{hits}/{runs}");
    }

    #[test]
    fn snapshot_estimates_reproducible_across_pools() {
        let cfg = SimConfig::new(scenario(0.014, 0.2), 5000, 99);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sim_coverage(&cfg, CoverageKind::Full, false).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn wider_window_does_not_shift_estimate() {
        let p = scenario(0.02, 0.4);
        let tight = sim_los_single(&SimConfig::new(p.clone(), 50_000, 31), 100.0).unwrap();
        let mut wide_cfg = SimConfig::new(p, 50_000, 32);
        wide_cfg.l_win = Some(2000.0);
        let wide = sim_los_single(&wide_cfg, 100.0).unwrap();
        let se = tight.stderr.hypot(wide.stderr);
        assert!((tight.value - wide.value).abs() <= 3.0 * se);
    }
}
