//! Closed-form joint LOS probabilities for transmitters at fixed positions.
//!
//! With one obstacle lane at `y = d1`, a transmitter at `x` is seen through
//! the projection `x_hat = d1 * x / (d1 + d2)`, and the receiver at the
//! origin is LOS to a set of transmitters iff no obstacle segment contains
//! any of their projections. The probability generating functional of the
//! obstacle-center PPP then gives, for sorted projections with gaps
//! `delta_k = x_hat_k - x_hat_{k-1}`,
//!
//! ```text
//! ln P = -2 lambda_b n / mu + sum_k (2/mu + delta_k) lambda_b exp(-mu delta_k)
//! ```
//!
//! The count factor `n` in the leading term is what makes one transmitter
//! reduce to `exp(-2 lambda_b / mu)` and two to the pair formula.

use crate::error::{Error, Result};
use crate::geometry::TransmitterSet;
use crate::params::{Lane, ScenarioParams};

/// LOS probability to one transmitter, `exp(-2 lambda_b / mu)`. It does not
/// depend on where the transmitter is.
pub fn los_prob_single(lambda_b: f64, mu: f64) -> f64 {
    (-2.0 * lambda_b / mu).exp()
}

/// Several independent lanes: the per-lane single-point probabilities
/// multiply and lane heights drop out.
pub fn los_prob_single_multilane(lanes: &[Lane]) -> f64 {
    let exponent: f64 = lanes.iter().map(|l| 2.0 * l.lambda_b / l.mu).sum();
    (-exponent).exp()
}

/// Log-probability gain from two neighbouring projections `gap` apart
/// sharing obstacles: `(2/mu + gap) lambda_b exp(-mu gap)`.
pub fn pair_overlap(lambda_b: f64, mu: f64, gap: f64) -> f64 {
    (2.0 / mu + gap) * lambda_b * (-mu * gap).exp()
}

/// `ln P(LOS to all)` for non-decreasing projections. Caller guarantees
/// ordering.
pub(crate) fn log_joint_sorted(lambda_b: f64, mu: f64, proj: &[f64]) -> f64 {
    let n = proj.len() as f64;
    let overlap: f64 = proj
        .windows(2)
        .map(|w| pair_overlap(lambda_b, mu, w[1] - w[0]))
        .sum();
    -2.0 * lambda_b * n / mu + overlap
}

/// Joint LOS probability given projections on the obstacle line. Coincident
/// projections are allowed; decreasing ones are not.
pub fn los_prob_joint_projected(lambda_b: f64, mu: f64, proj: &[f64]) -> Result<f64> {
    if proj.iter().any(|x| !x.is_finite()) || proj.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Unsorted);
    }
    Ok(log_joint_sorted(lambda_b, mu, proj).exp())
}

/// Joint LOS probability to every transmitter in `txs`.
pub fn los_prob_joint(params: &ScenarioParams, txs: &TransmitterSet) -> Result<f64> {
    let lane = params.single("los_prob_joint")?;
    let proj = txs.projections(params.d1, params.d2);
    Ok(log_joint_sorted(lane.lambda_b, lane.mu, &proj).exp())
}

/// Two transmitters, in either order (they may coincide).
pub fn los_prob_pair(params: &ScenarioParams, x1: f64, x2: f64) -> Result<f64> {
    let lane = params.single("los_prob_pair")?;
    let scale = params.projection_scale();
    let gap = (x2 - x1).abs() * scale;
    let (lb, mu) = (lane.lambda_b, lane.mu);
    Ok((-4.0 * lb / mu + 2.0 * lb * (-mu * gap).exp() / mu + lb * gap * (-mu * gap).exp()).exp())
}
