//! Seeded samplers for the Poisson processes and the obstacle Boolean model.
//!
//! Every stochastic routine draws from a [`ChaCha8Rng`] obtained through
//! [`stream_rng`], keyed by a master seed and a stream index (trial number,
//! realization number, ...). Results therefore do not depend on how work is
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::geometry::{Obstacle, ObstacleSet, TransmitterSet, Window};
use crate::params::Lane;

/// Obstacle centers are drawn on the window extended by this many mean
/// half-lengths on each side.
pub const EDGE_MARGIN_HALF_LENGTHS: f64 = 20.0;

pub type SimRng = ChaCha8Rng;

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Poisson variate; zero mean gives zero.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    dist.sample(rng) as u64
}

/// Homogeneous PPP of `intensity` on `window`, sorted.
pub fn sample_ppp<R: Rng + ?Sized>(intensity: f64, window: Window, rng: &mut R) -> Vec<f64> {
    if window.is_empty() {
        return Vec::new();
    }
    let n = poisson_count(intensity * window.len(), rng);
    let mut pts: Vec<f64> = (0..n)
        .map(|_| window.lo + window.len() * rng.random::<f64>())
        .collect();
    pts.sort_by(f64::total_cmp);
    pts
}

/// Transmitters of intensity `lambda_t` on `[-half, half]`.
pub fn sample_transmitters<R: Rng + ?Sized>(lambda_t: f64, half: f64, rng: &mut R) -> TransmitterSet {
    let xs = sample_ppp(lambda_t, Window::symmetric(half), rng);
    // ties have probability zero under a continuous law; drop any that appear
    let mut xs = xs;
    xs.dedup();
    TransmitterSet::new(xs).expect("sorted, deduplicated, finite")
}

pub fn edge_margin(lanes: &[Lane]) -> f64 {
    lanes
        .iter()
        .map(|l| EDGE_MARGIN_HALF_LENGTHS / l.mu)
        .fold(0.0, f64::max)
}

/// Boolean-model realization over `window`: per lane, centers form a PPP on
/// the window widened by that lane's edge margin, and both half-lengths are
/// i.i.d. exponential with mean `1/mu`.
pub fn sample_obstacles_with<R: Rng + ?Sized>(lanes: &[Lane], window: Window, rng: &mut R) -> ObstacleSet {
    let mut obstacles = Vec::new();
    for lane in lanes {
        if lane.lambda_b <= 0.0 {
            continue;
        }
        let extended = window.widen(EDGE_MARGIN_HALF_LENGTHS / lane.mu);
        let half_len = Exp::new(lane.mu).expect("positive mu");
        for center in sample_ppp(lane.lambda_b, extended, rng) {
            obstacles.push(Obstacle {
                center,
                v_tilde: half_len.sample(rng),
                w_tilde: half_len.sample(rng),
                lane_height: lane.height,
            });
        }
    }
    ObstacleSet::new(obstacles, window, edge_margin(lanes))
}

/// Deterministic in `seed`.
pub fn sample_obstacles(lanes: &[Lane], window: Window, seed: u64) -> ObstacleSet {
    sample_obstacles_with(lanes, window, &mut stream_rng(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lane(lambda_b: f64, mu: f64) -> Lane {
        Lane {
            lambda_b,
            mu,
            height: 10.0,
        }
    }

    #[test]
    fn empty_when_no_obstacles() {
        let set = sample_obstacles(&[lane(0.0, 0.4)], Window::symmetric(5000.0), 1);
        assert!(set.is_empty());
    }

    #[test]
    fn deterministic_given_seed() {
        let lanes = [lane(0.02, 0.4)];
        let w = Window::symmetric(1000.0);
        assert_eq!(sample_obstacles(&lanes, w, 9), sample_obstacles(&lanes, w, 9));
        assert_ne!(sample_obstacles(&lanes, w, 9), sample_obstacles(&lanes, w, 10));
    }

    #[test]
    fn streams_are_distinct() {
        let a: u64 = stream_rng(3, 0).random();
        let b: u64 = stream_rng(3, 1).random();
        assert_ne!(a, b);
    }

    #[test]
    fn count_mean_within_three_sigma() {
        let lanes = [lane(0.02, 0.4)];
        let w = Window::symmetric(5000.0);
        let expected = 0.02 * (10_000.0 + 2.0 * 20.0 / 0.4);
        let draws = 1000;
        let total: usize = (0..draws)
            .map(|i| sample_obstacles_with(&lanes, w, &mut stream_rng(77, i)).len())
            .sum();
        let mean = total as f64 / draws as f64;
        let se = (expected / draws as f64).sqrt();
        assert!((mean - expected).abs() <= 3.0 * se, "{mean} vs {expected}");
    }

    #[test]
    fn lengths_follow_exponential_and_erlang_moments() {
        let lanes = [lane(0.05, 0.4)];
        let set = sample_obstacles(&lanes, Window::symmetric(50_000.0), 5);
        let n = set.len() as f64;
        let halves: Vec<f64> = set
            .obstacles()
            .iter()
            .flat_map(|o| [o.v_tilde, o.w_tilde])
            .collect();
        let m = halves.len() as f64;
        let mean_half = halves.iter().sum::<f64>() / m;
        // Exp(mu): sd = 1/mu
        assert!((mean_half - 2.5).abs() <= 3.0 * 2.5 / m.sqrt(), "{mean_half}");
        let mean_full = set.obstacles().iter().map(|o| o.length()).sum::<f64>() / n;
        // Erlang-2: sd = sqrt(2)/mu
        assert!((mean_full - 5.0).abs() <= 3.0 * 2f64.sqrt() * 2.5 / n.sqrt(), "{mean_full}");
    }

    #[test]
    fn centers_stay_in_extended_window_and_sorted() {
        let lanes = [lane(0.05, 0.4), Lane { height: 5.0, ..lane(0.03, 1.0) }];
        let w = Window::new(-100.0, 300.0);
        let set = sample_obstacles(&lanes, w, 2);
        assert_eq!(set.margin(), 50.0);
        assert!(set.obstacles().windows(2).all(|p| p[0].center <= p[1].center));
        for o in set.obstacles() {
            let m = EDGE_MARGIN_HALF_LENGTHS / if o.lane_height == 10.0 { 0.4 } else { 1.0 };
            assert!(o.center >= w.lo - m && o.center <= w.hi + m);
        }
    }
}
