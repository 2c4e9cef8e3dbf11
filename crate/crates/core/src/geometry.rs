//! Projections between the three lines and the exact blockage test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point where the segment from `(receiver_x, 0)` to `(x, d1 + d2)` crosses
/// the obstacle line `y = d1`.
pub fn project_tx(x: f64, d1: f64, d2: f64, receiver_x: f64) -> f64 {
    project_lane(x, d1, d1 + d2, receiver_x)
}

/// x-coordinate of the same path at height `h`, where `offset = d1 + d2`.
pub fn project_lane(x: f64, h: f64, offset: f64, receiver_x: f64) -> f64 {
    receiver_x + (x - receiver_x) * (h / offset)
}

/// A zero-width obstacle segment `[center - v_tilde, center + w_tilde]` on
/// the line `y = lane_height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: f64,
    pub v_tilde: f64,
    pub w_tilde: f64,
    pub lane_height: f64,
}

impl Obstacle {
    pub fn left(&self) -> f64 {
        self.center - self.v_tilde
    }

    pub fn right(&self) -> f64 {
        self.center + self.w_tilde
    }

    pub fn contains(&self, x: f64) -> bool {
        self.left() <= x && x <= self.right()
    }

    pub fn length(&self) -> f64 {
        self.v_tilde + self.w_tilde
    }
}

/// Closed interval `[lo, hi]` on a line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Self {
        Window { lo, hi }
    }

    pub fn symmetric(half: f64) -> Self {
        Window { lo: -half, hi: half }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    pub fn widen(&self, margin: f64) -> Self {
        Window {
            lo: self.lo - margin,
            hi: self.hi + margin,
        }
    }

    pub fn shift(&self, c: f64) -> Self {
        Window {
            lo: self.lo + c,
            hi: self.hi + c,
        }
    }
}

/// Per-lane lookup: obstacles sorted by center with running extremes of
/// their endpoints, so a point query is two binary searches.
#[derive(Debug, Clone, PartialEq)]
struct LaneIndex {
    height: f64,
    centers: Vec<f64>,
    // max right end over obstacles[..=i]
    prefix_max_right: Vec<f64>,
    // min left end over obstacles[i..]
    suffix_min_left: Vec<f64>,
}

impl LaneIndex {
    fn build(height: f64, sorted: &[&Obstacle]) -> Self {
        let centers: Vec<f64> = sorted.iter().map(|o| o.center).collect();
        let mut prefix_max_right = Vec::with_capacity(sorted.len());
        let mut running = f64::NEG_INFINITY;
        for o in sorted {
            running = running.max(o.right());
            prefix_max_right.push(running);
        }
        let mut suffix_min_left = vec![0.0; sorted.len()];
        let mut running = f64::INFINITY;
        for (i, o) in sorted.iter().enumerate().rev() {
            running = running.min(o.left());
            suffix_min_left[i] = running;
        }
        LaneIndex {
            height,
            centers,
            prefix_max_right,
            suffix_min_left,
        }
    }

    fn covers(&self, x: f64) -> bool {
        let split = self.centers.partition_point(|&c| c <= x);
        (split > 0 && self.prefix_max_right[split - 1] >= x)
            || (split < self.centers.len() && self.suffix_min_left[split] <= x)
    }
}

/// One realization of the obstacle field, possibly over several lanes.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSet {
    obstacles: Vec<Obstacle>,
    window: Window,
    margin: f64,
    lanes: Vec<LaneIndex>,
}

impl ObstacleSet {
    /// Builds the set, sorting by center. `window` is the region of interest
    /// and `margin` the extension on both sides over which centers were drawn.
    pub fn new(mut obstacles: Vec<Obstacle>, window: Window, margin: f64) -> Self {
        obstacles.sort_by(|a, b| a.center.total_cmp(&b.center));
        let mut heights: Vec<f64> = obstacles.iter().map(|o| o.lane_height).collect();
        heights.sort_by(f64::total_cmp);
        heights.dedup();
        let lanes = heights
            .into_iter()
            .map(|h| {
                let on_lane: Vec<&Obstacle> =
                    obstacles.iter().filter(|o| o.lane_height == h).collect();
                LaneIndex::build(h, &on_lane)
            })
            .collect();
        ObstacleSet {
            obstacles,
            window,
            margin,
            lanes,
        }
    }

    pub fn empty(window: Window) -> Self {
        Self::new(Vec::new(), window, 0.0)
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    /// Whether some obstacle on lane `height` covers `x`.
    pub fn covers_at(&self, height: f64, x: f64) -> bool {
        self.lanes
            .iter()
            .find(|l| l.height == height)
            .is_some_and(|l| l.covers(x))
    }

    /// Whether the segment from `(receiver_x, 0)` to `(tx_x, offset)` meets
    /// any obstacle. Containment is closed at both ends.
    pub fn is_blocked(&self, tx_x: f64, receiver_x: f64, offset: f64) -> bool {
        self.lanes
            .iter()
            .any(|l| l.covers(project_lane(tx_x, l.height, offset, receiver_x)))
    }

    /// Same scene shifted by `c` along x.
    pub fn translated(&self, c: f64) -> Self {
        let moved = self
            .obstacles
            .iter()
            .map(|o| Obstacle {
                center: o.center + c,
                ..*o
            })
            .collect();
        Self::new(moved, self.window.shift(c), self.margin)
    }
}

/// Free-function form of [`ObstacleSet::is_blocked`].
pub fn is_blocked(obstacles: &ObstacleSet, tx_x: f64, receiver_x: f64, offset: f64) -> bool {
    obstacles.is_blocked(tx_x, receiver_x, offset)
}

/// Strictly increasing transmitter x-coordinates on `y = d1 + d2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitterSet {
    xs: Vec<f64>,
}

impl TransmitterSet {
    pub fn new(xs: Vec<f64>) -> Result<Self> {
        let ordered = xs.iter().all(|x| x.is_finite()) && xs.windows(2).all(|w| w[0] < w[1]);
        if ordered {
            Ok(TransmitterSet { xs })
        } else {
            Err(Error::Unsorted)
        }
    }

    /// Sorts first; duplicates are rejected.
    pub fn from_unsorted(mut xs: Vec<f64>) -> Result<Self> {
        xs.sort_by(f64::total_cmp);
        Self::new(xs)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Projections onto `y = d1` for a receiver at the origin.
    pub fn projections(&self, d1: f64, d2: f64) -> Vec<f64> {
        self.xs.iter().map(|&x| project_tx(x, d1, d2, 0.0)).collect()
    }
}
