//! Spatially consistent LOS blockage for vehicular networks.
//!
//! Receivers move on the x-axis, obstacles are zero-width segments forming a
//! Boolean model on one or more parallel lanes, and transmitters sit on the
//! line `y = d1 + d2`. The crate provides closed-form joint-LOS
//! probabilities, full and k-LOS coverage of the typical receiver, and a
//! Monte-Carlo simulator that checks all of them.

pub mod analytic;
pub mod coverage;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod geometry;
pub mod inclusion_exclusion;
pub mod params;
pub mod poisson;
pub mod quadrature;
pub mod sampling;
pub mod scenario;
pub mod simulator;
pub mod validate;

pub use error::{Error, Result};
pub use estimate::{Method, ProbEstimate};
pub use geometry::{Obstacle, ObstacleSet, TransmitterSet, Window};
pub use params::{Detection, Lane, RadioParams, ScenarioParams, Speeds};
