//! Scenario constants and the detectability geometry.
//!
//! All lengths are meters and all intensities are per meter. Receivers live on
//! the x-axis, obstacle lanes on lines `y = h` with `0 < h < d1 + d2` (the
//! default single lane sits at `h = d1`), and transmitters on `y = d1 + d2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Link-budget constants. All powers are linear, not dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Transmit power.
    pub p: f64,
    /// Noise power.
    pub sigma: f64,
    /// LOS path-loss exponent.
    pub alpha_los: f64,
    /// SNR detection threshold.
    pub tau: f64,
}

impl RadioParams {
    pub fn new(p: f64, sigma: f64, alpha_los: f64, tau: f64) -> Result<Self> {
        let radio = RadioParams {
            p,
            sigma,
            alpha_los,
            tau,
        };
        radio.validate()?;
        Ok(radio)
    }

    pub fn validate(&self) -> Result<()> {
        positive("p", self.p)?;
        positive("sigma", self.sigma)?;
        positive("alpha_los", self.alpha_los)?;
        positive("tau", self.tau)
    }

    /// Averaged LOS SNR at distance `d`.
    pub fn snr(&self, d: f64) -> f64 {
        self.p * d.powf(-self.alpha_los) / self.sigma
    }
}

/// One line of obstacles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    /// Obstacle-center intensity (1/m).
    pub lambda_b: f64,
    /// Inverse mean half-length (1/m).
    pub mu: f64,
    /// Height of the lane above the receiver line (m).
    pub height: f64,
}

impl Lane {
    pub fn mean_half_length(&self) -> f64 {
        1.0 / self.mu
    }
}

/// How the detection radius is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detection {
    Radio(RadioParams),
    Radius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Speeds {
    /// Receiver speed (m/s).
    pub v: f64,
    /// Obstacle speed (m/s).
    pub v_o: f64,
}

/// Every constant of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    /// Transmitter intensity on `y = d1 + d2` (1/m).
    pub lambda_t: f64,
    pub lanes: Vec<Lane>,
    /// Receiver intensity on the x-axis (1/m).
    pub lambda_v: f64,
    pub d1: f64,
    pub d2: f64,
    pub detection: Detection,
    pub speeds: Speeds,
    /// When false, `d1` and `d2` may be below one meter.
    pub require_unit_offsets: bool,
}

impl ScenarioParams {
    /// Single obstacle lane at `h = d1` with the detection radius given directly.
    pub fn single_lane(lambda_t: f64, lambda_b: f64, mu: f64, d1: f64, d2: f64, d_star: f64) -> Self {
        ScenarioParams {
            lambda_t,
            lanes: vec![Lane {
                lambda_b,
                mu,
                height: d1,
            }],
            lambda_v: 0.0,
            d1,
            d2,
            detection: Detection::Radius(d_star),
            speeds: Speeds::default(),
            require_unit_offsets: true,
        }
    }

    /// `lambda_t = 4/km`, `lambda_b = 20/km`, mean half-length 2.5 m,
    /// `d1 = d2 = 10 m`, `d_star = 1.5 km`, `lambda_v = 30/km`.
    pub fn standard() -> Self {
        let mut p = Self::single_lane(0.004, 0.02, 0.4, 10.0, 10.0, 1500.0);
        p.lambda_v = 0.03;
        p.speeds = Speeds { v: 10.0, v_o: 0.0 };
        p
    }

    /// Distance between the receiver line and the transmitter line.
    pub fn offset(&self) -> f64 {
        self.d1 + self.d2
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("lambda_t", self.lambda_t)?;
        non_negative("lambda_v", self.lambda_v)?;
        finite("d1", self.d1)?;
        finite("d2", self.d2)?;
        if self.require_unit_offsets {
            if self.d1 < 1.0 {
                return Err(invalid("d1", self.d1, "must be at least 1 m"));
            }
            if self.d2 < 1.0 {
                return Err(invalid("d2", self.d2, "must be at least 1 m"));
            }
        } else {
            positive("d1", self.d1)?;
            positive("d2", self.d2)?;
        }
        for lane in &self.lanes {
            non_negative("lambda_b", lane.lambda_b)?;
            positive("mu", lane.mu)?;
            if !(lane.height > 0.0 && lane.height < self.offset()) {
                return Err(invalid(
                    "lane_height",
                    lane.height,
                    "must lie strictly between the receiver and transmitter lines",
                ));
            }
        }
        match self.detection {
            Detection::Radio(r) => r.validate()?,
            Detection::Radius(d) => positive("d_star", d)?,
        }
        non_negative("v", self.speeds.v)?;
        non_negative("v_o", self.speeds.v_o)
    }

    pub fn d_star(&self) -> f64 {
        match self.detection {
            Detection::Radio(r) => detect_radius(&r),
            Detection::Radius(d) => d,
        }
    }

    /// The only lane, or an error naming `op` if there are several.
    pub fn single(&self, op: &'static str) -> Result<&Lane> {
        match self.lanes.as_slice() {
            [lane] => Ok(lane),
            lanes => Err(Error::MultiLane {
                op,
                lanes: lanes.len(),
            }),
        }
    }

    /// Projection factor `d1 / (d1 + d2)` onto the obstacle line.
    pub fn projection_scale(&self) -> f64 {
        self.d1 / self.offset()
    }

    /// Length `xi` of the detectable transmitter segment.
    pub fn window_length(&self) -> Result<f64> {
        window_length(self.d_star(), self.d1, self.d2)
    }

    /// Sets `mu` on every lane from a mean full obstacle length `2/mu`.
    pub fn set_mean_length(&mut self, mean_length: f64) {
        for lane in &mut self.lanes {
            lane.mu = 2.0 / mean_length;
        }
    }

    pub fn set_lambda_b(&mut self, lambda_b: f64) {
        for lane in &mut self.lanes {
            lane.lambda_b = lambda_b;
        }
    }
}

/// Largest distance at which the averaged LOS SNR exceeds the threshold:
/// `(p / (sigma * tau))^(1 / alpha_los)`.
pub fn detect_radius(radio: &RadioParams) -> f64 {
    (radio.p / (radio.sigma * radio.tau)).powf(1.0 / radio.alpha_los)
}

/// Length of the chord cut from `y = d1 + d2` by the disc of radius `d_star`
/// around the origin.
pub fn window_length(d_star: f64, d1: f64, d2: f64) -> Result<f64> {
    let offset = d1 + d2;
    if !(d_star > offset) {
        return Err(Error::NoDetectableRegion { d_star, offset });
    }
    // (d - o)(d + o) keeps precision when d_star is barely above the offset
    Ok(2.0 * ((d_star - offset) * (d_star + offset)).sqrt())
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason,
    }
}

fn finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, value, "must be finite"))
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, value, "must be positive and finite"))
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, value, "must be non-negative and finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_ratio_radius_is_one() {
        for alpha in [1.0, 2.0, 3.7] {
            let r = RadioParams::new(2.0, 1.0, alpha, 2.0).unwrap();
            assert_eq!(detect_radius(&r), 1.0);
        }
    }

    #[test]
    fn fig8_operating_radius() {
        let r = RadioParams::new(2.25e6, 1.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(detect_radius(&r), 1500.0, max_relative = 1e-14);
    }

    #[test]
    fn cube_root_radius() {
        let r = RadioParams::new(8.0, 1.0, 3.0, 1.0).unwrap();
        assert_relative_eq!(detect_radius(&r), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn detection_radius_is_snr_boundary() {
        let r = RadioParams::new(1e7, 2e-3, 2.5, 4.0).unwrap();
        let d = detect_radius(&r);
        assert_relative_eq!(r.snr(d), r.tau, max_relative = 1e-12);
        assert!(r.snr(d * 0.999) > r.tau);
        assert!(r.snr(d * 1.001) < r.tau);
    }

    #[test]
    fn window_lengths() {
        assert_relative_eq!(
            window_length(1500.0, 10.0, 10.0).unwrap(),
            2999.733321,
            epsilon = 1e-3
        );
        assert_relative_eq!(window_length(25.0, 10.0, 10.0).unwrap(), 30.0, epsilon = 1e-12);
        let tiny = window_length(20.0 + 1e-9, 10.0, 10.0).unwrap();
        assert!(tiny < 1e-3);
    }

    #[test]
    fn no_detectable_region() {
        assert!(matches!(
            window_length(20.0, 10.0, 10.0),
            Err(Error::NoDetectableRegion { .. })
        ));
        assert!(window_length(5.0, 10.0, 10.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(ScenarioParams::standard().validate().is_ok());

        let mut p = ScenarioParams::standard();
        p.d1 = 0.5;
        assert!(p.validate().is_err());
        p.require_unit_offsets = false;
        p.lanes[0].height = 0.25;
        assert!(p.validate().is_ok());

        let mut p = ScenarioParams::standard();
        p.lanes[0].mu = 0.0;
        assert!(p.validate().is_err());

        let mut p = ScenarioParams::standard();
        p.lanes[0].height = 20.0;
        assert!(p.validate().is_err());

        let mut p = ScenarioParams::standard();
        p.lanes[0].lambda_b = -1.0;
        assert!(p.validate().is_err());

        assert!(RadioParams::new(1.0, 0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn mean_length_sets_every_lane() {
        let mut p = ScenarioParams::standard();
        p.lanes.push(Lane {
            lambda_b: 0.01,
            mu: 1.0,
            height: 5.0,
        });
        p.set_mean_length(5.0);
        assert!(p.lanes.iter().all(|l| l.mu == 0.4));
        assert!(p.single("x").is_err());
    }
}
