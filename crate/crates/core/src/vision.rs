//! Stochastic stand-in for the pose-estimation front end.
//!
//! Keypoint error is drawn as a deviation normalized by head size (half-normal,
//! truncated), converted to an angle at the entity's range, and split into
//! azimuth/downtilt components by a uniformly random bearing.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{direction_to, distance, ArrayPose, Direction, Point3D};

/// 0.95 quantile of the standard normal: the 0.9 quantile of a unit half-normal.
const HALF_NORMAL_Q90: f64 = 1.644_853_626_951_472_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvErrorModel {
    pub head_size_m: f64,
    /// Scale of the half-normal normalized deviation.
    pub scale: f64,
    /// Draws above this normalized deviation are rejected and redrawn.
    pub max_deviation: f64,
}

impl Default for CvErrorModel {
    fn default() -> Self {
        Self {
            head_size_m: 0.25,
            scale: Self::scale_for_q90(0.5),
            max_deviation: 2.0,
        }
    }
}

impl CvErrorModel {
    /// Half-normal scale whose 90th percentile is `q90`.
    pub fn scale_for_q90(q90: f64) -> f64 {
        q90 / HALF_NORMAL_Q90
    }

    /// Model that never perturbs anything.
    pub fn exact() -> Self {
        Self {
            scale: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.head_size_m > 0.0) {
            return Err(Error::InvalidConfig("head_size_m must be positive".into()));
        }
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidConfig("cv scale must be finite and >= 0".into()));
        }
        if !(self.max_deviation > 0.0) {
            return Err(Error::InvalidConfig("max_deviation must be positive".into()));
        }
        Ok(())
    }

    /// Draws a normalized deviation in `[0, max_deviation]`.
    pub fn draw_deviation<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        loop {
            let z: f64 = rng.sample(StandardNormal);
            let r = (z * self.scale).abs();
            if r <= self.max_deviation {
                return r;
            }
        }
    }
}

/// Angular error of one detection, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularError {
    pub magnitude: f64,
    pub azimuth: f64,
    pub downtilt: f64,
}

impl AngularError {
    pub const ZERO: AngularError = AngularError {
        magnitude: 0.0,
        azimuth: 0.0,
        downtilt: 0.0,
    };

    /// Error for normalized deviation `r` at `range_m`, split along `bearing` (radians).
    pub fn from_deviation(r: f64, head_size_m: f64, range_m: f64, bearing: f64) -> Self {
        let magnitude = (r * head_size_m / range_m).atan().to_degrees();
        let (s, c) = bearing.sin_cos();
        Self {
            magnitude,
            azimuth: magnitude * c,
            downtilt: magnitude * s,
        }
    }

    pub fn apply(&self, dir: &Direction) -> Direction {
        Direction::new(dir.azimuth + self.azimuth, dir.downtilt + self.downtilt)
    }
}

/// Draws one angular error at `range_m`.
pub fn angular_error<R: Rng + ?Sized>(model: &CvErrorModel, range_m: f64, rng: &mut R) -> AngularError {
    let r = model.draw_deviation(rng);
    if r == 0.0 {
        return AngularError::ZERO;
    }
    let bearing = rng.random_range(0.0..std::f64::consts::TAU);
    AngularError::from_deviation(r, model.head_size_m, range_m, bearing)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointType {
    Head,
    Device,
}

/// Ground-truth positions of one pedestrian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueEntities {
    pub head: Point3D,
    pub ue: Point3D,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub joint: JointType,
    /// Ground-truth position (the error model is purely angular).
    pub position: Point3D,
    pub range_m: f64,
    pub true_direction: Direction,
    /// Direction reported by the detector.
    pub direction: Direction,
    pub error: AngularError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedEntities {
    pub head: Detection,
    pub ue: Detection,
}

fn detect<R: Rng + ?Sized>(
    joint: JointType,
    p: &Point3D,
    pose: &ArrayPose,
    model: Option<&CvErrorModel>,
    rng: &mut R,
) -> Result<Detection> {
    let true_direction = direction_to(p, pose)?;
    let range_m = distance(p, &pose.position);
    let error = match model {
        Some(m) => angular_error(m, range_m, rng),
        None => AngularError::ZERO,
    };
    Ok(Detection {
        joint,
        position: *p,
        range_m,
        true_direction,
        direction: error.apply(&true_direction),
        error,
    })
}

/// Perturbs head and UE directions with independent draws from their own streams.
pub fn perturb<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    truth: &TrueEntities,
    pose: &ArrayPose,
    model: Option<&CvErrorModel>,
    head_rng: &mut R1,
    ue_rng: &mut R2,
) -> Result<DetectedEntities> {
    Ok(DetectedEntities {
        head: detect(JointType::Head, &truth.head, pose, model, head_rng)?,
        ue: detect(JointType::Device, &truth.ue, pose, model, ue_rng)?,
    })
}
