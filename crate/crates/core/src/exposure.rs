//! Far-field power-density prediction at a head position.
//!
//! `S = P_T · G / (4π R²)`, optionally scaled by the ground-reflection factor
//! 2.56 used for ground-level predictions. Results are in mW/cm².

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::array::{array_gain, ArrayConfig, BeamWeights};
use crate::codebook::BeamId;
use crate::error::{Error, Result};
use crate::geometry::{direction_to, distance, ArrayPose, Point3D};

/// Working compliance threshold, mW/cm².
pub const WORKING_LIMIT_MW_CM2: f64 = 0.3;
/// FCC general-population limit for the mmWave bands, mW/cm².
pub const FCC_GENERAL_POPULATION_MW_CM2: f64 = 1.0;
/// Field-enhancement factor for a perfectly reflecting ground (1.6²).
pub const GROUND_REFLECTION_FACTOR: f64 = 2.56;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExposureParams {
    pub near_field_floor_m: f64,
    pub ground_reflection: bool,
}

impl Default for ExposureParams {
    fn default() -> Self {
        Self {
            near_field_floor_m: 0.5,
            ground_reflection: true,
        }
    }
}

impl ExposureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.near_field_floor_m >= 0.0) {
            return Err(Error::InvalidConfig("near_field_floor_m must be >= 0".into()));
        }
        Ok(())
    }

    pub fn check_range(&self, range_m: f64) -> Result<()> {
        if !(range_m > 0.0) || range_m < self.near_field_floor_m {
            return Err(Error::NearField {
                range_m,
                floor_m: self.near_field_floor_m,
            });
        }
        Ok(())
    }

    fn reflection(&self) -> f64 {
        if self.ground_reflection {
            GROUND_REFLECTION_FACTOR
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureSample {
    pub position: Point3D,
    pub power_density: f64,
    pub beam: BeamId,
    pub range_m: f64,
}

/// Power density in mW/cm² for a known gain toward the head.
pub fn power_density_from_gain(tx_power_dbm: f64, gain_db: f64, range_m: f64, params: &ExposureParams) -> Result<f64> {
    params.check_range(range_m)?;
    let eirp_w = 10f64.powf((tx_power_dbm + gain_db - 30.0) / 10.0);
    let w_per_m2 = params.reflection() * eirp_w / (4.0 * PI * range_m * range_m);
    // 1 W/m² = 0.1 mW/cm²
    Ok(0.1 * w_per_m2)
}

/// Power density at `head` radiated by beam `w`.
pub fn power_density(
    cfg: &ArrayConfig,
    w: &BeamWeights,
    tx_power_dbm: f64,
    head: &Point3D,
    pose: &ArrayPose,
    params: &ExposureParams,
) -> Result<f64> {
    let range = distance(head, &pose.position);
    params.check_range(range)?;
    let dir = direction_to(head, pose)?;
    let gain = array_gain(cfg, w, &dir)?;
    power_density_from_gain(tx_power_dbm, gain, range, params)
}

/// True when the sample is strictly above `limit_mw_cm2`.
pub fn exceeds_limit(s: &ExposureSample, limit_mw_cm2: f64) -> bool {
    s.power_density > limit_mw_cm2
}
