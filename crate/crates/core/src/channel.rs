//! LOS link budget: UMi street-canyon pathloss, shadow fading and broadband SNR.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// Distances below this are clamped before evaluating the pathloss formula.
pub const MIN_PATHLOSS_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathlossModel {
    #[default]
    UmiStreetCanyonLos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub carrier_freq_ghz: f64,
    pub shadow_sigma_db: f64,
    pub pathloss_model: PathlossModel,
    pub bandwidth_mhz: f64,
    pub noise_figure_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_freq_ghz: 28.0,
            shadow_sigma_db: 4.0,
            pathloss_model: PathlossModel::UmiStreetCanyonLos,
            bandwidth_mhz: 100.0,
            noise_figure_db: 9.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.shadow_sigma_db >= 0.0) {
            return Err(Error::InvalidConfig("shadow_sigma_db must be >= 0".into()));
        }
        if !(self.carrier_freq_ghz > 0.0) {
            return Err(Error::InvalidConfig("carrier_freq_ghz must be positive".into()));
        }
        if !(self.bandwidth_mhz > 0.0) {
            return Err(Error::NonPositiveBandwidth(self.bandwidth_mhz));
        }
        Ok(())
    }

    pub fn noise_power_dbm(&self) -> Result<f64> {
        noise_power(self.bandwidth_mhz, self.noise_figure_db)
    }
}

/// Standard-normal deviate for one shadow-fading realisation.
pub fn sample_shadow<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pathloss {
    pub db: f64,
    /// The distance was below the model floor and was raised to it.
    pub clamped: bool,
}

/// LOS pathloss in dB. `shadow` is a standard-normal deviate scaled by the
/// configured shadow-fading sigma; `None` gives the deterministic part only.
pub fn pathloss_los(params: &ChannelParams, d3d: f64, shadow: Option<f64>) -> Result<Pathloss> {
    if !(d3d > 0.0) {
        return Err(Error::NonPositiveDistance(d3d));
    }
    let clamped = d3d < MIN_PATHLOSS_DISTANCE_M;
    let d = d3d.max(MIN_PATHLOSS_DISTANCE_M);
    let mean = match params.pathloss_model {
        PathlossModel::UmiStreetCanyonLos => 32.4 + 21.0 * d.log10() + 20.0 * params.carrier_freq_ghz.log10(),
    };
    let fading = shadow.map_or(0.0, |z| z * params.shadow_sigma_db);
    Ok(Pathloss {
        db: mean + fading,
        clamped,
    })
}

/// Receiver noise power `-174 + 10·log10(BW) + NF`, dBm.
pub fn noise_power(bandwidth_mhz: f64, noise_figure_db: f64) -> Result<f64> {
    if !(bandwidth_mhz > 0.0) {
        return Err(Error::NonPositiveBandwidth(bandwidth_mhz));
    }
    Ok(THERMAL_NOISE_DBM_HZ + 10.0 * (bandwidth_mhz * 1e6).log10() + noise_figure_db)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub gain_db: f64,
    pub pathloss_db: f64,
    pub noise_power_dbm: f64,
}

/// Broadband SNR in dB.
pub fn snr(b: &LinkBudget) -> f64 {
    b.tx_power_dbm + b.gain_db - b.pathloss_db - b.noise_power_dbm
}
