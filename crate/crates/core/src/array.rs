//! Uniform planar array: element pattern, steering vectors and total gain.
//!
//! Element `(n, m)` sits at row `n` (vertical, `0..n_v`) and column `m`
//! (horizontal, `0..n_h`). Vectors are stored row-major, index `n * n_h + m`.
//! Directions are converted to the zenith/azimuth convention of the AAS
//! element model: zenith `θ = 90° + downtilt`, azimuth `φ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Direction;

/// Array-factor floor relative to the coherent peak, in dB.
pub const NULL_FLOOR_DB: f64 = -60.0;

/// Scan step used to bracket a level crossing before bisection.
const SCAN_STEP_DEG: f64 = 0.01;
const BISECT_TOL_DEG: f64 = 1e-4;

/// Single-element radiation pattern (3GPP AAS model).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElementPattern {
    /// Peak element gain, dBi.
    pub g_max: f64,
    pub hpbw_az: f64,
    pub hpbw_el: f64,
    /// Front-to-back ratio `A_m`, dB.
    pub front_back: f64,
    /// Side-lobe attenuation limit in elevation, dB.
    pub sla_v: f64,
}

impl Default for ElementPattern {
    fn default() -> Self {
        Self {
            g_max: 8.0,
            hpbw_az: 65.0,
            hpbw_el: 65.0,
            front_back: 30.0,
            sla_v: 30.0,
        }
    }
}

impl ElementPattern {
    pub fn validate(&self) -> Result<()> {
        let bw_ok = |b: f64| b > 0.0 && b < 180.0;
        if !self.g_max.is_finite() {
            return Err(Error::InvalidConfig("element g_max must be finite".into()));
        }
        if !bw_ok(self.hpbw_az) || !bw_ok(self.hpbw_el) {
            return Err(Error::InvalidConfig(
                "element beamwidths must lie in (0, 180) degrees".into(),
            ));
        }
        if !(self.front_back > 0.0 && self.sla_v > 0.0) {
            return Err(Error::InvalidConfig(
                "element attenuation limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub n_h: usize,
    pub n_v: usize,
    /// Horizontal element spacing in wavelengths.
    pub d_h: f64,
    /// Vertical element spacing in wavelengths.
    pub d_v: f64,
    pub carrier_freq_ghz: f64,
    pub element: ElementPattern,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            n_h: 32,
            n_v: 32,
            d_h: 0.5,
            d_v: 0.5,
            carrier_freq_ghz: 28.0,
            element: ElementPattern::default(),
        }
    }
}

impl ArrayConfig {
    pub fn new(n_h: usize, n_v: usize) -> Self {
        Self {
            n_h,
            n_v,
            ..Self::default()
        }
    }

    pub fn element_count(&self) -> usize {
        self.n_h * self.n_v
    }

    /// Coherent array-factor peak, `10·log10(N_V·N_H)`.
    pub fn peak_array_factor_db(&self) -> f64 {
        10.0 * (self.element_count() as f64).log10()
    }

    /// Upper bound on [`array_gain`] over all directions.
    pub fn peak_gain_db(&self) -> f64 {
        self.element.g_max + self.peak_array_factor_db()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_h == 0 || self.n_v == 0 {
            return Err(Error::InvalidConfig("array needs at least one element per axis".into()));
        }
        if !(self.d_h > 0.0 && self.d_v > 0.0) {
            return Err(Error::InvalidConfig("element spacing must be positive".into()));
        }
        if !(self.carrier_freq_ghz > 0.0 && self.carrier_freq_ghz.is_finite()) {
            return Err(Error::InvalidConfig("carrier frequency must be positive".into()));
        }
        self.element.validate()
    }
}

/// Complex element weights for one beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights {
    pub weights: Vec<Complex64>,
    pub steer: Direction,
}

impl BeamWeights {
    pub fn total_power(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_sqr()).sum()
    }
}

/// Per-axis phase increments (radians) between adjacent elements toward `dir`.
fn phase_steps(cfg: &ArrayConfig, dir: &Direction) -> (f64, f64) {
    let (st, ct) = dir.tilt_rad().sin_cos();
    let sp = dir.az_rad().sin();
    // cos θ = -sin(tilt), sin θ = cos(tilt) for zenith θ = 90° + tilt
    let vertical = 2.0 * PI * cfg.d_v * (-st);
    let horizontal = 2.0 * PI * cfg.d_h * ct * sp;
    (vertical, horizontal)
}

/// Unit-magnitude steering vector toward `dir`.
pub fn steering_vector(cfg: &ArrayConfig, dir: &Direction) -> Vec<Complex64> {
    let (dv, dh) = phase_steps(cfg, dir);
    let rows: Vec<Complex64> = (0..cfg.n_v).map(|n| Complex64::cis(n as f64 * dv)).collect();
    let cols: Vec<Complex64> = (0..cfg.n_h).map(|m| Complex64::cis(m as f64 * dh)).collect();
    let mut v = Vec::with_capacity(cfg.element_count());
    for r in &rows {
        for c in &cols {
            // phases add, so the product stays on the unit circle
            v.push(r * c);
        }
    }
    v
}

/// Conjugate (matched) weights with unit total power.
pub fn conjugate_weights(cfg: &ArrayConfig, steer: &Direction) -> BeamWeights {
    let scale = 1.0 / (cfg.element_count() as f64).sqrt();
    let weights = steering_vector(cfg, steer)
        .into_iter()
        .map(|v| v.conj() * scale)
        .collect();
    BeamWeights { weights, steer: *steer }
}

/// Element gain in dBi.
pub fn element_gain(pat: &ElementPattern, dir: &Direction) -> f64 {
    let a_h = -(12.0 * (dir.azimuth / pat.hpbw_az).powi(2)).min(pat.front_back);
    let a_v = -(12.0 * (dir.downtilt / pat.hpbw_el).powi(2)).min(pat.sla_v);
    pat.g_max - (-(a_h + a_v)).min(pat.front_back)
}

/// Array-factor term `10·log10|Σ w·v|²`, floored at [`NULL_FLOOR_DB`] below the peak.
pub fn array_factor_db(cfg: &ArrayConfig, w: &BeamWeights, dir: &Direction) -> Result<f64> {
    let n = cfg.element_count();
    if w.weights.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: w.weights.len(),
        });
    }
    let v = steering_vector(cfg, dir);
    let sum: Complex64 = w.weights.iter().zip(&v).map(|(a, b)| a * b).sum();
    let floor = cfg.peak_array_factor_db() + NULL_FLOOR_DB;
    Ok((10.0 * sum.norm_sqr().log10()).max(floor))
}

/// Total gain toward `dir`: element pattern plus array factor.
pub fn array_gain(cfg: &ArrayConfig, w: &BeamWeights, dir: &Direction) -> Result<f64> {
    Ok(element_gain(&cfg.element, dir) + array_factor_db(cfg, w, dir)?)
}

/// Angular offsets, one per grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisOffsets {
    pub azimuth: f64,
    pub downtilt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Azimuth,
    Downtilt,
}

/// Smallest offset from a boresight beam's peak, along each axis, at which the
/// total gain has dropped by `level_db`.
pub fn half_power_offset(cfg: &ArrayConfig, level_db: f64) -> Result<AxisOffsets> {
    Ok(AxisOffsets {
        azimuth: level_offset(cfg, level_db, Axis::Azimuth)?,
        downtilt: level_offset(cfg, level_db, Axis::Downtilt)?,
    })
}

/// Single-axis variant of [`half_power_offset`].
pub fn level_offset(cfg: &ArrayConfig, level_db: f64, axis: Axis) -> Result<f64> {
    if !(level_db >= 0.0) || !level_db.is_finite() {
        return Err(Error::LevelOutOfRange { level_db });
    }
    if level_db == 0.0 {
        return Ok(0.0);
    }
    let w = conjugate_weights(cfg, &Direction::BORESIGHT);
    let peak = array_gain(cfg, &w, &Direction::BORESIGHT)?;
    let at = |deg: f64| match axis {
        Axis::Azimuth => Direction::new(deg, 0.0),
        Axis::Downtilt => Direction::new(0.0, deg),
    };
    let drop = |deg: f64| -> f64 {
        // weights are sized for cfg, so the gain evaluation cannot fail
        peak - array_gain(cfg, &w, &at(deg)).unwrap_or(f64::NEG_INFINITY)
    };
    let limit = match axis {
        Axis::Azimuth => 180.0,
        Axis::Downtilt => 90.0,
    };

    let mut lo = 0.0;
    let mut hi = None;
    let mut k = 1;
    loop {
        let x = (k as f64 * SCAN_STEP_DEG).min(limit);
        if drop(x) >= level_db {
            hi = Some(x);
            break;
        }
        lo = x;
        if x >= limit {
            break;
        }
        k += 1;
    }
    let mut hi = hi.ok_or(Error::LevelOutOfRange { level_db })?;
    while hi - lo > BISECT_TOL_DEG {
        let mid = 0.5 * (lo + hi);
        if drop(mid) >= level_db {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
