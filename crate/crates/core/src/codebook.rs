//! Beam codebooks on a uniform angular grid.
//!
//! The spacing along each axis is twice the angular offset at which a
//! boresight beam has lost `crossover_db`, so that adjacent beams cross at that
//! level. A 3 dB codebook is the usual half-power grid; smaller crossover
//! levels give denser, finer-grained codebooks. The integer `(m, n)` grid
//! indices are the space in which beam distances are measured.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::array::{conjugate_weights, level_offset, ArrayConfig, Axis, BeamWeights};
use crate::error::{Error, Result};
use crate::geometry::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BeamId {
    /// Azimuth index.
    pub m: usize,
    /// Downtilt index.
    pub n: usize,
}

impl BeamId {
    pub const fn new(m: usize, n: usize) -> Self {
        Self { m, n }
    }

    /// Squared index distance, exact in integer arithmetic.
    pub fn distance_sq(&self, other: &BeamId) -> u64 {
        let dm = self.m.abs_diff(other.m) as u64;
        let dn = self.n.abs_diff(other.n) as u64;
        dm * dm + dn * dn
    }
}

/// Euclidean distance between two beams in index space.
pub fn beam_distance(a: &BeamId, b: &BeamId) -> f64 {
    (a.distance_sq(b) as f64).sqrt()
}

/// Angular coverage of a codebook, degrees in the array frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sector {
    pub az_min: f64,
    pub az_max: f64,
    pub tilt_min: f64,
    pub tilt_max: f64,
}

impl Default for Sector {
    fn default() -> Self {
        Self {
            az_min: -60.0,
            az_max: 60.0,
            tilt_min: 0.0,
            tilt_max: 60.0,
        }
    }
}

impl Sector {
    pub fn validate(&self) -> Result<()> {
        let ok = self.az_min <= self.az_max
            && self.tilt_min <= self.tilt_max
            && self.az_min >= -180.0
            && self.az_max < 180.0
            && self.tilt_min >= -90.0
            && self.tilt_max <= 90.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("empty or out-of-range sector {self:?}")))
        }
    }
}

/// Which axes use the requested crossover level. With `AzimuthOnly` the
/// downtilt axis keeps half-power (3 dB) spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GranularityAxes {
    #[default]
    Both,
    AzimuthOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NearestBeam {
    pub id: BeamId,
    /// The direction fell outside the sector and was mapped to an edge beam.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GridAxis {
    start: f64,
    spacing: f64,
    count: usize,
}

impl GridAxis {
    fn covering(min: f64, max: f64, spacing: f64) -> Self {
        let span = max - min;
        let count = (span / spacing + 1e-9).floor() as usize + 1;
        let start = 0.5 * (min + max) - 0.5 * (count - 1) as f64 * spacing;
        Self { start, spacing, count }
    }

    fn angle(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing
    }

    /// Rounds to the nearest grid index; exact midpoints go to the lower index.
    fn nearest(&self, angle: f64) -> (usize, bool) {
        let x = (angle - self.start) / self.spacing;
        let lo = x.floor();
        let idx = if x - lo <= 0.5 + 1e-9 { lo } else { lo + 1.0 };
        let last = (self.count - 1) as f64;
        if idx < 0.0 {
            (0, true)
        } else if idx > last {
            (self.count - 1, true)
        } else {
            (idx as usize, false)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub array: ArrayConfig,
    pub crossover_db: f64,
    pub sector: Sector,
    az: GridAxis,
    tilt: GridAxis,
}

/// Builds the beam grid for `cfg` over `sector` at `crossover_db`.
pub fn build_codebook(cfg: &ArrayConfig, sector: &Sector, crossover_db: f64) -> Result<Codebook> {
    build_codebook_with(cfg, sector, crossover_db, GranularityAxes::Both)
}

pub fn build_codebook_with(
    cfg: &ArrayConfig,
    sector: &Sector,
    crossover_db: f64,
    axes: GranularityAxes,
) -> Result<Codebook> {
    if !(crossover_db > 0.0 && crossover_db <= 6.0) {
        return Err(Error::InvalidConfig(format!(
            "crossover level {crossover_db} dB outside (0, 6]"
        )));
    }
    cfg.validate()?;
    sector.validate()?;
    let az_spacing = 2.0 * level_offset(cfg, crossover_db, Axis::Azimuth)?;
    let tilt_level = match axes {
        GranularityAxes::Both => crossover_db,
        GranularityAxes::AzimuthOnly => 3.0,
    };
    let tilt_spacing = 2.0 * level_offset(cfg, tilt_level, Axis::Downtilt)?;
    Ok(Codebook {
        array: *cfg,
        crossover_db,
        sector: *sector,
        az: GridAxis::covering(sector.az_min, sector.az_max, az_spacing),
        tilt: GridAxis::covering(sector.tilt_min, sector.tilt_max, tilt_spacing),
    })
}

impl Codebook {
    pub fn az_count(&self) -> usize {
        self.az.count
    }

    pub fn tilt_count(&self) -> usize {
        self.tilt.count
    }

    pub fn len(&self) -> usize {
        self.az.count * self.tilt.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing_az(&self) -> f64 {
        self.az.spacing
    }

    pub fn spacing_tilt(&self) -> f64 {
        self.tilt.spacing
    }

    pub fn contains(&self, id: &BeamId) -> bool {
        id.m < self.az.count && id.n < self.tilt.count
    }

    pub fn check(&self, id: &BeamId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::BeamOutOfBounds {
                m: id.m,
                n: id.n,
                az_count: self.az.count,
                tilt_count: self.tilt.count,
            })
        }
    }

    /// All beams, downtilt-major then azimuth.
    pub fn beams(&self) -> impl Iterator<Item = BeamId> + '_ {
        (0..self.tilt.count).flat_map(move |n| (0..self.az.count).map(move |m| BeamId::new(m, n)))
    }

    pub fn steering_direction(&self, id: &BeamId) -> Direction {
        Direction::new(self.az.angle(id.m), self.tilt.angle(id.n))
    }

    pub fn weights(&self, id: &BeamId) -> BeamWeights {
        conjugate_weights(&self.array, &self.steering_direction(id))
    }

    /// Beam whose steering direction is nearest to `dir` by per-axis rounding.
    pub fn nearest_beam(&self, dir: &Direction) -> NearestBeam {
        let (m, cm) = self.az.nearest(dir.azimuth);
        let (n, cn) = self.tilt.nearest(dir.downtilt);
        NearestBeam {
            id: BeamId::new(m, n),
            clamped: cm || cn,
        }
    }

    /// Index distance between two beams of this codebook.
    pub fn beam_distance(&self, a: &BeamId, b: &BeamId) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(beam_distance(a, b))
    }

    /// CSV with header `m,n,steer_az_deg,steer_tilt_deg`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "m,n,steer_az_deg,steer_tilt_deg")?;
        for id in self.beams() {
            let d = self.steering_direction(&id);
            writeln!(out, "{},{},{},{}", id.m, id.n, d.azimuth, d.downtilt)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::array_gain;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sector_az(min: f64, max: f64) -> Sector {
        Sector {
            az_min: min,
            az_max: max,
            tilt_min: 0.0,
            tilt_max: 0.0,
        }
    }

    #[test]
    fn three_db_codebook_over_120_degrees() {
        let cb = build_codebook(&ArrayConfig::default(), &sector_az(-60.0, 60.0), 3.0).unwrap();
        assert_abs_diff_eq!(cb.spacing_az(), 3.17, epsilon = 0.02);
        assert_eq!(cb.az_count(), 38);
        assert_eq!(cb.tilt_count(), 1);
    }

    #[test]
    fn finer_codebook_has_more_beams() {
        let cfg = ArrayConfig::default();
        let coarse = build_codebook(&cfg, &Sector::default(), 3.0).unwrap();
        let fine = build_codebook(&cfg, &Sector::default(), 0.5).unwrap();
        assert!(fine.spacing_az() < coarse.spacing_az());
        assert!(fine.len() > coarse.len());
    }

    #[test]
    fn single_element_spacing_is_element_beamwidth() {
        let cb = build_codebook(&ArrayConfig::new(1, 1), &Sector::default(), 3.0).unwrap();
        assert_abs_diff_eq!(cb.spacing_az(), 65.0, epsilon = 1e-3);
        assert_eq!(cb.az_count(), 2);
    }

    #[test]
    fn narrow_sector_gives_one_beam() {
        let s = Sector {
            az_min: 1.0,
            az_max: 2.0,
            tilt_min: 5.0,
            tilt_max: 5.5,
        };
        let cb = build_codebook(&ArrayConfig::default(), &s, 3.0).unwrap();
        assert_eq!(cb.len(), 1);
        let d = cb.steering_direction(&BeamId::new(0, 0));
        assert_abs_diff_eq!(d.azimuth, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.downtilt, 5.25, epsilon = 1e-12);
    }

    #[test]
    fn invalid_crossover_is_rejected() {
        let cfg = ArrayConfig::default();
        assert!(build_codebook(&cfg, &Sector::default(), 0.0).is_err());
        assert!(build_codebook(&cfg, &Sector::default(), 6.5).is_err());
    }

    #[test]
    fn azimuth_only_granularity_keeps_half_power_tilt() {
        let cfg = ArrayConfig::default();
        let both = build_codebook_with(&cfg, &Sector::default(), 0.5, GranularityAxes::Both).unwrap();
        let az_only = build_codebook_with(&cfg, &Sector::default(), 0.5, GranularityAxes::AzimuthOnly).unwrap();
        let half_power = build_codebook(&cfg, &Sector::default(), 3.0).unwrap();
        assert_eq!(both.spacing_az(), az_only.spacing_az());
        assert_eq!(az_only.spacing_tilt(), half_power.spacing_tilt());
        assert!(both.spacing_tilt() < az_only.spacing_tilt());
    }

    #[test]
    fn nearest_beam_examples() {
        let cb = build_codebook(&ArrayConfig::default(), &Sector::default(), 3.0).unwrap();
        let id = BeamId::new(7, 4);
        assert_eq!(cb.nearest_beam(&cb.steering_direction(&id)).id, id);

        // exact midpoints resolve to the lower index, checked against enumeration
        for m in 0..cb.az_count() - 1 {
            let a = cb.steering_direction(&BeamId::new(m, 0)).azimuth;
            let b = cb.steering_direction(&BeamId::new(m + 1, 0)).azimuth;
            let mid = Direction::new(0.5 * (a + b), cb.steering_direction(&BeamId::new(0, 0)).downtilt);
            assert_eq!(cb.nearest_beam(&mid).id, BeamId::new(m, 0));
        }

        let far = cb.nearest_beam(&Direction::new(90.0, 10.0));
        assert!(far.clamped);
        assert_eq!(far.id.m, cb.az_count() - 1);
        let up = cb.nearest_beam(&Direction::new(0.0, -20.0));
        assert!(up.clamped);
        assert_eq!(up.id.n, 0);
    }

    #[test]
    fn nearest_beam_matches_enumeration_off_grid() {
        let cb = build_codebook(&ArrayConfig::new(8, 8), &Sector::default(), 3.0).unwrap();
        for k in 0..200 {
            let dir = Direction::new(-70.0 + 0.71 * k as f64, -5.0 + 0.37 * k as f64);
            let closest = |count: usize, angle: &dyn Fn(usize) -> f64, target: f64| {
                (0..count)
                    .min_by(|&a, &b| (angle(a) - target).abs().total_cmp(&(angle(b) - target).abs()))
                    .unwrap()
            };
            let m = closest(
                cb.az_count(),
                &|m| cb.steering_direction(&BeamId::new(m, 0)).azimuth,
                dir.azimuth,
            );
            let n = closest(
                cb.tilt_count(),
                &|n| cb.steering_direction(&BeamId::new(0, n)).downtilt,
                dir.downtilt,
            );
            assert_eq!(cb.nearest_beam(&dir).id, BeamId::new(m, n));
        }
    }

    #[test]
    fn every_beam_maps_to_itself() {
        let cb = build_codebook(&ArrayConfig::default(), &Sector::default(), 0.5).unwrap();
        for id in cb.beams() {
            let nb = cb.nearest_beam(&cb.steering_direction(&id));
            assert_eq!(nb.id, id);
            assert!(!nb.clamped);
        }
    }

    #[test]
    fn beams_lie_inside_the_sector() {
        let s = Sector::default();
        let cb = build_codebook(&ArrayConfig::default(), &s, 0.5).unwrap();
        for id in cb.beams() {
            let d = cb.steering_direction(&id);
            assert!(d.azimuth >= s.az_min - 1e-9 && d.azimuth <= s.az_max + 1e-9);
            assert!(d.downtilt >= s.tilt_min - 1e-9 && d.downtilt <= s.tilt_max + 1e-9);
        }
    }

    #[test]
    fn adjacent_beams_cross_at_the_configured_level() {
        let cfg = ArrayConfig::default();
        let s = Sector {
            az_min: -10.0,
            az_max: 10.0,
            tilt_min: -10.0,
            tilt_max: 10.0,
        };
        for level in [3.0, 0.5] {
            let cb = build_codebook(&cfg, &s, level).unwrap();
            // beam pair straddling boresight along azimuth
            let n0 = cb.nearest_beam(&Direction::BORESIGHT).id.n;
            let m0 = cb.nearest_beam(&Direction::new(-0.5 * cb.spacing_az(), 0.0)).id.m;
            let a = BeamId::new(m0, n0);
            let b = BeamId::new(m0 + 1, n0);
            let da = cb.steering_direction(&a);
            let db = cb.steering_direction(&b);
            let mid = Direction::new(0.5 * (da.azimuth + db.azimuth), da.downtilt);
            let wa = cb.weights(&a);
            let peak = array_gain(&cfg, &wa, &da).unwrap();
            let at_mid = array_gain(&cfg, &wa, &mid).unwrap();
            assert_abs_diff_eq!(peak - at_mid, level, epsilon = 0.1);
            let wb = cb.weights(&b);
            let at_mid_b = array_gain(&cfg, &wb, &mid).unwrap();
            assert_abs_diff_eq!(at_mid, at_mid_b, epsilon = 0.05);
        }
    }

    #[test]
    fn beam_distance_examples() {
        assert_eq!(beam_distance(&BeamId::new(2, 2), &BeamId::new(2, 2)), 0.0);
        assert_eq!(beam_distance(&BeamId::new(1, 1), &BeamId::new(4, 5)), 5.0);
        assert_eq!(beam_distance(&BeamId::new(2, 0), &BeamId::new(5, 0)), 3.0);
    }

    #[test]
    fn foreign_beams_are_rejected() {
        let cb = build_codebook(&ArrayConfig::default(), &sector_az(-10.0, 10.0), 3.0).unwrap();
        let inside = BeamId::new(0, 0);
        let outside = BeamId::new(cb.az_count(), 0);
        assert!(cb.beam_distance(&inside, &inside).is_ok());
        assert!(matches!(
            cb.beam_distance(&inside, &outside),
            Err(Error::BeamOutOfBounds { .. })
        ));
    }

    #[test]
    fn identical_configs_give_identical_codebooks() {
        let cfg = ArrayConfig::default();
        let a = build_codebook(&cfg, &Sector::default(), 0.5).unwrap();
        let b = build_codebook(&cfg, &Sector::default(), 0.5).unwrap();
        assert_eq!(a, b);
        let mut ca = Vec::new();
        let mut cb_ = Vec::new();
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb_).unwrap();
        assert_eq!(ca, cb_);
    }

    fn beam() -> impl Strategy<Value = BeamId> {
        (0usize..100, 0usize..100).prop_map(|(m, n)| BeamId::new(m, n))
    }

    proptest! {
        #[test]
        fn beam_distance_is_a_metric(a in beam(), b in beam(), c in beam()) {
            prop_assert_eq!(beam_distance(&a, &a), 0.0);
            prop_assert_eq!(a.distance_sq(&b) == 0, a == b);
            prop_assert_eq!(beam_distance(&a, &b), beam_distance(&b, &a));
            prop_assert!(beam_distance(&a, &c) <= beam_distance(&a, &b) + beam_distance(&b, &c) + 1e-12);
        }
    }
}
