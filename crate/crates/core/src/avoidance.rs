//! Exposure-avoidance beam reselection.
//!
//! Beams within index distance `d0` of the beam pointing at a head are
//! disabled. The transmission beam is the feasible beam closest (in index
//! space) to the initial beam chosen for the UE. `d0` is stepped by the
//! head's distance to the array: closer heads get a larger `d0`.

use std::collections::BTreeSet;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::codebook::{BeamId, Codebook};
use crate::error::{Error, Result};

/// One step of the `d0` table: heads at range `<= max_range` get `d0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct D0Band {
    pub max_range: f64,
    pub d0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Prefer the beam farthest from the head beam, then the smallest `(m, n)`.
    #[default]
    FarthestFromHeadThenLex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvoidancePolicy {
    pub bands: Vec<D0Band>,
    #[serde(default)]
    pub tie_break: TieBreak,
}

impl AvoidancePolicy {
    pub fn new(bands: Vec<D0Band>) -> Result<Self> {
        let p = Self {
            bands,
            tie_break: TieBreak::default(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Three-step table for fine (0.5 dB) codebooks.
    pub fn stepped_fine() -> Self {
        Self {
            bands: vec![
                D0Band {
                    max_range: 4.5,
                    d0: 3.0,
                },
                D0Band {
                    max_range: 5.5,
                    d0: 2.0,
                },
                D0Band {
                    max_range: 6.7,
                    d0: 1.0,
                },
            ],
            tie_break: TieBreak::default(),
        }
    }

    /// Single step for half-power (3 dB) codebooks.
    pub fn single_step_coarse() -> Self {
        Self {
            bands: vec![D0Band {
                max_range: 6.7,
                d0: 1.0,
            }],
            tie_break: TieBreak::default(),
        }
    }

    /// Default table for a codebook of the given crossover level.
    pub fn default_for(crossover_db: f64) -> Self {
        if crossover_db < 3.0 {
            Self::stepped_fine()
        } else {
            Self::single_step_coarse()
        }
    }

    /// The same `d0` at every range.
    pub fn constant(d0: f64) -> Self {
        Self {
            bands: vec![D0Band {
                max_range: f64::MAX,
                d0,
            }],
            tie_break: TieBreak::default(),
        }
    }

    /// No avoidance at any range.
    pub fn disabled() -> Self {
        Self {
            bands: Vec::new(),
            tie_break: TieBreak::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.bands {
            if !(b.d0 >= 0.0 && b.d0.is_finite()) {
                return Err(Error::InvalidConfig(format!("d0 {} must be finite and >= 0", b.d0)));
            }
            if !(b.max_range > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "band range {} must be positive",
                    b.max_range
                )));
            }
        }
        for pair in self.bands.windows(2) {
            if pair[1].max_range <= pair[0].max_range {
                return Err(Error::InvalidConfig(
                    "d0 bands must be sorted by ascending range".into(),
                ));
            }
            if pair[1].d0 > pair[0].d0 {
                return Err(Error::InvalidConfig("d0 must not grow with range".into()));
            }
        }
        Ok(())
    }

    /// `d0` of the first band whose upper edge is at or beyond `head_range`; zero past the last band.
    pub fn d0_for_range(&self, head_range: f64) -> f64 {
        self.bands
            .iter()
            .find(|b| b.max_range >= head_range)
            .map_or(0.0, |b| b.d0)
    }
}

/// A head that disables beams around `head_beam`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadConstraint {
    pub head_beam: BeamId,
    pub d0: f64,
}

impl HeadConstraint {
    fn disables(&self, b: &BeamId) -> bool {
        (self.head_beam.distance_sq(b) as f64) < self.d0 * self.d0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamDecision {
    pub initial: BeamId,
    pub head_beam: BeamId,
    pub d0_applied: f64,
    pub disabled_count: usize,
    pub selected: BeamId,
    pub triggered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiHeadDecision {
    pub initial: BeamId,
    pub disabled_count: usize,
    pub selected: BeamId,
    pub triggered: bool,
}

/// Beams of `cb` within distance `d0` (exclusive) of `head_beam`, in `(m, n)` order.
pub fn disabled_set(cb: &Codebook, head_beam: &BeamId, d0: f64) -> Vec<BeamId> {
    disabled_union(
        cb,
        &[HeadConstraint {
            head_beam: *head_beam,
            d0,
        }],
    )
    .into_iter()
    .collect()
}

fn disabled_union(cb: &Codebook, heads: &[HeadConstraint]) -> BTreeSet<BeamId> {
    let mut out = BTreeSet::new();
    for h in heads {
        if h.d0 <= 0.0 {
            continue;
        }
        let r = h.d0.ceil() as usize;
        let m_hi = (h.head_beam.m + r).min(cb.az_count().saturating_sub(1));
        let n_hi = (h.head_beam.n + r).min(cb.tilt_count().saturating_sub(1));
        for m in h.head_beam.m.saturating_sub(r)..=m_hi {
            for n in h.head_beam.n.saturating_sub(r)..=n_hi {
                let b = BeamId::new(m, n);
                if h.disables(&b) {
                    out.insert(b);
                }
            }
        }
    }
    out
}

/// Reselects the transmission beam around a single head.
pub fn select_beam(cb: &Codebook, initial: &BeamId, head_beam: &BeamId, d0: f64) -> Result<BeamDecision> {
    cb.check(head_beam)?;
    let constraint = HeadConstraint {
        head_beam: *head_beam,
        d0,
    };
    let d = select_beam_multi(cb, initial, &[constraint])?;
    Ok(BeamDecision {
        initial: *initial,
        head_beam: *head_beam,
        d0_applied: d0,
        disabled_count: d.disabled_count,
        selected: d.selected,
        triggered: d.triggered,
    })
}

/// Reselects the transmission beam against the union of several heads' disabled sets.
///
/// Among equally close feasible beams, the one farthest from its nearest head
/// wins, then the smallest `(m, n)`.
pub fn select_beam_multi(cb: &Codebook, initial: &BeamId, heads: &[HeadConstraint]) -> Result<MultiHeadDecision> {
    cb.check(initial)?;
    for h in heads {
        cb.check(&h.head_beam)?;
        if !(h.d0 >= 0.0) {
            return Err(Error::InvalidConfig(format!("d0 {} must be >= 0", h.d0)));
        }
    }
    let feasible = |b: &BeamId| heads.iter().all(|h| !h.disables(b));
    let disabled_count = disabled_union(cb, heads).len();

    if feasible(initial) {
        return Ok(MultiHeadDecision {
            initial: *initial,
            disabled_count,
            selected: *initial,
            triggered: false,
        });
    }

    let head_clearance = |b: &BeamId| heads.iter().map(|h| h.head_beam.distance_sq(b)).min().unwrap_or(0);
    // (distance² to initial, -clearance, id): smaller is better
    let mut best: Option<(u64, std::cmp::Reverse<u64>, BeamId)> = None;
    let max_r = cb.az_count().max(cb.tilt_count());
    for r in 1..=max_r {
        if let Some((d2, _, _)) = best {
            // every beam on ring r is at least r away
            if d2 < (r * r) as u64 {
                break;
            }
        }
        for b in ring(cb, initial, r) {
            if !feasible(&b) {
                continue;
            }
            let key = (initial.distance_sq(&b), std::cmp::Reverse(head_clearance(&b)), b);
            if best.is_none_or(|cur| key < cur) {
                best = Some(key);
            }
        }
    }
    let (_, _, selected) = best.ok_or(Error::ExposureLimited)?;
    Ok(MultiHeadDecision {
        initial: *initial,
        disabled_count,
        selected,
        triggered: true,
    })
}

/// Beams at Chebyshev distance exactly `r` from `center`, clipped to the grid.
fn ring<'a>(cb: &'a Codebook, center: &BeamId, r: usize) -> impl Iterator<Item = BeamId> + 'a {
    let (cm, cn) = (center.m as i64, center.n as i64);
    let r = r as i64;
    let (am, an) = (cb.az_count() as i64, cb.tilt_count() as i64);
    (cm - r..=cm + r)
        .flat_map(move |m| (cn - r..=cn + r).map(move |n| (m, n)))
        .filter(move |&(m, n)| (m - cm).abs().max((n - cn).abs()) == r)
        .filter(move |&(m, n)| m >= 0 && n >= 0 && m < am && n < an)
        .map(|(m, n)| BeamId::new(m as usize, n as usize))
}

/// Writes one JSON object per decision.
pub fn write_trace<W: Write>(mut out: W, decisions: &[BeamDecision]) -> io::Result<()> {
    for d in decisions {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
