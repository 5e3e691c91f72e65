//! Exposure-aware beam selection for large mmWave arrays in outdoor LOS scenes.
//!
//! The crate builds planar-array beam codebooks, reselects transmission beams
//! away from detected heads, predicts the power density those heads receive and
//! runs seeded Monte-Carlo sweeps that produce exposure maps and exposure/SNR CDFs.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod avoidance;
pub mod channel;
pub mod cli;
pub mod codebook;
pub mod config;
pub mod error;
pub mod exposure;
pub mod geometry;
pub mod output;
pub mod render;
pub mod scenario;
pub mod stats;
pub mod vision;

pub use array::{
    array_gain, conjugate_weights, element_gain, half_power_offset, steering_vector, ArrayConfig, BeamWeights,
    ElementPattern,
};
pub use avoidance::{disabled_set, select_beam, AvoidancePolicy, BeamDecision, D0Band};
pub use codebook::{beam_distance, build_codebook, BeamId, Codebook, Sector};
pub use error::{Error, Result};
pub use geometry::{direction_to, distance, ArrayPose, Direction, Point3D};
pub use scenario::{run_scenario, sweep_d0, PoseKind, Scenario, ScenarioConfig, ScenarioResult};
