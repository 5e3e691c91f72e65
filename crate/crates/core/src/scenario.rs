//! Monte-Carlo sweep of pedestrian positions over the evaluation area.
//!
//! Every grid point hosts one pedestrian (head and UE). Each trial perturbs the
//! detected directions, maps them to codebook beams, applies the avoidance
//! policy and evaluates SNR at the true UE and power density at the true head,
//! both for the initial beam and for the reselected one.
//!
//! Random streams are keyed by `(seed, point index, trial)`, so results do not
//! depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{array_gain, ArrayConfig};
use crate::avoidance::{select_beam, AvoidancePolicy, BeamDecision};
use crate::channel::{noise_power, pathloss_los, sample_shadow, snr, ChannelParams, LinkBudget};
use crate::codebook::{beam_distance, build_codebook_with, BeamId, Codebook, GranularityAxes, Sector};
use crate::error::{Error, Result};
use crate::exposure::{power_density, ExposureParams, WORKING_LIMIT_MW_CM2};
use crate::geometry::{direction_to, distance, ArrayPose, Point3D};
use crate::stats::{mean, percentile, sorted, Percentiles};
use crate::vision::{perturb, CvErrorModel, DetectedEntities, TrueEntities};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PoseKind {
    /// Device held at the head.
    #[default]
    A,
    /// Device held in front of the torso.
    B,
}

impl std::str::FromStr for PoseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(PoseKind::A),
            "B" | "b" => Ok(PoseKind::B),
            _ => Err(Error::InvalidConfig(format!("unknown pose {s:?} (expected A or B)"))),
        }
    }
}

/// Head height and device offsets relative to the head, world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PedestrianPose {
    pub head_height_m: f64,
    pub pose_a_offset: Point3D,
    /// Pedestrians face the array (-x), so "forward" is -x.
    pub pose_b_offset: Point3D,
}

impl Default for PedestrianPose {
    fn default() -> Self {
        Self {
            head_height_m: 1.7,
            pose_a_offset: Point3D::new(0.0, 0.10, 0.0),
            pose_b_offset: Point3D::new(-0.40, 0.0, -0.45),
        }
    }
}

impl PedestrianPose {
    pub fn ue_offset(&self, kind: PoseKind) -> Point3D {
        match kind {
            PoseKind::A => self.pose_a_offset,
            PoseKind::B => self.pose_b_offset,
        }
    }

    pub fn entities(&self, kind: PoseKind, x: f64, y: f64) -> TrueEntities {
        let head = Point3D::new(x, y, self.head_height_m);
        TrueEntities {
            head,
            ue: head.offset(self.ue_offset(kind)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiteConfig {
    pub bs_height_m: f64,
    pub yaw_deg: f64,
    pub mech_downtilt_deg: f64,
}

impl Default for SiteConfig {
    fn default() -> Self {
        Self {
            bs_height_m: 5.0,
            yaw_deg: 0.0,
            mech_downtilt_deg: 45.0,
        }
    }
}

impl SiteConfig {
    pub fn array_pose(&self) -> ArrayPose {
        ArrayPose::new(
            Point3D::new(0.0, 0.0, self.bs_height_m),
            self.yaw_deg,
            self.mech_downtilt_deg,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x: [1.0, 6.0],
            y: [-2.0, 2.0],
            step: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
}

impl GridSpec {
    fn axis_count(range: [f64; 2], step: f64) -> usize {
        ((range[1] - range[0]) / step + 1e-9).floor() as usize + 1
    }

    pub fn nx(&self) -> usize {
        Self::axis_count(self.x, self.step)
    }

    pub fn ny(&self) -> usize {
        Self::axis_count(self.y, self.step)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.x.iter().chain(&self.y).all(|v| v.is_finite());
        if !finite || !(self.step > 0.0) || self.x[1] < self.x[0] || self.y[1] < self.y[0] {
            return Err(Error::InvalidConfig(format!("empty or malformed grid {self:?}")));
        }
        Ok(())
    }

    /// Points in row-major order (y outer, x inner).
    pub fn points(&self) -> Vec<GridPoint> {
        let (nx, ny) = (self.nx(), self.ny());
        (0..ny)
            .flat_map(|iy| (0..nx).map(move |ix| (ix, iy)))
            .enumerate()
            .map(|(index, (ix, iy))| GridPoint {
                index,
                ix,
                iy,
                x: self.x[0] + ix as f64 * self.step,
                y: self.y[0] + iy as f64 * self.step,
            })
            .collect()
    }
}

/// One codebook of the experiment and its avoidance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodebookSpec {
    pub crossover_db: f64,
    /// Defaults to the stepped table for fine codebooks and a single step for 3 dB ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<AvoidancePolicy>,
}

impl CodebookSpec {
    pub fn new(crossover_db: f64) -> Self {
        Self {
            crossover_db,
            policy: None,
        }
    }

    pub fn resolved_policy(&self) -> AvoidancePolicy {
        self.policy
            .clone()
            .unwrap_or_else(|| AvoidancePolicy::default_for(self.crossover_db))
    }

    /// File-name friendly label: `3db`, `0p5db`.
    pub fn label(&self) -> String {
        format!("{}db", self.crossover_db).replace('.', "p")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub tx_power_dbm: f64,
    pub pose: PoseKind,
    pub trials_per_point: usize,
    pub exposure_limit_mw_cm2: f64,
    pub granularity: GranularityAxes,
    pub cv_enabled: bool,
    pub site: SiteConfig,
    pub array: ArrayConfig,
    pub sector: Sector,
    pub channel: ChannelParams,
    pub exposure: ExposureParams,
    pub cv: CvErrorModel,
    pub pedestrian: PedestrianPose,
    pub grid: GridSpec,
    pub codebooks: Vec<CodebookSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            tx_power_dbm: 20.0,
            pose: PoseKind::A,
            trials_per_point: 20,
            exposure_limit_mw_cm2: WORKING_LIMIT_MW_CM2,
            granularity: GranularityAxes::Both,
            cv_enabled: true,
            site: SiteConfig::default(),
            array: ArrayConfig::default(),
            sector: Sector {
                az_min: -60.0,
                az_max: 60.0,
                tilt_min: -30.0,
                tilt_max: 45.0,
            },
            channel: ChannelParams::default(),
            exposure: ExposureParams::default(),
            cv: CvErrorModel::default(),
            pedestrian: PedestrianPose::default(),
            grid: GridSpec::default(),
            codebooks: vec![CodebookSpec::new(3.0), CodebookSpec::new(0.5)],
        }
    }
}

impl ScenarioConfig {
    pub fn cv_model(&self) -> Option<&CvErrorModel> {
        self.cv_enabled.then_some(&self.cv)
    }

    /// Checks everything that can be checked without running trials.
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(Error::InvalidConfig("trials_per_point must be >= 1".into()));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::InvalidConfig("tx_power_dbm must be finite".into()));
        }
        if !(self.exposure_limit_mw_cm2 > 0.0) {
            return Err(Error::InvalidConfig("exposure_limit_mw_cm2 must be positive".into()));
        }
        if self.codebooks.is_empty() {
            return Err(Error::InvalidConfig("at least one codebook is required".into()));
        }
        if !(self.pedestrian.head_height_m > 0.0)
            || !self.pedestrian.pose_a_offset.is_finite()
            || !self.pedestrian.pose_b_offset.is_finite()
        {
            return Err(Error::InvalidConfig(
                "pedestrian geometry must be finite with the head above ground".into(),
            ));
        }
        self.array.validate()?;
        self.sector.validate()?;
        self.channel.validate()?;
        self.exposure.validate()?;
        self.cv.validate()?;
        self.grid.validate()?;
        for cb in &self.codebooks {
            if !(cb.crossover_db > 0.0 && cb.crossover_db <= 6.0) {
                return Err(Error::InvalidConfig(format!(
                    "crossover level {} dB outside (0, 6]",
                    cb.crossover_db
                )));
            }
            cb.resolved_policy().validate()?;
        }
        let pose = self.site.array_pose();
        for p in self.grid.points() {
            let e = self.pedestrian.entities(self.pose, p.x, p.y);
            self.exposure.check_range(distance(&e.head, &pose.position))?;
            if distance(&e.ue, &pose.position) < 1e-9 {
                return Err(Error::DegenerateDirection);
            }
        }
        Ok(())
    }

    /// Smallest and largest head range over the grid.
    pub fn head_range_span(&self) -> (f64, f64) {
        let pose = self.site.array_pose();
        self.grid
            .points()
            .iter()
            .map(|p| distance(&self.pedestrian.entities(self.pose, p.x, p.y).head, &pose.position))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }
}

/// Independent random streams for one `(point, trial)`.
pub struct TrialStreams {
    pub shadow: ChaCha8Rng,
    pub head: ChaCha8Rng,
    pub ue: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(seed: u64, point_index: usize, trial: usize) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(point_index as u64).to_le_bytes());
        key[16..24].copy_from_slice(&(trial as u64).to_le_bytes());
        let stream = |id: u64| {
            let mut r = ChaCha8Rng::from_seed(key);
            r.set_stream(id);
            r
        };
        Self {
            shadow: stream(0),
            head: stream(1),
            ue: stream(2),
        }
    }
}

/// SNR and head exposure for one beam choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub beam: Option<BeamId>,
    /// `-inf` when transmission is muted.
    pub snr_db: f64,
    pub exposure_mw_cm2: f64,
}

impl LinkOutcome {
    pub fn muted() -> Self {
        Self {
            beam: None,
            snr_db: f64::NEG_INFINITY,
            exposure_mw_cm2: 0.0,
        }
    }

    pub fn is_muted(&self) -> bool {
        self.beam.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodebookOutcome {
    pub initial: BeamId,
    pub head_beam: BeamId,
    pub d0_applied: f64,
    /// `None` when no feasible beam existed.
    pub decision: Option<BeamDecision>,
    pub baseline: LinkOutcome,
    pub avoided: LinkOutcome,
}

impl CodebookOutcome {
    pub fn triggered(&self) -> bool {
        self.decision.is_none_or(|d| d.triggered)
    }

    pub fn muted(&self) -> bool {
        self.decision.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: GridPoint,
    pub trial: usize,
    pub detected: DetectedEntities,
    pub shadow_db: f64,
    /// One entry per configured codebook.
    pub outcomes: Vec<CodebookOutcome>,
}

struct PreparedCodebook {
    codebook: Codebook,
    policy: AvoidancePolicy,
}

/// A validated configuration with its codebooks built.
pub struct Scenario {
    cfg: ScenarioConfig,
    pose: ArrayPose,
    noise_dbm: f64,
    codebooks: Vec<PreparedCodebook>,
}

impl Scenario {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let codebooks = cfg
            .codebooks
            .iter()
            .map(|spec| {
                Ok(PreparedCodebook {
                    codebook: build_codebook_with(&cfg.array, &cfg.sector, spec.crossover_db, cfg.granularity)?,
                    policy: spec.resolved_policy(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pose: cfg.site.array_pose(),
            noise_dbm: noise_power(cfg.channel.bandwidth_mhz, cfg.channel.noise_figure_db)?,
            cfg,
            codebooks,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn array_pose(&self) -> &ArrayPose {
        &self.pose
    }

    pub fn codebook(&self, i: usize) -> &Codebook {
        &self.codebooks[i].codebook
    }

    fn evaluate(
        &self,
        array: &ArrayConfig,
        cb: &Codebook,
        beam: BeamId,
        truth: &TrueEntities,
        shadow_db: f64,
    ) -> Result<LinkOutcome> {
        let w = cb.weights(&beam);
        let ue_dir = direction_to(&truth.ue, &self.pose)?;
        let ue_range = distance(&truth.ue, &self.pose.position);
        let pl = pathloss_los(&self.cfg.channel, ue_range, Some(shadow_db))?;
        let snr_db = snr(&LinkBudget {
            tx_power_dbm: self.cfg.tx_power_dbm,
            gain_db: array_gain(array, &w, &ue_dir)?,
            pathloss_db: pl.db,
            noise_power_dbm: self.noise_dbm,
        });
        let exposure_mw_cm2 = power_density(
            array,
            &w,
            self.cfg.tx_power_dbm,
            &truth.head,
            &self.pose,
            &self.cfg.exposure,
        )?;
        Ok(LinkOutcome {
            beam: Some(beam),
            snr_db,
            exposure_mw_cm2,
        })
    }

    /// Runs one trial at one grid point for every codebook.
    pub fn run_point(&self, point: &GridPoint, trial: usize) -> Result<TrialRecord> {
        let mut streams = TrialStreams::new(self.cfg.seed, point.index, trial);
        self.run_point_with(point, trial, &mut streams)
    }

    pub fn run_point_with(&self, point: &GridPoint, trial: usize, streams: &mut TrialStreams) -> Result<TrialRecord> {
        let truth = self.cfg.pedestrian.entities(self.cfg.pose, point.x, point.y);
        let detected = perturb(
            &truth,
            &self.pose,
            self.cfg.cv_model(),
            &mut streams.head,
            &mut streams.ue,
        )?;
        // the shadow draw is a standard-normal deviate; pathloss scales it by sigma
        let shadow = sample_shadow(&mut streams.shadow);

        let mut outcomes = Vec::with_capacity(self.codebooks.len());
        for pc in &self.codebooks {
            let cb = &pc.codebook;
            let initial = cb.nearest_beam(&detected.ue.direction).id;
            let head_beam = cb.nearest_beam(&detected.head.direction).id;
            let d0 = pc.policy.d0_for_range(detected.head.range_m);
            let baseline = self.evaluate(&self.cfg.array, cb, initial, &truth, shadow)?;
            let (decision, avoided) = match select_beam(cb, &initial, &head_beam, d0) {
                Ok(d) if d.selected == initial => (Some(d), baseline),
                Ok(d) => (Some(d), self.evaluate(&self.cfg.array, cb, d.selected, &truth, shadow)?),
                Err(Error::ExposureLimited) => (None, LinkOutcome::muted()),
                Err(e) => return Err(e),
            };
            outcomes.push(CodebookOutcome {
                initial,
                head_beam,
                d0_applied: d0,
                decision,
                baseline,
                avoided,
            });
        }
        Ok(TrialRecord {
            point: *point,
            trial,
            detected,
            shadow_db: shadow * self.cfg.channel.shadow_sigma_db,
            outcomes,
        })
    }

    /// All trials at all points, in (point, trial) order.
    pub fn run_records(&self) -> Result<Vec<TrialRecord>> {
        let points = self.cfg.grid.points();
        let trials = self.cfg.trials_per_point;
        let per_point: Vec<Result<Vec<TrialRecord>>> = points
            .par_iter()
            .map(|p| (0..trials).map(|t| self.run_point(p, t)).collect())
            .collect();
        let mut out = Vec::with_capacity(points.len() * trials);
        for r in per_point {
            out.extend(r?);
        }
        Ok(out)
    }

    pub fn run(&self) -> Result<ScenarioResult> {
        let records = self.run_records()?;
        Ok(self.aggregate(&records))
    }

    pub fn aggregate(&self, records: &[TrialRecord]) -> ScenarioResult {
        let points = self.cfg.grid.points();
        let codebooks = self
            .codebooks
            .iter()
            .enumerate()
            .map(|(ci, pc)| aggregate_codebook(&self.cfg.codebooks[ci], pc, ci, &points, records))
            .collect();
        ScenarioResult {
            seed: self.cfg.seed,
            pose: self.cfg.pose,
            nx: self.cfg.grid.nx(),
            ny: self.cfg.grid.ny(),
            trials_per_point: self.cfg.trials_per_point,
            codebooks,
        }
    }
}

/// Per-cell averages for the exposure maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub x: f64,
    pub y: f64,
    pub exposure_off: f64,
    pub exposure_on: f64,
    /// Most frequent beam over trials (ties to the smallest id); `None` if always muted.
    pub beam_off: BeamId,
    pub beam_on: Option<BeamId>,
    pub d0_applied: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSummary {
    pub exposure: Percentiles,
    pub exposure_mean: f64,
    pub snr: Percentiles,
    pub mean_head_beam_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookResult {
    pub label: String,
    pub crossover_db: f64,
    pub az_count: usize,
    pub tilt_count: usize,
    pub policy: AvoidancePolicy,
    pub map: Vec<MapCell>,
    /// Sorted per-trial head exposure, mW/cm².
    pub exposure_off: Vec<f64>,
    pub exposure_on: Vec<f64>,
    /// Sorted per-trial SNR, dB; muted trials are excluded.
    pub snr_off: Vec<f64>,
    pub snr_on: Vec<f64>,
    pub trigger_rate: f64,
    pub mute_rate: f64,
    pub off: SettingSummary,
    pub on: SettingSummary,
}

impl CodebookResult {
    pub fn median_snr_loss(&self) -> f64 {
        percentile(&self.snr_off, 50.0) - percentile(&self.snr_on, 50.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub seed: u64,
    pub pose: PoseKind,
    pub nx: usize,
    pub ny: usize,
    pub trials_per_point: usize,
    pub codebooks: Vec<CodebookResult>,
}

impl ScenarioResult {
    pub fn codebook(&self, label: &str) -> Option<&CodebookResult> {
        self.codebooks.iter().find(|c| c.label == label)
    }
}

fn mode(beams: impl Iterator<Item = BeamId>) -> Option<BeamId> {
    let mut v: Vec<BeamId> = beams.collect();
    v.sort();
    let mut best: Option<(usize, BeamId)> = None;
    let mut i = 0;
    while i < v.len() {
        let j = v[i..].iter().take_while(|b| **b == v[i]).count();
        if best.is_none_or(|(c, _)| j > c) {
            best = Some((j, v[i]));
        }
        i += j;
    }
    best.map(|(_, b)| b)
}

fn aggregate_codebook(
    spec: &CodebookSpec,
    pc: &PreparedCodebook,
    ci: usize,
    points: &[GridPoint],
    records: &[TrialRecord],
) -> CodebookResult {
    let outcomes: Vec<&CodebookOutcome> = records.iter().map(|r| &r.outcomes[ci]).collect();
    let n = outcomes.len().max(1) as f64;

    let mut by_point: Vec<Vec<&CodebookOutcome>> = vec![Vec::new(); points.len()];
    for (r, o) in records.iter().zip(&outcomes) {
        by_point[r.point.index].push(o);
    }
    let map = points
        .iter()
        .map(|p| {
            let os = &by_point[p.index];
            let mean_of = |f: &dyn Fn(&CodebookOutcome) -> f64| mean(&os.iter().map(|o| f(o)).collect::<Vec<_>>());
            MapCell {
                x: p.x,
                y: p.y,
                exposure_off: mean_of(&|o| o.baseline.exposure_mw_cm2),
                exposure_on: mean_of(&|o| o.avoided.exposure_mw_cm2),
                beam_off: mode(os.iter().map(|o| o.initial)).unwrap_or(BeamId::new(0, 0)),
                beam_on: mode(os.iter().filter_map(|o| o.avoided.beam)),
                d0_applied: os.first().map_or(0.0, |o| o.d0_applied),
            }
        })
        .collect();

    let exposure_off = sorted(outcomes.iter().map(|o| o.baseline.exposure_mw_cm2).collect());
    let exposure_on = sorted(outcomes.iter().map(|o| o.avoided.exposure_mw_cm2).collect());
    let snr_off = sorted(outcomes.iter().map(|o| o.baseline.snr_db).collect());
    let snr_on = sorted(
        outcomes
            .iter()
            .filter(|o| !o.muted())
            .map(|o| o.avoided.snr_db)
            .collect(),
    );
    let head_dist_off = mean(
        &outcomes
            .iter()
            .map(|o| beam_distance(&o.head_beam, &o.initial))
            .collect::<Vec<_>>(),
    );
    let head_dist_on = mean(
        &outcomes
            .iter()
            .filter_map(|o| o.decision.map(|d| beam_distance(&d.head_beam, &d.selected)))
            .collect::<Vec<_>>(),
    );
    let summary = |exp: &[f64], snr: &[f64], hd: f64| SettingSummary {
        exposure: Percentiles::of(exp),
        exposure_mean: mean(exp),
        snr: Percentiles::of(snr),
        mean_head_beam_distance: hd,
    };
    CodebookResult {
        label: spec.label(),
        crossover_db: spec.crossover_db,
        az_count: pc.codebook.az_count(),
        tilt_count: pc.codebook.tilt_count(),
        policy: pc.policy.clone(),
        off: summary(&exposure_off, &snr_off, head_dist_off),
        on: summary(&exposure_on, &snr_on, head_dist_on),
        map,
        trigger_rate: outcomes.iter().filter(|o| o.triggered()).count() as f64 / n,
        mute_rate: outcomes.iter().filter(|o| o.muted()).count() as f64 / n,
        exposure_off,
        exposure_on,
        snr_off,
        snr_on,
    }
}

/// Runs the whole experiment on the global rayon pool.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    Scenario::new(cfg.clone())?.run()
}

/// Runs the experiment on a dedicated pool with `workers` threads (0: one per core).
pub fn run_scenario_with_workers(cfg: &ScenarioConfig, workers: usize) -> Result<ScenarioResult> {
    let scenario = Scenario::new(cfg.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| scenario.run())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub codebook: String,
    pub d0: f64,
    pub mean_exposure: f64,
    pub median_snr: f64,
    pub mean_head_beam_distance: f64,
    pub trigger_rate: f64,
}

/// Re-runs the scenario with every codebook's policy replaced by a constant `d0`.
pub fn sweep_d0(cfg: &ScenarioConfig, d0_values: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &d0 in d0_values {
        let mut c = cfg.clone();
        for cb in &mut c.codebooks {
            cb.policy = Some(AvoidancePolicy::constant(d0));
        }
        let res = run_scenario(&c)?;
        for cb in &res.codebooks {
            rows.push(SweepRow {
                codebook: cb.label.clone(),
                d0,
                mean_exposure: cb.on.exposure_mean,
                median_snr: cb.on.snr.p50,
                mean_head_beam_distance: cb.on.mean_head_beam_distance,
                trigger_rate: cb.trigger_rate,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid(cfg: &mut ScenarioConfig) {
        cfg.grid = GridSpec {
            x: [1.5, 3.0],
            y: [-0.6, 0.6],
            step: 0.3,
        };
        cfg.trials_per_point = 4;
    }

    fn point(x: f64, y: f64) -> GridPoint {
        GridPoint {
            index: 0,
            ix: 0,
            iy: 0,
            x,
            y,
        }
    }

    #[test]
    fn single_cell_result_is_the_run_point_record() {
        let cfg = ScenarioConfig {
            grid: GridSpec {
                x: [3.0, 3.0],
                y: [0.5, 0.5],
                step: 0.1,
            },
            trials_per_point: 1,
            ..ScenarioConfig::default()
        };
        let sc = Scenario::new(cfg).unwrap();
        let res = sc.run().unwrap();
        let rec = sc.run_point(&sc.config().grid.points()[0], 0).unwrap();
        for (cb, o) in res.codebooks.iter().zip(&rec.outcomes) {
            assert_eq!(cb.exposure_off, vec![o.baseline.exposure_mw_cm2]);
            assert_eq!(cb.exposure_on, vec![o.avoided.exposure_mw_cm2]);
            assert_eq!(cb.snr_off, vec![o.baseline.snr_db]);
            assert_eq!(cb.map[0].beam_off, o.initial);
            assert_eq!(cb.trigger_rate, if o.triggered() { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn zero_d0_without_cv_leaves_the_baseline_untouched() {
        let mut cfg = ScenarioConfig {
            cv_enabled: false,
            ..ScenarioConfig::default()
        };
        small_grid(&mut cfg);
        for cb in &mut cfg.codebooks {
            cb.policy = Some(AvoidancePolicy::constant(0.0));
        }
        let sc = Scenario::new(cfg).unwrap();
        for r in sc.run_records().unwrap() {
            for o in &r.outcomes {
                assert!(!o.triggered());
                assert_eq!(o.avoided, o.baseline);
            }
        }
    }

    #[test]
    fn pose_a_at_three_and_a_half_metres_triggers() {
        let cfg = ScenarioConfig {
            cv_enabled: false,
            ..ScenarioConfig::default()
        };
        // head 3.3 m below the array, so 1.166 m out puts it 3.5 m away
        let x = (3.5f64.powi(2) - 3.3f64.powi(2)).sqrt();
        let sc = Scenario::new(cfg).unwrap();
        let rec = sc.run_point(&point(x, 0.0), 0).unwrap();
        assert!((rec.detected.head.range_m - 3.5).abs() < 1e-9);
        let fine = &rec.outcomes[1];
        assert_eq!(fine.d0_applied, 3.0);
        assert!(fine.triggered());
        let d = fine.decision.unwrap();
        assert!(beam_distance(&d.head_beam, &d.selected) >= 3.0);
    }

    #[test]
    fn pose_b_far_from_the_head_keeps_its_beam() {
        let cfg = ScenarioConfig {
            cv_enabled: false,
            pose: PoseKind::B,
            ..ScenarioConfig::default()
        };
        let sc = Scenario::new(cfg).unwrap();
        let rec = sc.run_point(&point(5.0, 0.0), 0).unwrap();
        for o in &rec.outcomes {
            assert!(beam_distance(&o.head_beam, &o.initial) > o.d0_applied);
            assert!(!o.triggered());
            assert_eq!(o.avoided, o.baseline);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = ScenarioConfig::default();
        small_grid(&mut cfg);
        let one = run_scenario_with_workers(&cfg, 1).unwrap();
        let four = run_scenario_with_workers(&cfg, 4).unwrap();
        assert_eq!(format!("{one:?}"), format!("{four:?}"));
    }

    #[test]
    fn reruns_without_cv_are_identical() {
        let mut cfg = ScenarioConfig {
            cv_enabled: false,
            ..ScenarioConfig::default()
        };
        small_grid(&mut cfg);
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn invalid_config_fails_before_running() {
        let cfg = ScenarioConfig {
            trials_per_point: 0,
            ..ScenarioConfig::default()
        };
        assert!(matches!(run_scenario(&cfg), Err(Error::InvalidConfig(_))));
        let close = ScenarioConfig {
            site: SiteConfig {
                bs_height_m: 1.9,
                ..SiteConfig::default()
            },
            grid: GridSpec {
                x: [0.0, 0.0],
                y: [0.0, 0.0],
                step: 0.1,
            },
            ..ScenarioConfig::default()
        };
        assert!(matches!(run_scenario(&close), Err(Error::NearField { .. })));
    }

    #[test]
    fn avoidance_exposure_cdf_is_left_of_the_baseline() {
        let res = run_scenario(&ScenarioConfig::default()).unwrap();
        for cb in &res.codebooks {
            for p in (10..=95).step_by(5) {
                let on = percentile(&cb.exposure_on, p as f64);
                let off = percentile(&cb.exposure_off, p as f64);
                assert!(on <= off, "{} p{p}: {on} > {off}", cb.label);
            }
            assert!((0.0..=1.0).contains(&cb.trigger_rate));
            assert!(cb.exposure_on.windows(2).all(|w| w[0] <= w[1]));
            assert!(cb.snr_on.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn doubling_trials_stays_within_sampling_noise() {
        let mut cfg = ScenarioConfig::default();
        cfg.grid.step = 0.25;
        let base = run_scenario(&cfg).unwrap();
        cfg.trials_per_point *= 2;
        let doubled = run_scenario(&cfg).unwrap();
        // distribution-free 99.9% interval for a quantile from order statistics
        let z = 3.29;
        for (a, b) in base.codebooks.iter().zip(&doubled.codebooks) {
            for (xs, ys) in [
                (&a.exposure_off, &b.exposure_off),
                (&a.exposure_on, &b.exposure_on),
                (&a.snr_off, &b.snr_off),
            ] {
                let n = xs.len() as f64;
                for p in [0.5, 0.95] {
                    let half = z * (n * p * (1.0 - p)).sqrt();
                    let lo = xs[((n * p - half).floor().max(0.0)) as usize];
                    let hi = xs[((n * p + half).ceil() as usize).min(xs.len() - 1)];
                    let q = percentile(ys, 100.0 * p);
                    assert!(lo <= q && q <= hi, "{} p{p}: {q} outside [{lo}, {hi}]", a.label);
                }
            }
        }
    }

    #[test]
    fn zero_d0_sweep_row_is_the_baseline() {
        let mut cfg = ScenarioConfig::default();
        small_grid(&mut cfg);
        let rows = sweep_d0(&cfg, &[0.0]).unwrap();
        let res = run_scenario(&cfg).unwrap();
        for (row, cb) in rows.iter().zip(&res.codebooks) {
            assert_eq!(row.mean_exposure, cb.off.exposure_mean);
            assert_eq!(row.median_snr, cb.off.snr.p50);
            assert_eq!(row.trigger_rate, 0.0);
        }
    }

    #[test]
    fn default_grid_spans_the_expected_head_ranges() {
        let (lo, hi) = ScenarioConfig::default().head_range_span();
        assert!((lo - 3.448).abs() < 1e-3, "{lo}");
        assert!((hi - 7.134).abs() < 1e-3, "{hi}");
    }

    #[test]
    fn streams_are_keyed_by_point_and_trial() {
        use rand::RngCore;
        let a = TrialStreams::new(1, 2, 3).shadow.next_u64();
        assert_eq!(a, TrialStreams::new(1, 2, 3).shadow.next_u64());
        assert_ne!(a, TrialStreams::new(1, 2, 4).shadow.next_u64());
        assert_ne!(a, TrialStreams::new(1, 3, 3).shadow.next_u64());
        assert_ne!(a, TrialStreams::new(1, 2, 3).head.next_u64());
    }
}
