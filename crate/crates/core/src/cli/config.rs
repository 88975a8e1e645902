//! Scene configuration file. Every physical quantity carries its unit in the key name.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RadarConstants, Target, Trajectory, Vec3};
use crate::imaging::ImageGrid;
use crate::motionest::MotionParams;
use crate::rpca::PcpParams;
use crate::signal::{SamplingGrid, Scene};
use crate::tracematrix::WindowPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub seed: u64,
    pub radar: RadarSection,
    pub trajectory: TrajectorySection,
    pub sampling: SamplingSection,
    pub reference_m: [f64; 3],
    pub targets: Vec<TargetSection>,
    pub random_targets: RandomTargets,
    pub windows: WindowSection,
    pub pcp: PcpSection,
    pub image: ImageSection,
    pub rank: RankSection,
    pub motion: MotionSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarSection {
    pub speed_of_light_mps: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
}

/// Straight track at constant ground range and height from the reference point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySection {
    pub ground_range_m: f64,
    pub height_m: f64,
    pub speed_mps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    /// `n`; the trace matrix has `n + 1` rows.
    pub slow_time_intervals: usize,
    pub slow_time_step_s: f64,
    /// Radius `R^I` of the region the fast-time window must cover.
    pub imaging_radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSection {
    pub range_m: f64,
    pub cross_m: f64,
    pub u_range_mps: f64,
    pub u_cross_mps: f64,
    pub sigma: f64,
}

/// Stationary targets drawn uniformly in the square `|range|, |cross| <= half_extent_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomTargets {
    pub count: usize,
    pub half_extent_m: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSection {
    /// Fast-time window width in samples; 0 solves the whole matrix at once.
    pub width_samples: usize,
    pub overlap_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PcpSection {
    /// Sparsity weight; `1 / sqrt(max(rows, cols))` per window when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImageSection {
    pub width_m: f64,
    pub height_m: f64,
    /// Defaults to a quarter of the range resolution `c / B`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range_step_m: Option<f64>,
    /// Defaults to a quarter of the cross-range resolution `lambda L / a`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_step_m: Option<f64>,
    /// Motion compensation velocity (range, cross-range).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub motion_mps: Option<[f64; 2]>,
    pub floor_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankSection {
    pub epsilon: f64,
    /// Points at which the symbol is sampled on `[-pi, pi]`.
    pub symbol_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionSection {
    /// Known position of the target at `s = 0`; defaults to the first moving target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor_m: Option<[f64; 2]>,
    pub box_half_width_mps: [f64; 2],
    pub coarse_step_mps: f64,
    pub refine_levels: usize,
    pub focus_extent_m: f64,
}

/// Rank curve over one parameter of one configured target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub target: usize,
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    RangeM,
    CrossM,
    URangeMps,
    UCrossMps,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            radar: RadarSection::default(),
            trajectory: TrajectorySection::default(),
            sampling: SamplingSection::default(),
            reference_m: [0.0; 3],
            targets: Vec::new(),
            random_targets: RandomTargets::default(),
            windows: WindowSection::default(),
            pcp: PcpSection::default(),
            image: ImageSection::default(),
            rank: RankSection::default(),
            motion: MotionSection::default(),
            sweep: None,
        }
    }
}

impl Default for RadarSection {
    fn default() -> Self {
        let r = RadarConstants::gotcha();
        Self { speed_of_light_mps: r.c, carrier_hz: r.nu_o, bandwidth_hz: r.bandwidth }
    }
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self { ground_range_m: 1.0e4, height_m: 7300.0, speed_mps: 70.0 }
    }
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self { slow_time_intervals: 128, slow_time_step_s: 0.015, imaging_radius_m: 35.0 }
    }
}

impl Default for TargetSection {
    fn default() -> Self {
        Self { range_m: 0.0, cross_m: 0.0, u_range_mps: 0.0, u_cross_mps: 0.0, sigma: 1.0 }
    }
}

impl Default for RandomTargets {
    fn default() -> Self {
        Self { count: 0, half_extent_m: 35.0, sigma: 1.0 }
    }
}

impl Default for WindowSection {
    fn default() -> Self {
        // 450 samples at the coarser fast-time step of a 16384-sample record
        // span about 19 ns; 730 samples keep that duration at dt = 1 / (4 nu)
        Self { width_samples: 730, overlap_samples: 0 }
    }
}

impl Default for PcpSection {
    fn default() -> Self {
        let p = PcpParams::default();
        Self { eta: None, tolerance: p.tol, max_iterations: p.max_iters }
    }
}

impl Default for ImageSection {
    fn default() -> Self {
        Self { width_m: 70.0, height_m: 70.0, range_step_m: None, cross_step_m: None, motion_mps: None, floor_db: -50.0 }
    }
}

impl Default for RankSection {
    fn default() -> Self {
        Self { epsilon: 0.01, symbol_samples: 1024 }
    }
}

impl Default for MotionSection {
    fn default() -> Self {
        let p = MotionParams::default();
        Self {
            anchor_m: None,
            box_half_width_mps: [p.box_half_width.0, p.box_half_width.1],
            coarse_step_mps: p.coarse_step,
            refine_levels: p.refine,
            focus_extent_m: p.focus_extent,
        }
    }
}

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), reason: reason.into() }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(key, format!("must be positive and finite, got {v}")))
    }
}

/// Recursively overlays `top` onto `base`.
fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// `(anchor, true velocity)` in scene coordinates.
pub type TrackedTarget = ((f64, f64), Option<(f64, f64)>);

impl SceneConfig {
    /// Parses a config file, overlaying it on `base` when given.
    pub fn parse(text: &str, base: Option<&SceneConfig>) -> Result<Self> {
        // parsing on its own first gives errors that point at the offending key
        let own: SceneConfig = toml::from_str(text).map_err(|e: toml::de::Error| config_err("config", e.to_string()))?;
        let cfg = match base {
            None => own,
            Some(base) => {
                let mut merged = toml::Value::try_from(base).map_err(|e| config_err("<preset>", e.to_string()))?;
                let top: toml::Value = toml::from_str(text).map_err(|e| config_err("<file>", e.to_string()))?;
                merge(&mut merged, top);
                merged.try_into().map_err(|e: toml::de::Error| config_err("<merged>", e.to_string()))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        positive("radar.speed_of_light_mps", self.radar.speed_of_light_mps)?;
        positive("radar.carrier_hz", self.radar.carrier_hz)?;
        positive("radar.bandwidth_hz", self.radar.bandwidth_hz)?;
        positive("trajectory.ground_range_m", self.trajectory.ground_range_m)?;
        positive("trajectory.speed_mps", self.trajectory.speed_mps)?;
        if !self.trajectory.height_m.is_finite() {
            return Err(config_err("trajectory.height_m", "must be finite"));
        }
        let n = self.sampling.slow_time_intervals;
        if n < 2 || !n.is_multiple_of(2) {
            return Err(config_err("sampling.slow_time_intervals", format!("must be even and >= 2, got {n}")));
        }
        positive("sampling.slow_time_step_s", self.sampling.slow_time_step_s)?;
        positive("sampling.imaging_radius_m", self.sampling.imaging_radius_m)?;
        if self.reference_m.iter().any(|v| !v.is_finite()) {
            return Err(config_err("reference_m", "must be finite"));
        }
        for (i, t) in self.targets.iter().enumerate() {
            let vals = [t.range_m, t.cross_m, t.u_range_mps, t.u_cross_mps];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(config_err(&format!("targets[{i}]"), "coordinates must be finite"));
            }
            if t.u_range_mps.hypot(t.u_cross_mps) >= self.trajectory.speed_mps {
                return Err(config_err(&format!("targets[{i}].u_range_mps"), "target speed must stay below the platform speed"));
            }
            positive(&format!("targets[{i}].sigma"), t.sigma)?;
        }
        if self.random_targets.count > 0 {
            positive("random_targets.half_extent_m", self.random_targets.half_extent_m)?;
            positive("random_targets.sigma", self.random_targets.sigma)?;
        }
        if self.windows.width_samples > 0 && self.windows.overlap_samples >= self.windows.width_samples {
            return Err(config_err("windows.overlap_samples", "must be smaller than windows.width_samples"));
        }
        if let Some(eta) = self.pcp.eta {
            positive("pcp.eta", eta)?;
        }
        positive("pcp.tolerance", self.pcp.tolerance)?;
        if self.pcp.max_iterations == 0 {
            return Err(config_err("pcp.max_iterations", "must be at least 1"));
        }
        if !(self.image.width_m >= 0.0 && self.image.height_m >= 0.0) {
            return Err(config_err("image.width_m", "extent must be non-negative"));
        }
        if let Some(v) = self.image.range_step_m {
            positive("image.range_step_m", v)?;
        }
        if let Some(v) = self.image.cross_step_m {
            positive("image.cross_step_m", v)?;
        }
        if !(self.rank.epsilon > 0.0 && self.rank.epsilon < 1.0) {
            return Err(config_err("rank.epsilon", format!("must lie in (0, 1), got {}", self.rank.epsilon)));
        }
        let [br, bc] = self.motion.box_half_width_mps;
        positive("motion.box_half_width_mps", br.min(bc))?;
        positive("motion.coarse_step_mps", self.motion.coarse_step_mps)?;
        positive("motion.focus_extent_m", self.motion.focus_extent_m)?;
        if let Some(sw) = &self.sweep {
            if sw.target >= self.targets.len() {
                return Err(config_err("sweep.target", format!("no target {} configured", sw.target)));
            }
            if sw.count < 2 {
                return Err(config_err("sweep.count", "needs at least two points"));
            }
        }
        Ok(())
    }

    pub fn radar(&self) -> Result<RadarConstants> {
        RadarConstants::new(self.radar.speed_of_light_mps, self.radar.carrier_hz, self.radar.bandwidth_hz)
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        let t = &self.trajectory;
        let track = Trajectory::straight_track(t.ground_range_m, t.height_m, t.speed_mps)?;
        Ok(track.translated(self.reference()))
    }

    pub fn reference(&self) -> Vec3 {
        Vec3::from(self.reference_m)
    }

    pub fn sampling_grid(&self) -> Result<SamplingGrid> {
        let s = &self.sampling;
        SamplingGrid::for_scene(s.slow_time_intervals, s.slow_time_step_s, s.imaging_radius_m, &self.radar()?)
    }

    /// Configured targets followed by the seeded random stationary ones.
    pub fn targets(&self) -> Vec<Target> {
        let mut out: Vec<Target> = self
            .targets
            .iter()
            .map(|t| Target::moving(t.range_m, t.cross_m, t.u_range_mps, t.u_cross_mps).with_sigma(t.sigma))
            .collect();
        let rt = &self.random_targets;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..rt.count {
            let x = rng.random_range(-rt.half_extent_m..=rt.half_extent_m);
            let y = rng.random_range(-rt.half_extent_m..=rt.half_extent_m);
            out.push(Target::stationary(x, y).with_sigma(rt.sigma));
        }
        out
    }

    pub fn scene(&self) -> Result<Scene> {
        self.scene_with(self.targets())
    }

    pub fn scene_with(&self, targets: Vec<Target>) -> Result<Scene> {
        Scene::new(self.radar()?, self.trajectory()?, self.reference(), self.sampling_grid()?, targets)
    }

    pub fn window_plan(&self, cols: usize) -> Result<WindowPlan> {
        if self.windows.width_samples == 0 || self.windows.width_samples >= cols {
            Ok(WindowPlan::single(cols))
        } else {
            WindowPlan::new(self.windows.width_samples, self.windows.overlap_samples, cols)
        }
    }

    pub fn pcp_params(&self) -> PcpParams {
        PcpParams { eta: self.pcp.eta, tol: self.pcp.tolerance, max_iters: self.pcp.max_iterations, ..PcpParams::default() }
    }

    pub fn image_grid(&self, scene: &Scene) -> Result<ImageGrid> {
        let (dr, dc) = crate::imaging::resolution(&scene.radar, scene.frame.range, scene.aperture());
        let i = &self.image;
        if i.width_m.max(i.height_m) / 2.0 > self.sampling.imaging_radius_m {
            log::warn!("image extent exceeds the imaging radius; edge pixels may fall outside the fast-time window");
        }
        ImageGrid::new((0.0, 0.0), i.width_m, i.height_m, i.range_step_m.unwrap_or(dr / 4.0), i.cross_step_m.unwrap_or(dc / 4.0))
    }

    pub fn motion_params(&self) -> MotionParams {
        let m = &self.motion;
        MotionParams {
            box_half_width: (m.box_half_width_mps[0], m.box_half_width_mps[1]),
            coarse_step: m.coarse_step_mps,
            refine: m.refine_levels,
            focus_extent: m.focus_extent_m,
            ..MotionParams::default()
        }
    }

    /// Anchor position and true velocity of the tracked target, if any.
    pub fn tracked_target(&self) -> Option<TrackedTarget> {
        let mover = self.targets.iter().find(|t| t.u_range_mps != 0.0 || t.u_cross_mps != 0.0);
        match (self.motion.anchor_m, mover) {
            (Some([x, y]), m) => Some(((x, y), m.map(|t| (t.u_range_mps, t.u_cross_mps)))),
            (None, Some(t)) => Some(((t.range_m, t.cross_m), Some((t.u_range_mps, t.u_cross_mps)))),
            (None, None) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = SceneConfig::default();
        cfg.validate().unwrap();
        let back = SceneConfig::parse(&cfg.to_toml(), None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = SceneConfig::parse("[radar]\nbandwith_hz = 1e9\n", None).unwrap_err();
        assert!(err.to_string().contains("bandwith_hz"), "{err}");
    }

    #[test]
    fn invalid_value_is_named() {
        let err = SceneConfig::parse("[sampling]\nslow_time_intervals = 7\n", None).unwrap_err();
        assert!(err.to_string().contains("sampling.slow_time_intervals"), "{err}");
    }

    #[test]
    fn overlay_keeps_base_values() {
        let mut base = SceneConfig::default();
        base.random_targets.count = 5;
        let cfg = SceneConfig::parse("seed = 9\n[radar]\nbandwidth_hz = 5e8\n", Some(&base)).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.radar.bandwidth_hz, 5e8);
        assert_eq!(cfg.radar.carrier_hz, 9.6e9);
        assert_eq!(cfg.random_targets.count, 5);
    }

    #[test]
    fn random_targets_are_seeded() {
        let mut cfg = SceneConfig::default();
        cfg.random_targets.count = 4;
        cfg.seed = 3;
        assert_eq!(cfg.targets(), cfg.targets());
        let first = cfg.targets();
        cfg.seed = 4;
        assert_ne!(first, cfg.targets());
        assert!(first.iter().all(|t| !t.is_moving()));
    }
}
