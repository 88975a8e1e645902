//! Velocity estimation for a single moving target with a known position at
//! `s = 0`, by maximizing the focus of motion-compensated backprojection.
//!
//! Range velocity shows up in the envelope of the traces, so a coarse grid
//! over the whole search box is scored incoherently first. Cross-range
//! velocity only bends the echo by a fraction of a resolution cell and is
//! resolved by the coherent image peak in the second stage.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{RadarConstants, SceneFrame, Trajectory};
use crate::imaging::{resolution, Backprojector};
use crate::tracematrix::TraceMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct MotionParams {
    /// Half widths of the velocity search box (range, cross-range), m/s.
    pub box_half_width: (f64, f64),
    pub coarse_step: f64,
    pub refine: usize,
    /// Side of the square of pixels around the anchor whose peak is the focus score, m.
    pub focus_extent: f64,
    /// Coherent stage: half width of the range-velocity window around the
    /// incoherent estimate and grid steps (range, cross-range).
    pub coherent_range_window: f64,
    pub coherent_step: (f64, f64),
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            box_half_width: (30.0, 30.0),
            coarse_step: 1.0,
            refine: 3,
            focus_extent: 5.0,
            coherent_range_window: 0.3,
            coherent_step: (0.03, 1.0),
        }
    }
}

impl MotionParams {
    pub fn validate(&self, platform_speed: f64) -> Result<()> {
        let (br, bc) = self.box_half_width;
        if !(br > 0.0 && bc > 0.0) {
            return Err(Error::param("motion.box_half_width_mps", "must be positive"));
        }
        if br.hypot(bc) >= platform_speed && br.max(bc) >= platform_speed {
            return Err(Error::param("motion.box_half_width_mps", "search box must stay below the platform speed"));
        }
        if !(self.coarse_step > 0.0) {
            return Err(Error::param("motion.coarse_step_mps", "must be positive"));
        }
        if !(self.focus_extent > 0.0) {
            return Err(Error::param("motion.focus_extent_m", "must be positive"));
        }
        if !(self.coherent_step.0 > 0.0 && self.coherent_step.1 > 0.0 && self.coherent_range_window >= 0.0) {
            return Err(Error::param("motion.coherent_step_mps", "must be positive"));
        }
        Ok(())
    }
}

/// One stage of grid search.
#[derive(Debug, Clone, Serialize)]
pub struct SearchStage {
    pub name: &'static str,
    pub step: (f64, f64),
    pub best: (f64, f64),
    pub score: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VelocityEstimate {
    /// (range, cross-range) velocity, m/s.
    pub u_hat: (f64, f64),
    /// Coherent focus score at `u_hat`.
    pub score: f64,
    pub stages: Vec<SearchStage>,
}

/// Pixel offsets of the focus square: `(range offsets, cross offsets)`.
fn focus_offsets(extent: f64, step: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let axis = |h: f64| {
        let k = ((extent / 2.0) / h).floor() as i64;
        (-k..=k).map(|i| i as f64 * h).collect::<Vec<_>>()
    };
    (axis(step.0), axis(step.1))
}

struct Scorer<'a> {
    bp: &'a Backprojector,
    anchor: (f64, f64),
    coarse: (Vec<f64>, Vec<f64>),
    fine: (Vec<f64>, Vec<f64>),
    speed: f64,
}

impl Scorer<'_> {
    fn incoherent(&self, u: (f64, f64)) -> f64 {
        if u.0.hypot(u.1) >= self.speed {
            return f64::NEG_INFINITY;
        }
        let mut best = 0.0f64;
        for &dr in &self.coarse.0 {
            for &dc in &self.coarse.1 {
                best = best.max(self.bp.pixel_incoherent(self.anchor.0 + dr, self.anchor.1 + dc, u));
            }
        }
        best
    }

    fn coherent(&self, u: (f64, f64)) -> f64 {
        if u.0.hypot(u.1) >= self.speed {
            return f64::NEG_INFINITY;
        }
        let mut best = 0.0f64;
        for &dr in &self.fine.0 {
            for &dc in &self.fine.1 {
                best = best.max(self.bp.pixel(self.anchor.0 + dr, self.anchor.1 + dc, u).0.norm());
            }
        }
        best
    }
}

struct GridResult {
    best: (f64, f64),
    score: f64,
    min: f64,
    evaluations: usize,
}

/// Exhaustive search over `center +- half` at `step`, clipped to `bounds`.
fn grid_search(score: &(dyn Fn((f64, f64)) -> f64 + Sync), center: (f64, f64), half: (f64, f64), step: (f64, f64), bounds: (f64, f64)) -> GridResult {
    let axis = |c: f64, h: f64, d: f64, b: f64| {
        let k = (h / d).round() as i64;
        (-k..=k).map(|i| c + i as f64 * d).filter(|v| v.abs() <= b + 1e-12).collect::<Vec<_>>()
    };
    let ur = axis(center.0, half.0, step.0, bounds.0);
    let uc = axis(center.1, half.1, step.1, bounds.1);
    let candidates: Vec<(f64, f64)> = ur.iter().flat_map(|&a| uc.iter().map(move |&b| (a, b))).collect();
    let scores: Vec<f64> = candidates.par_iter().map(|&u| score(u)).collect();
    let mut best = center;
    let mut top = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for (&u, &v) in candidates.iter().zip(&scores) {
        if v > top {
            top = v;
            best = u;
        }
        if v.is_finite() {
            min = min.min(v);
        }
    }
    GridResult { best, score: top, min, evaluations: candidates.len() }
}

/// Coarse grid then `refine` halvings, each searching +-2 steps around the incumbent.
#[allow(clippy::too_many_arguments)]
fn coarse_to_fine(
    name: &'static str,
    score: &(dyn Fn((f64, f64)) -> f64 + Sync),
    center: (f64, f64),
    half: (f64, f64),
    step: (f64, f64),
    refine: usize,
    bounds: (f64, f64),
    stages: &mut Vec<SearchStage>,
) -> GridResult {
    let mut res = grid_search(score, center, half, step, bounds);
    stages.push(SearchStage { name, step, best: res.best, score: res.score, evaluations: res.evaluations });
    let mut step = step;
    for _ in 0..refine {
        step = (step.0 / 2.0, step.1 / 2.0);
        let next = grid_search(score, res.best, (2.0 * step.0, 2.0 * step.1), step, bounds);
        stages.push(SearchStage { name, step, best: next.best, score: next.score, evaluations: next.evaluations });
        if next.score >= res.score {
            res = GridResult { min: res.min, ..next };
        }
    }
    res
}

/// Velocity of the target whose scene position at `s = 0` is `anchor`.
pub fn estimate_velocity(
    tm: &TraceMatrix,
    trajectory: &Trajectory,
    frame: &SceneFrame,
    radar: &RadarConstants,
    anchor: (f64, f64),
    params: &MotionParams,
) -> Result<VelocityEstimate> {
    let speed = trajectory.speed();
    params.validate(speed)?;
    let bp = Backprojector::new(tm, trajectory, frame, radar)?;
    estimate_with(&bp, frame, radar, tm, anchor, params, speed)
}

fn estimate_with(
    bp: &Backprojector,
    frame: &SceneFrame,
    radar: &RadarConstants,
    tm: &TraceMatrix,
    anchor: (f64, f64),
    params: &MotionParams,
    speed: f64,
) -> Result<VelocityEstimate> {
    let aperture = speed * (tm.s_axis[tm.rows() - 1] - tm.s_axis[0]);
    let (dr, dc) = resolution(radar, frame.range, aperture.max(f64::MIN_POSITIVE));
    let scorer = Scorer {
        bp,
        anchor,
        coarse: focus_offsets(params.focus_extent, (dr, dc)),
        fine: focus_offsets(params.focus_extent, (dr / 4.0, dc / 4.0)),
        speed,
    };
    let bounds = params.box_half_width;
    let mut stages = Vec::new();

    let step = (params.coarse_step, params.coarse_step);
    let incoherent = |u| scorer.incoherent(u);
    let stage1 = coarse_to_fine("incoherent", &incoherent, (0.0, 0.0), bounds, step, params.refine, bounds, &mut stages);
    let variation = if stage1.score > 0.0 { (stage1.score - stage1.min) / stage1.score } else { 0.0 };
    if !(variation > 1e-6) {
        return Err(Error::NoMovingEnergy { variation });
    }

    let coherent = |u| scorer.coherent(u);
    let half = (params.coherent_range_window, bounds.1);
    let center = (stage1.best.0, 0.0);
    let stage2 = coarse_to_fine("coherent", &coherent, center, half, params.coherent_step, params.refine, bounds, &mut stages);
    Ok(VelocityEstimate { u_hat: stage2.best, score: stage2.score, stages })
}

/// `|(anchor + s u_hat) - (anchor + s u_true)|` for each slow time.
pub fn trajectory_error(u_hat: (f64, f64), u_true: (f64, f64), s_axis: &[f64]) -> Vec<f64> {
    let du = (u_hat.0 - u_true.0).hypot(u_hat.1 - u_true.1);
    s_axis.iter().map(|s| s.abs() * du).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Target, Vec3};
    use crate::signal::{synthesize_traces, SamplingGrid, Scene};

    fn scene(targets: Vec<Target>) -> Scene {
        let radar = RadarConstants::gotcha();
        let traj = Trajectory::straight_track(1.0e4, 7300.0, 70.0).unwrap();
        let grid = SamplingGrid::for_scene(128, 0.015, 25.0, &radar).unwrap();
        Scene::new(radar, traj, Vec3::zeros(), grid, targets).unwrap()
    }

    fn estimate(sc: &Scene, tm: &TraceMatrix) -> Result<VelocityEstimate> {
        estimate_velocity(tm, &sc.trajectory, &sc.frame, &sc.radar, (0.0, 0.0), &MotionParams::default())
    }

    #[test]
    fn error_curve_properties() {
        let s = [-1.0, -0.5, 0.0, 0.5, 2.0];
        assert!(trajectory_error((1.0, 2.0), (1.0, 2.0), &s).iter().all(|&e| e == 0.0));
        let e = trajectory_error((4.0, 0.0), (1.0, 4.0), &s);
        assert_eq!(e[2], 0.0);
        assert!((e[4] - 10.0).abs() < 1e-12 && (e[1] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn recovers_single_mover() {
        let u = (28.0 / 2f64.sqrt(), 28.0 / 2f64.sqrt());
        let sc = scene(vec![Target::moving(0.0, 0.0, u.0, u.1)]);
        let tm = synthesize_traces(&sc).unwrap();
        let est = estimate(&sc, &tm).unwrap();
        let err = (est.u_hat.0 - u.0).hypot(est.u_hat.1 - u.1);
        assert!(err <= 0.5, "u_hat = {:?}, error {err}", est.u_hat);
    }

    #[test]
    fn zero_velocity_mover() {
        let sc = scene(vec![Target::stationary(0.0, 0.0)]);
        let tm = synthesize_traces(&sc).unwrap();
        let est = estimate(&sc, &tm).unwrap();
        assert!(est.u_hat.0.abs() <= 0.02 && est.u_hat.1.abs() <= 0.5, "{:?}", est.u_hat);
    }

    #[test]
    fn empty_traces_have_no_moving_energy() {
        let sc = scene(vec![Target::stationary(0.0, 0.0)]);
        let tm = synthesize_traces(&sc).unwrap().zeros_like();
        assert!(matches!(estimate(&sc, &tm), Err(Error::NoMovingEnergy { .. })));
    }
}
