//! Backprojection imaging `I(rho) = sum_j D_r(s_j, tau(s_j, rho(s_j)) - tau(s_j, rho_o))`
//! with optional uniform-motion compensation `rho(s) = rho + s u`.
//!
//! Traces are converted once to analytic baseband so that fractional delays
//! can be sampled with a short windowed-sinc kernel; the carrier is put back
//! exactly at each sampled delay.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{RadarConstants, SceneFrame, Trajectory, Vec3};
use crate::interp::{interpolate_complex, FftPair, TAPS};
use crate::tracematrix::{uniform_axis, TraceMatrix};

/// Pixel grid in the (range, cross-range) plane of the scene frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub range_axis: Vec<f64>,
    pub cross_axis: Vec<f64>,
}

impl ImageGrid {
    /// Grid of `width x height` metres (range x cross-range) around `center`.
    pub fn new(center: (f64, f64), width: f64, height: f64, range_step: f64, cross_step: f64) -> Result<Self> {
        if !(width >= 0.0 && height >= 0.0) {
            return Err(Error::param("image.width", "extent must be non-negative"));
        }
        if !(range_step > 0.0 && cross_step > 0.0) {
            return Err(Error::param("image.step", "pixel spacing must be positive"));
        }
        let axis = |c: f64, extent: f64, step: f64| {
            let half = (extent / (2.0 * step)).round() as usize;
            uniform_axis(c - half as f64 * step, step, 2 * half + 1)
        };
        Ok(Self { range_axis: axis(center.0, width, range_step), cross_axis: axis(center.1, height, cross_step) })
    }

    /// Grid with spacing a quarter of the range (`c/B`) and cross-range
    /// (`lambda L / a`) resolution.
    pub fn with_default_spacing(center: (f64, f64), width: f64, height: f64, radar: &RadarConstants, range: f64, aperture: f64) -> Result<Self> {
        let (dr, dc) = resolution(radar, range, aperture);
        Self::new(center, width, height, dr / 4.0, dc / 4.0)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.range_axis.len(), self.cross_axis.len())
    }

    /// Largest distance of a pixel from the reference point.
    pub fn radius(&self) -> f64 {
        let r = self.range_axis.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let c = self.cross_axis.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        r.hypot(c)
    }
}

/// `(c / B, lambda_o L / a)`.
pub fn resolution(radar: &RadarConstants, range: f64, aperture: f64) -> (f64, f64) {
    (radar.c / radar.bandwidth, radar.lambda_o() * range / aperture)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageMode {
    /// Real part of the coherent sum: the imaging function itself, linear in the traces.
    Real,
    /// Magnitude of the coherent sum of analytic traces.
    Envelope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SarImage {
    /// Rows follow the range axis, columns the cross-range axis.
    pub values: DMatrix<f64>,
    pub grid: ImageGrid,
    pub max_abs: f64,
    /// Pixels for which some delay fell outside the sampled fast time.
    pub flagged: usize,
}

impl SarImage {
    fn from_values(values: DMatrix<f64>, grid: ImageGrid, flagged: usize) -> Self {
        let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self { values, grid, max_abs, flagged }
    }

    /// Index `(range, cross)` of the largest `|value|`.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut top = f64::MIN;
        for k in 0..self.values.ncols() {
            for i in 0..self.values.nrows() {
                let v = self.values[(i, k)].abs();
                if v > top {
                    top = v;
                    best = (i, k);
                }
            }
        }
        best
    }

    /// Scene coordinates of the peak.
    pub fn peak_position(&self) -> (f64, f64) {
        let (i, k) = self.argmax();
        (self.grid.range_axis[i], self.grid.cross_axis[k])
    }

    pub fn range_profile(&self, cross_index: usize) -> Vec<f64> {
        self.values.column(cross_index).iter().copied().collect()
    }

    pub fn cross_profile(&self, range_index: usize) -> Vec<f64> {
        self.values.row(range_index).iter().copied().collect()
    }

    /// Stored in the SARM container with pixel coordinates as axes.
    pub fn to_tracematrix(&self) -> Result<TraceMatrix> {
        TraceMatrix::new(self.values.clone(), self.grid.range_axis.clone(), self.grid.cross_axis.clone(), 1.0)
    }
}

/// Analytic-baseband traces ready for repeated backprojection.
pub struct Backprojector {
    baseband: Vec<Vec<Complex64>>,
    t0: f64,
    dt: f64,
    platform: Vec<Vec3>,
    ref_dist: Vec<f64>,
    s_axis: Vec<f64>,
    frame: SceneFrame,
    omega_o: f64,
    c: f64,
}

impl Backprojector {
    pub fn new(tm: &TraceMatrix, trajectory: &Trajectory, frame: &SceneFrame, radar: &RadarConstants) -> Result<Self> {
        if tm.cols() < TAPS {
            return Err(Error::Shape(format!("need at least {TAPS} fast-time samples, got {}", tm.cols())));
        }
        let dt = tm.dt();
        let omega_o = radar.omega_o();
        let fft = FftPair::padded(tm.cols());
        let baseband = (0..tm.rows())
            .into_par_iter()
            .map(|j| {
                let mut a = fft.analytic(&tm.row(j));
                for (v, &t) in a.iter_mut().zip(&tm.t_axis) {
                    *v *= Complex64::from_polar(1.0, -omega_o * t);
                }
                a
            })
            .collect();
        let platform: Vec<Vec3> = tm.s_axis.iter().map(|&s| trajectory.position(s)).collect();
        let ref_dist = platform.iter().map(|r| (r - frame.rho_o).norm()).collect();
        Ok(Self {
            baseband,
            t0: tm.t_axis[0],
            dt,
            platform,
            ref_dist,
            s_axis: tm.s_axis.clone(),
            frame: frame.clone(),
            omega_o,
            c: radar.c,
        })
    }

    /// Coherent sum at a pixel (scene coordinates) moving with velocity
    /// `motion` = (range, cross-range) m/s. Returns the sum and whether some
    /// delay fell outside the sampled span.
    pub fn pixel(&self, range: f64, cross: f64, motion: (f64, f64)) -> (Complex64, bool) {
        let base = self.frame.to_world(&Vec3::new(range, cross, 0.0));
        let vel = self.frame.direction_to_world(&Vec3::new(motion.0, motion.1, 0.0));
        let len = self.baseband[0].len() as f64;
        let lo = (TAPS / 2) as f64;
        let hi = len - (TAPS / 2) as f64 - 1.0;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut outside = false;
        for j in 0..self.s_axis.len() {
            let rho = base + vel * self.s_axis[j];
            let d = 2.0 * ((self.platform[j] - rho).norm() - self.ref_dist[j]) / self.c;
            let x = (d - self.t0) / self.dt;
            if !(x >= lo && x <= hi) {
                outside = true;
                continue;
            }
            let b = interpolate_complex(&self.baseband[j], x);
            acc += b * Complex64::from_polar(1.0, self.omega_o * d);
        }
        (acc, outside)
    }

    /// Incoherent sum `sum_j |b_j(d_j)|`, insensitive to the carrier phase.
    pub fn pixel_incoherent(&self, range: f64, cross: f64, motion: (f64, f64)) -> f64 {
        let base = self.frame.to_world(&Vec3::new(range, cross, 0.0));
        let vel = self.frame.direction_to_world(&Vec3::new(motion.0, motion.1, 0.0));
        let len = self.baseband[0].len() as f64;
        let lo = (TAPS / 2) as f64;
        let hi = len - (TAPS / 2) as f64 - 1.0;
        let mut acc = 0.0;
        for j in 0..self.s_axis.len() {
            let rho = base + vel * self.s_axis[j];
            let d = 2.0 * ((self.platform[j] - rho).norm() - self.ref_dist[j]) / self.c;
            let x = (d - self.t0) / self.dt;
            if x >= lo && x <= hi {
                acc += interpolate_complex(&self.baseband[j], x).norm();
            }
        }
        acc
    }

    pub fn image(&self, grid: &ImageGrid, motion: Option<(f64, f64)>, mode: ImageMode) -> SarImage {
        let motion = motion.unwrap_or((0.0, 0.0));
        let (nr, nc) = grid.shape();
        let rows: Vec<(Vec<f64>, usize)> = grid
            .range_axis
            .par_iter()
            .map(|&x| {
                let mut flagged = 0;
                let vals = grid
                    .cross_axis
                    .iter()
                    .map(|&y| {
                        let (v, outside) = self.pixel(x, y, motion);
                        flagged += outside as usize;
                        match mode {
                            ImageMode::Real => v.re,
                            ImageMode::Envelope => v.norm(),
                        }
                    })
                    .collect();
                (vals, flagged)
            })
            .collect();
        let flagged = rows.iter().map(|r| r.1).sum();
        if flagged > 0 {
            log::warn!("{flagged} pixels had delays outside the sampled fast-time window");
        }
        let values = DMatrix::from_fn(nr, nc, |i, k| rows[i].0[k]);
        SarImage::from_values(values, grid.clone(), flagged)
    }
}

pub fn backproject(
    tm: &TraceMatrix,
    grid: &ImageGrid,
    trajectory: &Trajectory,
    frame: &SceneFrame,
    radar: &RadarConstants,
    motion: Option<(f64, f64)>,
    mode: ImageMode,
) -> Result<SarImage> {
    Ok(Backprojector::new(tm, trajectory, frame, radar)?.image(grid, motion, mode))
}

/// `20 log10(|v| / max|v|)`, clipped below at `floor_db`.
pub fn to_db(img: &SarImage, floor_db: f64) -> SarImage {
    let top = img.max_abs;
    let values = img.values.map(|v| {
        if top == 0.0 || v == 0.0 {
            floor_db
        } else {
            (20.0 * (v.abs() / top).log10()).max(floor_db)
        }
    });
    SarImage { values, grid: img.grid.clone(), max_abs: img.max_abs, flagged: img.flagged }
}

/// Full width at half maximum of the peak of `|values|` along `axis`,
/// with linear interpolation of the crossings.
pub fn fwhm(axis: &[f64], values: &[f64]) -> Option<f64> {
    let mag: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let (peak, &top) = mag.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if top == 0.0 {
        return None;
    }
    let half = top / 2.0;
    let mut left = None;
    for i in (0..peak).rev() {
        if mag[i] < half {
            let f = (half - mag[i]) / (mag[i + 1] - mag[i]);
            left = Some(axis[i] + f * (axis[i + 1] - axis[i]));
            break;
        }
    }
    let mut right = None;
    for i in peak + 1..mag.len() {
        if mag[i] < half {
            let f = (mag[i - 1] - half) / (mag[i - 1] - mag[i]);
            right = Some(axis[i - 1] + f * (axis[i] - axis[i - 1]));
            break;
        }
    }
    Some(right? - left?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Target;
    use crate::signal::{synthesize_traces, SamplingGrid, Scene};

    fn scene(targets: Vec<Target>, n: usize) -> Scene {
        let radar = RadarConstants::gotcha();
        let traj = Trajectory::straight_track(1.0e4, 7300.0, 70.0).unwrap();
        let grid = SamplingGrid::for_scene(n, 0.015, 10.0, &radar).unwrap();
        Scene::new(radar, traj, Vec3::zeros(), grid, targets).unwrap()
    }

    #[test]
    fn db_examples() {
        let grid = ImageGrid::new((0.0, 0.0), 2.0, 0.0, 1.0, 1.0).unwrap();
        let img = SarImage::from_values(DMatrix::from_column_slice(3, 1, &[10.0, 1.0, 0.0]), grid, 0);
        let db = to_db(&img, -50.0);
        assert_eq!(db.values[(0, 0)], 0.0);
        assert!((db.values[(1, 0)] + 20.0).abs() < 1e-12);
        assert_eq!(db.values[(2, 0)], -50.0);
    }

    #[test]
    fn fwhm_of_gaussian() {
        let axis = uniform_axis(-5.0, 0.01, 1001);
        let vals: Vec<f64> = axis.iter().map(|x| (-x * x / 2.0).exp()).collect();
        let w = fwhm(&axis, &vals).unwrap();
        assert!((w - 2.0 * (2.0 * 2f64.ln()).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn reference_target_focuses_at_center() {
        let sc = scene(vec![Target::stationary(0.0, 0.0)], 32);
        let tm = synthesize_traces(&sc).unwrap();
        let grid = ImageGrid::new((0.0, 0.0), 2.0, 8.0, 0.1, 0.5).unwrap();
        for mode in [ImageMode::Real, ImageMode::Envelope] {
            let img = backproject(&tm, &grid, &sc.trajectory, &sc.frame, &sc.radar, None, mode).unwrap();
            assert_eq!(img.peak_position(), (0.0, 0.0));
            assert_eq!(img.flagged, 0);
            // the real image at the target is the plain sum of the trace peaks
            if mode == ImageMode::Real {
                let (i, k) = img.argmax();
                assert!((img.values[(i, k)] - tm.rows() as f64).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn zero_traces_give_zero_image() {
        let sc = scene(vec![Target::stationary(0.0, 0.0)], 8);
        let tm = synthesize_traces(&sc).unwrap().zeros_like();
        let grid = ImageGrid::new((0.0, 0.0), 1.0, 1.0, 0.5, 0.5).unwrap();
        let img = backproject(&tm, &grid, &sc.trajectory, &sc.frame, &sc.radar, None, ImageMode::Real).unwrap();
        assert_eq!(img.max_abs, 0.0);
    }

    #[test]
    fn real_image_is_linear() {
        let a = synthesize_traces(&scene(vec![Target::stationary(1.0, 2.0)], 16)).unwrap();
        let sc = scene(vec![Target::moving(-2.0, 0.5, 3.0, 1.0)], 16);
        let b = synthesize_traces(&sc).unwrap();
        let sum = a.with_data(&a.data + &b.data).unwrap();
        let grid = ImageGrid::new((0.0, 1.0), 4.0, 4.0, 0.25, 0.5).unwrap();
        let im = |tm: &TraceMatrix| backproject(tm, &grid, &sc.trajectory, &sc.frame, &sc.radar, None, ImageMode::Real).unwrap();
        let lhs = im(&sum).values;
        let rhs = im(&a).values + im(&b).values;
        assert!((lhs - rhs).abs().max() < 1e-10);
    }

    #[test]
    fn motion_compensation_refocuses_mover() {
        let u = (28.0 / 2f64.sqrt(), 28.0 / 2f64.sqrt());
        let sc = {
            let radar = RadarConstants::gotcha();
            let traj = Trajectory::straight_track(1.0e4, 7300.0, 70.0).unwrap();
            let grid = SamplingGrid::for_scene(32, 0.015, 25.0, &radar).unwrap();
            Scene::new(radar, traj, Vec3::zeros(), grid, vec![Target::moving(0.0, 0.0, u.0, u.1)]).unwrap()
        };
        let tm = synthesize_traces(&sc).unwrap();
        let grid = ImageGrid::new((0.0, 0.0), 2.0, 20.0, 0.1, 1.0).unwrap();
        let img = backproject(&tm, &grid, &sc.trajectory, &sc.frame, &sc.radar, Some(u), ImageMode::Envelope).unwrap();
        let (x, y) = img.peak_position();
        assert!(x.abs() <= 0.1 && y.abs() <= 1.0, "peak at ({x}, {y})");
    }
}
