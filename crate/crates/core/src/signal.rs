//! Pulse models and the trace simulator.
//!
//! The main simulator evaluates the compressed pulse
//! `f_p(t) = cos(omega_o t) exp(-B^2 t^2 / 2)` directly at the relative
//! delays of every target, producing pulse- and range-compressed traces.
//! For validating the processing chain there is also a raw simulator that
//! emits a Gaussian-tapered chirp, plus [`pulse_compress`] and
//! [`range_compress`] to turn raw echoes into traces.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{delta_tau, travel_time, RadarConstants, SceneFrame, Target, Trajectory, Vec3};
use crate::interp::FftPair;
use crate::tracematrix::{centered_axis, uniform_axis, TraceMatrix};

/// Beyond this many `1/B` from its centre a pulse is below `exp(-40)`.
const PULSE_SUPPORT_B: f64 = 9.0;

/// The compressed pulse `cos(omega_o t) exp(-B^2 t^2 / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseModel {
    pub omega_o: f64,
    pub bandwidth: f64,
}

impl PulseModel {
    pub fn new(radar: &RadarConstants) -> Self {
        Self { omega_o: radar.omega_o(), bandwidth: radar.bandwidth }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.omega_o * t).cos() * self.envelope(t)
    }

    #[inline]
    pub fn envelope(&self, t: f64) -> f64 {
        let bt = self.bandwidth * t;
        (-0.5 * bt * bt).exp()
    }
}

pub fn compressed_pulse(pulse: &PulseModel, t: f64) -> f64 {
    pulse.eval(t)
}

/// Slow/fast time sampling: `s_j = j ds` for `j = -n/2..=n/2` and
/// `t_l = l dt` for `l = -m/2..=m/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingGrid {
    pub n: usize,
    pub delta_s: f64,
    pub m: usize,
    pub delta_t: f64,
}

impl SamplingGrid {
    pub fn new(n: usize, delta_s: f64, m: usize, delta_t: f64, radar: &RadarConstants) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::param("n", format!("slow-time count must be even and >= 2, got {n}")));
        }
        if m < 2 || !m.is_multiple_of(2) {
            return Err(Error::param("m", format!("fast-time count must be even and >= 2, got {m}")));
        }
        if !(delta_s > 0.0) || !(delta_t > 0.0) {
            return Err(Error::param("delta_t", "sampling steps must be positive"));
        }
        let limit = nyquist_step(radar);
        if delta_t > limit {
            return Err(Error::Nyquist { dt: delta_t, limit });
        }
        Ok(Self { n, delta_s, m, delta_t })
    }

    /// Grid whose fast-time window covers a scene of half-width `scene_half_width`
    /// metres around the reference point: `T_f = 2 sqrt(2) R / c + 10 / B`,
    /// sampled at four samples per carrier period.
    pub fn for_scene(n: usize, delta_s: f64, scene_half_width: f64, radar: &RadarConstants) -> Result<Self> {
        let delta_t = 1.0 / (4.0 * radar.nu_o);
        let t_f = 2.0 * scene_half_width * 2f64.sqrt() / radar.c + 10.0 / radar.bandwidth;
        let m = 2 * (t_f / delta_t).ceil() as usize;
        Self::new(n, delta_s, m, delta_t, radar)
    }

    pub fn half_width(&self) -> f64 {
        (self.m / 2) as f64 * self.delta_t
    }

    pub fn slow_times(&self) -> Vec<f64> {
        centered_axis(self.n / 2, self.delta_s)
    }

    pub fn fast_times(&self) -> Vec<f64> {
        centered_axis(self.m / 2, self.delta_t)
    }

    /// Aperture length `V n ds` flown by a platform at `speed`.
    pub fn aperture(&self, speed: f64) -> f64 {
        speed * self.n as f64 * self.delta_s
    }
}

/// Largest fast-time step that samples the real carrier without aliasing.
pub fn nyquist_step(radar: &RadarConstants) -> f64 {
    1.0 / (2.0 * (radar.nu_o + radar.bandwidth / 2.0))
}

/// Everything the simulator needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub radar: RadarConstants,
    pub trajectory: Trajectory,
    pub frame: SceneFrame,
    pub grid: SamplingGrid,
    pub targets: Vec<Target>,
}

/// What to synthesize per target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// The compressed pulse itself.
    Echo,
    /// Its Gaussian envelope only (no carrier), used for energy masks.
    Envelope,
}

impl Scene {
    pub fn new(
        radar: RadarConstants,
        trajectory: Trajectory,
        rho_o: Vec3,
        grid: SamplingGrid,
        targets: Vec<Target>,
    ) -> Result<Self> {
        let frame = SceneFrame::new(rho_o, &trajectory)?;
        let scene = Self { radar, trajectory, frame, grid, targets };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        let limit = nyquist_step(&self.radar);
        if self.grid.delta_t > limit {
            return Err(Error::Nyquist { dt: self.grid.delta_t, limit });
        }
        let speed = self.trajectory.speed();
        let half = self.grid.half_width();
        let margin = 5.0 / self.radar.bandwidth;
        let s_axis = self.grid.slow_times();
        for (index, target) in self.targets.iter().enumerate() {
            target.validate(if speed > 0.0 { Some(speed) } else { None })?;
            for &s in &s_axis {
                let d = self.relative_delay(target, s);
                if d.abs() + margin > half {
                    return Err(Error::EchoTruncated { index, delay: d.abs(), half_width: half });
                }
            }
        }
        Ok(())
    }

    pub fn pulse(&self) -> PulseModel {
        PulseModel::new(&self.radar)
    }

    /// `tau(s, rho(s)) - tau(s, rho_o)` for a target.
    pub fn relative_delay(&self, target: &Target, s: f64) -> f64 {
        delta_tau(&self.trajectory, s, &target.position(&self.frame, s), &self.frame.rho_o, self.radar.c)
    }

    /// Amplitude prefactor `1 / (4 pi L)^2` factored out of the traces.
    pub fn amp_scale(&self) -> f64 {
        (4.0 * PI * self.frame.range).powi(-2)
    }

    pub fn aperture(&self) -> f64 {
        self.grid.aperture(self.trajectory.speed())
    }

    /// Indices of stationary and moving targets.
    pub fn populations(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.targets.len()).partition(|&i| !self.targets[i].is_moving())
    }

    /// A rigid translation of platform, reference point and targets.
    pub fn translated(&self, shift: Vec3) -> Result<Self> {
        let trajectory = self.trajectory.translated(shift);
        Self::new(self.radar, trajectory, self.frame.rho_o + shift, self.grid, self.targets.clone())
    }
}

/// `M_jl = sum_q sigma_q f_p(t_l - delta tau(s_j, rho_q(s_j)))`.
pub fn synthesize_traces(scene: &Scene) -> Result<TraceMatrix> {
    let all: Vec<usize> = (0..scene.targets.len()).collect();
    synthesize_subset(scene, &all, TraceKind::Echo)
}

/// Traces of the targets listed in `indices` only.
pub fn synthesize_subset(scene: &Scene, indices: &[usize], kind: TraceKind) -> Result<TraceMatrix> {
    scene.validate()?;
    if let Some(&bad) = indices.iter().find(|&&i| i >= scene.targets.len()) {
        return Err(Error::param("indices", format!("target {bad} does not exist")));
    }
    let grid = scene.grid;
    let s_axis = grid.slow_times();
    let t_axis = grid.fast_times();
    let pulse = scene.pulse();
    let reach = PULSE_SUPPORT_B / scene.radar.bandwidth;
    let half = (grid.m / 2) as f64;
    let cols = grid.m + 1;
    let rows: Vec<Vec<f64>> = s_axis
        .par_iter()
        .map(|&s| {
            let mut row = vec![0.0; cols];
            for &q in indices {
                let target = &scene.targets[q];
                let d = scene.relative_delay(target, s);
                let lo = (((d - reach) / grid.delta_t + half).floor().max(0.0)) as usize;
                let hi = (((d + reach) / grid.delta_t + half).ceil().min(grid.m as f64)) as usize;
                for l in lo..=hi {
                    let t = t_axis[l] - d;
                    row[l] += target.sigma
                        * match kind {
                            TraceKind::Echo => pulse.eval(t),
                            TraceKind::Envelope => pulse.envelope(t),
                        };
                }
            }
            row
        })
        .collect();
    let data = DMatrix::from_fn(s_axis.len(), cols, |j, l| rows[j][l]);
    TraceMatrix::new(data, s_axis, t_axis, scene.amp_scale())
}

/// Gaussian-tapered linear FM chirp
/// `A cos(omega_o t + pi kappa t^2) exp(-a t^2)` whose autocorrelation is
/// the compressed pulse of bandwidth `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianChirp {
    pub omega_o: f64,
    /// Envelope rate `a` (1/s^2).
    pub taper: f64,
    /// Chirp rate `kappa` (Hz/s).
    pub rate: f64,
    pub amplitude: f64,
}

impl GaussianChirp {
    /// Chirp for bandwidth `B` with taper `a = (B / stretch)^2`; `stretch > 1`
    /// lengthens the pulse relative to `1/B`.
    pub fn design(radar: &RadarConstants, stretch: f64) -> Result<Self> {
        if !(stretch > 1.0) {
            return Err(Error::param("stretch", "must exceed 1"));
        }
        let b = radar.bandwidth;
        let taper = (b / stretch).powi(2);
        let rate = (taper * (b * b - taper)).sqrt() / PI;
        // (A^2 / 2) sqrt(pi / (2a)) = 1 makes the autocorrelation peak at one
        let amplitude = (2.0 * (2.0 * taper / PI).sqrt()).sqrt();
        Ok(Self { omega_o: radar.omega_o(), taper, rate, amplitude })
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.omega_o * t + PI * self.rate * t * t).cos() * (-self.taper * t * t).exp()
    }

    /// Half-width beyond which the taper is below `exp(-40)`.
    pub fn support(&self) -> f64 {
        (40.0 / self.taper).sqrt()
    }

    /// Bandwidth of the compressed pulse, `sqrt(a + pi^2 kappa^2 / a)`.
    pub fn compressed_bandwidth(&self) -> f64 {
        (self.taper + (PI * self.rate).powi(2) / self.taper).sqrt()
    }
}

/// Raw (uncompressed) echoes `sum_q sigma_q f(t - tau(s, rho_q(s)))` on an
/// absolute fast-time axis wide enough to range-compress back onto `scene.grid`.
pub fn simulate_raw(scene: &Scene, chirp: &GaussianChirp) -> Result<TraceMatrix> {
    scene.validate()?;
    let grid = scene.grid;
    let dt = grid.delta_t;
    let s_axis = grid.slow_times();
    let c = scene.radar.c;
    let ref_delays: Vec<f64> = s_axis.iter().map(|&s| travel_time(&scene.trajectory, s, &scene.frame.rho_o, c)).collect();
    let (lo, hi) = ref_delays.iter().fold((f64::MAX, f64::MIN), |(a, b), &d| (a.min(d), b.max(d)));
    let margin = grid.half_width() + 2.0 * chirp.support() + 16.0 * dt;
    let t0 = ((lo - margin) / dt).floor() * dt;
    let cols = ((hi + margin - t0) / dt).ceil() as usize + 1;
    let t_axis = uniform_axis(t0, dt, cols);
    let reach = chirp.support();
    let rows: Vec<Vec<f64>> = s_axis
        .par_iter()
        .map(|&s| {
            let mut row = vec![0.0; cols];
            let r = scene.trajectory.position(s);
            for target in &scene.targets {
                let tau = 2.0 * (r - target.position(&scene.frame, s)).norm() / c;
                let first = (((tau - reach - t0) / dt).floor().max(0.0)) as usize;
                let last = (((tau + reach - t0) / dt).ceil() as usize).min(cols - 1);
                for k in first..=last {
                    row[k] += target.sigma * chirp.eval(t_axis[k] - tau);
                }
            }
            row
        })
        .collect();
    let data = DMatrix::from_fn(s_axis.len(), cols, |j, l| rows[j][l]);
    TraceMatrix::new(data, s_axis, t_axis, scene.amp_scale())
}

/// Matched filtering `D_p(s, t) = int D(s, t') f(t' - t) dt'` as a discrete
/// correlation along fast time (trapezoid weights, scaled by `dt`).
pub fn pulse_compress(raw: &TraceMatrix, chirp: &GaussianChirp) -> Result<TraceMatrix> {
    let dt = raw.dt();
    if !(dt > 0.0) {
        return Err(Error::Shape("raw traces need at least two fast-time samples".into()));
    }
    let half = (chirp.support() / dt).ceil() as usize;
    let reference = matched_reference(chirp, dt, half);
    let cols = raw.cols();
    let fft = FftPair::padded(cols + 2 * half + 1);
    let len = fft.len;
    // reference placed circularly at lags -half..=half
    let mut kernel = vec![Complex64::new(0.0, 0.0); len];
    for (i, &v) in reference.iter().enumerate() {
        let lag = i as isize - half as isize;
        kernel[lag.rem_euclid(len as isize) as usize] = Complex64::new(v, 0.0);
    }
    fft.forward(&mut kernel);
    let rows: Vec<Vec<f64>> = (0..raw.rows())
        .into_par_iter()
        .map(|j| {
            let mut buf = vec![Complex64::new(0.0, 0.0); len];
            for (b, v) in buf.iter_mut().zip(raw.data.row(j).iter()) {
                b.re = *v;
            }
            fft.forward(&mut buf);
            for (b, k) in buf.iter_mut().zip(&kernel) {
                *b *= k.conj();
            }
            fft.inverse(&mut buf);
            buf[..cols].iter().map(|c| c.re).collect()
        })
        .collect();
    let data = DMatrix::from_fn(raw.rows(), cols, |j, l| rows[j][l]);
    raw.with_data(data)
}

/// `dt * w_d * f(d dt)` for lags `d = -half..=half`, trapezoid end weights.
pub(crate) fn matched_reference(chirp: &GaussianChirp, dt: f64, half: usize) -> Vec<f64> {
    (0..=2 * half)
        .map(|i| {
            let lag = i as f64 - half as f64;
            let w = if i == 0 || i == 2 * half { 0.5 } else { 1.0 };
            dt * w * chirp.eval(lag * dt)
        })
        .collect()
}

/// `D_r(s, t) = D_p(s, t + tau(s, rho_o))` resampled onto the fast-time
/// axis of `grid` (which must share the step of `dp`).
pub fn range_compress(dp: &TraceMatrix, trajectory: &Trajectory, rho_o: &Vec3, c: f64, grid: &SamplingGrid) -> Result<TraceMatrix> {
    let dt = dp.dt();
    if ((dt - grid.delta_t) / grid.delta_t).abs() > 1e-9 {
        return Err(Error::Shape(format!("fast-time step {dt:e} differs from the grid step {:e}", grid.delta_t)));
    }
    let out_axis = grid.fast_times();
    let t0 = dp.t_axis[0];
    let cols = dp.cols();
    let fft = FftPair::padded(cols);
    let mut rows = Vec::with_capacity(dp.rows());
    for (j, &s) in dp.s_axis.iter().enumerate() {
        let shift = travel_time(trajectory, s, rho_o, c);
        // fractional index of out_axis[0] + shift in dp
        let x = (out_axis[0] + shift - t0) / dt;
        let base = x.floor();
        let frac = x - base;
        if base < 0.0 || base as usize + grid.m + 1 > cols {
            return Err(Error::ShiftOutOfSpan { shift });
        }
        let row = dp.row(j);
        let shifted = if frac.abs() < 1e-12 { row } else { fft.shift(&row, frac) };
        let base = base as usize;
        rows.push(shifted[base..=base + grid.m].to_vec());
    }
    let data = DMatrix::from_fn(dp.rows(), grid.m + 1, |j, l| rows[j][l]);
    TraceMatrix::new(data, dp.s_axis.clone(), out_axis, dp.amp_scale)
}
