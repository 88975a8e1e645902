//! Band-limited resampling helpers: Kaiser-windowed sinc interpolation,
//! FFT phase-ramp shifts and analytic (Hilbert) signals along fast time.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Number of taps of the windowed-sinc interpolator.
pub const TAPS: usize = 8;
const HALF: isize = (TAPS / 2) as isize;
const KAISER_BETA: f64 = 6.0;
const TABLE_LEN: usize = 8192;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn kaiser_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let norm = bessel_i0(KAISER_BETA);
        (0..=TABLE_LEN + 1)
            .map(|i| {
                let r = (i as f64 / TABLE_LEN as f64).min(1.0);
                bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm
            })
            .collect()
    })
}

/// Kaiser window on `|x| <= TAPS/2`, zero outside.
fn kaiser(x: f64) -> f64 {
    let r = x.abs() / HALF as f64;
    if r >= 1.0 {
        return 0.0;
    }
    let pos = r * TABLE_LEN as f64;
    let i = pos as usize;
    let f = pos - i as f64;
    let t = kaiser_table();
    t[i] * (1.0 - f) + t[i + 1] * f
}

/// Interpolation weights for fractional position `x` (in samples).
/// Returns the first tap index and the `TAPS` weights.
#[inline]
pub fn sinc_weights(x: f64) -> (isize, [f64; TAPS]) {
    let base = x.floor();
    let frac = x - base;
    let first = base as isize - HALF + 1;
    let mut w = [0.0; TAPS];
    if frac == 0.0 {
        w[(HALF - 1) as usize] = 1.0;
        return (first, w);
    }
    let s = (PI * frac).sin() / PI;
    for (k, wk) in w.iter_mut().enumerate() {
        // distance from the sample at `first + k`
        let d = frac - (k as isize - HALF + 1) as f64;
        // sin(pi d) = (-1)^m sin(pi frac) for d = frac - m
        let m = k as isize - HALF + 1;
        let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        *wk = sign * s / d * kaiser(d);
    }
    (first, w)
}

/// Windowed-sinc interpolation of a uniformly sampled real sequence at the
/// fractional sample index `x`; samples outside the sequence count as zero.
pub fn interpolate(samples: &[f64], x: f64) -> f64 {
    let (first, w) = sinc_weights(x);
    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let i = first + k as isize;
        if i >= 0 && (i as usize) < samples.len() {
            acc += wk * samples[i as usize];
        }
    }
    acc
}

/// Complex version of [`interpolate`].
pub fn interpolate_complex(samples: &[Complex64], x: f64) -> Complex64 {
    let (first, w) = sinc_weights(x);
    let mut acc = Complex64::new(0.0, 0.0);
    if first >= 0 && (first as usize + TAPS) <= samples.len() {
        let s = &samples[first as usize..first as usize + TAPS];
        for k in 0..TAPS {
            acc += s[k] * w[k];
        }
        return acc;
    }
    for (k, wk) in w.iter().enumerate() {
        let i = first + k as isize;
        if i >= 0 && (i as usize) < samples.len() {
            acc += samples[i as usize] * *wk;
        }
    }
    acc
}

/// Forward/inverse FFT pair of a fixed length.
pub struct FftPair {
    pub len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { len, forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len) }
    }

    /// Length with comfortable zero padding for a sequence of `n` samples.
    pub fn padded(n: usize) -> Self {
        Self::new((n + 64).next_power_of_two())
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform, normalized by `1/len`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn load(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (b, v) in buf.iter_mut().zip(x) {
            b.re = *v;
        }
        buf
    }

    /// Signed frequency index of bin `k`.
    fn signed(&self, k: usize) -> f64 {
        if k <= self.len / 2 { k as f64 } else { k as f64 - self.len as f64 }
    }

    /// Analytic signal `x + i H[x]` of a real sequence.
    pub fn analytic(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf = self.load(x);
        self.forward(&mut buf);
        let half = self.len / 2;
        for (k, v) in buf.iter_mut().enumerate() {
            if k == 0 || (self.len.is_multiple_of(2) && k == half) {
                continue;
            }
            if k < half || (self.len % 2 == 1 && k == half) {
                *v *= 2.0;
            } else {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse(&mut buf);
        buf.truncate(x.len());
        buf
    }

    /// `y[k] = x(k + shift)` for a band-limited sequence (circular, so the
    /// caller provides enough zero padding).
    pub fn shift(&self, x: &[f64], shift: f64) -> Vec<f64> {
        let mut buf = self.load(x);
        self.forward(&mut buf);
        let half = self.len / 2;
        for (k, v) in buf.iter_mut().enumerate() {
            if self.len.is_multiple_of(2) && k == half {
                *v = Complex64::new(0.0, 0.0);
                continue;
            }
            let phase = 2.0 * PI * self.signed(k) * shift / self.len as f64;
            *v *= Complex64::from_polar(1.0, phase);
        }
        self.inverse(&mut buf);
        buf.into_iter().take(x.len()).map(|c| c.re).collect()
    }
}
