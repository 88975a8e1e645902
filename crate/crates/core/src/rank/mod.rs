//! Covariance of the trace matrix rows, its Toeplitz and g-Hankel models,
//! essential rank and the Szegő-type asymptotics of the rank.

pub mod quadrature;
pub mod symbol;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{delta_tau, RadarConstants, SceneFrame, Target, Trajectory};
use crate::signal::{synthesize_traces, SamplingGrid, Scene};
use crate::tracematrix::TraceMatrix;

pub use quadrature::{adaptive_simpson, integrate_with_breaks};
pub use symbol::{symbol_1target, symbol_2target, wrap_angle, Symbol};

/// `C = M M^T`, plus the step needed to turn it into the integral form.
#[derive(Debug, Clone)]
pub struct EmpiricalCovariance {
    pub gram: DMatrix<f64>,
    pub delta_t: f64,
}

impl EmpiricalCovariance {
    /// `dt M M^T`, the Riemann sum of `int D_r(s, t) D_r(s', t) dt`.
    pub fn riemann(&self) -> DMatrix<f64> {
        &self.gram * self.delta_t
    }
}

pub fn covariance_empirical(tm: &TraceMatrix) -> EmpiricalCovariance {
    EmpiricalCovariance { gram: &tm.data * tm.data.transpose(), delta_t: tm.dt() }
}

/// Sampling and radar constants the analytic models depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelGrid {
    pub n: usize,
    pub delta_s: f64,
    pub delta_t: f64,
    pub bandwidth: f64,
    pub omega_o: f64,
}

impl ModelGrid {
    pub fn new(grid: &SamplingGrid, radar: &RadarConstants) -> Self {
        Self { n: grid.n, delta_s: grid.delta_s, delta_t: grid.delta_t, bandwidth: radar.bandwidth, omega_o: radar.omega_o() }
    }

    /// Zero-lag value `sqrt(pi) / (2 B dt)`.
    pub fn k_factor(&self) -> f64 {
        PI.sqrt() / (2.0 * self.bandwidth * self.delta_t)
    }

    pub fn xi(&self, alpha: f64) -> f64 {
        self.bandwidth * alpha.abs() * self.delta_s
    }

    pub fn gamma(&self, alpha: f64) -> f64 {
        wrap_angle(self.omega_o * alpha * self.delta_s)
    }

    /// Autocorrelation of the compressed pulse at delay `x`, in samples.
    fn kernel(&self, x: f64) -> f64 {
        self.k_factor() * (self.omega_o * x).cos() * (-(self.bandwidth * x).powi(2) / 4.0).exp()
    }

    fn slow_times(&self) -> Vec<f64> {
        (0..=self.n).map(|j| (j as f64 - (self.n / 2) as f64) * self.delta_s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ModelKind {
    OneTarget { alpha: f64 },
    TwoTarget {
        alpha1: f64,
        alpha2: f64,
        beta: f64,
        /// `beta / (|alpha1| ds)`.
        zeta: f64,
        /// `-alpha2 / alpha1` when it is a positive integer.
        g: Option<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct CovarianceModel {
    pub grid: ModelGrid,
    pub kind: ModelKind,
    /// Full covariance `T + H + H^T` (or `T` for one target).
    pub matrix: DMatrix<f64>,
    /// Sum of the per-target Toeplitz terms.
    pub toeplitz: DMatrix<f64>,
    /// Cross term `H` (two targets only).
    pub cross: Option<DMatrix<f64>>,
    pub symbol: Symbol,
}

impl CovarianceModel {
    /// Generating sequence `h_k`, `k = 0..=(1 + g) n`, with `H_jl = h_{j + g l}`.
    pub fn hankel_sequence(&self) -> Result<Vec<f64>> {
        let ModelKind::TwoTarget { alpha1, beta, g: Some(g), .. } = self.kind else {
            return Err(Error::param("g", "model has no integral g-Hankel structure"));
        };
        let n = self.grid.n;
        let k0 = ((1 + g) * n / 2) as f64;
        Ok((0..=(1 + g) * n).map(|k| self.grid.kernel(alpha1 * self.grid.delta_s * (k as f64 - k0) + beta)).collect())
    }

    /// Generating sequence `c_k` of the Toeplitz part, `k = 0..=n`.
    pub fn toeplitz_sequence(&self) -> Vec<f64> {
        (0..=self.grid.n as i64).map(|k| self.symbol.coefficient(k)).collect()
    }
}

fn toeplitz_from(grid: &ModelGrid, alphas: &[f64]) -> DMatrix<f64> {
    let s = grid.slow_times();
    let lags: Vec<f64> = (0..=grid.n)
        .map(|k| alphas.iter().map(|&a| grid.kernel(a * k as f64 * grid.delta_s)).sum())
        .collect();
    DMatrix::from_fn(s.len(), s.len(), |j, l| lags[j.abs_diff(l)])
}

/// `C(s, s') = K cos(omega_o alpha (s - s')) exp(-(B alpha)^2 (s - s')^2 / 4)`.
pub fn covariance_model_1target(grid: &ModelGrid, alpha: f64) -> Result<CovarianceModel> {
    let toeplitz = toeplitz_from(grid, &[alpha]);
    let symbol = symbol_1target(grid.xi(alpha), grid.gamma(alpha), grid.bandwidth, grid.delta_t)?;
    Ok(CovarianceModel {
        grid: *grid,
        kind: ModelKind::OneTarget { alpha },
        matrix: toeplitz.clone(),
        toeplitz,
        cross: None,
        symbol,
    })
}

/// Two stationary targets: `C = T_1 + T_2 + H + H^T` where
/// `H_jl = K cos(omega_o x) exp(-B^2 x^2 / 4)` at `x = alpha1 s_j - alpha2 s_l + beta`.
pub fn covariance_model_2target(grid: &ModelGrid, alpha1: f64, alpha2: f64, beta: f64) -> Result<CovarianceModel> {
    let toeplitz = toeplitz_from(grid, &[alpha1, alpha2]);
    let s = grid.slow_times();
    let cross = DMatrix::from_fn(s.len(), s.len(), |j, l| grid.kernel(alpha1 * s[j] - alpha2 * s[l] + beta));
    let ratio = -alpha2 / alpha1;
    let g = if ratio.is_finite() && ratio >= 1.0 - 1e-9 && (ratio - ratio.round()).abs() <= 1e-9 * ratio {
        Some(ratio.round() as usize)
    } else {
        None
    };
    if g.is_none() {
        log::debug!("alpha2/alpha1 = {} is not a negative integer; no g-Hankel structure", alpha2 / alpha1);
    }
    let zeta = beta / (alpha1.abs() * grid.delta_s);
    let matrix = &toeplitz + &cross + cross.transpose();
    let symbol = symbol_2target(grid.xi(alpha1), grid.gamma(alpha1), grid.xi(alpha2), grid.gamma(alpha2), grid.bandwidth, grid.delta_t)?;
    Ok(CovarianceModel { grid: *grid, kind: ModelKind::TwoTarget { alpha1, alpha2, beta, zeta, g }, matrix, toeplitz, cross: Some(cross), symbol })
}

/// Largest `|C - C^T|` relative to `max |C|`.
pub fn asymmetry(c: &DMatrix<f64>) -> f64 {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for j in 0..c.nrows() {
        for l in 0..j {
            worst = worst.max((c[(j, l)] - c[(l, j)]).abs());
        }
    }
    worst / scale
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn symmetric_eigenvalues(c: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !c.is_square() {
        return Err(Error::Shape(format!("covariance must be square, got {:?}", c.shape())));
    }
    let asym = asymmetry(c);
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    let mut ev: Vec<f64> = c.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Number of eigenvalues at or above `epsilon * lambda_max`.
pub fn essential_rank(c: &DMatrix<f64>, epsilon: f64) -> Result<usize> {
    rank_from_eigenvalues(&symmetric_eigenvalues(c)?, epsilon)
}

pub fn rank_from_eigenvalues(eigenvalues: &[f64], epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    let top = eigenvalues.iter().fold(f64::MIN, |a, &b| a.max(b));
    if !(top > 0.0) {
        return Ok(0);
    }
    Ok(eigenvalues.iter().filter(|&&v| v >= epsilon * top).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankEstimate {
    pub epsilon: f64,
    pub essential_rank: usize,
    /// `essential_rank / (n + 1)`.
    pub normalized: f64,
    /// Closed-form asymptotic fraction.
    pub asymptotic: f64,
}

pub fn rank_estimate(c: &DMatrix<f64>, epsilon: f64, asymptotic: f64) -> Result<RankEstimate> {
    let essential_rank = essential_rank(c, epsilon)?;
    Ok(RankEstimate { epsilon, essential_rank, normalized: essential_rank as f64 / c.nrows() as f64, asymptotic })
}

/// `min(2 |alpha| B ds sqrt(ln(1/epsilon)) / pi, 1)`.
pub fn szego_rank_fraction(alpha: f64, bandwidth: f64, delta_s: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    Ok((2.0 * alpha.abs() * bandwidth * delta_s * (1.0 / epsilon).ln().sqrt() / PI).min(1.0))
}

/// `(1 / 2 pi) |{theta : Q(theta) >= epsilon ||Q||_inf}|` by quadrature.
pub fn szego_rank_fraction_quadrature(symbol: &Symbol, epsilon: f64) -> f64 {
    let level = epsilon * symbol.sup_norm();
    let indicator = |t: f64| if symbol.eval(t) >= level { 1.0 } else { 0.0 };
    integrate_with_breaks(&indicator, -PI, PI, &symbol.breakpoints(), 1e-9) / (2.0 * PI)
}

/// Phase error of the linearized relative delay:
/// `|omega_o (dtau(s) - dtau(s')) - omega_o alpha (s - s')|`.
pub fn linearization_error(
    trajectory: &Trajectory,
    frame: &SceneFrame,
    target: &Target,
    s: f64,
    s_prime: f64,
    radar: &RadarConstants,
) -> f64 {
    let c = radar.c;
    let d = |s: f64| delta_tau(trajectory, s, &target.position(frame, s), &frame.rho_o, c);
    let alpha = crate::geometry::alpha(frame, trajectory, target, c);
    (radar.omega_o() * ((d(s) - d(s_prime)) - alpha * (s - s_prime))).abs()
}

/// Both sides of the singular value distribution statement for
/// `A = T + H + H^T`: `(1/(n+1)) sum F(sigma_j(A))` and `(1/2pi) int F(|Q|)`.
pub fn sv_distribution_check(
    toeplitz: &DMatrix<f64>,
    cross: Option<&DMatrix<f64>>,
    test_fn: &impl Fn(f64) -> f64,
    symbol: &Symbol,
) -> Result<(f64, f64)> {
    let mut a = toeplitz.clone();
    if let Some(h) = cross {
        a += h;
        a += h.transpose();
    }
    let sv = symmetric_eigenvalues(&a)?;
    let lhs = sv.iter().map(|v| test_fn(v.abs())).sum::<f64>() / sv.len() as f64;
    let f = |t: f64| test_fn(symbol.eval(t).abs());
    let rhs = integrate_with_breaks(&f, -PI, PI, &symbol.breakpoints(), 1e-9) / (2.0 * PI);
    Ok((lhs, rhs))
}

/// Essential rank of `M M^T` for a synthesized scene.
pub fn scene_rank(scene: &Scene, epsilon: f64) -> Result<usize> {
    let tm = synthesize_traces(scene)?;
    essential_rank(&covariance_empirical(&tm).gram, epsilon)
}

/// `max_k std(diag_k) / max|C|` over the diagonals `k = 0..max_lag`.
pub fn diagonal_variation(c: &DMatrix<f64>, max_lag: usize) -> f64 {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let n = c.nrows();
    let mut worst = 0.0f64;
    for k in 0..=max_lag.min(n - 1) {
        let vals: Vec<f64> = (0..n - k).map(|j| c[(j + k, j)]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        worst = worst.max(var.sqrt() / scale);
    }
    worst
}
