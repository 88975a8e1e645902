//! Principal component pursuit `min ||L||_* + eta ||S||_1 s.t. L + S = M`
//! by the inexact augmented Lagrangian method, and its fast-time windowed
//! variant.

pub mod lanczos;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tracematrix::{make_windows, reassemble, TraceMatrix, WindowPlan};

pub use lanczos::{full_svd, spectral_norm, triplets_above, PartialSvd};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcpParams {
    /// Sparsity weight; `None` means `1 / sqrt(max(rows, cols))` of the input.
    pub eta: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    /// Initial penalty; `None` means `1.25 / ||M||_2`.
    pub mu0: Option<f64>,
    pub mu_growth: f64,
    /// `mu_max = mu_max_ratio * mu0`.
    pub mu_max_ratio: f64,
    pub svd_rank_guess: usize,
    pub seed: u64,
}

impl Default for PcpParams {
    fn default() -> Self {
        Self { eta: None, tol: 1e-7, max_iters: 1000, mu0: None, mu_growth: 1.6, mu_max_ratio: 1e7, svd_rank_guess: 8, seed: 0x5eed }
    }
}

impl PcpParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                return Err(Error::param("eta", "must be positive"));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        if !(self.mu_growth > 1.0) {
            return Err(Error::param("mu_growth", "must exceed 1"));
        }
        if let Some(mu) = self.mu0 {
            if !(mu > 0.0) {
                return Err(Error::param("mu0", "must be positive"));
            }
        }
        if !(self.mu_max_ratio >= 1.0) {
            return Err(Error::param("mu_max_ratio", "must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be positive"));
        }
        Ok(())
    }

    pub fn eta_for(&self, rows: usize, cols: usize) -> f64 {
        self.eta.unwrap_or_else(|| 1.0 / (rows.max(cols) as f64).sqrt())
    }
}

/// Convergence report of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PcpDiagnostics {
    pub iterations: usize,
    /// `||M - L - S||_F / ||M||_F`.
    pub residual: f64,
    /// Rank of `L` at `1e-8 sigma_1`.
    pub rank: usize,
    /// Entries of `S` above `1e-8 max|S|`.
    pub nnz: usize,
    pub eta: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct RpcaResult {
    pub low_rank: DMatrix<f64>,
    pub sparse: DMatrix<f64>,
    pub diagnostics: PcpDiagnostics,
}

pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

pub fn soft_threshold_matrix(x: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    x.map(|v| soft_threshold(v, tau))
}

/// Result of singular value thresholding.
#[derive(Debug, Clone)]
pub struct Svt {
    pub matrix: DMatrix<f64>,
    /// Shrunk singular values `sigma_i - tau > 0`.
    pub shrunk: Vec<f64>,
}

/// `U max(Sigma - tau, 0) V^T`.
pub fn singular_value_threshold(x: &DMatrix<f64>, tau: f64, rank_guess: usize, seed: u64) -> Result<Svt> {
    if !(tau >= 0.0) {
        return Err(Error::param("tau", "must be non-negative"));
    }
    let svd = triplets_above(x, tau, rank_guess, seed)?;
    let shrunk: Vec<f64> = svd.sigma.iter().map(|s| s - tau).collect();
    let mut us = svd.u;
    for (mut col, &s) in us.column_iter_mut().zip(&shrunk) {
        col *= s;
    }
    let matrix = if shrunk.is_empty() { DMatrix::zeros(x.nrows(), x.ncols()) } else { us * svd.v.transpose() };
    Ok(Svt { matrix, shrunk })
}

pub fn nuclear_norm(x: &DMatrix<f64>) -> Result<f64> {
    Ok(full_svd(x)?.sigma.iter().sum())
}

/// `||L||_* + eta ||S||_1`.
pub fn pcp_objective(low_rank: &DMatrix<f64>, sparse: &DMatrix<f64>, eta: f64) -> Result<f64> {
    Ok(nuclear_norm(low_rank)? + eta * sparse.iter().map(|v| v.abs()).sum::<f64>())
}

pub fn pcp_solve(m: &DMatrix<f64>, params: &PcpParams) -> Result<RpcaResult> {
    params.validate()?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("M", "entries must be finite"));
    }
    let (rows, cols) = m.shape();
    if rows.max(cols) < 2 {
        return Err(Error::param("M", "needs at least two rows or columns"));
    }
    let eta = params.eta_for(rows, cols);
    let norm_f = m.norm();
    if norm_f == 0.0 {
        let zero = DMatrix::zeros(rows, cols);
        let diagnostics = PcpDiagnostics { iterations: 1, residual: 0.0, rank: 0, nnz: 0, eta, converged: true };
        return Ok(RpcaResult { low_rank: zero.clone(), sparse: zero, diagnostics });
    }
    let norm_2 = spectral_norm(m, params.seed)?;
    let norm_inf = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut y = m / norm_2.max(norm_inf / eta);
    let mut mu = params.mu0.unwrap_or(1.25 / norm_2);
    let mu_max = mu * params.mu_max_ratio;
    let mut low_rank = DMatrix::zeros(rows, cols);
    let mut sparse = DMatrix::zeros(rows, cols);
    let mut shrunk = Vec::new();
    let mut rank_guess = params.svd_rank_guess;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iters {
        iterations += 1;
        let inv_mu = 1.0 / mu;
        // S <- shrink(M - L + Y/mu, eta/mu)
        let mut work = m - &low_rank;
        work += &y * inv_mu;
        sparse = soft_threshold_matrix(&work, eta * inv_mu);
        // L <- svt(M - S + Y/mu, 1/mu)
        let mut work = m - &sparse;
        work += &y * inv_mu;
        let svt = singular_value_threshold(&work, inv_mu, rank_guess, params.seed)?;
        low_rank = svt.matrix;
        shrunk = svt.shrunk;
        rank_guess = (shrunk.len() + 4).max(params.svd_rank_guess);
        let z = m - &low_rank - &sparse;
        residual = z.norm() / norm_f;
        y += &z * mu;
        mu = (mu * params.mu_growth).min(mu_max);
        log::trace!("pcp iter {iterations}: residual {residual:e}, rank {}", shrunk.len());
        if residual < params.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("pcp stopped after {iterations} iterations with residual {residual:e}");
    }
    let rank = match shrunk.first() {
        Some(&top) => shrunk.iter().filter(|&&s| s > 1e-8 * top).count(),
        None => 0,
    };
    let s_max = sparse.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let nnz = sparse.iter().filter(|v| v.abs() > 1e-8 * s_max).count();
    let diagnostics = PcpDiagnostics { iterations, residual, rank, nnz, eta, converged };
    Ok(RpcaResult { low_rank, sparse, diagnostics })
}

/// Low-rank and sparse parts reassembled from per-window solves.
#[derive(Debug, Clone)]
pub struct WindowedRpca {
    pub low_rank: TraceMatrix,
    pub sparse: TraceMatrix,
    pub windows: Vec<PcpDiagnostics>,
}

impl WindowedRpca {
    pub fn converged(&self) -> bool {
        self.windows.iter().all(|w| w.converged)
    }
}

/// PCP on each fast-time window (in parallel); `eta` is recomputed from each
/// window's dimensions unless fixed in `params`.
pub fn pcp_windowed(tm: &TraceMatrix, plan: &WindowPlan, params: &PcpParams) -> Result<WindowedRpca> {
    let windows = make_windows(tm, plan)?;
    let solved: Vec<RpcaResult> = windows.par_iter().map(|w| pcp_solve(&w.data, params)).collect::<Result<_>>()?;
    let mut lows = Vec::with_capacity(windows.len());
    let mut sparses = Vec::with_capacity(windows.len());
    let mut reports = Vec::with_capacity(windows.len());
    for (w, r) in windows.iter().zip(solved) {
        lows.push(w.with_data(r.low_rank)?);
        sparses.push(w.with_data(r.sparse)?);
        reports.push(r.diagnostics);
    }
    Ok(WindowedRpca { low_rank: reassemble(&lows, plan)?, sparse: reassemble(&sparses, plan)?, windows: reports })
}

/// Which trace cells count towards a population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MaskRule {
    /// Above 1% of the population's envelope peak while the other population
    /// stays below 1% of its own peak: cells only one population reaches.
    Exclusive,
    /// Above 1% of the population's peak and above the other envelope.
    Dominant,
}

/// How the sparse part splits the energy of the two target populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySplit {
    /// Fraction of the mover energy of `M` that lands in `S`.
    pub capture: f64,
    /// Fraction of the stationary energy of `M` that lands in `S`.
    pub leakage: f64,
    pub mover_cells: usize,
    pub stationary_cells: usize,
}

impl EnergySplit {
    pub fn separates(&self, min_capture: f64, max_leakage: f64) -> bool {
        self.capture >= min_capture && self.leakage <= max_leakage
    }
}

/// Energy fractions over masks built from per-population echo envelopes.
pub fn energy_split(
    m: &DMatrix<f64>,
    sparse: &DMatrix<f64>,
    env_moving: &DMatrix<f64>,
    env_stationary: &DMatrix<f64>,
    rule: MaskRule,
) -> Result<EnergySplit> {
    let shape = m.shape();
    if sparse.shape() != shape || env_moving.shape() != shape || env_stationary.shape() != shape {
        return Err(Error::Shape("energy masks must match the trace matrix".into()));
    }
    let peak = |x: &DMatrix<f64>| x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (lm, ls) = (0.01 * peak(env_moving), 0.01 * peak(env_stationary));
    let (mut mov, mut mov_s, mut stat, mut stat_s) = (0.0, 0.0, 0.0, 0.0);
    let (mut mover_cells, mut stationary_cells) = (0, 0);
    for i in 0..m.len() {
        let (em, es) = (env_moving[i].abs(), env_stationary[i].abs());
        let (is_mov, is_stat) = match rule {
            MaskRule::Exclusive => (em > lm && es < ls, es > ls && em < lm),
            MaskRule::Dominant => (em > lm.max(es), es > ls.max(em)),
        };
        if is_mov {
            mov += m[i] * m[i];
            mov_s += sparse[i] * sparse[i];
            mover_cells += 1;
        } else if is_stat {
            stat += m[i] * m[i];
            stat_s += sparse[i] * sparse[i];
            stationary_cells += 1;
        }
    }
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    Ok(EnergySplit { capture: ratio(mov_s, mov), leakage: ratio(stat_s, stat), mover_cells, stationary_cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random(m: usize, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(rng))
    }

    /// Full-SVD reference implementation of singular value thresholding.
    fn svt_oracle(x: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
        let svd = x.clone().svd(true, true);
        let shrunk = svd.singular_values.map(|s| (s - tau).max(0.0));
        svd.u.unwrap() * DMatrix::from_diagonal(&shrunk) * svd.v_t.unwrap()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(5.0, 2.0), 3.0);
        assert_eq!(soft_threshold(-5.0, 2.0), -3.0);
        assert_eq!(soft_threshold(1.5, 2.0), 0.0);
        assert_eq!(soft_threshold(-2.0, 2.0), 0.0);
        assert_eq!(soft_threshold(0.7, 0.0), 0.7);
    }

    #[test]
    fn svt_examples() {
        let x = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        let out = singular_value_threshold(&x, 2.0, 2, 1).unwrap().matrix;
        assert!((out - DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]))).abs().max() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random(40, 25, &mut rng);
        let same = singular_value_threshold(&x, 0.0, 4, 1).unwrap().matrix;
        assert!((same - &x).abs().max() < 1e-12);
        let u = random(60, 1, &mut rng).normalize();
        let v = random(50, 1, &mut rng).normalize();
        let rank1 = &u * v.transpose() * 5.0;
        let out = singular_value_threshold(&rank1, 1.0, 1, 1).unwrap().matrix;
        assert!((out - &u * v.transpose() * 4.0).abs().max() < 1e-12);
    }

    #[test]
    fn svt_on_larger_matrix_uses_lanczos_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = random(150, 3, &mut rng) * random(3, 300, &mut rng);
        x += random(150, 300, &mut rng) * 0.01;
        let tau = 1.0;
        let fast = singular_value_threshold(&x, tau, 2, 3).unwrap();
        assert_eq!(fast.shrunk.len(), 3);
        assert!((fast.matrix - svt_oracle(&x, tau)).abs().max() < 1e-10);
    }

    #[test]
    fn zero_matrix_takes_one_iteration() {
        let r = pcp_solve(&DMatrix::zeros(5, 7), &PcpParams::default()).unwrap();
        assert_eq!(r.diagnostics.iterations, 1);
        assert_eq!(r.low_rank.abs().max(), 0.0);
        assert_eq!(r.sparse.abs().max(), 0.0);
    }

    #[test]
    fn single_spike_goes_to_sparse() {
        let mut m = DMatrix::zeros(30, 40);
        m[(7, 11)] = 4.0;
        let p = PcpParams::default();
        let eta = p.eta_for(30, 40);
        assert!(eta < 1.0);
        // the all-sparse split beats the all-low-rank one
        let zero = DMatrix::zeros(30, 40);
        assert!(pcp_objective(&zero, &m, eta).unwrap() < pcp_objective(&m, &zero, eta).unwrap());
        let r = pcp_solve(&m, &p).unwrap();
        assert!(r.diagnostics.converged);
        assert!(r.low_rank.norm() < 1e-5 * m.norm());
        assert!((&r.sparse - &m).norm() < 1e-5 * m.norm());
    }

    #[test]
    fn objective_beats_trivial_splits() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut m = random(40, 2, &mut rng) * random(2, 60, &mut rng);
        for _ in 0..30 {
            let (i, j) = (rng.random_range(0..40), rng.random_range(0..60));
            m[(i, j)] += 8.0;
        }
        let p = PcpParams::default();
        let eta = p.eta_for(40, 60);
        let r = pcp_solve(&m, &p).unwrap();
        assert!(r.diagnostics.residual <= p.tol);
        let obj = pcp_objective(&r.low_rank, &r.sparse, eta).unwrap();
        let zero = DMatrix::zeros(40, 60);
        assert!(obj <= pcp_objective(&m, &zero, eta).unwrap() + 1e-8);
        assert!(obj <= pcp_objective(&zero, &m, eta).unwrap() + 1e-8);
    }

    #[test]
    fn single_window_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = random(12, 2, &mut rng) * random(2, 30, &mut rng);
        let tm = TraceMatrix::new(
            data.clone(),
            crate::tracematrix::uniform_axis(0.0, 1.0, 12),
            crate::tracematrix::uniform_axis(0.0, 1.0, 30),
            1.0,
        )
        .unwrap();
        let p = PcpParams::default();
        let w = pcp_windowed(&tm, &WindowPlan::single(30), &p).unwrap();
        let d = pcp_solve(&data, &p).unwrap();
        assert_eq!(w.low_rank.data, d.low_rank);
        assert_eq!(w.sparse.data, d.sparse);
        let zero = pcp_windowed(&tm.zeros_like(), &WindowPlan::new(7, 0, 30).unwrap(), &p).unwrap();
        assert_eq!(zero.low_rank.data.abs().max() + zero.sparse.data.abs().max(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn soft_threshold_is_shrinkage(x in -100.0f64..100.0, tau in 0.0f64..50.0) {
            let y = soft_threshold(x, tau);
            prop_assert!(y.abs() <= x.abs());
            prop_assert!(y == 0.0 || y.signum() == x.signum());
            prop_assert!((x - y).abs() <= tau + 1e-12);
            if x.abs() <= tau { prop_assert_eq!(y, 0.0); }
        }

        #[test]
        fn svt_matches_full_svd_oracle(seed in any::<u64>(), tau in 0.0f64..6.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random(20, 30, &mut rng);
            let got = singular_value_threshold(&x, tau, 3, seed).unwrap().matrix;
            prop_assert!((got - svt_oracle(&x, tau)).abs().max() < 1e-10);
        }

        #[test]
        fn pcp_is_scale_equivariant(seed in any::<u64>(), c in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = random(20, 2, &mut rng) * random(2, 25, &mut rng);
            for _ in 0..10 {
                let (i, j) = (rng.random_range(0..20), rng.random_range(0..25));
                m[(i, j)] += 6.0;
            }
            let p = PcpParams::default();
            let base = pcp_solve(&m, &p).unwrap();
            let scaled = pcp_solve(&(&m * c), &p).unwrap();
            let rel = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).norm() / b.norm().max(1e-300);
            prop_assert!(rel(&scaled.low_rank, &(&base.low_rank * c)) < 1e-6);
            prop_assert!(rel(&scaled.sparse, &(&base.sparse * c)) < 1e-6);
        }
    }
}
