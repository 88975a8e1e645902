//! Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization,
//! used to get the leading singular triplets of a dense matrix.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Leading singular triplets, sorted by decreasing singular value.
#[derive(Debug, Clone)]
pub struct PartialSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// Lanczos state extended in place as more steps are requested.
pub struct Bidiagonalization<'a> {
    a: &'a DMatrix<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    steps: usize,
    scale: f64,
    rng: ChaCha8Rng,
}

fn random_unit(len: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let v = DVector::from_fn(len, |_, _| rng.random::<f64>() - 0.5);
    let n = v.norm();
    v / n
}

/// Two passes of classical Gram-Schmidt against the first `k` columns.
fn orthogonalize(basis: &DMatrix<f64>, k: usize, x: &mut DVector<f64>) {
    if k == 0 {
        return;
    }
    let q = basis.columns(0, k);
    for _ in 0..2 {
        let h = q.tr_mul(x);
        x.gemv(-1.0, &q, &h, 1.0);
    }
}

impl<'a> Bidiagonalization<'a> {
    pub fn new(a: &'a DMatrix<f64>, seed: u64) -> Self {
        let (m, n) = a.shape();
        let p = m.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = DMatrix::zeros(n, p + 1);
        v.set_column(0, &random_unit(n, &mut rng));
        let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs())) * ((m * n) as f64).sqrt();
        Self { a, u: DMatrix::zeros(m, p), v, alphas: Vec::new(), betas: Vec::new(), steps: 0, scale, rng }
    }

    pub fn max_steps(&self) -> usize {
        self.u.ncols()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn extend_to(&mut self, k: usize) {
        let k = k.min(self.max_steps());
        let tiny = 1e-14 * self.scale;
        while self.steps < k {
            let j = self.steps;
            let vj = self.v.column(j).into_owned();
            let mut u = self.a * &vj;
            if j > 0 {
                u.axpy(-self.betas[j - 1], &self.u.column(j - 1), 1.0);
            }
            orthogonalize(&self.u, j, &mut u);
            let mut alpha = u.norm();
            if alpha <= tiny {
                // invariant subspace found: restart with a fresh direction
                u = random_unit(self.u.nrows(), &mut self.rng);
                orthogonalize(&self.u, j, &mut u);
                u.normalize_mut();
                alpha = 0.0;
            } else {
                u /= alpha;
            }
            self.u.set_column(j, &u);
            let mut v = self.a.tr_mul(&u);
            v.axpy(-alpha, &vj, 1.0);
            orthogonalize(&self.v, j + 1, &mut v);
            let mut beta = v.norm();
            if beta <= tiny {
                v = random_unit(self.v.nrows(), &mut self.rng);
                orthogonalize(&self.v, j + 1, &mut v);
                let n = v.norm();
                if n > 0.0 {
                    v /= n;
                }
                beta = 0.0;
            } else {
                v /= beta;
            }
            self.v.set_column(j + 1, &v);
            self.alphas.push(alpha);
            self.betas.push(beta);
            self.steps += 1;
        }
    }

    /// Ritz triplets after `k` steps with their residual bounds.
    pub fn ritz(&mut self, k: usize) -> Result<(PartialSvd, Vec<f64>)> {
        self.extend_to(k);
        let k = self.steps;
        let mut b = DMatrix::zeros(k, k);
        for i in 0..k {
            b[(i, i)] = self.alphas[i];
            if i + 1 < k {
                b[(i, i + 1)] = self.betas[i];
            }
        }
        let svd = dense_svd(b)?;
        let p = svd.u.as_ref().unwrap();
        let q = svd.v_t.as_ref().unwrap().transpose();
        let order = sorted_order(&svd.singular_values);
        let last_beta = self.betas[k - 1];
        let mut sigma = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        let mut pu = DMatrix::zeros(k, k);
        let mut qv = DMatrix::zeros(k, k);
        for (dst, &src) in order.iter().enumerate() {
            sigma.push(svd.singular_values[src]);
            residuals.push((last_beta * p[(k - 1, src)]).abs());
            pu.set_column(dst, &p.column(src));
            qv.set_column(dst, &q.column(src));
        }
        let u = self.u.columns(0, k) * pu;
        let v = self.v.columns(0, k) * qv;
        Ok((PartialSvd { u, sigma, v }, residuals))
    }
}

fn sorted_order(values: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    order
}

pub(crate) fn dense_svd(a: DMatrix<f64>) -> Result<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let rank = a.nrows().min(a.ncols());
    nalgebra::SVD::try_new(a, true, true, f64::EPSILON, 10_000).ok_or(Error::SvdNonConvergence {
        iterations: 10_000,
        rank,
        residual: f64::NAN,
    })
}

/// Full SVD sorted by decreasing singular value.
pub fn full_svd(a: &DMatrix<f64>) -> Result<PartialSvd> {
    let svd = dense_svd(a.clone())?;
    let order = sorted_order(&svd.singular_values);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut out_u = DMatrix::zeros(u.nrows(), order.len());
    let mut out_v = DMatrix::zeros(vt.ncols(), order.len());
    let mut sigma = Vec::with_capacity(order.len());
    for (dst, &src) in order.iter().enumerate() {
        out_u.set_column(dst, &u.column(src));
        out_v.set_column(dst, &vt.row(src).transpose());
        sigma.push(svd.singular_values[src]);
    }
    Ok(PartialSvd { u: out_u, sigma, v: out_v })
}

/// Largest singular value, to relative accuracy `1e-10`.
pub fn spectral_norm(a: &DMatrix<f64>, seed: u64) -> Result<f64> {
    let p = a.nrows().min(a.ncols());
    if p == 0 || a.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    if p <= 16 {
        return Ok(full_svd(a)?.sigma[0]);
    }
    let mut lanczos = Bidiagonalization::new(a, seed);
    let mut k = 8.min(p);
    loop {
        let (svd, res) = lanczos.ritz(k)?;
        if res[0] <= 1e-10 * svd.sigma[0] || lanczos.steps() >= lanczos.max_steps() {
            return Ok(svd.sigma[0]);
        }
        k = (2 * k).min(p);
    }
}

/// All singular triplets with `sigma > tau`, discovered by growing the
/// Lanczos basis until a converged Ritz value at or below `tau` shows up.
pub fn triplets_above(a: &DMatrix<f64>, tau: f64, rank_guess: usize, seed: u64) -> Result<PartialSvd> {
    let p = a.nrows().min(a.ncols());
    if p <= 32 {
        return keep_above(full_svd(a)?, tau);
    }
    let mut lanczos = Bidiagonalization::new(a, seed);
    let mut k = (rank_guess + 4).clamp(8, p);
    loop {
        if 2 * k > p {
            return keep_above(full_svd(a)?, tau);
        }
        let (svd, res) = lanczos.ritz(k)?;
        let top = svd.sigma[0].max(f64::MIN_POSITIVE);
        let tol = 1e-10 * top;
        // leading run of converged Ritz values
        let converged = res.iter().take_while(|&&r| r <= tol).count();
        if converged > 0 && svd.sigma[converged - 1] <= tau {
            return keep_above(svd, tau);
        }
        if svd.sigma[0] <= tau && converged > 0 {
            return keep_above(svd, tau);
        }
        k = (2 * k).min(p);
    }
}

fn keep_above(svd: PartialSvd, tau: f64) -> Result<PartialSvd> {
    let r = svd.sigma.iter().take_while(|&&s| s > tau).count();
    Ok(PartialSvd {
        u: svd.u.columns(0, r).into_owned(),
        sigma: svd.sigma[..r].to_vec(),
        v: svd.v.columns(0, r).into_owned(),
    })
}
