//! Symbols of the Toeplitz covariance models: sums of Gaussian bump pairs
//! at `+-gamma` of width `xi`, periodized on the circle.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One pair of bumps `w [exp(-(theta - gamma)^2 / xi^2) + exp(-(theta + gamma)^2 / xi^2)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub xi: f64,
    pub gamma: f64,
    pub weight: f64,
}

/// `Q(theta) = sum_j c_j exp(i j theta)` for `c_j = K sum_b exp(-xi_b^2 j^2 / 4) cos(gamma_b j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    pub bumps: Vec<Bump>,
    /// `K = sqrt(pi) / (2 B dt)`, the zero-lag coefficient per bump pair.
    pub k_factor: f64,
}

/// Wraps `x` into `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

impl Symbol {
    pub fn new(components: &[(f64, f64)], bandwidth: f64, delta_t: f64) -> Result<Self> {
        let k_factor = PI.sqrt() / (2.0 * bandwidth * delta_t);
        let mut bumps = Vec::with_capacity(components.len());
        for &(xi, gamma) in components {
            if xi == 0.0 {
                return Err(Error::DeltaSymbol);
            }
            if !(xi > 0.0 && xi.is_finite()) {
                return Err(Error::param("xi", format!("must be positive, got {xi}")));
            }
            bumps.push(Bump { xi, gamma: wrap_angle(gamma), weight: k_factor * PI.sqrt() / xi });
        }
        Ok(Self { bumps, k_factor })
    }

    /// Closed form, exact sum over periodic images.
    pub fn eval(&self, theta: f64) -> f64 {
        let mut q = 0.0;
        for b in &self.bumps {
            let images = (6.0 * b.xi / (2.0 * PI)).ceil() as i32 + 1;
            for p in -images..=images {
                let shift = 2.0 * PI * p as f64;
                // pair the terms so Q(theta) = Q(-theta) holds bit for bit
                let minus = (theta - b.gamma + shift) / b.xi;
                let plus = (theta + b.gamma - shift) / b.xi;
                q += b.weight * ((-minus * minus).exp() + (-plus * plus).exp());
            }
        }
        q
    }

    /// Fourier coefficient `c_j`.
    pub fn coefficient(&self, j: i64) -> f64 {
        let j = j as f64;
        self.bumps.iter().map(|b| self.k_factor * (-(b.xi * j).powi(2) / 4.0).exp() * (b.gamma * j).cos()).sum()
    }

    /// Truncated series `c_0 + 2 sum_{j=1}^{terms} c_j cos(j theta)`.
    pub fn series(&self, theta: f64, terms: usize) -> f64 {
        let mut q = self.coefficient(0);
        for j in 1..=terms as i64 {
            q += 2.0 * self.coefficient(j) * (j as f64 * theta).cos();
        }
        q
    }

    /// Points where features of `Q` live: bump centres and shoulders.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        for b in &self.bumps {
            for k in -6..=6 {
                for sign in [-1.0, 1.0] {
                    let x = wrap_angle(sign * b.gamma + k as f64 * 0.5 * b.xi);
                    pts.push(x);
                }
            }
        }
        pts
    }

    /// `||Q||_inf` over the circle.
    pub fn sup_norm(&self) -> f64 {
        let mut best_theta = 0.0;
        let mut best = self.eval(0.0);
        let consider = |t: f64, best: &mut f64, best_theta: &mut f64| {
            let v = self.eval(t);
            if v > *best {
                *best = v;
                *best_theta = t;
            }
        };
        for t in self.breakpoints() {
            consider(t, &mut best, &mut best_theta);
        }
        for i in 0..4096 {
            consider(-PI + 2.0 * PI * i as f64 / 4096.0, &mut best, &mut best_theta);
        }
        // golden-section polish around the best sample
        let width = self.bumps.iter().map(|b| b.xi).fold(2.0 * PI / 4096.0, f64::min);
        let (mut lo, mut hi) = (best_theta - width, best_theta + width);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..80 {
            let a = hi - r * (hi - lo);
            let b = lo + r * (hi - lo);
            if self.eval(a) > self.eval(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        best.max(self.eval(0.5 * (lo + hi)))
    }
}

/// Symbol of the one-target model with `xi = B |alpha| ds` and `gamma = omega_o alpha ds` (wrapped).
pub fn symbol_1target(xi: f64, gamma: f64, bandwidth: f64, delta_t: f64) -> Result<Symbol> {
    Symbol::new(&[(xi, gamma)], bandwidth, delta_t)
}

/// Four-bump symbol of the Toeplitz part of the two-target model.
pub fn symbol_2target(xi1: f64, gamma1: f64, xi2: f64, gamma2: f64, bandwidth: f64, delta_t: f64) -> Result<Symbol> {
    Symbol::new(&[(xi1, gamma1), (xi2, gamma2)], bandwidth, delta_t)
}
