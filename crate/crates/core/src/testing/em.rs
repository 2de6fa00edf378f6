//! Expectation-maximisation for the two-component equal-variance mixture.
//!
//! With a shared variance the posterior log-odds of component 1 is affine in
//! `x`, so one E-step costs a single exponential per observation. The
//! likelihood is bounded (no variance collapse), which makes plain EM safe.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Restart schedule: every restart runs `short_iters` iterations, the best
/// one is then continued until convergence or `max_iter` total iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EmConfig {
    pub restarts: usize,
    pub short_iters: usize,
    pub max_iter: usize,
    /// Convergence threshold on the change of the mean log-likelihood per
    /// observation, stored as raw `f64` bits so the config can key caches.
    tol_bits: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self::new(20, 10, 500, 1e-8)
    }
}

impl EmConfig {
    pub fn new(restarts: usize, short_iters: usize, max_iter: usize, tol: f64) -> Self {
        Self {
            restarts: restarts.max(1),
            short_iters: short_iters.max(1),
            max_iter: max_iter.max(1),
            tol_bits: tol.to_bits(),
        }
    }

    pub fn tol(&self) -> f64 {
        f64::from_bits(self.tol_bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureFit {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub pi1: f64,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub mean: f64,
    pub sigma2: f64,
    pub loglik: f64,
}

/// Maximum-likelihood single Gaussian.
pub fn fit_gaussian(x: &[f64]) -> Result<GaussianFit> {
    let (n, mean, var) = moments(x)?;
    Ok(GaussianFit {
        mean,
        sigma2: var,
        loglik: -0.5 * n * ((2.0 * PI * var).ln() + 1.0),
    })
}

fn moments(x: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "mixture fitting needs at least 2 observations (got {})",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Numerical(format!("sample variance is {var}")));
    }
    Ok((n, mean, var))
}

#[derive(Debug, Clone, Copy)]
struct State {
    mu1: f64,
    mu2: f64,
    s2: f64,
    pi1: f64,
    loglik: f64,
    iterations: usize,
    converged: bool,
}

struct Sums {
    n: f64,
    sx: f64,
    sxx: f64,
    floor: f64,
}

const PI_MIN: f64 = 1e-12;

impl State {
    /// Runs up to `iters` more EM iterations. `loglik` is the value at the
    /// returned parameters' predecessor once at least one step was taken.
    fn advance(&mut self, x: &[f64], sums: &Sums, iters: usize, tol: f64) {
        let mut prev = self.loglik;
        for _ in 0..iters {
            if self.converged {
                return;
            }
            let (ll, r1, r1x) = e_step(x, sums, self);
            self.iterations += 1;
            self.loglik = ll;
            if (ll - prev).abs() <= tol * sums.n {
                self.converged = true;
                return;
            }
            prev = ll;
            let r2 = sums.n - r1;
            if r1 < PI_MIN * sums.n || r2 < PI_MIN * sums.n {
                // one component has emptied; the fit is the single Gaussian
                self.converged = true;
                return;
            }
            self.mu1 = r1x / r1;
            self.mu2 = (sums.sx - r1x) / r2;
            self.pi1 = r1 / sums.n;
            self.s2 = ((sums.sxx - r1 * self.mu1 * self.mu1 - r2 * self.mu2 * self.mu2) / sums.n)
                .max(sums.floor);
        }
    }
}

/// Log-likelihood at the current parameters plus the sufficient statistics
/// `sum r_i` and `sum r_i x_i` of the component-1 responsibilities.
fn e_step(x: &[f64], sums: &Sums, st: &State) -> (f64, f64, f64) {
    let (m1, m2, s2, p1) = (st.mu1, st.mu2, st.s2, st.pi1);
    // log(p1 phi1 / p2 phi2) = a + b x
    let b = (m1 - m2) / s2;
    let a = (p1 / (1.0 - p1)).ln() + (m2 * m2 - m1 * m1) / (2.0 * s2);
    let (mut r1, mut r1x, mut softplus) = (0.0, 0.0, 0.0);
    for chunk in x.chunks(256) {
        // sum ln(1 + e^-|d|) as the log of a product; 256 factors in (1, 2]
        // cannot overflow
        let mut prod = 1.0f64;
        for &v in chunk {
            let d = a + b * v;
            let e = (-d.abs()).exp();
            let inv = 1.0 / (1.0 + e);
            let r = if d >= 0.0 { inv } else { e * inv };
            r1 += r;
            r1x += r * v;
            softplus += d.max(0.0);
            prod *= 1.0 + e;
        }
        softplus += prod.ln();
    }
    let quad = (sums.sxx - 2.0 * m2 * sums.sx + sums.n * m2 * m2) / (2.0 * s2);
    let ll = -0.5 * sums.n * (2.0 * PI * s2).ln() - quad + sums.n * (1.0 - p1).ln() + softplus;
    (ll, r1, r1x)
}

/// Fits the mixture by EM with random restarts. Restart `k` starts at two
/// data points drawn from the stream `(seed, k)` as means, the sample
/// variance and equal weights. Component labels are those of the winning
/// restart, without reordering. Ties keep the earlier restart.
pub fn fit_mixture(x: &[f64], cfg: &EmConfig, seed: u64) -> Result<MixtureFit> {
    let (n, _, var) = moments(x)?;
    let sums = Sums {
        n,
        sx: x.iter().sum(),
        sxx: x.iter().map(|v| v * v).sum(),
        floor: var * 1e-10,
    };
    let tol = cfg.tol();
    let mut best: Option<State> = None;
    for k in 0..cfg.restarts {
        let mut rng = rng::stream(seed, &[rng::tag::EM_RESTART, k as u64]);
        let i = rng.random_range(0..x.len());
        let j = rng.random_range(0..x.len());
        let mut st = State {
            mu1: x[i],
            mu2: x[j],
            s2: var,
            pi1: 0.5,
            loglik: f64::NEG_INFINITY,
            iterations: 0,
            converged: false,
        };
        st.advance(x, &sums, cfg.short_iters.min(cfg.max_iter), tol);
        if !st.loglik.is_finite() {
            continue;
        }
        if best.is_none_or(|b| st.loglik > b.loglik) {
            best = Some(st);
        }
    }
    let mut st = best.ok_or_else(|| Error::Numerical("every EM restart produced a non-finite likelihood".into()))?;
    let left = cfg.max_iter.saturating_sub(st.iterations);
    st.advance(x, &sums, left, tol);
    Ok(MixtureFit {
        mu1: st.mu1,
        mu2: st.mu2,
        sigma2: st.s2,
        pi1: st.pi1,
        loglik: st.loglik,
        iterations: st.iterations,
        converged: st.converged,
    })
}
