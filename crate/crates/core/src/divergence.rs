//! Squared Hellinger distance `h^2(P, Q) = 1/2 int (sqrt p - sqrt q)^2`,
//! regime separation over finite grids, and the local separation exponent
//! `h ~ delta^a` near a singular stratum.

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BatchData, GmmParams, ModelPoint, RrrParams, SampleBatch};
use crate::numeric::{fit_line, simpson_weights};
use crate::rng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HellingerMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HellingerEstimate<T> {
    pub h2: T,
    pub method: HellingerMethod,
    /// Quadrature: truncation plus discretisation bound. Monte Carlo: 95%
    /// half-width.
    pub error_radius: T,
    /// Grid nodes or Monte Carlo draws.
    pub n_eval: usize,
}

impl<T: Real> HellingerEstimate<T> {
    pub fn h(&self) -> T {
        if self.h2 > T::zero() {
            self.h2.sqrt()
        } else {
            T::zero()
        }
    }
}

/// Quadrature settings. `intervals: None` doubles the node count from 256
/// until the error radius drops below `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub intervals: Option<usize>,
    pub tol: f64,
    /// Half-width of the integration domain in standard deviations.
    pub span: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            intervals: None,
            tol: 1e-11,
            span: 10.0,
        }
    }
}

impl QuadratureSpec {
    pub fn fixed(intervals: usize) -> Self {
        Self {
            intervals: Some(intervals),
            ..Self::default()
        }
    }
}

/// Settings for the automatic method choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceOptions {
    pub quadrature: QuadratureSpec,
    pub mc_draws: usize,
    pub mc_seed: u64,
}

impl Default for DivergenceOptions {
    fn default() -> Self {
        Self {
            quadrature: QuadratureSpec::default(),
            mc_draws: 200_000,
            mc_seed: 0x4865_6c6c,
        }
    }
}

/// `(sqrt p - sqrt q)^2 / 2` from log-densities, stable when `p ~ q`.
#[inline]
fn half_sq_root_diff<T: Real>(lp: T, lq: T) -> T {
    let half = T::lit(0.5);
    let (hi, lo) = if lp >= lq { (lp, lq) } else { (lq, lp) };
    let diff = if hi == T::neg_infinity() {
        T::zero()
    } else if lo == T::neg_infinity() {
        (half * hi).exp()
    } else {
        // factor out the larger density so the product never reaches 0 * inf
        (half * hi).exp() * (half * (lo - hi)).exp_m1_f()
    };
    half * diff * diff
}

const REF_INTERVALS_1D: usize = 64;
const REF_INTERVALS_2D: usize = 32;
const MAX_INTERVALS_1D: usize = 1 << 20;
const MAX_INTERVALS_2D: usize = 1 << 11;
const DISCRETISATION_SAFETY: f64 = 10.0;

/// Simpson estimate with `m` intervals per dimension.
fn simpson_nd<T: Real>(
    f1: &(dyn Fn(T) -> T + Sync),
    f2: Option<&(dyn Fn(T, T) -> T + Sync)>,
    x: (f64, f64),
    y: (f64, f64),
    m: usize,
) -> T {
    let hx = (x.1 - x.0) / m as f64;
    let wx = simpson_weights(m, hx);
    match f2 {
        None => wx
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &w)| acc + T::lit(w) * f1(T::lit(x.0 + hx * i as f64))),
        Some(f2) => {
            let hy = (y.1 - y.0) / m as f64;
            let wy = simpson_weights(m, hy);
            let rows: Vec<T> = (0..=m)
                .into_par_iter()
                .map(|i| {
                    let xi = T::lit(x.0 + hx * i as f64);
                    wy.iter().enumerate().fold(T::zero(), |acc, (j, &w)| {
                        acc + T::lit(w) * f2(xi, T::lit(y.0 + hy * j as f64))
                    })
                })
                .collect();
            rows.iter()
                .zip(&wx)
                .fold(T::zero(), |acc, (&r, &w)| acc + T::lit(w) * r)
        }
    }
}

// Gaussian tail mass beyond `span` standard deviations, both sides.
fn tail_mass(span: f64) -> f64 {
    2.0 * (-0.5 * span * span).exp()
}

// `scales` holds the smallest standard deviation along each axis; the
// reference grid must resolve it for the Richardson estimate to be meaningful.
fn run_quadrature<T: Real>(
    f1: &(dyn Fn(T) -> T + Sync),
    f2: Option<&(dyn Fn(T, T) -> T + Sync)>,
    x: (f64, f64),
    y: (f64, f64),
    scales: (f64, f64),
    truncation: f64,
    spec: &QuadratureSpec,
) -> HellingerEstimate<T> {
    let two_d = f2.is_some();
    let (mut m_ref, m_max) = if two_d {
        (REF_INTERVALS_2D, MAX_INTERVALS_2D)
    } else {
        (REF_INTERVALS_1D, MAX_INTERVALS_1D)
    };
    let coarse_step = |m: usize| {
        let sx = (x.1 - x.0) / m as f64 / scales.0;
        let sy = if two_d { (y.1 - y.0) / m as f64 / scales.1 } else { 0.0 };
        sx.max(sy)
    };
    while coarse_step(m_ref / 2) > 1.0 && m_ref < m_max / 2 {
        m_ref *= 2;
    }
    let coarse = simpson_nd(f1, f2, x, y, m_ref / 2).as_f64();
    let fine = simpson_nd(f1, f2, x, y, m_ref).as_f64();
    // Richardson estimate of the error at the reference resolution, scaled by
    // the fourth-order convergence of Simpson's rule
    let k = DISCRETISATION_SAFETY * (fine - coarse).abs() / 15.0;
    // log-densities carry an absolute error of a few ulps, so their difference
    // is only known to about `c eps`; this bounds what the integrand resolves
    let ulp = 8.0 * T::eps().as_f64();
    let rounding = ulp * ulp + 2.0 * ulp * fine.abs().sqrt() + 64.0 * T::eps().as_f64() * fine.abs();
    let radius = |m: usize| k * (m_ref as f64 / m as f64).powi(4) + truncation + rounding;
    let m = match spec.intervals {
        Some(m) => m.max(2).div_ceil(2) * 2,
        None => {
            let mut m = m_ref.max(256);
            while radius(m) > spec.tol && m < m_max {
                m *= 2;
            }
            m
        }
    };
    let h2 = simpson_nd(f1, f2, x, y, m);
    let dims = if two_d { 2 } else { 1 };
    HellingerEstimate {
        h2,
        method: HellingerMethod::Quadrature,
        error_radius: T::lit(radius(m)),
        n_eval: (m + 1).pow(dims),
    }
}

fn gmm_quadrature<T: Real>(a: &GmmParams<T>, b: &GmmParams<T>, spec: &QuadratureSpec) -> HellingerEstimate<T> {
    let means = [a.mu1(), a.mu2(), b.mu1(), b.mu2()].map(|v| v.as_f64());
    let s = a.sigma().as_f64().max(b.sigma().as_f64());
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min) - spec.span * s;
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max) + spec.span * s;
    let s_min = a.sigma().as_f64().min(b.sigma().as_f64());
    let f = |x: T| half_sq_root_diff(a.log_density(x), b.log_density(x));
    run_quadrature::<T>(&f, None, (lo, hi), (0.0, 0.0), (s_min, 1.0), tail_mass(spec.span), spec)
}

fn rrr_quadrature<T: Real>(a: &RrrParams<T>, b: &RrrParams<T>, spec: &QuadratureSpec) -> HellingerEstimate<T> {
    let span = spec.span;
    let ylim = [a, b]
        .iter()
        .map(|r| (r.coef()[(0, 0)].abs().as_f64() + r.sigma_eps().as_f64()) * span)
        .fold(0.0, f64::max);
    let f = |x: T, y: T| {
        let la = a.log_density(&[x], &[y]).expect("1x1 shape");
        let lb = b.log_density(&[x], &[y]).expect("1x1 shape");
        half_sq_root_diff(la, lb)
    };
    let unused = |_: T| T::zero();
    // mass outside the box: x tail plus the conditional y tail
    let s_min = a.sigma_eps().as_f64().min(b.sigma_eps().as_f64());
    run_quadrature::<T>(
        &unused,
        Some(&f),
        (-span, span),
        (-ylim, ylim),
        (1.0, s_min),
        2.0 * tail_mass(span),
        spec,
    )
}

/// Composite Simpson quadrature of the squared Hellinger distance. Supported
/// for mixtures and for scalar regression (`p = q = 1`, a 2-D integral).
pub fn hellinger2_quadrature<T: Real>(
    p: &ModelPoint<T>,
    q: &ModelPoint<T>,
    spec: &QuadratureSpec,
) -> Result<HellingerEstimate<T>> {
    match (p, q) {
        (ModelPoint::Gmm(a), ModelPoint::Gmm(b)) => Ok(gmm_quadrature(a, b, spec)),
        (ModelPoint::Rrr(a), ModelPoint::Rrr(b)) => {
            if a.coef().shape() != (1, 1) || b.coef().shape() != (1, 1) {
                return Err(Error::UnsupportedMethod(format!(
                    "quadrature supports scalar regression only (got {}x{} and {}x{}); use Monte Carlo",
                    a.q(),
                    a.p(),
                    b.q(),
                    b.p()
                )));
            }
            Ok(rrr_quadrature(a, b, spec))
        }
        _ => Err(Error::Input(format!(
            "cannot compare points of kinds {} and {}",
            p.kind(),
            q.kind()
        ))),
    }
}

// Mean and variance of sqrt(other / own) under draws from `own`.
fn root_ratio_moments<T: Real>(
    own: &ModelPoint<T>,
    other: &ModelPoint<T>,
    batch: &SampleBatch<T>,
) -> Result<(f64, f64)> {
    let half = T::lit(0.5);
    let mut ratios = Vec::with_capacity(batch.n());
    let mut push = |lo: T, lt: T| -> Result<()> {
        let r = (half * (lt - lo)).exp().as_f64();
        if !r.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite density ratio (log own {lo}, log other {lt})"
            )));
        }
        ratios.push(r);
        Ok(())
    };
    match (own, other, batch.data()) {
        (ModelPoint::Gmm(a), ModelPoint::Gmm(b), BatchData::Gmm(xs)) => {
            for &x in xs {
                push(a.log_density(x), b.log_density(x))?;
            }
        }
        (ModelPoint::Rrr(a), ModelPoint::Rrr(b), BatchData::Rrr { x, y }) => {
            let mut xi = vec![T::zero(); x.ncols()];
            let mut yi = vec![T::zero(); y.ncols()];
            for i in 0..x.nrows() {
                for (j, v) in xi.iter_mut().enumerate() {
                    *v = x[(i, j)];
                }
                for (j, v) in yi.iter_mut().enumerate() {
                    *v = y[(i, j)];
                }
                push(a.log_density(&xi, &yi)?, b.log_density(&xi, &yi)?)?;
            }
        }
        _ => return Err(Error::Input("mismatched model kinds".into())),
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var))
}

/// Monte Carlo estimate through the Bhattacharyya affinity
/// `1 - h^2 = E_p sqrt(q/p) = E_q sqrt(p/q)`, averaging the two one-sided
/// estimators built from independent draws of `p` and of `q`.
pub fn hellinger2_monte_carlo<T: Real>(
    p: &ModelPoint<T>,
    q: &ModelPoint<T>,
    n_draws: usize,
    seed: u64,
) -> Result<HellingerEstimate<T>> {
    if n_draws < 1000 {
        return Err(Error::Input(format!("need at least 1000 draws (got {n_draws})")));
    }
    if p.kind() != q.kind() {
        return Err(Error::Input(format!(
            "cannot compare points of kinds {} and {}",
            p.kind(),
            q.kind()
        )));
    }
    if let (ModelPoint::Rrr(a), ModelPoint::Rrr(b)) = (p, q) {
        if a.coef().shape() != b.coef().shape() {
            return Err(Error::Input("regression points of different shape".into()));
        }
    }
    let from_p = p.sample(n_draws, rng::derive_seed(seed, &[rng::tag::MONTE_CARLO, 0]))?;
    let from_q = q.sample(n_draws, rng::derive_seed(seed, &[rng::tag::MONTE_CARLO, 1]))?;
    let (mp, vp) = root_ratio_moments(p, q, &from_p)?;
    let (mq, vq) = root_ratio_moments(q, p, &from_q)?;
    let affinity = 0.5 * (mp + mq);
    let var = 0.25 * (vp + vq) / n_draws as f64;
    Ok(HellingerEstimate {
        h2: T::lit((1.0 - affinity).clamp(0.0, 1.0)),
        method: HellingerMethod::MonteCarlo,
        error_radius: T::lit(1.96 * var.sqrt()),
        n_eval: 2 * n_draws,
    })
}

/// Quadrature when supported, Monte Carlo otherwise.
pub fn hellinger2_auto<T: Real>(
    p: &ModelPoint<T>,
    q: &ModelPoint<T>,
    opts: &DivergenceOptions,
    stream: &[u64],
) -> Result<HellingerEstimate<T>> {
    match hellinger2_quadrature(p, q, &opts.quadrature) {
        Err(Error::UnsupportedMethod(_)) => {
            hellinger2_monte_carlo(p, q, opts.mc_draws, rng::derive_seed(opts.mc_seed, stream))
        }
        other => other,
    }
}

/// Smallest Hellinger distance between two finite grids.
#[derive(Debug, Clone)]
pub struct SeparationReport<T: Real> {
    pub inf_h: T,
    pub argmin_pair: (ModelPoint<T>, ModelPoint<T>),
    pub argmin_index: (usize, usize),
    pub grid_sizes: (usize, usize),
}

pub fn regime_separation<T: Real>(
    null_grid: &[ModelPoint<T>],
    alt_grid: &[ModelPoint<T>],
) -> Result<SeparationReport<T>> {
    regime_separation_with(null_grid, alt_grid, &DivergenceOptions::default())
}

pub fn regime_separation_with<T: Real>(
    null_grid: &[ModelPoint<T>],
    alt_grid: &[ModelPoint<T>],
    opts: &DivergenceOptions,
) -> Result<SeparationReport<T>> {
    if null_grid.is_empty() || alt_grid.is_empty() {
        return Err(Error::Input("separation needs two nonempty grids".into()));
    }
    let m = alt_grid.len();
    let h2s: Vec<T> = (0..null_grid.len() * m)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / m, k % m);
            hellinger2_auto(&null_grid[i], &alt_grid[j], opts, &[i as u64, j as u64]).map(|e| e.h2)
        })
        .collect::<Result<_>>()?;
    // first minimum in row-major order, independent of evaluation order
    let mut best = 0;
    for (k, v) in h2s.iter().enumerate() {
        if *v < h2s[best] {
            best = k;
        }
    }
    let (i, j) = (best / m, best % m);
    let h2 = h2s[best];
    Ok(SeparationReport {
        inf_h: if h2 > T::zero() { h2.sqrt() } else { T::zero() },
        argmin_pair: (null_grid[i].clone(), alt_grid[j].clone()),
        argmin_index: (i, j),
        grid_sizes: (null_grid.len(), m),
    })
}

/// Log-log least-squares fit of `h(P_delta, P_ref)` against `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit<T> {
    pub a_hat: T,
    pub intercept: T,
    pub r_squared: T,
    /// Deltas that entered the fit.
    pub deltas: Vec<T>,
    pub h_values: Vec<T>,
    /// Deltas whose estimate was indistinguishable from zero.
    pub dropped: Vec<T>,
}

pub fn fit_separation_exponent<T: Real>(
    family: &(dyn Fn(T) -> Result<ModelPoint<T>> + Sync),
    reference: &ModelPoint<T>,
    deltas: &[T],
) -> Result<ExponentFit<T>> {
    fit_separation_exponent_with(family, reference, deltas, &DivergenceOptions::default())
}

pub fn fit_separation_exponent_with<T: Real>(
    family: &(dyn Fn(T) -> Result<ModelPoint<T>> + Sync),
    reference: &ModelPoint<T>,
    deltas: &[T],
    opts: &DivergenceOptions,
) -> Result<ExponentFit<T>> {
    if deltas.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 deltas (got {})",
            deltas.len()
        )));
    }
    if deltas.iter().any(|&d| !(d > T::zero())) || deltas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("deltas must be positive and strictly increasing".into()));
    }
    if !(deltas[deltas.len() - 1] >= T::lit(10.0) * deltas[0]) {
        return Err(Error::Input("deltas must span at least one decade".into()));
    }
    let estimates: Vec<HellingerEstimate<T>> = deltas
        .par_iter()
        .enumerate()
        .map(|(i, &d)| hellinger2_auto(&family(d)?, reference, opts, &[i as u64]))
        .collect::<Result<_>>()?;
    let mut kept = Vec::new();
    let mut h_values = Vec::new();
    let mut dropped = Vec::new();
    for (&d, e) in deltas.iter().zip(&estimates) {
        if e.h2 > T::lit(3.0) * e.error_radius && e.h2 > T::zero() {
            kept.push(d);
            h_values.push(e.h());
        } else {
            warn!(
                "dropping delta = {d}: h^2 = {} is within 3x its error radius {}",
                e.h2, e.error_radius
            );
            dropped.push(d);
        }
    }
    if kept.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "only {} deltas have a Hellinger estimate distinguishable from zero",
            kept.len()
        )));
    }
    let lx: Vec<f64> = kept.iter().map(|d| d.as_f64().ln()).collect();
    let ly: Vec<f64> = h_values.iter().map(|h| h.as_f64().ln()).collect();
    let line = fit_line(&lx, &ly)
        .ok_or_else(|| Error::Numerical("degenerate log-log regression".into()))?;
    Ok(ExponentFit {
        a_hat: T::lit(line.slope),
        intercept: T::lit(line.intercept),
        r_squared: T::lit(line.r_squared),
        deltas: kept,
        h_values,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn normal(mu: f64) -> ModelPoint<f64> {
        ModelPoint::gmm(mu, mu, 1.0, 0.5).unwrap()
    }

    fn sym_mix(d: f64) -> ModelPoint<f64> {
        ModelPoint::gmm(-d, d, 1.0, 0.5).unwrap()
    }

    // Independent oracle: trapezoid rule on a very fine grid, densities
    // written out directly.
    fn trapezoid_h2(pdf_a: impl Fn(f64) -> f64, pdf_b: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let m = 400_000;
        let h = (hi - lo) / m as f64;
        let f = |x: f64| 0.5 * (pdf_a(x).sqrt() - pdf_b(x).sqrt()).powi(2);
        let mut s = 0.5 * (f(lo) + f(hi));
        for i in 1..m {
            s += f(lo + h * i as f64);
        }
        s * h
    }

    fn phi(x: f64, m: f64) -> f64 {
        (-(x - m).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn closed_form_checked_against_independent_quadrature() {
        for delta in [0.5, 1.0, 2.0, 4.0] {
            let closed = 1.0 - (-delta * delta / 8.0_f64).exp();
            let brute = trapezoid_h2(|x| phi(x, 0.0), |x| phi(x, delta), -14.0, 18.0);
            assert!((closed - brute).abs() < 1e-9, "delta {delta}: {closed} vs {brute}");
        }
    }

    #[test]
    fn identical_points_have_zero_distance() {
        for p in [normal(0.3), sym_mix(1.2), ModelPoint::gmm(2.0, -1.0, 0.5, 0.3).unwrap()] {
            let e = hellinger2_quadrature(&p, &p, &QuadratureSpec::default()).unwrap();
            assert!(e.h2.abs() < 1e-10);
            let m = hellinger2_monte_carlo(&p, &p, 2000, 1).unwrap();
            assert!(m.h2 <= m.error_radius + 1e-15);
        }
        let r = ModelPoint::Rrr(RrrParams::from_coef(dmatrix![0.7f64], 1.3).unwrap());
        let e = hellinger2_quadrature(&r, &r, &QuadratureSpec::default()).unwrap();
        assert!(e.h2.abs() < 1e-10);
    }

    #[test]
    fn gaussian_pair_matches_closed_form() {
        let e = hellinger2_quadrature(&normal(0.0), &normal(2.0), &QuadratureSpec::default()).unwrap();
        let closed = 1.0 - (-0.5f64).exp();
        assert!((e.h2 - closed).abs() < 1e-6);
        assert!((e.h2 - closed).abs() <= e.error_radius);
        assert!((closed - 0.39347).abs() < 1e-5);
    }

    #[test]
    fn symmetric_mixture_golden_value() {
        // high-precision adaptive quadrature, frozen
        let golden = 0.003_192_702_141_099_561_6;
        let e = hellinger2_quadrature(&normal(0.0), &sym_mix(0.5), &QuadratureSpec::default()).unwrap();
        assert!((e.h2 - golden).abs() < 1e-10, "{}", e.h2);
        let base = e.n_eval - 1;
        let fine = hellinger2_quadrature(&normal(0.0), &sym_mix(0.5), &QuadratureSpec::fixed(10 * base)).unwrap();
        assert!((fine.h2 - e.h2).abs() < 1e-12);
    }

    #[test]
    fn refinement_never_increases_radius() {
        let (a, b) = (sym_mix(0.7), ModelPoint::gmm(0.2, 1.0, 0.8, 0.3).unwrap());
        let mut last = f64::INFINITY;
        for m in [16, 32, 64, 128, 256, 512, 1024, 2048] {
            let e = hellinger2_quadrature(&a, &b, &QuadratureSpec::fixed(m)).unwrap();
            assert!(e.error_radius <= last);
            last = e.error_radius;
        }
    }

    #[test]
    fn quadrature_radius_covers_error_at_coarse_resolution() {
        let closed = 1.0 - (-1.0f64 / 8.0).exp();
        for m in [32, 64, 128] {
            let e = hellinger2_quadrature(&normal(0.0), &normal(1.0), &QuadratureSpec::fixed(m)).unwrap();
            assert!((e.h2 - closed).abs() <= e.error_radius, "m = {m}");
        }
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let e = hellinger2_monte_carlo(&normal(0.0), &normal(2.0), 1_000_000, 17).unwrap();
        let closed = 1.0 - (-0.5f64).exp();
        assert!((e.h2 - closed).abs() <= e.error_radius.max(1e-3));
        assert_eq!(e.method, HellingerMethod::MonteCarlo);
    }

    #[test]
    fn monte_carlo_rejects_small_budgets() {
        assert!(hellinger2_monte_carlo(&normal(0.0), &normal(1.0), 999, 1).is_err());
    }

    #[test]
    fn unsupported_quadrature_dimension() {
        let a = ModelPoint::Rrr(RrrParams::from_coef(dmatrix![1.0f64, 0.0, 0.0; 0.0, 0.5, 0.0], 1.0).unwrap());
        assert!(matches!(
            hellinger2_quadrature(&a, &a, &QuadratureSpec::default()),
            Err(Error::UnsupportedMethod(_))
        ));
    }

    #[test]
    fn scalar_regression_quadrature_matches_gaussian_closed_form() {
        // (x, y) is jointly Gaussian, so the affinity has a closed form
        let joint = |c: f64, s: f64| [[1.0, c], [c, c * c + s * s]];
        let det = |m: [[f64; 2]; 2]| m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let (a, b) = (joint(0.5, 1.0), joint(1.1, 0.8));
        let avg = [
            [(a[0][0] + b[0][0]) / 2.0, (a[0][1] + b[0][1]) / 2.0],
            [(a[1][0] + b[1][0]) / 2.0, (a[1][1] + b[1][1]) / 2.0],
        ];
        let closed = 1.0 - det(a).powf(0.25) * det(b).powf(0.25) / det(avg).sqrt();
        let pa = ModelPoint::Rrr(RrrParams::from_coef(dmatrix![0.5f64], 1.0).unwrap());
        let pb = ModelPoint::Rrr(RrrParams::from_coef(dmatrix![1.1f64], 0.8).unwrap());
        let e = hellinger2_quadrature(&pa, &pb, &QuadratureSpec::default()).unwrap();
        assert!((e.h2 - closed).abs() < 1e-7, "{} vs {closed}", e.h2);
    }

    #[test]
    fn separation_of_grids() {
        let null = vec![normal(0.0)];
        let alt: Vec<_> = (0..20).map(|i| sym_mix(1.0 + 0.1 * i as f64)).collect();
        let rep = regime_separation(&null, &alt).unwrap();
        assert!(rep.inf_h > 0.0);
        assert_eq!(rep.argmin_index, (0, 0));
        assert_eq!(rep.grid_sizes, (1, 20));

        let same = regime_separation(&alt, &alt).unwrap();
        assert!(same.inf_h < 1e-5);

        let mut approaching = alt.clone();
        approaching.push(sym_mix(0.0));
        let rep = regime_separation(&null, &approaching).unwrap();
        assert!(rep.inf_h < 1e-5);
        assert_eq!(rep.argmin_index, (0, 20));

        assert!(regime_separation::<f64>(&[], &alt).is_err());
    }

    #[test]
    fn exponent_input_validation() {
        let fam = |d: f64| ModelPoint::gmm(d, d, 1.0, 0.5);
        let r = normal(0.0);
        assert!(matches!(
            fit_separation_exponent(&fam, &r, &[0.1, 0.2, 0.3]),
            Err(Error::InsufficientData(_))
        ));
        assert!(fit_separation_exponent(&fam, &r, &[0.1, 0.2, 0.3, 0.4]).is_err());
        assert!(fit_separation_exponent(&fam, &r, &[0.1, 0.3, 0.2, 1.0]).is_err());
    }

    #[test]
    fn exponent_drops_unresolvable_points() {
        // at these deltas the log-density difference is below rounding level
        let fam = |d: f64| ModelPoint::gmm(-d, d, 1.0, 0.5);
        let deltas = [1e-9, 2e-9, 0.1, 0.2, 0.4, 0.8];
        let fit = fit_separation_exponent(&fam, &normal(0.0), &deltas).unwrap();
        assert_eq!(fit.dropped, vec![1e-9, 2e-9]);
        assert_eq!(fit.deltas.len(), 4);
        let too_few = [1e-9, 2e-9, 3e-9, 0.1, 0.2];
        assert!(matches!(
            fit_separation_exponent(&fam, &normal(0.0), &too_few),
            Err(Error::InsufficientData(_))
        ));
    }
}
