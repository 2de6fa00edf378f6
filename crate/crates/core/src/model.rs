//! The two singular model families: a two-component equal-variance Gaussian
//! mixture and Gaussian reduced-rank regression with a standard Gaussian
//! design.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;
use crate::scalar::{ln_sqrt_2pi, log_sum_exp, Real};

const SAMPLE_TAG: u64 = 0x7361_6d70;

/// Two-component Gaussian mixture `pi1 N(mu1, sigma^2) + (1 - pi1) N(mu2, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmParams<T: Real> {
    mu1: T,
    mu2: T,
    sigma: T,
    pi1: T,
}

impl<T: Real> GmmParams<T> {
    pub fn new(mu1: T, mu2: T, sigma: T, pi1: T) -> Result<Self> {
        if !(mu1.is_finite() && mu2.is_finite()) {
            return Err(Error::ParameterDomain(format!(
                "component means must be finite (got {mu1}, {mu2})"
            )));
        }
        if !(sigma.is_finite() && sigma > T::zero()) {
            return Err(Error::ParameterDomain(format!(
                "sigma must be positive (got {sigma})"
            )));
        }
        if !(pi1 >= T::zero() && pi1 <= T::one()) {
            return Err(Error::ParameterDomain(format!(
                "pi1 must lie in [0, 1] (got {pi1})"
            )));
        }
        Ok(Self { mu1, mu2, sigma, pi1 })
    }

    /// A single Gaussian `N(mu, sigma^2)` written as a degenerate mixture.
    pub fn single(mu: T, sigma: T) -> Result<Self> {
        Self::new(mu, mu, sigma, T::lit(0.5))
    }

    pub fn mu1(&self) -> T {
        self.mu1
    }

    pub fn mu2(&self) -> T {
        self.mu2
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn pi1(&self) -> T {
        self.pi1
    }

    pub fn pi2(&self) -> T {
        T::one() - self.pi1
    }

    /// The label-swapped parameter `(mu2, mu1, sigma, 1 - pi1)`.
    pub fn swapped(&self) -> Self {
        Self {
            mu1: self.mu2,
            mu2: self.mu1,
            sigma: self.sigma,
            pi1: T::one() - self.pi1,
        }
    }

    /// Components as `(mean, weight)` ordered by mean, ties broken by weight.
    /// Both labelings of the same distribution map to the same ordering.
    pub(crate) fn canonical(&self) -> [(T, T); 2] {
        let a = (self.mu1, self.pi1);
        let b = (self.mu2, self.pi2());
        if a.0 < b.0 || (a.0 == b.0 && a.1 <= b.1) {
            [a, b]
        } else {
            [b, a]
        }
    }

    pub fn variance(&self) -> T {
        let d = self.mu1 - self.mu2;
        self.sigma * self.sigma + self.pi1 * self.pi2() * d * d
    }

    pub fn log_density(&self, x: T) -> T {
        let [(m1, w1), (m2, w2)] = self.canonical();
        let ls = self.sigma.ln() + ln_sqrt_2pi::<T>();
        let inv = T::one() / self.sigma;
        let term = |m: T, w: T| {
            let z = (x - m) * inv;
            w.ln() - ls - z * z * T::lit(0.5)
        };
        log_sum_exp(&[term(m1, w1), term(m2, w2)])
    }
}

/// Reduced-rank regression `y = C x + eps`, `x ~ N(0, I_p)`,
/// `eps ~ N(0, sigma_eps^2 I_q)`.
///
/// The parameter is a factorisation `C = U diag(s) V^T` with `U` (q x r) and
/// `V` (p x r) having orthonormal columns. Distinct factorisations of the same
/// `C` (for example `(-U, s, -V)`) are observationally equivalent.
#[derive(Debug, Clone, PartialEq)]
pub struct RrrParams<T: Real> {
    u: DMatrix<T>,
    s: DVector<T>,
    v: DMatrix<T>,
    sigma_eps: T,
    coef: DMatrix<T>,
}

impl<T: Real> RrrParams<T> {
    pub fn from_factors(u: DMatrix<T>, s: DVector<T>, v: DMatrix<T>, sigma_eps: T) -> Result<Self> {
        let (q, r) = u.shape();
        let (p, rv) = v.shape();
        if r == 0 || q == 0 || p == 0 {
            return Err(Error::ParameterDomain("empty factorisation".into()));
        }
        if rv != r || s.len() != r {
            return Err(Error::ParameterDomain(format!(
                "factor shapes disagree: U {q}x{r}, s {}, V {p}x{rv}",
                s.len()
            )));
        }
        if r > p.min(q) {
            return Err(Error::ParameterDomain(format!(
                "factorisation rank {r} exceeds min(p, q) = {}",
                p.min(q)
            )));
        }
        if s.iter().any(|&x| !(x.is_finite() && x >= T::zero())) {
            return Err(Error::ParameterDomain(
                "singular values must be finite and non-negative".into(),
            ));
        }
        if !(sigma_eps.is_finite() && sigma_eps > T::zero()) {
            return Err(Error::ParameterDomain(format!(
                "sigma_eps must be positive (got {sigma_eps})"
            )));
        }
        let tol = T::lit(1e-6);
        for (name, m) in [("U", &u), ("V", &v)] {
            let gram = m.transpose() * m;
            let off = (gram - DMatrix::<T>::identity(r, r)).amax();
            if !(off <= tol) {
                return Err(Error::ParameterDomain(format!(
                    "{name} columns are not orthonormal (deviation {off})"
                )));
            }
        }
        let coef = linalg::compose(&u, &s, &v);
        Ok(Self {
            u,
            s,
            v,
            sigma_eps,
            coef,
        })
    }

    /// Factorises `coef` (q x p) with the crate's deterministic sign convention.
    pub fn from_coef(coef: DMatrix<T>, sigma_eps: T) -> Result<Self> {
        if coef.iter().any(|x| !x.is_finite()) {
            return Err(Error::ParameterDomain("coefficient matrix must be finite".into()));
        }
        if coef.nrows() == 0 || coef.ncols() == 0 {
            return Err(Error::ParameterDomain("empty coefficient matrix".into()));
        }
        let svd = linalg::signed_svd(&coef)?;
        let mut out = Self::from_factors(svd.u, svd.s, svd.v, sigma_eps)?;
        // keep the caller's matrix bit-for-bit; the factors reproduce it only
        // up to rounding
        out.coef = coef;
        Ok(out)
    }

    pub fn coef(&self) -> &DMatrix<T> {
        &self.coef
    }

    pub fn u(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn singular_values(&self) -> &DVector<T> {
        &self.s
    }

    pub fn v(&self) -> &DMatrix<T> {
        &self.v
    }

    pub fn sigma_eps(&self) -> T {
        self.sigma_eps
    }

    /// Response dimension.
    pub fn q(&self) -> usize {
        self.coef.nrows()
    }

    /// Predictor dimension.
    pub fn p(&self) -> usize {
        self.coef.ncols()
    }

    /// Number of singular values above `tol * max(1, s_max)`.
    pub fn rank(&self, tol: T) -> usize {
        let smax = self.s.iter().copied().fold(T::one(), |a, b| if b > a { b } else { a });
        self.s.iter().filter(|&&x| x > tol * smax).count()
    }

    /// `(-U, s, -V)`: the same coefficient matrix with every singular pair negated.
    pub fn sign_flipped(&self) -> Self {
        Self {
            u: -self.u.clone(),
            s: self.s.clone(),
            v: -self.v.clone(),
            sigma_eps: self.sigma_eps,
            coef: self.coef.clone(),
        }
    }

    /// Negates only singular pair `k`.
    pub fn pair_flipped(&self, k: usize) -> Self {
        let mut out = self.clone();
        if k < out.s.len() {
            out.u.column_mut(k).neg_mut();
            out.v.column_mut(k).neg_mut();
        }
        out
    }

    pub fn log_density(&self, x: &[T], y: &[T]) -> Result<T> {
        let (q, p) = self.coef.shape();
        if x.len() != p || y.len() != q {
            return Err(Error::Input(format!(
                "observation shape (x: {}, y: {}) does not match model (p: {p}, q: {q})",
                x.len(),
                y.len()
            )));
        }
        let half = T::lit(0.5);
        let xx = x.iter().fold(T::zero(), |a, &v| a + v * v);
        let mut rss = T::zero();
        for i in 0..q {
            let mut mean = T::zero();
            for j in 0..p {
                mean += self.coef[(i, j)] * x[j];
            }
            let r = y[i] - mean;
            rss += r * r;
        }
        let s2 = self.sigma_eps * self.sigma_eps;
        let pq = T::from_count(p + q);
        Ok(-pq * ln_sqrt_2pi::<T>() - half * xx - T::from_count(q) * self.sigma_eps.ln() - half * rss / s2)
    }
}

/// Which family a point or batch belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Gmm,
    Rrr,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Gmm => f.write_str("gmm"),
            ModelKind::Rrr => f.write_str("rrr"),
        }
    }
}

/// One parameter value `w`; it induces the distribution `P_w`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelPoint<T: Real> {
    Gmm(GmmParams<T>),
    Rrr(RrrParams<T>),
}

/// A single observation.
#[derive(Debug, Clone, Copy)]
pub enum Observation<'a, T> {
    Scalar(T),
    Pair { x: &'a [T], y: &'a [T] },
}

/// Batch payload: a vector for mixtures, design and response matrices
/// (rows are observations) for regression.
#[derive(Debug, Clone, PartialEq)]
pub enum BatchData<T: Real> {
    Gmm(Vec<T>),
    Rrr { x: DMatrix<T>, y: DMatrix<T> },
}

/// `n` observations together with the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch<T: Real> {
    data: BatchData<T>,
    seed: u64,
}

impl<T: Real> SampleBatch<T> {
    pub fn from_gmm_data(data: Vec<T>, seed: u64) -> Self {
        Self {
            data: BatchData::Gmm(data),
            seed,
        }
    }

    pub fn from_rrr_data(x: DMatrix<T>, y: DMatrix<T>, seed: u64) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::Input(format!(
                "design has {} rows but response has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        Ok(Self {
            data: BatchData::Rrr { x, y },
            seed,
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self.data {
            BatchData::Gmm(_) => ModelKind::Gmm,
            BatchData::Rrr { .. } => ModelKind::Rrr,
        }
    }

    pub fn n(&self) -> usize {
        match &self.data {
            BatchData::Gmm(v) => v.len(),
            BatchData::Rrr { x, .. } => x.nrows(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn data(&self) -> &BatchData<T> {
        &self.data
    }

    pub fn gmm_data(&self) -> Option<&[T]> {
        match &self.data {
            BatchData::Gmm(v) => Some(v),
            BatchData::Rrr { .. } => None,
        }
    }

    pub fn rrr_data(&self) -> Option<(&DMatrix<T>, &DMatrix<T>)> {
        match &self.data {
            BatchData::Rrr { x, y } => Some((x, y)),
            BatchData::Gmm(_) => None,
        }
    }
}

impl<T: Real> ModelPoint<T> {
    pub fn gmm(mu1: T, mu2: T, sigma: T, pi1: T) -> Result<Self> {
        GmmParams::new(mu1, mu2, sigma, pi1).map(Self::Gmm)
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelPoint::Gmm(_) => ModelKind::Gmm,
            ModelPoint::Rrr(_) => ModelKind::Rrr,
        }
    }

    pub fn as_gmm(&self) -> Option<&GmmParams<T>> {
        match self {
            ModelPoint::Gmm(g) => Some(g),
            ModelPoint::Rrr(_) => None,
        }
    }

    pub fn as_rrr(&self) -> Option<&RrrParams<T>> {
        match self {
            ModelPoint::Rrr(r) => Some(r),
            ModelPoint::Gmm(_) => None,
        }
    }

    /// Draws `n` i.i.d. observations. The output is a pure function of
    /// `(self, n, seed)`, and observationally equivalent points produce
    /// identical batches for the same seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleBatch<T>> {
        if n == 0 {
            return Err(Error::Input("sample size must be at least 1".into()));
        }
        let mut rng = rng::stream(seed, &[SAMPLE_TAG]);
        let data = match self {
            ModelPoint::Gmm(g) => {
                let [(m1, w1), (m2, _)] = g.canonical();
                let w1 = w1.as_f64();
                let sigma = g.sigma();
                let xs = (0..n)
                    .map(|_| {
                        let u: f64 = rng.random();
                        let z: f64 = rng.sample(StandardNormal);
                        let m = if u < w1 { m1 } else { m2 };
                        m + sigma * T::lit(z)
                    })
                    .collect();
                BatchData::Gmm(xs)
            }
            ModelPoint::Rrr(r) => {
                let (q, p) = r.coef.shape();
                let mut x = DMatrix::<T>::zeros(n, p);
                let mut y = DMatrix::<T>::zeros(n, q);
                let mut xi = vec![T::zero(); p];
                for i in 0..n {
                    for (j, slot) in xi.iter_mut().enumerate() {
                        let z: f64 = rng.sample(StandardNormal);
                        *slot = T::lit(z);
                        x[(i, j)] = *slot;
                    }
                    for k in 0..q {
                        let mut mean = T::zero();
                        for j in 0..p {
                            mean += r.coef[(k, j)] * xi[j];
                        }
                        let e: f64 = rng.sample(StandardNormal);
                        y[(i, k)] = mean + r.sigma_eps * T::lit(e);
                    }
                }
                BatchData::Rrr { x, y }
            }
        };
        Ok(SampleBatch { data, seed })
    }

    /// `log p_w(obs)` with respect to Lebesgue measure.
    pub fn log_density(&self, obs: Observation<'_, T>) -> Result<T> {
        match (self, obs) {
            (ModelPoint::Gmm(g), Observation::Scalar(x)) => Ok(g.log_density(x)),
            (ModelPoint::Rrr(r), Observation::Pair { x, y }) => r.log_density(x, y),
            (ModelPoint::Gmm(_), Observation::Pair { .. }) => Err(Error::Input(
                "mixture density evaluated at a regression observation".into(),
            )),
            (ModelPoint::Rrr(_), Observation::Scalar(_)) => Err(Error::Input(
                "regression density evaluated at a scalar observation".into(),
            )),
        }
    }

    /// Sum of log-densities over a batch.
    pub fn log_likelihood(&self, batch: &SampleBatch<T>) -> Result<T> {
        match (self, batch.data()) {
            (ModelPoint::Gmm(g), BatchData::Gmm(xs)) => {
                Ok(xs.iter().fold(T::zero(), |a, &x| a + g.log_density(x)))
            }
            (ModelPoint::Rrr(r), BatchData::Rrr { x, y }) => {
                let (q, p) = r.coef.shape();
                if x.ncols() != p || y.ncols() != q {
                    return Err(Error::Input(format!(
                        "batch dimensions (p: {}, q: {}) do not match model (p: {p}, q: {q})",
                        x.ncols(),
                        y.ncols()
                    )));
                }
                let n = x.nrows();
                if n == 0 {
                    return Ok(T::zero());
                }
                let half = T::lit(0.5);
                let resid = y - x * r.coef.transpose();
                let rss = resid.norm_squared();
                let xx = x.norm_squared();
                let s2 = r.sigma_eps * r.sigma_eps;
                let nt = T::from_count(n);
                Ok(-nt * T::from_count(p + q) * ln_sqrt_2pi::<T>()
                    - half * xx
                    - nt * T::from_count(q) * r.sigma_eps.ln()
                    - half * rss / s2)
            }
            _ => Err(Error::Input(format!(
                "batch of kind {} does not match model of kind {}",
                batch.kind(),
                self.kind()
            ))),
        }
    }
}

impl<T: Real> fmt::Display for ModelPoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelPoint::Gmm(g) => write!(
                f,
                "gmm(mu1={}, mu2={}, sigma={}, pi1={})",
                g.mu1, g.mu2, g.sigma, g.pi1
            ),
            ModelPoint::Rrr(r) => {
                write!(f, "rrr({}x{}, s=[", r.q(), r.p())?;
                for (i, s) in r.s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, "], u11={}, sigma_eps={})", r.u[(0, 0)], r.sigma_eps)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn gmm(a: f64, b: f64, s: f64, p: f64) -> ModelPoint<f64> {
        ModelPoint::gmm(a, b, s, p).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            GmmParams::new(0.0, 0.0, 0.0, 0.5),
            Err(Error::ParameterDomain(_))
        ));
        assert!(GmmParams::new(0.0, 0.0, 1.0, 1.5).is_err());
        assert!(GmmParams::new(f64::NAN, 0.0, 1.0, 0.5).is_err());
        assert!(RrrParams::from_coef(DMatrix::<f64>::zeros(2, 3), -1.0).is_err());
        assert!(gmm(0.0, 0.0, 1.0, 0.5).sample(0, 1).is_err());
    }

    #[test]
    fn degenerate_mixture_sample_mean() {
        let b = gmm(0.0, 0.0, 1.0, 0.5).sample(1000, 11).unwrap();
        let xs = b.gmm_data().unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn separated_mixture_variance() {
        // pi1 pi2 (mu1 - mu2)^2 + sigma^2 = 0.25 * 16 + 1
        let p = GmmParams::new(-2.0, 2.0, 1.0, 0.5).unwrap();
        assert_eq!(p.variance(), 5.0);
        let b = ModelPoint::Gmm(p).sample(100_000, 3).unwrap();
        let xs = b.gmm_data().unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!((var / 5.0 - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn zero_coefficient_regression_is_uncorrelated() {
        let point = ModelPoint::Rrr(RrrParams::from_coef(DMatrix::<f64>::zeros(2, 3), 1.0).unwrap());
        let b = point.sample(500, 5).unwrap();
        let (x, y) = b.rrr_data().unwrap();
        for j in 0..3 {
            for k in 0..2 {
                let xc = x.column(j);
                let yc = y.column(k);
                let (mx, my) = (xc.mean(), yc.mean());
                let cov = xc.iter().zip(yc.iter()).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>();
                let vx = xc.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
                let vy = yc.iter().map(|b| (b - my).powi(2)).sum::<f64>();
                let corr = cov / (vx * vy).sqrt();
                assert!(corr.abs() < 0.1, "corr({j},{k}) = {corr}");
            }
        }
    }

    #[test]
    fn log_density_reference_values() {
        let std = gmm(0.0, 0.0, 1.0, 0.5);
        let v = std.log_density(Observation::Scalar(0.0)).unwrap();
        assert!((v - (-0.918_938_533_204_672_7)).abs() < 1e-12);

        // 0.5 phi(-1) + 0.5 phi(1) = phi(1)
        let sym = gmm(-1.0, 1.0, 1.0, 0.5);
        let v = sym.log_density(Observation::Scalar(0.0)).unwrap();
        let direct = (0.5 * (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt() * 2.0).ln();
        assert!((v - direct).abs() < 1e-12);
        assert!((v - (-1.418_938_533_204_672_7)).abs() < 1e-12);

        let r = ModelPoint::Rrr(RrrParams::from_coef(DMatrix::<f64>::zeros(1, 1), 1.0).unwrap());
        let v = r
            .log_density(Observation::Pair { x: &[0.0], y: &[0.0] })
            .unwrap();
        assert!((v - 2.0 * -0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_input_error() {
        let r = ModelPoint::Rrr(RrrParams::from_coef(DMatrix::<f64>::zeros(2, 3), 1.0).unwrap());
        assert!(matches!(
            r.log_density(Observation::Pair { x: &[0.0], y: &[0.0] }),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            r.log_density(Observation::Scalar(0.0)),
            Err(Error::Input(_))
        ));
        assert!(gmm(0.0, 0.0, 1.0, 0.5)
            .log_density(Observation::Pair { x: &[0.0], y: &[0.0] })
            .is_err());
    }

    #[test]
    fn mixture_density_integrates_to_one() {
        for p in [gmm(0.0, 0.0, 1.0, 0.5), gmm(-2.0, 3.0, 0.7, 0.2), gmm(1.0, 1.5, 2.0, 0.9)] {
            let g = *p.as_gmm().unwrap();
            let lo = g.mu1().min(g.mu2()) - 12.0 * g.sigma();
            let hi = g.mu1().max(g.mu2()) + 12.0 * g.sigma();
            let total = crate::numeric::simpson(|x| g.log_density(x).exp(), lo, hi, 20_000);
            assert!((total - 1.0).abs() < 1e-6, "{p}: {total}");
        }
    }

    #[test]
    fn regression_density_integrates_to_one() {
        let r = RrrParams::from_coef(dmatrix![0.8], 0.6).unwrap();
        let total = crate::numeric::simpson(
            |x| {
                crate::numeric::simpson(
                    |y| r.log_density(&[x], &[y]).unwrap().exp(),
                    0.8 * x - 8.0,
                    0.8 * x + 8.0,
                    400,
                )
            },
            -9.0,
            9.0,
            400,
        );
        assert!((total - 1.0).abs() < 1e-4, "{total}");
    }

    #[test]
    fn label_swap_and_sign_flip_leave_sampling_unchanged() {
        let a = gmm(2.0, -2.0, 1.0, 0.5);
        let b = ModelPoint::Gmm(a.as_gmm().unwrap().swapped());
        assert_eq!(a.sample(50, 9).unwrap(), b.sample(50, 9).unwrap());

        let c = RrrParams::from_coef(dmatrix![1.0, 0.5, 0.0; 0.2, -0.3, 0.7], 1.0).unwrap();
        let f = c.sign_flipped();
        assert_eq!(c.coef(), f.coef());
        let (pa, pb) = (ModelPoint::Rrr(c), ModelPoint::Rrr(f));
        assert_eq!(pa.sample(20, 4).unwrap(), pb.sample(20, 4).unwrap());
    }

    #[test]
    fn batch_likelihood_matches_pointwise_sum() {
        let r = ModelPoint::Rrr(
            RrrParams::from_coef(dmatrix![1.0, 0.5, 0.0; 0.2, -0.3, 0.7], 0.9).unwrap(),
        );
        let b = r.sample(30, 8).unwrap();
        let (x, y) = b.rrr_data().unwrap();
        let mut sum = 0.0;
        for i in 0..30 {
            let xi: Vec<f64> = x.row(i).iter().copied().collect();
            let yi: Vec<f64> = y.row(i).iter().copied().collect();
            sum += r.log_density(Observation::Pair { x: &xi, y: &yi }).unwrap();
        }
        assert!((sum - r.log_likelihood(&b).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn f32_points_work() {
        let p = ModelPoint::<f32>::gmm(-1.0, 1.0, 1.0, 0.5).unwrap();
        let v = p.log_density(Observation::Scalar(0.0)).unwrap();
        assert!((v - (-1.418_938_5)).abs() < 1e-5);
        assert_eq!(p.sample(10, 1).unwrap().n(), 10);
    }
}
