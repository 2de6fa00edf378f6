//! Test procedures and Monte Carlo estimation of worst-case error curves.

pub mod em;
mod gmm;
mod rrr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ModelPoint, SampleBatch};
use crate::rng;
use crate::scalar::Real;

pub use em::{EmConfig, GaussianFit, MixtureFit};
pub use gmm::{clear_calibration_cache, GmmMixtureTest, GmmOrderingTest};
pub use rrr::{RrrRankTest, RrrSignTest, SIGN_TIE_TOL};

/// Something worth recording about an individual decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictNote {
    /// EM hit its iteration cap; the best iterate was used.
    EmNotConverged,
    /// `|U_11|` was below the tie tolerance and the test accepted.
    SignTie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub reject: bool,
    pub note: Option<VerdictNote>,
}

impl Verdict {
    pub fn plain(reject: bool) -> Self {
        Self { reject, note: None }
    }
}

/// A deterministic decision rule `phi_n: X^n -> {0, 1}`.
pub trait TestProcedure<T: Real>: Send + Sync {
    fn name(&self) -> &str;
    fn calibration(&self) -> &Calibration;
    /// Precomputes anything shared by all decisions at sample size `n`, so
    /// that the parallel replications do not contend for it.
    fn prepare(&self, _n: usize) -> Result<()> {
        Ok(())
    }
    fn decide(&self, batch: &SampleBatch<T>) -> Result<Verdict>;
}

/// Nominal level and bootstrap settings shared by the calibrated tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub level: f64,
    pub bootstrap_reps: usize,
    pub seed: u64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            level: 0.05,
            bootstrap_reps: 200,
            seed: 0x5eed,
        }
    }
}

impl Calibration {
    pub fn new(level: f64, bootstrap_reps: usize, seed: u64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Input(format!("nominal level must lie in (0, 1) (got {level})")));
        }
        if bootstrap_reps == 0 {
            return Err(Error::Input("bootstrap needs at least one replicate".into()));
        }
        Ok(Self {
            level,
            bootstrap_reps,
            seed,
        })
    }

    /// Monte Carlo p-value rule `(1 + #{T* >= t}) / (B + 1) <= level`.
    pub(crate) fn rejects(&self, stat: f64, boot: &[f64]) -> bool {
        let exceed = boot.iter().filter(|&&b| b >= stat).count();
        (1 + exceed) as f64 / (boot.len() + 1) as f64 <= self.level
    }
}

/// Registry names of the built-in tests.
pub const TEST_NAMES: &[&str] = &["gmm-ordering", "gmm-mixture", "rrr-rank", "rrr-sign"];

/// Builds a registered test. `r0` is only used by `rrr-rank`.
pub fn test_by_name<T: Real>(
    name: &str,
    calibration: Calibration,
    em: EmConfig,
    r0: usize,
) -> Option<Box<dyn TestProcedure<T>>> {
    match name {
        "gmm-ordering" => Some(Box::new(GmmOrderingTest::new(em, calibration))),
        "gmm-mixture" => Some(Box::new(GmmMixtureTest::new(em, calibration))),
        "rrr-rank" => Some(Box::new(RrrRankTest::new(r0, calibration))),
        "rrr-sign" => Some(Box::new(RrrSignTest::new(calibration))),
        _ => None,
    }
}

/// Seed of replication `rep` at sample size `n`. It does not depend on the
/// grid point, so every point of a grid sees the same random numbers and
/// observationally equivalent points yield identical batches.
pub fn replication_seed(base: u64, n: usize, rep: usize) -> u64 {
    rng::derive_seed(base, &[rng::tag::REPLICATION, n as u64, rep as u64])
}

/// `1.96 sqrt(0.25 / reps)`, the worst-case 95% binomial half-width.
pub fn mc_half_width(reps: usize) -> f64 {
    1.96 * (0.25 / reps as f64).sqrt()
}

/// Decisions of a test at one point across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRates {
    pub rejections: usize,
    pub acceptances: usize,
    pub failures: usize,
    pub em_not_converged: usize,
    pub sign_ties: usize,
    pub first_error: Option<Error>,
}

impl PointRates {
    pub fn completed(&self) -> usize {
        self.rejections + self.acceptances
    }

    pub fn rejection_rate(&self) -> f64 {
        self.rejections as f64 / self.completed().max(1) as f64
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.acceptances as f64 / self.completed().max(1) as f64
    }
}

fn collect_rates(outcomes: &[Result<Verdict>]) -> PointRates {
    let mut r = PointRates {
        rejections: 0,
        acceptances: 0,
        failures: 0,
        em_not_converged: 0,
        sign_ties: 0,
        first_error: None,
    };
    for o in outcomes {
        match o {
            Ok(v) => {
                if v.reject {
                    r.rejections += 1;
                } else {
                    r.acceptances += 1;
                }
                match v.note {
                    Some(VerdictNote::EmNotConverged) => r.em_not_converged += 1,
                    Some(VerdictNote::SignTie) => r.sign_ties += 1,
                    None => {}
                }
            }
            Err(e) => {
                r.failures += 1;
                if r.first_error.is_none() {
                    r.first_error = Some(e.clone());
                }
            }
        }
    }
    r
}

/// Runs `reps` replications of `test` at every point and sample size `n`.
/// Replication-level errors are counted, not propagated.
pub fn rates_at<T: Real>(
    test: &dyn TestProcedure<T>,
    points: &[ModelPoint<T>],
    n: usize,
    reps: usize,
    base_seed: u64,
) -> Result<Vec<PointRates>> {
    test.prepare(n)?;
    let outcomes: Vec<Result<Verdict>> = (0..points.len() * reps)
        .into_par_iter()
        .map(|k| {
            let (i, r) = (k / reps, k % reps);
            let batch = points[i].sample(n, replication_seed(base_seed, n, r))?;
            test.decide(&batch)
        })
        .collect();
    Ok(outcomes.chunks(reps).map(collect_rates).collect())
}

/// Empirical rejection rate of `test` under `point`.
pub fn rejection_rate<T: Real>(
    test: &dyn TestProcedure<T>,
    point: &ModelPoint<T>,
    n: usize,
    reps: usize,
    base_seed: u64,
) -> Result<f64> {
    let rates = rates_at(test, std::slice::from_ref(point), n, reps, base_seed)?.remove(0);
    if let Some(e) = rates.first_error {
        return Err(e);
    }
    Ok(rates.rejection_rate())
}

/// Worst-case empirical type I and type II errors per sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve<T: Real> {
    pub test_name: String,
    pub sample_sizes: Vec<usize>,
    /// Max over the null grid of the rejection rate.
    pub alpha_hat: Vec<f64>,
    /// Max over the alternative grid of the acceptance rate.
    pub beta_hat: Vec<f64>,
    pub mc_half_width: Vec<f64>,
    /// Index of the null point attaining `alpha_hat`.
    pub worst_null: Vec<usize>,
    /// Index of the alternative point attaining `beta_hat`.
    pub worst_alt: Vec<usize>,
    /// Per-point rates, `[n][point]`.
    pub null_rates: Vec<Vec<PointRates>>,
    pub alt_rates: Vec<Vec<PointRates>>,
    pub reps: usize,
    pub base_seed: u64,
    pub null_grid: Vec<ModelPoint<T>>,
    pub alt_grid: Vec<ModelPoint<T>>,
}

impl<T: Real> ErrorCurve<T> {
    pub fn sums(&self) -> Vec<f64> {
        // from counts when both rates share a denominator, so that a witness
        // pair with identical decisions sums to exactly 1
        (0..self.alpha_hat.len())
            .map(|k| {
                let null = &self.null_rates[k][self.worst_null[k]];
                let alt = &self.alt_rates[k][self.worst_alt[k]];
                if null.completed() == alt.completed() && null.completed() > 0 {
                    (null.rejections + alt.acceptances) as f64 / null.completed() as f64
                } else {
                    self.alpha_hat[k] + self.beta_hat[k]
                }
            })
            .collect()
    }

    pub fn power(&self) -> Vec<f64> {
        self.beta_hat.iter().map(|b| 1.0 - b).collect()
    }

    pub fn total_failures(&self) -> usize {
        self.null_rates
            .iter()
            .chain(&self.alt_rates)
            .flatten()
            .map(|r| r.failures)
            .sum()
    }
}

// first index of the maximum
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Estimates `alpha_n = max_null P^n(phi = 1)` and
/// `beta_n = max_alt P^n(phi = 0)` on finite grids.
///
/// Fails with [`Error::ReplicationFailures`] when more than 1% of all
/// replications error out.
pub fn estimate_error_curve<T: Real>(
    test: &dyn TestProcedure<T>,
    null_grid: &[ModelPoint<T>],
    alt_grid: &[ModelPoint<T>],
    sample_sizes: &[usize],
    reps: usize,
    base_seed: u64,
) -> Result<ErrorCurve<T>> {
    if null_grid.is_empty() || alt_grid.is_empty() {
        return Err(Error::Input("null and alternative grids must be nonempty".into()));
    }
    if reps < 100 {
        return Err(Error::Input(format!("need at least 100 replications (got {reps})")));
    }
    estimate_error_curve_unchecked(test, null_grid, alt_grid, sample_sizes, reps, base_seed)
}

/// As [`estimate_error_curve`] without the minimum replication count, for
/// smoke runs.
pub fn estimate_error_curve_unchecked<T: Real>(
    test: &dyn TestProcedure<T>,
    null_grid: &[ModelPoint<T>],
    alt_grid: &[ModelPoint<T>],
    sample_sizes: &[usize],
    reps: usize,
    base_seed: u64,
) -> Result<ErrorCurve<T>> {
    if null_grid.is_empty() || alt_grid.is_empty() || reps == 0 || sample_sizes.is_empty() {
        return Err(Error::Input("empty grid, sample-size list or replication count".into()));
    }
    let mut curve = ErrorCurve {
        test_name: test.name().to_string(),
        sample_sizes: sample_sizes.to_vec(),
        alpha_hat: Vec::new(),
        beta_hat: Vec::new(),
        mc_half_width: Vec::new(),
        worst_null: Vec::new(),
        worst_alt: Vec::new(),
        null_rates: Vec::new(),
        alt_rates: Vec::new(),
        reps,
        base_seed,
        null_grid: null_grid.to_vec(),
        alt_grid: alt_grid.to_vec(),
    };
    let mut failed = 0;
    let mut attempted = 0;
    let mut first = None;
    for &n in sample_sizes {
        let mut all = rates_at(test, &[null_grid, alt_grid].concat(), n, reps, base_seed)?;
        let alt = all.split_off(null_grid.len());
        let null = all;
        for r in null.iter().chain(&alt) {
            failed += r.failures;
            attempted += reps;
            if first.is_none() {
                first.clone_from(&r.first_error);
            }
        }
        if failed * 100 > attempted {
            return Err(Error::ReplicationFailures {
                failed,
                total: attempted,
                first: first.map(|e| e.to_string()).unwrap_or_default(),
            });
        }
        let alpha: Vec<f64> = null.iter().map(PointRates::rejection_rate).collect();
        let beta: Vec<f64> = alt.iter().map(PointRates::acceptance_rate).collect();
        let (i, j) = (argmax(&alpha), argmax(&beta));
        curve.alpha_hat.push(alpha[i]);
        curve.beta_hat.push(beta[j]);
        curve.worst_null.push(i);
        curve.worst_alt.push(j);
        curve.mc_half_width.push(mc_half_width(reps));
        curve.null_rates.push(null);
        curve.alt_rates.push(alt);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Threshold;

    impl TestProcedure<f64> for Threshold {
        fn name(&self) -> &str {
            "mean-threshold"
        }
        fn calibration(&self) -> &Calibration {
            const C: Calibration = Calibration {
                level: 0.05,
                bootstrap_reps: 1,
                seed: 0,
            };
            &C
        }
        fn decide(&self, batch: &SampleBatch<f64>) -> Result<Verdict> {
            let x = batch.gmm_data().ok_or_else(|| Error::Input("kind".into()))?;
            let m = x.iter().sum::<f64>() / x.len() as f64;
            Ok(Verdict::plain(m > 1.645 / (x.len() as f64).sqrt()))
        }
    }

    #[test]
    fn p_value_rule() {
        let c = Calibration::new(0.05, 19, 0).unwrap();
        let boot: Vec<f64> = (0..19).map(|i| i as f64).collect();
        assert!(c.rejects(18.5, &boot));
        assert!(!c.rejects(18.0, &boot));
        assert!(Calibration::new(1.0, 19, 0).is_err());
        assert!(Calibration::new(0.05, 0, 0).is_err());
    }

    #[test]
    fn curve_for_a_one_sided_mean_test() {
        let null = vec![ModelPoint::gmm(0.0, 0.0, 1.0, 0.5).unwrap()];
        let alt = vec![
            ModelPoint::gmm(0.5, 0.5, 1.0, 0.5).unwrap(),
            ModelPoint::gmm(0.3, 0.3, 1.0, 0.5).unwrap(),
        ];
        let c = estimate_error_curve(&Threshold, &null, &alt, &[20, 200], 400, 7).unwrap();
        assert!((c.alpha_hat[0] - 0.05).abs() < 2.0 * c.mc_half_width[0]);
        assert_eq!(c.worst_alt, vec![1, 1]);
        assert!(c.beta_hat[1] < c.beta_hat[0]);
        let again = estimate_error_curve(&Threshold, &null, &alt, &[20, 200], 400, 7).unwrap();
        assert_eq!(c.alpha_hat, again.alpha_hat);
        assert_eq!(c.beta_hat, again.beta_hat);
    }

    #[test]
    fn shared_point_obeys_partition_identity() {
        let p = vec![ModelPoint::gmm(0.0, 0.0, 1.0, 0.5).unwrap()];
        let c = estimate_error_curve(&Threshold, &p, &p, &[10, 50], 100, 1).unwrap();
        for s in c.sums() {
            assert_eq!(s, 1.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = vec![ModelPoint::gmm(0.0, 0.0, 1.0, 0.5).unwrap()];
        assert!(estimate_error_curve(&Threshold, &p, &p, &[10], 99, 1).is_err());
        assert!(estimate_error_curve(&Threshold, &[], &p, &[10], 100, 1).is_err());
    }

    #[test]
    fn failures_abort_the_run() {
        let rrr = vec![ModelPoint::Rrr(
            crate::model::RrrParams::from_coef(nalgebra::dmatrix![1.0], 1.0).unwrap(),
        )];
        let err = estimate_error_curve(&Threshold, &rrr, &rrr, &[10], 100, 1).unwrap_err();
        assert!(matches!(err, Error::ReplicationFailures { failed: 200, total: 200, .. }));
    }
}
