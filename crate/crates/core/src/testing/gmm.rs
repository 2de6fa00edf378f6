//! Tests on the two-component mixture: component ordering and the
//! single-Gaussian versus mixture likelihood-ratio test.

use std::any::TypeId;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use super::em::{fit_gaussian, fit_mixture, EmConfig};
use super::{Calibration, TestProcedure, Verdict, VerdictNote};
use crate::error::{Error, Result};
use crate::model::{ModelPoint, SampleBatch};
use crate::rng;
use crate::scalar::Real;

fn gmm_data<T: Real>(batch: &SampleBatch<T>) -> Result<Vec<f64>> {
    batch
        .gmm_data()
        .map(|x| x.iter().map(|v| v.as_f64()).collect())
        .ok_or_else(|| Error::Input(format!("mixture test applied to a {} batch", batch.kind())))
}

fn note(converged: bool) -> Option<VerdictNote> {
    (!converged).then_some(VerdictNote::EmNotConverged)
}

/// Rejects `mu1 > mu2` iff the fitted first component has the smaller mean.
/// Labels are taken from the best EM restart as emitted.
#[derive(Debug, Clone)]
pub struct GmmOrderingTest {
    em: EmConfig,
    calibration: Calibration,
}

impl GmmOrderingTest {
    pub fn new(em: EmConfig, calibration: Calibration) -> Self {
        Self { em, calibration }
    }
}

impl<T: Real> TestProcedure<T> for GmmOrderingTest {
    fn name(&self) -> &str {
        "gmm-ordering"
    }

    fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    fn decide(&self, batch: &SampleBatch<T>) -> Result<Verdict> {
        let x = gmm_data(batch)?;
        let fit = fit_mixture(&x, &self.em, batch.seed())?;
        Ok(Verdict {
            reject: fit.mu1 < fit.mu2,
            note: note(fit.converged),
        })
    }
}

/// `2 (l_mixture - l_gaussian)`, clamped at zero, plus the EM convergence flag.
pub fn lrt_statistic(x: &[f64], em: &EmConfig, seed: u64) -> Result<(f64, bool)> {
    let mix = fit_mixture(x, em, seed)?;
    let single = fit_gaussian(x)?;
    Ok(((2.0 * (mix.loglik - single.loglik)).max(0.0), mix.converged))
}

type CacheKey = (usize, usize, u64, EmConfig, TypeId);
type CacheSlot = Arc<OnceLock<Result<Arc<Vec<f64>>>>>;

fn cache() -> &'static Mutex<HashMap<CacheKey, CacheSlot>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, CacheSlot>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Drops every memoised null distribution.
pub fn clear_calibration_cache() {
    cache().lock().unwrap_or_else(|e| e.into_inner()).clear();
}

/// Likelihood-ratio test of a single Gaussian against a two-component
/// equal-variance mixture, calibrated by parametric bootstrap under the
/// fitted Gaussian.
///
/// The statistic is invariant under `x -> a + b x`, so its null law does not
/// depend on the fitted mean and variance. The bootstrap is therefore drawn
/// once per sample size from `N(0, 1)` and memoised process-wide.
#[derive(Debug, Clone)]
pub struct GmmMixtureTest {
    em: EmConfig,
    calibration: Calibration,
}

impl GmmMixtureTest {
    pub fn new(em: EmConfig, calibration: Calibration) -> Self {
        Self { em, calibration }
    }

    /// Bootstrap statistics under the null for sample size `n`.
    pub fn null_distribution<T: Real>(&self, n: usize) -> Result<Arc<Vec<f64>>> {
        let key = (
            n,
            self.calibration.bootstrap_reps,
            self.calibration.seed,
            self.em,
            TypeId::of::<T>(),
        );
        let slot = {
            let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
            map.entry(key).or_default().clone()
        };
        slot.get_or_init(|| self.simulate_null::<T>(n).map(Arc::new)).clone()
    }

    fn simulate_null<T: Real>(&self, n: usize) -> Result<Vec<f64>> {
        let standard = ModelPoint::<T>::gmm(T::zero(), T::zero(), T::one(), T::lit(0.5))?;
        let reps = self.calibration.bootstrap_reps;
        let outcomes: Vec<Result<f64>> = (0..reps)
            .into_par_iter()
            .map(|b| {
                let seed = rng::derive_seed(self.calibration.seed, &[rng::tag::CALIBRATION, n as u64, b as u64]);
                let batch = standard.sample(n, seed)?;
                lrt_statistic(&gmm_data(&batch)?, &self.em, seed).map(|s| s.0)
            })
            .collect();
        let failed = outcomes.iter().filter(|o| o.is_err()).count();
        if failed > 0 {
            let first = outcomes.iter().find_map(|o| o.clone().err()).map(|e| e.to_string());
            return Err(Error::ReplicationFailures {
                failed,
                total: reps,
                first: format!("bootstrap calibration at n = {n}: {}", first.unwrap_or_default()),
            });
        }
        Ok(outcomes.into_iter().map(|o| o.unwrap_or(0.0)).collect())
    }
}

impl<T: Real> TestProcedure<T> for GmmMixtureTest {
    fn name(&self) -> &str {
        "gmm-mixture"
    }

    fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    fn prepare(&self, n: usize) -> Result<()> {
        self.null_distribution::<T>(n).map(|_| ())
    }

    fn decide(&self, batch: &SampleBatch<T>) -> Result<Verdict> {
        let x = gmm_data(batch)?;
        let (stat, converged) = lrt_statistic(&x, &self.em, batch.seed())?;
        let boot = self.null_distribution::<T>(x.len())?;
        Ok(Verdict {
            reject: self.calibration.rejects(stat, &boot),
            note: note(converged),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::rejection_rate;

    #[test]
    fn ordering_is_a_coin_flip_on_the_singular_stratum() {
        let t = GmmOrderingTest::new(EmConfig::default(), Calibration::default());
        let p = ModelPoint::gmm(0.0, 0.0, 1.0, 0.5).unwrap();
        let rate = rejection_rate(&t, &p, 200, 400, 3).unwrap();
        assert!((rate - 0.5).abs() < 0.1, "{rate}");
    }

    #[test]
    fn ordering_decision_is_identical_on_relabelled_points() {
        let t = GmmOrderingTest::new(EmConfig::default(), Calibration::default());
        let a = ModelPoint::gmm(2.0, -2.0, 1.0, 0.5).unwrap();
        let b = ModelPoint::gmm(-2.0, 2.0, 1.0, 0.5).unwrap();
        for seed in 0..20 {
            let (ba, bb) = (a.sample(100, seed).unwrap(), b.sample(100, seed).unwrap());
            assert_eq!(t.decide(&ba).unwrap(), t.decide(&bb).unwrap());
        }
    }

    #[test]
    fn mixture_test_detects_wide_gaps() {
        let cal = Calibration::new(0.05, 99, 5).unwrap();
        let t = GmmMixtureTest::new(EmConfig::default(), cal);
        let alt = ModelPoint::gmm(-2.0, 2.0, 1.0, 0.5).unwrap();
        assert!(rejection_rate(&t, &alt, 200, 100, 1).unwrap() > 0.95);
    }

    #[test]
    fn null_distribution_is_memoised() {
        let cal = Calibration::new(0.05, 50, 77).unwrap();
        let t = GmmMixtureTest::new(EmConfig::default(), cal);
        let a = t.null_distribution::<f64>(60).unwrap();
        let b = t.null_distribution::<f64>(60).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(a.len(), 50);
        assert!(a.iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn statistic_is_location_scale_invariant() {
        let p = ModelPoint::gmm(-0.5, 1.0, 1.0, 0.4).unwrap();
        let x = p.sample(300, 4).unwrap().gmm_data().unwrap().to_vec();
        let y: Vec<f64> = x.iter().map(|v| -7.0 + 3.0 * v).collect();
        let em = EmConfig::default();
        let (sx, sy) = (lrt_statistic(&x, &em, 9).unwrap().0, lrt_statistic(&y, &em, 9).unwrap().0);
        assert!((sx - sy).abs() < 1e-5 * (1.0 + sx), "{sx} vs {sy}");
    }

    #[test]
    fn wrong_batch_kind() {
        let t = GmmOrderingTest::new(EmConfig::default(), Calibration::default());
        let r = ModelPoint::Rrr(crate::model::RrrParams::from_coef(nalgebra::dmatrix![1.0], 1.0).unwrap());
        assert!(TestProcedure::<f64>::decide(&t, &r.sample(10, 0).unwrap()).is_err());
    }
}
