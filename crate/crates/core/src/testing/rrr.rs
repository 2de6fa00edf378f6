//! Tests on reduced-rank regression: a bootstrap rank test and the
//! singular-vector sign test.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Calibration, TestProcedure, Verdict, VerdictNote};
use crate::error::{Error, Result};
use crate::linalg::{ols, signed_svd, truncate, OlsFit};
use crate::model::SampleBatch;
use crate::rng;
use crate::scalar::Real;

/// `|U_11|` below this counts as a tie, which the sign test resolves by
/// accepting.
pub const SIGN_TIE_TOL: f64 = 1e-12;

fn fit<T: Real>(batch: &SampleBatch<T>) -> Result<OlsFit<T>> {
    let (x, y) = batch
        .rrr_data()
        .ok_or_else(|| Error::Input(format!("regression test applied to a {} batch", batch.kind())))?;
    ols(x, y)
}

/// Tests `rank(C) = r0` against `rank(C) > r0` with the statistic
/// `s_{r0+1}(C_hat)`.
///
/// The critical value comes from a fixed-design parametric bootstrap under
/// the rank-`r0` truncation of `C_hat`. Conditional on the design, the OLS
/// estimate is exactly Gaussian around the truth with column covariance
/// `sigma^2 (X^T X)^{-1}`, so a bootstrap replicate is drawn directly as
/// `C_r0 + sigma_hat (L^{-T} Z)^T` with `X^T X = L L^T` and `Z` standard
/// normal, without resampling responses.
#[derive(Debug, Clone)]
pub struct RrrRankTest {
    r0: usize,
    calibration: Calibration,
}

impl RrrRankTest {
    pub fn new(r0: usize, calibration: Calibration) -> Self {
        Self { r0, calibration }
    }

    pub fn r0(&self) -> usize {
        self.r0
    }

    /// The statistic and its bootstrap replicates for one batch.
    pub fn statistic_and_bootstrap<T: Real>(&self, batch: &SampleBatch<T>) -> Result<(f64, Vec<f64>)> {
        let fit = fit(batch)?;
        let (q, p) = fit.coef.shape();
        if self.r0 >= q.min(p) {
            return Err(Error::Input(format!(
                "null rank {} must be below min(q, p) = {}",
                self.r0,
                q.min(p)
            )));
        }
        let svd = signed_svd(&fit.coef)?;
        let stat = svd.s[self.r0].as_f64();
        let centre = truncate(&svd, self.r0);
        let sigma = fit.noise_variance().sqrt();
        let lt = fit.gram_chol.transpose();
        let mut rng = rng::stream(batch.seed(), &[rng::tag::BOOTSTRAP]);
        let mut boot = Vec::with_capacity(self.calibration.bootstrap_reps);
        for _ in 0..self.calibration.bootstrap_reps {
            let z = DMatrix::<T>::from_fn(p, q, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
            let w = lt
                .solve_upper_triangular(&z)
                .ok_or_else(|| Error::Numerical("singular design: Cholesky factor not invertible".into()))?;
            let star = &centre + w.transpose() * sigma;
            boot.push(signed_svd(&star)?.s[self.r0].as_f64());
        }
        Ok((stat, boot))
    }
}

impl<T: Real> TestProcedure<T> for RrrRankTest {
    fn name(&self) -> &str {
        "rrr-rank"
    }

    fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    fn decide(&self, batch: &SampleBatch<T>) -> Result<Verdict> {
        let (stat, boot) = self.statistic_and_bootstrap(batch)?;
        Ok(Verdict::plain(self.calibration.rejects(stat, &boot)))
    }
}

/// Rejects `U_11 > 0` iff the (1,1) entry of the left singular vectors of
/// `C_hat` is negative, under the convention that the largest-magnitude
/// entry of every left singular vector is positive.
#[derive(Debug, Clone)]
pub struct RrrSignTest {
    calibration: Calibration,
}

impl RrrSignTest {
    pub fn new(calibration: Calibration) -> Self {
        Self { calibration }
    }
}

impl<T: Real> TestProcedure<T> for RrrSignTest {
    fn name(&self) -> &str {
        "rrr-sign"
    }

    fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    fn decide(&self, batch: &SampleBatch<T>) -> Result<Verdict> {
        let fit = fit(batch)?;
        let u11 = signed_svd(&fit.coef)?.u[(0, 0)].as_f64();
        if u11.abs() < SIGN_TIE_TOL {
            return Ok(Verdict {
                reject: false,
                note: Some(VerdictNote::SignTie),
            });
        }
        Ok(Verdict::plain(u11 < 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelPoint, RrrParams};
    use crate::testing::rejection_rate;
    use nalgebra::{dmatrix, dvector};

    fn rank_point(s2: f64) -> ModelPoint<f64> {
        let u = dmatrix![0.8, -0.6; 0.6, 0.8];
        let v = dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0];
        ModelPoint::Rrr(RrrParams::from_factors(u, dvector![1.0, s2], v, 1.0).unwrap())
    }

    #[test]
    fn rank_test_holds_level_and_has_power() {
        let t = RrrRankTest::new(1, Calibration::default());
        let size = rejection_rate(&t, &rank_point(0.0), 300, 300, 1).unwrap();
        assert!(size < 0.1, "size {size}");
        let power = rejection_rate(&t, &rank_point(0.8), 300, 100, 1).unwrap();
        assert!(power > 0.95, "power {power}");
    }

    #[test]
    fn rank_test_input_errors() {
        let t = RrrRankTest::new(2, Calibration::default());
        let b = rank_point(0.5).sample(50, 0).unwrap();
        assert!(matches!(TestProcedure::<f64>::decide(&t, &b), Err(Error::Input(_))));
        let t = RrrRankTest::new(0, Calibration::default());
        let small = rank_point(0.5).sample(3, 0).unwrap();
        assert!(matches!(TestProcedure::<f64>::decide(&t, &small), Err(Error::Input(_))));
        let x = DMatrix::<f64>::zeros(10, 2);
        let y = DMatrix::<f64>::zeros(10, 1);
        let singular = SampleBatch::from_rrr_data(x, y, 0).unwrap();
        assert!(matches!(TestProcedure::<f64>::decide(&t, &singular), Err(Error::Numerical(_))));
    }

    #[test]
    fn sign_test_ties_accept() {
        // C_hat = (0, 1)^T, so the left singular vector is e_2 and U_11 = 0
        let x = DMatrix::from_fn(20, 1, |i, _| (i as f64) - 9.5);
        let y = DMatrix::from_fn(20, 2, |i, j| if j == 1 { (i as f64) - 9.5 } else { 0.0 });
        let b = SampleBatch::from_rrr_data(x, y, 0).unwrap();
        let v = TestProcedure::<f64>::decide(&RrrSignTest::new(Calibration::default()), &b).unwrap();
        assert_eq!(v, Verdict { reject: false, note: Some(VerdictNote::SignTie) });
    }

    #[test]
    fn sign_decisions_agree_on_flipped_factors() {
        let a = rank_point(0.5);
        let b = match &a {
            ModelPoint::Rrr(r) => ModelPoint::Rrr(r.sign_flipped()),
            _ => unreachable!(),
        };
        let t = RrrSignTest::new(Calibration::default());
        for seed in 0..20 {
            let (ba, bb) = (a.sample(60, seed).unwrap(), b.sample(60, seed).unwrap());
            assert_eq!(
                TestProcedure::<f64>::decide(&t, &ba).unwrap(),
                TestProcedure::<f64>::decide(&t, &bb).unwrap()
            );
        }
    }
}
