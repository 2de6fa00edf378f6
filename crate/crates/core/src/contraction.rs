//! Exact posterior computation on a finite parameter grid, and the
//! contraction experiments built on it.

use rayon::prelude::*;

use crate::divergence::{hellinger2_auto, DivergenceOptions};
use crate::equivalence::Regime;
use crate::error::{Error, Result};
use crate::model::{ModelPoint, SampleBatch};
use crate::scalar::{log_sum_exp, Real};
use crate::testing::replication_seed;

/// Tolerance on the total prior weight.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A prior with finite support. Zero weights are allowed, so a prior can
/// switch off part of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPrior<T: Real> {
    points: Vec<ModelPoint<T>>,
    weights: Vec<f64>,
}

impl<T: Real> GridPrior<T> {
    pub fn new(points: Vec<ModelPoint<T>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Input("grid prior needs at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Input(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Input("prior weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Input(format!("prior weights sum to {total}, not 1")));
        }
        for i in 0..points.len() {
            if points[i + 1..].contains(&points[i]) {
                return Err(Error::Input(format!("grid point {} appears twice", points[i])));
            }
        }
        if points.iter().any(|p| p.kind() != points[0].kind()) {
            return Err(Error::Input("grid mixes model kinds".into()));
        }
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Vec<ModelPoint<T>>) -> Result<Self> {
        let k = points.len().max(1);
        Self::new(points, vec![1.0 / k as f64; k])
    }

    pub fn points(&self) -> &[ModelPoint<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total weight on the points selected by `mask`.
    pub fn mass(&self, mask: &[bool]) -> f64 {
        self.weights.iter().zip(mask).filter(|(_, &m)| m).map(|(w, _)| w).sum()
    }
}

/// Posterior weights `w_i prod_j p_i(x_j)`, normalised with log-sum-exp.
pub fn posterior_over_grid<T: Real>(prior: &GridPrior<T>, batch: &SampleBatch<T>) -> Result<Vec<f64>> {
    if batch.n() == 0 {
        return Ok(prior.weights.clone());
    }
    if prior.points[0].kind() != batch.kind() {
        return Err(Error::Input(format!(
            "{} grid applied to a {} batch",
            prior.points[0].kind(),
            batch.kind()
        )));
    }
    let logs: Vec<f64> = prior
        .points
        .iter()
        .zip(&prior.weights)
        .map(|(p, &w)| {
            if w == 0.0 {
                Ok(f64::NEG_INFINITY)
            } else {
                Ok(w.ln() + p.log_likelihood(batch)?.as_f64())
            }
        })
        .collect::<Result<_>>()?;
    let norm = log_sum_exp(&logs);
    if !norm.is_finite() {
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::Numerical(format!(
            "every posterior weight underflows (largest log weight {max})"
        )));
    }
    Ok(logs.iter().map(|l| (l - norm).exp()).collect())
}

/// Separation scale `epsilon_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonSchedule {
    Fixed(f64),
    /// `eps0 * n^(-1/4)`.
    Quartic(f64),
}

impl EpsilonSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            EpsilonSchedule::Fixed(e) => e,
            EpsilonSchedule::Quartic(e0) => e0 * (n as f64).powf(-0.25),
        }
    }

    pub fn values(&self, sample_sizes: &[usize]) -> Vec<f64> {
        sample_sizes.iter().map(|&n| self.at(n)).collect()
    }
}

/// Average posterior mass on an alternative set across sample sizes.
#[derive(Debug, Clone)]
pub struct ContractionTrace<T: Real> {
    pub sample_sizes: Vec<usize>,
    pub posterior_mass_alt: Vec<f64>,
    /// Standard error of each average over replications.
    pub std_error: Vec<f64>,
    /// `epsilon_n`; empty for the unseparated demonstration.
    pub epsilon_schedule: Vec<f64>,
    pub truth: ModelPoint<T>,
    pub reps: usize,
    pub seed: u64,
    /// Prior mass of the alternative set per sample size.
    pub prior_mass_alt: Vec<f64>,
    /// Hellinger distance from each grid point to the grid's null set.
    pub distance_to_null: Vec<f64>,
}

/// Hellinger distance from every grid point to the nearest grid point in the
/// null regime.
pub fn distances_to_null<T: Real>(prior: &GridPrior<T>, null_regime: &Regime<T>) -> Result<Vec<f64>> {
    let null_idx: Vec<usize> = (0..prior.len())
        .filter(|&i| null_regime.contains(&prior.points[i]))
        .collect();
    if null_idx.is_empty() {
        return Err(Error::Input("no grid point lies in the null regime".into()));
    }
    let opts = DivergenceOptions::default();
    (0..prior.len())
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for &j in &null_idx {
                let h = if i == j {
                    0.0
                } else {
                    hellinger2_auto(&prior.points[i], &prior.points[j], &opts, &[i as u64, j as u64])?
                        .h()
                        .as_f64()
                };
                best = best.min(h);
            }
            Ok(best)
        })
        .collect()
}

/// Posterior mass on `masks[k]` averaged over replications of size
/// `sample_sizes[k]` drawn from `truth`. Returns means and standard errors.
fn average_mass<T: Real>(
    prior: &GridPrior<T>,
    truth: &ModelPoint<T>,
    masks: &[Vec<bool>],
    sample_sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut means = Vec::with_capacity(sample_sizes.len());
    let mut ses = Vec::with_capacity(sample_sizes.len());
    for (mask, &n) in masks.iter().zip(sample_sizes) {
        let masses: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let batch = truth.sample(n, replication_seed(seed, n, r))?;
                let post = posterior_over_grid(prior, &batch)?;
                Ok(post.iter().zip(mask).filter(|(_, &m)| m).map(|(w, _)| w).sum::<f64>())
            })
            .collect::<Result<_>>()?;
        let mean = masses.iter().sum::<f64>() / reps as f64;
        let var = if reps > 1 {
            masses.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (reps - 1) as f64
        } else {
            0.0
        };
        means.push(mean.clamp(0.0, 1.0));
        ses.push((var / reps as f64).sqrt());
    }
    Ok((means, ses))
}

fn check_sizes(sample_sizes: &[usize], reps: usize) -> Result<()> {
    if sample_sizes.is_empty() || reps == 0 {
        return Err(Error::Input("need at least one sample size and one replication".into()));
    }
    if sample_sizes.contains(&0) {
        return Err(Error::Input("sample sizes must be positive".into()));
    }
    Ok(())
}

/// Posterior mass on `M1(eps_n)`, the grid points at Hellinger distance at
/// least `eps_n` from the null set, under data from `truth`.
pub fn contraction_experiment<T: Real>(
    prior: &GridPrior<T>,
    truth: &ModelPoint<T>,
    null_regime: &Regime<T>,
    epsilon_schedule: &[f64],
    sample_sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<ContractionTrace<T>> {
    check_sizes(sample_sizes, reps)?;
    if epsilon_schedule.len() != sample_sizes.len() {
        return Err(Error::Input(format!(
            "{} epsilon values for {} sample sizes",
            epsilon_schedule.len(),
            sample_sizes.len()
        )));
    }
    if epsilon_schedule.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Input("epsilon values must be positive".into()));
    }
    // built once, read by every replication
    let dist = distances_to_null(prior, null_regime)?;
    let masks: Vec<Vec<bool>> = epsilon_schedule
        .iter()
        .map(|&e| dist.iter().map(|&d| d >= e).collect())
        .collect();
    let (mass, se) = average_mass(prior, truth, &masks, sample_sizes, reps, seed)?;
    Ok(ContractionTrace {
        sample_sizes: sample_sizes.to_vec(),
        posterior_mass_alt: mass,
        std_error: se,
        epsilon_schedule: epsilon_schedule.to_vec(),
        truth: truth.clone(),
        reps,
        seed,
        prior_mass_alt: masks.iter().map(|m| prior.mass(m)).collect(),
        distance_to_null: dist,
    })
}

/// Posterior mass on every grid point of `alt_regime`, with no separation
/// floor. When the alternative accumulates at the null this mass need not
/// vanish.
pub fn nonseparation_demo<T: Real>(
    prior: &GridPrior<T>,
    truth: &ModelPoint<T>,
    null_regime: &Regime<T>,
    alt_regime: &Regime<T>,
    sample_sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<ContractionTrace<T>> {
    check_sizes(sample_sizes, reps)?;
    let dist = distances_to_null(prior, null_regime)?;
    let mask: Vec<bool> = prior.points.iter().map(|p| alt_regime.contains(p)).collect();
    let masks = vec![mask.clone(); sample_sizes.len()];
    let (mass, se) = average_mass(prior, truth, &masks, sample_sizes, reps, seed)?;
    Ok(ContractionTrace {
        sample_sizes: sample_sizes.to_vec(),
        posterior_mass_alt: mass,
        std_error: se,
        epsilon_schedule: Vec::new(),
        truth: truth.clone(),
        reps,
        seed,
        prior_mass_alt: vec![prior.mass(&mask); sample_sizes.len()],
        distance_to_null: dist,
    })
}

/// Smallest Hellinger distance from the null set to the alternative points
/// of the grid; zero or near zero signals non-separation.
pub fn grid_separation(distance_to_null: &[f64], alt_mask: &[bool]) -> f64 {
    distance_to_null
        .iter()
        .zip(alt_mask)
        .filter(|(_, &m)| m)
        .map(|(d, _)| *d)
        .fold(f64::INFINITY, f64::min)
}

/// Prior mass of the Hellinger ball of radius `eps` around `truth`, and
/// whether it is at least `exp(-c n eps^2)`.
pub fn prior_mass_condition<T: Real>(
    prior: &GridPrior<T>,
    truth: &ModelPoint<T>,
    eps: f64,
    n: usize,
    c: f64,
) -> Result<(f64, bool)> {
    let opts = DivergenceOptions::default();
    let h: Vec<f64> = prior
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| Ok(hellinger2_auto(p, truth, &opts, &[i as u64])?.h().as_f64()))
        .collect::<Result<_>>()?;
    let mask: Vec<bool> = h.iter().map(|&d| d <= eps).collect();
    let mass = prior.mass(&mask);
    Ok((mass, mass >= (-c * n as f64 * eps * eps).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::{Interval, Observable, RegimeLabel, TargetSet};

    fn normal(mu: f64) -> ModelPoint<f64> {
        ModelPoint::gmm(mu, mu, 1.0, 0.5).unwrap()
    }

    fn gap_grid(step: f64, max: f64) -> Vec<ModelPoint<f64>> {
        let k = (max / step).round() as usize;
        (0..=k)
            .map(|i| {
                let s = step * i as f64;
                ModelPoint::gmm(-s / 2.0, s / 2.0, 1.0, 0.5).unwrap()
            })
            .collect()
    }

    fn null_regime() -> Regime<f64> {
        Regime::new(
            Observable::gmm_abs_gap(),
            TargetSet::interval(Interval::point(0.0)),
            RegimeLabel::Null,
        )
    }

    #[test]
    fn prior_validation() {
        assert!(GridPrior::new(vec![normal(0.0), normal(1.0)], vec![0.5, 0.6]).is_err());
        assert!(GridPrior::new(vec![normal(0.0), normal(0.0)], vec![0.5, 0.5]).is_err());
        assert!(GridPrior::new(vec![normal(0.0)], vec![-1.0]).is_err());
        assert!(GridPrior::new(vec![normal(0.0), normal(1.0)], vec![1.0, 0.0]).is_ok());
    }

    #[test]
    fn empty_batch_returns_prior() {
        let prior = GridPrior::new(vec![normal(0.0), normal(1.0)], vec![0.3, 0.7]).unwrap();
        let empty = SampleBatch::from_gmm_data(Vec::new(), 0);
        assert_eq!(posterior_over_grid(&prior, &empty).unwrap(), vec![0.3, 0.7]);
    }

    #[test]
    fn posterior_concentrates_on_the_truth() {
        let prior = GridPrior::uniform(vec![normal(0.0), normal(5.0)]).unwrap();
        let batch = normal(0.0).sample(100, 3).unwrap();
        let post = posterior_over_grid(&prior, &batch).unwrap();
        assert!(post[0] >= 0.999);
        // direct two-point computation
        let x = batch.gmm_data().unwrap();
        let llr: f64 = x.iter().map(|v| -(v * v) / 2.0 + (v - 5.0).powi(2) / 2.0).sum();
        assert!((post[0] - 1.0 / (1.0 + (-llr).exp())).abs() < 1e-12);
    }

    #[test]
    fn posterior_is_symmetric_under_reflection() {
        let prior = GridPrior::uniform(vec![normal(-1.0), normal(0.0), normal(1.0)]).unwrap();
        let half = normal(0.0).sample(50, 1).unwrap().gmm_data().unwrap().to_vec();
        let sym: Vec<f64> = half.iter().copied().chain(half.iter().map(|v| -v)).collect();
        let post = posterior_over_grid(&prior, &SampleBatch::from_gmm_data(sym, 0)).unwrap();
        assert!((post[0] - post[2]).abs() < 1e-10);
    }

    #[test]
    fn underflow_is_reported() {
        let prior = GridPrior::uniform(vec![normal(0.0), normal(1.0)]).unwrap();
        let far = SampleBatch::from_gmm_data(vec![0.0, f64::INFINITY], 0);
        assert!(matches!(posterior_over_grid(&prior, &far), Err(Error::Numerical(_))));
    }

    #[test]
    fn large_epsilon_leaves_no_alternative() {
        let prior = GridPrior::uniform(gap_grid(0.5, 3.0)).unwrap();
        let t = contraction_experiment(&prior, &normal(0.0), &null_regime(), &[2.0, 2.0], &[20, 40], 10, 1)
            .unwrap();
        assert_eq!(t.posterior_mass_alt, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_prior_weight_gives_zero_mass() {
        let pts = gap_grid(0.5, 2.0);
        let mut w = vec![0.0; pts.len()];
        w[0] = 1.0;
        let prior = GridPrior::new(pts, w).unwrap();
        let alt = Regime::new(
            Observable::gmm_abs_gap(),
            TargetSet::interval(Interval::greater_than(0.0)),
            RegimeLabel::Alternative,
        );
        let t = nonseparation_demo(&prior, &normal(0.0), &null_regime(), &alt, &[10, 100], 20, 2).unwrap();
        assert_eq!(t.posterior_mass_alt, vec![0.0, 0.0]);
    }

    #[test]
    fn schedules() {
        assert_eq!(EpsilonSchedule::Fixed(0.2).values(&[1, 100]), vec![0.2, 0.2]);
        let q = EpsilonSchedule::Quartic(1.0).values(&[1, 16, 10_000]);
        assert!((q[1] - 0.5).abs() < 1e-15 && (q[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn prior_mass_condition_on_fine_grid() {
        let prior = GridPrior::uniform(gap_grid(0.05, 3.0)).unwrap();
        let (mass, ok) = prior_mass_condition(&prior, &normal(0.0), 0.1, 1000, 1.0).unwrap();
        assert!(mass > 0.1 && ok);
    }
}
