//! Observational equivalence, observables, regimes and overlap witnesses.
//!
//! Two parameters are observationally equivalent when they induce the same
//! distribution. Equality of distributions is checked numerically by the
//! largest log-density discrepancy over a grid of probe observations; for the
//! built-in symmetries it also holds exactly by construction.
//!
//! Identifiability is only ever certified relative to a declared symmetry
//! group and a finite probe set. Equivalences outside the group go unnoticed.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ModelPoint, Observation, RrrParams};
use crate::rng;
use crate::scalar::Real;
use crate::testing::{replication_seed, TestProcedure};

/// Largest admissible log-density discrepancy for two points to count as
/// the same distribution.
pub const EQUIVALENCE_TOL: f64 = 1e-10;

/// Observable values closer than this are treated as equal.
pub const OBSERVABLE_TOL: f64 = 1e-9;

type PointMap<T> = dyn Fn(&ModelPoint<T>) -> ModelPoint<T> + Send + Sync;
type PointFunctional<T> = dyn Fn(&ModelPoint<T>) -> Option<Vec<T>> + Send + Sync;
type VectorPredicate<T> = dyn Fn(&[T]) -> bool + Send + Sync;

/// A parameter map `g` with `P_{g(w)} = P_w`.
#[derive(Clone)]
pub struct SymmetryAction<T: Real> {
    name: String,
    apply: Arc<PointMap<T>>,
}

impl<T: Real> SymmetryAction<T> {
    pub fn new(
        name: impl Into<String>,
        apply: impl Fn(&ModelPoint<T>) -> ModelPoint<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            apply: Arc::new(apply),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, point: &ModelPoint<T>) -> ModelPoint<T> {
        (self.apply)(point)
    }

    /// Log-density discrepancy between `point` and its image.
    pub fn discrepancy(&self, point: &ModelPoint<T>) -> Result<T> {
        max_log_density_discrepancy(point, &self.apply(point))
    }

    /// Swaps mixture component labels; identity on regression points.
    pub fn label_swap() -> Self {
        Self::new("label-swap", |p| match p {
            ModelPoint::Gmm(g) => ModelPoint::Gmm(g.swapped()),
            other => other.clone(),
        })
    }

    /// `(U, s, V) -> (-U, s, -V)`; identity on mixture points.
    pub fn svd_sign_flip() -> Self {
        Self::new("svd-sign-flip", |p| match p {
            ModelPoint::Rrr(r) => ModelPoint::Rrr(r.sign_flipped()),
            other => other.clone(),
        })
    }

    /// Negates the leading singular pair only.
    pub fn svd_leading_pair_flip() -> Self {
        Self::new("svd-leading-pair-flip", |p| match p {
            ModelPoint::Rrr(r) => ModelPoint::Rrr(r.pair_flipped(0)),
            other => other.clone(),
        })
    }
}

impl<T: Real> fmt::Debug for SymmetryAction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetryAction").field("name", &self.name).finish()
    }
}

/// A functional of the parameter with values in `R^k`. `None` means the
/// observable is not defined for the point's model family.
#[derive(Clone)]
pub struct Observable<T: Real> {
    name: String,
    eval: Arc<PointFunctional<T>>,
}

impl<T: Real> Observable<T> {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&ModelPoint<T>) -> Option<Vec<T>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, point: &ModelPoint<T>) -> Option<Vec<T>> {
        (self.eval)(point)
    }

    /// `mu1 - mu2`; depends on the labeling.
    pub fn gmm_signed_gap() -> Self {
        Self::new("gmm-signed-gap", |p| {
            p.as_gmm().map(|g| vec![g.mu1() - g.mu2()])
        })
    }

    /// `|mu1 - mu2|`.
    pub fn gmm_abs_gap() -> Self {
        Self::new("gmm-abs-gap", |p| {
            p.as_gmm().map(|g| vec![(g.mu1() - g.mu2()).abs()])
        })
    }

    /// Numerical rank of the coefficient matrix.
    pub fn rrr_rank() -> Self {
        Self::new("rrr-rank", |p| {
            p.as_rrr().map(|r| vec![T::from_count(r.rank(T::lit(1e-10)))])
        })
    }

    /// First entry of the leading left singular vector of the stored
    /// factorisation.
    pub fn rrr_u11() -> Self {
        Self::new("rrr-u11", |p| p.as_rrr().map(|r| vec![r.u()[(0, 0)]]))
    }
}

impl<T: Real> fmt::Debug for Observable<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable").field("name", &self.name).finish()
    }
}

/// One end of an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound<T> {
    Unbounded,
    Open(T),
    Closed(T),
}

/// An interval on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: Bound<T>,
    pub hi: Bound<T>,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: Bound<T>, hi: Bound<T>) -> Self {
        Self { lo, hi }
    }

    pub fn greater_than(a: T) -> Self {
        Self::new(Bound::Open(a), Bound::Unbounded)
    }

    pub fn at_least(a: T) -> Self {
        Self::new(Bound::Closed(a), Bound::Unbounded)
    }

    pub fn less_than(a: T) -> Self {
        Self::new(Bound::Unbounded, Bound::Open(a))
    }

    pub fn at_most(a: T) -> Self {
        Self::new(Bound::Unbounded, Bound::Closed(a))
    }

    pub fn point(a: T) -> Self {
        Self::new(Bound::Closed(a), Bound::Closed(a))
    }

    pub fn contains(&self, x: T) -> bool {
        let lo_ok = match self.lo {
            Bound::Unbounded => true,
            Bound::Open(a) => x > a,
            Bound::Closed(a) => x >= a,
        };
        let hi_ok = match self.hi {
            Bound::Unbounded => true,
            Bound::Open(b) => x < b,
            Bound::Closed(b) => x <= b,
        };
        lo_ok && hi_ok
    }

    fn ends_before(hi: Bound<T>, lo: Bound<T>) -> bool {
        match (hi, lo) {
            (Bound::Unbounded, _) | (_, Bound::Unbounded) => false,
            (Bound::Closed(b), Bound::Closed(a)) => b < a,
            (Bound::Closed(b), Bound::Open(a))
            | (Bound::Open(b), Bound::Closed(a))
            | (Bound::Open(b), Bound::Open(a)) => b <= a,
        }
    }

    pub fn is_empty(&self) -> bool {
        Self::ends_before(self.hi, self.lo)
    }

    pub fn disjoint_from(&self, other: &Self) -> bool {
        self.is_empty()
            || other.is_empty()
            || Self::ends_before(self.hi, other.lo)
            || Self::ends_before(other.hi, self.lo)
    }
}

/// Target set of a regime in observable space.
#[derive(Clone)]
pub enum TargetSet<T: Real> {
    /// Cartesian product of intervals, one per observable coordinate.
    Box(Vec<Interval<T>>),
    Predicate {
        name: String,
        test: Arc<VectorPredicate<T>>,
    },
}

impl<T: Real> TargetSet<T> {
    pub fn interval(i: Interval<T>) -> Self {
        TargetSet::Box(vec![i])
    }

    pub fn predicate(
        name: impl Into<String>,
        test: impl Fn(&[T]) -> bool + Send + Sync + 'static,
    ) -> Self {
        TargetSet::Predicate {
            name: name.into(),
            test: Arc::new(test),
        }
    }

    pub fn contains(&self, value: &[T]) -> bool {
        match self {
            TargetSet::Box(iv) => {
                iv.len() == value.len() && iv.iter().zip(value).all(|(i, &v)| i.contains(v))
            }
            TargetSet::Predicate { test, .. } => test(value),
        }
    }

    /// `Some(true)` when the sets are provably disjoint, `Some(false)` when
    /// they provably intersect, `None` when undecidable (predicates).
    pub fn disjoint_from(&self, other: &Self) -> Option<bool> {
        match (self, other) {
            (TargetSet::Box(a), TargetSet::Box(b)) => {
                if a.len() != b.len() {
                    return None;
                }
                Some(a.iter().zip(b).any(|(x, y)| x.disjoint_from(y)))
            }
            _ => None,
        }
    }
}

impl<T: Real> fmt::Debug for TargetSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSet::Box(iv) => f.debug_tuple("Box").field(iv).finish(),
            TargetSet::Predicate { name, .. } => f.debug_tuple("Predicate").field(name).finish(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeLabel {
    Null,
    Alternative,
}

/// `{w : f(w) in target}`; the hypothesis is the induced set of distributions.
#[derive(Debug, Clone)]
pub struct Regime<T: Real> {
    pub observable: Observable<T>,
    pub target: TargetSet<T>,
    pub label: RegimeLabel,
}

impl<T: Real> Regime<T> {
    pub fn new(observable: Observable<T>, target: TargetSet<T>, label: RegimeLabel) -> Self {
        Self {
            observable,
            target,
            label,
        }
    }

    pub fn contains(&self, point: &ModelPoint<T>) -> bool {
        self.observable
            .eval(point)
            .is_some_and(|v| self.target.contains(&v))
    }
}

/// Checks that a pair of regimes has disjoint targets where decidable.
pub fn check_disjoint<T: Real>(null: &Regime<T>, alt: &Regime<T>) -> Result<()> {
    if null.observable.name() == alt.observable.name()
        && null.target.disjoint_from(&alt.target) == Some(false)
    {
        return Err(Error::Input(format!(
            "null and alternative targets of observable {} intersect",
            null.observable.name()
        )));
    }
    Ok(())
}

/// Probe observations used to compare two densities.
fn probe_observations<T: Real>(a: &ModelPoint<T>, b: &ModelPoint<T>) -> Result<Vec<Vec<T>>> {
    match (a, b) {
        (ModelPoint::Gmm(ga), ModelPoint::Gmm(gb)) => {
            let lo = [ga.mu1(), ga.mu2(), gb.mu1(), gb.mu2()]
                .into_iter()
                .fold(T::infinity(), |m, v| if v < m { v } else { m });
            let hi = [ga.mu1(), ga.mu2(), gb.mu1(), gb.mu2()]
                .into_iter()
                .fold(T::neg_infinity(), |m, v| if v > m { v } else { m });
            let s = if ga.sigma() > gb.sigma() { ga.sigma() } else { gb.sigma() };
            let (lo, hi) = (lo - T::lit(8.0) * s, hi + T::lit(8.0) * s);
            let m = 200;
            Ok((0..=m)
                .map(|i| vec![lo + (hi - lo) * T::from_count(i) / T::from_count(m)])
                .collect())
        }
        (ModelPoint::Rrr(ra), ModelPoint::Rrr(rb)) => {
            if ra.coef().shape() != rb.coef().shape() {
                return Err(Error::Input("regression points of different shape".into()));
            }
            let batch = a.sample(64, rng::derive_seed(0, &[rng::tag::PROBE]))?;
            let (x, y) = batch.rrr_data().expect("regression batch");
            let mut out: Vec<Vec<T>> = (0..x.nrows())
                .map(|i| x.row(i).iter().chain(y.row(i).iter()).copied().collect())
                .collect();
            out.push(vec![T::zero(); ra.p() + ra.q()]);
            Ok(out)
        }
        _ => Err(Error::Input(format!(
            "cannot compare points of kinds {} and {}",
            a.kind(),
            b.kind()
        ))),
    }
}

/// `max |log p_a(x) - log p_b(x)|` over a probe grid of observations.
pub fn max_log_density_discrepancy<T: Real>(a: &ModelPoint<T>, b: &ModelPoint<T>) -> Result<T> {
    let probes = probe_observations(a, b)?;
    let mut worst = T::zero();
    for obs in &probes {
        let o = match a {
            ModelPoint::Gmm(_) => Observation::Scalar(obs[0]),
            ModelPoint::Rrr(r) => Observation::Pair {
                x: &obs[..r.p()],
                y: &obs[r.p()..],
            },
        };
        let d = (a.log_density(o)? - b.log_density(o)?).abs();
        if !d.is_finite() {
            return Ok(T::infinity());
        }
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

/// Why an observable failed the identifiability check.
#[derive(Debug, Clone)]
pub struct Counterexample<T: Real> {
    pub point: ModelPoint<T>,
    pub action: String,
    pub value: Vec<T>,
    pub image_value: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct Identifiability<T: Real> {
    pub identifiable: bool,
    pub counterexample: Option<Counterexample<T>>,
}

/// Whether `obs` is invariant under every action of `group` on every probe.
pub fn is_identifiable<T: Real>(
    obs: &Observable<T>,
    group: &[SymmetryAction<T>],
    probes: &[ModelPoint<T>],
) -> Result<Identifiability<T>> {
    if probes.is_empty() {
        return Err(Error::Input("identifiability check needs at least one probe point".into()));
    }
    let tol = T::lit(OBSERVABLE_TOL);
    for w in probes {
        for g in group {
            let gw = g.apply(w);
            let d = max_log_density_discrepancy(w, &gw)?;
            if !(d <= T::lit(EQUIVALENCE_TOL)) {
                return Err(Error::Input(format!(
                    "action {} is not distribution-preserving at {w} (discrepancy {d})",
                    g.name()
                )));
            }
            let (Some(a), Some(b)) = (obs.eval(w), obs.eval(&gw)) else {
                continue;
            };
            let differs = a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| (*x - *y).abs() > tol);
            if differs {
                return Ok(Identifiability {
                    identifiable: false,
                    counterexample: Some(Counterexample {
                        point: w.clone(),
                        action: g.name().to_string(),
                        value: a,
                        image_value: b,
                    }),
                });
            }
        }
    }
    Ok(Identifiability {
        identifiable: true,
        counterexample: None,
    })
}

/// Two parameters in opposite regimes that induce the same distribution.
#[derive(Debug, Clone)]
pub struct OverlapWitness<T: Real> {
    w0: ModelPoint<T>,
    w1: ModelPoint<T>,
    shared_distribution_check: T,
}

impl<T: Real> OverlapWitness<T> {
    /// Validates `f(w0) in A`, `f(w1) in B` and `P_{w0} = P_{w1}`.
    pub fn new(
        null: &Regime<T>,
        alt: &Regime<T>,
        w0: ModelPoint<T>,
        w1: ModelPoint<T>,
    ) -> Result<Self> {
        if !null.contains(&w0) {
            return Err(Error::Input(format!("{w0} is not in the null regime")));
        }
        if !alt.contains(&w1) {
            return Err(Error::Input(format!("{w1} is not in the alternative regime")));
        }
        let check = max_log_density_discrepancy(&w0, &w1)?;
        if !(check <= T::lit(EQUIVALENCE_TOL)) {
            return Err(Error::Input(format!(
                "{w0} and {w1} do not induce the same distribution (discrepancy {check})"
            )));
        }
        Ok(Self {
            w0,
            w1,
            shared_distribution_check: check,
        })
    }

    pub fn w0(&self) -> &ModelPoint<T> {
        &self.w0
    }

    pub fn w1(&self) -> &ModelPoint<T> {
        &self.w1
    }

    pub fn shared_distribution_check(&self) -> T {
        self.shared_distribution_check
    }
}

/// Searches `probes x group` for a witness to overlap of the induced regimes.
pub fn find_overlap_witness<T: Real>(
    null: &Regime<T>,
    alt: &Regime<T>,
    group: &[SymmetryAction<T>],
    probes: &[ModelPoint<T>],
) -> Result<Option<OverlapWitness<T>>> {
    check_disjoint(null, alt)?;
    for w in probes {
        for g in group {
            let gw = g.apply(w);
            let pair = if null.contains(w) && alt.contains(&gw) {
                Some((w.clone(), gw))
            } else if alt.contains(w) && null.contains(&gw) {
                Some((gw, w.clone()))
            } else {
                None
            };
            if let Some((w0, w1)) = pair {
                return OverlapWitness::new(null, alt, w0, w1).map(Some);
            }
        }
    }
    Ok(None)
}

/// Empirical decision frequencies of a test at the shared distribution of a
/// witness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpossibilityBound {
    pub rejections: usize,
    pub acceptances: usize,
    pub reps: usize,
    /// `P*(reject) + P*(accept)`; equal to one because every replication
    /// lands on exactly one side.
    pub sum: f64,
    /// Lower bound on the worst-case type I error (`w0` lies in the null).
    pub alpha_lower: f64,
    /// Lower bound on the worst-case type II error (`w1` lies in the alternative).
    pub beta_lower: f64,
}

pub fn verify_impossibility_bound<T: Real>(
    witness: &OverlapWitness<T>,
    test: &dyn TestProcedure<T>,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<ImpossibilityBound> {
    if reps < 100 {
        return Err(Error::Input(format!("need at least 100 replications (got {reps})")));
    }
    let decisions: Vec<bool> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let batch = witness.w0.sample(n, replication_seed(seed, n, r))?;
            test.decide(&batch).map(|v| v.reject)
        })
        .collect::<Result<_>>()?;
    let rejections = decisions.iter().filter(|&&d| d).count();
    let acceptances = reps - rejections;
    Ok(ImpossibilityBound {
        rejections,
        acceptances,
        reps,
        sum: (rejections + acceptances) as f64 / reps as f64,
        alpha_lower: rejections as f64 / reps as f64,
        beta_lower: acceptances as f64 / reps as f64,
    })
}

/// Names understood by [`symmetry_by_name`].
/// Parameter box sampled by [`probe_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeBounds {
    pub mean: (f64, f64),
    pub sigma: (f64, f64),
    pub pi1: (f64, f64),
    pub coef: (f64, f64),
    pub sigma_eps: (f64, f64),
}

impl Default for ProbeBounds {
    fn default() -> Self {
        Self {
            mean: (-3.0, 3.0),
            sigma: (0.5, 2.0),
            pi1: (0.1, 0.9),
            coef: (-2.0, 2.0),
            sigma_eps: (0.5, 2.0),
        }
    }
}

pub const DEFAULT_PROBE_COUNT: usize = 100;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `count` quasi-random parameter points of the same kind and shape as
/// `template`: a Halton sequence with a seeded random shift, mapped into
/// `bounds`.
pub fn probe_grid<T: Real>(
    template: &ModelPoint<T>,
    count: usize,
    bounds: &ProbeBounds,
    seed: u64,
) -> Result<Vec<ModelPoint<T>>> {
    use rand::Rng;
    let dims = match template {
        ModelPoint::Gmm(_) => 4,
        ModelPoint::Rrr(r) => r.q() * r.p() + 1,
    };
    if dims > PRIMES.len() {
        return Err(Error::Input(format!("probe grids support at most {} coordinates", PRIMES.len())));
    }
    let mut rng = rng::stream(seed, &[rng::tag::PROBE]);
    let shift: Vec<f64> = (0..dims).map(|_| rng.random::<f64>()).collect();
    let at = |u: f64, (lo, hi): (f64, f64)| T::lit(lo + (hi - lo) * u);
    (1..=count as u64)
        .map(|i| {
            let u: Vec<f64> = (0..dims).map(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract()).collect();
            match template {
                ModelPoint::Gmm(_) => ModelPoint::gmm(
                    at(u[0], bounds.mean),
                    at(u[1], bounds.mean),
                    at(u[2], bounds.sigma),
                    at(u[3], bounds.pi1),
                ),
                ModelPoint::Rrr(r) => {
                    let (q, p) = (r.q(), r.p());
                    let coef = nalgebra::DMatrix::from_fn(q, p, |a, b| at(u[a * p + b], bounds.coef));
                    RrrParams::from_coef(coef, at(u[q * p], bounds.sigma_eps)).map(ModelPoint::Rrr)
                }
            }
        })
        .collect()
}

pub const SYMMETRY_NAMES: &[&str] = &["label-swap", "svd-sign-flip", "svd-leading-pair-flip"];

/// Names understood by [`observable_by_name`].
pub const OBSERVABLE_NAMES: &[&str] = &["gmm-signed-gap", "gmm-abs-gap", "rrr-rank", "rrr-u11"];

pub fn symmetry_by_name<T: Real>(name: &str) -> Option<SymmetryAction<T>> {
    match name {
        "label-swap" => Some(SymmetryAction::label_swap()),
        "svd-sign-flip" => Some(SymmetryAction::svd_sign_flip()),
        "svd-leading-pair-flip" => Some(SymmetryAction::svd_leading_pair_flip()),
        _ => None,
    }
}

pub fn observable_by_name<T: Real>(name: &str) -> Option<Observable<T>> {
    match name {
        "gmm-signed-gap" => Some(Observable::gmm_signed_gap()),
        "gmm-abs-gap" => Some(Observable::gmm_abs_gap()),
        "rrr-rank" => Some(Observable::rrr_rank()),
        "rrr-u11" => Some(Observable::rrr_u11()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RrrParams;
    use nalgebra::{dmatrix, DMatrix};
    use rand::Rng;

    fn gmm(a: f64, b: f64) -> ModelPoint<f64> {
        ModelPoint::gmm(a, b, 1.0, 0.5).unwrap()
    }

    fn rrr(c: DMatrix<f64>) -> ModelPoint<f64> {
        ModelPoint::Rrr(RrrParams::from_coef(c, 1.0).unwrap())
    }

    fn random_probes(count: usize) -> Vec<ModelPoint<f64>> {
        let mut rng = rng::stream(99, &[]);
        (0..count)
            .map(|i| {
                if i % 2 == 0 {
                    ModelPoint::gmm(
                        rng.random_range(-4.0..4.0),
                        rng.random_range(-4.0..4.0),
                        rng.random_range(0.3..3.0),
                        rng.random_range(0.0..1.0),
                    )
                    .unwrap()
                } else {
                    let c = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-2.0..2.0));
                    ModelPoint::Rrr(RrrParams::from_coef(c, rng.random_range(0.3..2.0)).unwrap())
                }
            })
            .collect()
    }

    #[test]
    fn builtin_actions_preserve_distribution() {
        let probes = random_probes(120);
        for name in SYMMETRY_NAMES {
            let g = symmetry_by_name::<f64>(name).unwrap();
            for p in &probes {
                let d = g.discrepancy(p).unwrap();
                assert!(d <= 1e-10, "{name} at {p}: {d}");
            }
        }
    }

    #[test]
    fn identifiability_of_gaps() {
        let swap = [SymmetryAction::label_swap()];
        let probes = random_probes(20);
        let abs = is_identifiable(&Observable::gmm_abs_gap(), &swap, &probes).unwrap();
        assert!(abs.identifiable);

        let signed =
            is_identifiable(&Observable::gmm_signed_gap(), &swap, &[gmm(-1.0, 1.0)]).unwrap();
        assert!(!signed.identifiable);
        let ce = signed.counterexample.unwrap();
        assert_eq!(ce.point, gmm(-1.0, 1.0));
        assert_eq!(ce.action, "label-swap");
    }

    #[test]
    fn rank_is_identifiable_under_sign_flips() {
        let group = [SymmetryAction::svd_sign_flip(), SymmetryAction::svd_leading_pair_flip()];
        let probes: Vec<_> = random_probes(20).into_iter().filter(|p| p.as_rrr().is_some()).collect();
        let res = is_identifiable(&Observable::rrr_rank(), &group, &probes).unwrap();
        assert!(res.identifiable);
        let u11 = is_identifiable(&Observable::rrr_u11(), &group, &probes).unwrap();
        assert!(!u11.identifiable);
    }

    #[test]
    fn probe_grids_are_deterministic_and_bounded() {
        let b = ProbeBounds::default();
        let g = probe_grid(&gmm(0.0, 0.0), DEFAULT_PROBE_COUNT, &b, 5).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g, probe_grid(&gmm(0.0, 0.0), 100, &b, 5).unwrap());
        assert_ne!(g, probe_grid(&gmm(0.0, 0.0), 100, &b, 6).unwrap());
        for p in &g {
            let p = p.as_gmm().unwrap();
            assert!(p.mu1().abs() <= 3.0 && p.sigma() >= 0.5 && p.sigma() <= 2.0);
        }
        let r = probe_grid(&rrr(DMatrix::zeros(2, 3)), 50, &b, 5).unwrap();
        assert!(r.iter().all(|p| p.as_rrr().unwrap().coef().shape() == (2, 3)));
        assert!(probe_grid(&rrr(DMatrix::zeros(4, 4)), 5, &b, 5).is_err());
    }

    #[test]
    fn empty_probe_set_is_rejected() {
        let r = is_identifiable::<f64>(&Observable::gmm_abs_gap(), &[], &[]);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn non_preserving_action_is_rejected() {
        let shift = SymmetryAction::new("shift", |p: &ModelPoint<f64>| match p {
            ModelPoint::Gmm(g) => ModelPoint::gmm(g.mu1() + 1.0, g.mu2(), g.sigma(), g.pi1()).unwrap(),
            o => o.clone(),
        });
        let r = is_identifiable(&Observable::gmm_abs_gap(), &[shift], &[gmm(0.0, 1.0)]);
        assert!(r.is_err());
    }

    fn ordering_regimes() -> (Regime<f64>, Regime<f64>) {
        let obs = Observable::gmm_signed_gap();
        (
            Regime::new(obs.clone(), TargetSet::interval(Interval::greater_than(0.0)), RegimeLabel::Null),
            Regime::new(obs, TargetSet::interval(Interval::less_than(0.0)), RegimeLabel::Alternative),
        )
    }

    #[test]
    fn ordering_witness() {
        let (null, alt) = ordering_regimes();
        let w = find_overlap_witness(&null, &alt, &[SymmetryAction::label_swap()], &[gmm(1.0, -1.0)])
            .unwrap()
            .expect("witness");
        assert_eq!(w.w0(), &gmm(1.0, -1.0));
        assert_eq!(w.w1(), &gmm(-1.0, 1.0));
        assert!(w.shared_distribution_check() <= 1e-10);

        // probe in the alternative: the pair comes back oriented
        let w = find_overlap_witness(&null, &alt, &[SymmetryAction::label_swap()], &[gmm(-3.0, 2.0)])
            .unwrap()
            .unwrap();
        assert_eq!(w.w0(), &gmm(2.0, -3.0));
    }

    #[test]
    fn sign_witness_for_regression() {
        let obs = Observable::rrr_u11();
        let null = Regime::new(obs.clone(), TargetSet::interval(Interval::greater_than(0.0)), RegimeLabel::Null);
        let alt = Regime::new(obs, TargetSet::interval(Interval::less_than(0.0)), RegimeLabel::Alternative);
        for c in [dmatrix![1.0, 0.5, 0.0; 0.2, -0.3, 0.7], dmatrix![0.0, -2.0, 0.0; 0.0, 0.0, 1.0]] {
            let p = rrr(c);
            assert!(p.as_rrr().unwrap().u()[(0, 0)] != 0.0);
            let w = find_overlap_witness(&null, &alt, &[SymmetryAction::svd_sign_flip()], &[p])
                .unwrap()
                .expect("witness");
            assert!(w.w0().as_rrr().unwrap().u()[(0, 0)] > 0.0);
            assert!(w.w1().as_rrr().unwrap().u()[(0, 0)] < 0.0);
            assert_eq!(w.w0().as_rrr().unwrap().coef(), w.w1().as_rrr().unwrap().coef());
        }
    }

    #[test]
    fn no_witness_for_identifiable_gap_regimes() {
        let obs = Observable::gmm_abs_gap();
        let null = Regime::new(obs.clone(), TargetSet::interval(Interval::point(0.0)), RegimeLabel::Null);
        let alt = Regime::new(obs, TargetSet::interval(Interval::at_least(1.0)), RegimeLabel::Alternative);
        let probes = vec![gmm(0.0, 0.0), gmm(1.0, -1.0), gmm(-0.5, 0.5), gmm(3.0, 0.0)];
        let w = find_overlap_witness(&null, &alt, &[SymmetryAction::label_swap()], &probes).unwrap();
        assert!(w.is_none());
    }

    #[test]
    fn overlapping_targets_are_rejected() {
        let obs = Observable::gmm_signed_gap();
        let a = Regime::new(obs.clone(), TargetSet::interval(Interval::at_least(0.0)), RegimeLabel::Null);
        let b = Regime::new(obs, TargetSet::interval(Interval::at_most(0.0)), RegimeLabel::Alternative);
        assert!(find_overlap_witness(&a, &b, &[SymmetryAction::label_swap()], &[gmm(1.0, 0.0)]).is_err());
    }

    #[test]
    fn interval_disjointness() {
        let gt = Interval::greater_than(0.0);
        let lt = Interval::less_than(0.0);
        let le = Interval::at_most(0.0);
        let ge = Interval::at_least(0.0);
        assert!(gt.disjoint_from(&lt));
        assert!(gt.disjoint_from(&le));
        assert!(!ge.disjoint_from(&le));
        assert!(Interval::point(0.0).disjoint_from(&Interval::at_least(1.0)));
        assert!(!Interval::point(1.0).disjoint_from(&Interval::at_least(1.0)));
    }

    #[test]
    fn witness_constructor_rechecks_invariants() {
        let (null, alt) = ordering_regimes();
        // same regime membership but different distributions
        assert!(OverlapWitness::new(&null, &alt, gmm(1.0, -1.0), gmm(-2.0, 2.0)).is_err());
        assert!(OverlapWitness::new(&null, &alt, gmm(-1.0, 1.0), gmm(1.0, -1.0)).is_err());
    }
}
