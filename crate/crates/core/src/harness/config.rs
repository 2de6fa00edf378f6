//! Experiment configuration: a single JSON document per run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::equivalence::{
    observable_by_name, symmetry_by_name, Bound, Interval, Regime, RegimeLabel, SymmetryAction, TargetSet,
};
use crate::model::{ModelPoint, RrrParams};
use crate::testing::{Calibration, EmConfig, TEST_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GmmOrdering,
    GmmMixture,
    RrrRank,
    RrrSign,
    ScaleScan,
    Contraction,
    Hellinger,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::GmmOrdering,
        ExperimentKind::GmmMixture,
        ExperimentKind::RrrRank,
        ExperimentKind::RrrSign,
        ExperimentKind::ScaleScan,
        ExperimentKind::Contraction,
        ExperimentKind::Hellinger,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GmmOrdering => "gmm-ordering",
            ExperimentKind::GmmMixture => "gmm-mixture",
            ExperimentKind::RrrRank => "rrr-rank",
            ExperimentKind::RrrSign => "rrr-sign",
            ExperimentKind::ScaleScan => "scale-scan",
            ExperimentKind::Contraction => "contraction",
            ExperimentKind::Hellinger => "hellinger",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Experiments whose output is an error curve.
    pub fn is_error_curve(self) -> bool {
        matches!(
            self,
            ExperimentKind::GmmOrdering | ExperimentKind::GmmMixture | ExperimentKind::RrrRank | ExperimentKind::RrrSign
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One parameter point, or a range of mixture points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSpec {
    Gmm {
        mu1: f64,
        mu2: f64,
        sigma: f64,
        #[serde(default = "half")]
        pi1: f64,
    },
    /// Coefficient matrix given row by row (q rows of length p).
    Rrr { coef: Vec<Vec<f64>>, sigma_eps: f64 },
    /// `C = U diag(s) V^T` with `U` (q x r) and `V` (p x r) given row by row.
    RrrFactors {
        u: Vec<Vec<f64>>,
        s: Vec<f64>,
        v: Vec<Vec<f64>>,
        sigma_eps: f64,
    },
    /// Symmetric mixtures `N(-gap/2, sigma) / N(gap/2, sigma)` for
    /// `gap = from, from + step, ..., to`.
    GmmGapRange {
        from: f64,
        to: f64,
        step: f64,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default = "half")]
        pi1: f64,
    },
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, String> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(format!("{what} must be a nonempty rectangular matrix"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl PointSpec {
    pub fn expand(&self) -> Result<Vec<ModelPoint<f64>>, String> {
        let single = |p: crate::Result<ModelPoint<f64>>| p.map(|p| vec![p]).map_err(|e| e.to_string());
        match self {
            PointSpec::Gmm { mu1, mu2, sigma, pi1 } => single(ModelPoint::gmm(*mu1, *mu2, *sigma, *pi1)),
            PointSpec::Rrr { coef, sigma_eps } => {
                single(RrrParams::from_coef(matrix(coef, "coef")?, *sigma_eps).map(ModelPoint::Rrr))
            }
            PointSpec::RrrFactors { u, s, v, sigma_eps } => single(
                RrrParams::from_factors(matrix(u, "u")?, DVector::from_column_slice(s), matrix(v, "v")?, *sigma_eps)
                    .map(ModelPoint::Rrr),
            ),
            PointSpec::GmmGapRange {
                from,
                to,
                step,
                sigma,
                pi1,
            } => {
                if !(*step > 0.0) || !(to >= from) {
                    return Err("gap range needs step > 0 and to >= from".into());
                }
                let k = ((to - from) / step + 1e-9).floor() as usize;
                (0..=k)
                    .map(|i| {
                        let g = from + step * i as f64;
                        ModelPoint::gmm(-g / 2.0, g / 2.0, *sigma, *pi1).map_err(|e| e.to_string())
                    })
                    .collect()
            }
        }
    }

    /// Spec reproducing `point` exactly (regression points keep their factors).
    pub fn from_point(point: &ModelPoint<f64>) -> Self {
        match point {
            ModelPoint::Gmm(g) => PointSpec::Gmm {
                mu1: g.mu1(),
                mu2: g.mu2(),
                sigma: g.sigma(),
                pi1: g.pi1(),
            },
            ModelPoint::Rrr(r) => PointSpec::RrrFactors {
                u: rows_of(r.u()),
                s: r.singular_values().iter().copied().collect(),
                v: rows_of(r.v()),
                sigma_eps: r.sigma_eps(),
            },
        }
    }
}

pub fn expand_grid(specs: &[PointSpec]) -> Result<Vec<ModelPoint<f64>>, String> {
    let mut out = Vec::new();
    for s in specs {
        out.extend(s.expand()?);
    }
    Ok(out)
}

/// Target set over a scalar observable. Unset fields are unbounded; `eq`
/// overrides the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub le: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq: Option<f64>,
}

impl TargetSpec {
    pub fn gt(x: f64) -> Self {
        Self { gt: Some(x), ..Self::default() }
    }
    pub fn ge(x: f64) -> Self {
        Self { ge: Some(x), ..Self::default() }
    }
    pub fn lt(x: f64) -> Self {
        Self { lt: Some(x), ..Self::default() }
    }
    pub fn eq(x: f64) -> Self {
        Self { eq: Some(x), ..Self::default() }
    }

    pub fn interval(&self) -> Result<Interval<f64>, String> {
        if let Some(x) = self.eq {
            return Ok(Interval::point(x));
        }
        if self.gt.is_some() && self.ge.is_some() || self.lt.is_some() && self.le.is_some() {
            return Err("a target may set only one of gt/ge and one of lt/le".into());
        }
        let lo = match (self.gt, self.ge) {
            (Some(x), _) => Bound::Open(x),
            (_, Some(x)) => Bound::Closed(x),
            _ => Bound::Unbounded,
        };
        let hi = match (self.lt, self.le) {
            (Some(x), _) => Bound::Open(x),
            (_, Some(x)) => Bound::Closed(x),
            _ => Bound::Unbounded,
        };
        Ok(Interval::new(lo, hi))
    }
}

/// Observable, the two targets, and the symmetry group searched for overlap
/// witnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSpec {
    pub observable: String,
    pub null: TargetSpec,
    pub alt: TargetSpec,
    #[serde(default)]
    pub symmetries: Vec<String>,
}

pub struct ResolvedRegimes {
    pub null: Regime<f64>,
    pub alt: Regime<f64>,
    pub group: Vec<SymmetryAction<f64>>,
}

impl RegimeSpec {
    pub fn resolve(&self) -> Result<ResolvedRegimes, String> {
        let obs = |name: &str| observable_by_name::<f64>(name).ok_or_else(|| format!("unknown observable '{name}'"));
        let group = self
            .symmetries
            .iter()
            .map(|s| symmetry_by_name::<f64>(s).ok_or_else(|| format!("unknown symmetry '{s}'")))
            .collect::<Result<_, _>>()?;
        Ok(ResolvedRegimes {
            null: Regime::new(obs(&self.observable)?, TargetSet::interval(self.null.interval()?), RegimeLabel::Null),
            alt: Regime::new(
                obs(&self.observable)?,
                TargetSet::interval(self.alt.interval()?),
                RegimeLabel::Alternative,
            ),
            group,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    pub level: f64,
    pub bootstrap_reps: usize,
    pub seed: u64,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        let c = Calibration::default();
        Self {
            level: c.level,
            bootstrap_reps: c.bootstrap_reps,
            seed: c.seed,
        }
    }
}

impl CalibrationSpec {
    pub fn resolve(&self) -> Result<Calibration, String> {
        Calibration::new(self.level, self.bootstrap_reps, self.seed).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmSpec {
    pub restarts: usize,
    pub short_iters: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EmSpec {
    fn default() -> Self {
        let e = EmConfig::default();
        Self {
            restarts: e.restarts,
            short_iters: e.short_iters,
            max_iter: e.max_iter,
            tol: e.tol(),
        }
    }
}

impl EmSpec {
    pub fn resolve(&self) -> Result<EmConfig, String> {
        if self.restarts == 0 || self.max_iter == 0 || self.short_iters == 0 || !(self.tol >= 0.0) {
            return Err("EM settings must be positive".into());
        }
        Ok(EmConfig::new(self.restarts, self.short_iters, self.max_iter, self.tol))
    }
}

/// Settings of the scale scan over the variance-matched mixture family
/// `1/2 N(-delta, 1 - delta^2) + 1/2 N(delta, 1 - delta^2)`, which meets the
/// single-Gaussian null at `delta = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    /// Rows of the power matrix, each in `[0, 1)`.
    pub deltas: Vec<f64>,
    /// Deltas used to fit the separation exponent.
    pub fit_deltas: Vec<f64>,
    /// Levels of `n delta^(2a)` drawn as contours.
    pub contour_levels: Vec<f64>,
    /// Diagonal sequences of `(delta index, n index)` cells.
    #[serde(default)]
    pub diagonals: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSpec {
    Fixed(f64),
    /// `eps0 n^(-1/4)`.
    Quartic(f64),
}

/// Grid posterior over symmetric mixtures indexed by the gap `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionSpec {
    pub gap_max: f64,
    pub gap_step: f64,
    pub sigma: f64,
    pub truth_gap: f64,
    pub epsilon: EpsilonSpec,
    /// Unseparated alternative on the gap, e.g. `{"gt": 0}`.
    pub unseparated_alt: TargetSpec,
    /// Separated contrast alternative, e.g. `{"ge": 1}`.
    pub contrast_alt: TargetSpec,
}

/// Built-in one-parameter families for the exponent fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    /// `N(delta, 1)` against `N(0, 1)`.
    GaussianLocation,
    /// `1/2 N(-delta, 1) + 1/2 N(delta, 1)` against `N(0, 1)`.
    SymmetricMixture,
    /// Variance-matched mixture against `N(0, 1)`.
    VarianceMatchedMixture,
    /// 2x3 regression with singular values `(1, delta)` against rank one.
    RrrSingularValue,
}

impl FamilyName {
    pub const ALL: [FamilyName; 4] = [
        FamilyName::GaussianLocation,
        FamilyName::SymmetricMixture,
        FamilyName::VarianceMatchedMixture,
        FamilyName::RrrSingularValue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyName::GaussianLocation => "gaussian-location",
            FamilyName::SymmetricMixture => "symmetric-mixture",
            FamilyName::VarianceMatchedMixture => "variance-matched-mixture",
            FamilyName::RrrSingularValue => "rrr-singular-value",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    pub family: FamilyName,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HellingerSpec {
    #[serde(default)]
    pub pairs: Vec<(PointSpec, PointSpec)>,
    #[serde(default)]
    pub exponent_fits: Vec<ExponentSpec>,
    pub mc_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Registry name of the test; defaults to the experiment's own test.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<String>,
    pub sample_sizes: Vec<usize>,
    pub reps: usize,
    pub base_seed: u64,
    /// Named parameter grids; error-curve experiments use `null` and `alt`.
    #[serde(default)]
    pub model_grids: BTreeMap<String, Vec<PointSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regimes: Option<RegimeSpec>,
    #[serde(default)]
    pub calibration: CalibrationSpec,
    #[serde(default)]
    pub em: EmSpec,
    /// Null rank for `rrr-rank`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction: Option<ContractionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hellinger: Option<HellingerSpec>,
    pub output_dir: PathBuf,
}

pub const STANDARD_SIZES: [usize; 5] = [100, 300, 1000, 3000, 10_000];

fn gmm(mu1: f64, mu2: f64, sigma: f64) -> PointSpec {
    PointSpec::Gmm {
        mu1,
        mu2,
        sigma,
        pi1: 0.5,
    }
}

/// 2x3 regression point with `U = [[c, -s], [s, c]]` (`c = cos theta`) and
/// the given singular values.
fn rrr_point(cos: f64, sin: f64, s: [f64; 2]) -> PointSpec {
    PointSpec::RrrFactors {
        u: vec![vec![cos, -sin], vec![sin, cos]],
        s: s.to_vec(),
        v: vec![vec![0.6, 0.0], vec![0.0, 1.0], vec![0.8, 0.0]],
        sigma_eps: 1.0,
    }
}

impl ExperimentConfig {
    /// Built-in defaults; the files under `configs/` mirror these.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig {
            experiment: kind,
            test: None,
            sample_sizes: STANDARD_SIZES.to_vec(),
            reps: 500,
            base_seed: 20_240_601,
            model_grids: BTreeMap::new(),
            regimes: None,
            calibration: CalibrationSpec::default(),
            em: EmSpec::default(),
            r0: None,
            scan: None,
            contraction: None,
            hellinger: None,
            output_dir: PathBuf::from(format!("out/{}", kind.name())),
        };
        let grids = |null: Vec<PointSpec>, alt: Vec<PointSpec>| {
            BTreeMap::from([("null".to_string(), null), ("alt".to_string(), alt)])
        };
        match kind {
            ExperimentKind::GmmOrdering => {
                // the relabelled twin is injected into the alternative grid
                c.model_grids = grids(vec![gmm(2.0, -2.0, 1.0)], vec![]);
                c.regimes = Some(RegimeSpec {
                    observable: "gmm-signed-gap".into(),
                    null: TargetSpec::gt(0.0),
                    alt: TargetSpec::lt(0.0),
                    symmetries: vec!["label-swap".into()],
                });
            }
            ExperimentKind::GmmMixture => {
                c.model_grids = grids(vec![gmm(0.0, 0.0, 1.0)], vec![gmm(-1.5, 1.5, 1.0)]);
                c.regimes = Some(RegimeSpec {
                    observable: "gmm-abs-gap".into(),
                    null: TargetSpec::eq(0.0),
                    alt: TargetSpec::ge(1.0),
                    symmetries: vec!["label-swap".into()],
                });
                c.calibration.bootstrap_reps = 1000;
            }
            ExperimentKind::RrrRank => {
                c.sample_sizes = vec![100, 200, 500, 1000, 2000];
                c.model_grids = grids(
                    vec![rrr_point(0.8, 0.6, [1.0, 0.0])],
                    vec![rrr_point(0.8, 0.6, [1.0, 0.8])],
                );
                c.regimes = Some(RegimeSpec {
                    observable: "rrr-rank".into(),
                    null: TargetSpec::eq(1.0),
                    alt: TargetSpec::ge(2.0),
                    symmetries: vec!["svd-sign-flip".into()],
                });
                c.r0 = Some(1);
            }
            ExperimentKind::RrrSign => {
                // the leading left singular vector (0.7, -0.714) sits close to
                // the sign convention's switching line, so decisions vary with n
                let sin = 0.51f64.sqrt();
                c.model_grids = grids(
                    vec![PointSpec::RrrFactors {
                        u: vec![vec![0.7, sin], vec![-sin, 0.7]],
                        s: vec![1.0, 0.5],
                        v: vec![vec![0.6, 0.0], vec![0.0, 1.0], vec![0.8, 0.0]],
                        sigma_eps: 1.0,
                    }],
                    vec![],
                );
                c.regimes = Some(RegimeSpec {
                    observable: "rrr-u11".into(),
                    null: TargetSpec::gt(0.0),
                    alt: TargetSpec::lt(0.0),
                    symmetries: vec!["svd-sign-flip".into()],
                });
            }
            ExperimentKind::ScaleScan => {
                c.sample_sizes = vec![100, 300, 1000, 3000];
                c.calibration.bootstrap_reps = 1000;
                c.scan = Some(ScanSpec {
                    deltas: vec![0.0, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
                    fit_deltas: geometric(0.08, 0.8, 7),
                    contour_levels: vec![1.0, 50.0],
                    diagonals: vec![
                        vec![(1, 0), (2, 1), (3, 2), (4, 3)],
                        vec![(2, 0), (3, 1), (4, 2), (5, 3)],
                        vec![(3, 0), (4, 1), (5, 2), (6, 3)],
                        vec![(4, 0), (5, 1), (6, 2), (7, 3)],
                    ],
                });
            }
            ExperimentKind::Contraction => {
                c.sample_sizes = vec![50, 100, 200, 500, 1000, 2000];
                c.reps = 200;
                c.contraction = Some(ContractionSpec {
                    gap_max: 3.0,
                    gap_step: 0.05,
                    sigma: 1.0,
                    truth_gap: 0.0,
                    epsilon: EpsilonSpec::Fixed(0.2),
                    unseparated_alt: TargetSpec::gt(0.0),
                    contrast_alt: TargetSpec::ge(1.0),
                });
            }
            ExperimentKind::Hellinger => {
                c.sample_sizes = vec![];
                c.reps = 1;
                c.hellinger = Some(HellingerSpec {
                    pairs: [0.0, 0.5, 1.0, 2.0, 4.0]
                        .into_iter()
                        .map(|d| (gmm(0.0, 0.0, 1.0), gmm(d, d, 1.0)))
                        .chain(std::iter::once((gmm(0.0, 0.0, 1.0), gmm(-0.5, 0.5, 1.0))))
                        .collect(),
                    exponent_fits: vec![
                        ExponentSpec {
                            family: FamilyName::GaussianLocation,
                            deltas: geometric(0.05, 0.5, 8),
                        },
                        ExponentSpec {
                            family: FamilyName::SymmetricMixture,
                            deltas: geometric(0.05, 0.5, 8),
                        },
                        ExponentSpec {
                            family: FamilyName::VarianceMatchedMixture,
                            deltas: geometric(0.08, 0.8, 7),
                        },
                        ExponentSpec {
                            family: FamilyName::RrrSingularValue,
                            deltas: geometric(0.1, 1.0, 6),
                        },
                    ],
                    mc_draws: 200_000,
                });
            }
        }
        c
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let c: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("invalid config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn test_name(&self) -> &str {
        self.test.as_deref().unwrap_or(match self.experiment {
            ExperimentKind::GmmOrdering => "gmm-ordering",
            ExperimentKind::RrrRank => "rrr-rank",
            ExperimentKind::RrrSign => "rrr-sign",
            _ => "gmm-mixture",
        })
    }

    pub fn grid(&self, name: &str) -> Result<Vec<ModelPoint<f64>>, HarnessError> {
        let specs = self.model_grids.get(name).map(Vec::as_slice).unwrap_or(&[]);
        expand_grid(specs).map_err(|e| HarnessError::Config(format!("grid '{name}': {e}")))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.reps < 1 {
            return bad("reps must be at least 1".into());
        }
        if self.sample_sizes.contains(&0) || self.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sample_sizes must be positive and strictly increasing".into());
        }
        self.calibration.resolve().map_err(HarnessError::Config)?;
        self.em.resolve().map_err(HarnessError::Config)?;
        if !TEST_NAMES.contains(&self.test_name()) {
            return bad(format!("unknown test '{}'", self.test_name()));
        }
        for name in self.model_grids.keys() {
            self.grid(name)?;
        }
        if let Some(r) = &self.regimes {
            r.resolve().map_err(HarnessError::Config)?;
        }
        let kind = self.experiment;
        if kind != ExperimentKind::Hellinger && self.sample_sizes.is_empty() {
            return bad("sample_sizes must not be empty".into());
        }
        match kind {
            k if k.is_error_curve() => {
                if self.grid("null")?.is_empty() {
                    return bad("error-curve experiments need a nonempty 'null' grid".into());
                }
                if self.grid("alt")?.is_empty() && self.regimes.is_none() {
                    return bad("empty 'alt' grid and no regimes to derive a witness from".into());
                }
                if self.test_name() == "rrr-rank" && self.r0.is_none() {
                    return bad("rrr-rank needs r0".into());
                }
            }
            ExperimentKind::ScaleScan => {
                let Some(s) = &self.scan else {
                    return bad("scale-scan needs a 'scan' section".into());
                };
                if s.deltas.len() < 4 || self.sample_sizes.len() < 4 {
                    return bad("scale scan needs at least 4 deltas and 4 sample sizes".into());
                }
                if s.deltas.iter().any(|d| !(*d >= 0.0 && *d < 1.0)) {
                    return bad("scan deltas must lie in [0, 1)".into());
                }
                for diag in &s.diagonals {
                    if diag.iter().any(|&(i, j)| i >= s.deltas.len() || j >= self.sample_sizes.len()) {
                        return bad("diagonal cell outside the scan grid".into());
                    }
                }
            }
            ExperimentKind::Contraction => {
                let Some(s) = &self.contraction else {
                    return bad("contraction needs a 'contraction' section".into());
                };
                if !(s.gap_step > 0.0 && s.gap_max >= 0.0 && s.sigma > 0.0) {
                    return bad("contraction grid needs gap_step > 0, gap_max >= 0 and sigma > 0".into());
                }
                s.unseparated_alt.interval().map_err(HarnessError::Config)?;
                s.contrast_alt.interval().map_err(HarnessError::Config)?;
            }
            ExperimentKind::Hellinger => {
                let Some(h) = &self.hellinger else {
                    return bad("hellinger needs a 'hellinger' section".into());
                };
                for (a, b) in &h.pairs {
                    a.expand().map_err(HarnessError::Config)?;
                    b.expand().map_err(HarnessError::Config)?;
                }
                if h.mc_draws < 1000 {
                    return bad("mc_draws must be at least 1000".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// `k` points from `a` to `b`, evenly spaced on a log scale.
pub fn geometric(a: f64, b: f64, k: usize) -> Vec<f64> {
    let r = (b / a).ln() / (k - 1) as f64;
    (0..k).map(|i| {
        let v = a * (r * i as f64).exp();
        // round to 6 significant digits so configs stay readable
        let scale = 10f64.powi(5 - v.log10().floor() as i32);
        (v * scale).round() / scale
    }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        for k in ExperimentKind::ALL {
            let c = ExperimentConfig::default_for(k);
            c.validate().unwrap_or_else(|e| panic!("{k}: {e}"));
            let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = ExperimentConfig::default_for(ExperimentKind::GmmOrdering);
        c.test = Some("nope".into());
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default_for(ExperimentKind::GmmOrdering);
        c.sample_sizes = vec![10, 10];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default_for(ExperimentKind::GmmOrdering);
        c.regimes.as_mut().unwrap().symmetries.push("mirror".into());
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_json("{\"experiment\": \"gmm-ordering\"}").is_err());
    }

    #[test]
    fn gap_range_expands() {
        let g = PointSpec::GmmGapRange {
            from: 0.0,
            to: 3.0,
            step: 0.05,
            sigma: 1.0,
            pi1: 0.5,
        };
        assert_eq!(g.expand().unwrap().len(), 61);
    }

    #[test]
    fn point_spec_round_trip_keeps_factors() {
        let c = ExperimentConfig::default_for(ExperimentKind::RrrSign);
        let p = c.grid("null").unwrap().remove(0);
        let again = PointSpec::from_point(&p).expand().unwrap().remove(0);
        assert_eq!(p, again);
    }

    #[test]
    fn geometric_grid() {
        let g = geometric(0.05, 0.5, 8);
        assert_eq!(g.len(), 8);
        assert!((g[0] - 0.05).abs() < 1e-12 && (g[7] - 0.5).abs() < 1e-12);
    }
}
