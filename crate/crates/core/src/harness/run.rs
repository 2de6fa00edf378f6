use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{
    expand_grid, ContractionSpec, EpsilonSpec, ExperimentConfig, ExperimentKind, FamilyName, PointSpec, TargetSpec,
};
use super::svg::{Heatmap, LineChart, Series};
use super::HarnessError;
use crate::contraction::{
    contraction_experiment, grid_separation, nonseparation_demo, prior_mass_condition, ContractionTrace,
    EpsilonSchedule, GridPrior,
};
use crate::divergence::{
    fit_separation_exponent_with, hellinger2_auto, regime_separation, DivergenceOptions, ExponentFit,
    HellingerEstimate, HellingerMethod, SeparationReport,
};
use crate::equivalence::{find_overlap_witness, probe_grid, ProbeBounds, DEFAULT_PROBE_COUNT, Interval, Observable, OverlapWitness, Regime, RegimeLabel, TargetSet};
use crate::model::{ModelPoint, RrrParams};
use crate::testing::{estimate_error_curve_unchecked, mc_half_width, rates_at, test_by_name, ErrorCurve};

pub const ERROR_CURVE_COLUMNS: &[&str] = &[
    "experiment",
    "n",
    "grid_point_id",
    "alpha_hat",
    "beta_hat",
    "sum",
    "mc_half_width",
    "seed",
];
pub const SCAN_COLUMNS: &[&str] = &["experiment", "delta", "n", "power", "detectability_product", "mc_half_width", "seed"];
pub const CONTRACTION_COLUMNS: &[&str] = &[
    "experiment",
    "n",
    "config",
    "epsilon",
    "posterior_mass_alt",
    "std_error",
    "prior_mass_alt",
    "seed",
];
pub const HELLINGER_COLUMNS: &[&str] = &["experiment", "item", "delta", "h2", "error_radius", "method", "n_eval"];

/// File contents of one run, before they are written.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub csv: String,
    pub json: Value,
    pub svg: String,
    pub manifest: Value,
}

#[derive(Debug, Clone)]
pub struct ErrorCurveRun {
    pub curve: ErrorCurve<f64>,
    pub witness: Option<OverlapWitness<f64>>,
    pub separation: Option<SeparationReport<f64>>,
}

/// Power over the `(delta, n)` grid of the variance-matched mixture family.
#[derive(Debug, Clone)]
pub struct ScaleScanResult {
    pub delta_values: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    /// `power_matrix[i][j]` at `delta_values[i]`, `sample_sizes[j]`.
    pub power_matrix: Vec<Vec<f64>>,
    pub a_hat: Option<f64>,
    pub exponent_fit: Option<ExponentFit<f64>>,
    /// `n delta^(2 a_hat)`, present when the exponent fit succeeded.
    pub detectability_products: Option<Vec<Vec<f64>>>,
    pub mc_half_width: f64,
    pub level: f64,
}

#[derive(Debug, Clone)]
pub struct ContractionRun {
    pub separated: ContractionTrace<f64>,
    pub unseparated: ContractionTrace<f64>,
    pub contrast: ContractionTrace<f64>,
    pub unseparated_grid_separation: f64,
    pub contrast_grid_separation: f64,
    /// Prior mass of the Hellinger ball of radius `eps_n` around the truth.
    pub prior_ball_mass: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HellingerRun {
    pub pairs: Vec<(ModelPoint<f64>, ModelPoint<f64>, HellingerEstimate<f64>)>,
    pub fits: Vec<(FamilyName, Result<ExponentFit<f64>, String>)>,
}

#[derive(Debug, Clone)]
pub enum RunSummary {
    ErrorCurve(Box<ErrorCurveRun>),
    ScaleScan(Box<ScaleScanResult>),
    Contraction(Box<ContractionRun>),
    Hellinger(Box<HellingerRun>),
}

/// Grids of an error-curve experiment after witness injection.
#[derive(Debug, Clone)]
pub struct PreparedGrids {
    pub null: Vec<ModelPoint<f64>>,
    pub alt: Vec<ModelPoint<f64>>,
    pub witness: Option<OverlapWitness<f64>>,
}

/// Searches the configured regimes and symmetries for an overlap witness,
/// probing every configured grid point.
pub fn find_config_witness(cfg: &ExperimentConfig) -> Result<Option<OverlapWitness<f64>>, HarnessError> {
    let Some(spec) = &cfg.regimes else {
        return Ok(None);
    };
    let r = spec.resolve().map_err(HarnessError::Config)?;
    let mut probes = Vec::new();
    for grid in cfg.model_grids.values() {
        probes.extend(expand_grid(grid).map_err(HarnessError::Config)?);
    }
    if probes.is_empty() || r.group.is_empty() {
        return Ok(None);
    }
    // configured points first, so a witness among them is preferred
    let extra = probe_grid(&probes[0], DEFAULT_PROBE_COUNT, &ProbeBounds::default(), cfg.base_seed)?;
    probes.extend(extra);
    Ok(find_overlap_witness(&r.null, &r.alt, &r.group, &probes)?)
}

/// Expands the `null` and `alt` grids and injects an overlap witness into
/// both when one exists, so that grid coarseness never hides an overlap.
pub fn prepare_grids(cfg: &ExperimentConfig) -> Result<PreparedGrids, HarnessError> {
    let mut null = cfg.grid("null")?;
    let mut alt = cfg.grid("alt")?;
    let witness = find_config_witness(cfg)?;
    if let Some(w) = &witness {
        if !null.contains(w.w0()) {
            null.push(w.w0().clone());
        }
        if !alt.contains(w.w1()) {
            alt.push(w.w1().clone());
        }
    }
    if null.is_empty() || alt.is_empty() {
        return Err(HarnessError::Config(
            "null or alternative grid is empty after witness injection".into(),
        ));
    }
    Ok(PreparedGrids { null, alt, witness })
}

// shortest round-trip form, in exponent notation away from unit scale
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn csv_header(cols: &[&str]) -> String {
    let mut s = cols.join(",");
    s.push('\n');
    s
}

fn point_json(p: &ModelPoint<f64>) -> Value {
    json!({ "label": p.to_string(), "spec": PointSpec::from_point(p) })
}

fn manifest(cfg: &ExperimentConfig, columns: &[&str], extra_notes: &[&str]) -> Value {
    let mut notes = vec![
        "numeric defaults (sample sizes, replication counts, levels, grids) are artifact choices",
        "replication r at sample size n uses the same random stream at every grid point",
        "power = 1 - beta_hat",
    ];
    notes.extend_from_slice(extra_notes);
    json!({
        "tool": "singulab",
        "version": crate::VERSION,
        "experiment": cfg.experiment.name(),
        "base_seed": cfg.base_seed,
        "csv_columns": columns,
        "files": ["results.csv", "results.json", "plot.svg", "manifest.json"],
        "notes": notes,
        "config": serde_json::to_value(cfg).unwrap_or(Value::Null),
    })
}

fn run_error_curve(cfg: &ExperimentConfig) -> Result<(ErrorCurveRun, Artifacts), HarnessError> {
    let grids = prepare_grids(cfg)?;
    let cal = cfg.calibration.resolve().map_err(HarnessError::Config)?;
    let em = cfg.em.resolve().map_err(HarnessError::Config)?;
    let test = test_by_name::<f64>(cfg.test_name(), cal, em, cfg.r0.unwrap_or(0))
        .ok_or_else(|| HarnessError::Config(format!("unknown test '{}'", cfg.test_name())))?;
    info!(
        "{}: {} null and {} alternative points, n = {:?}, {} reps",
        cfg.experiment,
        grids.null.len(),
        grids.alt.len(),
        cfg.sample_sizes,
        cfg.reps
    );
    let curve = estimate_error_curve_unchecked(
        test.as_ref(),
        &grids.null,
        &grids.alt,
        &cfg.sample_sizes,
        cfg.reps,
        cfg.base_seed,
    )?;
    let separation = match regime_separation(&grids.null, &grids.alt) {
        Ok(s) => Some(s),
        Err(e) => {
            warn!("regime separation unavailable: {e}");
            None
        }
    };
    let run = ErrorCurveRun {
        curve,
        witness: grids.witness,
        separation,
    };
    let art = error_curve_artifacts(cfg, &run);
    Ok((run, art))
}

fn error_curve_artifacts(cfg: &ExperimentConfig, run: &ErrorCurveRun) -> Artifacts {
    let c = &run.curve;
    let sums = c.sums();
    let mut csv = csv_header(ERROR_CURVE_COLUMNS);
    let mut data = String::from("n,alpha_hat,beta_hat,sum\n");
    for (k, &n) in c.sample_sizes.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},null:{}|alt:{},{},{},{},{},{}",
            cfg.experiment,
            n,
            c.worst_null[k],
            c.worst_alt[k],
            num(c.alpha_hat[k]),
            num(c.beta_hat[k]),
            num(sums[k]),
            num(c.mc_half_width[k]),
            cfg.base_seed
        );
        let _ = writeln!(data, "{n},{},{},{}", num(c.alpha_hat[k]), num(c.beta_hat[k]), num(sums[k]));
    }
    let xs: Vec<f64> = c.sample_sizes.iter().map(|&n| n as f64).collect();
    let series = |label: &str, ys: &[f64], dashed: bool| Series {
        label: label.into(),
        points: xs.iter().copied().zip(ys.iter().copied()).collect(),
        dashed,
    };
    let chart = LineChart {
        title: format!("{}: worst-case errors", cfg.experiment),
        x_label: "sample size n".into(),
        y_label: "empirical error".into(),
        log_x: true,
        log_y: false,
        y_range: Some((0.0, 1.2)),
        series: vec![
            series("alpha_hat", &c.alpha_hat, false),
            series("beta_hat", &c.beta_hat, false),
            series("alpha + beta", &sums, true),
        ],
        hlines: vec![(cfg.calibration.level, "nominal level".into()), (1.0, "1".into())],
    };
    let per_point: Vec<Value> = c
        .sample_sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let rates = |rs: &[crate::testing::PointRates]| -> Vec<Value> {
                rs.iter()
                    .map(|r| {
                        json!({
                            "rejection_rate": r.rejection_rate(),
                            "completed": r.completed(),
                            "failures": r.failures,
                            "em_not_converged": r.em_not_converged,
                            "sign_ties": r.sign_ties,
                        })
                    })
                    .collect()
            };
            json!({ "n": n, "null": rates(&c.null_rates[k]), "alt": rates(&c.alt_rates[k]) })
        })
        .collect();
    let json = json!({
        "experiment": cfg.experiment.name(),
        "test": c.test_name,
        "sample_sizes": c.sample_sizes,
        "reps": c.reps,
        "alpha_hat": c.alpha_hat,
        "beta_hat": c.beta_hat,
        "sum": sums,
        "power": c.power(),
        "mc_half_width": c.mc_half_width,
        "worst_null": c.worst_null,
        "worst_alt": c.worst_alt,
        "null_grid": c.null_grid.iter().map(point_json).collect::<Vec<_>>(),
        "alt_grid": c.alt_grid.iter().map(point_json).collect::<Vec<_>>(),
        "per_point": per_point,
        "witness": run.witness.as_ref().map(|w| json!({
            "w0": point_json(w.w0()),
            "w1": point_json(w.w1()),
            "max_log_density_discrepancy": w.shared_distribution_check(),
        })),
        "separation": run.separation.as_ref().map(|s| json!({
            "inf_h": s.inf_h,
            "argmin_index": [s.argmin_index.0, s.argmin_index.1],
            "grid_sizes": [s.grid_sizes.0, s.grid_sizes.1],
        })),
    });
    Artifacts {
        svg: chart.render(&data),
        csv,
        json,
        manifest: manifest(
            cfg,
            ERROR_CURVE_COLUMNS,
            &["grid_point_id names the worst null and alternative points as 'null:i|alt:j'"],
        ),
    }
}

/// Variance-matched symmetric mixture at distance `delta` from `N(0, 1)`.
pub fn scan_family_point(delta: f64) -> crate::Result<ModelPoint<f64>> {
    ModelPoint::gmm(-delta, delta, (1.0 - delta * delta).sqrt(), 0.5)
}

/// Power grid, exponent fit and heatmap for the single-Gaussian versus
/// mixture problem, along the variance-matched family.
pub fn run_scale_scan(cfg: &ExperimentConfig) -> Result<ScaleScanResult, HarnessError> {
    if cfg.experiment != ExperimentKind::ScaleScan {
        return Err(HarnessError::Config(format!("{} is not a scale scan", cfg.experiment)));
    }
    let (summary, art) = execute(cfg)?;
    write_artifacts(&cfg.output_dir, &art)?;
    match summary {
        RunSummary::ScaleScan(s) => Ok(*s),
        _ => unreachable!("scale scan returns a scan summary"),
    }
}

fn scan(cfg: &ExperimentConfig) -> Result<(ScaleScanResult, Artifacts), HarnessError> {
    let spec = cfg
        .scan
        .as_ref()
        .ok_or_else(|| HarnessError::Config("scale-scan needs a 'scan' section".into()))?;
    let cal = cfg.calibration.resolve().map_err(HarnessError::Config)?;
    let em = cfg.em.resolve().map_err(HarnessError::Config)?;
    let test = test_by_name::<f64>(cfg.test_name(), cal, em, 0)
        .ok_or_else(|| HarnessError::Config(format!("unknown test '{}'", cfg.test_name())))?;
    let points: Vec<ModelPoint<f64>> = spec
        .deltas
        .iter()
        .map(|&d| scan_family_point(d))
        .collect::<crate::Result<_>>()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut power = vec![vec![0.0; cfg.sample_sizes.len()]; points.len()];
    for (j, &n) in cfg.sample_sizes.iter().enumerate() {
        info!("scale scan: n = {n}");
        let rates = rates_at(test.as_ref(), &points, n, cfg.reps, cfg.base_seed)?;
        let failed: usize = rates.iter().map(|r| r.failures).sum();
        if failed * 100 > rates.len() * cfg.reps {
            let first = rates.iter().find_map(|r| r.first_error.clone());
            return Err(HarnessError::Runtime(format!(
                "{failed} of {} replications failed at n = {n}: {}",
                rates.len() * cfg.reps,
                first.map(|e| e.to_string()).unwrap_or_default()
            )));
        }
        for (i, r) in rates.iter().enumerate() {
            power[i][j] = r.rejection_rate();
        }
    }
    let reference = ModelPoint::gmm(0.0, 0.0, 1.0, 0.5)?;
    let family = |d: f64| scan_family_point(d);
    let fit = match fit_separation_exponent_with(&family, &reference, &spec.fit_deltas, &DivergenceOptions::default()) {
        Ok(f) => Some(f),
        Err(e) => {
            warn!("exponent fit failed ({e}); reporting the raw power matrix");
            None
        }
    };
    let a_hat = fit.as_ref().map(|f| f.a_hat);
    let products = a_hat.map(|a| {
        spec.deltas
            .iter()
            .map(|&d| cfg.sample_sizes.iter().map(|&n| n as f64 * d.powf(2.0 * a)).collect())
            .collect::<Vec<Vec<f64>>>()
    });
    let result = ScaleScanResult {
        delta_values: spec.deltas.clone(),
        sample_sizes: cfg.sample_sizes.clone(),
        power_matrix: power,
        a_hat,
        exponent_fit: fit,
        detectability_products: products,
        mc_half_width: mc_half_width(cfg.reps),
        level: cal.level,
    };
    let art = scan_artifacts(cfg, &result, &spec.contour_levels);
    Ok((result, art))
}

// Fractional column index of `n` on the log-n axis through the column centres.
fn column_position(sizes: &[usize], n: f64) -> f64 {
    let logs: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let x = n.ln();
    let k = logs.len();
    if k == 1 {
        return 0.0;
    }
    let seg = logs.windows(2).position(|w| x <= w[1]).unwrap_or(k - 2);
    seg as f64 + (x - logs[seg]) / (logs[seg + 1] - logs[seg])
}

fn scan_artifacts(cfg: &ExperimentConfig, r: &ScaleScanResult, levels: &[f64]) -> Artifacts {
    let mut csv = csv_header(SCAN_COLUMNS);
    for (i, &d) in r.delta_values.iter().enumerate() {
        for (j, &n) in r.sample_sizes.iter().enumerate() {
            let prod = r
                .detectability_products
                .as_ref()
                .map(|p| num(p[i][j]))
                .unwrap_or_default();
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                cfg.experiment,
                num(d),
                n,
                num(r.power_matrix[i][j]),
                prod,
                num(r.mc_half_width),
                cfg.base_seed
            );
        }
    }
    let data: String = std::iter::once("delta,n,power\n".to_string())
        .chain(r.delta_values.iter().enumerate().flat_map(|(i, d)| {
            r.sample_sizes
                .iter()
                .enumerate()
                .map(move |(j, n)| format!("{},{},{}\n", num(*d), n, num(r.power_matrix[i][j])))
        }))
        .collect();
    let mut curves = Vec::new();
    if let Some(a) = r.a_hat {
        let nc = r.sample_sizes.len() as f64;
        for &level in levels {
            let mut pts = Vec::new();
            for (i, &d) in r.delta_values.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                let c = column_position(&r.sample_sizes, level / d.powf(2.0 * a));
                if (-0.5..=nc - 0.5).contains(&c) {
                    pts.push((c, i as f64));
                }
            }
            curves.push((format!("n delta^(2a) = {}", num(level)), pts));
        }
    }
    let title = match r.a_hat {
        Some(a) => format!("power of the mixture test (a_hat = {a:.3})"),
        None => "power of the mixture test (exponent fit failed)".to_string(),
    };
    let heat = Heatmap {
        title,
        x_label: "sample size n".into(),
        y_label: "delta".into(),
        row_values: r.delta_values.clone(),
        col_values: r.sample_sizes.iter().map(|&n| n as f64).collect(),
        values: r.power_matrix.clone(),
        curves,
    };
    let json = json!({
        "experiment": cfg.experiment.name(),
        "family": "1/2 N(-delta, 1 - delta^2) + 1/2 N(delta, 1 - delta^2) against N(0, 1)",
        "delta_values": r.delta_values,
        "sample_sizes": r.sample_sizes,
        "power_matrix": r.power_matrix,
        "a_hat": r.a_hat,
        "exponent_fit": r.exponent_fit.as_ref().map(|f| json!({
            "a_hat": f.a_hat, "intercept": f.intercept, "r_squared": f.r_squared,
            "deltas": f.deltas, "h_values": f.h_values, "dropped": f.dropped,
        })),
        "detectability_products": r.detectability_products,
        "mc_half_width": r.mc_half_width,
        "level": r.level,
    });
    Artifacts {
        svg: heat.render(&data),
        csv,
        json,
        manifest: manifest(
            cfg,
            SCAN_COLUMNS,
            &["detectability_product is empty when the exponent fit failed"],
        ),
    }
}

fn gap_regime(target: &TargetSpec, label: RegimeLabel) -> Result<Regime<f64>, HarnessError> {
    Ok(Regime::new(
        Observable::gmm_abs_gap(),
        TargetSet::interval(target.interval().map_err(HarnessError::Config)?),
        label,
    ))
}

fn contraction(cfg: &ExperimentConfig) -> Result<(ContractionRun, Artifacts), HarnessError> {
    let spec: &ContractionSpec = cfg
        .contraction
        .as_ref()
        .ok_or_else(|| HarnessError::Config("contraction needs a 'contraction' section".into()))?;
    let grid = PointSpec::GmmGapRange {
        from: 0.0,
        to: spec.gap_max,
        step: spec.gap_step,
        sigma: spec.sigma,
        pi1: 0.5,
    }
    .expand()
    .map_err(HarnessError::Config)?;
    let prior = GridPrior::uniform(grid)?;
    let truth = ModelPoint::gmm(-spec.truth_gap / 2.0, spec.truth_gap / 2.0, spec.sigma, 0.5)?;
    let null = Regime::new(
        Observable::gmm_abs_gap(),
        TargetSet::interval(Interval::point(0.0)),
        RegimeLabel::Null,
    );
    let schedule = match spec.epsilon {
        EpsilonSpec::Fixed(e) => EpsilonSchedule::Fixed(e),
        EpsilonSpec::Quartic(e) => EpsilonSchedule::Quartic(e),
    };
    let eps = schedule.values(&cfg.sample_sizes);
    let (n, reps, seed) = (&cfg.sample_sizes, cfg.reps, cfg.base_seed);
    let separated = contraction_experiment(&prior, &truth, &null, &eps, n, reps, seed)?;
    let unsep_regime = gap_regime(&spec.unseparated_alt, RegimeLabel::Alternative)?;
    let contrast_regime = gap_regime(&spec.contrast_alt, RegimeLabel::Alternative)?;
    let unseparated = nonseparation_demo(&prior, &truth, &null, &unsep_regime, n, reps, seed)?;
    let contrast = nonseparation_demo(&prior, &truth, &null, &contrast_regime, n, reps, seed)?;
    let mask = |r: &Regime<f64>| prior.points().iter().map(|p| r.contains(p)).collect::<Vec<_>>();
    let run = ContractionRun {
        unseparated_grid_separation: grid_separation(&separated.distance_to_null, &mask(&unsep_regime)),
        contrast_grid_separation: grid_separation(&separated.distance_to_null, &mask(&contrast_regime)),
        prior_ball_mass: eps
            .iter()
            .zip(n)
            .map(|(&e, &nn)| prior_mass_condition(&prior, &truth, e, nn, 1.0).map(|m| m.0))
            .collect::<crate::Result<_>>()?,
        separated,
        unseparated,
        contrast,
    };
    let art = contraction_artifacts(cfg, &run);
    Ok((run, art))
}

fn contraction_artifacts(cfg: &ExperimentConfig, r: &ContractionRun) -> Artifacts {
    let mut csv = csv_header(CONTRACTION_COLUMNS);
    let mut data = String::from("n,config,posterior_mass_alt\n");
    let traces = [("separated", &r.separated), ("unseparated", &r.unseparated), ("contrast", &r.contrast)];
    for (name, t) in traces {
        for (k, &n) in t.sample_sizes.iter().enumerate() {
            let eps = t.epsilon_schedule.get(k).map(|e| num(*e)).unwrap_or_default();
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                cfg.experiment,
                n,
                name,
                eps,
                num(t.posterior_mass_alt[k]),
                num(t.std_error[k]),
                num(t.prior_mass_alt[k]),
                t.seed
            );
            let _ = writeln!(data, "{n},{name},{}", num(t.posterior_mass_alt[k]));
        }
    }
    // log axis: masses below 1e-300 are clipped for display only
    let series = |label: &str, t: &ContractionTrace<f64>, dashed: bool| Series {
        label: label.into(),
        points: t
            .sample_sizes
            .iter()
            .zip(&t.posterior_mass_alt)
            .map(|(&n, &m)| (n as f64, m.max(1e-300)))
            .collect(),
        dashed,
    };
    let chart = LineChart {
        title: "posterior mass on the alternative".into(),
        x_label: "sample size n".into(),
        y_label: "posterior mass".into(),
        log_x: true,
        log_y: true,
        y_range: None,
        series: vec![
            series("M1(eps_n), separated", &r.separated, false),
            series("gap > 0, unseparated", &r.unseparated, false),
            series("gap >= 1", &r.contrast, true),
        ],
        hlines: vec![],
    };
    let trace_json = |t: &ContractionTrace<f64>| {
        json!({
            "sample_sizes": t.sample_sizes,
            "posterior_mass_alt": t.posterior_mass_alt,
            "std_error": t.std_error,
            "epsilon_schedule": t.epsilon_schedule,
            "prior_mass_alt": t.prior_mass_alt,
        })
    };
    let json = json!({
        "experiment": cfg.experiment.name(),
        "truth": point_json(&r.separated.truth),
        "reps": r.separated.reps,
        "separated": trace_json(&r.separated),
        "unseparated": trace_json(&r.unseparated),
        "contrast": trace_json(&r.contrast),
        "distance_to_null": r.separated.distance_to_null,
        "unseparated_grid_separation": r.unseparated_grid_separation,
        "contrast_grid_separation": r.contrast_grid_separation,
        "prior_ball_mass": r.prior_ball_mass,
    });
    Artifacts {
        svg: chart.render(&data),
        csv,
        json,
        manifest: manifest(
            cfg,
            CONTRACTION_COLUMNS,
            &["epsilon is empty for the unseparated and contrast traces, which have no separation floor"],
        ),
    }
}

fn family_point(family: FamilyName, delta: f64) -> crate::Result<ModelPoint<f64>> {
    match family {
        FamilyName::GaussianLocation => ModelPoint::gmm(delta, delta, 1.0, 0.5),
        FamilyName::SymmetricMixture => ModelPoint::gmm(-delta, delta, 1.0, 0.5),
        FamilyName::VarianceMatchedMixture => scan_family_point(delta),
        FamilyName::RrrSingularValue => {
            let u = DMatrix::from_row_slice(2, 2, &[0.8, -0.6, 0.6, 0.8]);
            let v = DMatrix::from_row_slice(3, 2, &[0.6, 0.0, 0.0, 1.0, 0.8, 0.0]);
            RrrParams::from_factors(u, DVector::from_column_slice(&[1.0, delta]), v, 1.0).map(ModelPoint::Rrr)
        }
    }
}

/// Reference point of a family (its `delta = 0` member).
pub fn family_reference(family: FamilyName) -> crate::Result<ModelPoint<f64>> {
    family_point(family, 0.0)
}

fn hellinger(cfg: &ExperimentConfig) -> Result<(HellingerRun, Artifacts), HarnessError> {
    let spec = cfg
        .hellinger
        .as_ref()
        .ok_or_else(|| HarnessError::Config("hellinger needs a 'hellinger' section".into()))?;
    let opts = DivergenceOptions {
        mc_draws: spec.mc_draws,
        mc_seed: cfg.base_seed,
        ..DivergenceOptions::default()
    };
    let mut pairs = Vec::new();
    for (k, (a, b)) in spec.pairs.iter().enumerate() {
        let pa = a.expand().map_err(HarnessError::Config)?;
        let pb = b.expand().map_err(HarnessError::Config)?;
        if pa.len() != 1 || pb.len() != 1 {
            return Err(HarnessError::Config(format!("pair {k} must name single points")));
        }
        let e = hellinger2_auto(&pa[0], &pb[0], &opts, &[k as u64])?;
        pairs.push((pa[0].clone(), pb[0].clone(), e));
    }
    let fits: Vec<(FamilyName, Result<ExponentFit<f64>, String>)> = spec
        .exponent_fits
        .par_iter()
        .map(|f| {
            let family = |d: f64| family_point(f.family, d);
            let fit = family_reference(f.family)
                .and_then(|r| fit_separation_exponent_with(&family, &r, &f.deltas, &opts))
                .map_err(|e| e.to_string());
            (f.family, fit)
        })
        .collect();
    let run = HellingerRun { pairs, fits };
    let art = hellinger_artifacts(cfg, &run);
    Ok((run, art))
}

fn method_name(m: HellingerMethod) -> &'static str {
    match m {
        HellingerMethod::Quadrature => "quadrature",
        HellingerMethod::MonteCarlo => "monte-carlo",
    }
}

fn hellinger_artifacts(cfg: &ExperimentConfig, r: &HellingerRun) -> Artifacts {
    let mut csv = csv_header(HELLINGER_COLUMNS);
    let mut data = String::from("family,delta,h\n");
    for (k, (_, _, e)) in r.pairs.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},pair:{k},,{},{},{},{}",
            cfg.experiment,
            num(e.h2),
            num(e.error_radius),
            method_name(e.method),
            e.n_eval
        );
    }
    let mut series = Vec::new();
    for (family, fit) in &r.fits {
        if let Ok(f) = fit {
            for (d, h) in f.deltas.iter().zip(&f.h_values) {
                let _ = writeln!(csv, "{},fit:{},{},{},,,", cfg.experiment, family.name(), num(*d), num(h * h));
                let _ = writeln!(data, "{},{},{}", family.name(), num(*d), num(*h));
            }
            series.push(Series {
                label: format!("{} (a = {:.2})", family.name(), f.a_hat),
                points: f.deltas.iter().copied().zip(f.h_values.iter().copied()).collect(),
                dashed: false,
            });
        }
    }
    let chart = LineChart {
        title: "Hellinger distance near the singular stratum".into(),
        x_label: "delta".into(),
        y_label: "h".into(),
        log_x: true,
        log_y: true,
        y_range: None,
        series,
        hlines: vec![],
    };
    let json = json!({
        "experiment": cfg.experiment.name(),
        "pairs": r.pairs.iter().map(|(a, b, e)| json!({
            "a": point_json(a), "b": point_json(b), "h2": e.h2, "h": e.h(),
            "error_radius": e.error_radius, "method": method_name(e.method), "n_eval": e.n_eval,
        })).collect::<Vec<_>>(),
        "exponent_fits": r.fits.iter().map(|(family, fit)| match fit {
            Ok(f) => json!({
                "family": family.name(), "a_hat": f.a_hat, "intercept": f.intercept,
                "r_squared": f.r_squared, "deltas": f.deltas, "h_values": f.h_values, "dropped": f.dropped,
            }),
            Err(e) => json!({ "family": family.name(), "error": e }),
        }).collect::<Vec<_>>(),
    });
    Artifacts {
        svg: chart.render(&data),
        csv,
        json,
        manifest: manifest(
            cfg,
            HELLINGER_COLUMNS,
            &["fit rows carry h^2 only; exponent estimates are in results.json"],
        ),
    }
}

/// Runs an experiment without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<(RunSummary, Artifacts), HarnessError> {
    cfg.validate()?;
    Ok(match cfg.experiment {
        k if k.is_error_curve() => {
            let (r, a) = run_error_curve(cfg)?;
            (RunSummary::ErrorCurve(Box::new(r)), a)
        }
        ExperimentKind::ScaleScan => {
            let (r, a) = scan(cfg)?;
            (RunSummary::ScaleScan(Box::new(r)), a)
        }
        ExperimentKind::Contraction => {
            let (r, a) = contraction(cfg)?;
            (RunSummary::Contraction(Box::new(r)), a)
        }
        _ => {
            let (r, a) = hellinger(cfg)?;
            (RunSummary::Hellinger(Box::new(r)), a)
        }
    })
}

pub fn write_artifacts(dir: &Path, art: &Artifacts) -> Result<(), HarnessError> {
    let io = |p: &Path, e: std::io::Error| HarnessError::Runtime(format!("cannot write {}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let files: [(&str, String); 4] = [
        ("results.csv", art.csv.clone()),
        ("results.json", pretty(&art.json)),
        ("plot.svg", art.svg.clone()),
        ("manifest.json", pretty(&art.manifest)),
    ];
    for (name, body) in files {
        let p: PathBuf = dir.join(name);
        std::fs::write(&p, body).map_err(|e| io(&p, e))?;
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

/// Runs an experiment and writes `results.csv`, `results.json`, `plot.svg`
/// and `manifest.json` into its output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    let (summary, art) = execute(cfg)?;
    write_artifacts(&cfg.output_dir, &art)?;
    Ok(summary)
}

/// Parses `gmm:mu1,mu2,sigma,pi1` or `rrr:QxP:c11,c12,...:sigma_eps` (the
/// coefficients row by row).
pub fn parse_point(text: &str) -> Result<ModelPoint<f64>, String> {
    let nums = |s: &str| -> Result<Vec<f64>, String> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("'{v}' is not a number")))
            .collect()
    };
    let (kind, rest) = text.split_once(':').ok_or("expected 'gmm:...' or 'rrr:...'")?;
    match kind {
        "gmm" => {
            let v = nums(rest)?;
            let pi1 = match v.len() {
                3 => 0.5,
                4 => v[3],
                _ => return Err("gmm needs mu1,mu2,sigma[,pi1]".into()),
            };
            ModelPoint::gmm(v[0], v[1], v[2], pi1).map_err(|e| e.to_string())
        }
        "rrr" => {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err("rrr needs QxP:coefficients:sigma_eps".into());
            }
            let (q, p) = parts[0].split_once('x').ok_or("dimensions must look like 2x3")?;
            let q: usize = q.parse().map_err(|_| "bad row count")?;
            let p: usize = p.parse().map_err(|_| "bad column count")?;
            let c = nums(parts[1])?;
            if c.len() != q * p || q == 0 || p == 0 {
                return Err(format!("expected {} coefficients, got {}", q * p, c.len()));
            }
            let sigma: f64 = parts[2].trim().parse().map_err(|_| "bad sigma_eps")?;
            RrrParams::from_coef(DMatrix::from_row_slice(q, p, &c), sigma)
                .map(ModelPoint::Rrr)
                .map_err(|e| e.to_string())
        }
        other => Err(format!("unknown model kind '{other}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_syntax() {
        let g = parse_point("gmm:-1,1,1,0.5").unwrap();
        assert_eq!(g, ModelPoint::gmm(-1.0, 1.0, 1.0, 0.5).unwrap());
        assert!(parse_point("gmm:0,0,-1").is_err());
        let r = parse_point("rrr:2x3:1,0,0,0,0.5,0:1").unwrap();
        assert_eq!(r.as_rrr().unwrap().coef().shape(), (2, 3));
        assert!(parse_point("rrr:2x3:1,0:1").is_err());
        assert!(parse_point("poisson:1").is_err());
    }

    #[test]
    fn witness_is_injected_for_ordering() {
        let cfg = ExperimentConfig::default_for(ExperimentKind::GmmOrdering);
        let g = prepare_grids(&cfg).unwrap();
        assert!(g.witness.is_some());
        assert_eq!(g.alt, vec![ModelPoint::gmm(-2.0, 2.0, 1.0, 0.5).unwrap()]);
        let cfg = ExperimentConfig::default_for(ExperimentKind::GmmMixture);
        assert!(prepare_grids(&cfg).unwrap().witness.is_none());
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0, 0.05, 2.354e-24, 1e-4, 9.9e-5, 3e20, -1.5e-7] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(2.5e-24), "2.5e-24");
        assert_eq!(num(0.125), "0.125");
    }

    #[test]
    fn column_positions_interpolate_on_log_scale() {
        let sizes = [100, 1000, 10_000];
        assert!((column_position(&sizes, 1000.0) - 1.0).abs() < 1e-12);
        assert!((column_position(&sizes, 10f64.powf(2.5)) - 0.5).abs() < 1e-12);
        assert!((column_position(&sizes, 10.0) + 1.0).abs() < 1e-12);
    }
}
