//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::config::{ExperimentConfig, ExperimentKind};
use super::run::{find_config_witness, parse_point, run_experiment, RunSummary};
use super::HarnessError;
use crate::divergence::{hellinger2_auto, hellinger2_monte_carlo, hellinger2_quadrature, DivergenceOptions, QuadratureSpec};
use crate::equivalence::{OBSERVABLE_NAMES, SYMMETRY_NAMES};
use crate::testing::TEST_NAMES;

#[derive(Debug, Parser)]
#[command(name = "singulab", about = "Testability experiments for singular statistical models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment from a JSON configuration file
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        /// Output directory (overrides the configured one)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Squared Hellinger distance between two model points
    Hellinger {
        /// `gmm:mu1,mu2,sigma[,pi1]` or `rrr:QxP:c11,c12,...:sigma_eps`
        a: String,
        b: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[arg(long, default_value_t = 200_000)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search the default configuration of an experiment for an overlap witness
    Witness { experiment: String },
    /// Print the default configuration of an experiment as JSON
    Config { experiment: String },
    /// List experiments, tests, observables and symmetries
    List,
    /// Print the version
    Version,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Quadrature,
    Mc,
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run_cli<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "singulab: {e}");
            e.exit_code()
        }
    }
}

fn io_err(e: std::io::Error) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), HarnessError> {
    match cmd {
        Command::Run { config, seed, reps, out: dir } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(r) = reps {
                cfg.reps = r;
            }
            if let Some(d) = dir {
                cfg.output_dir = d;
            }
            let summary = run_experiment(&cfg)?;
            report(&cfg, &summary, out).map_err(io_err)?;
            writeln!(out, "wrote {}", cfg.output_dir.display()).map_err(io_err)
        }
        Command::Hellinger { a, b, method, draws, seed } => {
            let p = parse_point(&a).map_err(HarnessError::Config)?;
            let q = parse_point(&b).map_err(HarnessError::Config)?;
            let est = match method {
                MethodArg::Quadrature => hellinger2_quadrature(&p, &q, &QuadratureSpec::default())?,
                MethodArg::Mc => hellinger2_monte_carlo(&p, &q, draws, seed)?,
                MethodArg::Auto => {
                    let opts = DivergenceOptions {
                        mc_draws: draws,
                        mc_seed: seed,
                        ..DivergenceOptions::default()
                    };
                    hellinger2_auto(&p, &q, &opts, &[])?
                }
            };
            writeln!(
                out,
                "h2 = {}\nh = {}\nerror_radius = {}\nmethod = {:?}\nn_eval = {}",
                est.h2,
                est.h(),
                est.error_radius,
                est.method,
                est.n_eval
            )
            .map_err(io_err)
        }
        Command::Witness { experiment } => {
            let kind = ExperimentKind::from_name(&experiment)
                .ok_or_else(|| HarnessError::Config(format!("unknown experiment '{experiment}'")))?;
            let cfg = ExperimentConfig::default_for(kind);
            if cfg.regimes.is_none() {
                return Err(HarnessError::Config(format!("experiment '{kind}' has no hypothesis pair")));
            }
            match find_config_witness(&cfg)? {
                Some(w) => writeln!(
                    out,
                    "witness found\nw0 = {}\nw1 = {}\nmax log-density discrepancy = {:e}",
                    w.w0(),
                    w.w1(),
                    w.shared_distribution_check()
                ),
                None => writeln!(out, "no overlap witness among the configured points"),
            }
            .map_err(io_err)
        }
        Command::Config { experiment } => {
            let kind = ExperimentKind::from_name(&experiment)
                .ok_or_else(|| HarnessError::Config(format!("unknown experiment '{experiment}'")))?;
            writeln!(out, "{}", ExperimentConfig::default_for(kind).to_json()).map_err(io_err)
        }
        Command::List => {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            writeln!(out, "experiments: {}", names.join(", ")).map_err(io_err)?;
            writeln!(out, "tests: {}", TEST_NAMES.join(", ")).map_err(io_err)?;
            writeln!(out, "observables: {}", OBSERVABLE_NAMES.join(", ")).map_err(io_err)?;
            writeln!(out, "symmetries: {}", SYMMETRY_NAMES.join(", ")).map_err(io_err)
        }
        Command::Version => writeln!(out, "singulab {}", crate::VERSION).map_err(io_err),
    }
}

fn report(cfg: &ExperimentConfig, summary: &RunSummary, out: &mut dyn Write) -> std::io::Result<()> {
    match summary {
        RunSummary::ErrorCurve(r) => {
            let c = &r.curve;
            writeln!(out, "{} with {} ({} reps)", cfg.experiment, c.test_name, c.reps)?;
            if r.witness.is_some() {
                writeln!(out, "overlap witness present")?;
            }
            for ((n, a), (b, s)) in c.sample_sizes.iter().zip(&c.alpha_hat).zip(c.beta_hat.iter().zip(c.sums())) {
                writeln!(out, "n = {n:>6}  alpha = {a:.4}  beta = {b:.4}  sum = {s:.4}")?;
            }
        }
        RunSummary::ScaleScan(r) => {
            match r.a_hat {
                Some(a) => writeln!(out, "a_hat = {a:.4}")?,
                None => writeln!(out, "exponent fit failed")?,
            }
            for (d, row) in r.delta_values.iter().zip(&r.power_matrix) {
                let cells: Vec<String> = row.iter().map(|p| format!("{p:.3}")).collect();
                writeln!(out, "delta = {d:<5} power = {}", cells.join(" "))?;
            }
        }
        RunSummary::Contraction(r) => {
            for (k, n) in r.separated.sample_sizes.iter().enumerate() {
                writeln!(
                    out,
                    "n = {n:>6}  separated = {:.3e}  unseparated = {:.3}  contrast = {:.3e}",
                    r.separated.posterior_mass_alt[k],
                    r.unseparated.posterior_mass_alt[k],
                    r.contrast.posterior_mass_alt[k]
                )?;
            }
        }
        RunSummary::Hellinger(r) => {
            for (a, b, e) in &r.pairs {
                writeln!(out, "H^2({a}, {b}) = {:.6e} +/- {:.1e}", e.h2, e.error_radius)?;
            }
            for (family, fit) in &r.fits {
                match fit {
                    Ok(f) => writeln!(out, "{}: a_hat = {:.4}, r^2 = {:.4}", family.name(), f.a_hat, f.r_squared)?,
                    Err(e) => writeln!(out, "{}: fit failed: {e}", family.name())?,
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_cli(std::iter::once("singulab").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["bogus"]).0, 2);
        let (code, _, err) = call(&["run", "/nonexistent/cfg.json"]);
        assert_eq!(code, 2);
        assert!(err.contains("/nonexistent/cfg.json"));
        assert_eq!(call(&["version"]).0, 0);
        assert_eq!(call(&["witness", "contraction"]).0, 2);
    }

    #[test]
    fn hellinger_command() {
        let (code, out, _) = call(&["hellinger", "gmm:0,0,1", "gmm:1,1,1"]);
        assert_eq!(code, 0);
        let h2: f64 = out.lines().next().unwrap()[5..].parse().unwrap();
        assert!((h2 - (1.0 - (-0.125f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn witness_command() {
        let (code, out, _) = call(&["witness", "gmm-ordering"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("witness found"));
        let (code, out, _) = call(&["witness", "gmm-mixture"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("no overlap witness"));
    }
}
