use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wp_curvature::config::{RunConfig, Stage};
use wp_curvature::pipeline::{self, quaternionic_entry, surrogate_summary};
use wp_curvature::report::{explain, VerificationReport};
use wp_curvature::Error;

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ERROR: u8 = 3;

/// Curvature operator of the Weil-Petersson metric at a genus-2 surface, checked numerically.
#[derive(Parser, Debug)]
#[command(name = "wpcurv", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    mesh_level: Option<u32>,
    #[arg(long, global = true, value_name = "L")]
    word_length: Option<usize>,
    #[arg(long, global = true, value_name = "X")]
    tau_rel: Option<f64>,
    /// Surrogate seeds per dimension.
    #[arg(long, global = true, value_name = "K")]
    seeds: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Last stage to run: group, words, qdiff, mesh, green, pairings, tensor, q, spectrum, checks, surrogate, rankone.
    #[arg(long, global = true, value_name = "NAME")]
    stage: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full pipeline; writes artifacts and report.json.
    Run,
    /// Pipeline through the spectrum of Q.
    Spectrum,
    /// Synthetic-kernel property suite.
    Surrogate,
    /// Quaternionic hyperbolic 2-vector check.
    Rankone,
    /// Renders a saved report.
    Explain {
        /// Report file; defaults to report.json in the output directory.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
}

fn load_config(o: &Overrides) -> Result<RunConfig, Error> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = o.mesh_level {
        cfg.mesh_level = v;
    }
    if let Some(v) = o.word_length {
        cfg.word_length = v;
    }
    if let Some(v) = o.tau_rel {
        cfg.tau_rel = v;
    }
    if let Some(v) = o.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = &o.out {
        cfg.out = v.clone();
    }
    if let Some(s) = &o.stage {
        cfg.stage = Some(s.parse::<Stage>()?);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn verdict(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn execute(cli: Cli) -> Result<ExitCode, (u8, Error)> {
    let usage = |e: Error| (EXIT_USAGE, e);
    let failure = |e: Error| (EXIT_ERROR, e);
    let mut cfg = load_config(&cli.overrides).map_err(usage)?;
    match cli.command {
        Command::Run => {
            let run = pipeline::run(&cfg).map_err(failure)?;
            print!("{}", explain(&run.report).map_err(failure)?);
            println!("config {} -> {}", run.config_hash, cfg.out.display());
            Ok(verdict(run.report.all_passed()))
        }
        Command::Spectrum => {
            if cfg.stage.is_none_or(|s| s > Stage::Spectrum) {
                cfg.stage = Some(Stage::Spectrum);
            }
            let run = pipeline::run(&cfg).map_err(failure)?;
            let Some(spec) = &run.spectrum else {
                return Err(usage(Error::Config(format!("stage {} stops before the spectrum", cfg.stage.unwrap()))));
            };
            for (i, v) in spec.eigenvalues.iter().enumerate() {
                println!("{i:>3} {v:>+.12e}");
            }
            let entry = run.report.get("Thm1.1").expect("spectral entry recorded");
            println!("{} {}", if entry.passed() { "PASS" } else { "FAIL" }, entry.detail);
            Ok(verdict(entry.passed()))
        }
        Command::Surrogate => {
            let suite = pipeline::run_surrogate_only(&cfg, Some(&cfg.out)).map_err(failure)?;
            for r in suite.runs.iter().filter(|r| !r.passed) {
                println!("seed {} n={} failed: margin={:.3e} excess={} {}", r.seed, r.n, r.eigenvalue_margin, r.kernel_excess, r.error.as_deref().unwrap_or(""));
            }
            println!("{} {}", if suite.all_passed { "PASS" } else { "FAIL" }, surrogate_summary(&suite));
            Ok(verdict(suite.all_passed))
        }
        Command::Rankone => {
            let lemma = pipeline::run_rankone_only(&cfg, Some(&cfg.out)).map_err(failure)?;
            let entry = quaternionic_entry(&lemma);
            println!("{} {}", if entry.passed() { "PASS" } else { "FAIL" }, entry.detail);
            Ok(verdict(entry.passed()))
        }
        Command::Explain { report } => {
            let path = report.unwrap_or_else(|| cfg.out.join("report.json"));
            let text = std::fs::read_to_string(&path).map_err(|e| usage(Error::Config(format!("{}: {e}", path.display()))))?;
            let parsed: VerificationReport =
                serde_json::from_str(&text).map_err(|e| usage(Error::Config(format!("{}: {e}", path.display()))))?;
            print!("{}", explain(&parsed).map_err(usage)?);
            Ok(verdict(parsed.all_passed()))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err((code, e)) => {
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
