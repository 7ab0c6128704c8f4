use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rigidity_core::pipeline::config::StageToggles;
use rigidity_core::pipeline::{builtin, run_scenario, validate_report, RunOptions, ScenarioConfig, Verdict, BUILTIN_SCENARIOS, CATALOG};

#[derive(Parser)]
#[command(name = "rigidity-lab", version, about = "Numerical checks of surface rigidity from contact along a curve")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in scenario by name.
    Run {
        scenario: String,
        /// Write report.json and CSV artifacts here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Grid nodes per unit length.
        #[arg(long)]
        resolution: Option<f64>,
        /// Pointwise agreement tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Comma-separated stage list, replacing the scenario's toggles.
        #[arg(long)]
        stages: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Print the full report instead of a summary.
        #[arg(long)]
        json: bool,
    },
    /// List catalog surfaces and built-in scenarios.
    Catalog,
    /// Print a built-in scenario as TOML.
    Show { name: String },
    /// Validate a report written by `run`.
    Check { report: PathBuf },
}

fn load(scenario: &str) -> Result<ScenarioConfig> {
    let path = PathBuf::from(scenario);
    if path.exists() {
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(ScenarioConfig::from_toml(&text)?);
    }
    match builtin(scenario) {
        Some(cfg) => Ok(cfg?),
        None => bail!("`{scenario}` is neither a file nor a built-in scenario (see `rigidity-lab catalog`)"),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out, resolution, tol, stages, seed, json } => {
            let mut cfg = load(&scenario)?;
            if let Some(r) = resolution {
                cfg.grid.resolution = r;
            }
            if let Some(t) = tol {
                cfg.tolerances.agreement = t;
            }
            if let Some(s) = stages {
                cfg.stages = StageToggles::from_list(&s)?;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_scenario(&cfg, &RunOptions { out_dir: out })?;
            if json {
                print!("{}", report.to_json());
            } else {
                println!("scenario {} ({})", report.scenario, &report.config_hash[..12]);
                for s in &report.stages {
                    println!("  {:<12} {:?}", s.name, s.verdict);
                    for n in &s.notes {
                        println!("      {n}");
                    }
                }
                println!("verdict {:?}", report.verdict);
            }
            let errored = report.stages.iter().any(|s| s.verdict == Verdict::Error);
            Ok(match report.verdict {
                Verdict::Pass => ExitCode::SUCCESS,
                _ if errored => ExitCode::from(2),
                _ => ExitCode::from(1),
            })
        }
        Command::Catalog => {
            println!("surfaces:");
            for (name, params, defaults) in CATALOG {
                let p: Vec<String> = params.iter().zip(*defaults).map(|(n, d)| format!("{n}={d}")).collect();
                println!("  {name:<18} {}", p.join(" "));
            }
            println!("scenarios:");
            for (name, text) in BUILTIN_SCENARIOS {
                let desc = ScenarioConfig::from_toml(text).map(|c| c.description).unwrap_or_default();
                println!("  {name:<22} {desc}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Show { name } => match BUILTIN_SCENARIOS.iter().find(|(n, _)| *n == name) {
            Some((_, text)) => {
                print!("{text}");
                Ok(ExitCode::SUCCESS)
            }
            None => bail!("no built-in scenario `{name}`"),
        },
        Command::Check { report } => {
            let text = std::fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let value: serde_json::Value = serde_json::from_str(&text).context("report is not JSON")?;
            let problems = validate_report(&value);
            if problems.is_empty() {
                println!("ok");
                Ok(ExitCode::SUCCESS)
            } else {
                for p in &problems {
                    println!("{p}");
                }
                Ok(ExitCode::from(1))
            }
        }
    }
}
