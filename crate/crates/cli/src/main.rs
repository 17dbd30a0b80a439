use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use simopo::scenarios::{self, parse_config_text, Scenario, ScenarioConfig};
use simopo::Error;

/// Multimode squeezing simulator for self-imaging OPOs.
#[derive(Parser)]
#[command(name = "simopo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV dataset.
    Run(Box<RunArgs>),
    /// List scenarios with their columns and parameters.
    List {
        /// Print the schemas as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario name (see `simopo list`).
    scenario: String,
    #[arg(long)]
    xi: Option<String>,
    #[arg(long)]
    ti: Option<String>,
    #[arg(long)]
    tl: Option<String>,
    #[arg(long)]
    g00: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    /// Round-trip Gouy phase over 2 pi (comma list).
    #[arg(long)]
    gouy: Option<String>,
    #[arg(long)]
    nmax: Option<String>,
    /// disp, tilt or size.
    #[arg(long)]
    kind: Option<String>,
    /// image or fourier.
    #[arg(long)]
    plane: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lo_phase: Option<String>,
    /// MIN:MAX:STEPS.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
    #[arg(long)]
    eta_extra: Option<String>,
    #[arg(long)]
    orders: Option<String>,
    #[arg(long)]
    waist_ratio: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// eigenvalue or fundamental.
    #[arg(long)]
    normalization: Option<String>,
    /// Re-run at nmax + 5 and add a drift_db column.
    #[arg(long)]
    convergence: bool,
    /// CSV output path; the manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn flag_pairs(&self) -> Vec<(String, String)> {
        let flags = [
            ("xi", &self.xi),
            ("ti", &self.ti),
            ("tl", &self.tl),
            ("g00", &self.g00),
            ("omega", &self.omega),
            ("gouy", &self.gouy),
            ("nmax", &self.nmax),
            ("kind", &self.kind),
            ("plane", &self.plane),
            ("lo-phase", &self.lo_phase),
            ("sweep", &self.sweep),
            ("eta-extra", &self.eta_extra),
            ("orders", &self.orders),
            ("waist-ratio", &self.waist_ratio),
            ("alpha", &self.alpha),
            ("normalization", &self.normalization),
        ];
        let mut pairs: Vec<(String, String)> = flags
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        if self.convergence {
            pairs.push(("convergence".into(), "true".into()));
        }
        if let Some(out) = &self.out {
            pairs.push(("out".into(), out.display().to_string()));
        }
        pairs
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain { .. } | Error::BracketFailure { .. } => 2,
        Error::AboveThreshold { .. } | Error::Singular { .. } => 3,
        _ => 1,
    }
}

fn run(args: &RunArgs) -> simopo::Result<()> {
    let scenario: Scenario = args.scenario.parse()?;
    let mut pairs = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config file {}: {e}", path.display()))
            })?;
            parse_config_text(&text)?
        }
        None => Vec::new(),
    };
    pairs.extend(args.flag_pairs());
    let cfg = ScenarioConfig::from_pairs(scenario, &pairs)?;
    let out = scenarios::run(&cfg)?;
    match &cfg.out {
        Some(path) => {
            let manifest = scenarios::write_outputs(&out, path)?;
            eprintln!(
                "wrote {} rows to {} (manifest {})",
                out.dataset.rows.len(),
                path.display(),
                manifest.display()
            );
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&out.dataset.to_csv()?)?;
            eprint!("{}", out.manifest_text());
        }
    }
    Ok(())
}

fn list_text(as_json: bool) -> String {
    let all = scenarios::list_scenarios();
    if as_json {
        let value: Vec<_> = all
            .iter()
            .map(|s| {
                json!({
                    "name": s.name,
                    "figures": s.figures,
                    "description": s.description,
                    "columns": s.columns,
                    "parameters": s.parameters.iter().map(|p| json!({
                        "key": p.key,
                        "default": p.default,
                        "description": p.description,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        return serde_json::to_string_pretty(&value).expect("schema serializes") + "\n";
    }
    let mut text = String::new();
    for s in all {
        text += &format!(
            "{:<16} {:<12} {}\n",
            s.name,
            s.figures.join(","),
            s.description
        );
        for p in &s.parameters {
            text += &format!("    --{:<14} [{}] {}\n", p.key, p.default, p.description);
        }
    }
    text
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List { json } => {
            use std::io::Write;
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = std::io::stdout().write_all(list_text(json).as_bytes());
            ExitCode::SUCCESS
        }
        Command::Run(args) => match run(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        },
    }
}
