use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phase_lab::bounds::{self, BoundName};
use phase_lab::hamiltonian::{normalize_spectrum, parse_model, spectral_decomposition, DEFAULT_MARGIN};
use phase_lab::harness::{load_config_file, run_experiment, write_outputs};
use phase_lab::Error;
use serde_json::json;

const THREADS_VAR: &str = "PHASE_LAB_THREADS";

#[derive(Parser)]
#[command(name = "phase-lab", about = "Exact simulation of quantum phase estimation and its error bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write result.json, table.csv, plot.svg.
    Run {
        config: PathBuf,
        /// Overrides the config's `output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print the eigenphases of a model file as JSON.
    Spectrum {
        model: PathBuf,
        /// Rescale the spectrum into [margin·2π, (1 − margin)·2π] first.
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
    },
    /// Evaluate a bound, e.g. `bounds thm1 --params n=4 eps=0.25`.
    Bounds {
        name: String,
        #[arg(long, num_args = 0.., value_parser = parse_param)]
        params: Vec<(String, f64)>,
    },
    /// Print the version.
    Version,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("`{v}` is not a number (in `{s}`)"))?;
    Ok((k.trim().to_string(), v))
}

enum Failure {
    /// Bad input: exit code 1.
    Validation(String),
    /// Anything that went wrong while running: exit code 2.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::UnreachableResidual { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn threads() -> Result<usize, Failure> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Validation(format!("{THREADS_VAR} = `{v}` is not a thread count"))),
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, output_dir } => {
            let config = load_config_file(&config).map_err(|e| match e {
                Error::Io { .. } => Failure::Runtime(e.to_string()),
                e => Failure::Validation(e.to_string()),
            })?;
            let result = run_experiment(&config, threads()?).map_err(Failure::from)?;
            let dir = output_dir.unwrap_or_else(|| config.output_dir.clone());
            let files = write_outputs(&result, &dir).map_err(|e| Failure::Runtime(e.to_string()))?;
            println!("{}", files.json.display());
            println!("{}", files.csv.display());
            println!("{}", files.svg.display());
            let failed = result.failed_rows();
            if failed > 0 {
                for row in result.rows.iter().filter(|r| !r.is_ok()) {
                    eprintln!("row {}: {}", row.index, row.status);
                }
                return Err(Failure::Runtime(format!(
                    "{failed} of {} sweep points failed",
                    result.rows.len()
                )));
            }
            Ok(())
        }
        Command::Spectrum {
            model,
            normalize,
            margin,
        } => {
            let text = read(&model)?;
            let model = parse_model(&text)?;
            let (model, map) = if normalize {
                let (m, map) = normalize_spectrum(model.terms(), margin)?;
                (m, Some(map))
            } else {
                (model, None)
            };
            let spectrum = spectral_decomposition(&model)?;
            let mut out = json!({
                "dim": model.dim(),
                "phases": spectrum.phases,
                "eigenvalues": spectrum.raw_eigenvalues,
                "lambda": model.lambda(),
                "term_norms": model.term_norms(),
                "probabilities": model.probs(),
            });
            if let Some(map) = map {
                out["scale"] = json!(map.scale);
                out["shift"] = json!(map.shift);
            }
            println!("{}", serde_json::to_string_pretty(&out).expect("JSON value"));
            Ok(())
        }
        Command::Bounds { name, params } => {
            let name = BoundName::parse(&name)?;
            let mut map = BTreeMap::new();
            for (k, v) in params {
                if map.insert(k.clone(), v).is_some() {
                    return Err(Failure::Validation(format!("parameter `{k}` given twice")));
                }
            }
            let report = bounds::evaluate(name, &map)?;
            println!("{}", report.to_json());
            Ok(())
        }
        Command::Version => {
            println!("phase-lab {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
