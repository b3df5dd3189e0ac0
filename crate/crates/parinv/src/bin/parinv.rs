//! Thin command-line front end: run a scenario, verify outputs against a
//! golden directory, or list the builtin presets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use parinv::config::{builtin_scenarios, find_builtin, ScenarioConfig};
use parinv::report::{exit_code_for, run_scenario, verify, DiffStatus};

/// Default output root when --output is absent.
const OUTPUT_ENV: &str = "PARINV_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "parinv", version, about = "semilinear parabolic inverse-problem laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a config file or a builtin preset.
    Run {
        /// Path to a scenario JSON file.
        #[arg(long, conflicts_with = "scenario")]
        config: Option<PathBuf>,
        /// Name of a builtin preset (see list-scenarios).
        #[arg(long)]
        scenario: Option<String>,
        /// Output root directory (defaults to $PARINV_OUTPUT_ROOT or ./out).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker-thread cap for the parallel stages.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare an output directory against a golden directory.
    Verify {
        golden: PathBuf,
        output: PathBuf,
        /// Relative tolerance for CSV numeric comparison.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// List the builtin scenario presets.
    ListScenarios {
        /// Also write each preset as JSON into this directory.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

fn output_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load(config: Option<PathBuf>, scenario: Option<String>) -> Result<ScenarioConfig, String> {
    match (config, scenario) {
        (Some(path), None) => ScenarioConfig::from_path(&path).map_err(|e| e.to_string()),
        (None, Some(name)) => {
            find_builtin(&name).ok_or_else(|| format!("no builtin scenario named '{name}'"))
        }
        _ => Err("provide exactly one of --config or --scenario".into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            scenario,
            output,
            seed,
            threads,
        } => {
            if let Some(n) = threads {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            let cfg = match load(config, scenario) {
                Ok(c) => c,
                Err(msg) => {
                    eprintln!("{{\"error\": {msg:?}, \"exit_code\": 2}}");
                    return ExitCode::from(2);
                }
            };
            let root = output_root(output.or_else(|| cfg.output_dir.clone()));
            let (manifest, result) = run_scenario(&cfg, &root, seed);
            match result {
                Ok(()) => {
                    println!(
                        "scenario '{}' complete: {} files in {}",
                        manifest.scenario,
                        manifest.files.len(),
                        root.join(&manifest.scenario).display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    let code = exit_code_for(&e);
                    eprintln!("{{\"error\": {:?}, \"exit_code\": {code}}}", e.to_string());
                    ExitCode::from(code as u8)
                }
            }
        }
        Command::Verify { golden, output, tol } => match verify(&golden, &output, tol) {
            Ok(report) => {
                let mut failed = false;
                for e in &report.entries {
                    let tag = match e.status {
                        DiffStatus::Pass => "PASS",
                        DiffStatus::Fail => "FAIL",
                        DiffStatus::MissingOutput => "MISSING",
                        DiffStatus::ExtraOutput => "EXTRA",
                    };
                    if e.detail.is_empty() {
                        println!("{tag} {}", e.path);
                    } else {
                        println!("{tag} {} ({})", e.path, e.detail);
                    }
                    failed |= matches!(e.status, DiffStatus::Fail | DiffStatus::MissingOutput);
                }
                if failed {
                    ExitCode::from(1)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => {
                eprintln!("{{\"error\": {:?}, \"exit_code\": 2}}", e.to_string());
                ExitCode::from(2)
            }
        },
        Command::ListScenarios { emit } => {
            for s in builtin_scenarios() {
                println!("{:<24} {:<12} {}", s.name, s.experiment.name(), s.nonlinearity.name);
                if let Some(dir) = &emit {
                    if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| {
                        std::fs::write(
                            dir.join(format!("{}.json", s.name)),
                            serde_json::to_string_pretty(&s).expect("serializes") + "\n",
                        )
                    }) {
                        eprintln!("cannot emit {}: {e}", s.name);
                        return ExitCode::from(2);
                    }
                }
            }
            ExitCode::SUCCESS
        }
    }
}
