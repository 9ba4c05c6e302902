//! Command-line front end: `generate`, `run`, `sweep-noise` and `inspect`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hodgelet::datagen::{read_manifest, save_dataset};
use hodgelet::harness::{self, ExperimentConfig, Variant};

#[derive(Parser)]
#[command(name = "hodgelet", version, about = "Hodge-decomposed graph wavelet GP classification")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured synthetic dataset and write it to disk.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "HODGELET_OUT")]
        out: Option<PathBuf>,
    },
    /// Train and evaluate over several seeds.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "HODGELET_OUT")]
        out: Option<PathBuf>,
        #[arg(long)]
        seeds: Option<usize>,
        /// Overrides the configured variants.
        #[arg(long)]
        variant: Vec<String>,
    },
    /// Accuracy against edge-noise level for the Hodge and line-graph variants.
    SweepNoise {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "HODGELET_OUT")]
        out: Option<PathBuf>,
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Print a dataset manifest, from a dataset directory or a config.
    Inspect {
        /// Directory written by `generate`.
        path: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Path, seeds: Option<usize>, variants: &[String]) -> hodgelet::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_file(path)?;
    if let Some(n) = seeds {
        config.evaluation.num_seeds = n;
    }
    if !variants.is_empty() {
        config.variants = variants.iter().map(|v| Variant::parse(v)).collect::<hodgelet::Result<_>>()?;
    }
    config.validate()?;
    Ok(config)
}

fn execute(command: Command) -> hodgelet::Result<bool> {
    match command {
        Command::Generate { config, out } => {
            let config = load_config(&config, None, &[])?;
            let dataset = config.dataset.load()?;
            let dir = config.output_dir(out.as_deref()).join(&dataset.manifest.name);
            std::fs::create_dir_all(&dir)?;
            save_dataset(&dataset, &dir)?;
            println!("wrote {} graphs to {}", dataset.graphs.len(), dir.display());
            Ok(true)
        }
        Command::Run {
            config,
            out,
            seeds,
            variant,
        } => {
            let config = load_config(&config, seeds, &variant)?;
            let output = harness::run(&config)?;
            let dir = config.output_dir(out.as_deref());
            harness::write_run(&dir, &config, &output)?;
            print!("{}", harness::summary_csv(&output.summaries));
            Ok(output.all_completed())
        }
        Command::SweepNoise { config, out, seeds } => {
            let config = load_config(&config, seeds, &[])?;
            let output = harness::sweep_noise(&config)?;
            let dir = config.output_dir(out.as_deref());
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("noise_sweep.csv"), output.csv())?;
            std::fs::write(dir.join("config.resolved.toml"), config.to_toml()?)?;
            for w in output.soft_checks(&config.noise_levels) {
                eprintln!("warning: {w}");
            }
            for &r in &config.noise_levels {
                println!(
                    "noise {r}: wt-gp-hodge {:.2}  wt-gp-lg {:.2}",
                    output.mean(r, Variant::WtGpHodge),
                    output.mean(r, Variant::WtGpLg)
                );
            }
            Ok(output.rows.iter().all(|(_, r)| r.error.is_none()))
        }
        Command::Inspect { path, config } => {
            let manifest = match (path, config) {
                (Some(p), _) => read_manifest(&p)?,
                (None, Some(c)) => load_config(&c, None, &[])?.dataset.load()?.manifest,
                (None, None) => {
                    return Err(hodgelet::Error::Config {
                        path: "inspect".to_string(),
                        message: "give a dataset directory or --config".to_string(),
                    })
                }
            };
            println!("{}", serde_json::to_string_pretty(&manifest)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some seeds failed; see the results file");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
