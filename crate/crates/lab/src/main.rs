use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swarmlab::{check, output, presets, run_experiment, ConfigError, ExperimentConfig, LabError};

#[derive(Parser)]
#[command(name = "swarm-lab", version, about = "Seeded consensus and flocking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a configuration file and write CSV outputs.
    Run(RunArgs),
    /// Print the preset catalog.
    ListPresets,
    /// Run the fast invariant suite.
    Check,
}

#[derive(Args)]
struct RunArgs {
    /// Catalog entry, see list-presets.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// File of key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the runs per sweep point.
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory; defaults to $SWARM_LAB_OUT, then output.dir, then out/NAME.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long)]
    jobs: Option<usize>,
}

fn resolve(args: &RunArgs) -> Result<ExperimentConfig, LabError> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), _) => {
            presets::preset(name).ok_or_else(|| ConfigError::single("preset", presets::unknown_message(name)))?
        }
        (None, Some(path)) => ExperimentConfig::read(path)?,
        (None, None) => return Err(ConfigError::single("run", "need --preset or --config").into()),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(args: &RunArgs, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(d) = &args.out {
        return d.clone();
    }
    if let Some(d) = std::env::var_os("SWARM_LAB_OUT") {
        return PathBuf::from(d);
    }
    cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}

fn run(args: RunArgs) -> Result<(), LabError> {
    let cfg = resolve(&args)?;
    let dir = output_dir(&args, &cfg);
    log::info!("running {} ({} runs per point) into {}", cfg.name, cfg.runs, dir.display());
    let res = run_experiment(&cfg, args.jobs)?;
    for row in &res.aggregate {
        println!(
            "{}={}: mean clusters {:.3} (std {:.3}), consensus {:.3}",
            row.variable, row.value, row.mean_clusters, row.std, row.consensus_fraction
        );
    }
    for path in output::write_outputs(&res, &cfg, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match cli.command {
        Command::ListPresets => {
            for (name, what) in presets::catalog() {
                println!("{name:<22} {what}");
            }
            ExitCode::SUCCESS
        }
        Command::Check => {
            let results = check::run_checks();
            for c in &results {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if results.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::Run(args) => match run(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
