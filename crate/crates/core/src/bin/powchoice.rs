use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use powchoice::error::{Error, Result};
use powchoice::harness::{exit_code, load_spec, run_bound, run_experiment, run_freq, run_skew, ExperimentSpec};

/// Client selection experiments for federated averaging.
#[derive(Parser)]
#[command(name = "powchoice", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for independent runs and Monte Carlo work.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct Common {
    /// Spec file.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory (default: the spec's `out_dir`, else `out/<name>`).
    #[arg(long, env = "POWCHOICE_OUT_DIR")]
    out: Option<PathBuf>,
    /// Overrides the spec's base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train every strategy for every seed and write metrics and summaries.
    Run(Common),
    /// Estimate the selection skew of every strategy in a spec.
    Skew(Common),
    /// Selected-frequency profiles for the metrics of an earlier run.
    Freq {
        /// Directory written by `run`.
        #[arg(long)]
        metrics: PathBuf,
        /// Output directory (default: the run directory).
        #[arg(long, env = "POWCHOICE_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Evaluate the convergence bounds described by a bound file.
    Bound(Common),
}

fn spec_dir(spec: &Path) -> &Path {
    spec.parent().unwrap_or(Path::new("."))
}

fn prepare(common: &Common) -> Result<(ExperimentSpec, PathBuf)> {
    let mut spec = load_spec(&common.spec)?;
    if let Some(seed) = common.seed {
        spec.base_seed = seed;
    }
    let out = match (&common.out, &spec.out_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => spec_dir(&common.spec).join(o),
        (None, None) => Path::new("out").join(&spec.name),
    };
    Ok((spec, out))
}

fn make_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.parallelism {
        if n == 0 {
            return Err(Error::Config("--parallelism must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Run(common) => {
            let (spec, out) = prepare(&common)?;
            let task = spec.build_task(spec_dir(&common.spec))?;
            make_dir(&out)?;
            let outputs = run_experiment(&spec, &task, &out)?;
            info!("{} metrics files", outputs.metrics.len());
            println!("{}", outputs.comparison.display());
            println!("{}", outputs.targets.display());
        }
        Command::Skew(common) => {
            let (spec, out) = prepare(&common)?;
            let task = spec.build_task(spec_dir(&common.spec))?;
            make_dir(&out)?;
            let (report, table) = run_skew(&spec, &task, &out)?;
            println!("{}", report.display());
            println!("{}", table.display());
        }
        Command::Freq { metrics, out } => {
            if !metrics.is_dir() {
                return Err(Error::Config(format!("{} is not a run directory", metrics.display())));
            }
            let out = out.unwrap_or_else(|| metrics.clone());
            make_dir(&out)?;
            println!("{}", run_freq(&metrics, &out)?.display());
        }
        Command::Bound(common) => {
            let out = common.out.clone().unwrap_or_else(|| {
                let stem = common.spec.file_stem().map(|s| s.to_owned()).unwrap_or_else(|| "bound".into());
                Path::new("out").join(stem)
            });
            make_dir(&out)?;
            let (table, _) = run_bound(&common.spec, &out, common.seed)?;
            println!("{}", table.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
