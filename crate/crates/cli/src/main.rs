use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lowrank_intensity::harness::{
    evaluation_points, fit_method, ingest_csv, read_patterns, realdata_compare, run_benchmark,
    simulate_replication, write_compare, write_grid_dump, write_outputs, write_patterns,
    BenchmarkConfig, CellConfig, CompareConfig, Evaluation, Fitted, GridSpec, HarnessError,
    IntensityFn, MethodKind, MethodOptions, PartitionMode,
};
use lowrank_intensity::estimate::{DEFAULT_FOLDS, DEFAULT_TAU};

#[derive(Parser)]
#[command(name = "lowrank-intensity", version, about = "Low-rank intensity estimation for multivariate point processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate point patterns from a scenario and write them as CSV
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Scenario id 1-4
        #[arg(long)]
        scenario: u8,
        /// Dimension D
        #[arg(long)]
        dim: usize,
        /// Number of processes
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Intensity multiplier for scenarios 1-3
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// LGCP lattice resolution per axis
        #[arg(long)]
        lgcp_grid_res: Option<usize>,
    },
    /// Fit one estimator to a pattern CSV and dump it on a grid
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Pattern CSV with header rep,x1,..,xD
        #[arg(long)]
        patterns: PathBuf,
        /// lowrank, matrix_svt, tensor, raw or kie
        #[arg(long, default_value = "lowrank")]
        method: MethodKind,
        /// Number of coordinate blocks
        #[arg(long, default_value_t = 2)]
        s: usize,
        /// Basis functions per coordinate
        #[arg(long, default_value_t = 6)]
        m: usize,
        /// Process count, if trailing processes are empty
        #[arg(long)]
        n: Option<usize>,
        /// Fixed soft-SVT threshold (cross-validated otherwise)
        #[arg(long)]
        gamma: Option<f64>,
        /// Singular value ratio threshold for rank selection
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        /// Cross-validation folds
        #[arg(long, default_value_t = DEFAULT_FOLDS)]
        folds: usize,
        /// Split the data three ways in the tensor estimator
        #[arg(long)]
        sample_split: bool,
        /// Keep coordinates in order instead of clustering them
        #[arg(long)]
        balanced: bool,
        /// Clip negative basis estimates at zero
        #[arg(long)]
        clip_negative: bool,
        /// Grid points per axis in the dump
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Run a simulation study from a config file or preset
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// TOML configuration
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Name of a file in the presets directory
        #[arg(long)]
        preset: Option<String>,
        /// Override the replication count
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Pairwise comparison of estimators on a real data CSV
    Compare {
        #[command(flatten)]
        common: Common,
        /// TOML configuration
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn with_threads<T>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError>
where
    T: Send,
{
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate {
            common,
            scenario,
            dim,
            n,
            amplitude,
            lgcp_grid_res,
        } => {
            let mut cell = CellConfig::new(scenario, dim, 1, 1);
            cell.n = n;
            cell.amplitude = amplitude;
            cell.lgcp_grid_res = lgcp_grid_res;
            cell.scenario_spec()?;
            let seed = common.seed.unwrap_or(0);
            let (patterns, truth) =
                with_threads(common.threads.unwrap_or(0), || simulate_replication(&cell, seed, 0, 0))??;
            write_patterns(create(&common.out, "patterns.csv")?, &patterns)?;
            let grid = GridSpec::new(GridSpec::default_points(dim), dim)?;
            let values = truth.lattice(&grid.axis());
            write_grid_dump(create(&common.out, "truth_grid.csv")?, &grid.points(), &values, None)?;
            let total: usize = patterns.iter().map(|p| p.len()).sum();
            println!("wrote {n} processes ({total} points) to {}", common.out.display());
            Ok(())
        }
        Command::Estimate {
            common,
            patterns,
            method,
            s,
            m,
            n,
            gamma,
            tau,
            folds,
            sample_split,
            balanced,
            clip_negative,
            grid_points,
        } => {
            let file = File::open(&patterns)
                .map_err(|e| HarnessError::Data(format!("cannot read {}: {e}", patterns.display())))?;
            let data = read_patterns(file, n)?;
            let dim = data[0].dim();
            let opts = MethodOptions {
                s,
                m,
                tau,
                folds,
                sample_split,
                gamma,
                partition: if balanced {
                    PartitionMode::Balanced
                } else {
                    PartitionMode::Cluster
                },
                clip_negative,
            };
            let seed = common.seed.unwrap_or(0);
            let fit = with_threads(common.threads.unwrap_or(0), || fit_method(&data, method, &opts, seed))??;
            let grid = GridSpec::new(grid_points.unwrap_or_else(|| GridSpec::default_points(dim)), dim)?;
            let values = fit.fitted.lattice(&grid.axis());
            write_grid_dump(create(&common.out, "grid.csv")?, &grid.points(), &values, None)?;
            let model = match &fit.fitted {
                Fitted::Basis(b) => json!({
                    "method": fit.label,
                    "permutation": b.permutation,
                    "gamma": fit.gamma,
                    "ranks": fit.ranks,
                    "model": b.inner,
                }),
                Fitted::Kernel(k) => json!({
                    "method": fit.label,
                    "bandwidths": k.bandwidths(),
                    "points": k.num_points(),
                    "mass": k.total_mass(),
                }),
            };
            serde_json::to_writer_pretty(create(&common.out, "model.json")?, &model)
                .map_err(|e| HarnessError::Data(e.to_string()))?;
            println!("{} fit written to {}", fit.label, common.out.display());
            Ok(())
        }
        Command::Benchmark {
            common,
            config,
            preset,
            reps,
        } => {
            let path = match (config, preset) {
                (Some(p), _) => p,
                (None, Some(name)) => preset_path(&name)?,
                (None, None) => {
                    return Err(HarnessError::Config("pass --config or --preset".into()));
                }
            };
            let mut cfg = BenchmarkConfig::load(&path)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            if let Some(t) = common.threads {
                cfg.threads = t;
            }
            if let Some(r) = reps {
                cfg.reps = r;
                for c in cfg.cells.iter_mut() {
                    c.reps = None;
                }
            }
            let results = run_benchmark(&cfg)?;
            write_outputs(&common.out, &results)?;
            for r in &results {
                println!(
                    "scenario {} D={} s={} m={} {:<10} mean {:.4} se {:.4}",
                    r.scenario, r.dim, r.s, r.m, r.method, r.mean, r.se
                );
            }
            Ok(())
        }
        Command::Compare { common, config } => {
            let mut cfg = CompareConfig::load(&config)?;
            cfg.validate()?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            let threads = common.threads.unwrap_or(cfg.threads);
            let ing = ingest_csv(&cfg.input, &cfg.columns, cfg.group.as_deref())?;
            let result = with_threads(threads, || {
                realdata_compare(
                    &ing.patterns,
                    &cfg.methods,
                    cfg.train_fraction,
                    cfg.repeats,
                    cfg.seed,
                    cfg.grid_points,
                )
            })??;
            write_compare(create(&common.out, "pairwise.csv")?, &result)?;
            serde_json::to_writer_pretty(create(&common.out, "normalization.json")?, &ing.normalization)
                .map_err(|e| HarnessError::Data(e.to_string()))?;
            if let Evaluation::Halton(k) = result.evaluation {
                println!("evaluated on {k} Halton points (lattice too large)");
            }
            let dim = ing.normalization.columns.len();
            println!(
                "compared {} methods on {} evaluation points; wrote {}",
                result.names.len(),
                evaluation_points(&result.evaluation, dim)?.len(),
                common.out.join("pairwise.csv").display()
            );
            Ok(())
        }
    }
}

/// Looks for `NAME.toml` in `$LOWRANK_PRESETS`, `./presets` and the
/// repository's presets directory.
fn preset_path(name: &str) -> Result<PathBuf, HarnessError> {
    let file = if name.ends_with(".toml") {
        name.to_string()
    } else {
        format!("{name}.toml")
    };
    let mut dirs = Vec::new();
    if let Ok(d) = std::env::var("LOWRANK_PRESETS") {
        dirs.push(PathBuf::from(d));
    }
    dirs.push(PathBuf::from("presets"));
    dirs.push(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets"));
    dirs.iter()
        .map(|d| d.join(&file))
        .find(|p| p.is_file())
        .ok_or_else(|| HarnessError::Config(format!("preset `{name}` not found")))
}
