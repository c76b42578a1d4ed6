use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::rng::substream;
use crate::simulate::{
    sample_given_field, sample_lgcp_field, sample_poisson, scenario_intensity, PointPattern,
    Scenario, LGCP_LENGTHSCALE2,
};

use super::config::{BenchmarkConfig, CellConfig};
use super::fitting::fit_method;
use super::metrics::{relative_error, IntensityFn};
use super::HarnessError;

/// Stream tags below the per-process indices of a replication.
const FIELD_STREAM: u64 = u64::MAX;
const FIT_STREAM: u64 = u64::MAX - 1;

/// Summary of one (cell, method) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub scenario: u8,
    pub dim: usize,
    pub s: usize,
    pub m: usize,
    pub method: String,
    pub n: usize,
    /// Relative error per replication, in replication order.
    pub errors: Vec<f64>,
    pub mean: f64,
    pub se: f64,
    /// Fit plus evaluation time summed over replications.
    pub seconds: f64,
}

impl BenchmarkResult {
    pub fn reps(&self) -> usize {
        self.errors.len()
    }
}

/// Mean and standard error (sample standard deviation over `sqrt(k)`).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Simulates the `n` processes of one replication plus the truth they were
/// drawn from.
pub fn simulate_replication(
    cell: &CellConfig,
    seed: u64,
    cell_index: usize,
    rep: usize,
) -> Result<(Vec<PointPattern>, Box<dyn IntensityFn>), HarnessError> {
    let spec = cell.scenario_spec()?;
    let path = |i: u64| substream(seed, &[cell_index as u64, rep as u64, i]);
    if spec.scenario == Scenario::LogGaussianCox {
        let field = sample_lgcp_field(LGCP_LENGTHSCALE2, cell.lgcp_res(), cell.dim, &mut path(FIELD_STREAM))?;
        let patterns = (0..cell.n)
            .into_par_iter()
            .map(|i| sample_given_field(&field, &mut path(i as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((patterns, Box::new(field)))
    } else {
        let f = scenario_intensity(spec)?;
        let patterns = (0..cell.n)
            .into_par_iter()
            .map(|i| sample_poisson(|x| f.eval(x), f.sup(), cell.dim, &mut path(i as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((patterns, Box::new(f)))
    }
}

/// Per-method (label, relative error, seconds) for one replication.
fn run_replication(
    config: &BenchmarkConfig,
    cell: &CellConfig,
    cell_index: usize,
    rep: usize,
) -> Result<Vec<(&'static str, f64, f64)>, HarnessError> {
    let (patterns, truth) = simulate_replication(cell, config.seed, cell_index, rep)?;
    let grid = config.grid_for(cell.dim)?;
    let fit_seed: u64 = substream(config.seed, &[cell_index as u64, rep as u64, FIT_STREAM]).random();
    let opts = cell.options();
    let mut out = Vec::with_capacity(cell.methods.len());
    for &kind in &cell.methods {
        let start = Instant::now();
        let fit = fit_method(&patterns, kind, &opts, fit_seed)?;
        let err = relative_error(&fit.fitted, truth.as_ref(), &grid)?;
        out.push((fit.label, err, start.elapsed().as_secs_f64()));
    }
    Ok(out)
}

/// Runs every cell of `config` and summarizes each (cell, method).
///
/// Replications run in parallel; results are gathered in replication order
/// so the output depends only on the configuration.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<Vec<BenchmarkResult>, HarnessError> {
    config.validate()?;
    for c in &config.cells {
        if config.grid_points.is_none() && c.dim >= 6 {
            log::warn!("D = {} uses a 6-point test grid per axis instead of 10", c.dim);
        }
    }
    let run = || -> Result<Vec<BenchmarkResult>, HarnessError> {
        let tasks: Vec<(usize, usize)> = config
            .cells
            .iter()
            .enumerate()
            .flat_map(|(ci, c)| (0..c.reps.unwrap_or(config.reps)).map(move |r| (ci, r)))
            .collect();
        let outcomes = tasks
            .par_iter()
            .map(|&(ci, r)| {
                log::debug!("cell {ci} replication {r}");
                run_replication(config, &config.cells[ci], ci, r)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut results = Vec::new();
        let mut cursor = 0;
        for cell in &config.cells {
            let reps = cell.reps.unwrap_or(config.reps);
            let block = &outcomes[cursor..cursor + reps];
            cursor += reps;
            for (k, _) in cell.methods.iter().enumerate() {
                let errors: Vec<f64> = block.iter().map(|o| o[k].1).collect();
                let seconds: f64 = block.iter().map(|o| o[k].2).sum();
                let (mean, se) = mean_se(&errors);
                results.push(BenchmarkResult {
                    scenario: cell.scenario,
                    dim: cell.dim,
                    s: cell.s,
                    m: cell.m,
                    method: block[0][k].0.to_string(),
                    n: cell.n,
                    errors,
                    mean,
                    se,
                    seconds: if config.record_timing { seconds } else { 0.0 },
                });
            }
        }
        Ok(results)
    };
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?
            .install(run)
    } else {
        run()
    }
}

#[derive(Serialize)]
struct ResultRow<'a> {
    scenario: u8,
    #[serde(rename = "D")]
    dim: usize,
    s: usize,
    m: usize,
    method: &'a str,
    n: usize,
    reps: usize,
    mean_rel_err: f64,
    se_rel_err: f64,
    seconds: f64,
}

#[derive(Serialize)]
struct ReplicationRow<'a> {
    scenario: u8,
    #[serde(rename = "D")]
    dim: usize,
    s: usize,
    m: usize,
    method: &'a str,
    n: usize,
    rep: usize,
    rel_err: f64,
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Summary table with header
/// `scenario,D,s,m,method,n,reps,mean_rel_err,se_rel_err,seconds`.
pub fn write_results<W: Write>(out: W, results: &[BenchmarkResult]) -> Result<(), HarnessError> {
    let mut w = writer(out);
    for r in results {
        w.serialize(ResultRow {
            scenario: r.scenario,
            dim: r.dim,
            s: r.s,
            m: r.m,
            method: &r.method,
            n: r.n,
            reps: r.reps(),
            mean_rel_err: r.mean,
            se_rel_err: r.se,
            seconds: r.seconds,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Per-replication errors, one row each.
pub fn write_replications<W: Write>(out: W, results: &[BenchmarkResult]) -> Result<(), HarnessError> {
    let mut w = writer(out);
    for r in results {
        for (rep, &e) in r.errors.iter().enumerate() {
            w.serialize(ReplicationRow {
                scenario: r.scenario,
                dim: r.dim,
                s: r.s,
                m: r.m,
                method: &r.method,
                n: r.n,
                rep,
                rel_err: e,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `results.csv` and `replications.csv` into `dir`.
pub fn write_outputs(dir: &Path, results: &[BenchmarkResult]) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    write_results(std::fs::File::create(dir.join("results.csv"))?, results)?;
    write_replications(std::fs::File::create(dir.join("replications.csv"))?, results)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::fitting::MethodKind;

    fn small_config() -> BenchmarkConfig {
        let mut cell = CellConfig::new(2, 2, 2, 3);
        cell.n = 30;
        cell.amplitude = 20.0;
        cell.methods = vec![MethodKind::LowRank, MethodKind::Raw, MethodKind::Kie];
        BenchmarkConfig {
            seed: 11,
            reps: 3,
            grid_points: Some(5),
            threads: 0,
            record_timing: false,
            cells: vec![cell],
        }
    }

    #[test]
    fn mean_and_se() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn runs_and_writes_schema() {
        let res = run_benchmark(&small_config()).unwrap();
        assert_eq!(res.len(), 3);
        assert_eq!(res[0].method, "matrix_svt");
        assert!(res.iter().all(|r| r.errors.len() == 3 && r.errors.iter().all(|e| *e >= 0.0)));
        let mut buf = Vec::new();
        write_results(&mut buf, &res).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scenario,D,s,m,method,n,reps,mean_rel_err,se_rel_err,seconds\n"));
        assert_eq!(text.lines().count(), 4);
        let mut buf = Vec::new();
        write_replications(&mut buf, &res).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 10);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut a = small_config();
        a.threads = 1;
        let mut b = small_config();
        b.threads = 3;
        assert_eq!(run_benchmark(&a).unwrap(), run_benchmark(&b).unwrap());
    }

    #[test]
    fn lgcp_cell_runs() {
        let mut cell = CellConfig::new(4, 2, 2, 3);
        cell.n = 40;
        cell.lgcp_grid_res = Some(8);
        let cfg = BenchmarkConfig {
            seed: 2,
            reps: 2,
            grid_points: Some(4),
            threads: 0,
            record_timing: false,
            cells: vec![cell],
        };
        let res = run_benchmark(&cfg).unwrap();
        assert!(res.iter().all(|r| r.mean.is_finite()));
    }
}
