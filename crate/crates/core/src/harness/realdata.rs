use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::rng::substream;
use crate::simulate::PointPattern;

use super::config::CompareMethod;
use super::fitting::fit_method;
use super::metrics::{lattice_points, relative_difference, GridSpec, IntensityFn};
use super::HarnessError;

/// Largest lattice used for pairwise errors; beyond it a low-discrepancy
/// point set is used instead.
pub const LATTICE_BUDGET: usize = 1_000_000;

/// Size of the low-discrepancy evaluation set.
pub const HALTON_POINTS: usize = 10_000;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

/// First `count` Halton points in `[0, 1)^dim`, skipping the origin.
pub fn halton_points(count: usize, dim: usize) -> Result<Vec<Vec<f64>>, HarnessError> {
    if dim > PRIMES.len() {
        return Err(HarnessError::Config(format!(
            "low-discrepancy evaluation supports up to {} dimensions",
            PRIMES.len()
        )));
    }
    Ok((1..=count as u64)
        .map(|i| PRIMES[..dim].iter().map(|&b| radical_inverse(i, b)).collect())
        .collect())
}

/// Where pairwise errors were evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Lattice(GridSpec),
    Halton(usize),
}

/// Averaged pairwise relative errors: `matrix[a][b]` compares method `a`
/// against method `b` as reference.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareResult {
    pub names: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub evaluation: Evaluation,
}

fn evaluation_for(dim: usize, grid_points: Option<usize>) -> Result<Evaluation, HarnessError> {
    let g = grid_points.unwrap_or(10);
    let total = (g as f64).powi(dim as i32);
    if total <= LATTICE_BUDGET as f64 {
        Ok(Evaluation::Lattice(GridSpec::new(g, dim)?))
    } else {
        log::warn!("{g}^{dim} lattice is too large; using {HALTON_POINTS} Halton points");
        Ok(Evaluation::Halton(HALTON_POINTS))
    }
}

/// Repeated random train splits of the pooled points: each method is fit to
/// the training points as a single process and all pairs are compared on
/// the evaluation set. Every method sees the same split and seed.
pub fn realdata_compare(
    patterns: &[PointPattern],
    methods: &[CompareMethod],
    train_fraction: f64,
    repeats: usize,
    seed: u64,
    grid_points: Option<usize>,
) -> Result<CompareResult, HarnessError> {
    if methods.len() < 2 {
        return Err(HarnessError::Config("need at least two methods".into()));
    }
    let dim = patterns
        .first()
        .map(|p| p.dim())
        .ok_or_else(|| HarnessError::Data("no point patterns".into()))?;
    let pooled: Vec<&[f64]> = patterns.iter().flat_map(|p| p.iter()).collect();
    let train_count = (train_fraction * pooled.len() as f64).floor() as usize;
    if train_count < 2 || train_count == pooled.len() {
        return Err(HarnessError::Data(format!(
            "{} points are too few for a {train_fraction} train split",
            pooled.len()
        )));
    }
    let evaluation = evaluation_for(dim, grid_points)?;
    let halton = match evaluation {
        Evaluation::Halton(k) => Some(halton_points(k, dim)?),
        Evaluation::Lattice(_) => None,
    };
    let k = methods.len();
    let per_split = (0..repeats)
        .into_par_iter()
        .map(|split| {
            let mut rng = substream(seed, &[split as u64]);
            let mut order: Vec<usize> = (0..pooled.len()).collect();
            order.shuffle(&mut rng);
            let mut coords = Vec::with_capacity(train_count * dim);
            for &i in &order[..train_count] {
                coords.extend_from_slice(pooled[i]);
            }
            let train = [PointPattern::from_flat(dim, coords)?];
            let split_seed = split as u64 ^ seed.rotate_left(17);
            let mut values = Vec::with_capacity(k);
            for method in methods {
                let fit = fit_method(&train, method.kind, &method.options(), split_seed)?;
                values.push(match (&evaluation, &halton) {
                    (Evaluation::Lattice(g), _) => fit.fitted.lattice(&g.axis()),
                    (_, Some(pts)) => fit.fitted.values_at(pts),
                    _ => unreachable!(),
                });
            }
            let mut m = vec![vec![0.0; k]; k];
            for a in 0..k {
                for b in 0..k {
                    if a != b {
                        m[a][b] = relative_difference(&values[a], &values[b]).unwrap_or_else(|_| {
                            log::warn!("method {} is zero everywhere on split {split}", methods[b].name);
                            f64::NAN
                        });
                    }
                }
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let mut matrix = vec![vec![0.0; k]; k];
    for m in &per_split {
        for a in 0..k {
            for b in 0..k {
                matrix[a][b] += m[a][b] / repeats as f64;
            }
        }
    }
    Ok(CompareResult {
        names: methods.iter().map(|m| m.name.clone()).collect(),
        matrix,
        evaluation,
    })
}

/// Matrix CSV: header `method,<name>..`, one row per method.
pub fn write_compare<W: Write>(out: W, result: &CompareResult) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["method".to_string()];
    header.extend(result.names.iter().cloned());
    w.write_record(&header)?;
    for (name, row) in result.names.iter().zip(&result.matrix) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Lattice coordinates of an evaluation, for grid dumps.
pub fn evaluation_points(evaluation: &Evaluation, dim: usize) -> Result<Vec<Vec<f64>>, HarnessError> {
    match evaluation {
        Evaluation::Lattice(g) => Ok(lattice_points(&g.axis(), dim)),
        Evaluation::Halton(k) => halton_points(*k, dim),
    }
}
