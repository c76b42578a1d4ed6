use rand::seq::SliceRandom;

use crate::basis::PartitionSpec;
use crate::rng::seeded;
use crate::simulate::PointPattern;
use crate::tensor::{thin_svd, DenseTensor, Matrix};

use super::coefficients::grouped_sums;
use super::EstimateError;

/// Default number of candidate thresholds.
pub const DEFAULT_GRID_SIZE: usize = 10;

/// `count` log-spaced thresholds from `1e-3 * sigma1` to `sigma1`.
pub fn default_gamma_grid(sigma1: f64, count: usize) -> Vec<f64> {
    if sigma1 <= 0.0 || count == 0 {
        return vec![0.0];
    }
    if count == 1 {
        return vec![sigma1];
    }
    let lo = (1e-3f64).ln();
    (0..count)
        .map(|i| sigma1 * (lo * (1.0 - i as f64 / (count - 1) as f64)).exp())
        .collect()
}

/// Assigns processes to folds: a seeded shuffle of `0..n`, dealt round robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    fold_of
}

/// Cross-validated soft-SVT threshold over `grid` using `folds` folds of
/// whole processes.
pub fn cv_gamma(
    patterns: &[PointPattern],
    partition: &PartitionSpec,
    m: usize,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64, EstimateError> {
    if folds < 2 {
        return Err(EstimateError::InvalidParameter(format!(
            "cross-validation needs at least 2 folds, got {folds}"
        )));
    }
    if patterns.len() < folds {
        return Err(EstimateError::TooFewProcesses {
            n: patterns.len(),
            folds,
        });
    }
    let fold_of = fold_assignment(patterns.len(), folds, seed);
    cv_gamma_with_folds(patterns, &fold_of, partition, m, grid)
}

/// As [`cv_gamma`] with an explicit fold label per process.
///
/// The score of `gamma` sums, over folds, the projection loss
/// `|T(b_train)|^2 - 2 <T(b_train), b_valid>` where `T` is soft-SVT at
/// `gamma`. Ties go to the smaller threshold.
pub fn cv_gamma_with_folds(
    patterns: &[PointPattern],
    fold_of: &[usize],
    partition: &PartitionSpec,
    m: usize,
    grid: &[f64],
) -> Result<f64, EstimateError> {
    if grid.is_empty() {
        return Err(EstimateError::InvalidParameter("empty gamma grid".into()));
    }
    if let Some(g) = grid.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
        return Err(EstimateError::InvalidParameter(format!(
            "gamma candidates must be non-negative, got {g}"
        )));
    }
    if partition.num_blocks() != 2 {
        return Err(EstimateError::WrongBlockCount {
            method: "matrix_svt",
            blocks: partition.num_blocks(),
        });
    }
    if fold_of.len() != patterns.len() {
        return Err(EstimateError::InvalidParameter(format!(
            "{} fold labels for {} processes",
            fold_of.len(),
            patterns.len()
        )));
    }
    let folds = fold_of.iter().max().map_or(0, |&f| f + 1);
    let mut sizes = vec![0usize; folds];
    for &f in fold_of {
        sizes[f] += 1;
    }
    if folds < 2 || sizes.contains(&0) {
        return Err(EstimateError::InvalidParameter(
            "every fold needs at least one process and there must be two folds".into(),
        ));
    }
    let sums = grouped_sums(patterns, fold_of, folds, partition, m)?;
    let n = patterns.len();
    let total = sums
        .iter()
        .skip(1)
        .try_fold(sums[0].clone(), |acc, s| acc.add(s))?;
    let mut scores = vec![0.0; grid.len()];
    for k in 0..folds {
        let train = total.sub(&sums[k])?.scaled(1.0 / (n - sizes[k]) as f64);
        let valid = sums[k].scaled(1.0 / sizes[k] as f64);
        let losses = fold_losses(&train, &valid, grid)?;
        for (s, l) in scores.iter_mut().zip(losses) {
            *s += l;
        }
    }
    let mut best = 0;
    for i in 1..grid.len() {
        let better = scores[i] < scores[best]
            || (scores[i] == scores[best] && grid[i] < grid[best]);
        if better {
            best = i;
        }
    }
    Ok(grid[best])
}

/// Projection loss of every candidate from a single SVD of the training
/// matrix: with `b_train = sum_k s_k u_k v_k^T`,
/// `|T|^2 = sum (s_k - g)_+^2` and `<T, B> = sum (s_k - g)_+ u_k^T B v_k`.
fn fold_losses(train: &DenseTensor, valid: &DenseTensor, grid: &[f64]) -> Result<Vec<f64>, EstimateError> {
    let (p, q) = (train.dims()[0], train.dims()[1]);
    let tm = Matrix::from_column_slice(p, q, train.data());
    let vm = Matrix::from_column_slice(p, q, valid.data());
    let f = thin_svd(&tm)?;
    let cross: Vec<f64> = (0..f.singular_values.len())
        .map(|k| f.u.column(k).dot(&(&vm * f.v.column(k))))
        .collect();
    Ok(grid
        .iter()
        .map(|&g| {
            f.singular_values
                .iter()
                .zip(&cross)
                .map(|(&s, &c)| {
                    let t = (s - g).max(0.0);
                    t * t - 2.0 * t * c
                })
                .sum()
        })
        .collect())
}

/// Basis size `ceil((|lambda|^2 n)^(1 / (2 alpha + d_max)))`.
pub fn theoretical_m(n: usize, alpha: f64, d_max: usize, sobolev_norm: f64) -> Result<usize, EstimateError> {
    check_theory_inputs(n, alpha, d_max, sobolev_norm)?;
    let v = (sobolev_norm * sobolev_norm * n as f64).powf(1.0 / (2.0 * alpha + d_max as f64));
    // guard against pow landing a hair above an exact integer
    Ok(((v - 1e-9).ceil() as usize).max(1))
}

/// Threshold `C * sqrt(|lambda|^(2 d_max / (2 alpha + d_max)) log n / n^(2 alpha / (2 alpha + d_max)))`.
pub fn theoretical_gamma(
    n: usize,
    alpha: f64,
    d_max: usize,
    sobolev_norm: f64,
    c_gamma: f64,
) -> Result<f64, EstimateError> {
    check_theory_inputs(n, alpha, d_max, sobolev_norm)?;
    if !(c_gamma > 0.0) {
        return Err(EstimateError::InvalidParameter(format!(
            "C_gamma must be positive, got {c_gamma}"
        )));
    }
    let denom = 2.0 * alpha + d_max as f64;
    let nf = n as f64;
    let num = sobolev_norm.powf(2.0 * d_max as f64 / denom) * nf.ln();
    Ok(c_gamma * (num / nf.powf(2.0 * alpha / denom)).sqrt())
}

fn check_theory_inputs(n: usize, alpha: f64, d_max: usize, norm: f64) -> Result<(), EstimateError> {
    if n == 0 || !(alpha >= 1.0) || d_max == 0 || !(norm > 0.0 && norm.is_finite()) {
        return Err(EstimateError::InvalidParameter(format!(
            "need n >= 1, alpha >= 1, d_max >= 1 and a positive norm, got ({n}, {alpha}, {d_max}, {norm})"
        )));
    }
    Ok(())
}
