use rayon::prelude::*;

use crate::basis::{product_basis_into, PartitionSpec};
use crate::simulate::PointPattern;
use crate::tensor::DenseTensor;

use super::EstimateError;

/// Patterns per parallel work item. Fixed so the summation order, and hence
/// the result, does not depend on the thread count.
const CHUNK: usize = 64;

fn check_patterns(patterns: &[&PointPattern], partition: &PartitionSpec) -> Result<(), EstimateError> {
    for p in patterns {
        if p.dim() != partition.dim() {
            return Err(EstimateError::DimensionMismatch {
                expected: partition.dim(),
                got: p.dim(),
            });
        }
    }
    Ok(())
}

/// `sum_i sum_{u in N_i} phi(u)` without normalization.
fn basis_sum(patterns: &[&PointPattern], m: usize, len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    let mut scratch = vec![0.0; m];
    let mut phi = Vec::with_capacity(len);
    for p in patterns {
        for x in p.iter() {
            // blocks are contiguous coordinate ranges, so the full product
            // basis over all D coordinates already has the tensor layout
            product_basis_into(x, m, &mut scratch, &mut phi);
            for (a, v) in acc.iter_mut().zip(&phi) {
                *a += v;
            }
        }
    }
    acc
}

fn parallel_sum(patterns: &[&PointPattern], m: usize, len: usize) -> Vec<f64> {
    let partials: Vec<Vec<f64>> = patterns
        .par_chunks(CHUNK)
        .map(|chunk| basis_sum(chunk, m, len))
        .collect();
    let mut total = vec![0.0; len];
    for part in partials {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    total
}

/// Empirical coefficient tensor `(1/n) sum_i sum_{u in N_i} phi^(1)(u_1) x .. x phi^(s)(u_s)`.
pub fn empirical_coefficients(
    patterns: &[PointPattern],
    partition: &PartitionSpec,
    m: usize,
) -> Result<DenseTensor, EstimateError> {
    if patterns.is_empty() {
        return Err(EstimateError::NoPatterns);
    }
    let refs: Vec<&PointPattern> = patterns.iter().collect();
    weighted_coefficients(&refs, partition, m, 1.0 / patterns.len() as f64)
}

/// `scale * sum_i sum_{u in N_i} phi(u)` over the given patterns.
pub(crate) fn weighted_coefficients(
    patterns: &[&PointPattern],
    partition: &PartitionSpec,
    m: usize,
    scale: f64,
) -> Result<DenseTensor, EstimateError> {
    let dims = partition.coefficient_dims(m)?;
    check_patterns(patterns, partition)?;
    let len: usize = dims.iter().product();
    let mut data = parallel_sum(patterns, m, len);
    for v in data.iter_mut() {
        *v *= scale;
    }
    Ok(DenseTensor::from_vec(&dims, data)?)
}

/// Per-group coefficient sums (unnormalized): entry `g` sums over the
/// patterns with `group_of[i] == g`.
pub(crate) fn grouped_sums(
    patterns: &[PointPattern],
    group_of: &[usize],
    groups: usize,
    partition: &PartitionSpec,
    m: usize,
) -> Result<Vec<DenseTensor>, EstimateError> {
    let mut members: Vec<Vec<&PointPattern>> = vec![Vec::new(); groups];
    for (p, &g) in patterns.iter().zip(group_of) {
        members[g].push(p);
    }
    members
        .iter()
        .map(|ps| weighted_coefficients(ps, partition, m, 1.0))
        .collect()
}
