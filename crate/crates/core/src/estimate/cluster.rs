use crate::basis::PartitionSpec;
use crate::simulate::PointPattern;

use super::EstimateError;

/// Coordinate clustering result: `permutation[k]` is the original coordinate
/// placed at position `k`, and the blocks of `partition` are contiguous in
/// the permuted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub permutation: Vec<usize>,
    pub partition: PartitionSpec,
}

/// Pearson correlation of the pooled point coordinates. Zero-variance
/// coordinates get zero correlation with everything else.
pub fn coordinate_correlation(patterns: &[PointPattern], dim: usize) -> Result<Vec<Vec<f64>>, EstimateError> {
    let mut count = 0usize;
    let mut mean = vec![0.0; dim];
    for p in patterns {
        if p.dim() != dim {
            return Err(EstimateError::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        for x in p.iter() {
            count += 1;
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
    }
    if count < 2 {
        return Err(EstimateError::InvalidParameter(format!(
            "coordinate clustering needs at least 2 points, got {count}"
        )));
    }
    for m in mean.iter_mut() {
        *m /= count as f64;
    }
    let mut cov = vec![vec![0.0; dim]; dim];
    for p in patterns {
        for x in p.iter() {
            for a in 0..dim {
                let da = x[a] - mean[a];
                for b in a..dim {
                    cov[a][b] += da * (x[b] - mean[b]);
                }
            }
        }
    }
    let mut corr = vec![vec![0.0; dim]; dim];
    for a in 0..dim {
        for b in a..dim {
            let denom = (cov[a][a] * cov[b][b]).sqrt();
            let r = if a == b {
                1.0
            } else if denom > 0.0 {
                cov[a][b] / denom
            } else {
                0.0
            };
            corr[a][b] = r;
            corr[b][a] = r;
        }
    }
    Ok(corr)
}

/// Groups coordinates into `s` clusters by greedy agglomeration on the
/// average absolute correlation, with cluster sizes capped at `ceil(D / s)`.
///
/// When no pair can merge under the cap, the two smallest clusters merge.
pub fn cluster_partition(patterns: &[PointPattern], s: usize) -> Result<Clustering, EstimateError> {
    let dim = patterns.first().map(|p| p.dim()).ok_or(EstimateError::NoPatterns)?;
    if s == 0 || s > dim {
        return Err(EstimateError::InvalidParameter(format!(
            "cluster count must be in 1..={dim}, got {s}"
        )));
    }
    let corr = coordinate_correlation(patterns, dim)?;
    let cap = dim.div_ceil(s);
    let mut clusters: Vec<Vec<usize>> = (0..dim).map(|i| vec![i]).collect();
    while clusters.len() > s {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                if clusters[a].len() + clusters[b].len() > cap {
                    continue;
                }
                let mut total = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        total += corr[i][j].abs();
                    }
                }
                let avg = total / (clusters[a].len() * clusters[b].len()) as f64;
                if best.is_none_or(|(_, _, v)| avg > v) {
                    best = Some((a, b, avg));
                }
            }
        }
        let (a, b) = match best {
            Some((a, b, _)) => (a, b),
            None => smallest_pair(&clusters),
        };
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
        clusters[a].sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    let permutation = clusters.iter().flatten().copied().collect();
    let partition = PartitionSpec::new(clusters.iter().map(Vec::len).collect())?;
    Ok(Clustering {
        permutation,
        partition,
    })
}

fn smallest_pair(clusters: &[Vec<usize>]) -> (usize, usize) {
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by_key(|&i| (clusters[i].len(), i));
    let (a, b) = (order[0], order[1]);
    (a.min(b), a.max(b))
}
