use serde::{Deserialize, Serialize};

use crate::basis::{IntensityModel, PartitionSpec};
use crate::rng::substream;
use crate::simulate::{thin_split, PointPattern};
use crate::tensor::{
    complete_orthonormal, matricize, mode_product, singular_values, soft_threshold_svd, thin_svd,
    tucker_project, DenseTensor, Matrix,
};

use super::coefficients::{empirical_coefficients, weighted_coefficients};
use super::EstimateError;

/// Singular values below this multiple of the largest count as zero when
/// capping selected ranks.
const RANK_ZERO_TOL: f64 = 1e-10;

/// Target Tucker rank, one entry per mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuckerRank(Vec<usize>);

impl TuckerRank {
    pub fn new(ranks: Vec<usize>) -> Result<Self, EstimateError> {
        if ranks.is_empty() || ranks.contains(&0) {
            return Err(EstimateError::InvalidParameter(format!(
                "Tucker ranks must be positive, got {ranks:?}"
            )));
        }
        Ok(Self(ranks))
    }

    pub fn ranks(&self) -> &[usize] {
        &self.0
    }

    pub fn check(&self, dims: &[usize]) -> Result<(), EstimateError> {
        if self.0.len() != dims.len() {
            return Err(EstimateError::InvalidParameter(format!(
                "{} ranks for {} modes",
                self.0.len(),
                dims.len()
            )));
        }
        for (mode, (&r, &p)) in self.0.iter().zip(dims).enumerate() {
            if r > p {
                return Err(EstimateError::RankTooLarge {
                    mode,
                    rank: r,
                    max: p,
                });
            }
        }
        Ok(())
    }
}

/// Coefficient matrix view of an order-2 tensor.
fn as_matrix(b: &DenseTensor) -> Matrix {
    Matrix::from_column_slice(b.dims()[0], b.dims()[1], b.data())
}

fn require_blocks(partition: &PartitionSpec, ok: bool, method: &'static str) -> Result<(), EstimateError> {
    if ok {
        Ok(())
    } else {
        Err(EstimateError::WrongBlockCount {
            method,
            blocks: partition.num_blocks(),
        })
    }
}

/// Model whose coefficients are the empirical tensor itself.
pub fn raw_estimate(
    patterns: &[PointPattern],
    partition: &PartitionSpec,
    m: usize,
) -> Result<IntensityModel, EstimateError> {
    let b = empirical_coefficients(patterns, partition, m)?;
    Ok(IntensityModel::new(partition.clone(), m, b)?)
}

/// Soft-thresholded coefficient matrix for a given empirical matrix.
pub fn svt_coefficients(bhat: &DenseTensor, gamma: f64) -> Result<DenseTensor, EstimateError> {
    if bhat.order() != 2 {
        return Err(EstimateError::InvalidParameter(format!(
            "soft-SVT needs an order-2 coefficient tensor, got order {}",
            bhat.order()
        )));
    }
    let t = soft_threshold_svd(&as_matrix(bhat), gamma)?;
    Ok(DenseTensor::from_matrix(&t)?)
}

/// Matrix estimator: soft singular-value thresholding of the empirical
/// coefficient matrix.
pub fn matrix_svt_estimate(
    patterns: &[PointPattern],
    partition: &PartitionSpec,
    m: usize,
    gamma: f64,
) -> Result<IntensityModel, EstimateError> {
    require_blocks(partition, partition.num_blocks() == 2, "matrix_svt")?;
    let b = empirical_coefficients(patterns, partition, m)?;
    matrix_svt_from_coefficients(&b, partition, m, gamma)
}

pub fn matrix_svt_from_coefficients(
    bhat: &DenseTensor,
    partition: &PartitionSpec,
    m: usize,
    gamma: f64,
) -> Result<IntensityModel, EstimateError> {
    require_blocks(partition, partition.num_blocks() == 2, "matrix_svt")?;
    let t = svt_coefficients(bhat, gamma)?;
    Ok(IntensityModel::new(partition.clone(), m, t)?)
}

/// Leading `r` left singular vectors of `a`. When `a` has fewer than `r`
/// columns or nonzero singular values, the factor is padded with an
/// orthonormal completion.
fn leading_left(a: &Matrix, r: usize) -> Result<Matrix, EstimateError> {
    let rows = a.nrows();
    let f = thin_svd(a)?;
    let have = f.u.ncols().min(r);
    let mut u = Matrix::zeros(rows, r);
    u.columns_mut(0, have).copy_from(&f.u.columns(0, have));
    if have < r {
        complete_orthonormal(&mut u, have);
    }
    Ok(u)
}

/// Tucker factors from the HOSVD-initialized, sketch-refined procedure.
///
/// `init` gives the initial factors, `sketch` the refinement. Pass the same
/// tensor for both to skip sample splitting.
pub fn sketched_factors(
    init: &DenseTensor,
    sketch: &DenseTensor,
    ranks: &TuckerRank,
) -> Result<Vec<Matrix>, EstimateError> {
    ranks.check(init.dims())?;
    if sketch.dims() != init.dims() {
        return Err(EstimateError::InvalidParameter(
            "split coefficient tensors differ in shape".into(),
        ));
    }
    let s = init.order();
    let initial: Vec<Matrix> = (0..s)
        .map(|j| leading_left(&matricize(init, j)?, ranks.ranks()[j]))
        .collect::<Result<_, _>>()?;
    let mut refined = Vec::with_capacity(s);
    for j in 0..s {
        // M_j(b) (kron_{k != j} U_k) equals the mode-j unfolding of b with
        // every other mode multiplied by U_k^T
        let mut core = sketch.clone();
        for (k, u) in initial.iter().enumerate() {
            if k != j {
                core = mode_product(&core, &u.transpose(), k)?;
            }
        }
        refined.push(leading_left(&matricize(&core, j)?, ranks.ranks()[j])?);
    }
    Ok(refined)
}

/// Low-rank coefficient tensor: the projection of `project` onto the
/// factors estimated from `init` and `sketch`.
pub fn tensor_coefficients(
    init: &DenseTensor,
    sketch: &DenseTensor,
    project: &DenseTensor,
    ranks: &TuckerRank,
) -> Result<DenseTensor, EstimateError> {
    let factors = sketched_factors(init, sketch, ranks)?;
    Ok(tucker_project(project, &factors)?)
}

/// Tensor estimator with HOSVD initialization and sketched refinement.
///
/// With `sample_split` the processes are divided by index into three nearly
/// equal groups used for initialization, refinement and projection. With
/// fewer than three processes each one is instead thinned into three parts,
/// and the estimate of `lambda / 3` is scaled back by 3.
pub fn tensor_estimate(
    patterns: &[PointPattern],
    partition: &PartitionSpec,
    m: usize,
    ranks: &TuckerRank,
    sample_split: bool,
    seed: u64,
) -> Result<IntensityModel, EstimateError> {
    require_blocks(partition, partition.num_blocks() >= 3, "tensor")?;
    if patterns.is_empty() {
        return Err(EstimateError::NoPatterns);
    }
    ranks.check(&partition.coefficient_dims(m)?)?;
    let coefficients = if !sample_split {
        let b = empirical_coefficients(patterns, partition, m)?;
        tensor_coefficients(&b, &b, &b, ranks)?
    } else {
        let [b1, b2, b3] = split_coefficients(patterns, partition, m, seed)?;
        tensor_coefficients(&b1, &b2, &b3, ranks)?
    };
    Ok(IntensityModel::new(partition.clone(), m, coefficients)?)
}

fn split_coefficients(
    patterns: &[PointPattern],
    partition: &PartitionSpec,
    m: usize,
    seed: u64,
) -> Result<[DenseTensor; 3], EstimateError> {
    let n = patterns.len();
    let mut groups: [Vec<&PointPattern>; 3] = Default::default();
    let thinned: Vec<Vec<PointPattern>>;
    let scale;
    if n >= 3 {
        for (i, p) in patterns.iter().enumerate() {
            groups[i * 3 / n].push(p);
        }
        scale = [0, 1, 2].map(|g| 1.0 / groups[g].len() as f64);
    } else {
        thinned = patterns
            .iter()
            .enumerate()
            .map(|(i, p)| thin_split(p, 3, &mut substream(seed, &[i as u64])))
            .collect::<Result<_, _>>()?;
        for parts in &thinned {
            for (g, part) in parts.iter().enumerate() {
                groups[g].push(part);
            }
        }
        // each part estimates lambda / 3
        scale = [3.0 / n as f64; 3];
    }
    let mut out = Vec::with_capacity(3);
    for g in 0..3 {
        out.push(weighted_coefficients(&groups[g], partition, m, scale[g])?);
    }
    Ok(out.try_into().expect("three groups"))
}

/// Ratio-threshold rank rule: per mode, the largest `k` with
/// `sigma_k / sigma_{k+1} > tau` gives `R = k + 1`, falling back to 1, and
/// capped at the number of nonzero singular values.
pub fn select_ranks(bhat: &DenseTensor, tau: f64) -> Result<TuckerRank, EstimateError> {
    if !(tau > 1.0) {
        return Err(EstimateError::InvalidParameter(format!(
            "rank ratio threshold must exceed 1, got {tau}"
        )));
    }
    let ranks = (0..bhat.order())
        .map(|j| Ok(rank_from_singular_values(&singular_values(&matricize(bhat, j)?)?, tau)))
        .collect::<Result<Vec<_>, EstimateError>>()?;
    TuckerRank::new(ranks)
}

/// The rank rule applied to one nonincreasing list of singular values.
pub fn rank_from_singular_values(sigma: &[f64], tau: f64) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0);
    let nonzero = sigma.iter().filter(|&&v| v > RANK_ZERO_TOL * top).count();
    let mut rank = 1;
    for k in 1..sigma.len() {
        // ratio sigma_k / sigma_{k+1} in 1-based indexing
        let (a, b) = (sigma[k - 1], sigma[k]);
        if a > 0.0 && (b <= 0.0 || a / b > tau) {
            rank = k + 1;
        }
    }
    rank.min(nonzero).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::numerical_rank;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orthonormal(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        thin_svd(&a).unwrap().u
    }

    #[test]
    fn rank_rule_examples() {
        assert_eq!(rank_from_singular_values(&[8.0, 4.0, 3.9, 0.2], 5.0), 4);
        assert_eq!(rank_from_singular_values(&[1.0, 1.0, 1.0], 2.0), 1);
        assert_eq!(rank_from_singular_values(&[5.0, 3.0, 0.0, 0.0], 2.0), 2);
        assert_eq!(rank_from_singular_values(&[0.0, 0.0], 2.0), 1);
    }

    #[test]
    fn select_ranks_on_rank_two_matrix() {
        let u = orthonormal(4, 2, 1);
        let v = orthonormal(4, 2, 2);
        let s = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![5.0, 3.0]));
        let b = DenseTensor::from_matrix(&(&u * s * v.transpose())).unwrap();
        assert_eq!(select_ranks(&b, 2.0).unwrap().ranks(), &[2, 2]);
        assert!(select_ranks(&b, 1.0).is_err());
    }

    #[test]
    fn svt_injection() {
        let u = orthonormal(5, 2, 3);
        let v = orthonormal(4, 2, 4);
        let s = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![5.0, 2.0]));
        let b = DenseTensor::from_matrix(&(&u * s * v.transpose())).unwrap();
        let t = svt_coefficients(&b, 1.0).unwrap();
        let tm = as_matrix(&t);
        let f = thin_svd(&tm).unwrap();
        assert!((f.singular_values[0] - 4.0).abs() < 1e-8);
        assert!((f.singular_values[1] - 1.0).abs() < 1e-8);
        // same left subspace
        let proj = &u * u.transpose() * f.u.columns(0, 2);
        assert!((proj - f.u.columns(0, 2)).norm() < 1e-8);
        let zero = svt_coefficients(&b, 5.0).unwrap();
        assert!(zero.frobenius_norm() < 1e-12);
    }

    #[test]
    fn wrong_block_counts() {
        let p3 = PartitionSpec::new(vec![1, 1, 1]).unwrap();
        let p2 = PartitionSpec::new(vec![1, 1]).unwrap();
        let pat = [PointPattern::empty(3)];
        assert!(matches!(
            matrix_svt_estimate(&pat, &p3, 2, 0.0),
            Err(EstimateError::WrongBlockCount { .. })
        ));
        let r = TuckerRank::new(vec![1, 1]).unwrap();
        assert!(matches!(
            tensor_estimate(&[PointPattern::empty(2)], &p2, 2, &r, false, 0),
            Err(EstimateError::WrongBlockCount { .. })
        ));
    }

    #[test]
    fn rank_one_and_full_rank_recovery() {
        let dims = [4, 3, 5];
        let vs: Vec<Vec<f64>> = dims
            .iter()
            .map(|&d| (0..d).map(|i| 1.0 + i as f64 * 0.3).collect())
            .collect();
        let b = DenseTensor::outer(&[&vs[0], &vs[1], &vs[2]]).unwrap();
        let r1 = TuckerRank::new(vec![1, 1, 1]).unwrap();
        let out = tensor_coefficients(&b, &b, &b, &r1).unwrap();
        assert!(out.sub(&b).unwrap().frobenius_norm() < 1e-8);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noisy = DenseTensor::from_fn(&dims, |_| rng.random_range(-1.0..1.0)).unwrap();
        let full = TuckerRank::new(dims.to_vec()).unwrap();
        let out = tensor_coefficients(&noisy, &noisy, &noisy, &full).unwrap();
        assert!(out.sub(&noisy).unwrap().frobenius_norm() < 1e-10);
    }

    #[test]
    fn output_respects_rank_bound() {
        let dims = [6, 6, 6];
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let b = DenseTensor::from_fn(&dims, |_| rng.random_range(-1.0..1.0)).unwrap();
        let r = TuckerRank::new(vec![2, 3, 1]).unwrap();
        let out = tensor_coefficients(&b, &b, &b, &r).unwrap();
        for (j, &rj) in r.ranks().iter().enumerate() {
            assert!(numerical_rank(&matricize(&out, j).unwrap(), 1e-9).unwrap() <= rj);
        }
    }

    #[test]
    fn degenerate_sketch_is_padded() {
        // rank (3, 1, 1): every sketch has a single column
        let dims = [4, 3, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = DenseTensor::from_fn(&dims, |_| rng.random_range(-1.0..1.0)).unwrap();
        let r = TuckerRank::new(vec![3, 1, 1]).unwrap();
        let f = sketched_factors(&b, &b, &r).unwrap();
        assert_eq!(f[0].ncols(), 3);
        assert!(crate::tensor::orthonormality_deviation(&f[0]) < 1e-10);
        let too_big = TuckerRank::new(vec![5, 1, 1]).unwrap();
        assert!(matches!(
            sketched_factors(&b, &b, &too_big),
            Err(EstimateError::RankTooLarge { .. })
        ));
    }

    #[test]
    fn sample_split_paths_run() {
        let part = PartitionSpec::new(vec![1, 1, 1]).unwrap();
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = (i as f64 * 0.618).fract();
                vec![t, (t * 3.0).fract(), (t * 7.0).fract()]
            })
            .collect();
        let p = PointPattern::from_points(3, &pts).unwrap();
        let r = TuckerRank::new(vec![2, 2, 2]).unwrap();
        let single = tensor_estimate(std::slice::from_ref(&p), &part, 3, &r, true, 5).unwrap();
        let again = tensor_estimate(std::slice::from_ref(&p), &part, 3, &r, true, 5).unwrap();
        assert_eq!(single, again);
        let many = vec![p; 7];
        let by_index = tensor_estimate(&many, &part, 3, &r, true, 5).unwrap();
        let pooled = tensor_estimate(&many, &part, 3, &r, false, 5).unwrap();
        // identical processes: every group has the same average
        for (a, b) in by_index.coefficients().data().iter().zip(pooled.coefficients().data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
