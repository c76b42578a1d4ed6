//! Acceptance criteria. Each criterion prints one PASS or FAIL line with the
//! measured value; the run fails if any criterion fails.
//!
//! Pass a substring as the first argument to run only matching criteria:
//! `cargo test --test acceptance -- scenario1_d2`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use lowrank_intensity::basis::{project_function, PartitionSpec};
use lowrank_intensity::estimate::{empirical_coefficients, tensor_coefficients, TuckerRank};
use lowrank_intensity::harness::{
    run_benchmark, write_results, BenchmarkConfig, BenchmarkResult, CellConfig, MethodKind,
};
use lowrank_intensity::rng::substream;
use lowrank_intensity::simulate::{
    sample_lgcp_field, sample_poisson, scenario_intensity, thin_split, ScenarioSpec,
    LGCP_LENGTHSCALE2,
};
use lowrank_intensity::tensor::{
    matricize, soft_threshold_svd, truncated_svd, unmatricize, DenseTensor,
};

const SEED: u64 = 20_250_101;
const REPS: usize = 20;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// independent oracles

/// Orthonormal shifted Legendre polynomials from their explicit forms.
fn legendre_explicit(k: usize, x: f64) -> f64 {
    let t = 2.0 * x - 1.0;
    let p = match k {
        0 => 1.0,
        1 => t,
        2 => (3.0 * t * t - 1.0) / 2.0,
        3 => (5.0 * t.powi(3) - 3.0 * t) / 2.0,
        4 => (35.0 * t.powi(4) - 30.0 * t * t + 3.0) / 8.0,
        5 => (63.0 * t.powi(5) - 70.0 * t.powi(3) + 15.0 * t) / 8.0,
        6 => (231.0 * t.powi(6) - 315.0 * t.powi(4) + 105.0 * t * t - 5.0) / 16.0,
        7 => (429.0 * t.powi(7) - 693.0 * t.powi(5) + 315.0 * t.powi(3) - 35.0 * t) / 16.0,
        _ => panic!("degree {k} not tabulated"),
    };
    (2.0 * k as f64 + 1.0).sqrt() * p
}

/// Composite Simpson nodes and weights on [0, 1] with `intervals` (even)
/// subintervals.
fn simpson(intervals: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / intervals as f64;
    let nodes = (0..=intervals).map(|i| i as f64 * h).collect();
    let weights = (0..=intervals)
        .map(|i| {
            let c = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect();
    (nodes, weights)
}

/// Coefficients of a 2-D function on singleton blocks by Simpson's rule.
fn simpson_coefficients_2d(f: impl Fn(f64, f64) -> f64, m: usize) -> Vec<f64> {
    let (x, w) = simpson(400);
    let phi: Vec<Vec<f64>> = (0..m)
        .map(|k| x.iter().map(|&v| legendre_explicit(k, v)).collect())
        .collect();
    let mut out = vec![0.0; m * m];
    for (i, &xi) in x.iter().enumerate() {
        for (j, &xj) in x.iter().enumerate() {
            let v = f(xi, xj) * w[i] * w[j];
            for b in 0..m {
                let vb = v * phi[b][j];
                for a in 0..m {
                    out[a + m * b] += vb * phi[a][i];
                }
            }
        }
    }
    out
}

/// 1-D coefficients `int g phi_k` by Simpson's rule.
fn simpson_coefficients_1d(g: impl Fn(f64) -> f64, m: usize) -> Vec<f64> {
    let (x, w) = simpson(2000);
    (0..m)
        .map(|k| {
            x.iter()
                .zip(&w)
                .map(|(&v, &wi)| g(v) * legendre_explicit(k, v) * wi)
                .sum()
        })
        .collect()
}

fn nalgebra_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

// ---------------------------------------------------------------------------
// benchmark cells, each computed once and shared between criteria

fn cell(scenario: u8, dim: usize, s: usize, m: usize, amplitude: f64) -> CellConfig {
    let mut c = CellConfig::new(scenario, dim, s, m);
    c.n = 5000;
    c.amplitude = amplitude;
    c.methods = vec![MethodKind::LowRank, MethodKind::Kie];
    c
}

fn run_cell(c: CellConfig) -> Vec<BenchmarkResult> {
    let cfg = BenchmarkConfig {
        seed: SEED,
        reps: REPS,
        grid_points: None,
        threads: 0,
        record_timing: false,
        cells: vec![c],
    };
    run_benchmark(&cfg).expect("benchmark cell runs")
}

fn cached(slot: &'static OnceLock<Vec<BenchmarkResult>>, c: impl FnOnce() -> CellConfig) -> &'static [BenchmarkResult] {
    slot.get_or_init(|| run_cell(c()))
}

static S1_D2_M6: OnceLock<Vec<BenchmarkResult>> = OnceLock::new();
static S1_D2_M4: OnceLock<Vec<BenchmarkResult>> = OnceLock::new();
static S1_D2_M8: OnceLock<Vec<BenchmarkResult>> = OnceLock::new();
static S2_D3_A1: OnceLock<Vec<BenchmarkResult>> = OnceLock::new();
static S2_D3_A100: OnceLock<Vec<BenchmarkResult>> = OnceLock::new();
static S1_D3_S3: OnceLock<Vec<BenchmarkResult>> = OnceLock::new();

/// Scenario 2 multiplier giving about 90 points per process in D = 3.
const SCENARIO2_AMPLITUDE: f64 = 100.0;

fn scenario1_d2(m: usize) -> &'static [BenchmarkResult] {
    let slot = match m {
        4 => &S1_D2_M4,
        6 => &S1_D2_M6,
        8 => &S1_D2_M8,
        _ => unreachable!(),
    };
    cached(slot, || cell(1, 2, 2, m, 1.0))
}

fn method<'a>(res: &'a [BenchmarkResult], name: &str) -> &'a BenchmarkResult {
    res.iter().find(|r| r.method == name).expect("method present")
}

fn in_range(name: &str, r: &BenchmarkResult, lo: f64, hi: f64, reference: f64) -> Outcome {
    check(
        (lo..=hi).contains(&r.mean),
        format!(
            "{name} mean {:.4} (se {:.4}) target [{lo:.4}, {hi:.4}], reference {reference}",
            r.mean, r.se
        ),
    )
}

/// One-sided sign test p-value for "low-rank error < KIE error" over paired
/// replications.
fn sign_test(low: &BenchmarkResult, kie: &BenchmarkResult) -> (usize, f64) {
    let wins = low.errors.iter().zip(&kie.errors).filter(|(a, b)| a < b).count();
    let n = low.errors.len();
    let mut p = 0.0;
    for k in wins..=n {
        p += binomial(n, k) * 0.5f64.powi(n as i32);
    }
    (wins, p)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn ordering(name: &str, res: &[BenchmarkResult], low_name: &str) -> Outcome {
    let low = method(res, low_name);
    let kie = method(res, "kie");
    let (wins, p) = sign_test(low, kie);
    check(
        low.mean < kie.mean && p < 0.05,
        format!(
            "{name}: {low_name} {:.4} vs kie {:.4}, wins {wins}/{}, sign test p = {p:.2e}",
            low.mean,
            kie.mean,
            low.errors.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// benchmark cells

fn scenario1_d2_matrix() -> Outcome {
    in_range("matrix_svt", method(scenario1_d2(6), "matrix_svt"), 0.10, 0.18, 0.1379)
}

fn scenario1_d2_kie() -> Outcome {
    in_range("kie", method(scenario1_d2(6), "kie"), 0.22, 0.33, 0.2688)
}

fn scenario2_d3_matrix() -> Outcome {
    let res = cached(&S2_D3_A1, || cell(2, 3, 2, 6, 1.0));
    in_range("matrix_svt", method(res, "matrix_svt"), 0.04, 0.09, 0.0571)
}

fn scenario2_ordering_amplitude_1() -> Outcome {
    ordering("amplitude 1", cached(&S2_D3_A1, || cell(2, 3, 2, 6, 1.0)), "matrix_svt")
}

fn scenario2_ordering_amplitude_100() -> Outcome {
    ordering(
        "amplitude 100",
        cached(&S2_D3_A100, || cell(2, 3, 2, 6, SCENARIO2_AMPLITUDE)),
        "matrix_svt",
    )
}

fn scenario1_d3_tensor() -> Outcome {
    let res = cached(&S1_D3_S3, || cell(1, 3, 3, 6, 1.0));
    in_range("tensor", method(res, "tensor"), 0.146 - 0.05, 0.146 + 0.05, 0.1460)
}

fn scenario1_d3_tensor_below_kie() -> Outcome {
    let res = cached(&S1_D3_S3, || cell(1, 3, 3, 6, 1.0));
    let t = method(res, "tensor");
    let k = method(res, "kie");
    check(
        t.mean < k.mean,
        format!("tensor {:.4} vs kie {:.4}", t.mean, k.mean),
    )
}

fn scenario1_d2_m4() -> Outcome {
    in_range("matrix_svt m=4", method(scenario1_d2(4), "matrix_svt"), 0.1373 - 0.05, 0.1373 + 0.05, 0.1373)
}

fn scenario1_d2_m8() -> Outcome {
    in_range("matrix_svt m=8", method(scenario1_d2(8), "matrix_svt"), 0.1392 - 0.05, 0.1392 + 0.05, 0.1392)
}

fn scenario1_d2_spread() -> Outcome {
    let means: Vec<f64> = [4, 6, 8]
        .iter()
        .map(|&m| method(scenario1_d2(m), "matrix_svt").mean)
        .collect();
    let spread = means.iter().cloned().fold(f64::MIN, f64::max) - means.iter().cloned().fold(f64::MAX, f64::min);
    check(
        spread < 0.06,
        format!("means (m=4,6,8) = {means:.4?}, spread {spread:.4} < 0.06"),
    )
}

// ---------------------------------------------------------------------------
// property suite

/// Mean of the empirical coefficients over independent single-process
/// replications against the oracle, entrywise within 4 standard errors.
fn campbell_check(lambda: impl Fn(&[f64]) -> f64 + Sync, sup: f64, oracle: &[f64], m: usize, reps: usize, tag: u64) -> Outcome {
    let part = PartitionSpec::new(vec![1, 1]).unwrap();
    let draws: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let p = sample_poisson(&lambda, sup, 2, &mut substream(SEED, &[tag, r as u64])).unwrap();
            empirical_coefficients(&[p], &part, m).unwrap().into_data()
        })
        .collect();
    let len = m * m;
    let mut worst: f64 = 0.0;
    for e in 0..len {
        let vals: Vec<f64> = draws.iter().map(|d| d[e]).collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        worst = worst.max((mean - oracle[e]).abs() / se);
    }
    check(worst < 4.0, format!("largest |mean - b*| / se over {len} entries = {worst:.2}"))
}

fn campbell_constant() -> Outcome {
    let m = 6;
    let mut oracle = vec![0.0; m * m];
    oracle[0] = 100.0;
    campbell_check(|_| 100.0, 100.0, &oracle, m, 500, 1)
}

fn campbell_scenario1() -> Outcome {
    let m = 6;
    let f = scenario_intensity(ScenarioSpec::new(1, 2).unwrap()).unwrap();
    let oracle = simpson_coefficients_2d(|a, b| f.eval(&[a, b]), m);
    campbell_check(|x| f.eval(x), f.sup(), &oracle, m, 500, 2)
}

fn exact_recovery_multiplicative() -> Outcome {
    let m = 6;
    let gs: [fn(f64) -> f64; 3] = [|x| 1.0 + x * x, |x| (2.0 * x).exp(), |x| 2.0 + (3.0 * x).sin()];
    let vecs: Vec<Vec<f64>> = gs.iter().map(|g| simpson_coefficients_1d(g, m)).collect();
    let b = DenseTensor::outer(&[&vecs[0], &vecs[1], &vecs[2]]).unwrap();
    // cross-check the library projection against the oracle
    let part = PartitionSpec::new(vec![1, 1, 1]).unwrap();
    let projected = project_function(|x| gs[0](x[0]) * gs[1](x[1]) * gs[2](x[2]), &part, m, 16).unwrap();
    let proj_err = projected.sub(&b).unwrap().frobenius_norm() / b.frobenius_norm();
    let r = TuckerRank::new(vec![1, 1, 1]).unwrap();
    let out = tensor_coefficients(&b, &b, &b, &r).unwrap();
    let err = out.sub(&b).unwrap().frobenius_norm();
    check(
        err < 1e-8 && proj_err < 1e-8,
        format!("recovery error {err:.2e}, projection vs oracle {proj_err:.2e}"),
    )
}

fn exact_recovery_additive() -> Outcome {
    let m = 6;
    let gs: [fn(f64) -> f64; 3] = [|x| x * x, |x| (1.5 * x).cos(), |x| (x + 0.5).ln()];
    let vecs: Vec<Vec<f64>> = gs.iter().map(|g| simpson_coefficients_1d(g, m)).collect();
    let mut e0 = vec![0.0; m];
    e0[0] = 1.0;
    let mut b = DenseTensor::zeros(&[m, m, m]).unwrap();
    for (j, v) in vecs.iter().enumerate() {
        let factors: Vec<&[f64]> = (0..3).map(|k| if k == j { v.as_slice() } else { e0.as_slice() }).collect();
        b = b.add(&DenseTensor::outer(&factors).unwrap()).unwrap();
    }
    let r = TuckerRank::new(vec![2, 2, 2]).unwrap();
    let out = tensor_coefficients(&b, &b, &b, &r).unwrap();
    let err = out.sub(&b).unwrap().frobenius_norm();
    check(err < 1e-8, format!("recovery error {err:.2e}"))
}

fn soft_svt_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let shapes = [(5, 5), (8, 3), (3, 9), (30, 12), (12, 40), (64, 64), (520, 530)];
    let mut worst: f64 = 0.0;
    for &(p, q) in &shapes {
        for trial in 0..4 {
            let a = DMatrix::from_fn(p, q, |_, _| rng.random_range(-1.0..1.0));
            let sigma = nalgebra_singular_values(&a);
            let gamma = if trial == 0 { 0.0 } else { rng.random_range(0.0..sigma[0]) };
            let t = soft_threshold_svd(&a, gamma).unwrap();
            let got = nalgebra_singular_values(&t);
            for (g, s) in got.iter().zip(&sigma) {
                worst = worst.max((g - (s - gamma).max(0.0)).abs());
            }
        }
    }
    check(worst < 1e-10, format!("largest singular value deviation {worst:.2e}"))
}

fn eckart_young() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst: f64 = 0.0;
    for &(p, q) in &[(6, 6), (10, 4), (7, 20), (40, 25)] {
        let a = DMatrix::from_fn(p, q, |_, _| rng.random_range(-1.0..1.0));
        let sigma = nalgebra_singular_values(&a);
        for r in 1..p.min(q) {
            let approx = truncated_svd(&a, r).unwrap().reconstruct();
            let resid = (&a - approx).norm_squared();
            let tail: f64 = sigma[r..].iter().map(|s| s * s).sum();
            worst = worst.max((resid - tail).abs());
        }
    }
    check(worst < 1e-8, format!("largest |residual^2 - tail| = {worst:.2e}"))
}

fn matricization_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut failures = 0;
    let shapes: [&[usize]; 4] = [&[2, 2, 2], &[3, 4, 5], &[6, 1, 7, 2], &[9, 36]];
    for dims in shapes {
        let t = DenseTensor::from_fn(dims, |_| rng.random_range(-1.0..1.0)).unwrap();
        for j in 0..dims.len() {
            let back = unmatricize(&matricize(&t, j).unwrap(), j, dims).unwrap();
            if back != t {
                failures += 1;
            }
        }
    }
    check(failures == 0, format!("{failures} inexact round trips"))
}

fn error_decay_slope() -> Outcome {
    let m = 6;
    let part = PartitionSpec::new(vec![1, 1]).unwrap();
    let f = scenario_intensity(ScenarioSpec::new(1, 2).unwrap()).unwrap();
    let oracle = simpson_coefficients_2d(|a, b| f.eval(&[a, b]), m);
    let ns = [500usize, 2000, 8000];
    let reps = 20;
    let mut logs = Vec::new();
    for (ni, &n) in ns.iter().enumerate() {
        let errs: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let pats: Vec<_> = (0..n)
                    .map(|i| {
                        sample_poisson(|x| f.eval(x), f.sup(), 2, &mut substream(SEED, &[3, ni as u64, r, i as u64]))
                            .unwrap()
                    })
                    .collect();
                let b = empirical_coefficients(&pats, &part, m).unwrap();
                b.data()
                    .iter()
                    .zip(&oracle)
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let mean = errs.iter().sum::<f64>() / reps as f64;
        logs.push(((n as f64).ln(), mean.ln()));
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let decreasing = logs.windows(2).all(|w| w[1].1 < w[0].1);
    check(
        decreasing && (slope + 0.5).abs() <= 0.15,
        format!("log-log slope {slope:.3} (target -0.5 +/- 0.15), errors decreasing: {decreasing}"),
    )
}

fn poisson_chi_square() -> Outcome {
    let c = 8.0;
    let reps = 5000;
    let counts: Vec<usize> = (0..reps)
        .into_par_iter()
        .map(|r| {
            sample_poisson(|_| c, c, 2, &mut substream(SEED, &[4, r as u64]))
                .unwrap()
                .len()
        })
        .collect();
    // bins 0..=k with the upper tail merged into the last, each expecting >= 5
    let pmf = |k: usize| (-c + k as f64 * c.ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>()).exp();
    let mut expected = Vec::new();
    let mut lo = 0;
    while reps as f64 * pmf(lo) < 5.0 {
        lo += 1;
    }
    let lower_tail: f64 = (0..=lo).map(pmf).sum();
    expected.push(lower_tail * reps as f64);
    let mut k = lo + 1;
    let mut cum = lower_tail;
    while reps as f64 * (1.0 - cum - pmf(k)) >= 5.0 {
        expected.push(pmf(k) * reps as f64);
        cum += pmf(k);
        k += 1;
    }
    expected.push((1.0 - cum) * reps as f64);
    let last = k;
    let mut observed = vec![0.0; expected.len()];
    for &n in &counts {
        let bin = if n <= lo { 0 } else if n >= last { expected.len() - 1 } else { n - lo };
        observed[bin] += 1.0;
    }
    let stat: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = (expected.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
    check(p > 0.01, format!("chi-square {stat:.2} on {df} df, p = {p:.3}"))
}

fn thin_split_means() -> Outcome {
    let reps = 2000;
    let parts: Vec<Vec<usize>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(SEED, &[5, r as u64]);
            let p = sample_poisson(|_| 30.0, 30.0, 2, &mut rng).unwrap();
            thin_split(&p, 3, &mut rng).unwrap().iter().map(|q| q.len()).collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut means = Vec::new();
    for j in 0..3 {
        let v: Vec<f64> = parts.iter().map(|p| p[j] as f64).collect();
        let mean = v.iter().sum::<f64>() / reps as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        worst = worst.max((mean - 10.0).abs() / (var / reps as f64).sqrt());
        means.push(mean);
    }
    check(worst < 3.0, format!("part means {means:.3?}, largest deviation {worst:.2} se"))
}

fn lgcp_mean_intensity() -> Outcome {
    let draws = 500;
    let means: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|r| {
            let f = sample_lgcp_field(LGCP_LENGTHSCALE2, 32, 2, &mut substream(SEED, &[6, r as u64])).unwrap();
            f.node_values().iter().sum::<f64>() / f.node_values().len() as f64
        })
        .collect();
    let mean = means.iter().sum::<f64>() / draws as f64;
    let target = 0.5f64.exp();
    let rel = (mean - target).abs() / target;
    check(rel < 0.05, format!("mean {mean:.4} vs e^(1/2) = {target:.4}, relative gap {rel:.3}"))
}

fn benchmark_determinism() -> Outcome {
    let mut c = cell(1, 2, 2, 4, 1.0);
    c.n = 300;
    c.methods = vec![MethodKind::LowRank, MethodKind::Raw, MethodKind::Kie];
    let mut t = cell(2, 3, 3, 3, 50.0);
    t.n = 100;
    let run = |threads| {
        let cfg = BenchmarkConfig {
            seed: SEED,
            reps: 4,
            grid_points: None,
            threads,
            record_timing: false,
            cells: vec![c.clone(), t.clone()],
        };
        let mut buf = Vec::new();
        write_results(&mut buf, &run_benchmark(&cfg).unwrap()).unwrap();
        buf
    };
    let a = run(0);
    let b = run(0);
    let c1 = run(1);
    check(
        a == b && a == c1,
        format!("{} bytes, repeat identical: {}, single-thread identical: {}", a.len(), a == b, a == c1),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("scenario1_d2_matrix_svt_error", scenario1_d2_matrix),
        ("scenario1_d2_kie_error", scenario1_d2_kie),
        ("scenario2_d3_matrix_svt_error", scenario2_d3_matrix),
        ("scenario2_d3_ordering_amplitude_1", scenario2_ordering_amplitude_1),
        ("scenario2_d3_ordering_amplitude_100", scenario2_ordering_amplitude_100),
        ("scenario1_d3_tensor_error", scenario1_d3_tensor),
        ("scenario1_d3_tensor_below_kie", scenario1_d3_tensor_below_kie),
        ("scenario1_d2_m4_error", scenario1_d2_m4),
        ("scenario1_d2_m8_error", scenario1_d2_m8),
        ("scenario1_d2_spread_over_m", scenario1_d2_spread),
        ("property_campbell_constant", campbell_constant),
        ("property_campbell_scenario1", campbell_scenario1),
        ("property_exact_recovery_multiplicative", exact_recovery_multiplicative),
        ("property_exact_recovery_additive", exact_recovery_additive),
        ("property_soft_svt_contract", soft_svt_contract),
        ("property_eckart_young", eckart_young),
        ("property_matricization_round_trip", matricization_round_trip),
        ("property_error_decay_slope", error_decay_slope),
        ("property_poisson_chi_square", poisson_chi_square),
        ("property_thin_split_means", thin_split_means),
        ("property_lgcp_mean_intensity", lgcp_mean_intensity),
        ("property_benchmark_determinism", benchmark_determinism),
    ];
    // libtest-style flags (e.g. --nocapture) are accepted and ignored
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, f) in &criteria {
        if filter.as_deref().is_some_and(|flt| !name.contains(flt)) {
            continue;
        }
        ran += 1;
        match catch_unwind(AssertUnwindSafe(f)) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(detail)) => {
                println!("FAIL {name}: {detail}");
                failed.push(*name);
            }
            Err(_) => {
                println!("FAIL {name}: panicked");
                failed.push(*name);
            }
        }
    }
    println!("acceptance: {} passed, {} failed", ran - failed.len(), failed.len());
    if !failed.is_empty() {
        println!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
