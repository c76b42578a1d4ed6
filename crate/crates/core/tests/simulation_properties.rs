use lowrank_intensity::basis::{gauss_legendre, legendre_eval};
use lowrank_intensity::rng::substream;
use lowrank_intensity::simulate::{
    sample_lgcp, sample_neyman_scott, sample_poisson, scenario_intensity, thin_split,
    PointPattern, ScenarioSpec, LGCP_LENGTHSCALE2,
};
use rayon::prelude::*;

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn counts<F>(reps: usize, tag: u64, sample: F) -> Vec<f64>
where
    F: Fn(&mut lowrank_intensity::rng::SimRng) -> PointPattern + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|r| sample(&mut substream(tag, &[r as u64])).len() as f64)
        .collect()
}

fn within_3se(v: &[f64], target: f64) -> bool {
    let (mean, sd) = mean_sd(v);
    (mean - target).abs() <= 3.0 * sd / (v.len() as f64).sqrt()
}

#[test]
fn constant_intensity_mean_count() {
    let c = counts(2000, 1, |rng| sample_poisson(|_| 50.0, 50.0, 2, rng).unwrap());
    assert!(within_3se(&c, 50.0));
}

#[test]
fn scenario1_mean_count_matches_quadrature() {
    let f = scenario_intensity(ScenarioSpec::new(1, 2).unwrap()).unwrap();
    let (x, w) = gauss_legendre(40);
    let mut integral = 0.0;
    for (a, wa) in x.iter().zip(&w) {
        for (b, wb) in x.iter().zip(&w) {
            integral += wa * wb * f.eval(&[*a, *b]);
        }
    }
    let c = counts(2000, 2, |rng| sample_poisson(|p| f.eval(p), f.sup(), 2, rng).unwrap());
    assert!(within_3se(&c, integral), "mean count vs {integral}");
}

#[test]
fn campbell_formula_for_basis_product() {
    // f(u) = phi_2(u_1) phi_3(u_2), lambda from scenario 1
    let lam = scenario_intensity(ScenarioSpec::new(1, 2).unwrap()).unwrap();
    let f = |u: &[f64]| {
        let a = legendre_eval(3, u[0]).unwrap();
        let b = legendre_eval(3, u[1]).unwrap();
        a[1] * b[2]
    };
    let (x, w) = gauss_legendre(40);
    let mut target = 0.0;
    for (a, wa) in x.iter().zip(&w) {
        for (b, wb) in x.iter().zip(&w) {
            target += wa * wb * f(&[*a, *b]) * lam.eval(&[*a, *b]);
        }
    }
    let sums: Vec<f64> = (0..5000)
        .into_par_iter()
        .map(|r| {
            let p = sample_poisson(|u| lam.eval(u), lam.sup(), 2, &mut substream(3, &[r])).unwrap();
            p.iter().map(f).sum()
        })
        .collect();
    let (mean, sd) = mean_sd(&sums);
    assert!((mean - target).abs() <= 4.0 * sd / (sums.len() as f64).sqrt(), "{mean} vs {target}");
}

#[test]
fn neyman_scott_mean_count() {
    let c = counts(2000, 4, |rng| sample_neyman_scott(10.0, 5.0, 0.02, 2, rng).unwrap());
    assert!(within_3se(&c, 50.0));
    assert!(sample_neyman_scott(0.0, 5.0, 0.02, 2, &mut substream(0, &[])).unwrap().is_empty());
    assert!(sample_neyman_scott(10.0, 0.0, 0.02, 2, &mut substream(0, &[])).unwrap().is_empty());
}

#[test]
fn lgcp_mean_count() {
    let c = counts(500, 5, |rng| sample_lgcp(LGCP_LENGTHSCALE2, 16, 2, rng).unwrap().0);
    assert!(within_3se(&c, 0.5f64.exp()));
}

#[test]
fn thin_split_partitions_points() {
    let p = sample_poisson(|_| 40.0, 40.0, 3, &mut substream(6, &[])).unwrap();
    let parts = thin_split(&p, 4, &mut substream(6, &[1])).unwrap();
    assert_eq!(parts.iter().map(|q| q.len()).sum::<usize>(), p.len());
    let mut all: Vec<Vec<f64>> = parts.iter().flat_map(|q| q.iter().map(|x| x.to_vec())).collect();
    let mut orig: Vec<Vec<f64>> = p.iter().map(|x| x.to_vec()).collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    orig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(all, orig);
    assert!(thin_split(&p, 1, &mut substream(6, &[1])).is_err());
}

#[test]
fn generators_are_deterministic_and_in_domain() {
    let f = scenario_intensity(ScenarioSpec::new(3, 3).unwrap()).unwrap();
    let draws: Vec<PointPattern> = (0..2)
        .map(|_| {
            let mut rng = substream(7, &[1, 2]);
            let mut out = sample_poisson(|x| 30.0 * f.eval(x), 30.0 * f.sup(), 3, &mut rng).unwrap();
            for q in [
                sample_neyman_scott(8.0, 4.0, 0.1, 3, &mut rng).unwrap(),
                sample_lgcp(LGCP_LENGTHSCALE2, 8, 3, &mut rng).unwrap().0,
            ] {
                for x in q.iter() {
                    out.push(x).unwrap();
                }
            }
            out
        })
        .collect();
    assert_eq!(draws[0], draws[1]);
    assert!(draws[0].coords().iter().all(|&c| (0.0..=1.0).contains(&c)));
}
