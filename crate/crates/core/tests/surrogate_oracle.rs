mod common;

use common::{ols, SplitMix};
use proptest::prelude::*;
use rle::perturb::AdjacencyFeatureVector;
use rle::surrogate::{fit, lambda_max, AuxiliaryDataset, Penalty, SurrogateFit, SurrogateSettings};

fn binary_design(rows: usize, cols: usize, seed: u64) -> (Vec<Vec<u8>>, Vec<f64>) {
    let mut rng = SplitMix(seed);
    let truth: Vec<f64> = (0..cols).map(|_| rng.unit() * 4.0 - 2.0).collect();
    let x: Vec<Vec<u8>> = (0..rows)
        .map(|_| (0..cols).map(|_| (rng.below(2)) as u8).collect())
        .collect();
    let y = x
        .iter()
        .map(|row| {
            0.3 + row.iter().zip(&truth).map(|(&a, w)| f64::from(a) * w).sum::<f64>()
                + 0.1 * (rng.unit() - 0.5)
        })
        .collect();
    (x, y)
}

fn dataset(x: &[Vec<u8>], y: &[f64]) -> AuxiliaryDataset {
    let mut d = AuxiliaryDataset::new(x[0].len());
    for (row, &t) in x.iter().zip(y) {
        d.push(AdjacencyFeatureVector::new(row.clone()), t).unwrap();
    }
    d
}

fn as_f64(x: &[Vec<u8>]) -> Vec<Vec<f64>> {
    x.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect()
}

fn settings(lambda: f64, penalty: Penalty, tol: f64) -> SurrogateSettings {
    SurrogateSettings {
        lambda,
        penalty,
        tol,
        max_iter: 100_000,
    }
}

/// Max over j of the violation of the L1 stationarity conditions.
fn kkt_violation(fit: &SurrogateFit, x: &[Vec<u8>], y: &[f64]) -> f64 {
    let m = y.len() as f64;
    let p = fit.weights.len();
    let xm: Vec<f64> = (0..p)
        .map(|j| x.iter().map(|r| f64::from(r[j])).sum::<f64>() / m)
        .collect();
    let ym = y.iter().sum::<f64>() / m;
    let resid: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(r, &t)| {
            (t - ym)
                - (0..p)
                    .map(|j| (f64::from(r[j]) - xm[j]) * fit.weights[j])
                    .sum::<f64>()
        })
        .collect();
    (0..p)
        .map(|j| {
            let g = 2.0 / m
                * x.iter()
                    .zip(&resid)
                    .map(|(r, e)| (f64::from(r[j]) - xm[j]) * e)
                    .sum::<f64>();
            let w = fit.weights[j];
            if w != 0.0 {
                (g - fit.lambda * w.signum()).abs()
            } else {
                (g.abs() - fit.lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn unregularized_fit_matches_normal_equations() {
    let mut checked = 0;
    for seed in 0..20 {
        let (x, y) = binary_design(20, 6, seed);
        let Some((w_ref, b_ref)) = ols(&as_f64(&x), &y) else {
            continue;
        };
        checked += 1;
        let d = dataset(&x, &y);
        for s in [settings(0.0, Penalty::L1, 1e-7), settings(0.0, Penalty::L2, 1e-7)] {
            let f = fit(&d, &s).unwrap();
            let err = f.weights.iter().zip(&w_ref).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "seed {seed} {:?}: max |w - w_ols| = {err:e}", s.penalty);
            assert!((f.intercept - b_ref).abs() < 1e-6);
            for row in &x {
                let oracle = b_ref + row.iter().zip(&w_ref).map(|(&a, w)| f64::from(a) * w).sum::<f64>();
                let pred = f.predict(&AdjacencyFeatureVector::new(row.clone())).unwrap();
                assert!((pred - oracle).abs() < 1e-6);
            }
        }
    }
    assert!(checked >= 15, "only {checked} full-rank designs");
}

#[test]
fn lasso_satisfies_kkt() {
    for seed in 0..10 {
        let (x, y) = binary_design(40, 10, 100 + seed);
        let d = dataset(&x, &y);
        let lmax = lambda_max(&d).unwrap();
        for frac in [0.01, 0.1, 0.5, 0.9] {
            let s = settings(frac * lmax, Penalty::L1, 1e-7);
            let f = fit(&d, &s).unwrap();
            assert!(f.converged);
            let v = kkt_violation(&f, &x, &y);
            assert!(v < 10.0 * s.tol, "seed {seed} frac {frac}: violation {v:e}");
        }
    }
}

#[test]
fn lambda_max_zeroes_every_weight() {
    for seed in 0..10 {
        let (x, y) = binary_design(30, 8, 200 + seed);
        let d = dataset(&x, &y);
        let lmax = lambda_max(&d).unwrap();
        for lambda in [lmax, lmax * 1.5, lmax * 10.0] {
            let f = fit(&d, &settings(lambda, Penalty::L1, 1e-7)).unwrap();
            assert!(f.weights.iter().all(|&w| w == 0.0));
        }
        let f = fit(&d, &settings(lmax * 0.95, Penalty::L1, 1e-7)).unwrap();
        assert!(f.weights.iter().any(|&w| w != 0.0));
    }
}

#[test]
fn underdetermined_lasso_is_finite_and_deterministic() {
    let (x, y) = binary_design(8, 30, 7);
    let d = dataset(&x, &y);
    let a = fit(&d, &SurrogateSettings::default()).unwrap();
    let b = fit(&d, &SurrogateSettings::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.weights.iter().all(|w| w.is_finite()));
    assert!(fit(&d, &settings(0.0, Penalty::L2, 1e-7)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn objective_never_increases(
        seed in any::<u64>(),
        rows in 3usize..40,
        cols in 1usize..15,
        lambda in 0.0f64..0.5,
    ) {
        let (x, y) = binary_design(rows, cols, seed);
        let d = dataset(&x, &y);
        let f = fit(&d, &settings(lambda, Penalty::L1, 1e-9)).unwrap();
        for pair in f.objective_trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-12 * pair[0].abs().max(1.0), "{:?}", pair);
        }
        prop_assert!(f.objective_value.is_finite());
    }
}
