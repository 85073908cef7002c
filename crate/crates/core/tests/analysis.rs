use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sunladder::analysis::{
    asymptotic_freedom_fit, estimate_xi, fit_with_exclusion, quench_summary, xi_from_tail, xi_second_moment,
    BinnedCorrelation, CorrelationFunction, SaturationRule, ScalingPoint, XiOptions,
};

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let (u, v): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}

fn ring_weights(l: usize) -> Vec<f64> {
    (0..=l / 2).map(|x| if x == 0 || 2 * x == l { 1.0 } else { 2.0 }).collect()
}

fn exact(values: Vec<f64>, rel: f64, l: usize, periodic: bool) -> CorrelationFunction {
    let errors = values.iter().map(|v| rel * v.abs()).collect();
    CorrelationFunction::new(values, errors, l, periodic).unwrap()
}

/// Bins of `c(x)` with independent relative Gaussian noise.
fn noisy_bins(c: &[f64], rel: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| c.iter().map(|v| v * (1.0 + rel * gauss(&mut rng))).collect()).collect()
}

#[test]
fn pure_exponential_tail() {
    let c: Vec<f64> = (0..=50).map(|x| (-(x as f64) / 5.0).exp()).collect();
    let fit = xi_from_tail(&exact(c, 0.01, 100, true), (10, 20)).unwrap();
    // the ring fit adds a mirror term the data lack, a bias of order e^{−12}
    assert!((fit.xi - 5.0).abs() < 5e-3, "{} ± {}", fit.xi, fit.xi_err);
    assert!(fit.reliable);
}

#[test]
fn symmetrized_tail() {
    let (l, xi) = (96usize, 12.0);
    let c: Vec<f64> = (0..=l / 2).map(|x| ((l as f64 / 2.0 - x as f64) / xi).cosh()).collect();
    let fit = xi_from_tail(&exact(c, 0.01, l, true), (12, 40)).unwrap();
    assert!((fit.xi - xi).abs() / xi < 0.02, "{}", fit.xi);
}

#[test]
fn flat_data_is_unreliable() {
    let fit = xi_from_tail(&exact(vec![1.0; 51], 0.01, 100, true), (5, 30)).unwrap();
    assert!(!fit.reliable);
    assert!(fit.note.is_some());
}

#[test]
fn second_moment_of_ornstein_zernike_data() {
    let (l, xi) = (128usize, 8.0);
    // S(q) = 1/(1 + ξ²·4sin²(q/2)), transformed back to real space
    let s = |q: f64| 1.0 / (1.0 + xi * xi * 4.0 * (q / 2.0).sin().powi(2));
    let c: Vec<f64> = (0..=l / 2)
        .map(|x| (0..l).map(|m| 2.0 * PI * m as f64 / l as f64).map(|q| s(q) * (q * x as f64).cos()).sum::<f64>() / l as f64)
        .collect();
    let binned = BinnedCorrelation {
        length: l,
        periodic: true,
        weights: ring_weights(l),
        bins: noisy_bins(&c, 1e-4, 20, 1),
        structure: None,
    };
    let (xi2, err) = binned.xi_second_moment().unwrap();
    assert!((xi2 - xi).abs() / xi < 0.10, "{xi2}");
    assert!(err.is_finite() && err > 0.0);
    assert!((xi_second_moment(2.0, 1.0, 2.0 * PI).unwrap() - 1.0).abs() < 1e-15);
    assert!(xi_second_moment(1.0, 1.0, 64.0).is_err());
}

#[test]
fn estimators_agree_on_noisy_exponential() {
    let (l, xi) = (192usize, 6.0);
    let c: Vec<f64> =
        (0..=l / 2).map(|x| (-(x as f64) / xi).exp() + (-((l - x) as f64) / xi).exp()).collect();
    for seed in 0..5 {
        let binned = BinnedCorrelation {
            length: l,
            periodic: true,
            weights: ring_weights(l),
            bins: noisy_bins(&c, 0.01, 40, seed),
            structure: None,
        };
        let est = estimate_xi(&binned, &XiOptions::default()).unwrap();
        assert!(est.discrepancy < 0.15, "seed {seed}: {} vs {}", est.xi_tail, est.xi_second_moment);
        assert!(est.xi_tail_err.is_finite() && est.xi_second_moment_err.is_finite());
        assert!((est.xi_tail - xi).abs() < 4.0 * est.xi_tail_err + 0.05);
    }
}

fn points(xi: impl Fn(usize) -> f64, rel: f64) -> Vec<ScalingPoint> {
    (1..=5).map(|k| 2 * k).map(|n| ScalingPoint { n, xi: xi(n), err: rel * xi(n) }).collect()
}

#[test]
fn exact_exponential_scaling() {
    let fit = asymptotic_freedom_fit(&points(|n| 0.5 * (0.7 * n as f64).exp(), 0.02), 3).unwrap();
    assert!((fit.slope - 0.7).abs() < 1e-12);
    assert!((fit.intercept - 0.5f64.ln()).abs() < 1e-12);
    assert!((fit.stiffness_over_velocity - 0.7 * 3.0 / (4.0 * PI)).abs() < 1e-12);
    assert!(asymptotic_freedom_fit(&points(|n| n as f64, 0.1)[..2], 3).is_err());
}

#[test]
fn scaling_fit_with_one_outlier() {
    let rel = 0.02;
    let base = |n: usize| 0.5 * (0.7 * n as f64).exp();
    // 3σ in ξ on the central point
    let mut pts = points(base, rel);
    pts[2].xi += 3.0 * pts[2].err;
    let fit = asymptotic_freedom_fit(&pts, 3).unwrap();
    assert!((fit.slope - 0.7).abs() <= fit.slope_err, "{} ± {}", fit.slope, fit.slope_err);

    // on the largest n it is removed by the quality rule
    let mut pts = points(base, rel);
    pts[4].xi += 3.0 * pts[4].err;
    let fit = fit_with_exclusion(&pts, 3, SaturationRule::DropUntilQuality { max_chi2_dof: 1.0 }).unwrap();
    assert_eq!(fit.excluded.len(), 1);
    assert_eq!(fit.excluded[0].n, 10);
    assert!((fit.slope - 0.7).abs() <= fit.slope_err.max(1e-12));
}

#[test]
fn reported_slope_error_is_calibrated() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rel = 0.05;
    let trials = 400;
    let mut inside = 0;
    for _ in 0..trials {
        let pts: Vec<ScalingPoint> = points(|n| 0.5 * (0.7 * n as f64).exp(), rel)
            .into_iter()
            .map(|p| ScalingPoint { xi: p.xi * (rel * gauss(&mut rng)).exp(), ..p })
            .collect();
        let fit = asymptotic_freedom_fit(&pts, 3).unwrap();
        if (fit.slope - 0.7).abs() <= fit.slope_err {
            inside += 1;
        }
    }
    let frac = inside as f64 / trials as f64;
    assert!((0.6..0.76).contains(&frac), "{frac}");
}

#[test]
fn damped_cosine_frequency() {
    let (d0, gamma, omega) = (37.0, 0.1, 1.7);
    let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
    let d: Vec<f64> = times.iter().map(|t| d0 * (-gamma * t).exp() * (omega * t).cos()).collect();
    let s = quench_summary(&times, &d, None).unwrap();
    assert!((s.omega.unwrap() - omega).abs() / omega < 0.05);
    assert!(s.oscillates);
    assert!(s.half_crossing_and_revival);
    assert_eq!(s.d0, d0);

    let flat = quench_summary(&times, &vec![5.0; times.len()], None).unwrap();
    assert!(!flat.oscillates);
    assert!(flat.first_min_time.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fits_ignore_overall_scale(scale in 1e-3f64..1e3, xi in 2.0f64..10.0, seed in 0u64..1000) {
        let l = 128usize;
        let c: Vec<f64> = (0..=l / 2).map(|x| (-(x as f64) / xi).exp() + (-((l - x) as f64) / xi).exp()).collect();
        let bins = noisy_bins(&c, 0.01, 20, seed);
        let mk = |s: f64| BinnedCorrelation {
            length: l,
            periodic: true,
            weights: ring_weights(l),
            bins: bins.iter().map(|b| b.iter().map(|v| v * s).collect()).collect(),
            structure: None,
        };
        let a = estimate_xi(&mk(1.0), &XiOptions::default()).unwrap();
        let b = estimate_xi(&mk(scale), &XiOptions::default()).unwrap();
        prop_assert!((a.xi_tail - b.xi_tail).abs() < 1e-9 * a.xi_tail);
        prop_assert!((a.xi_second_moment - b.xi_second_moment).abs() < 1e-9 * a.xi_second_moment);
        prop_assert_eq!(a.window, b.window);

        let fa = xi_from_tail(&exact(c.clone(), 0.01, l, true), (4, 20)).unwrap();
        let fb = xi_from_tail(&exact(c.iter().map(|v| v * scale).collect(), 0.01, l, true), (4, 20)).unwrap();
        prop_assert!((fa.xi - fb.xi).abs() < 1e-9 * fa.xi);
        prop_assert!((fb.amplitude / fa.amplitude / scale - 1.0).abs() < 1e-9);
    }

    #[test]
    fn second_moment_is_finite_and_positive(s1 in 1e-3f64..10.0, ratio in 1.0001f64..100.0, l in 4usize..500) {
        let xi = xi_second_moment(s1 * ratio, s1, l as f64).unwrap();
        prop_assert!(xi.is_finite() && xi > 0.0);
    }
}
