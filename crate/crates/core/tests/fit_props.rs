mod common;

use common::{grid_oracle, scaling_series};
use fractal_counts::{delta_step, fit_p, CountSeries, CumulativeSeries, FitSettings};
use proptest::prelude::*;

fn scaled(c: &CountSeries, q: &CumulativeSeries, k: f64) -> (CountSeries, CumulativeSeries) {
    (
        CountSeries::new(
            c.start_index(),
            c.interval_width(),
            c.counts().iter().map(|x| x * k).collect(),
        )
        .unwrap(),
        CumulativeSeries::new(q.start_index(), q.values().iter().map(|x| x * k).collect()).unwrap(),
    )
}

/// Scaling-law series with multiplicative noise of relative size `spread` on
/// the interval counts.
fn noisy_series_with(spread: f64) -> impl Strategy<Value = (CountSeries, CumulativeSeries)> {
    let noise = prop::collection::vec(1.0 - spread..1.0 + spread, 80);
    (0.3f64..0.95, 20usize..80, noise).prop_map(|(r, n, noise)| {
        let g = 50.0;
        let q: Vec<f64> = (1..=n).map(|j| g * (j as f64).powf(r)).collect();
        let c: Vec<f64> = (0..n).map(|k| (g * noise[k]).round()).collect();
        (
            CountSeries::new(1, 1.0, c).unwrap(),
            CumulativeSeries::new(1, q).unwrap(),
        )
    })
}

fn noisy_series() -> impl Strategy<Value = (CountSeries, CumulativeSeries)> {
    noisy_series_with(0.3)
}

#[test]
fn exact_series_fixed_point() {
    for r in [0.5, 0.8, 0.9] {
        let (c, q) = scaling_series(100.0, r, 60);
        let fit = fit_p(&c, &q, &FitSettings::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.p - 1.0 / r).abs() < 1e-6, "r={r}: {}", fit.p);
        assert!(fit.sigma < 1e-9);
        assert_eq!(fit.included_steps + fit.excluded_steps, 60);
    }
}

#[test]
fn exact_series_match_grid_oracle() {
    for r in [0.5, 0.6, 0.8] {
        let (c, q) = scaling_series(100.0, r, 40);
        let fit = fit_p(&c, &q, &FitSettings::default()).unwrap();
        let oracle = grid_oracle(c.counts(), q.values());
        assert!(
            (fit.p - oracle).abs() <= 0.001,
            "r={r}: {} vs {oracle}",
            fit.p
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scale_invariant((c, q) in noisy_series(), k in prop::sample::select(vec![1e-2, 7.0, 1e3, 1e6])) {
        let base = fit_p(&c, &q, &FitSettings::default()).unwrap();
        let (c2, q2) = scaled(&c, &q, k);
        let other = fit_p(&c2, &q2, &FitSettings::default()).unwrap();
        prop_assert!((base.p - other.p).abs() < 1e-9, "{} vs {}", base.p, other.p);
        prop_assert_eq!(base.included_steps, other.included_steps);
    }

    #[test]
    fn converged_fit_is_a_fixed_point((c, q) in noisy_series()) {
        let settings = FitSettings::default();
        let fit = fit_p(&c, &q, &settings).unwrap();
        if fit.converged {
            let d = delta_step(&c, &q, fit.p).unwrap();
            prop_assert!(d.delta.abs() < settings.tolerance * 10.0, "{}", d.delta);
            prop_assert!((fit.r * fit.p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mildly_noisy_fit_stays_near_grid_oracle((c, q) in noisy_series_with(0.05)) {
        let fit = fit_p(&c, &q, &FitSettings::default()).unwrap();
        let oracle = grid_oracle(c.counts(), q.values());
        prop_assume!(fit.p < 2.9);
        prop_assert!((fit.p - oracle).abs() < 0.02, "{} vs {oracle}", fit.p);
    }
}
