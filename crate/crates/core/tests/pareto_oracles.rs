mod common;

use fractal_counts::ParetoLifetimeModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(a: f64, b: f64) -> ParetoLifetimeModel {
    ParetoLifetimeModel::new(a, b, 1000).unwrap()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = (a + b) / 2.0;
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = (a + b) / 2.0;
    let (l, r) = (simpson(f, a, m), simpson(f, m, b));
    if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
        return l + r + (l + r - whole) / 15.0;
    }
    adaptive(f, a, m, l, tol / 2.0, depth - 1) + adaptive(f, m, b, r, tol / 2.0, depth - 1)
}

/// Integral of the pdf over [lo, hi], in log coordinates.
fn integrate_pdf(m: &ParetoLifetimeModel, lo: f64, hi: f64) -> f64 {
    let f = |u: f64| {
        let x = u.exp();
        m.pdf(x.max(lo)).unwrap() * x
    };
    let (a, b) = (lo.ln(), hi.ln());
    adaptive(&f, a, b, simpson(&f, a, b), 1e-10, 40)
}

#[test]
fn pdf_integrates_to_one() {
    for b in [0.3, 0.5, 0.9] {
        let m = model(1.0, b);
        let total = integrate_pdf(&m, 1.0, 1e8);
        // the missing tail mass beyond 1e8 is 1e-8^b
        let expected = 1.0 - 1e8f64.powf(-b);
        assert!(
            (total - expected).abs() < 1e-6,
            "b={b}: {total} vs {expected}"
        );
        if b >= 0.5 {
            assert!((total - 1.0).abs() < 1e-3, "b={b}: {total}");
        }
    }
}

#[test]
fn cdf_derivative_is_pdf() {
    for (a, b) in [(1.0, 0.5), (0.01, 0.2), (3.0, 0.8)] {
        let m = model(a, b);
        for k in [1.5, 4.0, 100.0] {
            let x: f64 = k * a;
            let h = x * 1e-5;
            // five-point stencil
            let d = (-m.cdf(x + 2.0 * h).unwrap() + 8.0 * m.cdf(x + h).unwrap()
                - 8.0 * m.cdf(x - h).unwrap()
                + m.cdf(x - 2.0 * h).unwrap())
                / (12.0 * h);
            let p = m.pdf(x).unwrap();
            assert!(((d - p) / p).abs() < 1e-6, "a={a} b={b} x={x}: {d} vs {p}");
        }
    }
}

#[test]
fn samples_follow_the_cdf() {
    let m = model(1.0, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 1_000_000;
    let mut xs: Vec<f64> = (0..n).map(|_| m.sample(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = m.cdf(x).unwrap();
        d = d
            .max((f - i as f64 / n as f64).abs())
            .max(((i + 1) as f64 / n as f64 - f).abs());
    }
    assert!(d < 0.002, "KS distance {d}");
}

#[test]
fn sample_lifetime_decreasing_in_u() {
    let m = model(2.0, 0.4);
    let us: Vec<f64> = (1..=1000).map(|k| k as f64 / 1000.0).collect();
    let xs: Vec<f64> = us.iter().map(|&u| m.sample_lifetime(u).unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[0] > w[1]));
    assert_eq!(xs[999], 2.0);
}

#[test]
fn heavy_tail_sample_mean_grows() {
    let m = model(1.0, 0.6);
    let sizes = [100usize, 10_000, 1_000_000];
    let mut medians = Vec::new();
    for &size in &sizes {
        let means: Vec<f64> = (0..21)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..size).map(|_| m.sample(&mut rng)).sum::<f64>() / size as f64
            })
            .collect();
        medians.push(common::median(means));
    }
    assert!(medians.windows(2).all(|w| w[0] < w[1]), "{medians:?}");
}

#[test]
fn truncated_monte_carlo_matches_expected_replacements() {
    let n_pop = 1000;
    for b in [0.3, 0.5, 0.7] {
        for t in [2.0, 10.0, 50.0] {
            let m = ParetoLifetimeModel::new(1.0 / t, b, n_pop).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let samples = 2_000_000;
            let sum: f64 = (0..samples)
                .map(|_| {
                    let u = 1.0 - rng.gen::<f64>();
                    let x = (1.0 / t) * u.powf(-1.0 / b);
                    if x >= 1.0 {
                        t / x
                    } else {
                        0.0
                    }
                })
                .sum();
            let mc = n_pop as f64 * sum / samples as f64;
            let exact = m.expected_replacements(t).unwrap();
            assert!(
                ((mc - exact) / exact).abs() < 0.01,
                "b={b} t={t}: {mc} vs {exact}"
            );
        }
    }
}

#[test]
fn count_ratio_law() {
    for k in 1..=9 {
        let r = k as f64 / 10.0;
        let m = ParetoLifetimeModel::new(1.0, 1.0 - r, 1000).unwrap();
        for t in [1.0, 3.5, 100.0] {
            let ratio = m.expected_count(t).unwrap() / m.expected_replacements(t).unwrap();
            let want = (2.0 - r) / (1.0 - r);
            assert!(((ratio - want) / want).abs() < 1e-12);
            let growth = m.expected_count(t).unwrap() / m.expected_count(1.0).unwrap();
            assert!((growth - t.powf(r)).abs() <= 1e-12 * t.powf(r));
        }
    }
}
