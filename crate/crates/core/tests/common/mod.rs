#![allow(dead_code)]

use fractal_counts::{CountSeries, CumulativeSeries};

/// Least-squares slope of ln Q_t against ln t over `t in lo..=hi` (1-based).
pub fn loglog_slope(q: &[f64], lo: usize, hi: usize) -> f64 {
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .map(|t| ((t as f64).ln(), q[t - 1].ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Brute-force estimator: minimises sum ln^2((Q_j^p - Q_{j-1}^p) / C_j^p)
/// over p in [1, 3] in steps of 0.001, using the usable steps only.
pub fn grid_oracle(c: &[f64], q: &[f64]) -> f64 {
    let mut steps = Vec::new();
    let mut prev = 0.0;
    for (&cj, &qj) in c.iter().zip(q) {
        if cj > 0.0 && 1.6 * cj < (qj + prev) / 2.0 && qj > prev {
            steps.push((cj, qj, prev));
        }
        prev = qj;
    }
    assert!(!steps.is_empty());
    let objective = |p: f64| -> f64 {
        steps
            .iter()
            .map(|&(cj, qj, qp)| ((qj.powf(p) - qp.powf(p)) / cj.powf(p)).ln().powi(2))
            .sum()
    };
    let mut best = (f64::INFINITY, 1.0);
    for k in 0..=2000 {
        let p = 1.0 + k as f64 * 0.001;
        let v = objective(p);
        if v < best.0 {
            best = (v, p);
        }
    }
    best.1
}

/// Running L^p combination computed directly, without scaling.
pub fn running_norm(c: &[f64], p: f64) -> Vec<f64> {
    let mut acc = 0.0;
    c.iter()
        .map(|x| {
            acc += x.powf(p);
            acc.powf(1.0 / p)
        })
        .collect()
}

/// Noiseless series Q_j = g j^r, C_j = g for j = 1..=n.
pub fn scaling_series(g: f64, r: f64, n: usize) -> (CountSeries, CumulativeSeries) {
    let q = (1..=n).map(|j| g * (j as f64).powf(r)).collect();
    (
        CountSeries::new(1, 1.0, vec![g; n]).unwrap(),
        CumulativeSeries::new(1, q).unwrap(),
    )
}
