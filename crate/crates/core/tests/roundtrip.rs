mod common;

use std::io::Cursor;

use fractal_counts::ingest::{ingest_reader, IngestReport};
use fractal_counts::{
    emit_events, fit_p, ingest, lp_combine, run_sim, EventRecord, FitSettings, FormatRegistry,
    NormExponent, Origin, ParetoLifetimeModel, ParseMode, SimConfig,
};
use proptest::prelude::*;

fn config(n: u64, b: f64, horizon: u32, seed: u64) -> SimConfig {
    SimConfig::new(ParetoLifetimeModel::new(0.01, b, n).unwrap(), horizon, seed)
}

fn through_format(config: &SimConfig, format: &str) -> IngestReport {
    let reg = FormatRegistry::default();
    let fmt = reg.get(format).unwrap();
    let mut buf = Vec::new();
    {
        let mut sink = fmt.writer(Box::new(&mut buf)).unwrap();
        emit_events(config, sink.as_mut()).unwrap();
    }
    ingest_reader(
        Box::new(Cursor::new(buf)),
        fmt,
        config.interval_width,
        Some(Origin::At(0.0)),
        ParseMode::Strict,
    )
    .unwrap()
}

#[test]
fn simulator_counts_survive_event_files() {
    let c = config(100, 0.5, 20, 7);
    let truth = run_sim(&c).unwrap();
    for format in ["jsonl", "csv"] {
        let report = through_format(&c, format);
        let (counts, cum) = report.index.series();
        assert_eq!(counts, truth.interval_counts, "{format}");
        assert_eq!(cum, truth.cumulative_counts, "{format}");
        assert_eq!(report.index.distinct_ids() as u64, truth.distinct_ids);
        assert_eq!(report.skipped, 0);
    }
}

#[test]
fn round_trip_with_width_burn_in_and_profile() {
    let mut c = SimConfig::new(ParetoLifetimeModel::new(0.07, 0.3, 300).unwrap(), 30, 3);
    c.interval_width = 7.0;
    c.burn_in = 5;
    c.observed_fraction = Some(vec![1.0, 0.5, 0.25]);
    let truth = run_sim(&c).unwrap();
    let mut events = Vec::new();
    let written = emit_events(&c, &mut events).unwrap();
    assert_eq!(written as usize, events.len());
    assert!(written >= truth.distinct_ids);
    let (counts, cum) = ingest(&events, 7.0, Origin::At(0.0)).unwrap();
    assert_eq!(counts.counts(), truth.interval_counts.counts());
    assert_eq!(cum.values(), truth.cumulative_counts.values());
}

#[test]
fn single_individual_single_interval() {
    let c = SimConfig::new(ParetoLifetimeModel::new(5.0, 0.5, 1).unwrap(), 1, 0);
    let mut events = Vec::new();
    assert_eq!(emit_events(&c, &mut events).unwrap(), 1);
}

#[test]
fn weekly_and_daily_agree_on_final_reach() {
    let c = config(1000, 0.4, 70, 5);
    let mut events = Vec::new();
    emit_events(&c, &mut events).unwrap();
    let (_, daily) = ingest(&events, 1.0, Origin::At(0.0)).unwrap();
    let (wc, weekly) = fractal_counts::rebucket(&events, 1.0, Origin::At(0.0), 7.0).unwrap();
    assert_eq!(wc.len(), 10);
    assert_eq!(daily.last(), weekly.last());
}

#[test]
fn combine_of_daily_and_weekly_at_their_own_p() {
    let c = config(2000, 0.4, 140, 8);
    let mut events = Vec::new();
    emit_events(&c, &mut events).unwrap();
    let (dc, dq) = ingest(&events, 1.0, Origin::At(0.0)).unwrap();
    let (wc, wq) = fractal_counts::rebucket(&events, 1.0, Origin::At(0.0), 7.0).unwrap();
    let dp = fit_p(&dc, &dq, &FitSettings::default()).unwrap();
    let wp = fit_p(&wc, &wq, &FitSettings::default()).unwrap();
    assert!(dp.converged && wp.converged);
    let daily = lp_combine(dc.counts(), NormExponent::new(dp.p).unwrap()).unwrap();
    let weekly = lp_combine(wc.counts(), NormExponent::new(wp.p).unwrap()).unwrap();
    assert!(
        ((daily - weekly) / weekly).abs() < 0.05,
        "{daily} vs {weekly}"
    );
}

fn events() -> impl Strategy<Value = Vec<EventRecord>> {
    prop::collection::vec((0.0f64..40.0, 0u8..25), 0..200).prop_map(|v| {
        v.into_iter()
            .map(|(t, id)| EventRecord::new(t, format!("u{id}")).unwrap())
            .collect()
    })
}

proptest! {
    #[test]
    fn ingest_is_order_free(ev in events(), seed in any::<u64>()) {
        let mut shuffled = ev.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let a = ingest(&ev, 1.0, Origin::At(0.0)).unwrap();
        let b = ingest(&shuffled, 1.0, Origin::At(0.0)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ingest_sandwich(ev in events(), width in prop::sample::select(vec![0.5, 1.0, 3.0])) {
        let (c, q) = ingest(&ev, width, Origin::At(0.0)).unwrap();
        let (mut max, mut sum, mut prev) = (0.0f64, 0.0, 0.0);
        for (&cj, &qj) in c.counts().iter().zip(q.values()) {
            max = max.max(cj);
            sum += cj;
            prop_assert!(max <= qj && qj <= sum);
            prop_assert!(qj - prev <= cj);
            prev = qj;
        }
    }

    #[test]
    fn rebucket_keeps_final_reach(ev in events(), k in 1u32..10) {
        let (_, q) = ingest(&ev, 1.0, Origin::At(0.0)).unwrap();
        let (_, wide) = fractal_counts::rebucket(&ev, 1.0, Origin::At(0.0), f64::from(k)).unwrap();
        prop_assert_eq!(q.last(), wide.last());
    }
}
