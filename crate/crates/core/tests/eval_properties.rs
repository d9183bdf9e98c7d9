mod common;

use proptest::prelude::*;
use rand_core::{RngCore, SeedableRng};

use common::synthetic_pool;
use stmnist::dataset::{describe_generation, DatasetManifest, DatasetMeta, DatasetWriter};
use stmnist::eval::{diff_reports, evaluate, GridKind, Metric};
use stmnist::predictions::{format_predictions, parse_predictions, PredictionRecord, Task};
use stmnist::video::{generate_sample, GenOptions};

fn manifest(n: u64, seed: u64) -> DatasetManifest {
    let pool = synthetic_pool(1);
    let opts = GenOptions::default();
    let meta = DatasetMeta {
        master_seed: seed,
        split_name: "test".into(),
        generation: describe_generation(&opts, &pool, "synthetic"),
    };
    let mut w = DatasetWriter::new(std::io::sink()).unwrap();
    for i in 0..n {
        w.push(&generate_sample(seed, i, &pool, &opts).unwrap()).unwrap();
    }
    w.finish(&meta, "test.smnv").unwrap().1
}

fn noisy_predictions(m: &DatasetManifest, seed: u64) -> Vec<PredictionRecord> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for e in &m.samples {
        let r = rng.next_u64();
        let digit = if r % 5 == 0 { (e.digit_label + 1) % 10 } else { e.digit_label };
        let order = if r % 7 == 0 { (e.order_label + 2) % 6 } else { e.order_label };
        let noise = ((r >> 20) % 2000) as f64 / 1000.0 - 1.0;
        out.push(PredictionRecord::class(e.sample_id, Task::Digit, digit, "m"));
        out.push(PredictionRecord::class(e.sample_id, Task::Order, order, "m"));
        out.push(PredictionRecord::speed(e.sample_id, e.speed_label as f64 + noise, "m"));
    }
    out
}

#[test]
fn overall_is_count_weighted_cell_mean() {
    let m = manifest(1500, 3);
    let r = &evaluate(&m, &noisy_predictions(&m, 1)).unwrap()[0];
    for g in &r.grids {
        let (num, den) = g
            .cells
            .iter()
            .fold((0.0, 0u64), |(s, n), (k, &v)| (s + v * g.counts[k] as f64, n + g.counts[k]));
        let weighted = num / den as f64;
        let overall = g.overall.unwrap();
        assert!((weighted - overall).abs() <= 1e-9 * overall.abs().max(1e-300), "{:?}", g.metric);
        for &v in g.cells.values() {
            match g.metric {
                Metric::Mae => assert!(v >= 0.0),
                _ => assert!((0.0..=1.0).contains(&v)),
            }
        }
    }
    for (task, conf) in &r.confusion {
        let rows: u64 = conf.iter().flatten().sum();
        assert_eq!(rows, m.sample_count as u64, "{task}");
    }
}

#[test]
fn rounded_accuracy_one_implies_small_mae() {
    let m = manifest(300, 4);
    let preds: Vec<_> = m
        .samples
        .iter()
        .enumerate()
        .map(|(i, e)| PredictionRecord::speed(e.sample_id, e.speed_label as f64 + (i % 9) as f64 * 0.05 - 0.2, "m"))
        .collect();
    let r = &evaluate(&m, &preds).unwrap()[0];
    let acc = r.grid(Task::Speed, Metric::RoundedAccuracy).unwrap();
    let mae = r.grid(Task::Speed, Metric::Mae).unwrap();
    assert_eq!(acc.overall, Some(1.0));
    assert!(mae.overall.unwrap() < 0.5);
}

#[test]
fn independent_perfect_grids_diff_to_zero() {
    let a = manifest(400, 10);
    let truth = |m: &DatasetManifest, model: &str| -> Vec<PredictionRecord> {
        m.samples
            .iter()
            .flat_map(|e| {
                [
                    PredictionRecord::class(e.sample_id, Task::Digit, e.digit_label, model),
                    PredictionRecord::speed(e.sample_id, e.speed_label as f64, model),
                ]
            })
            .collect()
    };
    let ra = &evaluate(&a, &truth(&a, "x")).unwrap()[0];
    let rb = &evaluate(&a, &truth(&a, "y")).unwrap()[0];
    let diffs = diff_reports(ra, rb).unwrap();
    assert_eq!(diffs.len(), 3);
    for d in diffs {
        assert_eq!(d.kind, GridKind::Difference);
        assert!(d.cells.values().all(|&x| x == 0.0));
    }
}

#[test]
fn ten_thousand_prediction_records_round_trip() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let records: Vec<PredictionRecord> = (0..10_000)
        .map(|i| {
            let r = rng.next_u64();
            match r % 3 {
                0 => PredictionRecord::class(i, Task::Digit, (r % 10) as u8, "conv3d-xl"),
                1 => PredictionRecord::class(i, Task::Order, (r % 6) as u8, "convlstm"),
                _ => PredictionRecord::speed(i, f64::from_bits(r >> 12 | 0x4000_0000_0000_0000) - 3.0, "conv2d"),
            }
        })
        .collect();
    let text = format_predictions(&records).unwrap();
    assert_eq!(parse_predictions(&text).unwrap(), records);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn line_order_does_not_change_report(perm_seed in any::<u64>()) {
        let m = manifest(200, 21);
        let preds = noisy_predictions(&m, 5);
        let mut shuffled = preds.clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
        for i in (1..shuffled.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            shuffled.swap(i, j);
        }
        let a = evaluate(&m, &preds).unwrap();
        let b = evaluate(&m, &shuffled).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a[0].to_structured_text(), b[0].to_structured_text());
    }
}
