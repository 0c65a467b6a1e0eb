use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tfmseg::factor::{estimate_loadings, estimate_pseudo_factors, estimate_ranks, mode_covariance};
use tfmseg::segmentation::tfmseg::{scan_interval, tfmseg, DetectorParams};
use tfmseg::segmentation::{generate_seeded_intervals, weight_matrix, ThresholdSpec};
use tfmseg::{detect, DetectConfig, PseudoFactorStats};
use tfmseg_bench::fixture;

fn unfold(c: &mut Criterion) {
    let (series, _) = fixture(4, &[20, 20, 20], 1);
    let x = series.tensor(0);
    let mut group = c.benchmark_group("unfold");
    for k in 0..3 {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| x.unfold(black_box(k)).unwrap())
        });
    }
    group.finish();
}

fn gram(c: &mut Criterion) {
    let mut group = c.benchmark_group("mode_covariance");
    group.sample_size(20);
    for dims in [[10, 10, 10], [20, 20, 20]] {
        let (series, _) = fixture(400, &dims, 2);
        let id = format!("{}x{}x{}", dims[0], dims[1], dims[2]);
        group.bench_function(id, |b| {
            b.iter(|| mode_covariance(&series, black_box(0), 0, series.len()).unwrap())
        });
    }
    group.finish();
}

fn estimation(c: &mut Criterion) {
    let (series, _) = fixture(800, &[10, 10, 10], 3);
    let mut group = c.benchmark_group("estimation");
    group.sample_size(10);
    group.bench_function("ranks", |b| b.iter(|| estimate_ranks(&series).unwrap()));
    group.bench_function("loadings", |b| {
        b.iter(|| estimate_loadings(&series, black_box(&[3, 3, 3])).unwrap())
    });
    let loadings = estimate_loadings(&series, &[3, 3, 3]).unwrap();
    group.bench_function("pseudo_factors", |b| {
        b.iter(|| estimate_pseudo_factors(&series, &loadings).unwrap())
    });
    let factors = estimate_pseudo_factors(&series, &loadings).unwrap();
    group.bench_function("stats", |b| b.iter(|| PseudoFactorStats::new(&factors).unwrap()));
    group.finish();
}

fn scan(c: &mut Criterion) {
    let (series, _) = fixture(1600, &[10, 10, 10], 4);
    let loadings = estimate_loadings(&series, &[3, 3, 3]).unwrap();
    let stats = PseudoFactorStats::new(&estimate_pseudo_factors(&series, &loadings).unwrap()).unwrap();
    let weight = weight_matrix(&stats).unwrap();
    let inv_w: Vec<f64> = weight.iter().map(|w| 1.0 / w).collect();
    let intervals = generate_seeded_intervals(series.len(), 4.0).unwrap();
    let widest = intervals.intervals[0];
    let mut group = c.benchmark_group("scan");
    group.bench_function("widest_interval", |b| {
        b.iter(|| scan_interval(&stats, &inv_w, black_box(&widest), intervals.trim))
    });
    let params = DetectorParams {
        threshold: 8.0,
        weight,
        trim: intervals.trim,
        coefficients: None,
    };
    group.sample_size(20);
    group.bench_function("all_intervals", |b| {
        b.iter(|| tfmseg(&stats, &intervals, &params).unwrap())
    });
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let mut group = c.benchmark_group("detect");
    group.sample_size(10);
    for t in [400, 1600] {
        let (series, _) = fixture(t, &[10, 10, 10], 5);
        let cfg = DetectConfig {
            threshold: ThresholdSpec::Fixed(8.0),
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(t), &series, |b, s| {
            b.iter(|| detect(s, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, unfold, gram, estimation, scan, end_to_end);
criterion_main!(benches);
