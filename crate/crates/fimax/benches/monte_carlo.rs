//! Replication-parallel Monte Carlo vs the sequential baseline.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fimax::algebra::{LossFunction, Point};
use fimax::exec::{replicate, replicate_seq};
use fimax::laws::AngularMeasure;
use fimax::measure::{Cell, Integrand, KernelKind, MeasureSpace};
use fimax::rng::substream;
use fimax::supmeasure::{SeriesRealization, SupMeasureSpec};

fn spec() -> SupMeasureSpec {
    let loss = Arc::new(LossFunction::euclidean(2));
    let kappa = AngularMeasure::discrete(
        loss.clone(),
        vec![
            (Point(vec![1.0, 0.0]), 0.5),
            (Point(vec![0.0, 1.0]), 0.5),
        ],
    )
    .unwrap();
    SupMeasureSpec::new(2.0, kappa, MeasureSpace::lebesgue(0.0, 20.0)).unwrap()
}

fn one_replication(spec: &SupMeasureSpec, g: &Integrand, i: usize) -> f64 {
    let mut real =
        SeriesRealization::new(spec, Cell::interval(0.0, 20.0), substream(0xbe9c, i as u64))
            .unwrap();
    real.series_integral(g, 1.0).unwrap().f_value
}

fn bench_series_monte_carlo(c: &mut Criterion) {
    let spec = spec();
    let g = Integrand::kernel(
        KernelKind::ExpDecay { lambda: 1.0 },
        Cell::interval(0.0, 20.0),
        1.0,
    )
    .unwrap();
    let mut group = c.benchmark_group("series_integral_monte_carlo");
    for &n in &[256usize, 2048] {
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| replicate(n, |i| one_replication(&spec, &g, i)));
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| replicate_seq(n, |i| one_replication(&spec, &g, i)));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_series_monte_carlo);
criterion_main!(benches);
