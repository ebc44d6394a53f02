use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use st_lab_core::{count_incidences, gen_elekes, CountMethod};

fn counting(c: &mut Criterion) {
    let mut group = c.benchmark_group("count_incidences");
    for n in [4u64, 8, 12] {
        let cfg = gen_elekes(n);
        for (name, method) in [("naive", CountMethod::Naive), ("grouped", CountMethod::Grouped)] {
            group.bench_with_input(BenchmarkId::new(name, n), &cfg, |b, cfg| b.iter(|| count_incidences(black_box(cfg), method)));
        }
    }
    group.finish();
}

criterion_group!(benches, counting);
criterion_main!(benches);
