use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use discourse_bench::Fixture;
use discourse_core::{
    code_all, cug_test, extract_all, fit_nb, network_pca, Conditioning, Digraph, Epoch, Formula,
    PcaOptions, Statistic,
};

fn extraction_and_coding(c: &mut Criterion) {
    let fx = Fixture::new(3000);
    c.bench_function("extract_all/3000", |b| b.iter(|| extract_all(black_box(&fx.messages))));
    let units = extract_all(&fx.messages).units;
    c.bench_function("code_all/3000", |b| b.iter(|| code_all(black_box(&units), &fx.lexicon)));
}

fn statistics(c: &mut Criterion) {
    let fx = Fixture::new(3000);
    let g = Digraph::from_net(&fx.total);
    let mut group = c.benchmark_group("cug_100");
    group.sample_size(10);
    for (stat, cond) in [
        (Statistic::EdgewiseReciprocity, Conditioning::Edges),
        (Statistic::Transitivity, Conditioning::DyadCensus),
        (Statistic::BetweennessCentralization, Conditioning::DyadCensus),
    ] {
        group.bench_with_input(BenchmarkId::new(stat.key(), cond.display_name()), &g, |b, g| {
            b.iter(|| cug_test(g, stat, cond, 100, 7).expect("cug"))
        });
    }
    group.finish();
}

fn pca(c: &mut Criterion) {
    let fx = Fixture::new(3000);
    c.bench_function("network_pca/roles", |b| {
        b.iter(|| network_pca(black_box(&fx.roles), Epoch::default(), PcaOptions::default()).expect("pca"))
    });
    c.bench_function("network_pca/months", |b| {
        b.iter(|| network_pca(black_box(&fx.months), Epoch::default(), PcaOptions::default()).expect("pca"))
    });
}

fn regression(c: &mut Criterion) {
    let fx = Fixture::new(3000);
    let mut group = c.benchmark_group("nb_fit");
    group.sample_size(10);
    group.bench_function("full_formula", |b| {
        b.iter(|| fit_nb(black_box(&fx.features), &Formula::default()).expect("fit"))
    });
    group.finish();
}

criterion_group!(benches, extraction_and_coding, statistics, pca, regression);
criterion_main!(benches);
