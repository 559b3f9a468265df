use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use smoothlearn::cover::build_cover;
use smoothlearn::dp::{
    kl_project_capped_simplex, mwem, projected_smooth_mwem, smooth_dataset, SmoothMwemOptions, SmoothPolytope,
};
use smoothlearn::online::HedgeState;
use smoothlearn::{stream, Dataset, HypothesisClass, SmoothnessParam};
use smoothlearn_bench::{grid, skewed, threshold_queries};

fn projection(c: &mut Criterion) {
    let mut g = c.benchmark_group("kl_projection");
    for n in [1 << 10, 1 << 14, 1 << 18] {
        let d = grid(n);
        let p = skewed(&d).unwrap();
        let poly = SmoothPolytope::new(SmoothnessParam::new(0.1).unwrap(), n).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| kl_project_capped_simplex(black_box(p), &poly).unwrap())
        });
    }
    g.finish();
}

fn hedge(c: &mut Criterion) {
    let mut g = c.benchmark_group("hedge_update");
    for k in [64, 4096, 65536] {
        let losses: Vec<f64> = (0..k).map(|i| (i % 3 == 0) as u8 as f64).collect();
        g.bench_with_input(BenchmarkId::from_parameter(k), &losses, |b, l| {
            let mut s = HedgeState::new(k, 1_000_000).unwrap();
            b.iter(|| s.update(black_box(l)).unwrap())
        });
    }
    g.finish();
}

fn cover(c: &mut Criterion) {
    let class = HypothesisClass::parse("threshold1d").unwrap();
    let d = grid(1 << 16);
    c.bench_function("threshold_cover_2^16_m=10^5", |b| {
        let mut rng = stream(1, 0);
        b.iter(|| build_cover(&class, &d, 0.01, 100_000, &mut rng).unwrap())
    });
}

fn mechanisms(c: &mut Criterion) {
    let d = grid(1024);
    let qs = threshold_queries(&d, 64).unwrap();
    let mut rng = stream(2, 0);
    let source = skewed(&d).unwrap();
    let data = Dataset::sample_iid(&source, 2000, &mut rng).unwrap();
    c.bench_function("mwem_N=1024_T=10", |b| {
        b.iter(|| mwem(&data, &qs, 10, 1.0, &mut rng).unwrap())
    });

    let sigma = SmoothnessParam::new(0.1).unwrap();
    let smooth_source = smoothlearn::Dist::uniform(d.clone());
    let smooth = smooth_dataset(&smooth_source, sigma, 2000, &mut rng).unwrap();
    let class = HypothesisClass::parse("threshold1d").unwrap();
    let opts = SmoothMwemOptions::default();
    c.bench_function("projected_smooth_mwem_N=1024_T=10", |b| {
        b.iter(|| projected_smooth_mwem(&smooth, &class, sigma, 10, 1.0, &opts, &mut rng).unwrap())
    });
}

criterion_group!(benches, projection, hedge, cover, mechanisms);
criterion_main!(benches);
