use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use qfgeo_bench::fixture;
use qfgeo_core::geometry::euclidean_shortest_path;
use qfgeo_core::protocol::mcr::widest_path;
use qfgeo_core::protocol::walk::StaticNetwork;
use qfgeo_core::protocol::FlowId;
use qfgeo_core::seed::rng_from_seed;
use qfgeo_core::sim::{run_trial, FlowPlan, TrialConfig};
use qfgeo_core::ProtocolParams;

fn shortest_path(c: &mut Criterion) {
    let mut group = c.benchmark_group("euclidean_shortest_path");
    for n in [64usize, 216, 1000] {
        let (g, s, d) = fixture(n, 3.0, 7);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| euclidean_shortest_path(black_box(&g), s, d).unwrap())
        });
    }
    group.finish();
}

fn forwarding(c: &mut Criterion) {
    let mut group = c.benchmark_group("packet_walk");
    let (g, s, d) = fixture(216, 3.0, 7);
    let theta = vec![1.0; g.len()];
    group.bench_function("qfgeo", |b| {
        let params = ProtocolParams {
            rho: 3.0,
            ..ProtocolParams::default()
        };
        let mut rng = rng_from_seed(1);
        b.iter(|| {
            let mut net = StaticNetwork::new(&g, &theta, params);
            net.route_qfgeo(FlowId(0), s, d, 0.5, &mut rng)
        })
    });
    group.bench_function("gf", |b| {
        b.iter(|| {
            let mut net = StaticNetwork::new(&g, &theta, ProtocolParams::default());
            net.route_gf(s, d)
        })
    });
    group.bench_function("mcr_widest_path", |b| {
        let allowed = vec![true; g.len()];
        b.iter(|| widest_path(&g, &theta, &allowed, s, d))
    });
    group.finish();
}

fn trial(c: &mut Criterion) {
    let mut group = c.benchmark_group("trial");
    group.sample_size(10);
    let mut config = TrialConfig::generated(64, 3.0, 5);
    config.flows = FlowPlan::Random(4);
    config.duration_s = 8.0;
    group.bench_function("qfgeo_64_nodes_8s", |b| b.iter(|| run_trial(config.clone()).unwrap()));
    group.finish();
}

criterion_group!(benches, shortest_path, forwarding, trial);
criterion_main!(benches);
