use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use toposwitch_bench::{ieee118, small_case};
use toposwitch_core::laplacian::LaplacianSystem;
use toposwitch_core::solve_dcopf;
use toposwitch_core::switching::{run_heuristic, HeuristicConfig, SwitchRule};

fn dcopf(c: &mut Criterion) {
    let net = ieee118();
    c.bench_function("dcopf_ieee118", |b| b.iter(|| solve_dcopf(black_box(&net.view())).unwrap()));
}

fn greedy(c: &mut Criterion) {
    let net = small_case();
    let cfg = HeuristicConfig::greedy(2, true).with_rule(SwitchRule::Connected);
    c.bench_function("greedy_k2_small", |b| b.iter(|| run_heuristic(black_box(&net), &cfg).unwrap()));
}

fn laplacian(c: &mut Criterion) {
    let net = ieee118();
    let edges: Vec<(usize, usize, f64)> = (0..net.lines().len())
        .map(|l| {
            let (a, b) = net.line_ends(l);
            (a, b, net.lines()[l].susceptance)
        })
        .collect();
    let n = net.buses().len();
    c.bench_function("laplacian_factor_ieee118", |b| {
        b.iter(|| LaplacianSystem::new(n, black_box(&edges), net.reference_index()).unwrap())
    });
    let sys = LaplacianSystem::new(n, &edges, net.reference_index()).unwrap();
    let inj: Vec<f64> = (0..n).map(|i| if i == 0 { (n - 1) as f64 } else { -1.0 }).collect();
    c.bench_function("laplacian_solve_ieee118", |b| b.iter(|| sys.potentials(black_box(&inj))));
}

criterion_group!(benches, dcopf, greedy, laplacian);
criterion_main!(benches);
