use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use suu_bench::{chains, forest, independent};
use suu_core::greedy::OblConfig;
use suu_core::sim::default_cutoff;
use suu_core::{build_lp1, msm, round_lp1, simulate, solve_chains, solve_forest, solve_lp, suu_i_obl, SolverConfig, Strategy};

fn greedy(c: &mut Criterion) {
    let mut g = c.benchmark_group("greedy");
    for n in [4, 16, 64] {
        let inst = independent(n, 8, 1);
        let jobs: Vec<usize> = (0..n).collect();
        g.bench_with_input(BenchmarkId::new("msm", n), &inst, |b, inst| {
            b.iter(|| msm(black_box(inst), &jobs))
        });
        g.bench_with_input(BenchmarkId::new("suu_i_obl", n), &inst, |b, inst| {
            b.iter(|| suu_i_obl(black_box(inst), &OblConfig::default()).unwrap())
        });
    }
    g.finish();
}

fn lp(c: &mut Criterion) {
    let mut g = c.benchmark_group("lp");
    g.sample_size(20);
    for n in [4, 8, 16] {
        let inst = chains(n, 4, 2);
        let model = build_lp1(&inst).unwrap();
        g.bench_with_input(BenchmarkId::new("solve", n), &model, |b, model| {
            b.iter(|| solve_lp(black_box(model)).unwrap())
        });
        let frac = solve_lp(&model).unwrap();
        g.bench_with_input(BenchmarkId::new("round", n), &frac, |b, frac| {
            b.iter(|| round_lp1(black_box(frac), &model).unwrap())
        });
    }
    g.finish();
}

fn pipelines(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipelines");
    g.sample_size(10);
    for n in [4, 8, 16] {
        let ch = chains(n, 4, 3);
        g.bench_with_input(BenchmarkId::new("chains", n), &ch, |b, inst| {
            b.iter(|| solve_chains(black_box(inst), &SolverConfig::with_seed(3)).unwrap())
        });
        let fo = forest(n, 4, 3);
        g.bench_with_input(BenchmarkId::new("forest", n), &fo, |b, inst| {
            b.iter(|| solve_forest(black_box(inst), &SolverConfig::with_seed(3)).unwrap())
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    let inst = independent(8, 4, 4);
    let sched = suu_i_obl(&inst, &OblConfig::default()).unwrap().schedule;
    g.bench_function("oblivious_1000_trials", |b| {
        b.iter(|| simulate(Strategy::Oblivious(&sched), black_box(&inst), 1000, 7, default_cutoff(8)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, greedy, lp, pipelines, simulation);
criterion_main!(benches);
