mod common;

use common::random_instance;
use suu_core::greedy::OblConfig;
use suu_core::instance::GeneratorKind;
use suu_core::sim::{default_cutoff, RegimenCaps};
use suu_core::{
    exact_makespan, optimal_regimen, simulate, solve_chains, suu_i_obl, suu_i_policy, Continuation,
    ObliviousSchedule, ProblemInstance, SolverConfig, Step, Strategy,
};

fn persistent(pairs: Vec<(usize, usize)>) -> ObliviousSchedule {
    ObliviousSchedule::from_steps([Step::from_pairs(pairs).unwrap()]).with_continuation(Continuation::Repeat)
}

#[test]
fn closed_forms() {
    let one = ProblemInstance::independent(vec![vec![0.5]]).unwrap();
    let e = exact_makespan(Strategy::Oblivious(&persistent(vec![(0, 0)])), &one).unwrap();
    assert!((e - 2.0).abs() < 1e-9);

    // max of two independent Geometric(1/2): 2 + 2 - 1/(1 - 1/4) = 8/3
    let two = ProblemInstance::independent(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
    let e = exact_makespan(Strategy::Oblivious(&persistent(vec![(0, 0), (1, 1)])), &two).unwrap();
    assert!((e - 8.0 / 3.0).abs() < 1e-9);
}

#[test]
fn monte_carlo_covers_exact_value() {
    let inst = ProblemInstance::independent(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
    let sched = persistent(vec![(0, 0), (1, 1)]);
    let exact = 8.0 / 3.0;
    let covered = (0..100u64)
        .filter(|&seed| {
            simulate(Strategy::Oblivious(&sched), &inst, 2000, seed, 10_000)
                .unwrap()
                .covers(exact)
        })
        .count();
    assert!(covered >= 93, "coverage {covered}/100");
}

#[test]
fn simulate_is_reproducible() {
    let inst = random_instance(5, 3, GeneratorKind::Chains { count: 2 }, 4);
    let out = solve_chains(&inst, &SolverConfig::with_seed(4)).unwrap();
    let a = simulate(Strategy::Oblivious(&out.schedule), &inst, 300, 11, default_cutoff(5)).unwrap();
    let b = simulate(Strategy::Oblivious(&out.schedule), &inst, 300, 11, default_cutoff(5)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
}

#[test]
fn regimen_is_a_lower_bound() {
    for seed in 0..25u64 {
        let n = 1 + (seed % 4) as usize;
        let m = 1 + (seed / 4 % 3) as usize;
        let inst = random_instance(n, m, GeneratorKind::Independent, 300 + seed);
        let t_opt = optimal_regimen(&inst, RegimenCaps::default()).unwrap().t_opt();

        let greedy = suu_i_policy(&inst).unwrap();
        let g = exact_makespan(Strategy::Adaptive(&greedy), &inst).unwrap();
        assert!(g >= t_opt - 1e-9, "seed {seed}: greedy {g} < {t_opt}");

        let build = suu_i_obl(&inst, &OblConfig::default()).unwrap();
        let o = exact_makespan(Strategy::Oblivious(&build.schedule), &inst).unwrap();
        assert!(o >= t_opt - 1e-9, "seed {seed}: oblivious {o} < {t_opt}");
    }
    for seed in 0..10u64 {
        let inst = random_instance(3, 2, GeneratorKind::Chains { count: 1 + (seed % 2) as usize }, 400 + seed);
        let t_opt = optimal_regimen(&inst, RegimenCaps::default()).unwrap().t_opt();
        let out = solve_chains(&inst, &SolverConfig::with_seed(seed)).unwrap();
        let e = exact_makespan(Strategy::Oblivious(&out.schedule), &inst).unwrap();
        assert!(e >= t_opt - 1e-9, "seed {seed}: chains {e} < {t_opt}");
    }
}

#[test]
fn removing_a_job_never_hurts_optimum() {
    for seed in 0..30u64 {
        let kind = if seed % 2 == 0 {
            GeneratorKind::Independent
        } else {
            GeneratorKind::Forest
        };
        let inst = random_instance(4, 1 + (seed % 3) as usize, kind, 600 + seed);
        let full = optimal_regimen(&inst, RegimenCaps::default()).unwrap().t_opt();
        for drop in 0..inst.n {
            let keep: Vec<usize> = (0..inst.n).filter(|&j| j != drop).collect();
            let sub = optimal_regimen(&inst.restrict(&keep), RegimenCaps::default()).unwrap().t_opt();
            assert!(sub <= full + 1e-9, "seed {seed}, dropped {drop}: {sub} > {full}");
        }
    }
}
