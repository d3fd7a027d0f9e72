mod common;

use common::{exhaustive_mass, random_instance};
use suu_core::greedy::OblConfig;
use suu_core::instance::GeneratorKind;
use suu_core::{msm, msm_ext, suu_i_obl};

#[test]
fn msm_within_a_third_of_optimum() {
    for seed in 0..300u64 {
        let n = 1 + (seed % 4) as usize;
        let m = 1 + (seed / 4 % 4) as usize;
        let inst = random_instance(n, m, GeneratorKind::Independent, seed);
        let jobs: Vec<usize> = (0..n).collect();
        let a = msm(&inst, &jobs);
        for raw in a.raw_mass(&inst) {
            assert!(raw <= 1.0 + 1e-12, "packing rule broken on seed {seed}");
        }
        let opt = exhaustive_mass(&inst, &jobs);
        assert!(
            a.total_mass(&inst) >= opt / 3.0 - 1e-12,
            "seed {seed}: {} vs optimum {opt}",
            a.total_mass(&inst)
        );
    }
}

#[test]
fn msm_on_job_subsets() {
    for seed in 0..100u64 {
        let inst = random_instance(4, 3, GeneratorKind::Independent, 1000 + seed);
        let jobs: Vec<usize> = (0..4).filter(|j| seed >> j & 1 == 1).collect();
        let a = msm(&inst, &jobs);
        for (i, j) in a.machines.iter().enumerate() {
            if let Some(j) = j {
                assert!(jobs.contains(j), "machine {i} on job outside the subset");
            }
        }
        assert!(a.total_mass(&inst) >= exhaustive_mass(&inst, &jobs) / 3.0 - 1e-12);
    }
}

#[test]
fn msm_ext_unit_horizon_matches_msm() {
    for seed in 0..200u64 {
        let n = 1 + (seed % 5) as usize;
        let m = 1 + (seed / 5 % 4) as usize;
        let inst = random_instance(n, m, GeneratorKind::Independent, 500 + seed);
        let jobs: Vec<usize> = (0..n).collect();
        let ext = msm_ext(&inst, &jobs, 1).unwrap();
        let total: f64 = ext.mass(&inst).capped.iter().sum();
        assert!((total - msm(&inst, &jobs).total_mass(&inst)).abs() < 1e-12, "seed {seed}");
    }
}

#[test]
fn oblivious_segments_reach_threshold() {
    let cfg = OblConfig::default();
    for seed in 0..60u64 {
        let n = 1 + (seed % 12) as usize;
        let m = 1 + (seed / 12 % 6) as usize;
        let inst = random_instance(n, m, GeneratorKind::Independent, 7000 + seed);
        let build = suu_i_obl(&inst, &cfg).unwrap();
        for (j, mass) in build.segment_mass(&inst).iter().enumerate() {
            assert!(mass.min(1.0) >= 1.0 / 96.0, "seed {seed}, job {j}: {mass}");
        }
        assert!(build.schedule.len() <= build.max_rounds * build.horizon);
        assert!(build.segments.len() <= build.max_rounds);
        let again = suu_i_obl(&inst, &cfg).unwrap();
        assert_eq!(again.schedule, build.schedule);
    }
}
