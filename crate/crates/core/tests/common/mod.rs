#![allow(dead_code)]

use suu_core::instance::GeneratorKind;
use suu_core::{generate, GeneratorSpec, PDistribution, ProblemInstance};

pub fn random_instance(n: usize, m: usize, kind: GeneratorKind, seed: u64) -> ProblemInstance {
    generate(&GeneratorSpec {
        n,
        m,
        kind,
        p_distribution: PDistribution::default(),
        seed,
    })
    .unwrap()
}

/// Best total capped mass of any single-step assignment, by enumerating
/// all `(|jobs|+1)^m` choices.
pub fn exhaustive_mass(inst: &ProblemInstance, jobs: &[usize]) -> f64 {
    let choices = jobs.len() + 1;
    let total = choices.pow(inst.m as u32);
    let mut best = 0.0f64;
    for code in 0..total {
        let mut mass = vec![0.0; inst.n];
        let mut c = code;
        for i in 0..inst.m {
            let k = c % choices;
            c /= choices;
            if k > 0 {
                let j = jobs[k - 1];
                mass[j] += inst.p(i, j);
            }
        }
        best = best.max(mass.iter().map(|&x: &f64| x.min(1.0)).sum());
    }
    best
}

/// `anc[u][v]`: `u` is a proper ancestor of `v`.
#[allow(clippy::needless_range_loop)]
pub fn ancestors(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut anc = vec![vec![false; n]; n];
    for &(a, b) in edges {
        anc[a][b] = true;
    }
    for k in 0..n {
        for u in 0..n {
            if anc[u][k] {
                for v in 0..n {
                    if anc[k][v] {
                        anc[u][v] = true;
                    }
                }
            }
        }
    }
    anc
}
