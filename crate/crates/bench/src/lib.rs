//! Fixed instances shared by the solver benchmarks.

use suu_core::instance::GeneratorKind;
use suu_core::{generate, GeneratorSpec, PDistribution, ProblemInstance};

pub fn independent(n: usize, m: usize, seed: u64) -> ProblemInstance {
    fixture(n, m, GeneratorKind::Independent, seed)
}

/// `n` jobs split into `n / 2` chains.
pub fn chains(n: usize, m: usize, seed: u64) -> ProblemInstance {
    fixture(n, m, GeneratorKind::Chains { count: (n / 2).max(1) }, seed)
}

pub fn forest(n: usize, m: usize, seed: u64) -> ProblemInstance {
    fixture(n, m, GeneratorKind::Forest, seed)
}

fn fixture(n: usize, m: usize, kind: GeneratorKind, seed: u64) -> ProblemInstance {
    generate(&GeneratorSpec {
        n,
        m,
        kind,
        p_distribution: PDistribution::Uniform { low: 0.05, high: 1.0 },
        seed,
    })
    .expect("fixture spec is valid")
}
