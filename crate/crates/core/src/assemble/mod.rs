//! From an integral LP solution to a feasible oblivious schedule, and the
//! forest pipeline built on chain decomposition.

mod decompose;
mod stages;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::greedy::OblConfig;
use crate::instance::{ConstraintKind, InstanceError, PrecedenceDag, ProblemInstance};
use crate::lp::{build_lp1, round_lp1, solve_lp, LpError, RoundingCase};
use crate::schedule::{check_feasible, concat, Continuation, ObliviousSchedule};
use crate::util::{ceil_log2, derive_seed};

pub use decompose::{decompose_forest, ChainDecomposition};
pub use stages::{
    apply_delays, attach_tail, collision_target, flatten, layout_pseudo, random_delay,
    reduce_granularity, remap_jobs, replicate, DelayVector, ReinsertionPlan,
};

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("{0} constraints are not supported by this pipeline")]
    UnsupportedConstraints(ConstraintKind),
    #[error("precedence graph is not a directed forest")]
    NotAForest,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("block sub-instance rejected: {0}")]
    Block(#[from] InstanceError),
}

impl AssembleError {
    pub fn is_internal(&self) -> bool {
        match self {
            AssembleError::Lp(e) => e.is_internal(),
            AssembleError::Block(_) => true,
            _ => false,
        }
    }
}

/// Tunable constants of the solvers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Replication factor is `⌈mult · ⌈log₂ max(n, 2)⌉⌉`.
    pub sigma_multiplier: f64,
    /// Inner-round budget multiplier for the independent-jobs builder.
    pub round_multiplier: f64,
    /// Per-round mass threshold for the independent-jobs builder.
    pub obl_threshold: f64,
    /// Collision target multiplier for the random delay.
    pub alpha: usize,
    pub retry_budget: usize,
    pub reduce_granularity: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            sigma_multiplier: 16.0,
            round_multiplier: 66.0,
            obl_threshold: 1.0 / 96.0,
            alpha: 4,
            retry_budget: 64,
            reduce_granularity: false,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        SolverConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn sigma(&self, n: usize) -> usize {
        let l = ceil_log2(n.max(2) as u64) as f64;
        ((self.sigma_multiplier * l).ceil() as usize).max(1)
    }

    pub fn obl(&self) -> OblConfig {
        OblConfig {
            round_multiplier: self.round_multiplier,
            threshold: self.obl_threshold,
        }
    }
}

/// Per-stage measurements of one chains solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainTrace {
    pub block: usize,
    pub jobs: usize,
    pub chains: usize,
    pub t_star: f64,
    pub t_hat: u64,
    pub rounding_case: String,
    pub scale: u64,
    pub buckets: u32,
    /// `t̂ / max(T*, 1)`.
    pub realized_factor: f64,
    pub flow_value: u64,
    pub flow_demand: u64,
    pub granularity_unit: usize,
    pub pseudo_length: usize,
    pub load: usize,
    pub collisions_before: usize,
    pub collisions_after: usize,
    pub delay_target: usize,
    pub delay_attempts: usize,
    pub delay_warning: bool,
    pub flattened_length: usize,
    pub reinserted_length: usize,
    pub sigma: usize,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineTrace {
    pub algorithm: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// Number of blocks for forests.
    pub width: Option<usize>,
    pub blocks: Vec<ChainTrace>,
    pub final_length: usize,
}

impl PipelineTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub schedule: ObliviousSchedule,
    pub trace: PipelineTrace,
}

fn chains_stage(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    seed: u64,
    block: usize,
) -> Result<(ObliviousSchedule, ChainTrace), AssembleError> {
    let model = build_lp1(inst)?;
    let frac = solve_lp(&model)?;
    let sol = round_lp1(&frac, &model)?;

    let (coarse, plan) = if cfg.reduce_granularity {
        reduce_granularity(&sol, inst.n * inst.m)
    } else {
        (sol.clone(), ReinsertionPlan::default())
    };
    let ps = layout_pseudo(&coarse, inst);
    let collisions_before = check_feasible(&ps);
    let (delayed, dv) = random_delay(&ps, &coarse.chains, cfg.alpha, cfg.retry_budget, seed);
    let flat = flatten(&delayed);
    let flattened_length = flat.len();
    let flat = if plan.is_identity() {
        flat
    } else {
        plan.expand(&flat, &coarse.chains)
    };
    let sigma = cfg.sigma(inst.n);
    let sched = replicate(&flat, sigma);
    let trace = ChainTrace {
        block,
        jobs: inst.n,
        chains: sol.chains.len(),
        t_star: sol.t_star,
        t_hat: sol.t,
        rounding_case: match sol.case {
            RoundingCase::Ceiling => "ceiling".into(),
            RoundingCase::Flow => "flow".into(),
        },
        scale: sol.scale,
        buckets: sol.buckets,
        realized_factor: sol.realized_factor(),
        flow_value: sol.flow_value,
        flow_demand: sol.demand,
        granularity_unit: plan.unit.max(1),
        pseudo_length: ps.len(),
        load: ps.max_load(),
        collisions_before,
        collisions_after: dv.collisions,
        delay_target: dv.target,
        delay_attempts: dv.attempts,
        delay_warning: dv.warning,
        flattened_length,
        reinserted_length: flat.len(),
        sigma,
        length: sched.len(),
    };
    Ok((sched, trace))
}

/// Full pipeline for chain (or independent) constraints: LP, rounding,
/// layout, random delay, flattening, replication and the tail.
pub fn solve_chains(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<PipelineOutput, AssembleError> {
    if inst.constraints.kind == ConstraintKind::Forest {
        return Err(AssembleError::UnsupportedConstraints(ConstraintKind::Forest));
    }
    let (sched, trace) = chains_stage(inst, cfg, cfg.seed, 0)?;
    let schedule = attach_tail(&sched, inst);
    Ok(PipelineOutput {
        trace: PipelineTrace {
            algorithm: "lp-chains".into(),
            n: inst.n,
            m: inst.m,
            seed: cfg.seed,
            width: None,
            final_length: schedule.len(),
            blocks: vec![trace],
        },
        schedule,
    })
}

/// Forest pipeline: decompose into blocks of chains, solve each block as a
/// chains instance and run the blocks one after another.
pub fn solve_forest(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<PipelineOutput, AssembleError> {
    let dec = decompose_forest(&inst.constraints, inst.n)?;
    let results: Vec<Result<(ObliviousSchedule, ChainTrace), AssembleError>> = dec
        .blocks
        .par_iter()
        .enumerate()
        .map(|(k, chains)| {
            let jobs: Vec<usize> = chains.iter().flatten().copied().collect();
            let mut local = vec![usize::MAX; inst.n];
            for (idx, &j) in jobs.iter().enumerate() {
                local[j] = idx;
            }
            let local_chains: Vec<Vec<usize>> = chains
                .iter()
                .map(|c| c.iter().map(|&j| local[j]).collect())
                .collect();
            let sub = ProblemInstance::new(
                jobs.len(),
                inst.m,
                inst.p
                    .iter()
                    .map(|row| jobs.iter().map(|&j| row[j]).collect())
                    .collect(),
                PrecedenceDag::from_chains(&local_chains),
            )?;
            let (sched, trace) = chains_stage(&sub, cfg, derive_seed(cfg.seed, k as u64), k)?;
            Ok((remap_jobs(&sched, &jobs), trace))
        })
        .collect();

    let mut schedule = ObliviousSchedule::empty();
    let mut traces = Vec::with_capacity(results.len());
    for r in results {
        let (s, t) = r?;
        schedule = concat(&schedule, &s.with_continuation(Continuation::Idle));
        traces.push(t);
    }
    let schedule = attach_tail(&schedule, inst);
    Ok(PipelineOutput {
        trace: PipelineTrace {
            algorithm: "forest".into(),
            n: inst.n,
            m: inst.m,
            seed: cfg.seed,
            width: Some(dec.width()),
            final_length: schedule.len(),
            blocks: traces,
        },
        schedule,
    })
}
