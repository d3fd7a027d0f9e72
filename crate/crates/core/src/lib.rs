//! Solvers for multiprocessor scheduling under uncertainty (SUU).
//!
//! `n` unit-step jobs run on `m` machines; assigning machine `i` to job `j`
//! for one step completes the job with probability `p[i][j]`, independently
//! of everything else. Several machines may work on the same job in the same
//! step. The goal is to minimise the expected makespan.
//!
//! The crate is organised bottom-up:
//!
//! * [`instance`]: problem data, validation, generation and the JSON file format.
//! * [`schedule`]: oblivious schedules, pseudo-schedules and mass accounting.
//! * [`greedy`]: the greedy max-sum-mass assignment and the independent-job
//!   schedulers built on it.
//! * [`maxflow`]: integral maximum flow with a min-cut certificate.
//! * [`lp`]: the mass/load/dilation linear program, a dense simplex solver
//!   and the network-flow rounding.
//! * [`assemble`]: turning an integral LP solution into a feasible oblivious
//!   schedule (layout, random delay, flattening, replication, tail) plus
//!   chain decomposition of forests.
//! * [`sim`]: Monte Carlo and exact evaluation of schedules and policies and
//!   the brute-force optimal regimen for tiny instances.

pub mod assemble;
pub mod error;
pub mod greedy;
pub mod instance;
pub mod lp;
pub mod maxflow;
pub mod schedule;
pub mod sim;
pub mod util;

pub use assemble::{
    decompose_forest, solve_chains, solve_forest, ChainDecomposition, PipelineOutput,
    PipelineTrace, SolverConfig,
};
pub use error::{Error, Result};
pub use greedy::{msm, msm_ext, suu_i_obl, suu_i_policy, Assignment, ObliviousBuild, TimedAssignment};
pub use instance::{
    generate, ConstraintKind, GeneratorSpec, PDistribution, PrecedenceDag, ProblemInstance,
    ValidationReport,
};
pub use lp::{build_lp1, round_lp1, solve_lp, FractionalSolution, IntegralLpSolution, Lp1Model};
pub use maxflow::{max_flow, FlowNetwork, IntegralFlow};
pub use schedule::{
    check_feasible, check_precedence_mass_order, concat, mass_at, Continuation, MassLedger,
    ObliviousSchedule, PseudoSchedule, Step, TailRule,
};
pub use sim::{
    exact_makespan, mass_accumulation_test, optimal_regimen, simulate, AdaptivePolicy, JobSet,
    MakespanEstimate, RegimenTable, Strategy,
};
