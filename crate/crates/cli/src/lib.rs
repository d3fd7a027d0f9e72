//! `suu` command line: instance generation, solving, evaluation and
//! benchmark grids.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors (bad
//! flags, unreadable files, incompatible algorithm and instance), 1 when a
//! solver reports a broken internal invariant.

pub mod bench;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use suu_core::greedy::OblConfig;
use suu_core::instance::GeneratorKind;
use suu_core::sim::{default_cutoff, RegimenCaps, SimError};
use suu_core::{
    exact_makespan, generate, optimal_regimen, simulate, solve_chains, solve_forest, suu_i_obl,
    suu_i_policy, ConstraintKind, GeneratorSpec, ObliviousSchedule, PDistribution, ProblemInstance,
    SolverConfig, Strategy,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] suu_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_internal() => 1,
            _ => 2,
        }
    }
}

fn core<E: Into<suu_core::Error>>(e: E) -> CliError {
    CliError::Core(e.into())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    GreedyAdaptive,
    GreedyOblivious,
    LpChains,
    Forest,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GreedyAdaptive => "greedy-adaptive",
            Algorithm::GreedyOblivious => "greedy-oblivious",
            Algorithm::LpChains => "lp-chains",
            Algorithm::Forest => "forest",
        }
    }

    /// Why the algorithm cannot run on `kind`, if it cannot.
    pub fn incompatibility(self, kind: ConstraintKind) -> Option<String> {
        match (self, kind) {
            (Algorithm::GreedyAdaptive | Algorithm::GreedyOblivious, ConstraintKind::Independent) => None,
            (Algorithm::GreedyAdaptive | Algorithm::GreedyOblivious, k) => {
                Some(format!("{} needs independent jobs, instance has {k} constraints", self.name()))
            }
            (Algorithm::LpChains, ConstraintKind::Forest) => {
                Some("lp-chains cannot handle forest constraints; use --alg forest".into())
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Independent,
    Chains,
    Forest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    GreedyAdaptive,
    Optimal,
}

#[derive(Debug, Parser)]
#[command(name = "suu", version, about = "Scheduling under uncertainty: generate, solve, evaluate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Build an oblivious schedule for an instance.
    Solve(SolveArgs),
    /// Estimate the expected makespan of a schedule or policy.
    Eval(EvalArgs),
    /// Run a benchmark grid described by a suite file.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value = "independent")]
    pub kind: KindArg,
    /// Number of chains for `--kind chains`.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long, default_value_t = 0.0)]
    pub p_low: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p_high: f64,
    /// Probability that an entry is nonzero; dense when omitted.
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Solver constants; defaults are the analysed values.
#[derive(Debug, Clone, Args)]
pub struct ConstantArgs {
    /// σ = ⌈mult · log₂ max(n,2)⌉ copies of each step.
    #[arg(long, default_value_t = 16.0)]
    pub sigma_mult: f64,
    /// Round budget ⌈mult · log₂ n⌉ for greedy-oblivious.
    #[arg(long, default_value_t = 66.0)]
    pub rounds_mult: f64,
    /// Per-round mass threshold for greedy-oblivious.
    #[arg(long, default_value_t = 1.0 / 96.0)]
    pub obl_threshold: f64,
    /// Collision target multiplier for the random delays.
    #[arg(long, default_value_t = 4)]
    pub alpha: usize,
    #[arg(long, default_value_t = 64)]
    pub retry_budget: usize,
    #[arg(long)]
    pub reduce_granularity: bool,
}

impl ConstantArgs {
    pub fn config(&self, seed: u64) -> Result<SolverConfig, CliError> {
        if !(self.sigma_mult > 0.0 && self.rounds_mult > 0.0) {
            return Err(CliError::Usage("multipliers must be positive".into()));
        }
        if !(self.obl_threshold > 0.0 && self.obl_threshold <= 1.0) {
            return Err(CliError::Usage("--obl-threshold must be in (0, 1]".into()));
        }
        if self.alpha == 0 || self.retry_budget == 0 {
            return Err(CliError::Usage("--alpha and --retry-budget must be at least 1".into()));
        }
        Ok(SolverConfig {
            sigma_multiplier: self.sigma_mult,
            round_multiplier: self.rounds_mult,
            obl_threshold: self.obl_threshold,
            alpha: self.alpha,
            retry_budget: self.retry_budget,
            reduce_granularity: self.reduce_granularity,
            seed,
        })
    }
}

impl Default for ConstantArgs {
    fn default() -> Self {
        ConstantArgs {
            sigma_mult: 16.0,
            rounds_mult: 66.0,
            obl_threshold: 1.0 / 96.0,
            alpha: 4,
            retry_budget: 64,
            reduce_granularity: false,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum)]
    pub alg: Algorithm,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub constants: ConstantArgs,
    /// Schedule output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Pipeline trace output file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("target").required(true).args(["schedule", "policy"])))]
pub struct EvalArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Steps after which a trial is stopped; 10⁴·n by default.
    #[arg(long)]
    pub cutoff: Option<u64>,
    /// Largest n for the optimal-regimen oracle.
    #[arg(long, default_value_t = 4)]
    pub caps_n: usize,
    /// Largest m for the optimal-regimen oracle.
    #[arg(long, default_value_t = 3)]
    pub caps_m: usize,
    /// Largest n for exact evaluation.
    #[arg(long, default_value_t = 10)]
    pub exact_max_n: usize,
    /// Instance id column; the instance file stem by default.
    #[arg(long)]
    pub id: Option<String>,
    /// Algorithm column; the policy name or "schedule" by default.
    #[arg(long)]
    pub label: Option<String>,
    /// Results file to append to; stdout when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(long)]
    pub csv: PathBuf,
    /// Cells evaluated concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Summary JSON output file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Bench(a) => bench::cmd_bench(&a),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<(), CliError> {
    let kind = match a.kind {
        KindArg::Independent => GeneratorKind::Independent,
        KindArg::Chains => GeneratorKind::Chains { count: a.chains },
        KindArg::Forest => GeneratorKind::Forest,
    };
    let p_distribution = match a.density {
        Some(density) => PDistribution::Sparse {
            density,
            low: a.p_low,
            high: a.p_high,
        },
        None => PDistribution::Uniform {
            low: a.p_low,
            high: a.p_high,
        },
    };
    let inst = generate(&GeneratorSpec {
        n: a.n,
        m: a.m,
        kind,
        p_distribution,
        seed: a.seed,
    })
    .map_err(|e| CliError::Usage(e.to_string()))?;
    write_out(a.output.as_deref(), &inst.to_json())
}

/// Schedule plus a JSON trace of how it was built.
pub struct Solved {
    pub schedule: ObliviousSchedule,
    pub trace: serde_json::Value,
}

/// Runs the selected solver.
pub fn solve(inst: &ProblemInstance, alg: Algorithm, cfg: &SolverConfig) -> Result<Solved, CliError> {
    if let Some(why) = alg.incompatibility(inst.constraints.kind) {
        return Err(CliError::Usage(why));
    }
    match alg {
        Algorithm::GreedyAdaptive => Err(CliError::Usage(
            "greedy-adaptive is a policy, not a schedule; evaluate it with `eval --policy greedy-adaptive`".into(),
        )),
        Algorithm::GreedyOblivious => {
            let build = suu_i_obl(inst, &OblConfig {
                round_multiplier: cfg.round_multiplier,
                threshold: cfg.obl_threshold,
            })
            .map_err(core)?;
            let seg = build.segment_mass(inst);
            let trace = json!({
                "algorithm": alg.name(),
                "n": inst.n,
                "m": inst.m,
                "horizon": build.horizon,
                "max_rounds": build.max_rounds,
                "rounds": build.segments.len(),
                "min_segment_mass": seg.iter().copied().fold(f64::INFINITY, f64::min),
                "final_length": build.schedule.len(),
            });
            Ok(Solved {
                schedule: build.schedule,
                trace,
            })
        }
        Algorithm::LpChains | Algorithm::Forest => {
            let out = if alg == Algorithm::LpChains {
                solve_chains(inst, cfg)
            } else {
                solve_forest(inst, cfg)
            }
            .map_err(core)?;
            let trace = serde_json::to_value(&out.trace).expect("trace serializes");
            Ok(Solved {
                schedule: out.schedule,
                trace,
            })
        }
    }
}

pub fn load_instance(path: &Path) -> Result<ProblemInstance, CliError> {
    ProblemInstance::load(path).map_err(core)
}

pub fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let cfg = a.constants.config(a.seed)?;
    let solved = solve(&inst, a.alg, &cfg)?;
    solved.schedule.validate_for(&inst).map_err(core)?;
    write_out(a.output.as_deref(), &solved.schedule.to_json())?;
    if let Some(p) = &a.trace {
        let text = serde_json::to_string_pretty(&solved.trace).expect("trace serializes");
        std::fs::write(p, text).map_err(io_err(p))?;
    }
    Ok(())
}

/// What `eval` measures.
pub enum Target<'a> {
    Schedule(&'a ObliviousSchedule),
    Policy(PolicyArg),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub trials: usize,
    pub seed: u64,
    pub cutoff: Option<u64>,
    pub caps: RegimenCaps,
    pub exact_max_n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub length: Option<usize>,
    pub mean: f64,
    pub half_width: f64,
    pub truncated: usize,
    /// Exact expected makespan; infinite when it diverges.
    pub exact: Option<f64>,
    pub t_opt: Option<f64>,
    pub ratio: Option<f64>,
}

fn within(inst: &ProblemInstance, caps: RegimenCaps) -> bool {
    inst.n <= caps.n && inst.m <= caps.m
}

fn exact_or_none(r: Result<f64, SimError>) -> Result<Option<f64>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(SimError::Divergent { .. }) => Ok(Some(f64::INFINITY)),
        Err(SimError::TooLarge { .. } | SimError::MemoryBudget { .. }) => Ok(None),
        Err(e) => Err(core(e)),
    }
}

pub fn evaluate(inst: &ProblemInstance, target: Target<'_>, opts: &EvalOptions) -> Result<EvalRecord, CliError> {
    if opts.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let cutoff = opts.cutoff.unwrap_or_else(|| default_cutoff(inst.n));
    let regimen = if within(inst, opts.caps) {
        Some(optimal_regimen(inst, opts.caps).map_err(core)?)
    } else {
        None
    };
    let greedy;
    let strategy = match target {
        Target::Schedule(s) => Strategy::Oblivious(s),
        Target::Policy(PolicyArg::GreedyAdaptive) => {
            greedy = suu_i_policy(inst).map_err(|e| CliError::Usage(e.to_string()))?;
            Strategy::Adaptive(&greedy)
        }
        Target::Policy(PolicyArg::Optimal) => match &regimen {
            Some(r) => Strategy::Adaptive(r),
            None => {
                return Err(CliError::Usage(format!(
                    "optimal policy needs n <= {} and m <= {}",
                    opts.caps.n, opts.caps.m
                )))
            }
        },
    };
    let est = simulate(strategy, inst, opts.trials, opts.seed, cutoff).map_err(|e| match e {
        SimError::Schedule(_) | SimError::ZeroCutoff => CliError::Usage(e.to_string()),
        e => core(e),
    })?;
    let exact = if inst.n <= opts.exact_max_n {
        exact_or_none(exact_makespan(strategy, inst))?
    } else {
        None
    };
    let t_opt = regimen.as_ref().map(|r| r.t_opt());
    Ok(EvalRecord {
        length: match strategy {
            Strategy::Oblivious(s) => Some(s.len()),
            Strategy::Adaptive(_) => None,
        },
        mean: est.mean,
        half_width: est.half_width,
        truncated: est.truncated,
        exact,
        t_opt,
        ratio: t_opt.map(|t| est.mean / t),
    })
}

pub const EVAL_HEADER: [&str; 14] = [
    "instance",
    "algorithm",
    "n",
    "m",
    "kind",
    "seed",
    "trials",
    "length",
    "mean",
    "ci_half_width",
    "truncated",
    "exact",
    "t_opt",
    "ratio",
];

pub fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let sched = match &a.schedule {
        Some(p) => Some(ObliviousSchedule::load(p).map_err(core)?),
        None => None,
    };
    let target = match (&sched, a.policy) {
        (Some(s), _) => Target::Schedule(s),
        (None, Some(p)) => Target::Policy(p),
        (None, None) => return Err(CliError::Usage("one of --schedule or --policy is required".into())),
    };
    let label = a.label.clone().unwrap_or_else(|| match &target {
        Target::Schedule(_) => "schedule".into(),
        Target::Policy(p) => p.to_possible_value().expect("value enum").get_name().to_string(),
    });
    let opts = EvalOptions {
        trials: a.trials,
        seed: a.seed,
        cutoff: a.cutoff,
        caps: RegimenCaps {
            n: a.caps_n,
            m: a.caps_m,
        },
        exact_max_n: a.exact_max_n,
    };
    let rec = evaluate(&inst, target, &opts)?;
    let id = a.id.clone().unwrap_or_else(|| {
        a.instance
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let row = vec![
        id,
        label,
        inst.n.to_string(),
        inst.m.to_string(),
        inst.constraints.kind.to_string(),
        a.seed.to_string(),
        a.trials.to_string(),
        rec.length.map(|l| l.to_string()).unwrap_or_default(),
        report::sig6(rec.mean),
        report::sig6(rec.half_width),
        rec.truncated.to_string(),
        report::opt6(rec.exact),
        report::opt6(rec.t_opt),
        report::opt6(rec.ratio),
    ];
    match &a.csv {
        Some(p) => report::append(p, &EVAL_HEADER, &[row]).map_err(io_err(p)),
        None => {
            print!("{}", report::render(&EVAL_HEADER, &[row]));
            Ok(())
        }
    }
}
