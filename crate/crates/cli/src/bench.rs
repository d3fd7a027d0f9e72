//! Benchmark grids over `(n, m, kind, algorithm)`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use suu_core::instance::GeneratorKind;
use suu_core::sim::RegimenCaps;
use suu_core::util::{derive_seed, success_probability};
use suu_core::{
    build_lp1, generate, optimal_regimen, solve_lp, GeneratorSpec, PDistribution, PrecedenceDag,
    ProblemInstance,
};

use crate::report::{opt6, sig6, write_table};
use crate::{evaluate, io_err, solve, Algorithm, BenchArgs, CliError, ConstantArgs, EvalOptions, KindArg, PolicyArg, Target};

/// Suite file contents.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub kinds: Vec<KindArg>,
    pub algorithms: Vec<Algorithm>,
    /// Instances per cell.
    #[serde(default = "one")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Chains per chains instance; `⌈n/2⌉` when absent.
    #[serde(default)]
    pub chains: Option<usize>,
    #[serde(default)]
    pub p_distribution: PDistribution,
    #[serde(default)]
    pub cutoff: Option<u64>,
}

fn one() -> usize {
    1
}

fn default_trials() -> usize {
    200
}

impl Suite {
    pub fn load(path: &Path) -> Result<Suite, CliError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let suite: Suite = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if suite.n.is_empty() || suite.m.is_empty() || suite.kinds.is_empty() || suite.algorithms.is_empty() {
            return Err(CliError::Usage("suite grid axes must be non-empty".into()));
        }
        if suite.n.contains(&0) || suite.m.contains(&0) || suite.instances == 0 || suite.trials == 0 {
            return Err(CliError::Usage("n, m, instances and trials must be at least 1".into()));
        }
        Ok(suite)
    }
}

/// One grid cell, in grid order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub m: usize,
    pub kind: KindArg,
    pub algorithm: Algorithm,
}

/// Cells ordered by `n`, then `m`, then kind, then algorithm.
pub fn cells(suite: &Suite) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in &suite.n {
        for &m in &suite.m {
            for &kind in &suite.kinds {
                for &algorithm in &suite.algorithms {
                    out.push(Cell {
                        index: out.len(),
                        n,
                        m,
                        kind,
                        algorithm,
                    });
                }
            }
        }
    }
    out
}

fn lg(x: f64) -> f64 {
    x.log2().max(1.0)
}

/// Reference factor expressions, each log clamped below at 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct References {
    pub log_n: f64,
    pub log2_n: f64,
    /// `log m · log n · log(n+m) / log log(n+m)`.
    pub chains: f64,
    /// `chains · log n`.
    pub forest: f64,
}

impl References {
    pub fn new(n: usize, m: usize) -> Self {
        let (n, m) = (n as f64, m as f64);
        let chains = lg(m) * lg(n) * lg(n + m) / lg((n + m).log2());
        References {
            log_n: lg(n),
            log2_n: lg(n).powi(2),
            chains,
            forest: chains * lg(n),
        }
    }

    pub fn for_algorithm(&self, alg: Algorithm) -> f64 {
        match alg {
            Algorithm::GreedyAdaptive => self.log_n,
            Algorithm::GreedyOblivious => self.log2_n,
            Algorithm::LpChains => self.chains,
            Algorithm::Forest => self.forest,
        }
    }
}

/// Lower bound on the optimal expected makespan: exact for tiny instances,
/// otherwise `max(max_j 1/q_j, T*/16)` where `q_j` is the success
/// probability with every machine on `j` and `T*` the LP value of the
/// instance with forest edges dropped.
pub fn reference_makespan(inst: &ProblemInstance) -> Result<(f64, bool), CliError> {
    let caps = RegimenCaps::default();
    if inst.n <= caps.n && inst.m <= caps.m {
        let r = optimal_regimen(inst, caps).map_err(crate::core)?;
        return Ok((r.t_opt(), true));
    }
    let single = (0..inst.n)
        .map(|j| 1.0 / success_probability((0..inst.m).map(|i| inst.p(i, j))))
        .fold(1.0, f64::max);
    let relaxed;
    let lp_inst = if inst.constraints.kind == suu_core::ConstraintKind::Forest {
        relaxed = ProblemInstance::new(inst.n, inst.m, inst.p.clone(), PrecedenceDag::independent())
            .map_err(crate::core)?;
        &relaxed
    } else {
        inst
    };
    let t_star = solve_lp(&build_lp1(lp_inst).map_err(crate::core)?).map_err(crate::core)?.t;
    Ok((single.max(t_star / 16.0), false))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub status: String,
    pub length: Option<f64>,
    pub mean: Option<f64>,
    pub half_width: Option<f64>,
    pub truncated: usize,
    pub t_ref: Option<f64>,
    pub t_ref_exact: bool,
    pub ratio: Option<f64>,
    pub refs: References,
}

impl CellResult {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn ratio_over_ref(&self) -> Option<f64> {
        self.ratio.map(|r| r / self.refs.for_algorithm(self.cell.algorithm))
    }
}

fn instance_for(suite: &Suite, cell: &Cell, k: usize) -> Result<ProblemInstance, CliError> {
    let kind = match cell.kind {
        KindArg::Independent => GeneratorKind::Independent,
        KindArg::Chains => GeneratorKind::Chains {
            count: suite.chains.unwrap_or(cell.n.div_ceil(2)).clamp(1, cell.n),
        },
        KindArg::Forest => GeneratorKind::Forest,
    };
    // same instances for every algorithm of a (n, m, kind) triple
    let group = cell.index / suite.algorithms.len();
    generate(&GeneratorSpec {
        n: cell.n,
        m: cell.m,
        kind,
        p_distribution: suite.p_distribution,
        seed: derive_seed(suite.seed, (group * suite.instances + k) as u64),
    })
    .map_err(|e| CliError::Usage(e.to_string()))
}

/// Evaluates one cell; failures become the row status.
pub fn run_cell(suite: &Suite, cell: Cell) -> CellResult {
    let refs = References::new(cell.n, cell.m);
    let mut res = CellResult {
        cell,
        status: "ok".into(),
        length: None,
        mean: None,
        half_width: None,
        truncated: 0,
        t_ref: None,
        t_ref_exact: true,
        ratio: None,
        refs,
    };
    let kind = match cell.kind {
        KindArg::Independent => suu_core::ConstraintKind::Independent,
        KindArg::Chains => suu_core::ConstraintKind::Chains,
        KindArg::Forest => suu_core::ConstraintKind::Forest,
    };
    if let Some(why) = cell.algorithm.incompatibility(kind) {
        res.status = format!("skipped: {why}");
        return res;
    }
    match run_instances(suite, &cell, &mut res) {
        Ok(()) => res,
        Err(e) => {
            res.status = format!("error: {e}");
            res
        }
    }
}

fn run_instances(suite: &Suite, cell: &Cell, res: &mut CellResult) -> Result<(), CliError> {
    let k = suite.instances as f64;
    let (mut len, mut mean, mut hw, mut t_ref, mut ratio) = (0.0, 0.0, 0.0f64, 0.0, 0.0);
    let mut has_len = true;
    for i in 0..suite.instances {
        let inst = instance_for(suite, cell, i)?;
        let seed = derive_seed(suite.seed ^ 0x5eed, (cell.index * suite.instances + i) as u64);
        let opts = EvalOptions {
            trials: suite.trials,
            seed: derive_seed(seed, 1),
            cutoff: suite.cutoff,
            caps: RegimenCaps { n: 0, m: 0 },
            exact_max_n: 0,
        };
        let rec = if cell.algorithm == Algorithm::GreedyAdaptive {
            has_len = false;
            evaluate(&inst, Target::Policy(PolicyArg::GreedyAdaptive), &opts)?
        } else {
            let cfg = ConstantArgs::default().config(seed)?;
            let solved = solve(&inst, cell.algorithm, &cfg)?;
            evaluate(&inst, Target::Schedule(&solved.schedule), &opts)?
        };
        let (tr, exact) = reference_makespan(&inst)?;
        len += rec.length.unwrap_or(0) as f64;
        mean += rec.mean;
        hw = hw.max(rec.half_width);
        res.truncated += rec.truncated;
        t_ref += tr;
        ratio += rec.mean / tr;
        res.t_ref_exact &= exact;
    }
    res.length = has_len.then_some(len / k);
    res.mean = Some(mean / k);
    res.half_width = Some(hw);
    res.t_ref = Some(t_ref / k);
    res.ratio = Some(ratio / k);
    Ok(())
}

pub const BENCH_HEADER: [&str; 19] = [
    "n",
    "m",
    "kind",
    "algorithm",
    "status",
    "instances",
    "length",
    "mean",
    "ci_half_width",
    "truncated",
    "t_ref",
    "t_ref_kind",
    "ratio",
    "ref_log_n",
    "ref_log2_n",
    "ref_chains",
    "ref_forest",
    "ref",
    "ratio_over_ref",
];

pub fn row(suite: &Suite, r: &CellResult) -> Vec<String> {
    let c = &r.cell;
    vec![
        c.n.to_string(),
        c.m.to_string(),
        format!("{:?}", c.kind).to_lowercase(),
        c.algorithm.name().into(),
        r.status.clone(),
        suite.instances.to_string(),
        opt6(r.length),
        opt6(r.mean),
        opt6(r.half_width),
        r.truncated.to_string(),
        opt6(r.t_ref),
        if r.t_ref.is_none() {
            String::new()
        } else if r.t_ref_exact {
            "exact".into()
        } else {
            "proxy".into()
        },
        opt6(r.ratio),
        sig6(r.refs.log_n),
        sig6(r.refs.log2_n),
        sig6(r.refs.chains),
        sig6(r.refs.forest),
        sig6(r.refs.for_algorithm(c.algorithm)),
        opt6(r.ratio_over_ref()),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub algorithm: Algorithm,
    /// Smallest `c` with `ratio ≤ c · ref` on every ok row.
    pub c: f64,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub cells: usize,
    pub ok: usize,
    pub skipped: usize,
    pub errors: usize,
    pub fits: Vec<Fit>,
    /// Every ok row has a finite ratio and no truncated trial.
    pub finite: bool,
    /// Reference columns are non-decreasing in `n` and `m`.
    pub monotone_reference: bool,
}

pub fn summarize(suite: &Suite, results: &[CellResult]) -> Summary {
    let ok: Vec<&CellResult> = results.iter().filter(|r| r.is_ok()).collect();
    let fits = suite
        .algorithms
        .iter()
        .filter_map(|&alg| {
            let vals: Vec<f64> = ok
                .iter()
                .filter(|r| r.cell.algorithm == alg)
                .filter_map(|r| r.ratio_over_ref())
                .collect();
            (!vals.is_empty()).then(|| Fit {
                algorithm: alg,
                c: vals.iter().copied().fold(0.0, f64::max),
                rows: vals.len(),
            })
        })
        .collect();
    let finite = ok
        .iter()
        .all(|r| r.ratio.is_some_and(f64::is_finite) && r.truncated == 0);
    let mut ns = suite.n.clone();
    ns.sort_unstable();
    let mut ms = suite.m.clone();
    ms.sort_unstable();
    let mut monotone = true;
    for w in ns.windows(2) {
        for &m in &ms {
            let (a, b) = (References::new(w[0], m), References::new(w[1], m));
            monotone &= a.log_n <= b.log_n && a.log2_n <= b.log2_n && a.chains <= b.chains && a.forest <= b.forest;
        }
    }
    for w in ms.windows(2) {
        for &n in &ns {
            let (a, b) = (References::new(n, w[0]), References::new(n, w[1]));
            monotone &= a.chains <= b.chains + 1e-12 && a.forest <= b.forest + 1e-12;
        }
    }
    Summary {
        cells: results.len(),
        ok: ok.len(),
        skipped: results.iter().filter(|r| r.status.starts_with("skipped")).count(),
        errors: results.iter().filter(|r| r.status.starts_with("error")).count(),
        fits,
        finite,
        monotone_reference: monotone,
    }
}

/// Runs every cell with at most `jobs` cells in flight; results are in grid
/// order.
pub fn run_suite(suite: &Suite, jobs: usize) -> Result<Vec<CellResult>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let grid = cells(suite);
    Ok(pool.install(|| grid.par_iter().map(|&c| run_cell(suite, c)).collect()))
}

pub fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let suite = Suite::load(&a.suite)?;
    let results = run_suite(&suite, a.jobs)?;
    let rows: Vec<Vec<String>> = results.iter().map(|r| row(&suite, r)).collect();
    write_table(&a.csv, &BENCH_HEADER, &rows).map_err(io_err(&a.csv))?;
    let summary = summarize(&suite, &results);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    match &a.summary {
        Some(p) => std::fs::write(p, &text).map_err(io_err(p))?,
        None => println!("{text}"),
    }
    Ok(())
}
