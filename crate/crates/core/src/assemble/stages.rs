//! Individual pipeline stages: layout, random delay, flattening,
//! granularity reduction, replication and the tail.

use rand::Rng;

use crate::instance::ProblemInstance;
use crate::lp::IntegralLpSolution;
use crate::schedule::{
    check_feasible, Continuation, ObliviousSchedule, PseudoSchedule, Run, Step, TailRule,
};
use crate::util::stream_rng;

/// Places every chain from step 1: job `j` occupies the window
/// `[ψ_j + 1, ψ_j + L_j]` where `L_j = max_i x̂_ij` and `ψ_j` sums `L` over
/// `j`'s predecessors; machine `i` works on `j` in the first `x̂_ij` steps of
/// the window.
pub fn layout_pseudo(sol: &IntegralLpSolution, inst: &ProblemInstance) -> PseudoSchedule {
    let mut ps = PseudoSchedule::new(inst.m, 0);
    for chain in &sol.chains {
        let mut psi = 0usize;
        for &j in chain {
            let mut len = 0usize;
            for i in 0..inst.m {
                let x = sol.x[i][j] as usize;
                for t in psi + 1..=psi + x {
                    ps.add(t, i, j);
                }
                len = len.max(x);
            }
            psi += len;
        }
    }
    ps
}

/// Per-chain start delays and the outcome of the retry loop.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayVector {
    pub delays: Vec<usize>,
    pub seed: u64,
    /// Load `Π_max` of the input; delays lie in `[0, Π_max]`.
    pub max_delay: usize,
    pub target: usize,
    /// Attempts made, including the accepted one.
    pub attempts: usize,
    /// Collision count of the returned schedule.
    pub collisions: usize,
    /// Set when no attempt met the target.
    pub warning: bool,
}

/// `α · ⌈log₂(n+m) / max(1, log₂ log₂(n+m))⌉`.
pub fn collision_target(n: usize, m: usize, alpha: usize) -> usize {
    let l = ((n + m) as f64).log2();
    let ll = if l > 0.0 { l.log2() } else { 0.0 };
    alpha * (l / ll.max(1.0)).ceil().max(1.0) as usize
}

fn chain_index(chains: &[Vec<usize>]) -> Vec<usize> {
    let n = chains.iter().flatten().map(|&j| j + 1).max().unwrap_or(0);
    let mut of = vec![usize::MAX; n];
    for (k, c) in chains.iter().enumerate() {
        for &j in c {
            of[j] = k;
        }
    }
    of
}

/// Shifts every assignment of chain `k` by `delays[k]` steps.
pub fn apply_delays(ps: &PseudoSchedule, chains: &[Vec<usize>], delays: &[usize]) -> PseudoSchedule {
    let of = chain_index(chains);
    let mut out = PseudoSchedule::new(ps.m, 0);
    for (t0, step) in ps.steps().iter().enumerate() {
        for &(i, j) in step {
            out.add(t0 + 1 + delays[of[j]], i, j);
        }
    }
    out
}

/// Delays each chain by an independent uniform amount in `[0, Π_max]`,
/// retrying with fresh delays until the collision count is at most the
/// target or `retry_budget` attempts are used. Keeps the best attempt.
pub fn random_delay(
    ps: &PseudoSchedule,
    chains: &[Vec<usize>],
    alpha: usize,
    retry_budget: usize,
    seed: u64,
) -> (PseudoSchedule, DelayVector) {
    let n: usize = chains.iter().map(Vec::len).sum();
    let target = collision_target(n, ps.m, alpha);
    let max_delay = ps.max_load();
    let mut best: Option<(PseudoSchedule, Vec<usize>, usize)> = None;
    let mut attempts = 0;
    for a in 0..retry_budget.max(1) {
        attempts = a + 1;
        let mut rng = stream_rng(seed, a as u64);
        let delays: Vec<usize> = chains
            .iter()
            .map(|_| rng.gen_range(0..=max_delay))
            .collect();
        let shifted = apply_delays(ps, chains, &delays);
        let c = check_feasible(&shifted);
        if best.as_ref().is_none_or(|b| c < b.2) {
            best = Some((shifted, delays, c));
        }
        if c <= target {
            break;
        }
    }
    let (sched, delays, collisions) = best.expect("at least one attempt");
    let dv = DelayVector {
        delays,
        seed,
        max_delay,
        target,
        attempts,
        collisions,
        warning: collisions > target,
    };
    (sched, dv)
}

/// Serializes each step's collisions: step `t` becomes `c_t = max_i |f_t(i)|`
/// substeps, machine `i` taking its jobs in ascending order. Empty steps
/// vanish.
pub fn flatten(ps: &PseudoSchedule) -> ObliviousSchedule {
    let mut out = ObliviousSchedule::empty();
    for step in ps.steps() {
        if step.is_empty() {
            continue;
        }
        // step is sorted by (machine, job)
        let mut sub: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut k = 0;
        while k < step.len() {
            let i = step[k].0;
            let mut s = 0;
            while k < step.len() && step[k].0 == i {
                if sub.len() == s {
                    sub.push(Vec::new());
                }
                sub[s].push(step[k]);
                s += 1;
                k += 1;
            }
        }
        for pairs in sub {
            out.push_run(Step::from_pairs(pairs).expect("one job per machine"), 1);
        }
    }
    out
}

/// Steps of `x̂` removed by [`reduce_granularity`], restored after expansion.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReinsertionPlan {
    /// Coarse unit `u`: one coarse step stands for `u` steps.
    pub unit: usize,
    /// `(machine, job, steps)` remainders.
    pub remainders: Vec<(usize, usize, usize)>,
}

impl ReinsertionPlan {
    pub fn is_identity(&self) -> bool {
        self.unit <= 1 && self.remainders.is_empty()
    }

    /// Steps added by [`expand`](Self::expand) at most.
    pub fn extra_len(&self, n: usize) -> usize {
        (0..n)
            .map(|j| {
                self.remainders
                    .iter()
                    .filter(|r| r.1 == j)
                    .map(|r| r.2)
                    .max()
                    .unwrap_or(0)
            })
            .sum()
    }

    /// Expands a coarse schedule by the unit and inserts each job's
    /// remainder block right after the job's last step, or after its chain
    /// predecessor's when the job vanished from the coarse schedule.
    pub fn expand(&self, coarse: &ObliviousSchedule, chains: &[Vec<usize>]) -> ObliviousSchedule {
        let mut s = coarse.replicate(self.unit.max(1));
        for chain in chains {
            let mut anchor = 0usize;
            for &j in chain {
                let pos = last_step_of(&s, j).unwrap_or(anchor).max(anchor);
                let block: Vec<(usize, usize)> = self
                    .remainders
                    .iter()
                    .filter(|r| r.1 == j && r.2 > 0)
                    .map(|r| (r.0, r.2))
                    .collect();
                let len = block.iter().map(|b| b.1).max().unwrap_or(0);
                if len > 0 {
                    let mut ins = ObliviousSchedule::empty();
                    for k in 0..len {
                        let pairs = block
                            .iter()
                            .filter(|b| b.1 > k)
                            .map(|b| (b.0, j))
                            .collect();
                        ins.push_run(Step::from_pairs(pairs).expect("distinct machines"), 1);
                    }
                    s = insert_after(&s, pos, &ins);
                }
                anchor = pos + len;
            }
        }
        s
    }
}

fn last_step_of(s: &ObliviousSchedule, job: usize) -> Option<usize> {
    let mut end = 0;
    let mut last = None;
    for r in s.runs() {
        end += r.len;
        if r.step.pairs().iter().any(|&(_, j)| j == job) {
            last = Some(end);
        }
    }
    last
}

/// `s[..pos] ++ ins ++ s[pos..]`.
fn insert_after(s: &ObliviousSchedule, pos: usize, ins: &ObliviousSchedule) -> ObliviousSchedule {
    let mut out = ObliviousSchedule::empty();
    let mut start = 0;
    let mut inserted = false;
    let emit_insert = |out: &mut ObliviousSchedule| {
        for r in ins.runs() {
            out.push_run(r.step.clone(), r.len);
        }
    };
    for r in s.runs() {
        let end = start + r.len;
        if !inserted && pos >= start && pos < end {
            out.push_run(r.step.clone(), pos - start);
            emit_insert(&mut out);
            inserted = true;
            out.push_run(r.step.clone(), end - pos);
        } else {
            out.push_run(r.step.clone(), r.len);
        }
        start = end;
    }
    if !inserted {
        emit_insert(&mut out);
    }
    out.continuation = s.continuation.clone();
    out
}

/// Rounds every `x̂_ij` down to a multiple of `u = ⌈L/β⌉` where
/// `L = max x̂_ij`, returning the coarse solution (counts divided by `u`)
/// and the remainders. Identity when `L ≤ β`.
pub fn reduce_granularity(
    sol: &IntegralLpSolution,
    beta: usize,
) -> (IntegralLpSolution, ReinsertionPlan) {
    let l = sol.x.iter().flatten().copied().max().unwrap_or(0) as usize;
    let beta = beta.max(1);
    if l <= beta {
        return (
            sol.clone(),
            ReinsertionPlan {
                unit: 1,
                remainders: Vec::new(),
            },
        );
    }
    let u = l.div_ceil(beta);
    let mut coarse = sol.clone();
    let mut remainders = Vec::new();
    for (i, row) in sol.x.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            let x = x as usize;
            coarse.x[i][j] = (x / u) as u64;
            let r = x % u;
            if r > 0 {
                remainders.push((i, j, r));
            }
        }
    }
    coarse.d = sol.d.iter().map(|&d| (d as usize).div_ceil(u) as u64).collect();
    coarse.t = (sol.t as usize).div_ceil(u) as u64;
    (coarse, ReinsertionPlan { unit: u, remainders })
}

/// Every step repeated `sigma` times.
pub fn replicate(sched: &ObliviousSchedule, sigma: usize) -> ObliviousSchedule {
    sched.replicate(sigma)
}

/// Appends the round-robin tail over a topological order of the jobs.
pub fn attach_tail(sched: &ObliviousSchedule, inst: &ProblemInstance) -> ObliviousSchedule {
    let order = inst.topological_order();
    sched
        .clone()
        .with_continuation(Continuation::Tail(TailRule { order }))
}

/// Renames jobs through `map` (`job k` becomes `map[k]`).
pub fn remap_jobs(sched: &ObliviousSchedule, map: &[usize]) -> ObliviousSchedule {
    let mut out = ObliviousSchedule::from_runs(sched.runs().iter().map(|r| Run {
        step: Step::from_pairs(r.step.pairs().iter().map(|&(i, j)| (i, map[j])).collect())
            .expect("machines unchanged"),
        len: r.len,
    }));
    out.continuation = match &sched.continuation {
        Continuation::Tail(rule) => Continuation::Tail(TailRule {
            order: rule.order.iter().map(|&j| map[j]).collect(),
        }),
        c => c.clone(),
    };
    out
}
