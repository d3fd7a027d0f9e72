//! Greedy max-sum-mass assignment and the independent-jobs schedulers.

use thiserror::Error;

use crate::instance::{ConstraintKind, ProblemInstance};
use crate::schedule::{concat, raw_mass_between, Continuation, MassLedger, ObliviousSchedule, Step};
use crate::sim::{AdaptivePolicy, JobSet};
use crate::util::ceil_log2;

#[derive(Debug, Error)]
pub enum GreedyError {
    #[error("{0} constraints are not supported here; expected independent jobs")]
    UnsupportedConstraints(ConstraintKind),
    #[error("machine {machine} assigned {total} steps but the horizon is {horizon}")]
    CapacityViolation {
        machine: usize,
        total: usize,
        horizon: usize,
    },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("no horizon up to {0} lets every job reach the mass threshold")]
    NoHorizon(usize),
}

/// Single-step map machine → job (or idle).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub machines: Vec<Option<usize>>,
}

impl Assignment {
    pub fn idle(m: usize) -> Self {
        Assignment {
            machines: vec![None; m],
        }
    }

    /// Raw per-job mass `Σ_{i: f(i)=j} p_ij`.
    pub fn raw_mass(&self, inst: &ProblemInstance) -> Vec<f64> {
        let mut raw = vec![0.0; inst.n];
        for (i, j) in self.machines.iter().enumerate() {
            if let Some(j) = *j {
                raw[j] += inst.p(i, j);
            }
        }
        raw
    }

    /// Sum over jobs of capped mass.
    pub fn total_mass(&self, inst: &ProblemInstance) -> f64 {
        self.raw_mass(inst).iter().map(|&x| x.min(1.0)).sum()
    }

    pub fn to_step(&self) -> Step {
        Step::from_dense(&self.machines)
    }
}

/// Positive `(p, machine, job)` triples over `jobs`, in greedy scan order:
/// descending p, then ascending machine, then ascending job.
fn scan_order(inst: &ProblemInstance, jobs: &[usize]) -> Vec<(f64, usize, usize)> {
    let mut pairs: Vec<_> = (0..inst.m)
        .flat_map(|i| jobs.iter().map(move |&j| (i, j)))
        .filter_map(|(i, j)| {
            let p = inst.p(i, j);
            (p > 0.0).then_some((p, i, j))
        })
        .collect();
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    pairs
}

/// Greedy max-sum-mass assignment restricted to `jobs`.
///
/// Scans pairs by descending probability and assigns machine `i` to job `j`
/// when `i` is still free and the job's raw mass stays at most 1.
pub fn msm(inst: &ProblemInstance, jobs: &[usize]) -> Assignment {
    let mut out = Assignment::idle(inst.m);
    let mut acc = vec![0.0; inst.n];
    for (p, i, j) in scan_order(inst, jobs) {
        if out.machines[i].is_none() && acc[j] + p <= 1.0 + 1e-12 {
            out.machines[i] = Some(j);
            acc[j] += p;
        }
    }
    out
}

/// Step counts `x[i][j]` for a schedule of length `horizon`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedAssignment {
    pub x: Vec<Vec<usize>>,
    pub horizon: usize,
    /// Unused capacity per machine.
    pub remaining: Vec<usize>,
}

impl TimedAssignment {
    pub fn mass(&self, inst: &ProblemInstance) -> MassLedger {
        let mut raw = vec![0.0; inst.n];
        for (i, row) in self.x.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                raw[j] += x as f64 * inst.p(i, j);
            }
        }
        MassLedger::from_raw(raw)
    }
}

/// Multi-step greedy: each pair is visited once and takes as many steps as
/// the machine's remaining capacity and the job's remaining mass allow.
pub fn msm_ext(
    inst: &ProblemInstance,
    jobs: &[usize],
    horizon: usize,
) -> Result<TimedAssignment, GreedyError> {
    if horizon == 0 {
        return Err(GreedyError::ZeroHorizon);
    }
    let mut x = vec![vec![0usize; inst.n]; inst.m];
    let mut remaining = vec![horizon; inst.m];
    let mut acc = vec![0.0; inst.n];
    for (p, i, j) in scan_order(inst, jobs) {
        if remaining[i] == 0 {
            continue;
        }
        let room = ((1.0 - acc[j]) / p + 1e-9).floor().max(0.0);
        let k = if room >= remaining[i] as f64 {
            remaining[i]
        } else {
            room as usize
        };
        if k > 0 {
            x[i][j] = k;
            remaining[i] -= k;
            acc[j] += k as f64 * p;
        }
    }
    Ok(TimedAssignment {
        x,
        horizon,
        remaining,
    })
}

/// Lays out `ta` as a schedule of length `horizon`: each machine works on
/// its jobs in contiguous blocks, in job-index order.
pub fn to_schedule(ta: &TimedAssignment) -> Result<ObliviousSchedule, GreedyError> {
    let m = ta.x.len();
    let mut blocks: Vec<Vec<(usize, usize)>> = Vec::with_capacity(m);
    let mut cuts = vec![0, ta.horizon];
    for (i, row) in ta.x.iter().enumerate() {
        let total: usize = row.iter().sum();
        if total > ta.horizon {
            return Err(GreedyError::CapacityViolation {
                machine: i,
                total,
                horizon: ta.horizon,
            });
        }
        let mut pos = 0;
        let mut b = Vec::new();
        for (j, &x) in row.iter().enumerate() {
            if x > 0 {
                pos += x;
                b.push((pos, j));
                cuts.push(pos);
            }
        }
        blocks.push(b);
    }
    cuts.sort_unstable();
    cuts.dedup();
    let mut cursor = vec![0usize; m];
    let mut sched = ObliviousSchedule::empty();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut pairs = Vec::new();
        for i in 0..m {
            while cursor[i] < blocks[i].len() && blocks[i][cursor[i]].0 <= a {
                cursor[i] += 1;
            }
            if let Some(&(_, j)) = blocks[i].get(cursor[i]) {
                pairs.push((i, j));
            }
        }
        sched.push_run(Step::from_pairs(pairs).expect("one job per machine"), b - a);
    }
    Ok(sched)
}

/// Adaptive policy running [`msm`] on the unfinished jobs.
#[derive(Clone, Copy, Debug)]
pub struct GreedyPolicy<'a> {
    inst: &'a ProblemInstance,
}

impl AdaptivePolicy for GreedyPolicy<'_> {
    fn assign(&self, unfinished: &JobSet) -> Step {
        let jobs: Vec<usize> = unfinished.iter().collect();
        msm(self.inst, &jobs).to_step()
    }
}

pub fn suu_i_policy(inst: &ProblemInstance) -> Result<GreedyPolicy<'_>, GreedyError> {
    require_independent(inst)?;
    Ok(GreedyPolicy { inst })
}

fn require_independent(inst: &ProblemInstance) -> Result<(), GreedyError> {
    match inst.constraints.kind {
        ConstraintKind::Independent => Ok(()),
        k => Err(GreedyError::UnsupportedConstraints(k)),
    }
}

/// Parameters of [`suu_i_obl`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OblConfig {
    /// Rounds per horizon are `max(1, ⌈mult · ⌈log₂ n⌉⌉)`.
    pub round_multiplier: f64,
    /// Mass a job needs within one round to be removed.
    pub threshold: f64,
}

impl Default for OblConfig {
    fn default() -> Self {
        OblConfig {
            round_multiplier: 66.0,
            threshold: 1.0 / 96.0,
        }
    }
}

impl OblConfig {
    pub fn max_rounds(&self, n: usize) -> usize {
        let r = (self.round_multiplier * ceil_log2(n as u64) as f64).ceil();
        (r as usize).max(1)
    }
}

/// One inner round of [`suu_i_obl`]: steps `start..=end`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    /// Jobs that reached the threshold in this round.
    pub completed: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ObliviousBuild {
    /// Rounds of the final horizon, repeating forever.
    pub schedule: ObliviousSchedule,
    pub horizon: usize,
    pub max_rounds: usize,
    pub segments: Vec<Segment>,
    /// Segment index in which each job reached the threshold.
    pub designated: Vec<usize>,
}

impl ObliviousBuild {
    /// Raw mass of every job within its designated segment.
    pub fn segment_mass(&self, inst: &ProblemInstance) -> Vec<f64> {
        let mut out = vec![0.0; inst.n];
        for (k, seg) in self.segments.iter().enumerate() {
            let raw = raw_mass_between(&self.schedule, inst, seg.start, seg.end);
            for j in 0..inst.n {
                if self.designated[j] == k {
                    out[j] = raw[j];
                }
            }
        }
        out
    }
}

/// Oblivious schedule for independent jobs built from repeated [`msm_ext`]
/// rounds, doubling the horizon until every job reaches the threshold
/// within some round.
pub fn suu_i_obl(inst: &ProblemInstance, cfg: &OblConfig) -> Result<ObliviousBuild, GreedyError> {
    require_independent(inst)?;
    let max_rounds = cfg.max_rounds(inst.n);
    const HORIZON_LIMIT: usize = 1 << 40;
    let mut horizon = 1usize;
    loop {
        let mut remaining: Vec<usize> = (0..inst.n).collect();
        let mut sched = ObliviousSchedule::empty();
        let mut segments = Vec::new();
        let mut designated = vec![usize::MAX; inst.n];
        while !remaining.is_empty() && segments.len() < max_rounds {
            let ta = msm_ext(inst, &remaining, horizon)?;
            let round = to_schedule(&ta)?;
            let start = sched.len() + 1;
            sched = concat(&sched, &round);
            let mass = ta.mass(inst);
            let (done, rest): (Vec<usize>, Vec<usize>) = remaining
                .into_iter()
                .partition(|&j| mass.capped[j] >= cfg.threshold);
            for &j in &done {
                designated[j] = segments.len();
            }
            segments.push(Segment {
                start,
                end: sched.len(),
                completed: done,
            });
            remaining = rest;
        }
        if remaining.is_empty() {
            let schedule = sched.with_continuation(Continuation::Repeat);
            return Ok(ObliviousBuild {
                schedule,
                horizon,
                max_rounds,
                segments,
                designated,
            });
        }
        if horizon >= HORIZON_LIMIT {
            return Err(GreedyError::NoHorizon(horizon));
        }
        horizon *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::mass_at;

    fn inst(p: Vec<Vec<f64>>) -> ProblemInstance {
        ProblemInstance::independent(p).unwrap()
    }

    /// Exhaustive optimum of the single-step capped mass.
    fn brute_force(inst: &ProblemInstance) -> f64 {
        let choices = inst.n + 1;
        let total = choices.pow(inst.m as u32);
        (0..total)
            .map(|mut code| {
                let mut a = Assignment::idle(inst.m);
                for i in 0..inst.m {
                    let c = code % choices;
                    code /= choices;
                    a.machines[i] = (c > 0).then(|| c - 1);
                }
                a.total_mass(inst)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn msm_examples() {
        let i1 = inst(vec![vec![1.0]]);
        let a = msm(&i1, &[0]);
        assert_eq!(a.machines, vec![Some(0)]);
        assert_eq!(a.total_mass(&i1), 1.0);

        let i2 = inst(vec![vec![0.7], vec![0.6]]);
        let a = msm(&i2, &[0]);
        assert_eq!(a.machines, vec![Some(0), None]);
        assert!((a.total_mass(&i2) - 0.7).abs() < 1e-12);
        assert!((brute_force(&i2) - 1.0).abs() < 1e-12);

        let i3 = inst(vec![vec![0.5, 0.9]]);
        let a = msm(&i3, &[0, 1]);
        assert_eq!(a.machines, vec![Some(1)]);
        assert!((a.total_mass(&i3) - brute_force(&i3)).abs() < 1e-12);
    }

    #[test]
    fn msm_ext_floor_rule() {
        let i = inst(vec![vec![0.3]]);
        let ta = msm_ext(&i, &[0], 5).unwrap();
        assert_eq!(ta.x[0][0], 3);
        assert!((ta.mass(&i).raw[0] - 0.9).abs() < 1e-12);
        let ta = msm_ext(&i, &[0], 2).unwrap();
        assert_eq!(ta.x[0][0], 2);
        assert!((ta.mass(&i).raw[0] - 0.6).abs() < 1e-12);
        assert!(matches!(msm_ext(&i, &[0], 0), Err(GreedyError::ZeroHorizon)));
    }

    #[test]
    fn msm_ext_horizon_one_matches_msm() {
        let i = inst(vec![vec![0.7, 0.2, 0.4], vec![0.6, 0.9, 0.1]]);
        let a = msm(&i, &[0, 1, 2]);
        let ta = msm_ext(&i, &[0, 1, 2], 1).unwrap();
        for (m, row) in ta.x.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(x == 1, a.machines[m] == Some(j));
            }
        }
    }

    #[test]
    fn to_schedule_layout() {
        let ta = TimedAssignment {
            x: vec![vec![2, 1]],
            horizon: 3,
            remaining: vec![0],
        };
        let s = to_schedule(&ta).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.step(1).unwrap().job_of(0), Some(0));
        assert_eq!(s.step(2).unwrap().job_of(0), Some(0));
        assert_eq!(s.step(3).unwrap().job_of(0), Some(1));

        let idle = TimedAssignment {
            x: vec![vec![0, 0]; 2],
            horizon: 4,
            remaining: vec![4, 4],
        };
        let s = to_schedule(&idle).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.steps().all(Step::is_idle));

        let over = TimedAssignment {
            x: vec![vec![2, 2]],
            horizon: 3,
            remaining: vec![0],
        };
        assert!(matches!(
            to_schedule(&over),
            Err(GreedyError::CapacityViolation { .. })
        ));
    }

    #[test]
    fn to_schedule_preserves_mass() {
        let i = inst(vec![vec![0.3, 0.2], vec![0.25, 0.05]]);
        let ta = msm_ext(&i, &[0, 1], 7).unwrap();
        let s = to_schedule(&ta).unwrap();
        let a = mass_at(&s, &i, 7).unwrap();
        let b = ta.mass(&i);
        for j in 0..2 {
            assert!((a.raw[j] - b.raw[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn policy_cases() {
        let i = inst(vec![vec![0.7, 0.2], vec![0.6, 0.5]]);
        let pol = suu_i_policy(&i).unwrap();
        let all = JobSet::full(2);
        assert_eq!(pol.assign(&all), msm(&i, &[0, 1]).to_step());
        let mut single = JobSet::empty(2);
        single.insert(1);
        let step = pol.assign(&single);
        assert_eq!(step.pairs(), &[(0, 1), (1, 1)]);
        assert!(pol.assign(&JobSet::empty(2)).is_idle());

        let chains = ProblemInstance::new(
            2,
            1,
            vec![vec![0.5, 0.5]],
            crate::instance::PrecedenceDag::from_chains(&[vec![0, 1]]),
        )
        .unwrap();
        assert!(matches!(
            suu_i_policy(&chains),
            Err(GreedyError::UnsupportedConstraints(ConstraintKind::Chains))
        ));
    }

    #[test]
    fn obl_examples() {
        let cfg = OblConfig::default();
        let b = suu_i_obl(&inst(vec![vec![1.0]]), &cfg).unwrap();
        assert_eq!(b.schedule.len(), 1);
        assert_eq!(b.horizon, 1);

        let i = inst(vec![vec![0.01]]);
        let b = suu_i_obl(&i, &cfg).unwrap();
        assert_eq!(b.horizon, 2);
        assert_eq!(b.schedule.len(), 2);
        assert_eq!(b.segments.len(), 1);
        assert!(b.segment_mass(&i)[0] >= 1.0 / 96.0);
    }

    #[test]
    fn obl_round_budget() {
        let cfg = OblConfig::default();
        assert_eq!(cfg.max_rounds(1), 1);
        assert_eq!(cfg.max_rounds(2), 66);
        assert_eq!(cfg.max_rounds(5), 198);
    }
}
