//! Oblivious schedules, pseudo-schedules and mass accounting.
//!
//! Steps are numbered from 1. An [`ObliviousSchedule`] stores its finite
//! prefix run-length encoded and sparse (idle machines are omitted), so long
//! replicated schedules stay small. What happens after the prefix is given by
//! its [`Continuation`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::ProblemInstance;
use crate::util::MASS_TOL;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("step {t} out of range 1..={len}")]
    StepOutOfRange { t: usize, len: usize },
    #[error("machine {machine} assigned twice in one step")]
    DuplicateMachine { machine: usize },
    #[error("schedule does not match instance: {0}")]
    Mismatch(String),
    #[error("malformed schedule file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One step of an oblivious schedule: `(machine, job)` pairs sorted by
/// machine. Machines not listed are idle.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Step(Vec<(usize, usize)>);

impl Step {
    pub fn idle() -> Self {
        Step(Vec::new())
    }

    pub fn from_pairs(mut pairs: Vec<(usize, usize)>) -> Result<Self, ScheduleError> {
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ScheduleError::DuplicateMachine { machine: w[0].0 });
            }
        }
        Ok(Step(pairs))
    }

    /// From a dense machine → job map.
    pub fn from_dense(assign: &[Option<usize>]) -> Self {
        Step(
            assign
                .iter()
                .enumerate()
                .filter_map(|(i, j)| j.map(|j| (i, j)))
                .collect(),
        )
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn is_idle(&self) -> bool {
        self.0.is_empty()
    }

    pub fn job_of(&self, machine: usize) -> Option<usize> {
        self.0
            .binary_search_by_key(&machine, |&(i, _)| i)
            .ok()
            .map(|k| self.0[k].1)
    }
}

/// `len` consecutive copies of `step`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub step: Step,
    pub len: usize,
}

/// Round-robin tail: tail step `k` (1-based) puts every machine on
/// `order[(k - 1) mod n]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailRule {
    pub order: Vec<usize>,
}

impl TailRule {
    pub fn job_at(&self, k: usize) -> usize {
        self.order[(k - 1) % self.order.len()]
    }
}

/// Behaviour after the finite prefix.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Continuation {
    /// All machines idle forever.
    #[default]
    Idle,
    /// The prefix repeats with period `T`.
    Repeat,
    Tail(TailRule),
}

/// Assignment of one step, borrowed from a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepRef<'a> {
    Finite(&'a Step),
    /// Every machine on this job.
    All(usize),
}

impl StepRef<'_> {
    pub fn job_of(&self, machine: usize) -> Option<usize> {
        match self {
            StepRef::Finite(s) => s.job_of(machine),
            StepRef::All(j) => Some(*j),
        }
    }

    /// Calls `f(machine, job)` for each busy machine among `m`.
    pub fn for_each(&self, m: usize, mut f: impl FnMut(usize, usize)) {
        match self {
            StepRef::Finite(s) => s.pairs().iter().for_each(|&(i, j)| f(i, j)),
            StepRef::All(j) => (0..m).for_each(|i| f(i, *j)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObliviousSchedule {
    runs: Vec<Run>,
    /// `ends[k]` = last step covered by `runs[k]`.
    ends: Vec<usize>,
    pub continuation: Continuation,
}

impl ObliviousSchedule {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_steps(steps: impl IntoIterator<Item = Step>) -> Self {
        let mut s = Self::empty();
        for step in steps {
            s.push_run(step, 1);
        }
        s
    }

    pub fn from_runs(runs: impl IntoIterator<Item = Run>) -> Self {
        let mut s = Self::empty();
        for r in runs {
            s.push_run(r.step, r.len);
        }
        s
    }

    /// All-idle prefix of length `len`.
    pub fn idle(len: usize) -> Self {
        Self::from_runs([Run {
            step: Step::idle(),
            len,
        }])
    }

    pub fn with_continuation(mut self, c: Continuation) -> Self {
        self.continuation = c;
        self
    }

    /// Appends `len` copies of `step`, merging with the last run if equal.
    pub fn push_run(&mut self, step: Step, len: usize) {
        if len == 0 {
            return;
        }
        let end = self.len() + len;
        match self.runs.last_mut() {
            Some(last) if last.step == step => {
                last.len += len;
                *self.ends.last_mut().expect("ends tracks runs") = end;
            }
            _ => {
                self.runs.push(Run { step, len });
                self.ends.push(end);
            }
        }
    }

    /// Length `T` of the finite prefix.
    pub fn len(&self) -> usize {
        self.ends.last().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    /// Step `t` of the finite prefix.
    pub fn step(&self, t: usize) -> Result<&Step, ScheduleError> {
        if t == 0 || t > self.len() {
            return Err(ScheduleError::StepOutOfRange { t, len: self.len() });
        }
        let k = self.ends.partition_point(|&e| e < t);
        Ok(&self.runs[k].step)
    }

    /// Assignment at any step `t ≥ 1`, following the continuation past `T`.
    /// `None` means all machines idle.
    pub fn at(&self, t: usize) -> Option<StepRef<'_>> {
        let len = self.len();
        if t >= 1 && t <= len {
            return self.step(t).ok().map(StepRef::Finite);
        }
        match &self.continuation {
            Continuation::Idle => None,
            Continuation::Repeat if len > 0 => {
                self.step((t - 1) % len + 1).ok().map(StepRef::Finite)
            }
            Continuation::Repeat => None,
            Continuation::Tail(rule) if !rule.order.is_empty() => {
                Some(StepRef::All(rule.job_at(t - len)))
            }
            Continuation::Tail(_) => None,
        }
    }

    /// Sequential reader over all steps, finite prefix then continuation.
    pub fn cursor(&self) -> Cursor<'_> {
        Cursor {
            sched: self,
            run: 0,
            offset: 0,
            t: 0,
        }
    }

    /// Materialized steps of the finite prefix.
    pub fn steps(&self) -> impl Iterator<Item = &Step> + '_ {
        self.runs
            .iter()
            .flat_map(|r| std::iter::repeat_n(&r.step, r.len))
    }

    /// Each step repeated `sigma` times in place.
    pub fn replicate(&self, sigma: usize) -> ObliviousSchedule {
        assert!(sigma >= 1, "replication factor must be positive");
        let mut out = ObliviousSchedule::from_runs(self.runs.iter().map(|r| Run {
            step: r.step.clone(),
            len: r.len * sigma,
        }));
        out.continuation = self.continuation.clone();
        out
    }

    /// Number of steps in which machine `machine` works on `job`.
    pub fn count(&self, machine: usize, job: usize) -> usize {
        self.runs
            .iter()
            .filter(|r| r.step.job_of(machine) == Some(job))
            .map(|r| r.len)
            .sum()
    }

    /// Checks indices against `inst`.
    pub fn validate_for(&self, inst: &ProblemInstance) -> Result<(), ScheduleError> {
        for r in &self.runs {
            for &(i, j) in r.step.pairs() {
                if i >= inst.m || j >= inst.n {
                    return Err(ScheduleError::Mismatch(format!(
                        "assignment (machine {}, job {}) outside {}x{} instance",
                        i + 1,
                        j + 1,
                        inst.m,
                        inst.n
                    )));
                }
            }
        }
        if let Continuation::Tail(rule) = &self.continuation {
            let mut seen = vec![false; inst.n];
            for &j in &rule.order {
                if j >= inst.n || std::mem::replace(&mut seen[j], true) {
                    return Err(ScheduleError::Mismatch(
                        "tail order is not a permutation of the jobs".into(),
                    ));
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(ScheduleError::Mismatch(
                    "tail order is not a permutation of the jobs".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ScheduleFile::from(self)).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScheduleError> {
        let file: ScheduleFile = serde_json::from_str(text)?;
        file.into_schedule()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScheduleError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScheduleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScheduleError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ScheduleError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

pub struct Cursor<'a> {
    sched: &'a ObliviousSchedule,
    run: usize,
    offset: usize,
    t: usize,
}

impl<'a> Cursor<'a> {
    /// Assignment of the next step; `None` when all machines idle.
    pub fn next_step(&mut self) -> Option<StepRef<'a>> {
        self.t += 1;
        let runs = &self.sched.runs;
        if self.run == runs.len() && self.sched.continuation == Continuation::Repeat {
            self.run = 0;
        }
        if self.run < runs.len() {
            let r = &runs[self.run];
            self.offset += 1;
            if self.offset == r.len {
                self.run += 1;
                self.offset = 0;
            }
            return Some(StepRef::Finite(&r.step));
        }
        self.sched.at(self.t)
    }

    /// True once the finite prefix is exhausted and the rest is idle.
    pub fn idle_forever(&self) -> bool {
        self.run >= self.sched.runs.len()
            && matches!(
                (&self.sched.continuation, self.sched.runs.is_empty()),
                (Continuation::Idle, _) | (Continuation::Repeat, true)
            )
    }
}

/// Per-job accumulated mass: `raw` is the plain sum of probabilities,
/// `capped` is `min(raw, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MassLedger {
    pub raw: Vec<f64>,
    pub capped: Vec<f64>,
}

impl MassLedger {
    pub fn from_raw(raw: Vec<f64>) -> Self {
        let capped = raw.iter().map(|&x| x.min(1.0)).collect();
        MassLedger { raw, capped }
    }

    pub fn min_capped(&self) -> f64 {
        self.capped.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Raw mass contributed by steps `from..=to` of the finite prefix.
pub fn raw_mass_between(
    sched: &ObliviousSchedule,
    inst: &ProblemInstance,
    from: usize,
    to: usize,
) -> Vec<f64> {
    let mut raw = vec![0.0; inst.n];
    let mut start = 1;
    for r in sched.runs() {
        let end = start + r.len - 1;
        let lo = start.max(from);
        let hi = end.min(to);
        if lo <= hi {
            let k = (hi - lo + 1) as f64;
            for &(i, j) in r.step.pairs() {
                raw[j] += k * inst.p(i, j);
            }
        }
        start = end + 1;
        if start > to {
            break;
        }
    }
    raw
}

/// Mass of every job at the end of step `t`, `1 ≤ t ≤ T`.
pub fn mass_at(
    sched: &ObliviousSchedule,
    inst: &ProblemInstance,
    t: usize,
) -> Result<MassLedger, ScheduleError> {
    if t == 0 || t > sched.len() {
        return Err(ScheduleError::StepOutOfRange { t, len: sched.len() });
    }
    Ok(MassLedger::from_raw(raw_mass_between(sched, inst, 1, t)))
}

/// Mass at the end of the finite prefix (all zero for an empty prefix).
pub fn final_mass(sched: &ObliviousSchedule, inst: &ProblemInstance) -> MassLedger {
    MassLedger::from_raw(raw_mass_between(sched, inst, 1, sched.len()))
}

/// Relaxed schedule in which a machine may serve several jobs per step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoSchedule {
    pub m: usize,
    /// `steps[t - 1]`: `(machine, job)` pairs sorted, duplicates allowed
    /// only across distinct jobs.
    steps: Vec<Vec<(usize, usize)>>,
    loads: Vec<usize>,
}

impl PseudoSchedule {
    pub fn new(m: usize, len: usize) -> Self {
        PseudoSchedule {
            m,
            steps: vec![Vec::new(); len],
            loads: vec![0; m],
        }
    }

    /// Adds `machine → job` at step `t ≥ 1`, growing the schedule if needed.
    pub fn add(&mut self, t: usize, machine: usize, job: usize) {
        assert!(t >= 1, "steps start at 1");
        if t > self.steps.len() {
            self.steps.resize(t, Vec::new());
        }
        let step = &mut self.steps[t - 1];
        if let Err(pos) = step.binary_search(&(machine, job)) {
            step.insert(pos, (machine, job));
            self.loads[machine] += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Pairs of step `t ≥ 1`.
    pub fn step(&self, t: usize) -> &[(usize, usize)] {
        &self.steps[t - 1]
    }

    pub fn steps(&self) -> &[Vec<(usize, usize)>] {
        &self.steps
    }

    /// Cached per-machine load `Σ_t |f_t(i)|`.
    pub fn loads(&self) -> &[usize] {
        &self.loads
    }

    pub fn max_load(&self) -> usize {
        self.loads.iter().copied().max().unwrap_or(0)
    }

    pub fn recompute_loads(&self) -> Vec<usize> {
        let mut loads = vec![0; self.m];
        for s in &self.steps {
            for &(i, _) in s {
                loads[i] += 1;
            }
        }
        loads
    }

    /// Drops trailing empty steps.
    pub fn trim(&mut self) {
        while self.steps.last().is_some_and(Vec::is_empty) {
            self.steps.pop();
        }
    }

    /// Mass counting every assignment.
    pub fn mass(&self, inst: &ProblemInstance) -> MassLedger {
        let mut raw = vec![0.0; inst.n];
        for s in &self.steps {
            for &(i, j) in s {
                raw[j] += inst.p(i, j);
            }
        }
        MassLedger::from_raw(raw)
    }

    pub fn precedence_mass_order(&self, inst: &ProblemInstance, threshold: f64) -> bool {
        mass_order_over(self.steps.iter().map(|s| (1, s.as_slice())), inst, threshold)
    }
}

/// Largest number of jobs any machine serves in a single step.
pub fn check_feasible(ps: &PseudoSchedule) -> usize {
    let mut best = 0;
    for s in ps.steps() {
        let mut k = 0;
        while k < s.len() {
            let mut e = k;
            while e < s.len() && s[e].0 == s[k].0 {
                e += 1;
            }
            best = best.max(e - k);
            k = e;
        }
    }
    best
}

/// For every edge `a ≺ b`: no machine touches `b` in the finite prefix
/// until some step strictly after the one where `a`'s capped mass first
/// reaches `threshold`.
pub fn check_precedence_mass_order(
    sched: &ObliviousSchedule,
    inst: &ProblemInstance,
    threshold: f64,
) -> bool {
    mass_order_over(
        sched.runs().iter().map(|r| (r.len, r.step.pairs())),
        inst,
        threshold,
    )
}

fn mass_order_over<'a>(
    runs: impl Iterator<Item = (usize, &'a [(usize, usize)])>,
    inst: &ProblemInstance,
    threshold: f64,
) -> bool {
    if inst.constraints.edges.is_empty() {
        return true;
    }
    let n = inst.n;
    let mut acc = vec![0.0; n];
    let mut reached: Vec<Option<usize>> = vec![None; n];
    let mut first_touch: Vec<Option<usize>> = vec![None; n];
    let mut rate = vec![0.0; n];
    let mut start = 1usize;
    for (len, pairs) in runs {
        for &(_, j) in pairs {
            rate[j] = 0.0;
            first_touch[j].get_or_insert(start);
        }
        for &(i, j) in pairs {
            rate[j] += inst.p(i, j);
        }
        for &(_, j) in pairs {
            if reached[j].is_none() && rate[j] > 0.0 {
                let need = threshold - MASS_TOL - acc[j];
                // steps into this run needed to reach the threshold
                let k = if need <= 0.0 {
                    1
                } else {
                    (need / rate[j]).ceil().max(1.0) as usize
                };
                if k <= len {
                    reached[j] = Some(start + k - 1);
                }
            }
        }
        for &(_, j) in pairs {
            if rate[j] > 0.0 {
                acc[j] += rate[j] * len as f64;
                rate[j] = 0.0;
            }
        }
        start += len;
    }
    inst.constraints
        .edges
        .iter()
        .all(|&(a, b)| match (first_touch[b], reached[a]) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(tb), Some(ra)) => tb > ra,
        })
}

/// Steps of `a` followed by steps of `b`; the continuation is `b`'s.
pub fn concat(a: &ObliviousSchedule, b: &ObliviousSchedule) -> ObliviousSchedule {
    let mut out = ObliviousSchedule::from_runs(a.runs().iter().cloned());
    for r in b.runs() {
        out.push_run(r.step.clone(), r.len);
    }
    out.continuation = b.continuation.clone();
    out
}

#[derive(Serialize, Deserialize)]
struct PairFile {
    machine: usize,
    job: usize,
}

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    #[serde(rename = "T")]
    t: usize,
    steps: Vec<Vec<PairFile>>,
    tail: Option<TailRule>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    repeat: bool,
}

impl From<&ObliviousSchedule> for ScheduleFile {
    fn from(s: &ObliviousSchedule) -> Self {
        let steps = s
            .steps()
            .map(|st| {
                st.pairs()
                    .iter()
                    .map(|&(i, j)| PairFile {
                        machine: i + 1,
                        job: j + 1,
                    })
                    .collect()
            })
            .collect();
        let tail = match &s.continuation {
            Continuation::Tail(rule) => Some(TailRule {
                order: rule.order.iter().map(|j| j + 1).collect(),
            }),
            _ => None,
        };
        ScheduleFile {
            t: s.len(),
            steps,
            tail,
            repeat: s.continuation == Continuation::Repeat,
        }
    }
}

impl ScheduleFile {
    fn into_schedule(self) -> Result<ObliviousSchedule, ScheduleError> {
        if self.t != self.steps.len() {
            return Err(ScheduleError::Mismatch(format!(
                "T = {} but {} steps listed",
                self.t,
                self.steps.len()
            )));
        }
        let one_based = |x: usize, what: &str| {
            x.checked_sub(1)
                .ok_or_else(|| ScheduleError::Mismatch(format!("{what} ids start at 1")))
        };
        let mut out = ObliviousSchedule::empty();
        for st in self.steps {
            let pairs = st
                .into_iter()
                .map(|p| Ok((one_based(p.machine, "machine")?, one_based(p.job, "job")?)))
                .collect::<Result<Vec<_>, ScheduleError>>()?;
            out.push_run(Step::from_pairs(pairs)?, 1);
        }
        out.continuation = match (self.tail, self.repeat) {
            (Some(_), true) => {
                return Err(ScheduleError::Mismatch(
                    "tail and repeat are mutually exclusive".into(),
                ))
            }
            (Some(rule), false) => Continuation::Tail(TailRule {
                order: rule
                    .order
                    .into_iter()
                    .map(|j| one_based(j, "job"))
                    .collect::<Result<_, _>>()?,
            }),
            (None, true) => Continuation::Repeat,
            (None, false) => Continuation::Idle,
        };
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ConstraintKind, PrecedenceDag};

    fn single(p: f64) -> ProblemInstance {
        ProblemInstance::independent(vec![vec![p]]).unwrap()
    }

    fn chain2(p: f64) -> ProblemInstance {
        ProblemInstance::new(
            2,
            1,
            vec![vec![p, p]],
            PrecedenceDag::new(ConstraintKind::Chains, vec![(0, 1)]),
        )
        .unwrap()
    }

    fn on(pairs: &[(usize, usize)]) -> Step {
        Step::from_pairs(pairs.to_vec()).unwrap()
    }

    #[test]
    fn mass_of_repeated_assignment() {
        let inst = single(0.3);
        let s = ObliviousSchedule::from_steps(vec![on(&[(0, 0)]); 4]);
        assert!((mass_at(&s, &inst, 3).unwrap().capped[0] - 0.9).abs() < 1e-12);
        let m4 = mass_at(&s, &inst, 4).unwrap();
        assert!((m4.raw[0] - 1.2).abs() < 1e-12);
        assert_eq!(m4.capped[0], 1.0);
        assert!(matches!(
            mass_at(&s, &inst, 0),
            Err(ScheduleError::StepOutOfRange { .. })
        ));
        assert!(mass_at(&s, &inst, 5).is_err());
    }

    #[test]
    fn idle_step_has_no_mass() {
        let inst = single(0.3);
        let s = ObliviousSchedule::idle(1);
        assert_eq!(mass_at(&s, &inst, 1).unwrap().capped[0], 0.0);
    }

    #[test]
    fn mass_is_capped() {
        let inst = ProblemInstance::independent(vec![vec![0.7], vec![0.6]]).unwrap();
        let s = ObliviousSchedule::from_steps([on(&[(0, 0), (1, 0)])]);
        assert_eq!(mass_at(&s, &inst, 1).unwrap().capped[0], 1.0);
    }

    #[test]
    fn duplicate_machine_rejected() {
        assert!(matches!(
            Step::from_pairs(vec![(0, 0), (0, 1)]),
            Err(ScheduleError::DuplicateMachine { machine: 0 })
        ));
    }

    #[test]
    fn feasibility_count() {
        let mut ps = PseudoSchedule::new(2, 2);
        assert_eq!(check_feasible(&ps), 0);
        ps.add(1, 0, 0);
        ps.add(2, 1, 1);
        assert_eq!(check_feasible(&ps), 1);
        ps.add(1, 0, 1);
        assert_eq!(check_feasible(&ps), 2);
        assert_eq!(ps.loads(), &ps.recompute_loads()[..]);
        assert_eq!(ps.loads(), &[2, 1]);
    }

    #[test]
    fn precedence_mass_order_cases() {
        let inst = chain2(1.0);
        let ok = ObliviousSchedule::from_steps([on(&[(0, 0)]), on(&[(0, 1)])]);
        assert!(check_precedence_mass_order(&ok, &inst, 0.5));
        let two = ProblemInstance::new(
            2,
            2,
            vec![vec![1.0, 1.0]; 2],
            PrecedenceDag::new(ConstraintKind::Chains, vec![(0, 1)]),
        )
        .unwrap();
        let bad = ObliviousSchedule::from_steps([on(&[(0, 0), (1, 1)])]);
        assert!(!check_precedence_mass_order(&bad, &two, 0.5));
        let ind = ProblemInstance::independent(vec![vec![1.0, 1.0]; 2]).unwrap();
        assert!(check_precedence_mass_order(&bad, &ind, 0.5));
    }

    #[test]
    fn precedence_threshold_inside_run() {
        let inst = chain2(0.2);
        // job 0 reaches 0.6 at step 3, job 1 starts at step 4
        let mut s = ObliviousSchedule::empty();
        s.push_run(on(&[(0, 0)]), 3);
        s.push_run(on(&[(0, 1)]), 2);
        assert!(check_precedence_mass_order(&s, &inst, 0.5));
        let mut s = ObliviousSchedule::empty();
        s.push_run(on(&[(0, 0)]), 2);
        s.push_run(on(&[(0, 1)]), 2);
        assert!(!check_precedence_mass_order(&s, &inst, 0.5));
    }

    #[test]
    fn concat_lengths_and_identity() {
        let a = ObliviousSchedule::from_steps([on(&[(0, 0)]), Step::idle()]);
        let b = ObliviousSchedule::from_steps([on(&[(0, 1)]), on(&[(1, 0)]), Step::idle()]);
        let c = concat(&a, &b);
        assert_eq!(c.len(), 5);
        assert_eq!(c.step(4).unwrap(), b.step(2).unwrap());
        assert_eq!(concat(&ObliviousSchedule::empty(), &b), b);
        let d = ObliviousSchedule::from_steps([on(&[(1, 1)])]);
        assert_eq!(concat(&concat(&a, &b), &d), concat(&a, &concat(&b, &d)));
    }

    #[test]
    fn replicate_layout() {
        let a = ObliviousSchedule::from_steps([on(&[(0, 0)]), on(&[(0, 1)])]);
        assert_eq!(a.replicate(1), a);
        let r = a.replicate(3);
        assert_eq!(r.len(), 6);
        for t in 1..=6 {
            assert_eq!(r.step(t).unwrap(), a.step((t - 1) / 3 + 1).unwrap());
        }
    }

    #[test]
    fn continuation_and_cursor() {
        let base = ObliviousSchedule::from_steps([on(&[(0, 0)]), on(&[(0, 1)])]);
        let tail = base
            .clone()
            .with_continuation(Continuation::Tail(TailRule { order: vec![1, 0] }));
        assert_eq!(tail.at(3), Some(StepRef::All(1)));
        assert_eq!(tail.at(4), Some(StepRef::All(0)));
        assert_eq!(tail.at(5), Some(StepRef::All(1)));
        let rep = base.clone().with_continuation(Continuation::Repeat);
        let mut cur = rep.cursor();
        for t in 1..=7 {
            assert_eq!(cur.next_step(), rep.at(t), "t = {t}");
        }
        let mut cur = base.cursor();
        cur.next_step();
        cur.next_step();
        assert!(cur.idle_forever());
        assert_eq!(cur.next_step(), None);
    }

    #[test]
    fn json_round_trip() {
        let s = ObliviousSchedule::from_steps([on(&[(0, 0), (2, 1)]), Step::idle()])
            .with_continuation(Continuation::Tail(TailRule { order: vec![1, 0] }));
        let back = ObliviousSchedule::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let r = s.clone().with_continuation(Continuation::Repeat);
        assert_eq!(ObliviousSchedule::from_json(&r.to_json()).unwrap(), r);
        let text = r#"{"T": 1, "steps": [[{"machine": 1, "job": 1}]], "tail": null}"#;
        let s = ObliviousSchedule::from_json(text).unwrap();
        assert_eq!(s.step(1).unwrap().pairs(), &[(0, 0)]);
        assert!(ObliviousSchedule::from_json(r#"{"T": 2, "steps": [], "tail": null}"#).is_err());
    }

    #[test]
    fn run_merging() {
        let s = ObliviousSchedule::from_steps(vec![on(&[(0, 0)]); 5]);
        assert_eq!(s.runs().len(), 1);
        assert_eq!(s.len(), 5);
        assert_eq!(s.count(0, 0), 5);
    }
}
