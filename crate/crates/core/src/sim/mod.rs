//! Execution semantics: Monte Carlo estimation, exact expected makespans
//! and the brute-force optimal regimen for tiny instances.
//!
//! In every step each machine works on its assigned job only if that job is
//! unfinished and all of its predecessors are finished; otherwise it idles.
//! A job worked on by machine set `A` completes with probability
//! `1 - Π_{i∈A}(1 - p_ij)`, independently of everything else.

mod exact;
mod regimen;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::instance::ProblemInstance;
use crate::schedule::{ObliviousSchedule, ScheduleError, Step, StepRef};
use crate::util::stream_rng;

pub use exact::{exact_makespan, N_EXACT};
pub use regimen::{optimal_regimen, RegimenCaps, RegimenTable};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
    #[error("{n} jobs exceed the exact-evaluation limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("instance with {n} jobs and {m} machines exceeds caps n <= {max_n}, m <= {max_m}")]
    CapsExceeded {
        n: usize,
        m: usize,
        max_n: usize,
        max_m: usize,
    },
    #[error("expected makespan diverges: state {state:?} never makes progress")]
    Divergent { state: Vec<usize> },
    #[error("exact evaluation needs {needed} table entries, budget is {budget}")]
    MemoryBudget { needed: usize, budget: usize },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Set of job indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JobSet {
    n: usize,
    words: Vec<u64>,
}

impl JobSet {
    pub fn empty(n: usize) -> Self {
        JobSet {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for j in 0..n {
            s.insert(j);
        }
        s
    }

    /// From a bit mask; requires `n ≤ 64`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        assert!(n <= 64);
        let mut s = Self::empty(n);
        if n > 0 {
            s.words[0] = mask;
        }
        s
    }

    /// Bit mask of the set; requires `n ≤ 64`.
    pub fn mask(&self) -> u64 {
        assert!(self.n <= 64);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn contains(&self, j: usize) -> bool {
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, j: usize) {
        self.words[j / 64] |= 1 << (j % 64);
    }

    #[inline]
    pub fn remove(&mut self, j: usize) {
        self.words[j / 64] &= !(1 << (j % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|&j| self.contains(j))
    }
}

/// Adaptive schedule: the assignment depends on the unfinished set only.
pub trait AdaptivePolicy: Sync {
    fn assign(&self, unfinished: &JobSet) -> Step;
}

#[derive(Clone, Copy)]
pub enum Strategy<'a> {
    Oblivious(&'a ObliviousSchedule),
    Adaptive(&'a dyn AdaptivePolicy),
}

/// Monte Carlo estimate of the expected makespan.
#[derive(Clone, Debug, PartialEq)]
pub struct MakespanEstimate {
    pub mean: f64,
    /// Half-width of the 95% normal confidence interval.
    pub half_width: f64,
    pub std_dev: f64,
    pub trials: usize,
    pub seed: u64,
    pub cutoff: u64,
    /// Trials stopped at the cutoff; they count as `cutoff`.
    pub truncated: usize,
}

impl MakespanEstimate {
    pub fn covers(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.half_width + 1e-12
    }
}

/// Default cutoff `10⁴ · n` steps.
pub fn default_cutoff(n: usize) -> u64 {
    10_000 * n.max(1) as u64
}

/// Immutable per-instance data used by executions.
struct Exec<'a> {
    inst: &'a ProblemInstance,
    preds: Vec<Vec<usize>>,
}

impl<'a> Exec<'a> {
    fn new(inst: &'a ProblemInstance) -> Self {
        Exec {
            inst,
            preds: inst.predecessors(),
        }
    }

    #[inline]
    fn eligible(&self, s: &JobSet, j: usize) -> bool {
        s.contains(j) && self.preds[j].iter().all(|&u| !s.contains(u))
    }

    /// Applies one step. `fail[j]` accumulates `Π(1 - p)` for active jobs,
    /// `mass[j]` their raw mass. Returns the jobs that complete.
    fn step(
        &self,
        s: &JobSet,
        assignment: Option<StepRef<'_>>,
        rng: &mut ChaCha8Rng,
        fail: &mut [f64],
        active: &mut Vec<usize>,
        mass: Option<&mut [f64]>,
    ) -> Vec<usize> {
        active.clear();
        let Some(a) = assignment else {
            return Vec::new();
        };
        a.for_each(self.inst.m, |i, j| {
            if self.eligible(s, j) {
                if fail[j] == 1.0 && !active.contains(&j) {
                    active.push(j);
                }
                fail[j] *= 1.0 - self.inst.p(i, j);
            }
        });
        if let Some(mass) = mass {
            a.for_each(self.inst.m, |i, j| {
                if self.eligible(s, j) {
                    mass[j] += self.inst.p(i, j);
                }
            });
        }
        let mut done = Vec::new();
        for &j in active.iter() {
            let q = 1.0 - fail[j];
            if rng.gen::<f64>() < q {
                done.push(j);
            }
            fail[j] = 1.0;
        }
        done
    }
}

/// Runs one execution; returns `(makespan, truncated)`.
fn run_trial(
    exec: &Exec<'_>,
    strategy: Strategy<'_>,
    rng: &mut ChaCha8Rng,
    cutoff: u64,
) -> (u64, bool) {
    let n = exec.inst.n;
    let mut s = JobSet::full(n);
    let mut left = n;
    let mut fail = vec![1.0; n];
    let mut active = Vec::new();
    let mut cursor = match strategy {
        Strategy::Oblivious(sched) => Some(sched.cursor()),
        Strategy::Adaptive(_) => None,
    };
    let mut t = 0u64;
    while left > 0 {
        if t >= cutoff {
            return (cutoff, true);
        }
        t += 1;
        let done = match (strategy, cursor.as_mut()) {
            (Strategy::Oblivious(_), Some(c)) => {
                if c.idle_forever() {
                    return (cutoff, true);
                }
                let a = c.next_step();
                exec.step(&s, a, rng, &mut fail, &mut active, None)
            }
            (Strategy::Adaptive(policy), _) => {
                let step = policy.assign(&s);
                exec.step(&s, Some(StepRef::Finite(&step)), rng, &mut fail, &mut active, None)
            }
            _ => unreachable!(),
        };
        for j in done {
            s.remove(j);
            left -= 1;
        }
    }
    (t, false)
}

fn check_strategy(strategy: Strategy<'_>, inst: &ProblemInstance) -> Result<(), SimError> {
    if let Strategy::Oblivious(s) = strategy {
        s.validate_for(inst)?;
    }
    Ok(())
}

/// Monte Carlo estimate of the expected makespan. Trial `k` draws from
/// stream `k` of `seed`, so results do not depend on thread scheduling.
pub fn simulate(
    strategy: Strategy<'_>,
    inst: &ProblemInstance,
    trials: usize,
    seed: u64,
    cutoff: u64,
) -> Result<MakespanEstimate, SimError> {
    if trials == 0 {
        return Err(SimError::ZeroTrials);
    }
    if cutoff == 0 {
        return Err(SimError::ZeroCutoff);
    }
    check_strategy(strategy, inst)?;
    let exec = Exec::new(inst);
    let results: Vec<(u64, bool)> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            run_trial(&exec, strategy, &mut rng, cutoff)
        })
        .collect();
    let truncated = results.iter().filter(|r| r.1).count();
    let mean = results.iter().map(|r| r.0 as f64).sum::<f64>() / trials as f64;
    let std_dev = if trials > 1 {
        let ss: f64 = results.iter().map(|r| (r.0 as f64 - mean).powi(2)).sum();
        (ss / (trials - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(MakespanEstimate {
        mean,
        half_width: 1.96 * std_dev / (trials as f64).sqrt(),
        std_dev,
        trials,
        seed,
        cutoff,
        truncated,
    })
}

/// Empirical frequency with a 95% normal interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Frequency {
    pub hits: usize,
    pub trials: usize,
}

impl Frequency {
    pub fn value(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }

    pub fn half_width(&self) -> f64 {
        let f = self.value();
        1.96 * (f * (1.0 - f) / self.trials as f64).sqrt()
    }

    pub fn lower(&self) -> f64 {
        self.value() - self.half_width()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassAccumulation {
    pub horizon: u64,
    pub threshold: f64,
    pub per_job: Vec<Frequency>,
}

/// Frequency, per job, of accumulating raw mass at least `threshold`
/// within `horizon` steps. Mass counts only steps in which the machine
/// actually works on the job.
pub fn mass_accumulation_test(
    strategy: Strategy<'_>,
    inst: &ProblemInstance,
    horizon: u64,
    threshold: f64,
    trials: usize,
    seed: u64,
) -> Result<MassAccumulation, SimError> {
    if trials == 0 {
        return Err(SimError::ZeroTrials);
    }
    check_strategy(strategy, inst)?;
    let exec = Exec::new(inst);
    let n = inst.n;
    let hits: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let mut s = JobSet::full(n);
            let mut fail = vec![1.0; n];
            let mut mass = vec![0.0; n];
            let mut active = Vec::new();
            let mut cursor = match strategy {
                Strategy::Oblivious(sched) => Some(sched.cursor()),
                Strategy::Adaptive(_) => None,
            };
            for _ in 0..horizon {
                if s.is_empty() {
                    break;
                }
                let done = match (strategy, cursor.as_mut()) {
                    (Strategy::Oblivious(_), Some(c)) => {
                        let a = c.next_step();
                        exec.step(&s, a, &mut rng, &mut fail, &mut active, Some(&mut mass))
                    }
                    (Strategy::Adaptive(policy), _) => {
                        let step = policy.assign(&s);
                        exec.step(
                            &s,
                            Some(StepRef::Finite(&step)),
                            &mut rng,
                            &mut fail,
                            &mut active,
                            Some(&mut mass),
                        )
                    }
                    _ => unreachable!(),
                };
                for j in done {
                    s.remove(j);
                }
            }
            mass.iter().map(|&x| x >= threshold - 1e-12).collect()
        })
        .collect();
    let per_job = (0..n)
        .map(|j| Frequency {
            hits: hits.iter().filter(|h| h[j]).count(),
            trials,
        })
        .collect();
    Ok(MassAccumulation {
        horizon,
        threshold,
        per_job,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Continuation;

    fn persistent(jobs: &[usize]) -> ObliviousSchedule {
        let pairs = jobs.iter().enumerate().map(|(i, &j)| (i, j)).collect();
        ObliviousSchedule::from_steps([Step::from_pairs(pairs).unwrap()])
            .with_continuation(Continuation::Repeat)
    }

    #[test]
    fn jobset_ops() {
        let mut s = JobSet::empty(70);
        s.insert(3);
        s.insert(65);
        assert!(s.contains(65) && !s.contains(64));
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![3, 65]);
        s.remove(3);
        s.remove(65);
        assert!(s.is_empty());
        assert_eq!(JobSet::from_mask(3, 0b101).iter().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(JobSet::full(3).mask(), 0b111);
    }

    #[test]
    fn certain_job_takes_one_step() {
        let inst = ProblemInstance::independent(vec![vec![1.0]]).unwrap();
        let s = persistent(&[0]);
        let est = simulate(Strategy::Oblivious(&s), &inst, 100, 1, 100).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.half_width, 0.0);
        assert_eq!(est.truncated, 0);
    }

    #[test]
    fn geometric_mean() {
        let inst = ProblemInstance::independent(vec![vec![0.5]]).unwrap();
        let s = persistent(&[0]);
        let est = simulate(Strategy::Oblivious(&s), &inst, 100_000, 7, 10_000).unwrap();
        assert!(est.covers(2.0), "{est:?}");
    }

    #[test]
    fn reproducible_and_validated() {
        let inst = ProblemInstance::independent(vec![vec![0.3, 0.4], vec![0.2, 0.6]]).unwrap();
        let s = persistent(&[0, 1]);
        let a = simulate(Strategy::Oblivious(&s), &inst, 500, 3, 1000).unwrap();
        let b = simulate(Strategy::Oblivious(&s), &inst, 500, 3, 1000).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            simulate(Strategy::Oblivious(&s), &inst, 0, 3, 1000),
            Err(SimError::ZeroTrials)
        ));
        let bad = persistent(&[0, 1, 2]);
        assert!(matches!(
            simulate(Strategy::Oblivious(&bad), &inst, 10, 3, 1000),
            Err(SimError::Schedule(_))
        ));
    }

    #[test]
    fn idle_schedule_truncates() {
        let inst = ProblemInstance::independent(vec![vec![0.5]]).unwrap();
        let s = ObliviousSchedule::idle(3);
        let est = simulate(Strategy::Oblivious(&s), &inst, 10, 3, 50).unwrap();
        assert_eq!(est.truncated, 10);
        assert_eq!(est.mean, 50.0);
    }

    #[test]
    fn certain_mass_accumulation() {
        let inst = ProblemInstance::independent(vec![vec![1.0]]).unwrap();
        let s = persistent(&[0]);
        let r = mass_accumulation_test(Strategy::Oblivious(&s), &inst, 2, 0.25, 50, 1).unwrap();
        assert_eq!(r.per_job[0].value(), 1.0);
    }
}
