//! Exact expected makespan by dynamic programming over unfinished sets.

use std::collections::{BTreeMap, HashMap};

use crate::instance::ProblemInstance;
use crate::schedule::{Continuation, ObliviousSchedule, StepRef};

use super::{check_strategy, AdaptivePolicy, SimError, Strategy};

/// Largest `n` accepted by [`exact_makespan`].
pub const N_EXACT: usize = 16;

/// Cap on `period · 2ⁿ` for periodic continuations.
const TABLE_BUDGET: usize = 1 << 26;

/// Probability below which a state counts as making no progress.
const STALL_TOL: f64 = 1e-15;

struct Model<'a> {
    inst: &'a ProblemInstance,
    pred_mask: Vec<u32>,
}

impl<'a> Model<'a> {
    fn new(inst: &'a ProblemInstance) -> Self {
        let pred_mask = inst
            .predecessors()
            .iter()
            .map(|ps| ps.iter().fold(0u32, |acc, &u| acc | 1 << u))
            .collect();
        Model { inst, pred_mask }
    }

    /// Success probabilities of the jobs that can complete in state `s`.
    fn active(&self, s: u32, step: Option<StepRef<'_>>) -> Vec<(usize, f64)> {
        let Some(step) = step else {
            return Vec::new();
        };
        let mut fail = vec![1.0f64; self.inst.n];
        let mut touched = 0u32;
        step.for_each(self.inst.m, |i, j| {
            if s >> j & 1 == 1 && self.pred_mask[j] & s == 0 {
                fail[j] *= 1.0 - self.inst.p(i, j);
                touched |= 1 << j;
            }
        });
        (0..self.inst.n)
            .filter(|&j| touched >> j & 1 == 1 && fail[j] < 1.0)
            .map(|j| (j, 1.0 - fail[j]))
            .collect()
    }

    /// Calls `f(next_state, probability)` for every non-empty set of
    /// completions, and returns the probability that nothing completes.
    fn transitions(&self, s: u32, active: &[(usize, f64)], mut f: impl FnMut(u32, f64)) -> f64 {
        let k = active.len();
        let mut stay = 1.0;
        for &(_, q) in active {
            stay *= 1.0 - q;
        }
        for c in 1u32..(1 << k) {
            let mut prob = 1.0;
            let mut next = s;
            for (b, &(j, q)) in active.iter().enumerate() {
                if c >> b & 1 == 1 {
                    prob *= q;
                    next &= !(1 << j);
                } else {
                    prob *= 1.0 - q;
                }
            }
            if prob > 0.0 {
                f(next, prob);
            }
        }
        stay
    }

    fn divergent(&self, s: u32) -> SimError {
        SimError::Divergent {
            state: (0..self.inst.n).filter(|&j| s >> j & 1 == 1).map(|j| j + 1).collect(),
        }
    }
}

/// Exact expected makespan of an adaptive policy or oblivious schedule.
/// Requires `n ≤ N_EXACT`.
pub fn exact_makespan(strategy: Strategy<'_>, inst: &ProblemInstance) -> Result<f64, SimError> {
    if inst.n > N_EXACT {
        return Err(SimError::TooLarge {
            n: inst.n,
            limit: N_EXACT,
        });
    }
    check_strategy(strategy, inst)?;
    let model = Model::new(inst);
    let full = ((1u64 << inst.n) - 1) as u32;
    match strategy {
        Strategy::Adaptive(policy) => {
            let mut memo = HashMap::new();
            policy_value(&model, policy, full, &mut memo)
        }
        Strategy::Oblivious(sched) => oblivious_value(&model, sched, full),
    }
}

fn policy_value(
    model: &Model<'_>,
    policy: &dyn AdaptivePolicy,
    s: u32,
    memo: &mut HashMap<u32, f64>,
) -> Result<f64, SimError> {
    if s == 0 {
        return Ok(0.0);
    }
    if let Some(&v) = memo.get(&s) {
        return Ok(v);
    }
    let set = super::JobSet::from_mask(model.inst.n, s as u64);
    let step = policy.assign(&set);
    let active = model.active(s, Some(StepRef::Finite(&step)));
    let mut nexts = Vec::new();
    let stay = model.transitions(s, &active, |t, p| nexts.push((t, p)));
    if 1.0 - stay < STALL_TOL {
        return Err(model.divergent(s));
    }
    let mut acc = 1.0;
    for (t, p) in nexts {
        acc += p * policy_value(model, policy, t, memo)?;
    }
    let v = acc / (1.0 - stay);
    memo.insert(s, v);
    Ok(v)
}

/// Expected remaining steps from each phase of a periodic continuation.
struct Periodic<'a, 'm> {
    model: &'m Model<'a>,
    period: usize,
    step_at: Box<dyn Fn(usize) -> Option<StepRef<'a>> + 'm>,
    memo: HashMap<u32, Vec<f64>>,
}

impl Periodic<'_, '_> {
    /// `E(s, k)` for every phase `k`, where phase `k` plays step
    /// `step_at(k)` next.
    fn values(&mut self, s: u32) -> Result<Vec<f64>, SimError> {
        if s == 0 {
            return Ok(vec![0.0; self.period]);
        }
        if let Some(v) = self.memo.get(&s) {
            return Ok(v.clone());
        }
        let p = self.period;
        // E(s,k) = a_k + b_k E(s,k+1)
        let mut a = vec![0.0; p];
        let mut b = vec![0.0; p];
        for k in 0..p {
            let step = (self.step_at)(k);
            let active = self.model.active(s, step);
            let mut nexts = Vec::new();
            b[k] = self.model.transitions(s, &active, |t, q| nexts.push((t, q)));
            let mut acc = 1.0;
            for (t, q) in nexts {
                acc += q * self.values(t)?[(k + 1) % p];
            }
            a[k] = acc;
        }
        let cycle: f64 = b.iter().product();
        if 1.0 - cycle < STALL_TOL {
            return Err(self.model.divergent(s));
        }
        let mut e = vec![0.0; p];
        // E(s,0) = Σ_k a_k Π_{l<k} b_l / (1 - Π b)
        let mut prefix = 1.0;
        let mut sum = 0.0;
        for k in 0..p {
            sum += a[k] * prefix;
            prefix *= b[k];
        }
        e[0] = sum / (1.0 - cycle);
        for k in (1..p).rev() {
            let next = e[(k + 1) % p];
            e[k] = a[k] + b[k] * next;
        }
        self.memo.insert(s, e.clone());
        Ok(e)
    }
}

fn oblivious_value(model: &Model<'_>, sched: &ObliviousSchedule, full: u32) -> Result<f64, SimError> {
    let mut dist: BTreeMap<u32, f64> = BTreeMap::new();
    dist.insert(full, 1.0);
    let mut expected = 0.0;
    let mut cursor = sched.cursor();
    for _ in 0..sched.len() {
        let step = cursor.next_step();
        let mut next: BTreeMap<u32, f64> = BTreeMap::new();
        for (&s, &ps) in &dist {
            if s == 0 {
                *next.entry(0).or_default() += ps;
                continue;
            }
            expected += ps;
            let active = model.active(s, step);
            let stay = model.transitions(s, &active, |t, q| {
                *next.entry(t).or_default() += ps * q;
            });
            if stay > 0.0 {
                *next.entry(s).or_default() += ps * stay;
            }
        }
        dist = next;
    }
    let pending: Vec<(u32, f64)> = dist.into_iter().filter(|&(s, p)| s != 0 && p > 0.0).collect();
    if pending.is_empty() {
        return Ok(expected);
    }
    let n = model.inst.n;
    let period = match &sched.continuation {
        Continuation::Idle => return Err(model.divergent(pending[0].0)),
        Continuation::Repeat if sched.is_empty() => return Err(model.divergent(pending[0].0)),
        Continuation::Repeat => sched.len(),
        Continuation::Tail(rule) => rule.order.len().max(1),
    };
    let needed = period.saturating_mul(1 << n);
    if needed > TABLE_BUDGET {
        return Err(SimError::MemoryBudget {
            needed,
            budget: TABLE_BUDGET,
        });
    }
    let t0 = sched.len();
    let mut periodic = Periodic {
        model,
        period,
        step_at: Box::new(move |k| sched.at(t0 + k + 1)),
        memo: HashMap::new(),
    };
    for (s, ps) in pending {
        expected += ps * periodic.values(s)?[0];
    }
    Ok(expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{Step, TailRule};
    use crate::sim::JobSet;

    fn solo(p: f64) -> ProblemInstance {
        ProblemInstance::independent(vec![vec![p]]).unwrap()
    }

    #[test]
    fn geometric_job() {
        let s = ObliviousSchedule::from_steps([Step::from_pairs(vec![(0, 0)]).unwrap()])
            .with_continuation(Continuation::Repeat);
        let e = exact_makespan(Strategy::Oblivious(&s), &solo(0.25)).unwrap();
        assert!((e - 4.0).abs() < 1e-12);
    }

    #[test]
    fn idle_tail_diverges() {
        let s = ObliviousSchedule::from_steps([Step::from_pairs(vec![(0, 0)]).unwrap()]);
        let err = exact_makespan(Strategy::Oblivious(&s), &solo(0.5)).unwrap_err();
        assert!(matches!(err, SimError::Divergent { ref state } if state == &[1]));
        // a certain job finishes inside the prefix
        assert_eq!(exact_makespan(Strategy::Oblivious(&s), &solo(1.0)).unwrap(), 1.0);
    }

    #[test]
    fn alternating_period() {
        // job worked on every other step: success 1/2 at odd steps
        let s = ObliviousSchedule::from_steps([Step::from_pairs(vec![(0, 0)]).unwrap(), Step::idle()])
            .with_continuation(Continuation::Repeat);
        let e = exact_makespan(Strategy::Oblivious(&s), &solo(0.5)).unwrap();
        // steps 1,3,5,…: E = Σ_k (2k-1) 2^-k = 3
        assert!((e - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tail_rule_two_jobs() {
        let inst = ProblemInstance::independent(vec![vec![1.0, 1.0]]).unwrap();
        let s = ObliviousSchedule::empty().with_continuation(Continuation::Tail(TailRule { order: vec![0, 1] }));
        assert_eq!(exact_makespan(Strategy::Oblivious(&s), &inst).unwrap(), 2.0);
    }

    struct Greedy;
    impl AdaptivePolicy for Greedy {
        fn assign(&self, s: &JobSet) -> Step {
            let j = s.iter().next().unwrap();
            Step::from_pairs(vec![(0, j)]).unwrap()
        }
    }

    #[test]
    fn policy_sequential() {
        let inst = ProblemInstance::independent(vec![vec![0.5, 0.25]]).unwrap();
        let e = exact_makespan(Strategy::Adaptive(&Greedy), &inst).unwrap();
        assert!((e - 6.0).abs() < 1e-12);
    }

    #[test]
    fn too_large() {
        let inst = ProblemInstance::independent(vec![vec![0.5; 17]]).unwrap();
        assert!(matches!(
            exact_makespan(Strategy::Adaptive(&Greedy), &inst),
            Err(SimError::TooLarge { .. })
        ));
    }
}
