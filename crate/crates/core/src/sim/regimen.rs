//! Brute-force optimal regimen for tiny instances.

use crate::instance::ProblemInstance;
use crate::schedule::Step;

use super::{AdaptivePolicy, JobSet, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegimenCaps {
    pub n: usize,
    pub m: usize,
}

impl Default for RegimenCaps {
    fn default() -> Self {
        RegimenCaps { n: 4, m: 3 }
    }
}

/// Optimal assignment and expected remaining makespan for every
/// unfinished set, indexed by bit mask.
#[derive(Clone, Debug)]
pub struct RegimenTable {
    pub n: usize,
    pub m: usize,
    pub assignments: Vec<Step>,
    pub values: Vec<f64>,
}

impl RegimenTable {
    /// Optimal expected makespan from the full job set.
    pub fn t_opt(&self) -> f64 {
        self.values[(1 << self.n) - 1]
    }
}

impl AdaptivePolicy for RegimenTable {
    fn assign(&self, unfinished: &JobSet) -> Step {
        self.assignments[unfinished.mask() as usize].clone()
    }
}

/// Exhaustive dynamic program over `(|eligible|+1)^m` assignments per
/// state, states in increasing cardinality.
pub fn optimal_regimen(inst: &ProblemInstance, caps: RegimenCaps) -> Result<RegimenTable, SimError> {
    let (n, m) = (inst.n, inst.m);
    if n > caps.n || m > caps.m || n > 16 {
        return Err(SimError::CapsExceeded {
            n,
            m,
            max_n: caps.n,
            max_m: caps.m,
        });
    }
    let pred_mask: Vec<usize> = inst
        .predecessors()
        .iter()
        .map(|ps| ps.iter().fold(0, |acc, &u| acc | 1 << u))
        .collect();
    let states = 1usize << n;
    let mut values = vec![0.0; states];
    let mut assignments = vec![Step::idle(); states];
    let mut order: Vec<usize> = (1..states).collect();
    order.sort_by_key(|s| (s.count_ones(), *s));
    for s in order {
        let eligible: Vec<usize> = (0..n)
            .filter(|&j| s >> j & 1 == 1 && pred_mask[j] & s == 0)
            .collect();
        let choices = eligible.len() + 1;
        let mut best: Option<(f64, Vec<Option<usize>>)> = None;
        let mut code = vec![0usize; m];
        loop {
            // code[i] == 0 is idle, otherwise eligible[code[i] - 1]
            let f: Vec<Option<usize>> = code.iter().map(|&c| c.checked_sub(1).map(|k| eligible[k])).collect();
            if let Some(v) = evaluate(inst, s, &f, &values) {
                if best.as_ref().is_none_or(|(b, _)| v < *b - 1e-15) {
                    best = Some((v, f));
                }
            }
            let mut i = 0;
            while i < m {
                code[i] += 1;
                if code[i] < choices {
                    break;
                }
                code[i] = 0;
                i += 1;
            }
            if i == m {
                break;
            }
        }
        let Some((v, f)) = best else {
            return Err(SimError::Divergent {
                state: (0..n).filter(|&j| s >> j & 1 == 1).map(|j| j + 1).collect(),
            });
        };
        values[s] = v;
        assignments[s] = Step::from_dense(&f);
    }
    Ok(RegimenTable {
        n,
        m,
        assignments,
        values,
    })
}

/// Expected remaining steps from `s` when `f` is played until the state
/// changes; `None` if `f` never makes progress.
fn evaluate(inst: &ProblemInstance, s: usize, f: &[Option<usize>], values: &[f64]) -> Option<f64> {
    let mut fail = vec![1.0f64; inst.n];
    for (i, j) in f.iter().enumerate() {
        if let Some(j) = *j {
            fail[j] *= 1.0 - inst.p(i, j);
        }
    }
    let active: Vec<(usize, f64)> = (0..inst.n)
        .filter(|&j| fail[j] < 1.0)
        .map(|j| (j, 1.0 - fail[j]))
        .collect();
    let stay: f64 = active.iter().map(|&(_, q)| 1.0 - q).product();
    if stay >= 1.0 {
        return None;
    }
    let mut acc = 1.0;
    for c in 1usize..(1 << active.len()) {
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
        acc += prob * values[next];
    }
    Some(acc / (1.0 - stay))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{exact_makespan, Strategy};

    #[test]
    fn both_machines_on_one_job() {
        let inst = ProblemInstance::independent(vec![vec![0.5], vec![0.9]]).unwrap();
        let r = optimal_regimen(&inst, RegimenCaps::default()).unwrap();
        assert!((r.t_opt() - 1.0 / 0.95).abs() < 1e-12);
        assert_eq!(r.assignments[1].pairs(), &[(0, 0), (1, 0)]);
    }

    #[test]
    fn small_cases() {
        let one = ProblemInstance::independent(vec![vec![0.5]]).unwrap();
        assert!((optimal_regimen(&one, RegimenCaps::default()).unwrap().t_opt() - 2.0).abs() < 1e-12);
        let two = ProblemInstance::independent(vec![vec![1.0, 1.0]]).unwrap();
        assert!((optimal_regimen(&two, RegimenCaps::default()).unwrap().t_opt() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn table_matches_exact_evaluation() {
        let inst = ProblemInstance::independent(vec![vec![0.3, 0.6, 0.2], vec![0.5, 0.1, 0.7]]).unwrap();
        let r = optimal_regimen(&inst, RegimenCaps::default()).unwrap();
        let e = exact_makespan(Strategy::Adaptive(&r), &inst).unwrap();
        assert!((e - r.t_opt()).abs() < 1e-9);
    }

    #[test]
    fn caps_enforced() {
        let inst = ProblemInstance::independent(vec![vec![0.5; 5]]).unwrap();
        assert!(matches!(
            optimal_regimen(&inst, RegimenCaps::default()),
            Err(SimError::CapsExceeded { .. })
        ));
    }
}
