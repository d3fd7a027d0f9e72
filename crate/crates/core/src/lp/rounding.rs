//! Rounding a fractional optimum to integers via bucketing and an integral
//! maximum flow.

use super::{FractionalSolution, Lp1Model, LpError};
use crate::maxflow::{max_flow, FlowNetwork};
use crate::util::{ceil_log2, MASS_TOL};

/// `t̂ ≤ BOUND_CONSTANT · ⌈log₂(8m)⌉ · max(T*, 1)` for every rounding.
pub const BOUND_CONSTANT: f64 = 36.0;

/// Which branch handled the solution as a whole.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundingCase {
    /// `T* ≥ n`: every value is rounded up.
    Ceiling,
    /// `T* < n`: per-job choice between ceiling and flow rounding.
    Flow,
}

/// How one job was rounded.
#[derive(Clone, Debug, PartialEq)]
pub enum JobRounding {
    /// Step counts rounded up.
    Ceiling,
    /// Step counts taken from the integral flow, in units of 1/32 step.
    Flow {
        /// Chosen bucket `b`: probabilities in `(2^-(b+1), 2^-b]`.
        bucket: u32,
        /// `Σ x_ij` over the chosen bucket.
        bucket_sum: f64,
        /// Integral demand `D_j = ⌊32 · bucket_sum⌋`.
        demand: u64,
        /// `Σ p_ij x_ij` discarded with light buckets.
        dropped_mass: f64,
    },
}

/// Integral solution before the final scaling, with the bounds it must meet.
#[derive(Clone, Debug, PartialEq)]
pub struct StageBounds {
    pub x: Vec<Vec<u64>>,
    pub d: Vec<u64>,
    /// Lower bound on every job's mass.
    pub mass_bound: f64,
    /// Upper bound on every machine's load.
    pub load_bound: f64,
    /// Upper bound on every chain's dilation.
    pub dilation_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralLpSolution {
    /// `x̂[i][j]`.
    pub x: Vec<Vec<u64>>,
    pub d: Vec<u64>,
    pub t: u64,
    /// Final multiplier applied to the stage solution.
    pub scale: u64,
    pub case: RoundingCase,
    pub jobs: Vec<JobRounding>,
    /// Bucket count `B = ⌈log₂(8m)⌉`.
    pub buckets: u32,
    /// Fractional optimum `T*`.
    pub t_star: f64,
    pub flow_value: u64,
    pub demand: u64,
    pub stage: StageBounds,
    pub p: Vec<Vec<f64>>,
    pub chains: Vec<Vec<usize>>,
}

fn mass_of(p: &[Vec<f64>], x: &[Vec<u64>], n: usize) -> Vec<f64> {
    let mut mass = vec![0.0; n];
    for (i, row) in x.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            mass[j] += p[i][j] * v as f64;
        }
    }
    mass
}

fn loads_of(x: &[Vec<u64>]) -> Vec<u64> {
    x.iter().map(|r| r.iter().sum()).collect()
}

fn dilations_of(chains: &[Vec<usize>], d: &[u64]) -> Vec<u64> {
    chains.iter().map(|c| c.iter().map(|&j| d[j]).sum()).collect()
}

impl IntegralLpSolution {
    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    pub fn mass(&self) -> Vec<f64> {
        mass_of(&self.p, &self.x, self.n())
    }

    pub fn loads(&self) -> Vec<u64> {
        loads_of(&self.x)
    }

    pub fn dilations(&self) -> Vec<u64> {
        dilations_of(&self.chains, &self.d)
    }

    /// `t̂ / max(T*, 1)`.
    pub fn realized_factor(&self) -> f64 {
        self.t as f64 / self.t_star.max(1.0)
    }

    /// Verifies mass ≥ 1/2, load ≤ t̂, dilation ≤ t̂, x̂ ≤ d̂ and the
    /// length bound.
    pub fn check(&self) -> Result<(), String> {
        for (j, &mass) in self.mass().iter().enumerate() {
            if mass < 0.5 - MASS_TOL {
                return Err(format!("job {} mass {mass} < 1/2", j + 1));
            }
        }
        for (i, &load) in self.loads().iter().enumerate() {
            if load > self.t {
                return Err(format!("machine {} load {load} > {}", i + 1, self.t));
            }
        }
        for (k, &dil) in self.dilations().iter().enumerate() {
            if dil > self.t {
                return Err(format!("chain {} dilation {dil} > {}", k + 1, self.t));
            }
        }
        for (i, row) in self.x.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if x > self.d[j] {
                    return Err(format!(
                        "x[{}][{}] = {x} exceeds d = {}",
                        i + 1,
                        j + 1,
                        self.d[j]
                    ));
                }
            }
        }
        let bound = BOUND_CONSTANT * self.buckets as f64 * self.t_star.max(1.0);
        if self.t as f64 > bound + 1e-9 {
            return Err(format!("t = {} exceeds bound {bound}", self.t));
        }
        Ok(())
    }

    /// Verifies the stage solution against its recorded bounds.
    pub fn check_stage(&self) -> Result<(), String> {
        let st = &self.stage;
        for (j, &mass) in mass_of(&self.p, &st.x, self.n()).iter().enumerate() {
            if mass < st.mass_bound - MASS_TOL {
                return Err(format!(
                    "stage mass of job {} is {mass} < {}",
                    j + 1,
                    st.mass_bound
                ));
            }
        }
        for (i, &load) in loads_of(&st.x).iter().enumerate() {
            if load as f64 > st.load_bound + 1e-9 {
                return Err(format!(
                    "stage load of machine {} is {load} > {}",
                    i + 1,
                    st.load_bound
                ));
            }
        }
        for (k, &dil) in dilations_of(&self.chains, &st.d).iter().enumerate() {
            if dil as f64 > st.dilation_bound + 1e-9 {
                return Err(format!(
                    "stage dilation of chain {} is {dil} > {}",
                    k + 1,
                    st.dilation_bound
                ));
            }
        }
        for row in &st.x {
            for (j, &x) in row.iter().enumerate() {
                if x > st.d[j] {
                    return Err(format!("stage x exceeds d for job {}", j + 1));
                }
            }
        }
        Ok(())
    }
}

/// `⌈v⌉`, treating values within 1e-9 above an integer as that integer.
fn ceil_tol(v: f64) -> u64 {
    (v - 1e-9).ceil().max(0.0) as u64
}

/// Bucket `k` with `p ∈ (2^-(k+1), 2^-k]`.
fn bucket_of(p: f64) -> u32 {
    let k = (-p.log2()).floor().max(0.0) as u32;
    // correct for log2 rounding at the boundaries
    if p > (-(k as f64)).exp2() {
        k.saturating_sub(1)
    } else if p <= (-(k as f64 + 1.0)).exp2() {
        k + 1
    } else {
        k
    }
}

/// Rounds an optimal fractional solution to an integral one satisfying
/// mass ≥ 1/2, load and dilation ≤ t̂, x̂ ≤ d̂.
#[allow(clippy::needless_range_loop)]
pub fn round_lp1(
    frac: &FractionalSolution,
    model: &Lp1Model,
) -> Result<IntegralLpSolution, LpError> {
    let (n, m) = (model.n, model.m);
    let t = frac.t;
    let b = ceil_log2(8 * m as u64);
    let x: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = frac.x[i][j];
                    if v < 1e-9 {
                        0.0
                    } else {
                        v.min(frac.d[j])
                    }
                })
                .collect()
        })
        .collect();

    let mut xs = vec![vec![0u64; n]; m];
    let mut ds = vec![0u64; n];
    let mut jobs = vec![JobRounding::Ceiling; n];
    let (case, flow_value, demand, stage_bounds);

    if t >= n as f64 - 1e-9 {
        case = RoundingCase::Ceiling;
        for i in 0..m {
            for j in 0..n {
                xs[i][j] = ceil_tol(x[i][j]);
            }
        }
        for j in 0..n {
            ds[j] = ceil_tol(frac.d[j]);
        }
        flow_value = 0;
        demand = 0;
        stage_bounds = (0.5, 2.0 * t, 2.0 * t);
    } else {
        case = RoundingCase::Flow;
        let small_p = 1.0 / (8.0 * m as f64);
        let mut flow_jobs = Vec::new();
        // (job, bucket, machines)
        let mut chosen: Vec<(usize, Vec<usize>)> = Vec::new();
        for j in 0..n {
            let big: f64 = (0..m)
                .filter(|&i| x[i][j] >= 1.0 - 1e-9)
                .map(|i| model.p[i][j] * x[i][j])
                .sum();
            if big >= 0.25 - MASS_TOL {
                for i in 0..m {
                    if x[i][j] >= 1.0 - 1e-9 {
                        xs[i][j] = ceil_tol(x[i][j]);
                    }
                }
                ds[j] = ceil_tol(frac.d[j]);
                continue;
            }
            // bucket the fractional terms with p ≥ 1/(8m)
            let mut sums: Vec<(f64, Vec<usize>)> = vec![(0.0, Vec::new()); b as usize + 2];
            for i in 0..m {
                let (p, v) = (model.p[i][j], x[i][j]);
                if v > 0.0 && v < 1.0 - 1e-9 && p >= small_p {
                    let k = bucket_of(p) as usize;
                    if k >= sums.len() {
                        sums.resize(k + 1, (0.0, Vec::new()));
                    }
                    sums[k].0 += v;
                    sums[k].1.push(i);
                }
            }
            let mut dropped = 0.0;
            let mut best: Option<(usize, f64)> = None;
            for (k, (s, machines)) in sums.iter().enumerate() {
                if *s <= 0.0 {
                    continue;
                }
                if *s < 1.0 / 32.0 - MASS_TOL {
                    dropped += machines.iter().map(|&i| model.p[i][j] * x[i][j]).sum::<f64>();
                    continue;
                }
                let weight = s * (-(k as f64)).exp2();
                if best.is_none_or(|(_, w)| weight > w) {
                    best = Some((k, weight));
                }
            }
            let Some((k, _)) = best else {
                return Err(LpError::NoBucket { job: j });
            };
            let s = sums[k].0;
            let dj = ((32.0 * s + 1e-9).floor() as u64).max(1);
            jobs[j] = JobRounding::Flow {
                bucket: k as u32,
                bucket_sum: s,
                demand: dj,
                dropped_mass: dropped,
            };
            flow_jobs.push(j);
            chosen.push((j, sums[k].1.clone()));
        }

        // source 0, sink 1, jobs 2.., machines after
        let job_node = |j: usize| 2 + j;
        let machine_node = |i: usize| 2 + n + i;
        let mut net = FlowNetwork::new(2 + n + m, 0, 1);
        let mut total = 0u64;
        let mut edge_of = Vec::new();
        for (j, machines) in &chosen {
            let JobRounding::Flow { demand: dj, .. } = jobs[*j] else {
                unreachable!()
            };
            net.add_edge(0, job_node(*j), dj);
            total += dj;
            let cap = ceil_tol(32.0 * frac.d[*j]);
            for &i in machines {
                let e = net.add_edge(job_node(*j), machine_node(i), cap);
                edge_of.push((e, i, *j));
            }
        }
        let machine_cap = ceil_tol(32.0 * t);
        for i in 0..m {
            net.add_edge(machine_node(i), 1, machine_cap);
        }
        let flow = max_flow(&net);
        if flow.value < total {
            return Err(LpError::FlowShortfall {
                value: flow.value,
                demand: total,
                detail: format!("T* = {t}, machine capacity {machine_cap}, jobs {flow_jobs:?}"),
            });
        }
        for (e, i, j) in edge_of {
            xs[i][j] = flow.flows[e];
        }
        for &j in &flow_jobs {
            ds[j] = ceil_tol(32.0 * frac.d[j]);
        }
        flow_value = flow.value;
        demand = total;
        let mass_bound = if flow_jobs.is_empty() {
            0.25
        } else {
            1.0 / (16.0 * b as f64)
        };
        stage_bounds = (
            mass_bound,
            machine_cap as f64 + 2.0 * t,
            33.0 * t,
        );
    }

    let stage_mass = mass_of(&model.p, &xs, n);
    let mut scale = 1u64;
    for (j, &mass) in stage_mass.iter().enumerate() {
        if mass <= 0.0 {
            return Err(LpError::Invariant(format!("job {} has zero stage mass", j + 1)));
        }
        let mut s = ((0.5 - MASS_TOL) / mass).ceil().max(1.0) as u64;
        while (s as f64) * mass < 0.5 - MASS_TOL {
            s += 1;
        }
        scale = scale.max(s);
    }
    if scale > 32 * b as u64 {
        return Err(LpError::Invariant(format!(
            "scale {scale} exceeds 32·B = {}",
            32 * b
        )));
    }
    let base_len = loads_of(&xs)
        .into_iter()
        .chain(dilations_of(&model.chains, &ds))
        .max()
        .unwrap_or(0);
    let base_len = match case {
        RoundingCase::Ceiling => base_len.max(ceil_tol(2.0 * t)),
        RoundingCase::Flow => base_len,
    };
    let sol = IntegralLpSolution {
        x: xs
            .iter()
            .map(|r| r.iter().map(|&v| v * scale).collect())
            .collect(),
        d: ds.iter().map(|&v| v * scale).collect(),
        t: base_len * scale,
        scale,
        case,
        jobs,
        buckets: b,
        t_star: t,
        flow_value,
        demand,
        stage: StageBounds {
            x: xs,
            d: ds,
            mass_bound: stage_bounds.0,
            load_bound: stage_bounds.1,
            dilation_bound: stage_bounds.2,
        },
        p: model.p.clone(),
        chains: model.chains.clone(),
    };
    sol.check().map_err(LpError::Invariant)?;
    sol.check_stage().map_err(LpError::Invariant)?;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{PrecedenceDag, ProblemInstance};
    use crate::lp::{build_lp1, solve_lp};

    #[test]
    fn buckets_are_dyadic() {
        assert_eq!(bucket_of(1.0), 0);
        assert_eq!(bucket_of(0.75), 0);
        assert_eq!(bucket_of(0.5), 1);
        assert_eq!(bucket_of(0.26), 1);
        assert_eq!(bucket_of(0.25), 2);
        assert_eq!(bucket_of(0.125), 3);
    }

    #[test]
    fn ceiling_case() {
        let inst = ProblemInstance::independent(vec![vec![1.0]]).unwrap();
        let model = build_lp1(&inst).unwrap();
        let frac = FractionalSolution {
            x: vec![vec![0.5]],
            d: vec![1.0],
            t: 1.0,
            values: vec![0.5, 1.0, 1.0],
        };
        let sol = round_lp1(&frac, &model).unwrap();
        assert_eq!(sol.case, RoundingCase::Ceiling);
        assert_eq!(sol.x, vec![vec![1]]);
        assert_eq!(sol.d, vec![1]);
        assert_eq!(sol.t, 2);
        assert!(sol.mass()[0] >= 0.5);
    }

    #[test]
    fn large_terms_bypass_flow() {
        // two jobs, each needs 5 steps on its own machine: T* = 5 > n? no, n = 2 → case 1
        // use n = 8 jobs on slow dedicated machines so that T* < n
        let n = 8;
        let p: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.2 } else { 0.0 }).collect())
            .collect();
        let inst = ProblemInstance::independent(p).unwrap();
        let model = build_lp1(&inst).unwrap();
        let frac = solve_lp(&model).unwrap();
        assert!((frac.t - 2.5).abs() < 1e-7);
        let sol = round_lp1(&frac, &model).unwrap();
        assert_eq!(sol.case, RoundingCase::Flow);
        assert!(sol.jobs.iter().all(|j| *j == JobRounding::Ceiling));
        assert_eq!(sol.flow_value, 0);
        assert!(sol.t as f64 <= (2.0 * frac.t).ceil());
    }

    #[test]
    fn flow_case_on_many_fast_jobs() {
        // 6 jobs on 2 fast machines: T* < n and x < 1 everywhere
        let p = vec![vec![0.9; 6], vec![0.8; 6]];
        let inst =
            ProblemInstance::new(6, 2, p, PrecedenceDag::from_chains(&[vec![0, 1, 2]])).unwrap();
        let model = build_lp1(&inst).unwrap();
        let frac = solve_lp(&model).unwrap();
        let sol = round_lp1(&frac, &model).unwrap();
        assert_eq!(sol.case, RoundingCase::Flow);
        assert_eq!(sol.flow_value, sol.demand);
        sol.check().unwrap();
        sol.check_stage().unwrap();
    }
}
