//! The mass/load/dilation linear program for chain constraints, its
//! solution and its rounding to integers.
//!
//! Variables are `x_ij` (steps machine `i` spends on job `j`), `d_j` (steps
//! during which some machine works on `j`) and the horizon `t`:
//!
//! ```text
//! min t
//!   Σ_i p_ij x_ij ≥ 1/2        per job
//!   Σ_j x_ij      ≤ t          per machine
//!   Σ_{j∈C} d_j   ≤ t          per chain
//!   0 ≤ x_ij ≤ d_j,  d_j ≥ 1
//! ```

mod rounding;
pub mod simplex;

use std::fmt::Write as _;

use thiserror::Error;

use crate::instance::{ConstraintKind, ProblemInstance};
use simplex::{Row, Sense, SimplexError};

pub use rounding::{
    round_lp1, IntegralLpSolution, JobRounding, RoundingCase, StageBounds, BOUND_CONSTANT,
};

/// Relative tolerance on the objective and absolute tolerance on rows.
pub const EPS_LP: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("{0} constraints must be decomposed into chains first")]
    UnsupportedConstraints(ConstraintKind),
    #[error("simplex failed: {0}")]
    Solver(#[from] SimplexError),
    #[error("fractional solution violates the model by {0:e}")]
    InfeasibleSolution(f64),
    #[error("integral flow {value} below demand {demand}: {detail}")]
    FlowShortfall {
        value: u64,
        demand: u64,
        detail: String,
    },
    #[error("job {job} has no usable bucket after rounding")]
    NoBucket { job: usize },
    #[error("rounded solution violates an invariant: {0}")]
    Invariant(String),
}

impl LpError {
    pub fn is_internal(&self) -> bool {
        !matches!(self, LpError::UnsupportedConstraints(_))
    }
}

/// What a model row encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Mass { job: usize },
    Load { machine: usize },
    Dilation { chain: usize },
    NonNegative { machine: usize, job: usize },
    Processing { machine: usize, job: usize },
    Completion { job: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub kind: RowKind,
    pub row: Row,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lp1Model {
    pub n: usize,
    pub m: usize,
    pub p: Vec<Vec<f64>>,
    pub chains: Vec<Vec<usize>>,
    pub constraints: Vec<Constraint>,
}

impl Lp1Model {
    #[inline]
    pub fn x_var(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    #[inline]
    pub fn d_var(&self, j: usize) -> usize {
        self.n * self.m + j
    }

    #[inline]
    pub fn t_var(&self) -> usize {
        self.n * self.m + self.n
    }

    pub fn num_vars(&self) -> usize {
        self.n * self.m + self.n + 1
    }

    fn var_name(&self, v: usize) -> String {
        if v == self.t_var() {
            "t".into()
        } else if v >= self.n * self.m {
            format!("d_{}", v - self.n * self.m + 1)
        } else {
            format!("x_{}_{}", v / self.n + 1, v % self.n + 1)
        }
    }

    /// The model in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let mut s = String::from("\\ mass/load/dilation program\nMinimize\n obj: t\nSubject To\n");
        for c in &self.constraints {
            let name = match c.kind {
                RowKind::Mass { job } => format!("mass_{}", job + 1),
                RowKind::Load { machine } => format!("load_{}", machine + 1),
                RowKind::Dilation { chain } => format!("dilation_{}", chain + 1),
                RowKind::NonNegative { machine, job } => {
                    format!("nonneg_{}_{}", machine + 1, job + 1)
                }
                RowKind::Processing { machine, job } => {
                    format!("proc_{}_{}", machine + 1, job + 1)
                }
                RowKind::Completion { job } => format!("comp_{}", job + 1),
            };
            let _ = write!(s, " {name}:");
            for (k, &(v, a)) in c.row.coeffs.iter().enumerate() {
                let sign = if a < 0.0 { " -" } else if k > 0 { " +" } else { "" };
                let _ = write!(s, "{sign} {} {}", a.abs(), self.var_name(v));
            }
            let op = match c.row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", c.row.rhs);
        }
        s.push_str("End\n");
        s
    }

    /// Largest constraint violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| {
                let lhs: f64 = c.row.coeffs.iter().map(|&(v, a)| a * values[v]).sum();
                match c.row.sense {
                    Sense::Le => (lhs - c.row.rhs).max(0.0),
                    Sense::Ge => (c.row.rhs - lhs).max(0.0),
                    Sense::Eq => (lhs - c.row.rhs).abs(),
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the program for a chains (or independent) instance.
pub fn build_lp1(inst: &ProblemInstance) -> Result<Lp1Model, LpError> {
    if inst.constraints.kind == ConstraintKind::Forest {
        return Err(LpError::UnsupportedConstraints(ConstraintKind::Forest));
    }
    let (n, m) = (inst.n, inst.m);
    let mut model = Lp1Model {
        n,
        m,
        p: inst.p.clone(),
        chains: inst.chains(),
        constraints: Vec::new(),
    };
    let t = model.t_var();
    let mut rows = Vec::with_capacity(n + m + model.chains.len() + 2 * n * m + n);
    let mut push = |kind, coeffs, sense, rhs| {
        rows.push(Constraint {
            kind,
            row: Row { coeffs, sense, rhs },
        })
    };
    for j in 0..n {
        let coeffs = (0..m)
            .filter(|&i| inst.p(i, j) > 0.0)
            .map(|i| (model.x_var(i, j), inst.p(i, j)))
            .collect();
        push(RowKind::Mass { job: j }, coeffs, Sense::Ge, 0.5);
    }
    for i in 0..m {
        let mut coeffs: Vec<_> = (0..n).map(|j| (model.x_var(i, j), 1.0)).collect();
        coeffs.push((t, -1.0));
        push(RowKind::Load { machine: i }, coeffs, Sense::Le, 0.0);
    }
    for (k, chain) in model.chains.iter().enumerate() {
        let mut coeffs: Vec<_> = chain.iter().map(|&j| (model.d_var(j), 1.0)).collect();
        coeffs.push((t, -1.0));
        push(RowKind::Dilation { chain: k }, coeffs, Sense::Le, 0.0);
    }
    for i in 0..m {
        for j in 0..n {
            let x = model.x_var(i, j);
            push(
                RowKind::NonNegative { machine: i, job: j },
                vec![(x, 1.0)],
                Sense::Ge,
                0.0,
            );
            push(
                RowKind::Processing { machine: i, job: j },
                vec![(x, 1.0), (model.d_var(j), -1.0)],
                Sense::Le,
                0.0,
            );
        }
    }
    for j in 0..n {
        push(
            RowKind::Completion { job: j },
            vec![(model.d_var(j), 1.0)],
            Sense::Ge,
            1.0,
        );
    }
    model.constraints = rows;
    Ok(model)
}

/// An optimal basic solution.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalSolution {
    /// `x[i][j]`.
    pub x: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    /// Optimal value `T*`.
    pub t: f64,
    pub values: Vec<f64>,
}

/// Solves the model to optimality with the simplex method.
pub fn solve_lp(model: &Lp1Model) -> Result<FractionalSolution, LpError> {
    let nv = model.num_vars();
    let mut cost = vec![0.0; nv];
    cost[model.t_var()] = 1.0;
    // non-negativity is implicit in the solver
    let rows: Vec<Row> = model
        .constraints
        .iter()
        .filter(|c| !matches!(c.kind, RowKind::NonNegative { .. }))
        .map(|c| c.row.clone())
        .collect();
    let values = simplex::minimize(nv, &cost, &rows)?;
    let viol = model.max_violation(&values);
    if viol > EPS_LP {
        return Err(LpError::InfeasibleSolution(viol));
    }
    let x = (0..model.m)
        .map(|i| (0..model.n).map(|j| values[model.x_var(i, j)]).collect())
        .collect();
    let d = (0..model.n).map(|j| values[model.d_var(j)]).collect();
    Ok(FractionalSolution {
        x,
        d,
        t: values[model.t_var()],
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::PrecedenceDag;

    fn chains(p: Vec<Vec<f64>>, chains: &[Vec<usize>]) -> ProblemInstance {
        let n = p[0].len();
        ProblemInstance::new(n, p.len(), p, PrecedenceDag::from_chains(chains)).unwrap()
    }

    #[test]
    fn single_job_model() {
        let inst = ProblemInstance::independent(vec![vec![1.0]]).unwrap();
        let model = build_lp1(&inst).unwrap();
        assert_eq!(model.constraints.len(), 1 + 1 + 1 + 2 + 1);
        let text = model.to_lp_format();
        assert!(text.contains("mass_1: 1 x_1_1 >= 0.5"));
        assert!(text.contains("load_1: 1 x_1_1 - 1 t <= 0"));
        assert!(text.contains("dilation_1: 1 d_1 - 1 t <= 0"));
        assert!(text.contains("proc_1_1: 1 x_1_1 - 1 d_1 <= 0"));
        assert!(text.contains("comp_1: 1 d_1 >= 1"));
        let sol = solve_lp(&model).unwrap();
        assert!((sol.t - 1.0).abs() < 1e-9);
        assert!((sol.d[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn chain_dilation() {
        let inst = chains(vec![vec![1.0, 1.0]], &[vec![0, 1]]);
        let model = build_lp1(&inst).unwrap();
        let dil: Vec<_> = model
            .constraints
            .iter()
            .filter(|c| matches!(c.kind, RowKind::Dilation { .. }))
            .collect();
        assert_eq!(dil.len(), 1);
        assert_eq!(dil[0].row.coeffs.len(), 3);
        let sol = solve_lp(&model).unwrap();
        assert!((sol.t - 2.0).abs() < 1e-9);
    }

    #[test]
    fn independent_jobs_are_singleton_chains() {
        let inst = ProblemInstance::independent(vec![vec![1.0, 1.0]]).unwrap();
        let model = build_lp1(&inst).unwrap();
        let n_dil = model
            .constraints
            .iter()
            .filter(|c| matches!(c.kind, RowKind::Dilation { .. }))
            .count();
        assert_eq!(n_dil, 2);
        let (n, m, l) = (2, 1, 2);
        assert_eq!(model.constraints.len(), n + m + l + 2 * n * m + n);
    }

    #[test]
    fn two_half_machines() {
        let inst = ProblemInstance::independent(vec![vec![0.5], vec![0.5]]).unwrap();
        let sol = solve_lp(&build_lp1(&inst).unwrap()).unwrap();
        assert!((sol.t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn forest_rejected() {
        let inst = ProblemInstance::new(
            3,
            1,
            vec![vec![0.5; 3]],
            PrecedenceDag::new(ConstraintKind::Forest, vec![(0, 1), (0, 2)]),
        )
        .unwrap();
        let err = build_lp1(&inst).unwrap_err();
        assert!(!err.is_internal());
    }

    #[test]
    fn optimum_beats_greedy_bound() {
        // a slow machine: T* = 1/2 / 0.1 = 5 steps on job 1
        let inst = ProblemInstance::independent(vec![vec![0.1]]).unwrap();
        let sol = solve_lp(&build_lp1(&inst).unwrap()).unwrap();
        assert!((sol.t - 5.0).abs() < 1e-7);
        assert!((sol.x[0][0] - 5.0).abs() < 1e-7);
    }
}
