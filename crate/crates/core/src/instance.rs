//! Problem instances: jobs, machines, success probabilities and precedence
//! constraints.
//!
//! Jobs and machines are 0-indexed in memory. The JSON file format uses
//! 1-indexed job ids in constraint edges:
//!
//! ```json
//! {"n": 2, "m": 1, "p": [[0.5, 0.9]],
//!  "constraints": {"kind": "chains", "edges": [[1, 2]]}}
//! ```
//!
//! `p[i][j]` is the probability that machine `i` completes job `j` in one step.

use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::rng_from_seed;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid instance: {0}")]
    Invalid(ValidationReport),
    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad generator spec: {0}")]
    BadSpec(String),
}

/// Shape of the precedence constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Independent,
    Chains,
    Forest,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintKind::Independent => "independent",
            ConstraintKind::Chains => "chains",
            ConstraintKind::Forest => "forest",
        };
        f.write_str(s)
    }
}

/// Precedence constraints as a list of `(predecessor, successor)` edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecedenceDag {
    pub kind: ConstraintKind,
    pub edges: Vec<(usize, usize)>,
}

impl PrecedenceDag {
    pub fn independent() -> Self {
        PrecedenceDag {
            kind: ConstraintKind::Independent,
            edges: Vec::new(),
        }
    }

    pub fn new(kind: ConstraintKind, edges: Vec<(usize, usize)>) -> Self {
        PrecedenceDag { kind, edges }
    }

    /// Chain constraints from explicit job sequences.
    pub fn from_chains(chains: &[Vec<usize>]) -> Self {
        let edges = chains
            .iter()
            .flat_map(|c| c.windows(2).map(|w| (w[0], w[1])))
            .collect();
        PrecedenceDag {
            kind: ConstraintKind::Chains,
            edges,
        }
    }

    pub fn predecessors(&self, n: usize) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            if b < n {
                preds[b].push(a);
            }
        }
        preds
    }

    pub fn successors(&self, n: usize) -> Vec<Vec<usize>> {
        let mut succs = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            if a < n {
                succs[a].push(b);
            }
        }
        succs
    }

    /// Disjoint chains covering all `n` jobs, each listed head first.
    ///
    /// Only meaningful when every job has in- and out-degree at most one;
    /// chains are ordered by their head's index. Independent jobs become
    /// singleton chains.
    pub fn chains(&self, n: usize) -> Vec<Vec<usize>> {
        let mut next = vec![None; n];
        let mut has_pred = vec![false; n];
        for &(a, b) in &self.edges {
            next[a] = Some(b);
            has_pred[b] = true;
        }
        let mut chains = Vec::new();
        for head in (0..n).filter(|&j| !has_pred[j]) {
            let mut chain = vec![head];
            let mut cur = head;
            while let Some(nx) = next[cur] {
                chain.push(nx);
                cur = nx;
                if chain.len() > n {
                    break;
                }
            }
            chains.push(chain);
        }
        chains
    }

    /// Topological order, smallest available index first. `None` on a cycle.
    pub fn topological_order(&self, n: usize) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; n];
        let succs = self.successors(n);
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut heap: BinaryHeap<std::cmp::Reverse<usize>> = (0..n)
            .filter(|&j| indeg[j] == 0)
            .map(std::cmp::Reverse)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(std::cmp::Reverse(j)) = heap.pop() {
            order.push(j);
            for &s in &succs[j] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    heap.push(std::cmp::Reverse(s));
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

/// A validated SUU instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub n: usize,
    pub m: usize,
    /// `p[i][j]`: row per machine, column per job.
    pub p: Vec<Vec<f64>>,
    pub constraints: PrecedenceDag,
}

impl ProblemInstance {
    /// Builds and validates an instance.
    pub fn new(
        n: usize,
        m: usize,
        p: Vec<Vec<f64>>,
        constraints: PrecedenceDag,
    ) -> Result<Self, InstanceError> {
        let inst = ProblemInstance {
            n,
            m,
            p,
            constraints,
        };
        let report = validate(&inst);
        if report.is_valid() {
            Ok(inst)
        } else {
            Err(InstanceError::Invalid(report))
        }
    }

    /// Independent-jobs instance from a probability matrix.
    pub fn independent(p: Vec<Vec<f64>>) -> Result<Self, InstanceError> {
        let m = p.len();
        let n = p.first().map_or(0, Vec::len);
        Self::new(n, m, p, PrecedenceDag::independent())
    }

    #[inline]
    pub fn p(&self, machine: usize, job: usize) -> f64 {
        self.p[machine][job]
    }

    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        self.constraints.predecessors(self.n)
    }

    pub fn chains(&self) -> Vec<Vec<usize>> {
        self.constraints.chains(self.n)
    }

    pub fn topological_order(&self) -> Vec<usize> {
        self.constraints
            .topological_order(self.n)
            .expect("validated instance is acyclic")
    }

    /// Probability that job `j` completes in one step when every machine
    /// works on it.
    pub fn full_success_probability(&self, j: usize) -> f64 {
        crate::util::success_probability((0..self.m).map(|i| self.p[i][j]))
    }

    /// Sub-instance on `jobs` (in the given order) with induced constraints.
    /// Job `jobs[k]` becomes job `k`.
    pub fn restrict(&self, jobs: &[usize]) -> ProblemInstance {
        let mut index = vec![usize::MAX; self.n];
        for (k, &j) in jobs.iter().enumerate() {
            index[j] = k;
        }
        let p = self
            .p
            .iter()
            .map(|row| jobs.iter().map(|&j| row[j]).collect())
            .collect();
        let edges: Vec<_> = self
            .constraints
            .edges
            .iter()
            .filter(|&&(a, b)| index[a] != usize::MAX && index[b] != usize::MAX)
            .map(|&(a, b)| (index[a], index[b]))
            .collect();
        let kind = if edges.is_empty() {
            ConstraintKind::Independent
        } else {
            self.constraints.kind
        };
        ProblemInstance {
            n: jobs.len(),
            m: self.m,
            p,
            constraints: PrecedenceDag { kind, edges },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// One violated instance invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyDimension { what: &'static str },
    ShapeMismatch { expected_rows: usize, expected_cols: usize },
    ProbabilityOutOfRange { machine: usize, job: usize, value: f64 },
    NoCapableMachine { job: usize },
    EdgeOutOfRange { from: usize, to: usize },
    SelfLoop { job: usize },
    DuplicateEdge { from: usize, to: usize },
    Cycle,
    EdgesInIndependent,
    ChainInDegree { job: usize },
    ChainOutDegree { job: usize },
    NotAForest,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDimension { what } => write!(f, "{what} must be positive"),
            Violation::ShapeMismatch {
                expected_rows,
                expected_cols,
            } => write!(
                f,
                "probability matrix shape mismatch: expected {expected_rows} rows of {expected_cols} columns"
            ),
            Violation::ProbabilityOutOfRange { machine, job, value } => write!(
                f,
                "probability out of range: p[{}][{}] = {value}",
                machine + 1,
                job + 1
            ),
            Violation::NoCapableMachine { job } => {
                write!(f, "job {} has no machine with positive probability", job + 1)
            }
            Violation::EdgeOutOfRange { from, to } => {
                write!(f, "edge ({}, {}) references a missing job", from + 1, to + 1)
            }
            Violation::SelfLoop { job } => write!(f, "self loop on job {}", job + 1),
            Violation::DuplicateEdge { from, to } => {
                write!(f, "duplicate edge ({}, {})", from + 1, to + 1)
            }
            Violation::Cycle => f.write_str("precedence graph has a cycle"),
            Violation::EdgesInIndependent => f.write_str("independent instance has edges"),
            Violation::ChainInDegree { job } => {
                write!(f, "in-degree > 1 in chain dag at job {}", job + 1)
            }
            Violation::ChainOutDegree { job } => {
                write!(f, "out-degree > 1 in chain dag at job {}", job + 1)
            }
            Violation::NotAForest => f.write_str("underlying undirected graph is not a forest"),
        }
    }
}

/// Result of [`validate`]; empty means valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.messages().join("; "))
    }
}

/// Lists every violated invariant of `inst`. Never fails.
pub fn validate(inst: &ProblemInstance) -> ValidationReport {
    let mut v = Vec::new();
    if inst.n == 0 {
        v.push(Violation::EmptyDimension { what: "n" });
    }
    if inst.m == 0 {
        v.push(Violation::EmptyDimension { what: "m" });
    }
    let shape_ok = inst.p.len() == inst.m && inst.p.iter().all(|r| r.len() == inst.n);
    if !shape_ok {
        v.push(Violation::ShapeMismatch {
            expected_rows: inst.m,
            expected_cols: inst.n,
        });
    } else {
        for (i, row) in inst.p.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&x) {
                    v.push(Violation::ProbabilityOutOfRange {
                        machine: i,
                        job: j,
                        value: x,
                    });
                }
            }
        }
        for j in 0..inst.n {
            if !(0..inst.m).any(|i| inst.p[i][j] > 0.0) {
                v.push(Violation::NoCapableMachine { job: j });
            }
        }
    }

    let dag = &inst.constraints;
    let mut edges_ok = true;
    let mut seen = BTreeSet::new();
    for &(a, b) in &dag.edges {
        if a >= inst.n || b >= inst.n {
            v.push(Violation::EdgeOutOfRange { from: a, to: b });
            edges_ok = false;
        } else if a == b {
            v.push(Violation::SelfLoop { job: a });
            edges_ok = false;
        } else if !seen.insert((a, b)) {
            v.push(Violation::DuplicateEdge { from: a, to: b });
        }
    }
    if edges_ok {
        if dag.topological_order(inst.n).is_none() {
            v.push(Violation::Cycle);
        }
        match dag.kind {
            ConstraintKind::Independent => {
                if !dag.edges.is_empty() {
                    v.push(Violation::EdgesInIndependent);
                }
            }
            ConstraintKind::Chains => {
                let mut indeg = vec![0usize; inst.n];
                let mut outdeg = vec![0usize; inst.n];
                for &(a, b) in &seen {
                    outdeg[a] += 1;
                    indeg[b] += 1;
                }
                for j in 0..inst.n {
                    if outdeg[j] > 1 {
                        v.push(Violation::ChainOutDegree { job: j });
                    }
                    if indeg[j] > 1 {
                        v.push(Violation::ChainInDegree { job: j });
                    }
                }
            }
            ConstraintKind::Forest => {
                if !undirected_forest(inst.n, &dag.edges) {
                    v.push(Violation::NotAForest);
                }
            }
        }
    }
    ValidationReport { violations: v }
}

/// Union-find check that no undirected cycle (including parallel edges)
/// exists.
fn undirected_forest(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

/// Shape of generated constraints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum GeneratorKind {
    Independent,
    /// `count` chains over consecutive job ids, lengths as equal as possible.
    Chains { count: usize },
    /// Random recursive forest with random edge orientation.
    Forest,
}

/// Distribution of the generated success probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum PDistribution {
    /// Uniform on `[low, high)`.
    Uniform { low: f64, high: f64 },
    /// Each entry is zero with probability `1 - density`, otherwise uniform
    /// on `[low, high)`.
    Sparse { density: f64, low: f64, high: f64 },
}

impl Default for PDistribution {
    fn default() -> Self {
        PDistribution::Uniform {
            low: 0.0,
            high: 1.0,
        }
    }
}

impl PDistribution {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            PDistribution::Uniform { low, high } => uniform(rng, low, high),
            PDistribution::Sparse { density, low, high } => {
                if rng.gen::<f64>() < density {
                    uniform(rng, low, high)
                } else {
                    0.0
                }
            }
        }
    }

    fn check(&self) -> Result<(), InstanceError> {
        let (low, high) = match *self {
            PDistribution::Uniform { low, high } => (low, high),
            PDistribution::Sparse { density, low, high } => {
                if !(density > 0.0 && density <= 1.0) {
                    return Err(InstanceError::BadSpec(format!(
                        "density must be in (0, 1], got {density}"
                    )));
                }
                (low, high)
            }
        };
        if !(0.0 <= low && low <= high && high <= 1.0) || high <= 0.0 {
            return Err(InstanceError::BadSpec(format!(
                "probability range [{low}, {high}) must lie in [0, 1] and allow positive values"
            )));
        }
        Ok(())
    }
}

fn uniform<R: Rng>(rng: &mut R, low: f64, high: f64) -> f64 {
    if high > low {
        rng.gen_range(low..high)
    } else {
        low
    }
}

/// Input to [`generate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub m: usize,
    pub kind: GeneratorKind,
    pub p_distribution: PDistribution,
    pub seed: u64,
}

/// Generates a valid random instance; a pure function of `spec`.
///
/// A job whose sampled column is all zero is resampled until some machine
/// can run it.
pub fn generate(spec: &GeneratorSpec) -> Result<ProblemInstance, InstanceError> {
    if spec.n == 0 || spec.m == 0 {
        return Err(InstanceError::BadSpec("n and m must be at least 1".into()));
    }
    spec.p_distribution.check()?;
    let mut rng = rng_from_seed(spec.seed);
    let (n, m) = (spec.n, spec.m);

    let mut p = vec![vec![0.0; n]; m];
    for j in 0..n {
        loop {
            for row in p.iter_mut() {
                row[j] = spec.p_distribution.sample(&mut rng);
            }
            if p.iter().any(|row| row[j] > 0.0) {
                break;
            }
        }
    }

    let constraints = match spec.kind {
        GeneratorKind::Independent => PrecedenceDag::independent(),
        GeneratorKind::Chains { count } => {
            if count == 0 || count > n {
                return Err(InstanceError::BadSpec(format!(
                    "chain count must be in 1..={n}, got {count}"
                )));
            }
            let base = n / count;
            let extra = n % count;
            let mut chains = Vec::with_capacity(count);
            let mut next = 0;
            for k in 0..count {
                let len = base + usize::from(k < extra);
                chains.push((next..next + len).collect::<Vec<_>>());
                next += len;
            }
            PrecedenceDag::from_chains(&chains)
        }
        GeneratorKind::Forest => {
            let mut edges = Vec::new();
            for j in 1..n {
                if rng.gen::<f64>() < 0.85 {
                    let parent = rng.gen_range(0..j);
                    if rng.gen::<bool>() {
                        edges.push((parent, j));
                    } else {
                        edges.push((j, parent));
                    }
                }
            }
            PrecedenceDag::new(ConstraintKind::Forest, edges)
        }
    };
    ProblemInstance::new(n, m, p, constraints)
}

/// On-disk representation (1-indexed edges).
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    m: usize,
    p: Vec<Vec<f64>>,
    constraints: ConstraintsFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintsFile {
    kind: ConstraintKind,
    #[serde(default)]
    edges: Vec<[usize; 2]>,
}

impl From<&ProblemInstance> for InstanceFile {
    fn from(inst: &ProblemInstance) -> Self {
        InstanceFile {
            n: inst.n,
            m: inst.m,
            p: inst.p.clone(),
            constraints: ConstraintsFile {
                kind: inst.constraints.kind,
                edges: inst
                    .constraints
                    .edges
                    .iter()
                    .map(|&(a, b)| [a + 1, b + 1])
                    .collect(),
            },
        }
    }
}

impl InstanceFile {
    fn into_instance(self) -> Result<ProblemInstance, InstanceError> {
        let mut edges = Vec::with_capacity(self.constraints.edges.len());
        for [a, b] in self.constraints.edges {
            if a == 0 || b == 0 {
                return Err(InstanceError::Invalid(ValidationReport {
                    violations: vec![Violation::EdgeOutOfRange {
                        from: a.wrapping_sub(1),
                        to: b.wrapping_sub(1),
                    }],
                }));
            }
            edges.push((a - 1, b - 1));
        }
        ProblemInstance::new(
            self.n,
            self.m,
            self.p,
            PrecedenceDag::new(self.constraints.kind, edges),
        )
    }
}
