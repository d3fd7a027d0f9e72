//! Dense two-phase tableau simplex. Returns basic (vertex) optima.

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimplexError {
    #[error("linear program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
}

/// A row `Σ coeffs · x  (sense)  rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-10;
const DEGENERATE_SWITCH: usize = 50;

struct Tableau {
    width: usize,
    /// `rows × width`, last column holds the right-hand side.
    a: Vec<f64>,
    /// Reduced costs, last entry is minus the objective value.
    z: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(r, c);
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v *= inv;
        }
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (x, &p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[c] = 0.0;
            }
        }
        let f = self.z[c];
        if f != 0.0 {
            for (x, &p) in self.z.iter_mut().zip(prow.iter()) {
                *x -= f * p;
            }
            self.z[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Minimizes the current objective over columns `< allowed`.
    fn optimize(&mut self, allowed: usize, limit: usize) -> Result<(), SimplexError> {
        let mut degenerate = 0usize;
        for _ in 0..limit {
            let bland = degenerate >= DEGENERATE_SWITCH;
            let mut enter = None;
            let mut best = -COST_EPS;
            for c in 0..allowed {
                let rc = self.z[c];
                if rc < -COST_EPS {
                    if bland {
                        enter = Some(c);
                        break;
                    }
                    if rc < best {
                        best = rc;
                        enter = Some(c);
                    }
                }
            }
            let Some(c) = enter else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows() {
                let arc = self.at(r, c);
                if arc > PIVOT_EPS {
                    let ratio = self.rhs(r) / arc;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(SimplexError::Unbounded);
            };
            if ratio.abs() < 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
        Err(SimplexError::IterationLimit(limit))
    }
}

/// Minimizes `cost · x` subject to `rows` and `x ≥ 0`.
pub fn minimize(nvars: usize, cost: &[f64], rows: &[Row]) -> Result<Vec<f64>, SimplexError> {
    let nrows = rows.len();
    // normalize to non-negative right-hand sides
    let norm: Vec<(f64, Sense)> = rows
        .iter()
        .map(|r| {
            if r.rhs < 0.0 {
                let s = match r.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                (-1.0, s)
            } else {
                (1.0, r.sense)
            }
        })
        .collect();
    let n_slack = norm.iter().filter(|(_, s)| *s != Sense::Eq).count();
    let n_art = norm.iter().filter(|(_, s)| *s != Sense::Le).count();
    let art_start = nvars + n_slack;
    let width = art_start + n_art + 1;

    let mut t = Tableau {
        width,
        a: vec![0.0; nrows * width],
        z: vec![0.0; width],
        basis: vec![0; nrows],
    };
    let (mut slack, mut art) = (nvars, art_start);
    for (r, (row, &(sign, sense))) in rows.iter().zip(&norm).enumerate() {
        let base = r * width;
        for &(v, c) in &row.coeffs {
            t.a[base + v] += sign * c;
        }
        t.a[base + width - 1] = sign * row.rhs;
        match sense {
            Sense::Le => {
                t.a[base + slack] = 1.0;
                t.basis[r] = slack;
                slack += 1;
            }
            Sense::Ge => {
                t.a[base + slack] = -1.0;
                slack += 1;
                t.a[base + art] = 1.0;
                t.basis[r] = art;
                art += 1;
            }
            Sense::Eq => {
                t.a[base + art] = 1.0;
                t.basis[r] = art;
                art += 1;
            }
        }
    }

    let limit = 50 * (nrows + width) + 1000;
    if n_art > 0 {
        // phase one: minimize the sum of artificials
        for r in 0..nrows {
            if t.basis[r] >= art_start {
                for c in 0..width {
                    t.z[c] -= t.at(r, c);
                }
            }
        }
        for c in art_start..width - 1 {
            t.z[c] += 1.0;
        }
        t.optimize(width - 1, limit)?;
        let residual = -t.z[width - 1];
        if residual > 1e-7 {
            return Err(SimplexError::Infeasible(residual));
        }
        // drive remaining artificials out of the basis
        for r in 0..nrows {
            if t.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&c| t.at(r, c).abs() > PIVOT_EPS) {
                    t.pivot(r, c);
                }
            }
        }
    }

    // phase two
    t.z.fill(0.0);
    for (c, &v) in cost.iter().enumerate() {
        t.z[c] = v;
    }
    for r in 0..nrows {
        let b = t.basis[r];
        let cb = if b < nvars { cost[b] } else { 0.0 };
        if cb != 0.0 {
            for c in 0..width {
                t.z[c] -= cb * t.at(r, c);
            }
        }
    }
    t.optimize(art_start, limit)?;

    let mut x = vec![0.0; nvars];
    for r in 0..nrows {
        if t.basis[r] < nvars {
            x[t.basis[r]] = t.rhs(r).max(0.0);
        }
    }
    Ok(x)
}
