//! Chain decomposition of directed forests.

use crate::instance::PrecedenceDag;

use super::AssembleError;

/// Partition of the jobs into blocks of vertex-disjoint directed chains.
///
/// An ancestor lies in an earlier block than its descendant, or in the same
/// chain of the same block; a vertex with several children shares its block
/// with none of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainDecomposition {
    /// `blocks[k]` lists chains, each head first.
    pub blocks: Vec<Vec<Vec<usize>>>,
    /// Block index of every job.
    pub block_of: Vec<usize>,
}

impl ChainDecomposition {
    pub fn width(&self) -> usize {
        self.blocks.len()
    }
}

/// Minimum-width chain decomposition.
///
/// Labels are assigned in topological order. A vertex may share its
/// parent's block only along an edge `u → v` where `u` has out-degree 1,
/// and along at most one such in-edge (the one whose tail has the largest
/// label); every other in-edge forces a strictly larger label. The labels
/// are then the smallest possible for every vertex at once.
pub fn decompose_forest(dag: &PrecedenceDag, n: usize) -> Result<ChainDecomposition, AssembleError> {
    let order = dag.topological_order(n).ok_or(AssembleError::NotAForest)?;
    if !is_forest(dag, n) {
        return Err(AssembleError::NotAForest);
    }
    let preds = dag.predecessors(n);
    let succs = dag.successors(n);
    let mut label = vec![0usize; n];
    // same-block parent along the chosen zero-weight edge
    let mut chain_parent = vec![None; n];
    for &v in &order {
        let best_free = preds[v]
            .iter()
            .copied()
            .filter(|&u| succs[u].len() == 1)
            .max_by_key(|&u| (label[u], std::cmp::Reverse(u)));
        let mut l = 0;
        for &u in &preds[v] {
            let need = if Some(u) == best_free {
                label[u]
            } else {
                label[u] + 1
            };
            l = l.max(need);
        }
        label[v] = l;
        if let Some(u) = best_free {
            if label[u] == l {
                chain_parent[v] = Some(u);
            }
        }
    }

    let width = label.iter().copied().max().map_or(0, |w| w + 1);
    let mut next = vec![None; n];
    for (v, parent) in chain_parent.iter().enumerate() {
        if let Some(u) = *parent {
            next[u] = Some(v);
        }
    }
    let mut blocks = vec![Vec::new(); width];
    for &v in &order {
        if chain_parent[v].is_none() {
            let mut chain = vec![v];
            let mut cur = v;
            while let Some(w) = next[cur] {
                chain.push(w);
                cur = w;
            }
            blocks[label[v]].push(chain);
        }
    }
    for b in &mut blocks {
        b.sort_by_key(|c| c[0]);
    }
    Ok(ChainDecomposition {
        blocks,
        block_of: label,
    })
}

fn is_forest(dag: &PrecedenceDag, n: usize) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in &dag.edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}
