//! Integral maximum flow (Dinic) with a minimum-cut certificate.

use std::collections::VecDeque;

/// Directed network with integer capacities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub source: usize,
    pub sink: usize,
    /// `(from, to, capacity)`.
    pub edges: Vec<(usize, usize, u64)>,
}

impl FlowNetwork {
    /// Network with nodes `0..nodes`.
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        assert!(source < nodes && sink < nodes && source != sink);
        FlowNetwork {
            nodes,
            source,
            sink,
            edges: Vec::new(),
        }
    }

    /// Adds an edge and returns its index.
    pub fn add_edge(&mut self, from: usize, to: usize, capacity: u64) -> usize {
        assert!(from < self.nodes && to < self.nodes);
        self.edges.push((from, to, capacity));
        self.edges.len() - 1
    }

    /// Total capacity of edges leaving `side`.
    pub fn cut_capacity(&self, side: &[bool]) -> u64 {
        self.edges
            .iter()
            .filter(|&&(a, b, _)| side[a] && !side[b])
            .map(|e| e.2)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralFlow {
    /// Flow on each edge, indexed like [`FlowNetwork::edges`].
    pub flows: Vec<u64>,
    pub value: u64,
    /// Source side of a minimum cut; its capacity equals `value`.
    pub source_side: Vec<bool>,
}

struct Arc {
    to: usize,
    cap: u64,
}

/// Maximum flow by Dinic's algorithm (shortest augmenting paths in
/// blocking-flow phases).
pub fn max_flow(net: &FlowNetwork) -> IntegralFlow {
    let n = net.nodes;
    let mut arcs: Vec<Arc> = Vec::with_capacity(2 * net.edges.len());
    let mut adj = vec![Vec::new(); n];
    for &(a, b, c) in &net.edges {
        adj[a].push(arcs.len());
        arcs.push(Arc { to: b, cap: c });
        adj[b].push(arcs.len());
        arcs.push(Arc { to: a, cap: 0 });
    }

    let mut value = 0u64;
    let mut level = vec![usize::MAX; n];
    loop {
        bfs(&arcs, &adj, net.source, &mut level);
        if level[net.sink] == usize::MAX {
            break;
        }
        let mut next = vec![0usize; n];
        loop {
            let pushed = dfs(
                &mut arcs,
                &adj,
                &level,
                &mut next,
                net.source,
                net.sink,
                u64::MAX,
            );
            if pushed == 0 {
                break;
            }
            value += pushed;
        }
    }

    let flows = net
        .edges
        .iter()
        .enumerate()
        .map(|(k, &(_, _, c))| c - arcs[2 * k].cap)
        .collect();
    let source_side = level.iter().map(|&l| l != usize::MAX).collect();
    IntegralFlow {
        flows,
        value,
        source_side,
    }
}

fn bfs(arcs: &[Arc], adj: &[Vec<usize>], s: usize, level: &mut [usize]) {
    level.fill(usize::MAX);
    level[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &a in &adj[u] {
            let v = arcs[a].to;
            if arcs[a].cap > 0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
}

fn dfs(
    arcs: &mut [Arc],
    adj: &[Vec<usize>],
    level: &[usize],
    next: &mut [usize],
    u: usize,
    t: usize,
    limit: u64,
) -> u64 {
    if u == t {
        return limit;
    }
    while next[u] < adj[u].len() {
        let a = adj[u][next[u]];
        let v = arcs[a].to;
        if arcs[a].cap > 0 && level[v] == level[u] + 1 {
            let got = dfs(arcs, adj, level, next, v, t, limit.min(arcs[a].cap));
            if got > 0 {
                arcs[a].cap -= got;
                arcs[a ^ 1].cap += got;
                return got;
            }
        }
        next[u] += 1;
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_flow(net: &FlowNetwork, f: &IntegralFlow) {
        let mut balance = vec![0i128; net.nodes];
        for (k, &(a, b, c)) in net.edges.iter().enumerate() {
            assert!(f.flows[k] <= c);
            balance[a] -= f.flows[k] as i128;
            balance[b] += f.flows[k] as i128;
        }
        for (v, &b) in balance.iter().enumerate() {
            if v != net.source && v != net.sink {
                assert_eq!(b, 0, "conservation at {v}");
            }
        }
        assert_eq!(-balance[net.source], f.value as i128);
        assert!(f.source_side[net.source] && !f.source_side[net.sink]);
        assert_eq!(net.cut_capacity(&f.source_side), f.value);
    }

    fn brute_min_cut(net: &FlowNetwork) -> u64 {
        let others: Vec<usize> = (0..net.nodes)
            .filter(|&v| v != net.source && v != net.sink)
            .collect();
        (0u32..1 << others.len())
            .map(|mask| {
                let mut side = vec![false; net.nodes];
                side[net.source] = true;
                for (k, &v) in others.iter().enumerate() {
                    side[v] = mask >> k & 1 == 1;
                }
                net.cut_capacity(&side)
            })
            .min()
            .unwrap()
    }

    #[test]
    fn single_edge() {
        let mut net = FlowNetwork::new(2, 0, 1);
        net.add_edge(0, 1, 5);
        let f = max_flow(&net);
        assert_eq!(f.value, 5);
        check_flow(&net, &f);
    }

    #[test]
    fn two_paths() {
        // u=0, a=1, b=2, v=3
        let mut net = FlowNetwork::new(4, 0, 3);
        net.add_edge(0, 1, 3);
        net.add_edge(0, 2, 2);
        net.add_edge(1, 3, 2);
        net.add_edge(2, 3, 2);
        let f = max_flow(&net);
        assert_eq!(f.value, 4);
        assert_eq!(brute_min_cut(&net), 4);
        check_flow(&net, &f);
    }

    #[test]
    fn unreachable_sink() {
        let mut net = FlowNetwork::new(3, 0, 2);
        net.add_edge(0, 1, 7);
        let f = max_flow(&net);
        assert_eq!(f.value, 0);
        check_flow(&net, &f);
    }

    proptest! {
        #[test]
        fn matches_brute_force_cut(
            nodes in 2usize..9,
            raw in prop::collection::vec((0usize..9, 0usize..9, 0u64..12), 0..24),
        ) {
            let mut net = FlowNetwork::new(nodes, 0, nodes - 1);
            for (a, b, c) in raw {
                let (a, b) = (a % nodes, b % nodes);
                if a != b {
                    net.add_edge(a, b, c);
                }
            }
            let f = max_flow(&net);
            check_flow(&net, &f);
            prop_assert_eq!(f.value, brute_min_cut(&net));
        }
    }
}
