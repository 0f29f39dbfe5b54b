//! Graph families. Randomized generators draw from ChaCha8 seeded by the
//! caller, so equal `(params, seed)` give equal edge lists.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::graph::{Graph, GraphError};
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum Family {
    Cycle { n: usize },
    Path { n: usize },
    BranchingTree { delta: usize, layers: usize },
    RandomRegular { n: usize, delta: usize },
    RandomBoundedDegree { n: usize, delta: usize },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Cycle { .. } => "cycle",
            Family::Path { .. } => "path",
            Family::BranchingTree { .. } => "branching_tree",
            Family::RandomRegular { .. } => "random_regular",
            Family::RandomBoundedDegree { .. } => "random_bounded_degree",
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Graph, GraphError> {
        match *self {
            Family::Cycle { n } => cycle(n),
            Family::Path { n } => path(n),
            Family::BranchingTree { delta, layers } => branching_tree(delta, layers),
            Family::RandomRegular { n, delta } => random_regular(n, delta, seed),
            Family::RandomBoundedDegree { n, delta } => random_bounded_degree(n, delta, seed),
        }
    }
}

/// Cycle oriented `i -> i+1 (mod n)`.
pub fn cycle(n: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::InvalidParameters("cycle needs n >= 3"));
    }
    let arcs: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_arcs(n, &arcs)
}

/// Path oriented `i -> i+1`.
pub fn path(n: usize) -> Result<Graph, GraphError> {
    if n == 0 {
        return Err(GraphError::InvalidParameters("path needs n >= 1"));
    }
    let arcs: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::from_arcs(n, &arcs)
}

pub fn complete(n: usize) -> Graph {
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            e.push((u, v));
        }
    }
    Graph::from_edges(n, &e).unwrap()
}

pub fn star(leaves: usize) -> Graph {
    let e: Vec<(usize, usize)> = (1..=leaves).map(|v| (0, v)).collect();
    Graph::from_edges(leaves + 1, &e).unwrap()
}

/// Number of nodes of [`branching_tree`].
pub fn branching_tree_size(delta: usize, layers: usize) -> usize {
    let mut total = 1;
    let mut width = 1;
    for l in 0..layers {
        width *= if l == 0 { delta } else { delta - 1 };
        total += width;
    }
    total
}

/// Root with `delta` children, every other inner node with `delta - 1`, leaves
/// at depth `layers`. Carries a proper edge colouring with colours `1..=delta`.
pub fn branching_tree(delta: usize, layers: usize) -> Result<Graph, GraphError> {
    if delta < 2 {
        return Err(GraphError::InvalidParameters("branching tree needs delta >= 2"));
    }
    let n = branching_tree_size(delta, layers);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut colors = Vec::with_capacity(n.saturating_sub(1));
    // (node, colour of the edge to its parent; 0 for the root)
    let mut frontier = vec![(0usize, 0u32)];
    let mut next = 1;
    for _ in 0..layers {
        let mut nf = Vec::new();
        for &(u, pc) in &frontier {
            for c in 1..=delta as u32 {
                if c == pc {
                    continue;
                }
                edges.push((u, next));
                colors.push(c);
                nf.push((next, c));
                next += 1;
            }
        }
        frontier = nf;
    }
    debug_assert_eq!(next, n);
    // from_edges sorts edges; children get increasing indices so (u, next) is
    // already sorted, but map colours through edge_index to be safe.
    let g = Graph::from_edges(n, &edges)?;
    let mut ec = vec![0u32; g.m()];
    for (&(u, v), &c) in edges.iter().zip(&colors) {
        ec[g.edge_index(u, v).unwrap()] = c;
    }
    g.with_edge_colors(ec)
}

/// Uniform-ish random `delta`-regular graph: random pairing of half-edges that
/// only ever joins legal pairs, restarting when it gets stuck.
pub fn random_regular(n: usize, delta: usize, seed: u64) -> Result<Graph, GraphError> {
    if (n * delta) % 2 == 1 {
        return Err(GraphError::InvalidParameters("random_regular needs n * delta even"));
    }
    if delta >= n && !(n == 0 || delta == 0) {
        return Err(GraphError::InvalidParameters("random_regular needs delta < n"));
    }
    let mut rng = rng_from(seed);
    'restart: for _ in 0..10_000 {
        let mut points: Vec<usize> = (0..n).flat_map(|u| core::iter::repeat(u).take(delta)).collect();
        let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(delta); n];
        let mut edges = Vec::with_capacity(n * delta / 2);
        while !points.is_empty() {
            let mut placed = false;
            for _ in 0..64 {
                let i = rng.gen_range(0..points.len());
                let j = rng.gen_range(0..points.len());
                let (u, v) = (points[i], points[j]);
                if i == j || u == v || adj[u].contains(&v) {
                    continue;
                }
                adj[u].push(v);
                adj[v].push(u);
                edges.push((u, v));
                let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                points.swap_remove(hi);
                points.swap_remove(lo);
                placed = true;
                break;
            }
            if !placed {
                let feasible = points.iter().enumerate().any(|(i, &u)| {
                    points[i + 1..].iter().any(|&v| u != v && !adj[u].contains(&v))
                });
                if !feasible {
                    continue 'restart;
                }
            }
        }
        return Graph::from_edges(n, &edges);
    }
    Err(GraphError::InvalidParameters("random_regular failed to find a pairing"))
}

/// Random graph with maximum degree at most `delta`: `n * delta` random
/// attempts, each adding `{u, v}` when legal.
pub fn random_bounded_degree(n: usize, delta: usize, seed: u64) -> Result<Graph, GraphError> {
    let mut rng = rng_from(seed);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut edges = Vec::new();
    if n >= 2 {
        for _ in 0..n * delta {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u == v || adj[u].len() >= delta || adj[v].len() >= delta || adj[u].contains(&v) {
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, &edges)
}
