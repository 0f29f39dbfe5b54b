//! Simple undirected graphs with optional edge orientation and edge colors.
//!
//! Edges are numbered by the sorted order of their `(min, max)` endpoint
//! pairs. The index of a neighbor inside `neighbors(u)` is the port number.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {0} out of range (n = {1})")]
    NodeOutOfRange(usize, usize),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    MultiEdge(usize, usize),
    #[error("edge colouring is not proper at node {0}")]
    ImproperEdgeColoring(usize),
    #[error("expected {expected} per-edge values, got {got}")]
    EdgeCountMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParameters(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
    port_edge: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    /// `true` means the edge points from its smaller to its larger endpoint.
    orientation: Option<Vec<bool>>,
    edge_color: Option<Vec<u32>>,
    max_degree: usize,
}

impl Graph {
    pub fn edgeless(n: usize) -> Self {
        Self::from_edges(n, &[]).expect("edgeless graph is valid")
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut list = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n {
                return Err(GraphError::NodeOutOfRange(u, n));
            }
            if v >= n {
                return Err(GraphError::NodeOutOfRange(v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        for w in list.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::MultiEdge(w[0].0, w[0].1));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &list {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let mut port_edge: Vec<Vec<usize>> = adj.iter().map(|a| vec![0; a.len()]).collect();
        for (e, &(u, v)) in list.iter().enumerate() {
            let pu = adj[u].binary_search(&v).unwrap();
            let pv = adj[v].binary_search(&u).unwrap();
            port_edge[u][pu] = e;
            port_edge[v][pv] = e;
        }
        let max_degree = adj.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Graph { n, adj, port_edge, edges: list, orientation: None, edge_color: None, max_degree })
    }

    /// Builds a graph from directed pairs `(tail, head)`; the result is oriented.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::from_edges(n, arcs)?;
        let mut orient = vec![false; g.edges.len()];
        for &(t, h) in arcs {
            let e = g.edge_index(t, h).unwrap();
            orient[e] = t < h;
        }
        g.orientation = Some(orient);
        Ok(g)
    }

    pub fn with_orientation(mut self, orientation: Vec<bool>) -> Result<Self, GraphError> {
        if orientation.len() != self.edges.len() {
            return Err(GraphError::EdgeCountMismatch { expected: self.edges.len(), got: orientation.len() });
        }
        self.orientation = Some(orientation);
        Ok(self)
    }

    pub fn with_edge_colors(mut self, colors: Vec<u32>) -> Result<Self, GraphError> {
        if colors.len() != self.edges.len() {
            return Err(GraphError::EdgeCountMismatch { expected: self.edges.len(), got: colors.len() });
        }
        for u in 0..self.n {
            let mut seen: Vec<u32> = self.port_edge[u].iter().map(|&e| colors[e]).collect();
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(GraphError::ImproperEdgeColoring(u));
            }
        }
        self.edge_color = Some(colors);
        Ok(self)
    }

    pub fn without_extras(&self) -> Self {
        let mut g = self.clone();
        g.orientation = None;
        g.edge_color = None;
        g
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    #[inline]
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn edge_at(&self, u: usize, port: usize) -> usize {
        self.port_edge[u][port]
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let p = self.adj.get(u)?.binary_search(&v).ok()?;
        Some(self.port_edge[u][p])
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_index(u, v).is_some()
    }

    /// Port at `neighbors(u)[port]` that leads back to `u`.
    pub fn reverse_port(&self, u: usize, port: usize) -> usize {
        let v = self.adj[u][port];
        self.adj[v].binary_search(&u).unwrap()
    }

    pub fn orientation(&self) -> Option<&[bool]> {
        self.orientation.as_deref()
    }

    pub fn edge_colors(&self) -> Option<&[u32]> {
        self.edge_color.as_deref()
    }

    /// Whether the edge on `port` of `u` points away from `u`.
    pub fn points_out(&self, u: usize, port: usize) -> Option<bool> {
        let o = self.orientation.as_ref()?;
        let v = self.adj[u][port];
        let fwd = o[self.port_edge[u][port]];
        Some(if u < v { fwd } else { !fwd })
    }

    pub fn port_color(&self, u: usize, port: usize) -> Option<u32> {
        self.edge_color.as_ref().map(|c| c[self.port_edge[u][port]])
    }

    /// Directed edge list `(tail, head)` if oriented.
    pub fn arcs(&self) -> Option<Vec<(usize, usize)>> {
        let o = self.orientation.as_ref()?;
        Some(self.edges.iter().zip(o).map(|(&(u, v), &f)| if f { (u, v) } else { (v, u) }).collect())
    }

    /// Successor along an oriented edge (the first out-port), if any.
    pub fn successor(&self, u: usize) -> Option<usize> {
        (0..self.degree(u)).find(|&p| self.points_out(u, p) == Some(true)).map(|p| self.adj[u][p])
    }

    pub fn predecessor(&self, u: usize) -> Option<usize> {
        (0..self.degree(u)).find(|&p| self.points_out(u, p) == Some(false)).map(|p| self.adj[u][p])
    }

    /// Distances from `src` up to `limit` (inclusive); `usize::MAX` when farther.
    pub fn bfs(&self, src: usize, limit: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut q = VecDeque::new();
        dist[src] = 0;
        q.push_back(src);
        while let Some(u) = q.pop_front() {
            if dist[u] == limit {
                continue;
            }
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        dist
    }

    /// Nodes within distance `r` of `src`, in BFS order.
    pub fn ball_nodes(&self, src: usize, r: usize) -> Vec<usize> {
        let mut bfs = Bfs::new(self.n);
        bfs.run(self, src, r, |_| true);
        bfs.order
    }

    pub fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for u in 0..self.n {
            for d in self.bfs(u, usize::MAX) {
                if d == usize::MAX {
                    return None;
                }
                best = best.max(d);
            }
        }
        Some(best)
    }

    pub fn induced(&self, keep: &[bool]) -> (Graph, Vec<usize>) {
        let map: Vec<usize> = (0..self.n).filter(|&u| keep[u]).collect();
        let mut inv = vec![usize::MAX; self.n];
        for (i, &u) in map.iter().enumerate() {
            inv[u] = i;
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|&&(u, v)| keep[u] && keep[v])
            .map(|&(u, v)| (inv[u], inv[v]))
            .collect();
        (Graph::from_edges(map.len(), &edges).unwrap(), map)
    }
}

/// Reusable BFS scratch space with generation stamps.
pub struct Bfs {
    stamp: Vec<u32>,
    dist: Vec<usize>,
    epoch: u32,
    pub order: Vec<usize>,
}

impl Bfs {
    pub fn new(n: usize) -> Self {
        Bfs { stamp: vec![0; n], dist: vec![0; n], epoch: 0, order: Vec::new() }
    }

    /// BFS from `src` to depth `r`, only entering nodes accepted by `allow`.
    pub fn run(&mut self, g: &Graph, src: usize, r: usize, allow: impl Fn(usize) -> bool) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.order.clear();
        self.stamp[src] = self.epoch;
        self.dist[src] = 0;
        self.order.push(src);
        let mut head = 0;
        while head < self.order.len() {
            let u = self.order[head];
            head += 1;
            let d = self.dist[u];
            if d == r {
                continue;
            }
            for &v in g.neighbors(u) {
                if self.stamp[v] != self.epoch && allow(v) {
                    self.stamp[v] = self.epoch;
                    self.dist[v] = d + 1;
                    self.order.push(v);
                }
            }
        }
    }

    pub fn seen(&self, v: usize) -> bool {
        self.stamp[v] == self.epoch
    }

    /// Distance of a node reached by the last run.
    pub fn dist(&self, v: usize) -> Option<usize> {
        self.seen(v).then(|| self.dist[v])
    }
}

/// `G^r`: same nodes, `u ~ v` iff `1 <= dist(u, v) <= r`.
pub fn power_graph(g: &Graph, r: usize) -> Graph {
    assert!(r >= 1, "power graph needs r >= 1");
    let mut bfs = Bfs::new(g.n());
    let mut edges = Vec::new();
    for u in 0..g.n() {
        bfs.run(g, u, r, |_| true);
        for &v in &bfs.order[1..] {
            if u < v {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(g.n(), &edges).unwrap()
}
