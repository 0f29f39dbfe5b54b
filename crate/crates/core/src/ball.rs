//! Radius-`r` views around a node and their canonical encodings.
//!
//! A ball holds every node within distance `r` of its center and every edge
//! with at least one endpoint at distance `< r`. Edges between two nodes at
//! distance exactly `r` are not visible after `r` rounds of communication and
//! are therefore not part of the view. Each node keeps its true degree and the
//! orientation and colour of all its ports, including ports that leave the
//! ball.
//!
//! The center is always local node 0 and nodes are numbered in BFS order,
//! visiting ports in increasing order.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;
use core::fmt::{self, Write as _};

use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallNode<L> {
    pub dist: usize,
    pub degree: usize,
    ports: Vec<Option<(usize, usize)>>,
    out: Vec<Option<bool>>,
    colors: Vec<Option<u32>>,
    pub label: L,
    handle: usize,
}

#[derive(Debug, Clone)]
pub struct Ball<L> {
    radius: usize,
    nodes: Vec<BallNode<L>>,
    violation: Cell<bool>,
}

/// Raised when a view needs knowledge that the source cannot provide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutsideView;

/// Read access to a port-numbered topology; implemented by graphs and balls.
pub(crate) trait Topology {
    fn degree(&self, v: usize) -> usize;
    fn port(&self, v: usize, p: usize) -> Option<(usize, usize)>;
    fn out(&self, v: usize, p: usize) -> Option<bool>;
    fn color(&self, v: usize, p: usize) -> Option<u32>;
}

impl Topology for Graph {
    fn degree(&self, v: usize) -> usize {
        Graph::degree(self, v)
    }
    fn port(&self, v: usize, p: usize) -> Option<(usize, usize)> {
        Some((self.neighbors(v)[p], self.reverse_port(v, p)))
    }
    fn out(&self, v: usize, p: usize) -> Option<bool> {
        self.points_out(v, p)
    }
    fn color(&self, v: usize, p: usize) -> Option<u32> {
        self.port_color(v, p)
    }
}

impl<L> Topology for Ball<L> {
    fn degree(&self, v: usize) -> usize {
        self.nodes[v].degree
    }
    fn port(&self, v: usize, p: usize) -> Option<(usize, usize)> {
        self.nodes[v].ports[p]
    }
    fn out(&self, v: usize, p: usize) -> Option<bool> {
        self.nodes[v].out[p]
    }
    fn color(&self, v: usize, p: usize) -> Option<u32> {
        self.nodes[v].colors[p]
    }
}

/// Generic extraction. `handle` maps a source node to its hidden handle.
pub(crate) fn build<T: Topology, L>(
    topo: &T,
    center: usize,
    r: usize,
    mut label: impl FnMut(usize) -> L,
    handle: impl Fn(usize) -> usize,
) -> Result<Ball<L>, OutsideView> {
    let mut local: BTreeMap<usize, usize> = BTreeMap::new();
    let mut order = vec![center];
    let mut dist = vec![0usize];
    local.insert(center, 0);
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        let d = dist[head];
        head += 1;
        if d == r {
            continue;
        }
        for p in 0..topo.degree(v) {
            let (w, _) = topo.port(v, p).ok_or(OutsideView)?;
            if let alloc::collections::btree_map::Entry::Vacant(e) = local.entry(w) {
                e.insert(order.len());
                order.push(w);
                dist.push(d + 1);
            }
        }
    }
    let mut nodes = Vec::with_capacity(order.len());
    for (i, &v) in order.iter().enumerate() {
        let deg = topo.degree(v);
        let mut ports = vec![None; deg];
        for (p, slot) in ports.iter_mut().enumerate() {
            if let Some((w, back)) = topo.port(v, p) {
                if let Some(&lw) = local.get(&w) {
                    if dist[i] < r || dist[lw] < r {
                        *slot = Some((lw, back));
                    }
                }
            }
        }
        nodes.push(BallNode {
            dist: dist[i],
            degree: deg,
            ports,
            out: (0..deg).map(|p| topo.out(v, p)).collect(),
            colors: (0..deg).map(|p| topo.color(v, p)).collect(),
            label: label(v),
            handle: handle(v),
        });
    }
    Ok(Ball { radius: r, nodes, violation: Cell::new(false) })
}

impl<L> Ball<L> {
    /// `B(u, r)` in `g`, with `labels(v)` attached to every node `v`.
    pub fn extract(g: &Graph, u: usize, r: usize, labels: impl FnMut(usize) -> L) -> Ball<L> {
        assert!(u < g.n(), "node {u} out of range (n = {})", g.n());
        build(g, u, r, labels, |v| v).expect("graphs expose every port")
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, v: usize) -> &BallNode<L> {
        &self.nodes[v]
    }

    pub fn nodes(&self) -> &[BallNode<L>] {
        &self.nodes
    }

    pub fn label(&self, v: usize) -> &L {
        &self.nodes[v].label
    }

    pub fn center_label(&self) -> &L {
        &self.nodes[0].label
    }

    pub fn dist(&self, v: usize) -> usize {
        self.nodes[v].dist
    }

    pub fn degree(&self, v: usize) -> usize {
        self.nodes[v].degree
    }

    /// Neighbor behind `port` of `v`. Asking for a port whose far side is not
    /// part of the view records a locality violation and yields `None`.
    pub fn neighbor(&self, v: usize, port: usize) -> Option<usize> {
        match self.nodes[v].ports.get(port) {
            Some(Some((w, _))) => Some(*w),
            _ => {
                self.violation.set(true);
                None
            }
        }
    }

    /// Like [`Ball::neighbor`] but for code that deliberately probes the
    /// boundary; never records a violation.
    pub fn known_neighbor(&self, v: usize, port: usize) -> Option<usize> {
        self.nodes[v].ports.get(port).copied().flatten().map(|(w, _)| w)
    }

    pub fn back_port(&self, v: usize, port: usize) -> Option<usize> {
        self.nodes[v].ports[port].map(|(_, b)| b)
    }

    pub fn points_out(&self, v: usize, port: usize) -> Option<bool> {
        self.nodes[v].out[port]
    }

    pub fn port_color(&self, v: usize, port: usize) -> Option<u32> {
        self.nodes[v].colors[port]
    }

    /// Next node along an outgoing edge (first out-port), if visible.
    pub fn successor(&self, v: usize) -> Option<usize> {
        let p = (0..self.degree(v)).find(|&p| self.points_out(v, p) == Some(true))?;
        self.known_neighbor(v, p)
    }

    pub fn predecessor(&self, v: usize) -> Option<usize> {
        let p = (0..self.degree(v)).find(|&p| self.points_out(v, p) == Some(false))?;
        self.known_neighbor(v, p)
    }

    pub fn violated(&self) -> bool {
        self.violation.get()
    }

    pub(crate) fn flag_violation(&self) {
        self.violation.set(true);
    }

    pub(crate) fn handle(&self, v: usize) -> usize {
        self.nodes[v].handle
    }

    pub fn map_labels<M>(&self, mut f: impl FnMut(usize, &L) -> M) -> Ball<M> {
        Ball {
            radius: self.radius,
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, nd)| BallNode {
                    dist: nd.dist,
                    degree: nd.degree,
                    ports: nd.ports.clone(),
                    out: nd.out.clone(),
                    colors: nd.colors.clone(),
                    label: f(i, &nd.label),
                    handle: nd.handle,
                })
                .collect(),
            violation: Cell::new(false),
        }
    }

    /// `B(v, r)` cut out of this ball. Fails, and records a violation, if the
    /// smaller view is not fully contained in this one.
    pub fn sub_ball<M>(&self, v: usize, r: usize, mut label: impl FnMut(usize) -> M) -> Result<Ball<M>, OutsideView> {
        let res = build(self, v, r, &mut label, |x| self.nodes[x].handle);
        if res.is_err() {
            self.violation.set(true);
        }
        res
    }

    /// The visible part of the ball as a graph on local indices. Ports of the
    /// returned graph follow local numbering, not the original ports.
    pub fn to_graph(&self) -> Graph {
        let mut edges = Vec::new();
        let mut orient = Vec::new();
        let mut colors = Vec::new();
        let mut oriented = true;
        let mut colored = true;
        for (v, nd) in self.nodes.iter().enumerate() {
            for (p, slot) in nd.ports.iter().enumerate() {
                if let Some((w, _)) = *slot {
                    if v < w {
                        edges.push((v, w));
                        match nd.out[p] {
                            Some(o) => orient.push(o),
                            None => oriented = false,
                        }
                        match nd.colors[p] {
                            Some(c) => colors.push(c),
                            None => colored = false,
                        }
                    }
                }
            }
        }
        let g = Graph::from_edges(self.nodes.len(), &edges).expect("ball edges are simple");
        let mut out = g.clone();
        if oriented && !edges.is_empty() {
            let mut o = vec![false; g.m()];
            for (&(u, v), &f) in edges.iter().zip(&orient) {
                o[g.edge_index(u, v).unwrap()] = f;
            }
            out = out.with_orientation(o).unwrap();
        }
        if colored && !edges.is_empty() {
            let mut c = vec![0; g.m()];
            for (&(u, v), &col) in edges.iter().zip(&colors) {
                c[g.edge_index(u, v).unwrap()] = col;
            }
            out = out.with_edge_colors(c).unwrap();
        }
        out
    }
}

impl<L: Clone + Ord> Ball<L> {
    /// Encoding that is equal for two balls iff some label-, orientation- and
    /// colour-preserving isomorphism maps one onto the other fixing the center.
    /// Port numbers are not part of the encoding.
    pub fn canonical(&self) -> CanonicalBall<L> {
        let n = self.nodes.len();
        let mut keys: Vec<((usize, usize, &L), usize)> =
            self.nodes.iter().enumerate().map(|(i, x)| ((x.dist, x.degree, &x.label), i)).collect();
        let init = rank_by(&mut keys, n);
        let classes = self.refine(init);
        let best = self.search(classes);
        CanonicalBall { radius: self.radius, nodes: best }
    }

    fn edge_sig(&self, v: usize, class: &[u32]) -> Vec<(u32, Option<bool>, Option<u32>)> {
        let nd = &self.nodes[v];
        let mut s: Vec<_> = nd
            .ports
            .iter()
            .enumerate()
            .filter_map(|(p, slot)| slot.map(|(w, _)| (class[w], nd.out[p], nd.colors[p])))
            .collect();
        s.sort_unstable();
        s
    }

    fn refine(&self, mut class: Vec<u32>) -> Vec<u32> {
        let n = self.nodes.len();
        loop {
            let count = distinct(&class);
            let mut sigs: Vec<((u32, Vec<(u32, Option<bool>, Option<u32>)>), usize)> =
                (0..n).map(|v| ((class[v], self.edge_sig(v, &class)), v)).collect();
            let next = rank_by(&mut sigs, n);
            if distinct(&next) == count {
                return next;
            }
            class = next;
        }
    }

    fn search(&self, class: Vec<u32>) -> Vec<CanonNode<L>> {
        let n = self.nodes.len();
        if distinct(&class) == n {
            return self.encode(&class);
        }
        // first non-singleton cell in class order
        let mut sizes = vec![0usize; n];
        for &c in &class {
            sizes[c as usize] += 1;
        }
        let target = (0..n).find(|&c| sizes[c] > 1).unwrap() as u32;
        let mut best: Option<Vec<CanonNode<L>>> = None;
        for v in (0..n).filter(|&v| class[v] == target) {
            let mut keys: Vec<((u32, u8), usize)> =
                (0..n).map(|w| ((class[w], if w == v { 0 } else { 1 }), w)).collect();
            let ind = rank_by(&mut keys, n);
            let enc = self.search(self.refine(ind));
            if best.as_ref().map_or(true, |b| enc < *b) {
                best = Some(enc);
            }
        }
        best.unwrap()
    }

    fn encode(&self, class: &[u32]) -> Vec<CanonNode<L>> {
        let n = self.nodes.len();
        let mut by_class = vec![0usize; n];
        for v in 0..n {
            by_class[class[v] as usize] = v;
        }
        by_class
            .iter()
            .map(|&v| {
                let nd = &self.nodes[v];
                CanonNode { dist: nd.dist, degree: nd.degree, label: nd.label.clone(), edges: self.edge_sig(v, class) }
            })
            .collect()
    }
}

fn distinct(class: &[u32]) -> usize {
    class.iter().map(|&c| c as usize + 1).max().unwrap_or(0)
}

/// Dense ranks of `keys` (ties share a rank), indexed by the paired node.
fn rank_by<K: Ord>(keys: &mut [(K, usize)], n: usize) -> Vec<u32> {
    keys.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = vec![0u32; n];
    let mut r = 0u32;
    for i in 0..keys.len() {
        if i > 0 && keys[i].0 != keys[i - 1].0 {
            r += 1;
        }
        out[keys[i].1] = r;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonNode<L> {
    pub dist: usize,
    pub degree: usize,
    pub label: L,
    /// `(neighbor position, points out, colour)` for every visible edge.
    pub edges: Vec<(u32, Option<bool>, Option<u32>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalBall<L> {
    pub radius: usize,
    pub nodes: Vec<CanonNode<L>>,
}

impl<L: fmt::Display> CanonicalBall<L> {
    /// Compact text code, e.g. `r1|0,2,a:1.,2.|1,1,b:0.|...`.
    pub fn code(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "r{}", self.radius);
        for nd in &self.nodes {
            let _ = write!(s, "|{},{},{}:", nd.dist, nd.degree, nd.label);
            for (i, (w, o, c)) in nd.edges.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{w}");
                match o {
                    Some(true) => s.push('>'),
                    Some(false) => s.push('<'),
                    None => s.push('.'),
                }
                if let Some(c) = c {
                    let _ = write!(s, "#{c}");
                }
            }
        }
        s
    }
}

/// Nodes at distance `<= r` from `u`, collected breadth first; used by tests
/// and oracles that need plain reachability without building a view.
pub fn reachable(g: &Graph, u: usize, r: usize) -> Vec<usize> {
    let mut dist = BTreeMap::new();
    let mut q = VecDeque::new();
    dist.insert(u, 0usize);
    q.push_back(u);
    while let Some(v) = q.pop_front() {
        let d = dist[&v];
        if d == r {
            continue;
        }
        for &w in g.neighbors(v) {
            if !dist.contains_key(&w) {
                dist.insert(w, d + 1);
                q.push_back(w);
            }
        }
    }
    dist.into_keys().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use alloc::collections::BTreeSet;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    #[test]
    fn cycle_balls() {
        let c = generators::cycle(5).unwrap();
        let b0 = Ball::extract(&c, 0, 0, |v| v);
        assert_eq!(b0.len(), 1);
        let b1 = Ball::extract(&c, 0, 1, |v| v);
        let labels: BTreeSet<usize> = b1.nodes().iter().map(|x| x.label).collect();
        assert_eq!(labels, [0, 1, 4].into_iter().collect());
        assert_eq!(b1.to_graph().m(), 2);
    }

    #[test]
    fn edges_between_boundary_nodes_hidden() {
        let c = generators::cycle(3).unwrap();
        let b = Ball::extract(&c, 0, 1, |v| v);
        assert_eq!(b.to_graph().m(), 2);
        let b2 = Ball::extract(&c, 0, 2, |v| v);
        assert_eq!(b2.to_graph().m(), 3);
    }

    #[test]
    fn regular_ball_size_bound() {
        let g = generators::random_regular(50, 3, 1).unwrap();
        for u in 0..50 {
            let b = Ball::extract(&g, u, 2, |_| ());
            assert!(b.len() <= 10);
            assert_eq!(b.len(), reachable(&g, u, 2).len());
        }
    }

    #[test]
    fn neighbor_outside_flags() {
        let p = generators::path(5).unwrap();
        let b = Ball::extract(&p, 2, 1, |_| ());
        let edge = b.neighbor(0, 1).unwrap();
        assert!(!b.violated());
        // the far port of a boundary node leaves the view
        let far = (0..b.degree(edge)).find(|&q| b.known_neighbor(edge, q).is_none()).unwrap();
        assert_eq!(b.neighbor(edge, far), None);
        assert!(b.violated());
    }

    #[test]
    fn sub_ball_matches_direct() {
        let g = generators::random_regular(30, 3, 5).unwrap();
        let big = Ball::extract(&g, 0, 3, |v| v);
        for v in 0..big.len() {
            if big.dist(v) <= 1 {
                let sub = big.sub_ball(v, 2, |x| big.nodes[x].label).unwrap();
                let direct = Ball::extract(&g, big.nodes[v].label, 2, |x| x);
                assert_eq!(sub.nodes, direct.nodes);
            }
        }
        assert!(big.sub_ball(big.len() - 1, 2, |_| ()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn nested_balls(n in 1usize..30, d in 0usize..4, seed in any::<u64>(), r in 0usize..4) {
            let g = generators::random_bounded_degree(n, d, seed).unwrap();
            for u in 0..n {
                let a: BTreeSet<usize> = Ball::extract(&g, u, r, |v| v).nodes().iter().map(|x| x.label).collect();
                let b: BTreeSet<usize> = Ball::extract(&g, u, r + 1, |v| v).nodes().iter().map(|x| x.label).collect();
                prop_assert!(a.is_subset(&b));
            }
        }

        #[test]
        fn canonical_invariant_under_relabeling(n in 1usize..12, d in 0usize..4, seed in any::<u64>(), r in 0usize..3, k in 1u8..3) {
            let g = generators::random_bounded_degree(n, d, seed).unwrap();
            let lab: Vec<u8> = (0..n).map(|v| (crate::rng::split_seed(seed, v as u64) % k as u64) as u8).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut crate::rng::rng_from(seed ^ 77));
            let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
            let h = Graph::from_edges(n, &edges).unwrap();
            let mut hl = vec![0u8; n];
            for v in 0..n { hl[perm[v]] = lab[v]; }
            for u in 0..n {
                let a = Ball::extract(&g, u, r, |v| lab[v]).canonical();
                let b = Ball::extract(&h, perm[u], r, |v| hl[v]).canonical();
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn canonical_separates_labels() {
        let p = generators::path(3).unwrap().without_extras();
        let a = Ball::extract(&p, 1, 1, |v| [0u8, 1, 2][v]).canonical();
        let b = Ball::extract(&p, 1, 1, |v| [2u8, 1, 0][v]).canonical();
        let c = Ball::extract(&p, 1, 1, |v| [0u8, 1, 0][v]).canonical();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(!a.code().is_empty());
    }
}
