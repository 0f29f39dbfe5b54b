//! Network decompositions: sequential ball carving, the deterministic
//! propose/grow/delete construction over id bits, and exponential-shift
//! (MPX) clustering, plus a validator.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::engine::Adversary;
use crate::graph::{Bfs, Graph};
use crate::problems::CheckReport;
use crate::rng::split_seed;
use crate::symmetry::ceil_log2;
use crate::tape::RandomTape;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DiameterKind {
    /// Distances inside the cluster's induced subgraph.
    Strong,
    /// Distances in the whole graph.
    Weak,
}

/// Per-node colour (1-based) and cluster id. Clusters are keyed by
/// `(color, cluster)`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkDecomposition {
    pub c: u32,
    pub d: usize,
    pub kind: DiameterKind,
    pub color: Vec<u32>,
    pub cluster: Vec<u64>,
}

impl NetworkDecomposition {
    pub fn n(&self) -> usize {
        self.color.len()
    }

    /// Members of every cluster, keyed by `(color, cluster)`.
    pub fn clusters(&self) -> BTreeMap<(u32, u64), Vec<usize>> {
        let mut m: BTreeMap<(u32, u64), Vec<usize>> = BTreeMap::new();
        for u in 0..self.n() {
            m.entry((self.color[u], self.cluster[u])).or_default().push(u);
        }
        m
    }
}

/// Clustering of part of the graph. Clusters are pairwise non-adjacent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialClustering {
    pub cluster: Vec<Option<u64>>,
    pub clustered_count: usize,
    /// `(cluster, certified diameter bound)`.
    pub certificates: Vec<(u64, usize)>,
}

/// Largest distance between members, inside the cluster or in `g`.
pub fn cluster_diameter(g: &Graph, members: &[usize], kind: DiameterKind) -> Option<usize> {
    let mut inside = vec![false; g.n()];
    for &u in members {
        inside[u] = true;
    }
    let mut bfs = Bfs::new(g.n());
    let mut best = 0;
    for &u in members {
        match kind {
            DiameterKind::Strong => bfs.run(g, u, usize::MAX, |v| inside[v]),
            DiameterKind::Weak => bfs.run(g, u, usize::MAX, |_| true),
        }
        for &v in members {
            best = best.max(bfs.dist(v)?);
        }
    }
    Some(best)
}

pub fn validate(g: &Graph, nd: &NetworkDecomposition) -> CheckReport {
    let mut violations = Vec::new();
    if nd.n() != g.n() || nd.cluster.len() != g.n() {
        violations.push((0, format!("decomposition covers {} nodes, graph has {}", nd.n(), g.n())));
        return CheckReport::from_violations(violations);
    }
    for u in 0..g.n() {
        if nd.color[u] == 0 || nd.color[u] > nd.c {
            violations.push((u, format!("colour {} outside 1..={}", nd.color[u], nd.c)));
        }
    }
    for &(u, v) in g.edges() {
        if nd.color[u] == nd.color[v] && nd.cluster[u] != nd.cluster[v] {
            violations.push((u, format!("adjacent to node {v} of another cluster with the same colour")));
        }
    }
    for ((c, id), members) in nd.clusters() {
        match cluster_diameter(g, &members, nd.kind) {
            Some(d) if d <= nd.d => {}
            Some(d) => violations.push((members[0], format!("cluster ({c}, {id}) has diameter {d} > {}", nd.d))),
            None => violations.push((members[0], format!("cluster ({c}, {id}) is disconnected"))),
        }
    }
    CheckReport::from_violations(violations)
}

/// One carve of sequential ball carving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CarvePhase {
    pub residual: usize,
    pub clustered: usize,
    pub max_radius: usize,
}

/// Sequential ball carving with the smallest remaining index as next center.
pub fn ball_carving_sequential(g: &Graph) -> (NetworkDecomposition, Vec<CarvePhase>) {
    ball_carving_with(g, &mut |_: &Graph, alive: &[bool]| alive.iter().position(|&a| a).unwrap())
}

/// Ball carving with the next center chosen by `pick` among nodes marked
/// alive in the current carve.
pub fn ball_carving_with(g: &Graph, pick: &mut Adversary<'_>) -> (NetworkDecomposition, Vec<CarvePhase>) {
    let n = g.n();
    let mut color = vec![0u32; n];
    let mut cluster = vec![0u64; n];
    let mut residual = vec![true; n];
    let mut left = n;
    let mut phases = Vec::new();
    let mut bfs = Bfs::new(n);
    let mut d = 0;
    while left > 0 {
        let c = phases.len() as u32 + 1;
        let mut alive = residual.clone();
        let mut clustered = 0;
        let mut max_radius = 0;
        let before = left;
        while alive.iter().any(|&a| a) {
            let u = pick(g, &alive);
            assert!(alive[u], "ball carving picked a dead node");
            bfs.run(g, u, usize::MAX, |v| alive[v]);
            let mut layers: Vec<usize> = vec![0];
            for &v in &bfs.order {
                let dv = bfs.dist(v).unwrap();
                if dv >= layers.len() {
                    layers.push(0);
                }
                layers[dv] += 1;
            }
            // grow while the next ball more than doubles
            let mut size = layers[0];
            let mut i = 0;
            while i + 1 < layers.len() && size + layers[i + 1] > 2 * size {
                size += layers[i + 1];
                i += 1;
            }
            let boundary = layers.get(i + 1).copied().unwrap_or(0);
            assert!(boundary <= size, "carving charged more boundary than cluster");
            for &v in &bfs.order {
                let dv = bfs.dist(v).unwrap();
                if dv <= i {
                    color[v] = c;
                    cluster[v] = u as u64;
                    residual[v] = false;
                    alive[v] = false;
                    clustered += 1;
                } else if dv == i + 1 {
                    alive[v] = false;
                }
            }
            max_radius = max_radius.max(i);
            d = d.max(2 * i);
        }
        left -= clustered;
        phases.push(CarvePhase { residual: before, clustered, max_radius });
    }
    let nd = NetworkDecomposition { c: phases.len() as u32, d, kind: DiameterKind::Strong, color, cluster };
    (nd, phases)
}

/// One phase of a distributed carve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistPhase {
    pub deleted: usize,
    /// Steps until no vertex proposed any more.
    pub steps: usize,
    /// Most growth steps of a single cluster.
    pub max_growth: usize,
    /// Every component of surviving nodes agrees on the id bits seen so far.
    pub homogeneous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistCarve {
    pub nodes: usize,
    pub clustered: usize,
    pub phases: Vec<DistPhase>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistTrace {
    pub b: u32,
    pub t: usize,
    pub carves: Vec<DistCarve>,
    /// Charged rounds: `2 * d + 2` per executed step.
    pub rounds: usize,
}

/// Id bit-length used for the phases: bits of the largest id, at least 1.
pub fn id_bits(ids: &[u64]) -> u32 {
    let m = ids.iter().copied().max().unwrap_or(0);
    (64 - m.leading_zeros()).max(1)
}

/// Deterministic decomposition with weak diameter, repeated carves on the
/// residual graph, one colour per carve. Ids must be distinct.
pub fn distributed_decomposition(g: &Graph, ids: &[u64]) -> (NetworkDecomposition, DistTrace) {
    let n = g.n();
    assert_eq!(ids.len(), n);
    let b = id_bits(ids);
    let t = 10 * b as usize * ceil_log2(n as u64) as usize;
    let mut residual = vec![true; n];
    let mut color = vec![0u32; n];
    let mut cluster = vec![0u64; n];
    let mut carves = Vec::new();
    let mut steps_total = 0;
    while residual.iter().any(|&r| r) {
        let c = carves.len() as u32 + 1;
        let (cl, carve) = distributed_carve(g, ids, &residual, b, t);
        for u in 0..n {
            if let Some(id) = cl[u] {
                color[u] = c;
                cluster[u] = id;
                residual[u] = false;
            }
        }
        steps_total += carve.phases.iter().map(|p| p.steps).sum::<usize>();
        carves.push(carve);
    }
    let mut nd = NetworkDecomposition { c: carves.len() as u32, d: 0, kind: DiameterKind::Weak, color, cluster };
    nd.d = nd.clusters().values().map(|m| cluster_diameter(g, m, DiameterKind::Weak).unwrap_or(usize::MAX)).max().unwrap_or(0);
    let rounds = steps_total * (2 * nd.d + 2);
    (nd, DistTrace { b, t, carves, rounds })
}

/// One carve on the nodes marked in `alive`: `b` phases over the id bits,
/// most significant first, each of at most `t` propose/grow/delete steps.
pub fn distributed_carve(g: &Graph, ids: &[u64], alive: &[bool], b: u32, t: usize) -> (Vec<Option<u64>>, DistCarve) {
    let n = g.n();
    let mut alive = alive.to_vec();
    let nodes = alive.iter().filter(|&&a| a).count();
    let mut of: Vec<u64> = ids.to_vec();
    let mut size: BTreeMap<u64, usize> = (0..n).filter(|&u| alive[u]).map(|u| (ids[u], 1)).collect();
    let mut phases = Vec::new();
    for i in 0..b {
        let bit = b - 1 - i;
        let active = |cid: u64| (cid >> bit) & 1 == 0;
        let mut deleted = 0;
        let mut steps = 0;
        let mut growth: BTreeMap<u64, usize> = BTreeMap::new();
        for _ in 0..t {
            // proposals: inactive vertex -> cluster of its min-id active neighbor
            let mut props: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
            for u in 0..n {
                if !alive[u] || active(of[u]) {
                    continue;
                }
                let target = g.neighbors(u).iter().filter(|&&v| alive[v] && active(of[v])).min_by_key(|&&v| ids[v]);
                if let Some(&v) = target {
                    props.entry(of[v]).or_default().push(u);
                }
            }
            if props.is_empty() {
                break;
            }
            steps += 1;
            for (cid, us) in props {
                if 2 * b as usize * us.len() >= size[&cid] {
                    *growth.entry(cid).or_default() += 1;
                    for u in us {
                        let old = of[u];
                        *size.get_mut(&old).unwrap() -= 1;
                        of[u] = cid;
                        *size.get_mut(&cid).unwrap() += 1;
                    }
                } else {
                    for u in us {
                        *size.get_mut(&of[u]).unwrap() -= 1;
                        alive[u] = false;
                        deleted += 1;
                    }
                }
            }
        }
        let max_growth = growth.values().copied().max().unwrap_or(0);
        assert!(t == 0 || max_growth < t, "a cluster was still growing when the phase ended");
        let homogeneous = prefix_homogeneous(g, &alive, &of, b, i + 1);
        phases.push(DistPhase { deleted, steps, max_growth, homogeneous });
    }
    let out: Vec<Option<u64>> = (0..n).map(|u| alive[u].then_some(of[u])).collect();
    let clustered = out.iter().filter(|c| c.is_some()).count();
    (out, DistCarve { nodes, clustered, phases })
}

/// Do all clusters in each component of alive nodes share their first
/// `prefix` bits (of `b`)?
fn prefix_homogeneous(g: &Graph, alive: &[bool], of: &[u64], b: u32, prefix: u32) -> bool {
    let shift = b - prefix;
    let mut bfs = Bfs::new(g.n());
    let mut seen = vec![false; g.n()];
    for u in 0..g.n() {
        if !alive[u] || seen[u] {
            continue;
        }
        bfs.run(g, u, usize::MAX, |v| alive[v]);
        for &v in &bfs.order {
            seen[v] = true;
            if of[v] >> shift != of[u] >> shift {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MpxStats {
    pub residual: usize,
    pub clustered: usize,
    /// Head starts that hit the cap.
    pub cap_events: usize,
    pub cap: usize,
}

/// Slack added to `ceil(2 log2 n)` for the head-start cap.
pub const MPX_SLACK: usize = 2;

pub fn mpx_cap(n: usize) -> usize {
    2 * ceil_log2(n as u64) as usize + MPX_SLACK
}

/// Exponential-shift clustering. Head start = number of leading one bits of
/// the node's tape word, capped at `cap`. Node `v` joins the source `s`
/// minimizing `(cap - head(s) + dist(s, v), s)`; nodes with a neighbor in
/// another cluster are dropped.
pub fn mpx_clustering(g: &Graph, seed: u64) -> (PartialClustering, MpxStats) {
    let alive = vec![true; g.n()];
    mpx_on(g, &alive, seed, mpx_cap(g.n()))
}

fn mpx_on(g: &Graph, alive: &[bool], seed: u64, cap: usize) -> (PartialClustering, MpxStats) {
    let n = g.n();
    let tape = RandomTape::generate(n, 64, seed);
    let mut cap_events = 0;
    let mut heap = BinaryHeap::new();
    for u in (0..n).filter(|&u| alive[u]) {
        let mut h = tape.words(u)[0].leading_ones() as usize;
        if h >= cap {
            h = cap;
            cap_events += 1;
        }
        heap.push(Reverse((cap - h, u, u)));
    }
    let mut src: Vec<Option<usize>> = vec![None; n];
    let mut radius = vec![0usize; n];
    let mut start = vec![0usize; n];
    while let Some(Reverse((time, s, v))) = heap.pop() {
        if src[v].is_some() {
            continue;
        }
        src[v] = Some(s);
        if s == v {
            start[s] = time;
        }
        radius[s] = radius[s].max(time - start[s]);
        for &w in g.neighbors(v) {
            if alive[w] && src[w].is_none() {
                heap.push(Reverse((time + 1, s, w)));
            }
        }
    }
    let cluster: Vec<Option<u64>> = (0..n)
        .map(|v| {
            let s = src[v]?;
            g.neighbors(v).iter().all(|&w| !alive[w] || src[w] == Some(s)).then_some(s as u64)
        })
        .collect();
    let clustered_count = cluster.iter().filter(|c| c.is_some()).count();
    let mut certificates: Vec<(u64, usize)> = Vec::new();
    for &c in cluster.iter().flatten() {
        if !certificates.iter().any(|x| x.0 == c) {
            certificates.push((c, 2 * radius[c as usize]));
        }
    }
    certificates.sort_unstable();
    let residual = alive.iter().filter(|&&a| a).count();
    (
        PartialClustering { cluster, clustered_count, certificates },
        MpxStats { residual, clustered: clustered_count, cap_events, cap },
    )
}

/// MPX repeated on the residual nodes until all are clustered, one colour
/// per repetition. Weak diameter, bounded by `2 * cap`.
pub fn mpx_decomposition(g: &Graph, seed: u64) -> (NetworkDecomposition, Vec<MpxStats>) {
    let n = g.n();
    let cap = mpx_cap(n);
    let mut alive = vec![true; n];
    let mut color = vec![0u32; n];
    let mut cluster = vec![0u64; n];
    let mut reps = Vec::new();
    while alive.iter().any(|&a| a) {
        let c = reps.len() as u32 + 1;
        let (pc, stats) = mpx_on(g, &alive, split_seed(seed, c as u64), cap);
        for u in 0..n {
            if let Some(id) = pc.cluster[u] {
                color[u] = c;
                cluster[u] = id;
                alive[u] = false;
            }
        }
        reps.push(stats);
    }
    let mut nd = NetworkDecomposition { c: reps.len() as u32, d: 0, kind: DiameterKind::Weak, color, cluster };
    nd.d = nd.clusters().values().map(|m| cluster_diameter(g, m, DiameterKind::Weak).unwrap_or(usize::MAX)).max().unwrap_or(0);
    (nd, reps)
}
