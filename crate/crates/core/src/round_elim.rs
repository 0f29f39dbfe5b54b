//! Round elimination for colouring oriented paths with increasing ids.
//!
//! An algorithm is a table from views to colours. A view is the id sequence
//! around the centre, read along the orientation, with `0` standing for "no
//! node" past an end of the path. A node-centred `t`-round view has `2t + 1`
//! entries with the centre at index `t`; an edge-centred `(s + 1/2)`-round
//! view has `2s + 2` entries with the edge at indices `s, s + 1`. Dropping
//! the last entry of a view turns a node-centred view into an edge-centred
//! one and vice versa.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoundElimError {
    #[error("a node-centred 0-round table cannot be eliminated further")]
    NothingToEliminate,
    #[error("{0} colours do not fit a 64-bit set encoding")]
    TooManyColors(u64),
    #[error("table has no entry for a valid view")]
    NotTotal,
    #[error("colour {0} outside the declared range")]
    ColorOutOfRange(u64),
    #[error("expected a {0} table")]
    WrongKind(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViewKind {
    /// `t` rounds, `2t + 1` entries.
    Node { t: u32 },
    /// `s + 1/2` rounds, `2s + 2` entries.
    Edge { s: u32 },
}

impl ViewKind {
    pub fn len(self) -> usize {
        match self {
            ViewKind::Node { t } => 2 * t as usize + 1,
            ViewKind::Edge { s } => 2 * s as usize + 2,
        }
    }

    /// Positions that must hold a real node.
    pub fn core(self) -> (usize, usize) {
        match self {
            ViewKind::Node { t } => (t as usize, t as usize),
            ViewKind::Edge { s } => (s as usize, s as usize + 1),
        }
    }

    /// Round count, halves included.
    pub fn rounds(self) -> f64 {
        match self {
            ViewKind::Node { t } => t as f64,
            ViewKind::Edge { s } => s as f64 + 0.5,
        }
    }

    /// Kind after dropping the last view entry.
    pub fn eliminated(self) -> Option<ViewKind> {
        match self {
            ViewKind::Node { t: 0 } => None,
            ViewKind::Node { t } => Some(ViewKind::Edge { s: t - 1 }),
            ViewKind::Edge { s } => Some(ViewKind::Node { t: s }),
        }
    }

    pub fn is_valid(self, view: &[u8]) -> bool {
        let (a, b) = self.core();
        view.len() == self.len() && is_segment(view) && view[a] != 0 && view[b] != 0
    }
}

/// Zeros only as a prefix and a suffix block, real ids strictly increasing.
pub fn is_segment(w: &[u8]) -> bool {
    let first = w.iter().position(|&x| x != 0);
    let Some(first) = first else { return true };
    let last = w.iter().rposition(|&x| x != 0).unwrap();
    w[first..=last].windows(2).all(|p| p[0] != 0 && p[1] != 0 && p[0] < p[1])
}

/// All segments of length `len` over ids `1..=n_ids`, in lexicographic order.
pub fn segments(len: usize, n_ids: u8) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(len: usize, n: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == len {
            if is_segment(cur) {
                out.push(cur.clone());
            }
            return;
        }
        let last_real = cur.iter().rev().find(|&&x| x != 0).copied();
        let ended = last_real.is_some() && cur.last() == Some(&0);
        cur.push(0);
        rec(len, n, cur, out);
        cur.pop();
        if !ended {
            for x in last_real.map_or(1, |l| l + 1)..=n {
                cur.push(x);
                rec(len, n, cur, out);
                cur.pop();
            }
        }
    }
    rec(len, n_ids, &mut cur, &mut out);
    out
}

pub fn views(kind: ViewKind, n_ids: u8) -> Vec<Vec<u8>> {
    segments(kind.len(), n_ids).into_iter().filter(|v| kind.is_valid(v)).collect()
}

/// A path-colouring algorithm as an explicit table. Colours are in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathTable {
    pub kind: ViewKind,
    pub n_ids: u8,
    pub k: u64,
    pub entries: BTreeMap<Vec<u8>, u64>,
}

/// Two consecutive centres with equal colours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationWitness {
    /// Segment of `len + 1` entries; the two views are its prefix and suffix.
    pub window: Vec<u8>,
    pub color: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZeroRound {
    /// Ids `a < b` sharing a colour: adjacent with increasing ids they clash.
    Witness(ViolationWitness),
    Injective,
}

impl PathTable {
    pub fn from_fn(kind: ViewKind, n_ids: u8, k: u64, f: impl Fn(&[u8]) -> u64) -> Self {
        let entries = views(kind, n_ids).into_iter().map(|v| { let c = f(&v); (v, c) }).collect();
        PathTable { kind, n_ids, k, entries }
    }

    pub fn get(&self, view: &[u8]) -> Option<u64> {
        self.entries.get(view).copied()
    }

    /// Every valid view present and every colour in range.
    pub fn check_total(&self) -> Result<(), RoundElimError> {
        for v in views(self.kind, self.n_ids) {
            let c = self.get(&v).ok_or(RoundElimError::NotTotal)?;
            if c >= self.k {
                return Err(RoundElimError::ColorOutOfRange(c));
            }
        }
        Ok(())
    }

    /// Colours actually used, renumbered `0..` in increasing order.
    pub fn compact(&self) -> PathTable {
        let mut used: Vec<u64> = self.entries.values().copied().collect();
        used.sort_unstable();
        used.dedup();
        let entries = self.entries.iter().map(|(v, c)| (v.clone(), used.binary_search(c).unwrap() as u64)).collect();
        PathTable { kind: self.kind, n_ids: self.n_ids, k: used.len() as u64, entries }
    }

    pub fn used_colors(&self) -> usize {
        let mut used: Vec<u64> = self.entries.values().copied().collect();
        used.sort_unstable();
        used.dedup();
        used.len()
    }
}

/// One elimination step: the new colour of a view is the set (as a bit mask
/// over `0..k`) of old colours over all one-entry extensions at the end.
pub fn eliminate(tab: &PathTable) -> Result<PathTable, RoundElimError> {
    let new_kind = tab.kind.eliminated().ok_or(RoundElimError::NothingToEliminate)?;
    if tab.k > 63 {
        return Err(RoundElimError::TooManyColors(tab.k));
    }
    let mut entries = BTreeMap::new();
    for w in views(new_kind, tab.n_ids) {
        let last = *w.last().unwrap();
        let mut ext = w.clone();
        ext.push(0);
        let mut mask = 0u64;
        let candidates = core::iter::once(0).chain(if last == 0 { 1..=0 } else { last + 1..=tab.n_ids });
        for x in candidates {
            *ext.last_mut().unwrap() = x;
            if tab.kind.is_valid(&ext) {
                let c = tab.get(&ext).ok_or(RoundElimError::NotTotal)?;
                if c >= tab.k {
                    return Err(RoundElimError::ColorOutOfRange(c));
                }
                mask |= 1 << c;
            }
        }
        entries.insert(w, mask);
    }
    Ok(PathTable { kind: new_kind, n_ids: tab.n_ids, k: 1u64 << tab.k, entries })
}

pub fn eliminate_node_to_edge(tab: &PathTable) -> Result<PathTable, RoundElimError> {
    match tab.kind {
        ViewKind::Node { .. } => eliminate(tab),
        ViewKind::Edge { .. } => Err(RoundElimError::WrongKind("node-centred")),
    }
}

pub fn eliminate_edge_to_node(tab: &PathTable) -> Result<PathTable, RoundElimError> {
    match tab.kind {
        ViewKind::Edge { .. } => eliminate(tab),
        ViewKind::Node { .. } => Err(RoundElimError::WrongKind("edge-centred")),
    }
}

/// Exhaustive check over all windows of `len + 1` entries in which both the
/// prefix and the suffix view are valid.
pub fn verify_table(tab: &PathTable) -> Result<(), ViolationWitness> {
    let l = tab.kind.len();
    for w in segments(l + 1, tab.n_ids) {
        let (a, b) = (&w[..l], &w[1..]);
        if !tab.kind.is_valid(a) || !tab.kind.is_valid(b) {
            continue;
        }
        match (tab.get(a), tab.get(b)) {
            (Some(x), Some(y)) if x != y => {}
            (Some(x), _) => return Err(ViolationWitness { window: w, color: x }),
            (None, _) => return Err(ViolationWitness { window: w, color: u64::MAX }),
        }
    }
    Ok(())
}

/// Pigeonhole on a node-centred 0-round table: the first pair of ids with a
/// common colour, or injectivity.
pub fn zero_round_analysis(tab: &PathTable) -> Result<ZeroRound, RoundElimError> {
    if tab.kind != (ViewKind::Node { t: 0 }) {
        return Err(RoundElimError::WrongKind("node-centred 0-round"));
    }
    let mut first: BTreeMap<u64, u8> = BTreeMap::new();
    for id in 1..=tab.n_ids {
        let c = tab.get(&[id]).ok_or(RoundElimError::NotTotal)?;
        if let Some(&a) = first.get(&c) {
            return Ok(ZeroRound::Witness(ViolationWitness { window: vec![a, id], color: c }));
        }
        first.insert(c, id);
    }
    Ok(ZeroRound::Injective)
}

/// Views that must receive different colours.
pub fn conflict_graph(kind: ViewKind, n_ids: u8) -> (Vec<Vec<u8>>, Vec<Vec<usize>>) {
    let vs = views(kind, n_ids);
    let index: BTreeMap<&[u8], usize> = vs.iter().enumerate().map(|(i, v)| (v.as_slice(), i)).collect();
    let mut adj = vec![Vec::new(); vs.len()];
    let l = kind.len();
    for w in segments(l + 1, n_ids) {
        if let (Some(&a), Some(&b)) = (index.get(&w[..l]), index.get(&w[1..])) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    (vs, adj)
}

/// Backtracking DSatur search for a valid `k`-colouring table. With a seed,
/// ties and colour order are randomized, which yields varied tables.
pub fn search_table(kind: ViewKind, n_ids: u8, k: u64, seed: Option<u64>, node_cap: usize) -> Option<PathTable> {
    let (vs, adj) = conflict_graph(kind, n_ids);
    let n = vs.len();
    let mut rng = seed.map(rng_from);
    let tiebreak: Vec<u64> = (0..n).map(|_| rng.as_mut().map_or(0, |r| r.gen())).collect();
    let mut color = vec![u64::MAX; n];
    let mut nodes = 0;
    fn go(
        adj: &[Vec<usize>],
        k: u64,
        color: &mut [u64],
        tiebreak: &[u64],
        rng: &mut Option<rand_chacha::ChaCha8Rng>,
        nodes: &mut usize,
        cap: usize,
        left: usize,
    ) -> bool {
        if left == 0 {
            return true;
        }
        *nodes += 1;
        if *nodes > cap {
            return false;
        }
        // most saturated uncoloured view, then most uncoloured neighbours
        let mut best = usize::MAX;
        let mut key = (0usize, 0usize, 0u64);
        for v in 0..color.len() {
            if color[v] != u64::MAX {
                continue;
            }
            let mut seen: Vec<u64> = adj[v].iter().map(|&w| color[w]).filter(|&c| c != u64::MAX).collect();
            seen.sort_unstable();
            seen.dedup();
            let free = adj[v].iter().filter(|&&w| color[w] == u64::MAX).count();
            let kv = (seen.len(), free, tiebreak[v]);
            if best == usize::MAX || kv > key {
                best = v;
                key = kv;
            }
        }
        let v = best;
        let mut order: Vec<u64> = (0..k).filter(|&c| adj[v].iter().all(|&w| color[w] != c)).collect();
        if let Some(r) = rng.as_mut() {
            order.shuffle(r);
        }
        for c in order {
            color[v] = c;
            if go(adj, k, color, tiebreak, rng, nodes, cap, left - 1) {
                return true;
            }
            if *nodes > cap {
                break;
            }
        }
        color[v] = u64::MAX;
        false
    }
    if !go(&adj, k, &mut color, &tiebreak, &mut rng, &mut nodes, node_cap, n) {
        return None;
    }
    let entries = vs.into_iter().zip(color).collect();
    Some(PathTable { kind, n_ids, k, entries })
}

/// Uniformly random table; mostly invalid, used to exercise the verifier.
pub fn random_table(kind: ViewKind, n_ids: u8, k: u64, seed: u64) -> PathTable {
    let mut rng = rng_from(seed);
    let entries = views(kind, n_ids).into_iter().map(|v| (v, rng.gen_range(0..k))).collect();
    PathTable { kind, n_ids, k, entries }
}
