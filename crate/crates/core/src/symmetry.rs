//! Symmetry breaking: cover-free families, Linial colour reduction, the
//! Cole-style bit reduction, greedy sequential MIS and colouring, Luby's MIS
//! and the randomized 3-colouring of oriented cycles.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::marker::PhantomData;
use num_bigint::BigUint;
use rand::Rng;
use thiserror::Error;

use crate::ball::Ball;
use crate::engine::{run_message_mode, EngineError, LocalAlgorithm, NodeInit, Protocol, RunResult, SeqLabel, SequentialAlgorithm};
use crate::graph::{power_graph, Graph};
use crate::ids::{range_bound, IdAssignment};
use crate::rng::rng_from;
use crate::tape::RandomTape;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColoringError {
    #[error("nodes {0} and {1} are adjacent and share a colour")]
    NotProper(usize, usize),
    #[error("colour {0} outside the declared range")]
    OutOfRange(u64),
    #[error("graph is not an oriented cycle")]
    NotOrientedCycle,
    #[error("no node was selected red")]
    NoRed,
    #[error("reduced colours need {0} bits")]
    TooWide(u32),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

pub fn is_prime(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= x {
        if x % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime strictly greater than `x`.
pub fn next_prime_above(x: u64) -> u64 {
    let mut q = x + 1;
    while !is_prime(q) {
        q += 1;
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// `S_p = {(x, p(x)) : x in F_q}` for polynomials of degree `<= d`.
    Polynomial { q: u64, d: u32 },
    /// Singletons `S_i = {i}`.
    Explicit,
    /// Every set is `{0}`; only cover-free for `delta = 0`.
    Trivial,
}

/// `k` subsets of the ground set `[0, ground)`, no one covered by the union
/// of `delta` others. Sets are indexed from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverFreeFamily {
    pub k: u64,
    pub ground: u64,
    pub delta: usize,
    pub construction: Construction,
}

fn pow_at_least(q: u64, e: u32, k: u64) -> bool {
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc *= q as u128;
        if acc >= k as u128 {
            return true;
        }
    }
    acc >= k as u128
}

impl CoverFreeFamily {
    pub fn polynomial(q: u64, d: u32, delta: usize, k: u64) -> Option<Self> {
        if !is_prime(q) || q <= delta as u64 * d as u64 || !pow_at_least(q, d + 1, k) {
            return None;
        }
        Some(CoverFreeFamily { k, ground: q * q, delta, construction: Construction::Polynomial { q, d } })
    }

    /// Elements of set `i`, ascending.
    pub fn set(&self, i: u64) -> Vec<u64> {
        assert!(i < self.k);
        match self.construction {
            Construction::Explicit => vec![i],
            Construction::Trivial => vec![0],
            Construction::Polynomial { q, .. } => (0..q).map(|x| x * q + self.eval(i, x)).collect(),
        }
    }

    fn eval(&self, i: u64, x: u64) -> u64 {
        let Construction::Polynomial { q, d } = self.construction else { unreachable!() };
        // Horner over the base-q digits of i, most significant first
        let mut digits = [0u64; 65];
        let mut y = i;
        for slot in digits.iter_mut().take(d as usize + 1) {
            *slot = y % q;
            y /= q;
        }
        let mut acc = 0u64;
        for j in (0..=d as usize).rev() {
            acc = (acc * x + digits[j]) % q;
        }
        acc
    }

    /// Smallest element of `S_i` not covered by the sets `others`.
    pub fn min_free(&self, i: u64, others: &[u64]) -> Option<u64> {
        match self.construction {
            Construction::Explicit => (!others.contains(&i)).then_some(i),
            Construction::Trivial => others.is_empty().then_some(0),
            Construction::Polynomial { q, .. } => (0..q).find_map(|x| {
                let y = self.eval(i, x);
                others.iter().all(|&o| o == i || self.eval(o, x) != y).then_some(x * q + y)
            }),
        }
    }

    /// Exhaustive check over all `(delta + 1)`-tuples; returns a bad tuple.
    pub fn verify_exhaustive(&self) -> Result<(), Vec<u64>> {
        let sets: Vec<Vec<u64>> = (0..self.k).map(|i| self.set(i)).collect();
        let k = self.k as usize;
        for i in 0..k {
            let others: Vec<usize> = (0..k).filter(|&j| j != i).collect();
            let take = self.delta.min(others.len());
            let mut idx: Vec<usize> = (0..take).collect();
            loop {
                let covered = sets[i].iter().all(|e| idx.iter().any(|&t| sets[others[t]].contains(e)));
                if covered {
                    let mut bad = vec![i as u64];
                    bad.extend(idx.iter().map(|&t| others[t] as u64));
                    return Err(bad);
                }
                if !next_combination(&mut idx, others.len()) {
                    break;
                }
            }
        }
        Ok(())
    }

    /// `samples` random tuples of distinct indices.
    pub fn spot_check(&self, samples: usize, seed: u64) -> Result<(), Vec<u64>> {
        let mut rng = rng_from(seed);
        let want = (self.delta + 1).min(self.k as usize);
        for _ in 0..samples {
            let mut t: Vec<u64> = Vec::with_capacity(want);
            while t.len() < want {
                let x = rng.gen_range(0..self.k);
                if !t.contains(&x) {
                    t.push(x);
                }
            }
            if self.min_free(t[0], &t[1..]).is_none() {
                return Err(t);
            }
        }
        Ok(())
    }
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Smallest `r` with `r^e >= k`.
fn root_ceil(k: u64, e: u32) -> u64 {
    let (mut lo, mut hi) = (1u64, k.max(1));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pow_at_least(mid, e, k) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Smallest-ground family of size `k` among the polynomial constructions and
/// the singletons.
pub fn coverfree_family(k: u64, delta: usize) -> CoverFreeFamily {
    assert!(k >= 1);
    if delta == 0 {
        return CoverFreeFamily { k, ground: 1, delta, construction: Construction::Trivial };
    }
    let explicit = CoverFreeFamily { k, ground: k, delta, construction: Construction::Explicit };
    let mut best: Option<CoverFreeFamily> = None;
    for d in 1..=63u32 {
        let floor = (delta as u64 * d as u64).max(root_ceil(k, d + 1) - 1);
        let q = next_prime_above(floor);
        let Some(ground) = q.checked_mul(q) else { continue };
        let f = CoverFreeFamily { k, ground, delta, construction: Construction::Polynomial { q, d } };
        if best.map_or(true, |b| f.ground < b.ground) {
            best = Some(f);
        }
        if q <= delta as u64 * (d as u64 + 1) {
            // larger d only forces larger q from here on
            break;
        }
    }
    match best {
        Some(b) if b.ground < explicit.ground => b,
        _ => explicit,
    }
}

/// Colour bound after the Linial iteration: `LINIAL_C0 * max(1, delta)^2`.
/// The iteration stops at a ground size `q^2` with `q` the next prime above
/// `2 * delta`, so `q < 4 * delta` and `q^2 < 16 * delta^2`.
pub const LINIAL_C0: u64 = 16;

/// Families used by successive Linial rounds starting from `k0` colours.
pub fn linial_plan(delta: usize, k0: u64) -> Vec<CoverFreeFamily> {
    let mut plan = Vec::new();
    let mut k = k0.max(1);
    loop {
        let f = coverfree_family(k, delta);
        if f.ground >= k {
            return plan;
        }
        k = f.ground;
        plan.push(f);
    }
}

/// Colours after the plan (`k0` if the plan is empty).
pub fn linial_colors(delta: usize, k0: u64) -> u64 {
    linial_plan(delta, k0).last().map_or(k0.max(1), |f| f.ground)
}

/// One Linial round on a proper colouring with colours `1..=k`.
pub fn linial_reduce_once(g: &Graph, colors: &[u64], k: u64) -> Result<(Vec<u64>, u64), ColoringError> {
    check_proper(g, colors)?;
    if let Some(&c) = colors.iter().find(|&&c| c == 0 || c > k) {
        return Err(ColoringError::OutOfRange(c));
    }
    let f = coverfree_family(k, g.max_degree());
    let out = (0..g.n())
        .map(|u| {
            let others: Vec<u64> = g.neighbors(u).iter().map(|&v| colors[v] - 1).collect();
            f.min_free(colors[u] - 1, &others).expect("cover-free family guarantees a free element") + 1
        })
        .collect();
    Ok((out, f.ground))
}

pub fn check_proper(g: &Graph, colors: &[u64]) -> Result<(), ColoringError> {
    for &(u, v) in g.edges() {
        if colors[u] == colors[v] {
            return Err(ColoringError::NotProper(u, v));
        }
    }
    Ok(())
}

/// Linial's colouring as a protocol: one round per plan step.
/// Input labels are the initial colours (ids), in `1..=k0`.
#[derive(Debug, Clone, Copy)]
pub struct LinialProtocol {
    pub delta: usize,
    /// Ids are below `range_bound(n, exponent)` unless `initial_range` is set.
    pub exponent: u32,
    pub initial_range: Option<u64>,
}

impl LinialProtocol {
    pub fn new(delta: usize, exponent: u32) -> Self {
        LinialProtocol { delta, exponent, initial_range: None }
    }

    fn k0(&self, n: usize) -> u64 {
        self.initial_range.unwrap_or_else(|| range_bound(n, self.exponent) - 1)
    }

    pub fn plan(&self, n: usize) -> Vec<CoverFreeFamily> {
        linial_plan(self.delta, self.k0(n))
    }
}

#[derive(Debug, Clone)]
pub struct LinialState {
    color: u64,
    degree: usize,
    plan: Vec<CoverFreeFamily>,
}

impl Protocol for LinialProtocol {
    type Label = u64;
    type State = LinialState;
    type Msg = u64;
    type Output = u64;

    fn name(&self) -> String {
        format!("linial(delta={})", self.delta)
    }

    fn rounds(&self, n: usize) -> usize {
        self.plan(n).len()
    }

    fn init(&self, n: usize, init: NodeInit<u64>) -> LinialState {
        LinialState { color: init.label, degree: init.degree, plan: self.plan(n) }
    }

    fn send(&self, _: usize, _: usize, s: &LinialState) -> Vec<Option<u64>> {
        vec![Some(s.color); s.degree]
    }

    fn receive(&self, _: usize, round: usize, s: &mut LinialState, inbox: Vec<Option<u64>>) {
        let f = s.plan[round - 1];
        let others: Vec<u64> = inbox.into_iter().flatten().map(|c| c - 1).collect();
        // a node with an improper input keeps colour 0, caught by the checker
        s.color = f.min_free(s.color - 1, &others).map_or(0, |e| e + 1);
    }

    fn finalize(&self, _: usize, s: &LinialState) -> Result<u64, EngineError> {
        if s.color == 0 {
            return Err(EngineError::algorithm("linial: input colouring was not proper"));
        }
        Ok(s.color)
    }
}

/// Proper `O(delta^2)` colouring from unique ids.
pub fn linial_color(g: &Graph, ids: &IdAssignment) -> Result<RunResult<u64>, ColoringError> {
    let p = LinialProtocol { delta: g.max_degree(), exponent: ids.exponent, initial_range: Some(ids.range_bound - 1) };
    Ok(run_message_mode(&p, g, &ids.ids)?)
}

/// Proper colouring of `G^rho`: ids become colours unique in every `rho`-ball.
pub fn distance_coloring(g: &Graph, rho: usize, ids: &IdAssignment) -> Result<RunResult<u64>, ColoringError> {
    let h = power_graph(g, rho);
    linial_color(&h, ids)
}

/// Ids from a huge range (arbitrary-precision) made small: one Cole-style
/// step on `G^rho` (record = lowest differing bit index and own bit there),
/// then Linial's reduction from the resulting range. The output colours are
/// unique within every `rho`-ball and bounded independently of the id range.
pub fn reduce_big_ids(g: &Graph, ids: &[BigUint], rho: usize) -> Result<RunResult<u64>, ColoringError> {
    let h = power_graph(g, rho);
    let kbits = ids.iter().map(|x| x.bits()).max().unwrap_or(1).max(1);
    let w = ceil_log2(kbits) + 1;
    let delta = h.max_degree();
    let width = delta as u32 * w;
    if width > 62 {
        return Err(ColoringError::TooWide(width));
    }
    let mut first = Vec::with_capacity(g.n());
    for u in 0..g.n() {
        let mut recs: Vec<u64> = Vec::new();
        for &v in h.neighbors(u) {
            let j = (&ids[u] ^ &ids[v]).trailing_zeros().ok_or(ColoringError::NotProper(u.min(v), u.max(v)))?;
            recs.push((j << 1) | ids[u].bit(j) as u64);
        }
        recs.sort_unstable();
        recs.dedup();
        let pad = recs.last().copied().unwrap_or(0);
        recs.resize(delta, pad);
        first.push(recs.iter().fold(0u64, |acc, &r| (acc << w) | r) + 1);
    }
    let p = LinialProtocol { delta, exponent: 1, initial_range: Some(1u64 << width) };
    let mut res = run_message_mode(&p, &h, &first)?;
    res.rounds_used = (res.rounds_used + 1) * rho;
    res.locality_used = res.rounds_used;
    Ok(res)
}

/// Bit `j` of a `k`-bit string, most significant first.
fn bit_msb(c: u64, k: u32, j: u32) -> u64 {
    (c >> (k - 1 - j)) & 1
}

pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// One Cole-style step on a proper colouring whose colours are `kbits`-bit
/// strings. Every node records, for each neighbor, the first index where the
/// strings differ and its own bit there. The sorted set of records, padded to
/// `delta` entries by repeating the last one, is the new colour of
/// `delta * (ceil_log2(kbits) + 1)` bits.
pub fn cole_reduce_once(g: &Graph, colors: &[u64], kbits: u32) -> Result<(Vec<u64>, u32), ColoringError> {
    let delta = g.max_degree();
    let w = ceil_log2(kbits as u64) + 1;
    let new_bits = delta as u32 * w;
    assert!(new_bits <= 64, "new colour does not fit in 64 bits");
    let mut out = Vec::with_capacity(g.n());
    for u in 0..g.n() {
        let mut recs: Vec<u64> = Vec::new();
        for &v in g.neighbors(u) {
            let (a, b) = (colors[u], colors[v]);
            if a == b {
                return Err(ColoringError::NotProper(u.min(v), u.max(v)));
            }
            let j = (0..kbits).find(|&j| bit_msb(a, kbits, j) != bit_msb(b, kbits, j)).ok_or(ColoringError::OutOfRange(a))?;
            recs.push(((j as u64) << 1) | bit_msb(a, kbits, j));
        }
        recs.sort_unstable();
        recs.dedup();
        let pad = recs.last().copied().unwrap_or(0);
        recs.resize(delta, pad);
        let c = recs.iter().fold(0u64, |acc, &r| if w == 64 { r } else { (acc << w) | r });
        out.push(c);
    }
    Ok((out, new_bits))
}

/// Greedy sequential MIS: join unless a processed neighbor has joined.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyMis<L>(PhantomData<L>);

impl<L> GreedyMis<L> {
    pub fn new() -> Self {
        GreedyMis(PhantomData)
    }
}

impl<L: Clone> SequentialAlgorithm for GreedyMis<L> {
    type Label = L;
    type Output = bool;
    type Info = ();
    fn name(&self) -> String {
        "greedy_mis".into()
    }
    fn locality(&self, _: usize) -> usize {
        1
    }
    fn apply(&self, _: usize, b: &Ball<SeqLabel<L, bool, ()>>) -> Result<(bool, ()), EngineError> {
        let blocked = (0..b.degree(0)).any(|q| matches!(b.label(b.neighbor(0, q).unwrap()).written, Some((true, _))));
        Ok((!blocked, ()))
    }
}

/// Greedy sequential `(delta + 1)`-colouring: smallest colour unused by
/// processed neighbors.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyColoring<L>(PhantomData<L>);

impl<L> GreedyColoring<L> {
    pub fn new() -> Self {
        GreedyColoring(PhantomData)
    }
}

impl<L: Clone> SequentialAlgorithm for GreedyColoring<L> {
    type Label = L;
    type Output = u32;
    type Info = ();
    fn name(&self) -> String {
        "greedy_coloring".into()
    }
    fn locality(&self, _: usize) -> usize {
        1
    }
    fn apply(&self, _: usize, b: &Ball<SeqLabel<L, u32, ()>>) -> Result<(u32, ()), EngineError> {
        let used: Vec<u32> =
            (0..b.degree(0)).filter_map(|q| b.label(b.neighbor(0, q).unwrap()).written.as_ref().map(|w| w.0)).collect();
        let c = (1..).find(|c| !used.contains(c)).unwrap();
        Ok((c, ()))
    }
}

/// Node label for Luby's algorithm: id for tie-breaking plus tape words, one
/// 64-bit word per iteration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LubyLabel {
    pub id: u64,
    pub words: Vec<u64>,
}

pub fn luby_labels(ids: &IdAssignment, tape: &RandomTape) -> Vec<LubyLabel> {
    (0..ids.len()).map(|u| LubyLabel { id: ids.ids[u], words: tape.words(u).to_vec() }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LubyStatus {
    Undecided,
    In,
    Out,
}

/// Luby's MIS for a fixed number of iterations, two rounds each: undecided
/// nodes exchange `(word, id)` and local maxima join; joiners then notify
/// their neighbors, which leave. Output `None` = still undecided.
#[derive(Debug, Clone, Copy)]
pub struct LubyProtocol {
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct LubyState {
    label: LubyLabel,
    degree: usize,
    status: LubyStatus,
    joined_now: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LubyMsg {
    Value(u64, u64),
    Joined,
}

impl Protocol for LubyProtocol {
    type Label = LubyLabel;
    type State = LubyState;
    type Msg = LubyMsg;
    type Output = Option<bool>;

    fn name(&self) -> String {
        format!("luby(iterations={})", self.iterations)
    }

    fn rounds(&self, _: usize) -> usize {
        2 * self.iterations
    }

    fn init(&self, _: usize, i: NodeInit<LubyLabel>) -> LubyState {
        LubyState { label: i.label, degree: i.degree, status: LubyStatus::Undecided, joined_now: false }
    }

    fn send(&self, _: usize, round: usize, s: &LubyState) -> Vec<Option<LubyMsg>> {
        let it = (round - 1) / 2;
        let m = if round % 2 == 1 {
            (s.status == LubyStatus::Undecided)
                .then(|| LubyMsg::Value(s.label.words.get(it).copied().unwrap_or(0), s.label.id))
        } else {
            s.joined_now.then_some(LubyMsg::Joined)
        };
        vec![m; s.degree]
    }

    fn receive(&self, _: usize, round: usize, s: &mut LubyState, inbox: Vec<Option<LubyMsg>>) {
        let it = (round - 1) / 2;
        if round % 2 == 1 {
            s.joined_now = false;
            if s.status != LubyStatus::Undecided {
                return;
            }
            let mine = (s.label.words.get(it).copied().unwrap_or(0), s.label.id);
            let wins = inbox.iter().flatten().all(|m| match m {
                LubyMsg::Value(w, id) => mine > (*w, *id),
                LubyMsg::Joined => true,
            });
            if wins {
                s.status = LubyStatus::In;
                s.joined_now = true;
            }
        } else if s.status == LubyStatus::Undecided && inbox.iter().flatten().any(|m| *m == LubyMsg::Joined) {
            s.status = LubyStatus::Out;
        }
    }

    fn finalize(&self, _: usize, s: &LubyState) -> Result<Option<bool>, EngineError> {
        if s.label.words.len() < self.iterations {
            return Err(crate::tape::TapeError::Exhausted { demand: 64 * self.iterations, budget: 64 * s.label.words.len() }.into());
        }
        Ok(match s.status {
            LubyStatus::Undecided => None,
            LubyStatus::In => Some(true),
            LubyStatus::Out => Some(false),
        })
    }
}

/// Luby's MIS run until every node is decided. `rounds_used` counts
/// iterations.
pub fn luby_mis(g: &Graph, ids: &IdAssignment, tape: &RandomTape) -> Result<RunResult<bool>, ColoringError> {
    let n = g.n();
    let max_it = tape.budget() / 64;
    let mut status = vec![LubyStatus::Undecided; n];
    let mut it = 0;
    while status.contains(&LubyStatus::Undecided) {
        if it >= max_it {
            return Err(EngineError::from(crate::tape::TapeError::Exhausted { demand: 64 * (it + 1), budget: tape.budget() }).into());
        }
        let val = |u: usize| (tape.words(u)[it], ids.ids[u]);
        let joins: Vec<usize> = (0..n)
            .filter(|&u| {
                status[u] == LubyStatus::Undecided
                    && g.neighbors(u).iter().all(|&v| status[v] != LubyStatus::Undecided || val(u) > val(v))
            })
            .collect();
        for &u in &joins {
            status[u] = LubyStatus::In;
        }
        for &u in &joins {
            for &v in g.neighbors(u) {
                if status[v] == LubyStatus::Undecided {
                    status[v] = LubyStatus::Out;
                }
            }
        }
        it += 1;
    }
    Ok(RunResult {
        labels: status.iter().map(|&s| s == LubyStatus::In).collect(),
        rounds_used: it,
        locality_used: 2 * it,
        trace: None,
        max_stored: None,
    })
}

/// Checks that `g` is a single oriented cycle and returns successor and
/// predecessor arrays.
pub fn cycle_links(g: &Graph) -> Result<(Vec<usize>, Vec<usize>), ColoringError> {
    let n = g.n();
    if n < 3 || g.m() != n || g.orientation().is_none() {
        return Err(ColoringError::NotOrientedCycle);
    }
    let mut succ = vec![0; n];
    let mut pred = vec![0; n];
    for u in 0..n {
        match (g.successor(u), g.predecessor(u), g.degree(u)) {
            (Some(s), Some(p), 2) if s != p => {
                succ[u] = s;
                pred[u] = p;
            }
            _ => return Err(ColoringError::NotOrientedCycle),
        }
    }
    let mut seen = 1;
    let mut cur = succ[0];
    while cur != 0 {
        seen += 1;
        cur = succ[cur];
        if seen > n {
            break;
        }
    }
    if seen != n {
        return Err(ColoringError::NotOrientedCycle);
    }
    Ok((succ, pred))
}

/// Red = selected with no selected neighbor, with coin `coin[u]`.
pub fn red_nodes(succ: &[usize], pred: &[usize], coin: &[bool]) -> Vec<bool> {
    (0..succ.len()).map(|u| coin[u] && !coin[pred[u]] && !coin[succ[u]]).collect()
}

/// Colour at distance `j` after the nearest red node behind: red = 3, then
/// 1 for odd `j` and 2 for even `j`.
pub fn alternation_color(j: usize) -> u32 {
    if j == 0 {
        3
    } else if j % 2 == 1 {
        1
    } else {
        2
    }
}

/// The two-phase randomized 3-colouring of an oriented cycle. Coin = tape
/// bit 0. `rounds_used = 1 + longest distance from a node back to its red`.
pub fn cycle_3color_randomized(g: &Graph, tape: &RandomTape) -> Result<RunResult<u32>, ColoringError> {
    tape.require(1).map_err(EngineError::from)?;
    let (succ, pred) = cycle_links(g)?;
    let coin: Vec<bool> = (0..g.n()).map(|u| tape.bit(u, 0)).collect();
    let red = red_nodes(&succ, &pred, &coin);
    let start = red.iter().position(|&r| r).ok_or(ColoringError::NoRed)?;
    let mut labels = vec![0u32; g.n()];
    let mut j = 0;
    let mut maxj = 0;
    let mut u = start;
    for _ in 0..g.n() {
        if red[u] {
            j = 0;
        }
        labels[u] = alternation_color(j);
        maxj = maxj.max(j);
        j += 1;
        u = succ[u];
    }
    Ok(RunResult { labels, rounds_used: 1 + maxj, locality_used: 1 + maxj, trace: None, max_stored: None })
}

/// Function-view variant with a fixed lookback. The node walks back up to
/// `lookback` steps looking for a red node (coin = bit 0 of its label). With
/// `retry`, a view without any bit-0 red is recoloured from scratch using
/// bit 1 as the coin. If no red is found, the node outputs colour 1.
#[derive(Debug, Clone, Copy)]
pub struct Cycle3Bounded {
    pub lookback: usize,
    pub retry: bool,
}

impl Cycle3Bounded {
    pub fn bit_demand(&self) -> usize {
        if self.retry {
            2
        } else {
            1
        }
    }

    /// Colour from the bits at offsets `-(lookback + 1) ..= 1` (index 0 is
    /// offset `-(lookback + 1)`).
    pub fn color_from_window(&self, window: &[u64]) -> u32 {
        let l = self.lookback;
        let center = l + 1;
        for layer in 0..self.bit_demand() {
            let b = |i: usize| (window[i] >> layer) & 1 == 1;
            for j in 0..=l {
                let i = center - j;
                if b(i) && !b(i - 1) && !b(i + 1) {
                    return alternation_color(j);
                }
            }
        }
        1
    }
}

impl LocalAlgorithm for Cycle3Bounded {
    type Label = u64;
    type Output = u32;

    fn name(&self) -> String {
        format!("cycle3(lookback={}, retry={})", self.lookback, self.retry)
    }

    fn radius(&self, _: usize) -> usize {
        self.lookback + 1
    }

    fn evaluate(&self, _: usize, b: &Ball<u64>) -> Result<u32, EngineError> {
        let l = self.lookback;
        let mut window = vec![0u64; l + 3];
        let mut v = 0;
        window[l + 1] = *b.label(0);
        for k in 1..=l + 1 {
            v = b.predecessor(v).ok_or_else(|| EngineError::algorithm("cycle3 needs an oriented cycle"))?;
            window[l + 1 - k] = *b.label(v);
        }
        let s = b.successor(0).ok_or_else(|| EngineError::algorithm("cycle3 needs an oriented cycle"))?;
        window[l + 2] = *b.label(s);
        Ok(self.color_from_window(&window))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_function_mode, run_sequential, FromProtocol, Order};
    use crate::generators;
    use crate::ids::{assign_ids, IdMode};
    use crate::problems::{check_solution, Mis, ProperColoring};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn big_ids_shrink() {
        let mut rng = rng_from(3);
        for (n, rho) in [(40usize, 1usize), (30, 2)] {
            let g = generators::cycle(n).unwrap();
            // ids from [1, 2^n): n-bit numbers
            let ids: Vec<BigUint> = (0..n)
                .map(|_| {
                    let digits: Vec<u32> = (0..n.div_ceil(32)).map(|_| rng.gen()).collect();
                    let x = BigUint::from_slice(&digits) >> (32 * n.div_ceil(32) - n);
                    x | BigUint::from(1u8)
                })
                .collect();
            let mut sorted = ids.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), n);
            let res = reduce_big_ids(&g, &ids, rho).unwrap();
            let h = power_graph(&g, rho);
            check_proper(&h, &res.labels).unwrap();
            assert!(*res.labels.iter().max().unwrap() <= linial_colors(h.max_degree(), u64::MAX));
        }
    }

    #[test]
    fn primes() {
        assert_eq!(next_prime_above(4), 5);
        assert_eq!(next_prime_above(5), 7);
        assert!(is_prime(97) && !is_prime(91));
    }

    #[test]
    fn coverfree_examples() {
        let f = coverfree_family(2, 1);
        assert_eq!(f.construction, Construction::Explicit);
        assert_eq!((f.set(0), f.set(1)), (vec![0], vec![1]));
        let p = CoverFreeFamily::polynomial(5, 1, 2, 25).unwrap();
        assert_eq!(p.ground, 25);
        p.verify_exhaustive().unwrap();
        assert!(CoverFreeFamily::polynomial(5, 3, 2, 25).is_none());
        // two degree-1 polynomials agree with a third in at most 2 points out of 5
        for i in 0..25 {
            for a in 0..25 {
                for b in 0..25 {
                    if a != i && b != i {
                        let s = p.set(i);
                        let covered = s.iter().filter(|e| p.set(a).contains(e) || p.set(b).contains(e)).count();
                        assert!(covered <= 2);
                    }
                }
            }
        }
    }

    #[test]
    fn families_small_exhaustive() {
        for delta in 1..=3 {
            for k in 1..=30 {
                let f = coverfree_family(k, delta);
                assert!(f.verify_exhaustive().is_ok(), "k={k} delta={delta}");
            }
        }
    }

    #[test]
    fn broken_family_detected() {
        let f = CoverFreeFamily { k: 4, ground: 4, delta: 1, construction: Construction::Trivial };
        assert!(f.verify_exhaustive().is_err());
    }

    #[test]
    fn linial_fixed_points() {
        assert_eq!(linial_colors(2, 1 << 48), 25);
        for delta in 1..=10usize {
            let c = linial_colors(delta, 1 << 60);
            assert!(c <= LINIAL_C0 * (delta * delta) as u64, "delta={delta} c={c}");
            let q = next_prime_above(2 * delta as u64);
            assert!(c <= q * q);
        }
        assert!(linial_plan(2, 1).is_empty());
        assert_eq!(linial_colors(3, u64::MAX - 1), 49);
    }

    #[test]
    fn linial_examples() {
        let g = Graph::edgeless(1);
        let r = linial_color(&g, &IdAssignment::sequential(1)).unwrap();
        assert_eq!((r.labels.clone(), r.rounds_used), (vec![1], 0));
        let p = generators::path(2).unwrap();
        let (c, _) = linial_reduce_once(&p, &[1, 2], 2).unwrap();
        assert_ne!(c[0], c[1]);
        let c6 = generators::cycle(6).unwrap();
        let (c, k) = linial_reduce_once(&c6, &[1, 2, 3, 4, 5, 6], 6).unwrap();
        assert!(c.iter().all(|&x| x >= 1 && x <= k));
        check_proper(&c6, &c).unwrap();
        let iso = Graph::edgeless(1);
        let f = coverfree_family(9, 0);
        let (c, _) = linial_reduce_once(&iso, &[7], 9).unwrap();
        assert_eq!(c[0], f.set(6)[0] + 1);
    }

    #[test]
    fn linial_on_cycle_and_regular() {
        let g = generators::cycle(256).unwrap();
        let ids = assign_ids(&g, 3, 1, IdMode::Random).unwrap();
        let r = linial_color(&g, &ids).unwrap();
        let k = r.labels.iter().max().copied().unwrap() as u32;
        let cols: Vec<u32> = r.labels.iter().map(|&c| c as u32).collect();
        assert!(check_solution(&ProperColoring { k }, &g, &cols).unwrap().valid);
        let g = generators::random_regular(1000, 4, 3).unwrap();
        let ids = assign_ids(&g, 3, 3, IdMode::Random).unwrap();
        let r = linial_color(&g, &ids).unwrap();
        assert!(r.labels.iter().all(|&c| c <= LINIAL_C0 * 16));
        check_proper(&g, &r.labels).unwrap();
        let f = run_function_mode(&FromProtocol(LinialProtocol { delta: 4, exponent: 3, initial_range: Some(ids.range_bound - 1) }), &g, &ids.ids).unwrap();
        assert_eq!(f.labels, r.labels);
    }

    #[test]
    fn distance_coloring_examples() {
        let g = generators::cycle(20).unwrap();
        let ids = assign_ids(&g, 3, 2, IdMode::Random).unwrap();
        let r = distance_coloring(&g, 2, &ids).unwrap();
        for u in 0..20 {
            let d = g.bfs(u, 2);
            for v in 0..20 {
                if u != v && d[v] <= 2 {
                    assert_ne!(r.labels[u], r.labels[v]);
                }
            }
        }
        let all = distance_coloring(&g, 10, &ids).unwrap();
        let mut l = all.labels.clone();
        l.sort_unstable();
        l.dedup();
        assert_eq!(l.len(), 20);
        assert_eq!(distance_coloring(&g, 1, &ids).unwrap().labels, linial_color(&g, &ids).unwrap().labels);
    }

    #[test]
    fn cole_examples() {
        let p = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let (c, bits) = cole_reduce_once(&p, &[0b01, 0b11], 2).unwrap();
        // index 0 (MSB) differs: records (0,0) and (0,1)
        assert_eq!(bits, 2);
        assert_eq!(c, vec![0b00, 0b01]);
        let iso = Graph::edgeless(1);
        assert_eq!(cole_reduce_once(&iso, &[5], 3).unwrap().0, vec![0]);
        let g = generators::cycle(8).unwrap();
        let ids = assign_ids(&g, 3, 4, IdMode::Random).unwrap();
        let cols: Vec<u64> = ids.ids.iter().map(|&x| x & 0xff).collect();
        if check_proper(&g, &cols).is_ok() {
            let (c, bits) = cole_reduce_once(&g, &cols, 8).unwrap();
            assert_eq!(bits, 8);
            check_proper(&g, &c).unwrap();
        }
        assert!(cole_reduce_once(&p, &[1, 1], 2).is_err());
    }

    #[test]
    fn greedy_examples() {
        let e = Graph::edgeless(4);
        let r = run_sequential(&GreedyMis::<()>::new(), &e, &[(); 4], Order::Seeded(1)).unwrap();
        assert!(r.labels.iter().all(|&x| x));
        let r = run_sequential(&GreedyColoring::<()>::new(), &e, &[(); 4], Order::Seeded(1)).unwrap();
        assert!(r.labels.iter().all(|&x| x == 1));
        let p = generators::path(4).unwrap();
        let r = run_sequential(&GreedyMis::<()>::new(), &p, &[(); 4], Order::Given(vec![0, 1, 2, 3])).unwrap();
        assert_eq!(r.labels, vec![true, false, true, false]);
        let g = generators::random_regular(20, 3, 2).unwrap();
        let r = run_sequential(&GreedyColoring::<()>::new(), &g, &[(); 20], Order::Seeded(5)).unwrap();
        assert!(check_solution(&ProperColoring { k: 4 }, &g, &r.labels).unwrap().valid);
    }

    #[test]
    fn luby_examples() {
        let one = Graph::edgeless(1);
        let t = RandomTape::generate(1, 256, 1);
        let r = luby_mis(&one, &IdAssignment::sequential(1), &t).unwrap();
        assert_eq!((r.labels, r.rounds_used), (vec![true], 1));
        let k5 = generators::complete(5);
        let t = RandomTape::generate(5, 256, 2);
        let r = luby_mis(&k5, &IdAssignment::sequential(5), &t).unwrap();
        assert_eq!(r.labels.iter().filter(|&&x| x).count(), 1);
        assert_eq!(r.rounds_used, 1);
        let e = Graph::edgeless(6);
        let t = RandomTape::generate(6, 64, 3);
        let m = run_message_mode(&LubyProtocol { iterations: 1 }, &e, &luby_labels(&IdAssignment::sequential(6), &t)).unwrap();
        assert!(m.labels.iter().all(|&x| x == Some(true)));
    }

    #[test]
    fn luby_tape_exhaustion() {
        let g = generators::cycle(400).unwrap();
        let t = RandomTape::generate(400, 64, 3);
        assert!(matches!(
            luby_mis(&g, &IdAssignment::sequential(400), &t),
            Err(ColoringError::Engine(EngineError::Tape(_)))
        ));
    }

    #[test]
    fn luby_valid_and_views_agree() {
        for seed in 0..10 {
            let g = generators::random_regular(64, 4, seed).unwrap();
            let ids = assign_ids(&g, 3, seed, IdMode::Random).unwrap();
            let t = RandomTape::generate(64, 64 * 32, seed);
            let r = luby_mis(&g, &ids, &t).unwrap();
            assert!(check_solution(&Mis, &g, &r.labels).unwrap().valid);
            let p = LubyProtocol { iterations: r.rounds_used };
            let m = run_message_mode(&p, &g, &luby_labels(&ids, &t)).unwrap();
            let f = run_function_mode(&FromProtocol(p), &g, &luby_labels(&ids, &t)).unwrap();
            assert_eq!(m.labels, f.labels);
            assert_eq!(m.labels, r.labels.iter().map(|&x| Some(x)).collect::<Vec<_>>());
        }
    }

    #[test]
    fn cycle3_forced_tape() {
        let g = generators::cycle(3).unwrap();
        let t = RandomTape::from_blocks(1, &[1, 0, 0]);
        let r = cycle_3color_randomized(&g, &t).unwrap();
        assert_eq!(r.labels, vec![3, 1, 2]);
        let none = RandomTape::from_blocks(1, &[0, 0, 0]);
        assert_eq!(cycle_3color_randomized(&g, &none).unwrap_err(), ColoringError::NoRed);
        assert_eq!(cycle_3color_randomized(&generators::path(4).unwrap(), &t).unwrap_err(), ColoringError::NotOrientedCycle);
    }

    #[test]
    fn cycle3_sweep() {
        let g = generators::cycle(1000).unwrap();
        for seed in 0..50 {
            let t = RandomTape::generate(1000, 8, seed);
            let r = cycle_3color_randomized(&g, &t).unwrap();
            assert!(check_solution(&ProperColoring { k: 3 }, &g, &r.labels).unwrap().valid);
            assert!(r.rounds_used < 10 * 10);
        }
    }

    proptest! {
        #[test]
        fn bounded_matches_global_when_red_close(n in 5usize..40, seed in any::<u64>()) {
            let g = generators::cycle(n).unwrap();
            let t = RandomTape::generate(n, 2, seed);
            let blocks = t.blocks(2);
            let alg = Cycle3Bounded { lookback: n - 1, retry: false };
            match cycle_3color_randomized(&g, &t) {
                Ok(r) => prop_assert_eq!(run_function_mode(&alg, &g, &blocks).unwrap().labels, r.labels),
                Err(e) => prop_assert_eq!(e, ColoringError::NoRed),
            }
        }

        #[test]
        fn linial_step_keeps_proper(n in 2usize..40, d in 1usize..5, seed in any::<u64>()) {
            let g = generators::random_bounded_degree(n, d, seed).unwrap();
            let ids = assign_ids(&g, 2, seed, IdMode::Random).unwrap();
            let (c, k) = linial_reduce_once(&g, &ids.ids, ids.range_bound - 1).unwrap();
            check_proper(&g, &c).unwrap();
            prop_assert!(c.iter().all(|&x| x >= 1 && x <= k));
        }
    }
}
