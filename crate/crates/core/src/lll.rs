//! Constructive Lovász local lemma: instances with exact conditional
//! probability oracles, the two criteria, the Fischer–Ghaffari first phase
//! (shattering), an exhaustive residual finisher and Moser–Tardos.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_bigint::BigUint;
use rand::Rng;
use thiserror::Error;

use crate::dyadic::Dyadic;
use crate::graph::{Bfs, Graph};
use crate::rng::rng_from;
use crate::tape::{RandomTape, TapeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LllError {
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("event {event} has {free} free bits, above the enumeration cap")]
    OracleTooLarge { event: usize, free: u32 },
    #[error("resample budget of {0} exhausted")]
    BudgetExhausted(usize),
    #[error("no assignment avoids the residual events of the component")]
    Unsatisfiable,
    #[error("malformed instance: {0}")]
    Malformed(String),
}

/// Largest number of free bits a generic (closure) oracle enumerates.
pub const ENUM_CAP_BITS: u32 = 24;

pub type Predicate = Arc<dyn Fn(&[u64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum EventKind {
    /// Violated iff every variable equals the given value.
    Pattern { want: Vec<u64> },
    /// Violated iff the value tuple is in the (sorted) list.
    Table { violating: Vec<Vec<u64>> },
    /// Arbitrary predicate; probabilities by enumeration.
    Closure(Predicate),
}

impl fmt::Debug for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Pattern { want } => f.debug_struct("Pattern").field("want", want).finish(),
            EventKind::Table { violating } => f.debug_struct("Table").field("violating", violating).finish(),
            EventKind::Closure(_) => f.write_str("Closure(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Event {
    pub vars: Vec<usize>,
    pub kind: EventKind,
}

/// Variables (each a string of at most 64 bits) and bad events on them.
#[derive(Debug, Clone)]
pub struct LllInstance {
    pub bits: Vec<u32>,
    pub events: Vec<Event>,
    /// Relaxation exponent used by the relaxed criterion.
    pub c: u32,
    var_events: Vec<Vec<usize>>,
}

/// Values of all variables with, per variable, how many low bits are fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partial {
    pub value: Vec<u64>,
    pub fixed: Vec<u32>,
}

impl Partial {
    pub fn empty(inst: &LllInstance) -> Self {
        Partial { value: vec![0; inst.bits.len()], fixed: vec![0; inst.bits.len()] }
    }

    pub fn full(inst: &LllInstance, value: Vec<u64>) -> Self {
        Partial { value, fixed: inst.bits.clone() }
    }
}

fn low_mask(k: u32) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

impl LllInstance {
    pub fn new(bits: Vec<u32>, events: Vec<Event>, c: u32) -> Result<Self, LllError> {
        if let Some(b) = bits.iter().find(|&&b| b > 64) {
            return Err(LllError::Malformed(alloc::format!("variable with {b} bits")));
        }
        let mut var_events = vec![Vec::new(); bits.len()];
        for (i, e) in events.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &x in &e.vars {
                if x >= bits.len() || !seen.insert(x) {
                    return Err(LllError::Malformed(alloc::format!("event {i} has a bad variable list")));
                }
                var_events[x].push(i);
            }
            let arity_ok = match &e.kind {
                EventKind::Pattern { want } => want.len() == e.vars.len(),
                EventKind::Table { violating } => violating.iter().all(|t| t.len() == e.vars.len()),
                EventKind::Closure(_) => true,
            };
            if !arity_ok {
                return Err(LllError::Malformed(alloc::format!("event {i} arity mismatch")));
            }
        }
        let mut events = events;
        for e in &mut events {
            if let EventKind::Table { violating } = &mut e.kind {
                violating.sort_unstable();
                violating.dedup();
            }
        }
        Ok(LllInstance { bits, events, c, var_events })
    }

    pub fn var_events(&self, x: usize) -> &[usize] {
        &self.var_events[x]
    }

    /// Most events on one variable.
    pub fn delta_rv(&self) -> usize {
        self.var_events.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Most variables of one event.
    pub fn delta_be(&self) -> usize {
        self.events.iter().map(|e| e.vars.len()).max().unwrap_or(0)
    }

    /// Maximum degree of the dependency graph.
    pub fn delta(&self) -> usize {
        dependency_graph(self).max_degree()
    }

    fn values(&self, e: usize, assignment: &[u64]) -> Vec<u64> {
        self.events[e].vars.iter().map(|&x| assignment[x] & low_mask(self.bits[x])).collect()
    }

    pub fn violated(&self, e: usize, assignment: &[u64]) -> bool {
        let vals = self.values(e, assignment);
        match &self.events[e].kind {
            EventKind::Pattern { want } => vals == *want,
            EventKind::Table { violating } => violating.binary_search(&vals).is_ok(),
            EventKind::Closure(f) => f(&vals),
        }
    }

    /// Exact conditional probability of event `e` given the fixed bits.
    pub fn prob(&self, e: usize, p: &Partial) -> Result<Dyadic, LllError> {
        let ev = &self.events[e];
        let free: u32 = ev.vars.iter().map(|&x| self.bits[x] - p.fixed[x]).sum();
        let consistent = |x: usize, v: u64| {
            let m = low_mask(p.fixed[x]);
            v & m == p.value[x] & m
        };
        match &ev.kind {
            EventKind::Pattern { want } => {
                if ev.vars.iter().zip(want).all(|(&x, &w)| consistent(x, w)) {
                    Ok(Dyadic::pow2_inv(free))
                } else {
                    Ok(Dyadic::ZERO)
                }
            }
            EventKind::Table { violating } => {
                let count = violating.iter().filter(|t| ev.vars.iter().zip(t.iter()).all(|(&x, &v)| consistent(x, v))).count();
                Ok(Dyadic::new(count as u128, free))
            }
            EventKind::Closure(_) => {
                if free > ENUM_CAP_BITS {
                    return Err(LllError::OracleTooLarge { event: e, free });
                }
                Ok(Dyadic::new(self.count_by_enumeration(e, p) as u128, free))
            }
        }
    }

    /// Violating completions of the free bits of event `e`, by enumeration.
    pub fn count_by_enumeration(&self, e: usize, p: &Partial) -> u64 {
        let ev = &self.events[e];
        let free: Vec<(usize, u32)> =
            ev.vars.iter().flat_map(|&x| (p.fixed[x]..self.bits[x]).map(move |b| (x, b))).collect();
        let mut a = p.value.clone();
        let mut count = 0;
        for mask in 0..1u64 << free.len() {
            for (i, &(x, b)) in free.iter().enumerate() {
                a[x] = (a[x] & !(1u64 << b)) | (((mask >> i) & 1) << b);
            }
            if self.violated(e, &a) {
                count += 1;
            }
        }
        count
    }

    /// Largest prior event probability.
    pub fn max_prior(&self) -> Result<Dyadic, LllError> {
        let p = Partial::empty(self);
        let mut best = Dyadic::ZERO;
        for e in 0..self.events.len() {
            best = best.max(self.prob(e, &p)?);
        }
        Ok(best)
    }
}

/// Events adjacent iff they share a variable.
pub fn dependency_graph(inst: &LllInstance) -> Graph {
    let mut edges = BTreeSet::new();
    for evs in &inst.var_events {
        for (i, &a) in evs.iter().enumerate() {
            for &b in &evs[i + 1..] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    Graph::from_edges(inst.events.len(), &edges).expect("dependency edges are simple")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// Too close to `1/e` for the rational bracket to decide.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionReport {
    pub verdict: Verdict,
    /// Left-hand side over right-hand side; below 1 means slack.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `p (delta + 1) <= 1/e`
    Tight,
    /// `p delta^c <= 1`
    Relaxed(u32),
}

/// Rational bracket around `1/e`, scaled by `10^10`.
pub const INV_E_LO: u64 = 3_678_794_411;
pub const INV_E_HI: u64 = 3_678_794_412;
const INV_E_SCALE: u64 = 10_000_000_000;

/// Decides a criterion for probability `p` and dependency degree `delta`.
pub fn criterion_holds(p: Dyadic, delta: usize, kind: Criterion) -> CriterionReport {
    let pow2 = BigUint::from(1u8) << p.exp() as usize;
    let num = BigUint::from(p.num());
    match kind {
        Criterion::Tight => {
            let lhs = num * BigUint::from(delta as u64 + 1) * BigUint::from(INV_E_SCALE);
            let lo = BigUint::from(INV_E_LO) * &pow2;
            let hi = BigUint::from(INV_E_HI) * &pow2;
            let verdict = if lhs <= lo {
                Verdict::Holds
            } else if lhs > hi {
                Verdict::Fails
            } else {
                Verdict::Indeterminate
            };
            let margin = p.to_f64() * (delta as f64 + 1.0) * INV_E_SCALE as f64 / INV_E_LO as f64;
            CriterionReport { verdict, margin }
        }
        Criterion::Relaxed(c) => {
            let lhs = num * BigUint::from(delta as u64).pow(c);
            let verdict = if lhs <= pow2 { Verdict::Holds } else { Verdict::Fails };
            let mut dc = 1.0;
            for _ in 0..c {
                dc *= delta as f64;
            }
            CriterionReport { verdict, margin: p.to_f64() * dc }
        }
    }
}

pub fn check_criterion(inst: &LllInstance, kind: Criterion) -> Result<CriterionReport, LllError> {
    Ok(criterion_holds(inst.max_prior()?, inst.delta(), kind))
}

/// Result of the first phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShatterResult {
    pub partial: Partial,
    pub frozen: Vec<bool>,
    /// Events with non-zero conditional probability.
    pub residual_events: Vec<usize>,
    /// Components of the dependency graph induced by the residual events.
    pub components: Vec<Vec<usize>>,
    /// Largest conditional probability of any event at the end.
    pub max_residual: Dyadic,
    /// Events whose prior was already above the threshold when reached.
    pub degenerate_freezes: usize,
}

impl ShatterResult {
    pub fn max_component(&self) -> usize {
        self.components.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Dangerous threshold `1/(6 delta)` as `(p > threshold)`.
fn dangerous(p: Dyadic, delta: usize) -> bool {
    p.mul_int(6 * delta.max(1) as u128) > Dyadic::ONE
}

/// Fischer–Ghaffari first phase. Variables are taken in `order`; bit `j` of
/// variable `x` is tape bit `j` of tape node `x`.
pub fn fg_first_phase(inst: &LllInstance, order: &[usize], tape: &RandomTape) -> Result<ShatterResult, LllError> {
    let nv = inst.bits.len();
    if tape.n() < nv {
        return Err(LllError::Malformed(alloc::format!("tape covers {} variables, need {nv}", tape.n())));
    }
    tape.require(inst.bits.iter().copied().max().unwrap_or(0) as usize)?;
    let delta = inst.delta();
    let mut p = Partial::empty(inst);
    let mut frozen = vec![false; nv];
    let mut degenerate = 0;
    let mut seen = vec![false; nv];
    for &x in order {
        assert!(!core::mem::replace(&mut seen[x], true), "variable order repeats {x}");
        if frozen[x] {
            continue;
        }
        let evs = inst.var_events(x);
        let mut cur: Vec<Dyadic> = evs.iter().map(|&e| inst.prob(e, &p)).collect::<Result<_, _>>()?;
        let hot: Vec<usize> = evs.iter().zip(&cur).filter(|(_, &q)| dangerous(q, delta)).map(|(&e, _)| e).collect();
        if !hot.is_empty() {
            degenerate += hot.len();
            freeze(inst, &hot, &mut frozen);
            continue;
        }
        for j in 0..inst.bits[x] {
            if tape.bit(x, j as usize) {
                p.value[x] |= 1u64 << j;
            }
            p.fixed[x] = j + 1;
            let next: Vec<Dyadic> = evs.iter().map(|&e| inst.prob(e, &p)).collect::<Result<_, _>>()?;
            for (a, b) in cur.iter().zip(&next) {
                assert!(*b <= a.mul_int(2), "conditional probability more than doubled");
            }
            cur = next;
            let hot: Vec<usize> = evs.iter().zip(&cur).filter(|(_, &q)| dangerous(q, delta)).map(|(&e, _)| e).collect();
            if !hot.is_empty() {
                freeze(inst, &hot, &mut frozen);
                break;
            }
        }
    }
    let mut residual_events = Vec::new();
    let mut max_residual = Dyadic::ZERO;
    for e in 0..inst.events.len() {
        let q = inst.prob(e, &p)?;
        if !q.is_zero() {
            residual_events.push(e);
        }
        max_residual = max_residual.max(q);
    }
    let components = components_of(inst, &residual_events);
    Ok(ShatterResult { partial: p, frozen, residual_events, components, max_residual, degenerate_freezes: degenerate })
}

fn freeze(inst: &LllInstance, events: &[usize], frozen: &mut [bool]) {
    for &e in events {
        for &y in &inst.events[e].vars {
            frozen[y] = true;
        }
    }
}

/// Components of the dependency graph induced by `events`.
pub fn components_of(inst: &LllInstance, events: &[usize]) -> Vec<Vec<usize>> {
    let dep = dependency_graph(inst);
    let mut keep = vec![false; inst.events.len()];
    for &e in events {
        keep[e] = true;
    }
    let mut done = vec![false; inst.events.len()];
    let mut bfs = Bfs::new(dep.n());
    let mut out = Vec::new();
    for &e in events {
        if done[e] {
            continue;
        }
        bfs.run(&dep, e, usize::MAX, |v| keep[v]);
        let mut comp = bfs.order.clone();
        comp.sort_unstable();
        for &v in &comp {
            done[v] = true;
        }
        out.push(comp);
    }
    out
}

/// `1/(3 delta)` bound on residual probabilities.
pub fn within_residual_bound(p: Dyadic, delta: usize) -> bool {
    p.mul_int(3 * delta.max(1) as u128) <= Dyadic::ONE
}

/// Search-tree nodes explored before falling back to Moser–Tardos.
pub const SEARCH_CAP: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualSolution {
    /// `(variable, full value)` for every variable with free bits.
    pub assignment: Vec<(usize, u64)>,
    pub nodes: usize,
    pub fallback: bool,
}

/// Completes the free bits of a residual component. Depth-first over
/// `(variable, bit)` in increasing order, trying 0 first, so the result is
/// the lexicographically first good completion unless the search cap is hit.
pub fn solve_residual(inst: &LllInstance, component: &[usize], partial: &Partial, seed: u64) -> Result<ResidualSolution, LllError> {
    let mut comp = component.to_vec();
    comp.sort_unstable();
    let component = &comp[..];
    let mut vars: Vec<usize> = component.iter().flat_map(|&e| inst.events[e].vars.iter().copied()).collect();
    vars.sort_unstable();
    vars.dedup();
    vars.retain(|&x| partial.fixed[x] < inst.bits[x]);
    let slots: Vec<(usize, u32)> = vars.iter().flat_map(|&x| (partial.fixed[x]..inst.bits[x]).map(move |b| (x, b))).collect();
    let mut p = partial.clone();
    let mut nodes = 0;
    let found = dfs(inst, component, &slots, 0, &mut p, &mut nodes)?;
    if found == Some(true) {
        let assignment = vars.iter().map(|&x| (x, p.value[x])).collect();
        return Ok(ResidualSolution { assignment, nodes, fallback: false });
    }
    if found == Some(false) {
        return Err(LllError::Unsatisfiable);
    }
    // search cap reached
    let mut a = partial.value.clone();
    let free: Vec<u64> = (0..inst.bits.len()).map(|x| low_mask(inst.bits[x]) & !low_mask(partial.fixed[x])).collect();
    mt_core(inst, component, &mut a, &free, seed, 1_000_000)?;
    let assignment = vars.iter().map(|&x| (x, a[x])).collect();
    Ok(ResidualSolution { assignment, nodes, fallback: true })
}

/// `Some(true)` found, `Some(false)` exhausted, `None` cap hit.
fn dfs(
    inst: &LllInstance,
    comp: &[usize],
    slots: &[(usize, u32)],
    i: usize,
    p: &mut Partial,
    nodes: &mut usize,
) -> Result<Option<bool>, LllError> {
    *nodes += 1;
    if *nodes > SEARCH_CAP {
        return Ok(None);
    }
    // prune: some event already certain
    let relevant: &[usize] = if i == 0 { comp } else { inst.var_events(slots[i - 1].0) };
    for &e in relevant {
        if (i == 0 || comp.binary_search(&e).is_ok()) && inst.prob(e, p)? == Dyadic::ONE {
            return Ok(Some(false));
        }
    }
    if i == slots.len() {
        for &e in comp {
            if !inst.prob(e, p)?.is_zero() {
                return Ok(Some(false));
            }
        }
        return Ok(Some(true));
    }
    let (x, b) = slots[i];
    let (v0, f0) = (p.value[x], p.fixed[x]);
    for bit in [0u64, 1] {
        p.value[x] = (v0 & !(1u64 << b)) | (bit << b);
        p.fixed[x] = b + 1;
        match dfs(inst, comp, slots, i + 1, p, nodes)? {
            Some(true) => return Ok(Some(true)),
            None => return Ok(None),
            Some(false) => {}
        }
    }
    p.value[x] = v0;
    p.fixed[x] = f0;
    Ok(Some(false))
}

/// Resamples the `mask` bits of violated events' variables, lowest-index
/// violated event first, until none of `events` is violated.
fn mt_core(inst: &LllInstance, events: &[usize], a: &mut [u64], mask: &[u64], seed: u64, max: usize) -> Result<usize, LllError> {
    let mut rng = rng_from(seed);
    let mut in_scope = vec![false; inst.events.len()];
    for &e in events {
        in_scope[e] = true;
    }
    let mut bad: BTreeSet<usize> = events.iter().copied().filter(|&e| inst.violated(e, a)).collect();
    let mut count = 0;
    while let Some(&e) = bad.iter().next() {
        if count == max {
            return Err(LllError::BudgetExhausted(max));
        }
        count += 1;
        for &x in &inst.events[e].vars {
            a[x] = (a[x] & !mask[x]) | (rng.gen::<u64>() & mask[x]);
        }
        for &x in &inst.events[e].vars {
            for &f in inst.var_events(x) {
                if in_scope[f] {
                    if inst.violated(f, a) {
                        bad.insert(f);
                    } else {
                        bad.remove(&f);
                    }
                }
            }
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MtResult {
    pub assignment: Vec<u64>,
    pub resamples: usize,
}

/// Moser–Tardos resampling from a seeded initial sample.
pub fn moser_tardos(inst: &LllInstance, seed: u64, max_resamples: usize) -> Result<MtResult, LllError> {
    let mut rng = rng_from(seed);
    let mask: Vec<u64> = inst.bits.iter().map(|&b| low_mask(b)).collect();
    let mut a: Vec<u64> = mask.iter().map(|&m| rng.gen::<u64>() & m).collect();
    let all: Vec<usize> = (0..inst.events.len()).collect();
    let resamples = mt_core(inst, &all, &mut a, &mask, crate::rng::split_seed(seed, 1), max_resamples)?;
    Ok(MtResult { assignment: a, resamples })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FgSolution {
    pub assignment: Vec<u64>,
    pub shatter: ShatterResult,
    pub fallbacks: usize,
}

/// First phase followed by [`solve_residual`] on every component.
pub fn fg_solve(inst: &LllInstance, order: &[usize], tape: &RandomTape) -> Result<FgSolution, LllError> {
    let shatter = fg_first_phase(inst, order, tape)?;
    let mut p = shatter.partial.clone();
    let mut fallbacks = 0;
    for (i, comp) in shatter.components.iter().enumerate() {
        let sol = solve_residual(inst, comp, &shatter.partial, crate::rng::split_seed(tape.seed(), i as u64))?;
        fallbacks += sol.fallback as usize;
        for (x, v) in sol.assignment {
            p.value[x] = v;
            p.fixed[x] = inst.bits[x];
        }
    }
    // remaining free bits belong to variables of no residual event
    let assignment = p.value;
    Ok(FgSolution { assignment, shatter, fallbacks })
}

/// Sinkless orientation as an LLL instance: variable `i` is edge `i` of `g`
/// (1 = from lower to higher index); one event per node of degree exactly
/// `delta`, violated when every incident edge points in.
pub fn sinkless_to_lll(g: &Graph, delta: usize, c: u32) -> LllInstance {
    let mut events = Vec::new();
    for u in 0..g.n() {
        if g.degree(u) != delta || delta == 0 {
            continue;
        }
        let vars: Vec<usize> = (0..g.degree(u)).map(|q| g.edge_at(u, q)).collect();
        let want: Vec<u64> = g.neighbors(u).iter().map(|&v| (v < u) as u64).collect();
        events.push(Event { vars, kind: EventKind::Pattern { want } });
    }
    LllInstance::new(vec![1; g.m()], events, c).expect("sinkless instance is well formed")
}

/// Edge orientation (true = lower to higher index) from an assignment.
pub fn decode_orientation(assignment: &[u64]) -> Vec<bool> {
    assignment.iter().map(|&v| v & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::problems::{check_solution, orientation_labels, SinklessOrientation};
    use proptest::prelude::*;
    use rand::Rng;

    fn table(vars: Vec<usize>, violating: Vec<Vec<u64>>) -> Event {
        Event { vars, kind: EventKind::Table { violating } }
    }

    #[test]
    fn dependency_examples() {
        let inst = LllInstance::new(vec![1, 1, 1], vec![table(vec![0], vec![]), table(vec![1], vec![]), table(vec![2], vec![])], 3).unwrap();
        assert_eq!(dependency_graph(&inst).m(), 0);
        let all = LllInstance::new(vec![2], (0..4).map(|_| table(vec![0], vec![vec![1]])).collect(), 3).unwrap();
        assert_eq!(dependency_graph(&all).m(), 6);
        let c6 = generators::cycle(6).unwrap();
        let s = sinkless_to_lll(&c6, 2, 3);
        let d = dependency_graph(&s);
        assert!((0..6).all(|e| d.degree(e) == 2));
        assert_eq!(d.diameter(), Some(3));
    }

    #[test]
    fn sinkless_examples() {
        let e = generators::path(2).unwrap();
        assert!(sinkless_to_lll(&e, 3, 3).events.is_empty());
        let s = generators::star(3);
        let inst = sinkless_to_lll(&s, 3, 3);
        assert_eq!(inst.events.len(), 1);
        assert_eq!(inst.prob(0, &Partial::empty(&inst)).unwrap(), Dyadic::new(1, 3));
    }

    #[test]
    fn decode_matches_checker_on_all_assignments() {
        // 5-edge tree: a path of 3 with two extra leaves at the middle
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (1, 3), (2, 4), (2, 5)]).unwrap();
        let inst = sinkless_to_lll(&g, 3, 3);
        assert_eq!(inst.events.len(), 2);
        for mask in 0..32u64 {
            let a: Vec<u64> = (0..5).map(|i| (mask >> i) & 1).collect();
            let any_bad = (0..inst.events.len()).any(|e| inst.violated(e, &a));
            let labels = orientation_labels(&g, &decode_orientation(&a));
            let ok = check_solution(&SinklessOrientation { delta: 3 }, &g, &labels).unwrap().valid;
            assert_eq!(ok, !any_bad, "mask {mask:05b}");
        }
    }

    #[test]
    fn criteria_examples() {
        assert_eq!(criterion_holds(Dyadic::ZERO, 5, Criterion::Tight).verdict, Verdict::Holds);
        assert_eq!(criterion_holds(Dyadic::ZERO, 5, Criterion::Relaxed(3)).verdict, Verdict::Holds);
        assert_eq!(criterion_holds(Dyadic::new(1, 1), 1, Criterion::Tight).verdict, Verdict::Fails);
        assert_eq!(criterion_holds(Dyadic::pow2_inv(10), 10, Criterion::Relaxed(3)).verdict, Verdict::Holds);
        assert_eq!(criterion_holds(Dyadic::pow2_inv(9), 9, Criterion::Relaxed(3)).verdict, Verdict::Fails);
        // 3/8 > 0.3678794412, 11/32 < 0.3678794411
        assert_eq!(criterion_holds(Dyadic::new(3, 3), 0, Criterion::Tight).verdict, Verdict::Fails);
        assert_eq!(criterion_holds(Dyadic::new(11, 5), 0, Criterion::Tight).verdict, Verdict::Holds);
        // a dyadic inside the bracket: floor(2^40 * 0.36787944115) / 2^40
        let inside = Dyadic::new(404_487_723_164, 40);
        assert_eq!(criterion_holds(inside, 0, Criterion::Tight).verdict, Verdict::Indeterminate);
        let t = generators::branching_tree(10, 2).unwrap();
        let inst = sinkless_to_lll(&t, 10, 3);
        assert_eq!(check_criterion(&inst, Criterion::Relaxed(3)).unwrap().verdict, Verdict::Holds);
    }

    #[test]
    fn fg_examples() {
        // event with prior 0: never crosses
        let inst = LllInstance::new(vec![3], vec![table(vec![0], vec![])], 3).unwrap();
        let tape = RandomTape::generate(1, 8, 1);
        let r = fg_first_phase(&inst, &[0], &tape).unwrap();
        assert_eq!((r.partial.fixed[0], r.frozen[0]), (3, false));
        assert!(r.residual_events.is_empty());
        // prior 1/2 above 1/6: frozen before sampling
        let inst = LllInstance::new(vec![1], vec![Event { vars: vec![0], kind: EventKind::Pattern { want: vec![1] } }], 3).unwrap();
        let r = fg_first_phase(&inst, &[0], &tape).unwrap();
        assert!(r.frozen[0]);
        assert_eq!(r.partial.fixed[0], 0);
        assert_eq!(r.degenerate_freezes, 1);
        let s = fg_solve(&inst, &[0], &tape).unwrap();
        assert_eq!(s.assignment, vec![0]);
    }

    #[test]
    fn residual_examples() {
        let inst = LllInstance::new(vec![1, 1], vec![table(vec![0, 1], vec![vec![0, 0]])], 3).unwrap();
        let p = Partial::empty(&inst);
        let empty = solve_residual(&inst, &[], &p, 1).unwrap();
        assert!(empty.assignment.is_empty());
        let s = solve_residual(&inst, &[0], &p, 1).unwrap();
        assert_eq!(s.assignment, vec![(0, 0), (1, 1)]);
        let hopeless = LllInstance::new(vec![1], vec![table(vec![0], vec![vec![0], vec![1]])], 3).unwrap();
        assert_eq!(solve_residual(&hopeless, &[0], &Partial::empty(&hopeless), 1), Err(LllError::Unsatisfiable));
    }

    #[test]
    fn fg_end_to_end_tree() {
        let g = generators::branching_tree(10, 3).unwrap();
        let inst = sinkless_to_lll(&g, 10, 3);
        let delta = inst.delta();
        let order: Vec<usize> = (0..g.m()).collect();
        for seed in 0..5 {
            let tape = RandomTape::generate(g.m(), 1, seed);
            let s = fg_solve(&inst, &order, &tape).unwrap();
            assert!(within_residual_bound(s.shatter.max_residual, delta));
            assert!((0..inst.events.len()).all(|e| !inst.violated(e, &s.assignment)));
            let labels = orientation_labels(&g, &decode_orientation(&s.assignment));
            assert!(check_solution(&SinklessOrientation { delta: 10 }, &g, &labels).unwrap().valid);
        }
    }

    #[test]
    fn mt_examples() {
        let none = LllInstance::new(vec![4, 4], vec![], 3).unwrap();
        let r = moser_tardos(&none, 3, 0).unwrap();
        assert_eq!(r.resamples, 0);
        let never = LllInstance::new(vec![2], vec![table(vec![0], vec![])], 3).unwrap();
        assert_eq!(moser_tardos(&never, 3, 0).unwrap().resamples, 0);
        let g = generators::branching_tree(10, 3).unwrap();
        let inst = sinkless_to_lll(&g, 10, 3);
        for seed in 0..30 {
            let r = moser_tardos(&inst, seed, 10 * g.n()).unwrap();
            assert!((0..inst.events.len()).all(|e| !inst.violated(e, &r.assignment)));
        }
        let hopeless = LllInstance::new(vec![1], vec![table(vec![0], vec![vec![0], vec![1]])], 3).unwrap();
        assert_eq!(moser_tardos(&hopeless, 1, 50), Err(LllError::BudgetExhausted(50)));
    }

    #[test]
    fn closure_oracle_matches_table() {
        let f: Predicate = Arc::new(|v: &[u64]| (v[0] + v[1]) % 3 == 0);
        let mut viol = Vec::new();
        for a in 0..8u64 {
            for b in 0..4u64 {
                if (a + b) % 3 == 0 {
                    viol.push(vec![a, b]);
                }
            }
        }
        let inst = LllInstance::new(
            vec![3, 2],
            vec![Event { vars: vec![0, 1], kind: EventKind::Closure(f) }, table(vec![0, 1], viol)],
            3,
        )
        .unwrap();
        let mut p = Partial::empty(&inst);
        assert_eq!(inst.prob(0, &p).unwrap(), inst.prob(1, &p).unwrap());
        p.value[0] = 0b101;
        p.fixed[0] = 2;
        assert_eq!(inst.prob(0, &p).unwrap(), inst.prob(1, &p).unwrap());
    }

    proptest! {
        #[test]
        fn oracle_is_exact(
            bits in proptest::collection::vec(1u32..5, 1..4),
            seed in any::<u64>(),
            fix in proptest::collection::vec(0u32..5, 4),
        ) {
            let mut rng = rng_from(seed);
            let k = bits.len();
            let vars: Vec<usize> = (0..k).collect();
            let mut viol = Vec::new();
            for _ in 0..rng.gen_range(0..10) {
                viol.push(bits.iter().map(|&b| rng.gen::<u64>() & low_mask(b)).collect::<Vec<u64>>());
            }
            let want: Vec<u64> = bits.iter().map(|&b| rng.gen::<u64>() & low_mask(b)).collect();
            let inst = LllInstance::new(
                bits.clone(),
                vec![table(vars.clone(), viol), Event { vars, kind: EventKind::Pattern { want } }],
                3,
            ).unwrap();
            let mut p = Partial::empty(&inst);
            for x in 0..k {
                p.fixed[x] = fix[x].min(bits[x]);
                p.value[x] = rng.gen::<u64>() & low_mask(p.fixed[x]);
            }
            let free: u32 = (0..k).map(|x| bits[x] - p.fixed[x]).sum();
            for e in 0..2 {
                let brute = Dyadic::new(inst.count_by_enumeration(e, &p) as u128, free);
                prop_assert_eq!(inst.prob(e, &p).unwrap(), brute);
            }
        }

        #[test]
        fn fg_invariants_on_trees(layers in 1usize..4, delta in 4usize..11, seed in any::<u64>()) {
            let g = generators::branching_tree(delta, layers).unwrap();
            let inst = sinkless_to_lll(&g, delta, 3);
            let order: Vec<usize> = crate::engine::random_order(g.m(), seed);
            let tape = RandomTape::generate(g.m(), 1, seed);
            let s = fg_solve(&inst, &order, &tape).unwrap();
            let sh = &s.shatter;
            for x in 0..g.m() {
                prop_assert!(sh.frozen[x] || sh.partial.fixed[x] == 1);
            }
            if check_criterion(&inst, Criterion::Relaxed(3)).unwrap().verdict == Verdict::Holds {
                prop_assert!(within_residual_bound(sh.max_residual, inst.delta()));
            }
            prop_assert!((0..inst.events.len()).all(|e| !inst.violated(e, &s.assignment)));
        }
    }
}
