//! Translations between models: SLOCAL to LOCAL (through a network
//! decomposition or a distance colouring), sequential composition,
//! derandomization by conditional expectations, slowdown, and the
//! constant-size speedup with fake identifiers.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::ball::Ball;
use crate::decomposition::{
    ball_carving_sequential, cluster_diameter, distributed_decomposition, mpx_cap, mpx_decomposition, validate,
    NetworkDecomposition,
};
use crate::dyadic::Dyadic;
use crate::engine::{
    run_function_mode, run_function_mode_as, run_message_mode_as, run_sequential, EngineError, LocalAlgorithm, NodeInit,
    Order, Protocol, RunResult, SeqLabel, SeqResult, SequentialAlgorithm,
};
use crate::graph::{power_graph, Graph};
use crate::ids::{range_bound, IdError};
use crate::lll::{dependency_graph, Event, EventKind, LllError, LllInstance};
use crate::problems::{check_solution, CheckReport, LocalProblem, ProblemError};
use crate::symmetry::{ceil_log2, cycle_links, linial_colors, ColoringError, LinialProtocol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("not a valid decomposition of G^{t}: {violations} violations")]
    InvalidDecomposition { t: usize, violations: usize },
    #[error("node {node} (cluster {cluster}) read node {other} of another cluster with the same colour")]
    Interference { node: usize, cluster: u64, other: usize },
    #[error("replay in the witness order disagrees at node {0}")]
    ReplayMismatch(usize),
    #[error("expected number of failures is {0}, not below 1")]
    NoGoodStart(Dyadic),
    #[error("conditional expectation increased at step {0}")]
    NotMonotone(usize),
    #[error("final expectation {expected} does not match {found} checker violations")]
    OracleMismatch { expected: Dyadic, found: usize },
    #[error("{free} free bits exceed the enumeration cap of {cap}")]
    EnumerationTooLarge { free: u32, cap: u32 },
    #[error("speedup inequality fails: {lhs} nodes within distance {radius} but n0 = {n0}")]
    SpeedupInequality { lhs: u128, radius: usize, n0: usize },
    #[error("fake ids need {colors} colours, above the range {range} of the simulated size")]
    ColorRange { colors: u64, range: u64 },
    #[error("inner algorithm needs radius {got} at n0, more than t0 = {t0}")]
    InnerTooSlow { got: usize, t0: usize },
    #[error("id {id} outside [1, {bound})")]
    IdRange { id: u64, bound: u64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Lll(#[from] LllError),
    #[error(transparent)]
    Ids(#[from] IdError),
}

fn check_len<T>(g: &Graph, xs: &[T]) -> Result<(), EngineError> {
    if xs.len() != g.n() {
        return Err(EngineError::LabelCount { expected: g.n(), got: xs.len() });
    }
    Ok(())
}

/// A compiled SLOCAL run together with its witness order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledRun<O, I> {
    pub result: RunResult<O>,
    pub infos: Vec<I>,
    /// Sequential order that reproduces `result.labels`.
    pub witness_order: Vec<usize>,
    /// Rounds charged to each colour class.
    pub class_rounds: Vec<usize>,
}

/// Replays `order` through the sequential engine and compares outputs.
pub fn replay_matches<A>(alg: &A, g: &Graph, inputs: &[A::Label], order: &[usize], labels: &[A::Output]) -> Result<(), CompileError>
where
    A: SequentialAlgorithm,
    A::Output: PartialEq,
{
    let replay = run_sequential(alg, g, inputs, Order::Given(order.to_vec()))?;
    match replay.labels.iter().zip(labels).position(|(a, b)| a != b) {
        Some(v) => Err(CompileError::ReplayMismatch(v)),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// SLOCAL -> LOCAL through a network decomposition

/// How the decomposition of `G^t` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decomposer {
    /// Sequential ball carving; not a distributed procedure, so charged no rounds.
    BallCarving,
    Distributed,
    Mpx { seed: u64 },
}

/// Decomposition of `G^t` and the rounds of `G` it costs (one round of
/// `G^t` is `t` rounds of `G`).
pub fn decompose_power(g: &Graph, t: usize, ids: &[u64], how: Decomposer) -> (NetworkDecomposition, usize) {
    let t = t.max(1);
    let h = power_graph(g, t);
    match how {
        Decomposer::BallCarving => (ball_carving_sequential(&h).0, 0),
        Decomposer::Distributed => {
            let (nd, trace) = distributed_decomposition(&h, ids);
            (nd, trace.rounds * t)
        }
        Decomposer::Mpx { seed } => {
            let (nd, stats) = mpx_decomposition(&h, seed);
            // each repetition: cap rounds of growth plus one to settle boundaries
            (nd, stats.len() * (mpx_cap(h.n()) + 1) * t)
        }
    }
}

/// Runs `alg` colour class by colour class of `nd`, a decomposition of
/// `G^t`. Clusters of one class are simulated independently against the
/// state left by earlier classes; inside a cluster the leader (smallest id)
/// processes members by increasing id. Every read is checked against the
/// other clusters of the same class, and the witness order is replayed.
pub fn slocal_via_decomposition<A>(
    alg: &A,
    g: &Graph,
    inputs: &[A::Label],
    ids: &[u64],
    nd: &NetworkDecomposition,
    decomposition_rounds: usize,
) -> Result<CompiledRun<A::Output, A::Info>, CompileError>
where
    A: SequentialAlgorithm,
    A::Output: PartialEq,
{
    check_len(g, inputs)?;
    check_len(g, ids)?;
    let n = g.n();
    let t = alg.locality(n);
    let h = power_graph(g, t.max(1));
    let report = validate(&h, nd);
    if !report.valid {
        return Err(CompileError::InvalidDecomposition { t, violations: report.violations.len() });
    }
    let mut by_color: BTreeMap<u32, Vec<(u64, Vec<usize>)>> = BTreeMap::new();
    for ((c, id), members) in nd.clusters() {
        by_color.entry(c).or_default().push((id, members));
    }
    let mut written: Vec<Option<(A::Output, A::Info)>> = vec![None; n];
    let mut order = Vec::with_capacity(n);
    let mut class_rounds = Vec::new();
    for (c, clusters) in by_color {
        let base = written.clone();
        let mut updates = Vec::new();
        let mut dmax = 0;
        for (cid, mut members) in clusters {
            members.sort_by_key(|&v| ids[v]);
            dmax = dmax.max(cluster_diameter(&h, &members, nd.kind).unwrap_or(0));
            let mut own: BTreeMap<usize, (A::Output, A::Info)> = BTreeMap::new();
            for &v in &members {
                let ball = Ball::extract(g, v, t, |x| SeqLabel {
                    input: inputs[x].clone(),
                    written: own.get(&x).cloned().or_else(|| base[x].clone()),
                });
                for i in 0..ball.len() {
                    let x = ball.handle(i);
                    if nd.color[x] == c && nd.cluster[x] != cid {
                        return Err(CompileError::Interference { node: v, cluster: cid, other: x });
                    }
                }
                let w = alg.apply(n, &ball)?;
                if ball.violated() {
                    return Err(EngineError::LocalityViolation { node: v, radius: t }.into());
                }
                own.insert(v, w);
                order.push(v);
            }
            updates.extend(own);
        }
        for (v, w) in updates {
            written[v] = Some(w);
        }
        class_rounds.push(t * dmax + t);
    }
    let (labels, infos): (Vec<_>, Vec<_>) = written.into_iter().map(|w| w.expect("every node is clustered")).unzip();
    replay_matches(alg, g, inputs, &order, &labels)?;
    let rounds = decomposition_rounds + class_rounds.iter().sum::<usize>();
    Ok(CompiledRun {
        result: RunResult { labels, rounds_used: rounds, locality_used: t, trace: None, max_stored: None },
        infos,
        witness_order: order,
        class_rounds,
    })
}

// ---------------------------------------------------------------------------
// SLOCAL -> LOCAL through a distance colouring

/// Degree bound of `G^t` when `G` has maximum degree `delta`.
pub fn power_degree_bound(delta: usize, t: usize) -> usize {
    let mut total: usize = 0;
    let mut layer: usize = delta;
    for _ in 0..t {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(delta.saturating_sub(1));
    }
    total
}

/// `seq` as a LOCAL algorithm: colour `G^t` with Linial's algorithm, then
/// process colour classes in order, ties broken by id. Labels carry the
/// node's id next to its input; `delta` bounds the maximum degree and ids lie
/// in `[1, n^exponent)`.
#[derive(Debug, Clone)]
pub struct CompiledViaColoring<A> {
    pub inner: A,
    pub delta: usize,
    pub exponent: u32,
}

impl<A: SequentialAlgorithm> CompiledViaColoring<A> {
    pub fn new(inner: A, delta: usize, exponent: u32) -> Self {
        CompiledViaColoring { inner, delta, exponent }
    }

    fn t(&self, n: usize) -> usize {
        self.inner.locality(n).max(1)
    }

    pub fn linial(&self, n: usize) -> LinialProtocol {
        LinialProtocol::new(power_degree_bound(self.delta, self.t(n)), self.exponent)
    }

    /// Upper bound on the number of colour classes.
    pub fn classes(&self, n: usize) -> u64 {
        let p = self.linial(n);
        linial_colors(p.delta, range_bound(n, self.exponent) - 1)
    }

    /// Distributed execution on the whole graph.
    pub fn run(&self, g: &Graph, inputs: &[A::Label], ids: &[u64]) -> Result<CompiledRun<A::Output, A::Info>, CompileError> {
        check_len(g, inputs)?;
        check_len(g, ids)?;
        let n = g.n();
        let bound = range_bound(n, self.exponent);
        if let Some(&id) = ids.iter().find(|&&id| id == 0 || id >= bound) {
            return Err(CompileError::IdRange { id, bound });
        }
        let t = self.t(n);
        let lin = self.linial(n);
        let h = power_graph(g, t);
        let colors = run_message_mode_as(&lin, &h, ids, n)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| (colors.labels[v], ids[v]));
        let SeqResult { labels, infos, .. } = run_sequential(&self.inner, g, inputs, Order::Given(order.clone()))?;
        let used = colors.labels.iter().copied().max().unwrap_or(0) as usize;
        let class_rounds = vec![t; used];
        let rounds = colors.rounds_used * t + t * used;
        Ok(CompiledRun {
            result: RunResult { labels, rounds_used: rounds, locality_used: self.radius(n), trace: None, max_stored: None },
            infos,
            witness_order: order,
            class_rounds,
        })
    }
}

impl<A: SequentialAlgorithm> LocalAlgorithm for CompiledViaColoring<A> {
    type Label = (A::Label, u64);
    type Output = A::Output;

    fn name(&self) -> String {
        format!("via_coloring({})", self.inner.name())
    }

    fn radius(&self, n: usize) -> usize {
        let t = self.t(n);
        let k = self.linial(n).plan(n).len();
        let r = usize::try_from(self.classes(n)).unwrap_or(usize::MAX);
        t.saturating_mul(r.saturating_add(k).saturating_add(2))
    }

    fn evaluate(&self, n: usize, ball: &Ball<(A::Label, u64)>) -> Result<A::Output, EngineError> {
        let t = self.t(n);
        let h = power_graph(&ball.to_graph(), t);
        let ids: Vec<u64> = ball.nodes().iter().map(|x| x.label.1).collect();
        let colors = run_message_mode_as(&self.linial(n), &h, &ids, n)?.labels;
        // any node the center depends on is reached by a chain of strictly
        // decreasing colours, each step at most t hops
        let reach = t.saturating_mul(usize::try_from(self.classes(n)).unwrap_or(usize::MAX));
        let mut sim: Vec<usize> = (0..ball.len()).filter(|&v| ball.dist(v) <= reach).collect();
        sim.sort_by_key(|&v| (colors[v], ids[v]));
        let mut written: Vec<Option<(A::Output, A::Info)>> = vec![None; ball.len()];
        for v in sim {
            let sb = ball
                .sub_ball(v, t, |x| SeqLabel { input: ball.label(x).0.clone(), written: written[x].clone() })
                .map_err(|_| EngineError::LocalityViolation { node: v, radius: self.radius(n) })?;
            let w = self.inner.apply(n, &sb)?;
            if sb.violated() {
                ball.flag_violation();
            }
            written[v] = Some(w);
        }
        Ok(written.swap_remove(0).expect("center is simulated").0)
    }
}

// ---------------------------------------------------------------------------
// Sequential composition

/// Stored per node by a composed algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedInfo<O1, I1, I2> {
    /// First-stage results computed while processing this node, by handle.
    pub(crate) fresh: Vec<(usize, O1, I1)>,
    pub info2: I2,
}

impl<O1, I1, I2> ComposedInfo<O1, I1, I2> {
    pub fn fresh_count(&self) -> usize {
        self.fresh.len()
    }
}

/// `second` runs on `(input, first's output)`. Processing `u` first
/// simulates `first` on every node of `B(u, t2)` whose result is not stored
/// yet, then applies `second` at `u`.
#[derive(Debug, Clone)]
pub struct Composed<A1, A2> {
    pub first: A1,
    pub second: A2,
}

pub fn compose_sequential<A1, A2>(first: A1, second: A2) -> Composed<A1, A2>
where
    A1: SequentialAlgorithm,
    A2: SequentialAlgorithm<Label = (A1::Label, A1::Output)>,
{
    Composed { first, second }
}

impl<A1, A2> SequentialAlgorithm for Composed<A1, A2>
where
    A1: SequentialAlgorithm,
    A2: SequentialAlgorithm<Label = (A1::Label, A1::Output)>,
{
    type Label = A1::Label;
    type Output = A2::Output;
    type Info = ComposedInfo<A1::Output, A1::Info, A2::Info>;

    fn name(&self) -> String {
        format!("{};{}", self.first.name(), self.second.name())
    }

    fn locality(&self, n: usize) -> usize {
        self.first.locality(n) + 2 * self.second.locality(n)
    }

    fn apply(
        &self,
        n: usize,
        ball: &Ball<SeqLabel<A1::Label, A2::Output, Self::Info>>,
    ) -> Result<(A2::Output, Self::Info), EngineError> {
        let (t1, t2) = (self.first.locality(n), self.second.locality(n));
        let local: BTreeMap<usize, usize> = (0..ball.len()).map(|i| (ball.handle(i), i)).collect();
        let mut known: BTreeMap<usize, (A1::Output, A1::Info)> = BTreeMap::new();
        for x in ball.nodes() {
            if let Some((_, info)) = &x.label.written {
                for (h, o1, i1) in &info.fresh {
                    if let Some(&lx) = local.get(h) {
                        known.insert(lx, (o1.clone(), i1.clone()));
                    }
                }
            }
        }
        let outside = |_| EngineError::LocalityViolation { node: ball.handle(0), radius: t1 + 2 * t2 };
        let mut fresh = Vec::new();
        for v in 0..ball.len() {
            if ball.dist(v) > t2 || known.contains_key(&v) {
                continue;
            }
            let sb = ball
                .sub_ball(v, t1, |x| SeqLabel { input: ball.label(x).input.clone(), written: known.get(&x).cloned() })
                .map_err(outside)?;
            let (o1, i1) = self.first.apply(n, &sb)?;
            if sb.violated() {
                ball.flag_violation();
            }
            fresh.push((ball.handle(v), o1.clone(), i1.clone()));
            known.insert(v, (o1, i1));
        }
        let sb = ball
            .sub_ball(0, t2, |x| SeqLabel {
                input: (ball.label(x).input.clone(), known[&x].0.clone()),
                written: ball.label(x).written.as_ref().map(|(o2, info)| (o2.clone(), info.info2.clone())),
            })
            .map_err(outside)?;
        let (o2, info2) = self.second.apply(n, &sb)?;
        if sb.violated() {
            ball.flag_violation();
        }
        Ok((o2, ComposedInfo { fresh, info2 }))
    }

    fn info_size(&self, info: &Self::Info) -> usize {
        info.fresh.len() + self.second.info_size(&info.info2)
    }
}

/// Witness for a composed run: the order in which first-stage results were
/// produced, and those results.
pub fn composed_witness<O2, O1: Clone, I1, I2>(res: &SeqResult<O2, ComposedInfo<O1, I1, I2>>) -> (Vec<usize>, Vec<O1>) {
    let mut sigma = Vec::with_capacity(res.labels.len());
    let mut out: Vec<Option<O1>> = vec![None; res.labels.len()];
    for &u in &res.order {
        for (h, o1, _) in &res.infos[u].fresh {
            sigma.push(*h);
            out[*h] = Some(o1.clone());
        }
    }
    (sigma, out.into_iter().map(|o| o.expect("every node gets a first-stage result")).collect())
}

// ---------------------------------------------------------------------------
// Derandomization

/// Exact conditional failure probabilities of a randomized algorithm whose
/// label at each node is its block of random bits.
pub trait FailureOracle {
    /// Nodes whose failure indicator can depend on the block of `u`.
    fn influenced(&self, g: &Graph, u: usize) -> Vec<usize>;
    /// `P(X(w) = 1)` with the blocks in `fixed` set and the others uniform.
    fn failure_prob(&self, g: &Graph, w: usize, fixed: &[Option<u64>]) -> Result<Dyadic, CompileError>;
}

/// Does `alg` (advertised size `n`) produce a violation of `problem` at `w`
/// under `labels`? Only `B(w, r + t)` is read.
pub fn fails_at<A, P>(alg: &A, problem: &P, g: &Graph, n: usize, labels: &[A::Label], w: usize) -> Result<bool, EngineError>
where
    A: LocalAlgorithm,
    P: LocalProblem<Label = A::Output>,
{
    let (r, t) = (problem.radius(), alg.radius(n));
    let near = g.ball_nodes(w, r);
    let mut outs: BTreeMap<usize, A::Output> = BTreeMap::new();
    for &v in &near {
        let b = Ball::extract(g, v, t, |x| labels[x].clone());
        let y = alg.evaluate(n, &b)?;
        if b.violated() {
            return Err(EngineError::LocalityViolation { node: v, radius: t });
        }
        if !problem.label_ok(g, v, &y) {
            return Ok(true);
        }
        outs.insert(v, y);
    }
    let any = outs[&w].clone();
    let b = Ball::extract(g, w, r, |x| outs.get(&x).cloned().unwrap_or_else(|| any.clone()));
    Ok(problem.allowed(&b).is_err())
}

/// Generic oracle: enumerates the free bits of `B(w, r + t)`.
pub struct EnumerationOracle<'a, A, P> {
    pub alg: &'a A,
    pub problem: &'a P,
    pub bits: u32,
    pub cap: u32,
}

impl<'a, A, P> EnumerationOracle<'a, A, P> {
    pub fn new(alg: &'a A, problem: &'a P, bits: u32) -> Self {
        EnumerationOracle { alg, problem, bits, cap: crate::lll::ENUM_CAP_BITS }
    }
}

impl<A, P> FailureOracle for EnumerationOracle<'_, A, P>
where
    A: LocalAlgorithm<Label = u64>,
    P: LocalProblem<Label = A::Output>,
{
    fn influenced(&self, g: &Graph, u: usize) -> Vec<usize> {
        g.ball_nodes(u, self.problem.radius() + self.alg.radius(g.n()))
    }

    fn failure_prob(&self, g: &Graph, w: usize, fixed: &[Option<u64>]) -> Result<Dyadic, CompileError> {
        let reach = g.ball_nodes(w, self.problem.radius() + self.alg.radius(g.n()));
        let free: Vec<usize> = reach.iter().copied().filter(|&x| fixed[x].is_none()).collect();
        let total = self.bits as usize * free.len();
        if total > self.cap as usize {
            return Err(CompileError::EnumerationTooLarge { free: total as u32, cap: self.cap });
        }
        let mut labels: Vec<u64> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
        let mask = if self.bits >= 64 { u64::MAX } else { (1u64 << self.bits) - 1 };
        let mut bad: u128 = 0;
        for a in 0..(1u64 << total) {
            for (i, &x) in free.iter().enumerate() {
                labels[x] = (a >> (i * self.bits as usize)) & mask;
            }
            bad += fails_at(self.alg, self.problem, g, g.n(), &labels, w)? as u128;
        }
        Ok(Dyadic::new(bad, total as u32))
    }
}

/// Exact oracle for the two-attempt cycle colouring with whole-cycle views
/// (`Cycle3Bounded { lookback >= n - 1, retry: true }`, block bit 0 = first
/// coin, bit 1 = retry coin). Every node fails exactly when neither coin
/// layer has a red node anywhere, so `P(X(w) = 1)` is a product of two
/// counts of cyclic strings without the pattern `010`.
pub struct CycleRetryOracle {
    /// Nodes in cycle order.
    ring: Vec<usize>,
}

impl CycleRetryOracle {
    pub fn new(g: &Graph) -> Result<Self, CompileError> {
        let (succ, _) = cycle_links(g)?;
        if g.n() > 63 {
            return Err(CompileError::EnumerationTooLarge { free: 2 * g.n() as u32, cap: 126 });
        }
        let mut ring = vec![0];
        while ring.len() < g.n() {
            ring.push(succ[*ring.last().unwrap()]);
        }
        Ok(CycleRetryOracle { ring })
    }
}

/// Cyclic binary strings agreeing with `fixed` that contain no `i` with
/// `x[i-1], x[i], x[i+1] = 0, 1, 0`. Needs `fixed.len() >= 3`.
pub fn count_red_free(fixed: &[Option<bool>]) -> u128 {
    let n = fixed.len();
    assert!(n >= 3);
    let ok = |i: usize, b: u8| fixed[i].map_or(true, |f| f == (b == 1));
    let red = |a: u8, b: u8, c: u8| a == 0 && b == 1 && c == 0;
    let mut total = 0u128;
    for x0 in 0..2u8 {
        for x1 in 0..2u8 {
            if !ok(0, x0) || !ok(1, x1) {
                continue;
            }
            // dp[a][b]: counts with (x[i-1], x[i]) = (a, b)
            let mut dp = [[0u128; 2]; 2];
            dp[x0 as usize][x1 as usize] = 1;
            for i in 2..n {
                let mut next = [[0u128; 2]; 2];
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        let c0 = dp[a as usize][b as usize];
                        if c0 == 0 {
                            continue;
                        }
                        for c in 0..2u8 {
                            if ok(i, c) && !red(a, b, c) {
                                next[b as usize][c as usize] += c0;
                            }
                        }
                    }
                }
                dp = next;
            }
            for a in 0..2u8 {
                for b in 0..2u8 {
                    if !red(a, b, x0) && !red(b, x0, x1) {
                        total += dp[a as usize][b as usize];
                    }
                }
            }
        }
    }
    total
}

impl FailureOracle for CycleRetryOracle {
    fn influenced(&self, _: &Graph, _: usize) -> Vec<usize> {
        let mut all = self.ring.clone();
        all.sort_unstable();
        all
    }

    fn failure_prob(&self, _: &Graph, _: usize, fixed: &[Option<u64>]) -> Result<Dyadic, CompileError> {
        let layer = |k: u32| -> Vec<Option<bool>> { self.ring.iter().map(|&v| fixed[v].map(|b| (b >> k) & 1 == 1)).collect() };
        let free = self.ring.iter().filter(|&&v| fixed[v].is_none()).count() as u32;
        let both = count_red_free(&layer(0)) * count_red_free(&layer(1));
        Ok(Dyadic::new(both, 2 * free))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derandomized<O> {
    /// The fixed block of every node.
    pub blocks: Vec<u64>,
    /// `E[sum X(u)]` before any fixing, then after each step.
    pub trace: Vec<Dyadic>,
    pub order: Vec<usize>,
    pub result: RunResult<O>,
    pub report: CheckReport,
}

/// Method of conditional expectations: visits `order`, fixing each node's
/// whole `bits`-bit block to the smallest value minimizing the expected
/// number of failures. Only indicators near the fixed node are recomputed.
pub fn derandomize<A, P, F>(
    alg: &A,
    problem: &P,
    g: &Graph,
    bits: u32,
    order: &[usize],
    oracle: &F,
) -> Result<Derandomized<A::Output>, CompileError>
where
    A: LocalAlgorithm<Label = u64>,
    P: LocalProblem<Label = A::Output>,
    F: FailureOracle + ?Sized,
{
    let n = g.n();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&u| u >= n || core::mem::replace(&mut seen[u], true)) {
        return Err(EngineError::BadOrder.into());
    }
    if bits > 16 {
        return Err(CompileError::EnumerationTooLarge { free: bits, cap: 16 });
    }
    let mut fixed: Vec<Option<u64>> = vec![None; n];
    let mut p: Vec<Dyadic> = (0..n).map(|w| oracle.failure_prob(g, w, &fixed)).collect::<Result<_, _>>()?;
    let mut e: Dyadic = p.iter().copied().sum();
    if e >= Dyadic::ONE {
        return Err(CompileError::NoGoodStart(e));
    }
    let mut trace = vec![e];
    for (step, &u) in order.iter().enumerate() {
        let infl = oracle.influenced(g, u);
        let old: Dyadic = infl.iter().map(|&w| p[w]).sum();
        let mut best: Option<(Dyadic, u64, Vec<Dyadic>)> = None;
        for b in 0..(1u64 << bits) {
            fixed[u] = Some(b);
            let vals: Vec<Dyadic> = infl.iter().map(|&w| oracle.failure_prob(g, w, &fixed)).collect::<Result<_, _>>()?;
            let s: Dyadic = vals.iter().copied().sum();
            if best.as_ref().map_or(true, |(bs, _, _)| s < *bs) {
                best = Some((s, b, vals));
            }
        }
        let (s, b, vals) = best.expect("at least one candidate");
        fixed[u] = Some(b);
        for (&w, v) in infl.iter().zip(vals) {
            p[w] = v;
        }
        let next = (e + s).checked_sub(old).ok_or(CompileError::NotMonotone(step))?;
        if next > e {
            return Err(CompileError::NotMonotone(step));
        }
        e = next;
        trace.push(e);
    }
    let blocks: Vec<u64> = fixed.into_iter().map(|b| b.unwrap()).collect();
    let result = run_function_mode(alg, g, &blocks)?;
    let report = check_solution(problem, g, &result.labels)?;
    if !e.is_integer() || e.floor() != report.violations.len() as u128 {
        return Err(CompileError::OracleMismatch { expected: e, found: report.violations.len() });
    }
    Ok(Derandomized { blocks, trace, order: order.to_vec(), result, report })
}

// ---------------------------------------------------------------------------
// Slowdown

/// `inner` told that the graph has `f(n)` nodes. With an id check, every
/// node verifies that its id lies in `[1, f(n)^C)`.
pub struct Slowdown<A: LocalAlgorithm, F> {
    pub inner: A,
    pub f: F,
    id_check: Option<(fn(&A::Label) -> u64, u32)>,
}

pub fn slowdown<A: LocalAlgorithm, F: Fn(usize) -> usize>(inner: A, f: F) -> Slowdown<A, F> {
    Slowdown { inner, f, id_check: None }
}

impl<A: LocalAlgorithm, F> Slowdown<A, F> {
    pub fn with_id_check(mut self, id_of: fn(&A::Label) -> u64, exponent: u32) -> Self {
        self.id_check = Some((id_of, exponent));
        self
    }
}

impl<A: LocalAlgorithm, F: Fn(usize) -> usize> LocalAlgorithm for Slowdown<A, F> {
    type Label = A::Label;
    type Output = A::Output;

    fn name(&self) -> String {
        format!("slowdown({})", self.inner.name())
    }

    fn radius(&self, n: usize) -> usize {
        self.inner.radius((self.f)(n))
    }

    fn evaluate(&self, n: usize, ball: &Ball<A::Label>) -> Result<A::Output, EngineError> {
        let m = (self.f)(n);
        if m < n {
            return Err(EngineError::algorithm(format!("slowdown: f({n}) = {m} is below n")));
        }
        if let Some((id_of, c)) = self.id_check {
            let id = id_of(ball.center_label());
            let bound = range_bound(m, c);
            if id == 0 || id >= bound {
                return Err(EngineError::algorithm(format!("slowdown: id {id} outside [1, {bound})")));
            }
        }
        self.inner.evaluate(m, ball)
    }
}

/// `g` plus `extra` isolated nodes.
pub fn pad_isolated(g: &Graph, extra: usize) -> Graph {
    let mut out = Graph::from_edges(g.n() + extra, g.edges()).expect("same edges");
    if let Some(o) = g.orientation() {
        out = out.with_orientation(o.to_vec()).expect("same edge count");
    }
    if let Some(c) = g.edge_colors() {
        out = out.with_edge_colors(c.to_vec()).expect("same edge count");
    }
    out
}

// ---------------------------------------------------------------------------
// Constant-size speedup

/// Parameters of the speedup: the algorithm for size `n0` runs in `t0`
/// rounds on graphs of maximum degree `delta`, the problem is checkable
/// within `r`, and `alg_{n0}` expects ids in `[1, n0^exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpeedupParams {
    pub n0: usize,
    pub t0: usize,
    pub r: usize,
    pub delta: usize,
    pub exponent: u32,
}

/// Initial colour range for the fake-id colouring. Fixed, so the composite
/// algorithm never depends on `n`; real ids must lie in `[1, FAKE_ID_INPUT_RANGE]`.
pub const FAKE_ID_INPUT_RANGE: u64 = u64::MAX - 1;

impl SpeedupParams {
    /// Radius of the fake-id colouring.
    pub fn rho(&self) -> usize {
        2 * (self.t0 + self.r)
    }

    /// `sum_{i=0}^{k} delta^i`, saturating.
    pub fn ball_bound(&self, k: usize) -> u128 {
        let mut s: u128 = 0;
        let mut p: u128 = 1;
        for _ in 0..=k {
            s = s.saturating_add(p);
            p = p.saturating_mul(self.delta as u128);
        }
        s
    }

    /// The speedup inequality on `B(u, t0 + r)`.
    pub fn check(&self) -> Result<(), CompileError> {
        let lhs = self.ball_bound(self.t0 + self.r);
        if lhs > self.n0 as u128 {
            return Err(CompileError::SpeedupInequality { lhs, radius: self.t0 + self.r, n0: self.n0 });
        }
        Ok(())
    }

    pub fn linial(&self) -> LinialProtocol {
        LinialProtocol {
            delta: power_degree_bound(self.delta, self.rho()),
            exponent: 1,
            initial_range: Some(FAKE_ID_INPUT_RANGE),
        }
    }

    /// Number of fake ids the colouring may use.
    pub fn fake_colors(&self) -> u64 {
        let p = self.linial();
        linial_colors(p.delta, FAKE_ID_INPUT_RANGE)
    }
}

/// `inner = alg_{n0}` run on fake ids: a colouring of `G^{2(t0 + r)}`
/// computed from a fixed initial range, handed to `inner` with advertised
/// size `n0`.
#[derive(Debug, Clone)]
pub struct Constantized<A> {
    pub inner: A,
    pub params: SpeedupParams,
}

pub fn speedup_constantize<A: LocalAlgorithm<Label = u64>>(inner: A, params: SpeedupParams) -> Result<Constantized<A>, CompileError> {
    params.check()?;
    let got = inner.radius(params.n0);
    if got > params.t0 {
        return Err(CompileError::InnerTooSlow { got, t0: params.t0 });
    }
    let colors = params.fake_colors();
    let range = range_bound(params.n0, params.exponent);
    if colors >= range {
        return Err(CompileError::ColorRange { colors, range });
    }
    Ok(Constantized { inner, params })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantizedRun<O> {
    pub result: RunResult<O>,
    pub fake_ids: Vec<u64>,
}

impl<A: LocalAlgorithm<Label = u64>> Constantized<A> {
    fn coloring_rounds(&self) -> usize {
        self.params.linial().plan(0).len()
    }

    /// Distributed execution on the whole graph.
    pub fn run(&self, g: &Graph, ids: &[u64]) -> Result<ConstantizedRun<A::Output>, CompileError> {
        check_len(g, ids)?;
        if let Some(&id) = ids.iter().find(|&&id| id == 0 || id > FAKE_ID_INPUT_RANGE) {
            return Err(CompileError::IdRange { id, bound: FAKE_ID_INPUT_RANGE + 1 });
        }
        let h = power_graph(g, self.params.rho());
        let col = run_message_mode_as(&self.params.linial(), &h, ids, g.n())?;
        let mut result = run_function_mode_as(&self.inner, g, &col.labels, self.params.n0)?;
        result.rounds_used = col.rounds_used * self.params.rho() + self.params.t0;
        result.locality_used = self.radius(g.n());
        Ok(ConstantizedRun { result, fake_ids: col.labels })
    }

    /// Violations that the failure-locality argument cannot explain: the
    /// `(t0 + r)`-ball has at most `n0` nodes and carries distinct fake ids.
    /// With a correct `alg_{n0}` there are none.
    pub fn unexplained_failures(&self, g: &Graph, fake_ids: &[u64], report: &CheckReport) -> Vec<usize> {
        let k = self.params.t0 + self.params.r;
        report
            .violating_nodes()
            .into_iter()
            .filter(|&u| {
                let ball = g.ball_nodes(u, k);
                let mut f: Vec<u64> = ball.iter().map(|&v| fake_ids[v]).collect();
                f.sort_unstable();
                f.dedup();
                ball.len() <= self.params.n0 && f.len() == ball.len()
            })
            .collect()
    }
}

impl<A: LocalAlgorithm<Label = u64>> LocalAlgorithm for Constantized<A> {
    type Label = u64;
    type Output = A::Output;

    fn name(&self) -> String {
        format!("constantized({}, n0={})", self.inner.name(), self.params.n0)
    }

    fn radius(&self, _: usize) -> usize {
        self.params.rho() * (self.coloring_rounds() + 1) + self.params.t0
    }

    fn evaluate(&self, _: usize, ball: &Ball<u64>) -> Result<A::Output, EngineError> {
        let h = power_graph(&ball.to_graph(), self.params.rho());
        let ids: Vec<u64> = ball.nodes().iter().map(|x| x.label).collect();
        let fake = run_message_mode_as(&self.params.linial(), &h, &ids, 0)?.labels;
        let sb = ball
            .sub_ball(0, self.params.t0, |x| fake[x])
            .map_err(|_| EngineError::LocalityViolation { node: 0, radius: self.params.t0 })?;
        let y = self.inner.evaluate(self.params.n0, &sb)?;
        if sb.violated() {
            ball.flag_violation();
        }
        Ok(y)
    }
}

/// Cole–Vishkin 3-colouring of an oriented cycle from a proper colouring
/// with values below `2^bits`: bit-reduction steps until 3 bits remain
/// (colours `0..6`), then colours 5, 4 and 3 recolour greedily. Outputs
/// `1..=3`. Nodes without a predecessor compare against a flipped copy of
/// their own colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColeVishkin {
    pub bits: u32,
}

impl ColeVishkin {
    /// Bit-reduction steps from `bits` (at least 4) to colours below 6.
    pub fn steps(&self) -> usize {
        let mut l = self.bits.max(4);
        let mut k = 0;
        while l > 3 {
            l = ceil_log2(l as u64) + 1;
            k += 1;
        }
        // one more step takes 3-bit colours to 0..6
        k + 1
    }
}

#[derive(Debug, Clone)]
pub struct CvState {
    color: u64,
    degree: usize,
    pred: Option<usize>,
    overflow: bool,
}

impl Protocol for ColeVishkin {
    type Label = u64;
    type State = CvState;
    type Msg = u64;
    type Output = u32;

    fn name(&self) -> String {
        format!("cole_vishkin(bits={})", self.bits)
    }

    fn rounds(&self, _: usize) -> usize {
        self.steps() + 3
    }

    fn init(&self, _: usize, init: NodeInit<u64>) -> CvState {
        let pred = init.out.iter().position(|o| *o == Some(false));
        let overflow = self.bits < 64 && init.label >> self.bits.max(4) != 0;
        CvState { color: init.label, degree: init.degree, pred, overflow }
    }

    fn send(&self, _: usize, _: usize, s: &CvState) -> Vec<Option<u64>> {
        vec![Some(s.color); s.degree]
    }

    fn receive(&self, _: usize, round: usize, s: &mut CvState, inbox: Vec<Option<u64>>) {
        if round <= self.steps() {
            let p = s.pred.and_then(|q| inbox[q]).unwrap_or(s.color ^ 1);
            let diff = s.color ^ p;
            let i = if diff == 0 { 0 } else { diff.trailing_zeros() as u64 };
            s.color = 2 * i + ((s.color >> i) & 1);
        } else {
            let target = 5 - (round - self.steps() - 1) as u64;
            if s.color == target {
                let used: Vec<u64> = inbox.into_iter().flatten().collect();
                s.color = (0..3).find(|c| !used.contains(c)).unwrap_or(0);
            }
        }
    }

    fn finalize(&self, _: usize, s: &CvState) -> Result<u32, EngineError> {
        if s.overflow || s.color > 2 {
            return Err(EngineError::algorithm("cole_vishkin: input colour outside the declared range"));
        }
        Ok(s.color as u32 + 1)
    }
}

/// Local-lemma instance of a randomized `alg_{n0}`: variable `u` is the
/// `bits`-bit tape block of node `u`; event `u` is "alg fails at `u`", on the
/// variables of `B(u, t0 + r)`, evaluated by running the algorithm.
pub fn randomized_speedup_to_lll<A, P>(
    alg: A,
    problem: P,
    g: &Graph,
    params: SpeedupParams,
    bits: u32,
) -> Result<LllInstance, CompileError>
where
    A: LocalAlgorithm<Label = u64> + Send + Sync + 'static,
    P: LocalProblem<Label = A::Output> + Send + Sync + 'static,
{
    params.check()?;
    let got = alg.radius(params.n0);
    if got > params.t0 || problem.radius() > params.r {
        return Err(CompileError::InnerTooSlow { got, t0: params.t0 });
    }
    let k = params.t0 + params.r;
    let shared = Arc::new((alg, problem, g.clone()));
    let mut events = Vec::with_capacity(g.n());
    for u in 0..g.n() {
        let vars = g.ball_nodes(u, k);
        let free = bits as usize * vars.len();
        if free > crate::lll::ENUM_CAP_BITS as usize {
            return Err(CompileError::EnumerationTooLarge { free: free as u32, cap: crate::lll::ENUM_CAP_BITS });
        }
        let s = Arc::clone(&shared);
        let vs = vars.clone();
        let n0 = params.n0;
        let pred: Box<dyn Fn(&[u64]) -> bool + Send + Sync> = Box::new(move |vals: &[u64]| {
            let (a, p, g) = &*s;
            let mut labels = vec![0u64; g.n()];
            for (&x, &v) in vs.iter().zip(vals) {
                labels[x] = v;
            }
            fails_at(a, p, g, n0, &labels, u).unwrap_or(true)
        });
        events.push(Event { vars, kind: EventKind::Closure(Arc::from(pred)) });
    }
    let inst = LllInstance::new(vec![bits; g.n()], events, 2)?;
    // events share a variable only if their centres are within 2(t0 + r)
    let dep = dependency_graph(&inst).max_degree() as u128;
    assert!(dep < params.ball_bound(2 * k), "dependency degree {dep} above the structural bound");
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::DiameterKind;
    use crate::engine::{random_order, FromProtocol};
    use crate::generators;
    use crate::ids::{assign_ids, IdAssignment, IdMode};
    use crate::lll::moser_tardos;
    use crate::problems::{Mis, ProperColoring};
    use crate::symmetry::{Cycle3Bounded, GreedyColoring, GreedyMis};
    use proptest::prelude::*;

    fn ids_of(g: &Graph, seed: u64) -> IdAssignment {
        assign_ids(g, 2, seed, IdMode::Random).unwrap()
    }

    fn is_mis(g: &Graph, sel: &[bool]) -> bool {
        check_solution(&Mis, g, sel).unwrap().valid
    }

    #[test]
    fn decomposition_edgeless_selects_all() {
        let g = Graph::edgeless(6);
        let ids = ids_of(&g, 1);
        let (nd, r) = decompose_power(&g, 1, &ids.ids, Decomposer::BallCarving);
        let run = slocal_via_decomposition(&GreedyMis::<()>::new(), &g, &[(); 6], &ids.ids, &nd, r).unwrap();
        assert!(run.result.labels.iter().all(|&b| b));
    }

    #[test]
    fn decomposition_cycle_mis() {
        let g = generators::cycle(128).unwrap();
        let ids = ids_of(&g, 3);
        for how in [Decomposer::BallCarving, Decomposer::Distributed, Decomposer::Mpx { seed: 5 }] {
            let (nd, r) = decompose_power(&g, 1, &ids.ids, how);
            let alg = GreedyMis::<()>::new();
            let run = slocal_via_decomposition(&alg, &g, &vec![(); 128], &ids.ids, &nd, r).unwrap();
            assert!(is_mis(&g, &run.result.labels));
            assert!(run.result.rounds_used >= r);
            replay_matches(&alg, &g, &vec![(); 128], &run.witness_order, &run.result.labels).unwrap();
        }
    }

    #[test]
    fn decomposition_rejects_invalid() {
        let g = generators::path(4).unwrap();
        let nd = NetworkDecomposition {
            c: 1,
            d: 0,
            kind: DiameterKind::Strong,
            color: vec![1; 4],
            cluster: vec![0, 1, 2, 3],
        };
        let r = slocal_via_decomposition(&GreedyMis::<()>::new(), &g, &[(); 4], &[1, 2, 3, 4], &nd, 0);
        assert!(matches!(r, Err(CompileError::InvalidDecomposition { .. })));
    }

    #[test]
    fn coloring_compiler_regular() {
        let g = generators::random_regular(200, 3, 4).unwrap();
        let ids = ids_of(&g, 9);
        let c = CompiledViaColoring::new(GreedyColoring::<()>::new(), 3, 2);
        let run = c.run(&g, &vec![(); 200], &ids.ids).unwrap();
        assert!(check_solution(&ProperColoring { k: 4 }, &g, &run.result.labels).unwrap().valid);
        replay_matches(&c.inner, &g, &vec![(); 200], &run.witness_order, &run.result.labels).unwrap();
    }

    #[test]
    fn coloring_compiler_edgeless() {
        let g = Graph::edgeless(5);
        let ids = IdAssignment::sequential(5);
        let c = CompiledViaColoring::new(GreedyColoring::<()>::new(), 0, 1);
        let run = c.run(&g, &[(); 5], &ids.ids).unwrap();
        assert_eq!(run.result.labels, vec![1; 5]);
    }

    #[test]
    fn coloring_function_view_matches_global_run() {
        for seed in 0..4 {
            let g = generators::random_bounded_degree(40, 3, seed).unwrap();
            let ids = ids_of(&g, seed);
            let c = CompiledViaColoring::new(GreedyMis::<()>::new(), 3, 2);
            let global = c.run(&g, &vec![(); 40], &ids.ids).unwrap();
            let labels: Vec<((), u64)> = ids.ids.iter().map(|&i| ((), i)).collect();
            let local = run_function_mode(&c, &g, &labels).unwrap();
            assert_eq!(local.labels, global.result.labels);
        }
    }

    /// Second stage with `t2 = 2` that reads first-stage outputs everywhere.
    struct SumColors;
    impl SequentialAlgorithm for SumColors {
        type Label = ((), u32);
        type Output = u32;
        type Info = ();
        fn name(&self) -> String {
            "sum".into()
        }
        fn locality(&self, _: usize) -> usize {
            2
        }
        fn apply(&self, _: usize, b: &Ball<SeqLabel<((), u32), u32, ()>>) -> Result<(u32, ()), EngineError> {
            Ok((b.nodes().iter().map(|x| x.label.input.1).sum(), ()))
        }
    }

    /// Joins iff its first-stage colour is below every neighbor's.
    struct LocalMin;
    impl SequentialAlgorithm for LocalMin {
        type Label = ((), u32);
        type Output = bool;
        type Info = ();
        fn name(&self) -> String {
            "local_min".into()
        }
        fn locality(&self, _: usize) -> usize {
            1
        }
        fn apply(&self, _: usize, b: &Ball<SeqLabel<((), u32), bool, ()>>) -> Result<(bool, ()), EngineError> {
            let me = b.label(0).input.1;
            Ok(((0..b.degree(0)).all(|q| b.label(b.neighbor(0, q).unwrap()).input.1 > me), ()))
        }
    }

    fn check_composition<A2>(g: &Graph, a2: A2, seed: u64) -> Vec<A2::Output>
    where
        A2: SequentialAlgorithm<Label = ((), u32)> + Clone,
        A2::Output: PartialEq + core::fmt::Debug,
    {
        let comp = compose_sequential(GreedyColoring::<()>::new(), a2.clone());
        let inputs = vec![(); g.n()];
        let res = run_sequential(&comp, g, &inputs, Order::Seeded(seed)).unwrap();
        let (sigma1, o1) = composed_witness(&res);
        let r1 = run_sequential(&comp.first, g, &inputs, Order::Given(sigma1)).unwrap();
        assert_eq!(r1.labels, o1);
        let in2: Vec<((), u32)> = o1.iter().map(|&c| ((), c)).collect();
        let r2 = run_sequential(&a2, g, &in2, Order::Given(res.order.clone())).unwrap();
        assert_eq!(r2.labels, res.labels);
        res.labels
    }

    impl Clone for SumColors {
        fn clone(&self) -> Self {
            SumColors
        }
    }
    impl Clone for LocalMin {
        fn clone(&self) -> Self {
            LocalMin
        }
    }

    #[test]
    fn composition_replays() {
        for seed in 0..10 {
            let g = generators::random_bounded_degree(30, 4, seed).unwrap();
            check_composition(&g, SumColors, seed);
            let sel = check_composition(&g, LocalMin, seed);
            for &(u, v) in g.edges() {
                assert!(!(sel[u] && sel[v]));
            }
        }
        let comp = compose_sequential(GreedyColoring::<()>::new(), SumColors);
        assert_eq!(comp.locality(10), 5);
    }

    #[test]
    fn composition_ignoring_first_equals_second() {
        let g = generators::random_bounded_degree(25, 3, 2).unwrap();
        let comp = compose_sequential(GreedyColoring::<()>::new(), GreedyMis::<((), u32)>::new());
        let a = run_sequential(&comp, &g, &[(); 25], Order::Seeded(4)).unwrap();
        let b = run_sequential(&GreedyMis::<()>::new(), &g, &[(); 25], Order::Given(a.order.clone())).unwrap();
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn red_free_count_matches_brute_force() {
        for n in 3..=12usize {
            let fixed: Vec<Option<bool>> = (0..n).map(|i| if i % 4 == 1 { Some(i % 8 == 1) } else { None }).collect();
            let brute = (0u32..1 << n)
                .filter(|x| {
                    (0..n).all(|i| fixed[i].map_or(true, |f| f == ((x >> i) & 1 == 1)))
                        && (0..n).all(|i| {
                            let b = |j: usize| (x >> (j % n)) & 1;
                            !(b(i + n - 1) == 0 && b(i) == 1 && b(i + 1) == 0)
                        })
                })
                .count() as u128;
            assert_eq!(count_red_free(&fixed), brute, "n = {n}");
        }
    }

    #[test]
    fn cycle_oracle_matches_enumeration() {
        let g = generators::cycle(6).unwrap();
        let alg = Cycle3Bounded { lookback: 5, retry: true };
        let problem = ProperColoring { k: 3 };
        let generic = EnumerationOracle::new(&alg, &problem, 2);
        let exact = CycleRetryOracle::new(&g).unwrap();
        let mut fixed = vec![None; 6];
        for (step, w) in [(0usize, 0u64), (3, 2), (5, 1)] {
            for v in [0, 2] {
                assert_eq!(generic.failure_prob(&g, v, &fixed).unwrap(), exact.failure_prob(&g, v, &fixed).unwrap());
            }
            fixed[step] = Some(w);
        }
    }

    #[test]
    fn derandomize_cycles() {
        for n in [8usize, 12, 16] {
            let g = generators::cycle(n).unwrap();
            let alg = Cycle3Bounded { lookback: n - 1, retry: true };
            let oracle = CycleRetryOracle::new(&g).unwrap();
            let order = random_order(n, n as u64);
            let d = derandomize(&alg, &ProperColoring { k: 3 }, &g, 2, &order, &oracle).unwrap();
            assert!(d.trace.windows(2).all(|w| w[1] <= w[0]));
            assert!(d.report.valid);
            assert_eq!(*d.trace.last().unwrap(), Dyadic::ZERO);
        }
    }

    #[test]
    fn derandomize_refuses_weak_start() {
        let g = generators::cycle(8).unwrap();
        let alg = Cycle3Bounded { lookback: 7, retry: false };
        let oracle = EnumerationOracle::new(&alg, &ProperColoring { k: 3 }, 1);
        let r = derandomize(&alg, &ProperColoring { k: 3 }, &g, 1, &random_order(8, 0), &oracle);
        assert!(matches!(r, Err(CompileError::NoGoodStart(_))));
    }

    /// Ignores its randomness.
    struct Always1;
    impl LocalAlgorithm for Always1 {
        type Label = u64;
        type Output = bool;
        fn name(&self) -> String {
            "all".into()
        }
        fn radius(&self, _: usize) -> usize {
            0
        }
        fn evaluate(&self, _: usize, _: &Ball<u64>) -> Result<bool, EngineError> {
            Ok(true)
        }
    }

    #[test]
    fn derandomize_never_failing() {
        let g = Graph::edgeless(4);
        let oracle = EnumerationOracle::new(&Always1, &Mis, 3);
        let d = derandomize(&Always1, &Mis, &g, 3, &[3, 1, 0, 2], &oracle).unwrap();
        assert_eq!(d.blocks, vec![0; 4]);
        assert!(d.trace.iter().all(|e| e.is_zero()));
    }

    #[test]
    fn slowdown_identity_and_padding() {
        let g = generators::cycle(32).unwrap();
        let ids = ids_of(&g, 2);
        let labels: Vec<((), u64)> = ids.ids.iter().map(|&i| ((), i)).collect();
        let c = CompiledViaColoring::new(GreedyMis::<()>::new(), 2, 2);
        let plain = run_function_mode(&c, &g, &labels).unwrap();
        let same = run_function_mode(&slowdown(c.clone(), |n| n), &g, &labels).unwrap();
        assert_eq!(plain.labels, same.labels);

        let slow = slowdown(c.clone(), |n| n * n).with_id_check(|l| l.1, 2);
        assert_eq!(slow.radius(4), c.radius(16));
        let out = run_function_mode(&slow, &g, &labels).unwrap();
        assert!(is_mis(&g, &out.labels));
        let padded = pad_isolated(&g, 32 * 32 - 32);
        let mut plabels = labels.clone();
        plabels.extend((0..(1024 - 32) as u64).map(|i| ((), 1024 + i)));
        let direct = run_function_mode(&c, &padded, &plabels).unwrap();
        assert_eq!(&direct.labels[..32], &out.labels[..]);
    }

    #[test]
    fn slowdown_id_check() {
        let g = generators::cycle(4).unwrap();
        let slow = slowdown(CompiledViaColoring::new(GreedyMis::<()>::new(), 2, 2), |n| n).with_id_check(|l| l.1, 2);
        let labels: Vec<((), u64)> = [1, 2, 3, 99].iter().map(|&i| ((), i)).collect();
        assert!(run_function_mode(&slow, &g, &labels).is_err());
    }

    fn cv_params() -> SpeedupParams {
        SpeedupParams { n0: 512, t0: 7, r: 1, delta: 2, exponent: 2 }
    }

    #[test]
    fn cole_vishkin_small_cycles() {
        let cv = FromProtocol(ColeVishkin { bits: 16 });
        assert_eq!(cv.radius(0), 7);
        for n in [3usize, 7, 40] {
            let g = generators::cycle(n).unwrap();
            let ids = assign_ids(&g, 2, n as u64, IdMode::Random).unwrap();
            let out = run_function_mode(&cv, &g, &ids.ids).unwrap();
            assert!(check_solution(&ProperColoring { k: 3 }, &g, &out.labels).unwrap().valid);
        }
    }

    #[test]
    fn constantized_cycles() {
        let c = speedup_constantize(FromProtocol(ColeVishkin { bits: 16 }), cv_params()).unwrap();
        for n in [64usize, 300, 1000] {
            let g = generators::cycle(n).unwrap();
            let ids = assign_ids(&g, 3, n as u64, IdMode::Random).unwrap();
            let run = c.run(&g, &ids.ids).unwrap();
            let rep = check_solution(&ProperColoring { k: 3 }, &g, &run.result.labels).unwrap();
            assert!(rep.valid);
            assert!(c.unexplained_failures(&g, &run.fake_ids, &rep).is_empty());
        }
    }

    #[test]
    fn constantized_function_view_is_size_oblivious() {
        let c = speedup_constantize(FromProtocol(ColeVishkin { bits: 16 }), cv_params()).unwrap();
        let g = generators::cycle(200).unwrap();
        let ids = assign_ids(&g, 3, 1, IdMode::Random).unwrap();
        let global = c.run(&g, &ids.ids).unwrap();
        for n in [200usize, 5000, 1 << 20] {
            let local = run_function_mode_as(&c, &g, &ids.ids, n).unwrap();
            assert_eq!(local.labels, global.result.labels);
        }
    }

    #[test]
    fn speedup_refuses() {
        let p = SpeedupParams { n0: 100, ..cv_params() };
        let r = speedup_constantize(FromProtocol(ColeVishkin { bits: 16 }), p);
        assert!(matches!(r, Err(CompileError::SpeedupInequality { lhs: 511, .. })));
        let p = SpeedupParams { exponent: 1, ..cv_params() };
        let r = speedup_constantize(FromProtocol(ColeVishkin { bits: 16 }), p);
        assert!(matches!(r, Err(CompileError::ColorRange { .. })));
    }

    #[test]
    fn speedup_to_lll_end_to_end() {
        let g = generators::cycle(64).unwrap();
        let alg = Cycle3Bounded { lookback: 7, retry: false };
        let params = SpeedupParams { n0: 1024, t0: 8, r: 1, delta: 2, exponent: 2 };
        let inst = randomized_speedup_to_lll(alg, ProperColoring { k: 3 }, &g, params, 1).unwrap();
        assert_eq!(inst.events.len(), 64);
        let sol = moser_tardos(&inst, 7, 100_000).unwrap();
        let out = run_function_mode(&alg, &g, &sol.assignment).unwrap();
        assert!(check_solution(&ProperColoring { k: 3 }, &g, &out.labels).unwrap().valid);
    }

    #[test]
    fn speedup_to_lll_never_failing() {
        let g = generators::cycle(10).unwrap();
        let params = SpeedupParams { n0: 16, t0: 0, r: 1, delta: 2, exponent: 2 };
        let inst = randomized_speedup_to_lll(Always1, NeverWrong, &g, params, 2).unwrap();
        assert_eq!(inst.max_prior().unwrap(), Dyadic::ZERO);
    }

    struct NeverWrong;
    impl LocalProblem for NeverWrong {
        type Label = bool;
        fn name(&self) -> String {
            "any".into()
        }
        fn radius(&self) -> usize {
            1
        }
        fn label_ok(&self, _: &Graph, _: usize, _: &bool) -> bool {
            true
        }
        fn allowed(&self, _: &Ball<bool>) -> Result<(), String> {
            Ok(())
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn via_coloring_replays(seed in 0u64..1000, n in 5usize..60) {
            let g = generators::random_bounded_degree(n, 4, seed).unwrap();
            let ids = ids_of(&g, seed);
            let c = CompiledViaColoring::new(GreedyMis::<()>::new(), 4, 2);
            let run = c.run(&g, &vec![(); n], &ids.ids).unwrap();
            prop_assert!(is_mis(&g, &run.result.labels));
            prop_assert!(replay_matches(&c.inner, &g, &vec![(); n], &run.witness_order, &run.result.labels).is_ok());
        }

        #[test]
        fn decomposition_compiler_replays(seed in 0u64..1000, n in 5usize..60) {
            let g = generators::random_bounded_degree(n, 4, seed).unwrap();
            let ids = ids_of(&g, seed);
            let (nd, r) = decompose_power(&g, 1, &ids.ids, Decomposer::Mpx { seed });
            let alg = GreedyColoring::<()>::new();
            let run = slocal_via_decomposition(&alg, &g, &vec![(); n], &ids.ids, &nd, r).unwrap();
            let problem = ProperColoring { k: g.max_degree() as u32 + 1 };
            let valid = check_solution(&problem, &g, &run.result.labels).unwrap().valid;
            prop_assert!(valid);
        }
    }
}
