//! Execution engines: the neighborhood-function view and the message-passing
//! view of LOCAL algorithms, conversions between them, and the sequential
//! (SLOCAL) engine.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use thiserror::Error;

use crate::ball::{build, Ball, Topology};
use crate::graph::Graph;
use crate::rng::rng_from;
use crate::tape::TapeError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("locality violation at node {node}: algorithm read beyond radius {radius}")]
    LocalityViolation { node: usize, radius: usize },
    #[error("{0}")]
    Algorithm(String),
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("same canonical ball evaluated to different outputs (node {node})")]
    Impure { node: usize },
    #[error("order is not a permutation of the nodes")]
    BadOrder,
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
}

impl EngineError {
    pub fn algorithm(msg: impl Into<String>) -> Self {
        EngineError::Algorithm(msg.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunResult<O> {
    pub labels: Vec<O>,
    pub rounds_used: usize,
    pub locality_used: usize,
    /// Messages sent per round (message mode only).
    pub trace: Option<Vec<usize>>,
    /// Largest stored info (sequential mode only).
    pub max_stored: Option<usize>,
}

impl<O> RunResult<O> {
    pub fn map<P>(self, f: impl FnMut(O) -> P) -> RunResult<P> {
        RunResult {
            labels: self.labels.into_iter().map(f).collect(),
            rounds_used: self.rounds_used,
            locality_used: self.locality_used,
            trace: self.trace,
            max_stored: self.max_stored,
        }
    }
}

/// Function view: the output at `u` is a function of `(n, B(u, t(n)))`.
pub trait LocalAlgorithm {
    type Label: Clone;
    type Output: Clone;
    fn name(&self) -> String;
    fn radius(&self, n: usize) -> usize;
    fn evaluate(&self, n: usize, ball: &Ball<Self::Label>) -> Result<Self::Output, EngineError>;
}

fn check_labels<L>(g: &Graph, labels: &[L]) -> Result<(), EngineError> {
    if labels.len() != g.n() {
        return Err(EngineError::LabelCount { expected: g.n(), got: labels.len() });
    }
    Ok(())
}

pub fn run_function_mode<A: LocalAlgorithm>(
    alg: &A,
    g: &Graph,
    labels: &[A::Label],
) -> Result<RunResult<A::Output>, EngineError> {
    run_function_mode_as(alg, g, labels, g.n())
}

/// Runs with an advertised size `n` that may differ from the real one.
pub fn run_function_mode_as<A: LocalAlgorithm>(
    alg: &A,
    g: &Graph,
    labels: &[A::Label],
    n: usize,
) -> Result<RunResult<A::Output>, EngineError> {
    check_labels(g, labels)?;
    let t = alg.radius(n);
    let mut out = Vec::with_capacity(g.n());
    for u in 0..g.n() {
        let ball = Ball::extract(g, u, t, |v| labels[v].clone());
        let y = alg.evaluate(n, &ball)?;
        if ball.violated() {
            return Err(EngineError::LocalityViolation { node: u, radius: t });
        }
        out.push(y);
    }
    Ok(RunResult { labels: out, rounds_used: t, locality_used: t, trace: None, max_stored: None })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub evaluations: usize,
    pub hits: usize,
    pub audited: usize,
}

/// Function mode with answers cached by canonical ball. With `audit`, every
/// cache hit is re-evaluated and compared against the cached answer.
pub fn run_function_mode_cached<A>(
    alg: &A,
    g: &Graph,
    labels: &[A::Label],
    audit: bool,
) -> Result<(RunResult<A::Output>, CacheStats), EngineError>
where
    A: LocalAlgorithm,
    A::Label: Ord,
    A::Output: PartialEq,
{
    check_labels(g, labels)?;
    let n = g.n();
    let t = alg.radius(n);
    let mut cache = BTreeMap::new();
    let mut stats = CacheStats::default();
    let mut out = Vec::with_capacity(n);
    for u in 0..n {
        let ball = Ball::extract(g, u, t, |v| labels[v].clone());
        let key = ball.canonical();
        let y = if let Some(y) = cache.get(&key) {
            stats.hits += 1;
            if audit {
                stats.audited += 1;
                if alg.evaluate(n, &ball)? != *y {
                    return Err(EngineError::Impure { node: u });
                }
            }
            Clone::clone(y)
        } else {
            stats.evaluations += 1;
            let y = alg.evaluate(n, &ball)?;
            cache.insert(key, y.clone());
            y
        };
        if ball.violated() {
            return Err(EngineError::LocalityViolation { node: u, radius: t });
        }
        out.push(y);
    }
    Ok((RunResult { labels: out, rounds_used: t, locality_used: t, trace: None, max_stored: None }, stats))
}

/// What a node knows before the first round.
#[derive(Debug, Clone)]
pub struct NodeInit<L> {
    pub degree: usize,
    pub label: L,
    /// Per port: does the edge point away from this node?
    pub out: Vec<Option<bool>>,
    pub colors: Vec<Option<u32>>,
    handle: usize,
}

impl<L> NodeInit<L> {
    pub(crate) fn handle(&self) -> usize {
        self.handle
    }
}

/// Message-passing view: `rounds(n)` synchronous rounds, messages by port.
pub trait Protocol {
    type Label: Clone;
    type State: Clone;
    type Msg: Clone;
    type Output: Clone;
    fn name(&self) -> String;
    fn rounds(&self, n: usize) -> usize;
    fn init(&self, n: usize, init: NodeInit<Self::Label>) -> Self::State;
    /// One optional message per port; `round` counts from 1.
    fn send(&self, n: usize, round: usize, state: &Self::State) -> Vec<Option<Self::Msg>>;
    fn receive(&self, n: usize, round: usize, state: &mut Self::State, inbox: Vec<Option<Self::Msg>>);
    fn finalize(&self, n: usize, state: &Self::State) -> Result<Self::Output, EngineError>;
}

pub fn run_message_mode<P: Protocol>(p: &P, g: &Graph, labels: &[P::Label]) -> Result<RunResult<P::Output>, EngineError> {
    run_message_mode_as(p, g, labels, g.n())
}

pub fn run_message_mode_as<P: Protocol>(
    p: &P,
    g: &Graph,
    labels: &[P::Label],
    n: usize,
) -> Result<RunResult<P::Output>, EngineError> {
    check_labels(g, labels)?;
    let rounds = p.rounds(n);
    let mut states: Vec<P::State> = (0..g.n())
        .map(|u| {
            p.init(
                n,
                NodeInit {
                    degree: g.degree(u),
                    label: labels[u].clone(),
                    out: (0..g.degree(u)).map(|q| g.points_out(u, q)).collect(),
                    colors: (0..g.degree(u)).map(|q| g.port_color(u, q)).collect(),
                    handle: u,
                },
            )
        })
        .collect();
    let mut trace = Vec::with_capacity(rounds);
    for round in 1..=rounds {
        let mut inbox: Vec<Vec<Option<P::Msg>>> = (0..g.n()).map(|u| vec![None; g.degree(u)]).collect();
        let mut sent = 0;
        for u in 0..g.n() {
            let msgs = p.send(n, round, &states[u]);
            assert_eq!(msgs.len(), g.degree(u), "protocol must address every port");
            for (q, m) in msgs.into_iter().enumerate() {
                if let Some(m) = m {
                    let v = g.neighbors(u)[q];
                    inbox[v][g.reverse_port(u, q)] = Some(m);
                    sent += 1;
                }
            }
        }
        for (u, ib) in inbox.into_iter().enumerate() {
            p.receive(n, round, &mut states[u], ib);
        }
        trace.push(sent);
    }
    let labels = states.iter().map(|s| p.finalize(n, s)).collect::<Result<Vec<_>, _>>()?;
    Ok(RunResult { labels, rounds_used: rounds, locality_used: rounds, trace: Some(trace), max_stored: None })
}

/// Function view of a protocol: the protocol is simulated inside the ball.
/// Nodes near the boundary compute garbage, but garbage cannot reach the
/// center within `rounds(n)` rounds.
#[derive(Debug, Clone)]
pub struct FromProtocol<P>(pub P);

impl<P: Protocol> LocalAlgorithm for FromProtocol<P> {
    type Label = P::Label;
    type Output = P::Output;

    fn name(&self) -> String {
        format!("fn({})", self.0.name())
    }

    fn radius(&self, n: usize) -> usize {
        self.0.rounds(n)
    }

    fn evaluate(&self, n: usize, ball: &Ball<P::Label>) -> Result<P::Output, EngineError> {
        let p = &self.0;
        let t = p.rounds(n);
        let k = ball.len();
        let mut states: Vec<P::State> = (0..k)
            .map(|v| {
                let deg = ball.degree(v);
                p.init(
                    n,
                    NodeInit {
                        degree: deg,
                        label: ball.label(v).clone(),
                        out: (0..deg).map(|q| ball.points_out(v, q)).collect(),
                        colors: (0..deg).map(|q| ball.port_color(v, q)).collect(),
                        handle: ball.handle(v),
                    },
                )
            })
            .collect();
        for round in 1..=t {
            // only nodes with dist + (t - round) <= t still matter
            let live = |v: usize| ball.dist(v) + round <= t + 1;
            let mut inbox: Vec<Vec<Option<P::Msg>>> = (0..k).map(|v| vec![None; ball.degree(v)]).collect();
            for v in (0..k).filter(|&v| live(v)) {
                for (q, m) in p.send(n, round, &states[v]).into_iter().enumerate() {
                    if let (Some(m), Some(w), Some(back)) = (m, ball.known_neighbor(v, q), ball.back_port(v, q)) {
                        inbox[w][back] = Some(m);
                    }
                }
            }
            for (v, ib) in inbox.into_iter().enumerate() {
                if ball.dist(v) + round <= t {
                    p.receive(n, round, &mut states[v], ib);
                }
            }
        }
        p.finalize(n, &states[0])
    }
}

#[derive(Debug, Clone)]
pub struct Record<L> {
    label: L,
    degree: usize,
    out: Vec<Option<bool>>,
    colors: Vec<Option<u32>>,
    ports: Vec<Option<(usize, usize)>>,
}

impl<L> Record<L> {
    fn known(&self) -> usize {
        self.ports.iter().filter(|p| p.is_some()).count()
    }
}

#[derive(Debug, Clone)]
pub struct FloodState<L> {
    me: usize,
    records: BTreeMap<usize, Record<L>>,
    /// Records improved since the last send.
    fresh: BTreeSet<usize>,
}

/// `(sender, sender's port, records the sender improved since its last send)`.
pub type FloodMsg<L> = (usize, usize, BTreeMap<usize, Record<L>>);

/// Message view of a function algorithm: flood for `t(n)` rounds, rebuild
/// the ball, evaluate. Records only improve, so each round forwards just the
/// improvements; every neighbor still gets a message every round.
#[derive(Debug, Clone)]
pub struct FromFunction<A>(pub A);

struct RecordTopology<'a, L> {
    records: &'a BTreeMap<usize, Record<L>>,
    reverse: BTreeMap<(usize, usize), (usize, usize)>,
}

impl<L> Topology for RecordTopology<'_, L> {
    fn degree(&self, v: usize) -> usize {
        self.records[&v].degree
    }
    fn port(&self, v: usize, p: usize) -> Option<(usize, usize)> {
        self.records[&v].ports[p].or_else(|| self.reverse.get(&(v, p)).copied())
    }
    fn out(&self, v: usize, p: usize) -> Option<bool> {
        self.records[&v].out[p]
    }
    fn color(&self, v: usize, p: usize) -> Option<u32> {
        self.records[&v].colors[p]
    }
}

impl<A: LocalAlgorithm> Protocol for FromFunction<A> {
    type Label = A::Label;
    type State = FloodState<A::Label>;
    type Msg = FloodMsg<A::Label>;
    type Output = A::Output;

    fn name(&self) -> String {
        format!("flood({})", self.0.name())
    }

    fn rounds(&self, n: usize) -> usize {
        self.0.radius(n)
    }

    fn init(&self, _n: usize, init: NodeInit<A::Label>) -> Self::State {
        let me = init.handle();
        let mut records = BTreeMap::new();
        records.insert(
            me,
            Record { label: init.label, degree: init.degree, out: init.out, colors: init.colors, ports: vec![None; init.degree] },
        );
        FloodState { me, records, fresh: BTreeSet::from([me]) }
    }

    fn send(&self, _n: usize, _round: usize, s: &Self::State) -> Vec<Option<Self::Msg>> {
        let deg = s.records[&s.me].degree;
        let delta: BTreeMap<usize, Record<A::Label>> = s.fresh.iter().map(|k| (*k, s.records[k].clone())).collect();
        (0..deg).map(|q| Some((s.me, q, delta.clone()))).collect()
    }

    fn receive(&self, _n: usize, _round: usize, s: &mut Self::State, inbox: Vec<Option<Self::Msg>>) {
        s.fresh.clear();
        for (j, m) in inbox.into_iter().enumerate() {
            let Some((h, i, recs)) = m else { continue };
            let mine = &mut s.records.get_mut(&s.me).unwrap().ports[j];
            if mine.is_none() {
                *mine = Some((h, i));
                s.fresh.insert(s.me);
            }
            for (k, r) in recs {
                if k == s.me {
                    continue;
                }
                match s.records.get(&k) {
                    Some(old) if old.known() >= r.known() => {}
                    _ => {
                        s.records.insert(k, r);
                        s.fresh.insert(k);
                    }
                }
            }
        }
    }

    fn finalize(&self, n: usize, s: &Self::State) -> Result<A::Output, EngineError> {
        let t = self.0.radius(n);
        let mut reverse = BTreeMap::new();
        for (&h, r) in &s.records {
            for (q, p) in r.ports.iter().enumerate() {
                if let Some((w, back)) = *p {
                    reverse.insert((w, back), (h, q));
                }
            }
        }
        let topo = RecordTopology { records: &s.records, reverse };
        let ball = build(&topo, s.me, t, |v| s.records[&v].label.clone(), |v| v)
            .map_err(|_| EngineError::algorithm("flooding did not gather the full view"))?;
        let y = self.0.evaluate(n, &ball)?;
        if ball.violated() {
            return Err(EngineError::LocalityViolation { node: s.me, radius: t });
        }
        Ok(y)
    }
}

/// Label seen by a sequential algorithm: the input plus, once processed, the
/// written `(output, info)` pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SeqLabel<L, O, I> {
    pub input: L,
    pub written: Option<(O, I)>,
}

pub trait SequentialAlgorithm {
    type Label: Clone;
    type Output: Clone;
    type Info: Clone;
    fn name(&self) -> String;
    fn locality(&self, n: usize) -> usize;
    fn apply(
        &self,
        n: usize,
        ball: &Ball<SeqLabel<Self::Label, Self::Output, Self::Info>>,
    ) -> Result<(Self::Output, Self::Info), EngineError>;
    /// Size of stored info, for bookkeeping only.
    fn info_size(&self, _info: &Self::Info) -> usize {
        0
    }
}

/// Picks the next node given which nodes are already processed.
pub type Adversary<'a> = dyn FnMut(&Graph, &[bool]) -> usize + 'a;

pub enum Order<'a> {
    Given(Vec<usize>),
    Seeded(u64),
    Adversary(Box<Adversary<'a>>),
}

pub fn random_order(n: usize, seed: u64) -> Vec<usize> {
    let mut o: Vec<usize> = (0..n).collect();
    o.shuffle(&mut rng_from(seed));
    o
}

pub fn reverse_order(n: usize) -> Vec<usize> {
    (0..n).rev().collect()
}

/// Adaptive adversary: the unprocessed node with the most unprocessed
/// neighbors, smallest index on ties.
pub fn max_degree_first<'a>() -> Box<Adversary<'a>> {
    Box::new(|g: &Graph, done: &[bool]| {
        (0..g.n())
            .filter(|&u| !done[u])
            .max_by_key(|&u| (g.neighbors(u).iter().filter(|&&v| !done[v]).count(), core::cmp::Reverse(u)))
            .expect("adversary called with every node processed")
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqResult<O, I> {
    pub labels: Vec<O>,
    pub infos: Vec<I>,
    pub order: Vec<usize>,
    pub locality_used: usize,
    pub max_stored: usize,
}

impl<O: Clone, I> SeqResult<O, I> {
    pub fn run_result(&self) -> RunResult<O> {
        RunResult {
            labels: self.labels.clone(),
            rounds_used: 0,
            locality_used: self.locality_used,
            trace: None,
            max_stored: Some(self.max_stored),
        }
    }
}

pub fn run_sequential<A: SequentialAlgorithm>(
    alg: &A,
    g: &Graph,
    inputs: &[A::Label],
    order: Order<'_>,
) -> Result<SeqResult<A::Output, A::Info>, EngineError> {
    run_sequential_as(alg, g, inputs, order, g.n())
}

pub fn run_sequential_as<A: SequentialAlgorithm>(
    alg: &A,
    g: &Graph,
    inputs: &[A::Label],
    order: Order<'_>,
    n: usize,
) -> Result<SeqResult<A::Output, A::Info>, EngineError> {
    check_labels(g, inputs)?;
    let t = alg.locality(n);
    let size = g.n();
    let mut written: Vec<Option<(A::Output, A::Info)>> = vec![None; size];
    let mut done = vec![false; size];
    let mut seq = Vec::with_capacity(size);
    let mut max_stored = 0;
    let mut next: Box<dyn FnMut(&[bool], usize) -> Result<usize, EngineError> + '_> = match order {
        Order::Given(o) => {
            if o.len() != size {
                return Err(EngineError::BadOrder);
            }
            Box::new(move |_, i| Ok(o[i]))
        }
        Order::Seeded(s) => {
            let o = random_order(size, s);
            Box::new(move |_, i| Ok(o[i]))
        }
        Order::Adversary(mut f) => Box::new(move |d, _| Ok(f(g, d))),
    };
    for i in 0..size {
        let u = next(&done, i)?;
        if u >= size || done[u] {
            return Err(EngineError::BadOrder);
        }
        let ball = Ball::extract(g, u, t, |v| SeqLabel { input: inputs[v].clone(), written: written[v].clone() });
        let (o, info) = alg.apply(n, &ball)?;
        if ball.violated() {
            return Err(EngineError::LocalityViolation { node: u, radius: t });
        }
        max_stored = max_stored.max(alg.info_size(&info));
        written[u] = Some((o, info));
        done[u] = true;
        seq.push(u);
    }
    let (labels, infos) = written.into_iter().map(|w| w.unwrap()).unzip();
    Ok(SeqResult { labels, infos, order: seq, locality_used: t, max_stored })
}
