//! Locally checkable problems and their checkers.
//!
//! A problem is valid on a labeled graph when every node's `r`-ball is
//! allowed. Labels that are not in the output alphabet are reported as
//! errors, not as violations.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use thiserror::Error;

use crate::ball::Ball;
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("label at node {0} is outside the output alphabet")]
    LabelOutOfRange(usize),
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("table problems support radius <= 2, got {0}")]
    RadiusTooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckReport {
    pub valid: bool,
    pub violations: Vec<(usize, String)>,
}

impl CheckReport {
    pub fn from_violations(violations: Vec<(usize, String)>) -> Self {
        CheckReport { valid: violations.is_empty(), violations }
    }

    pub fn violating_nodes(&self) -> Vec<usize> {
        self.violations.iter().map(|v| v.0).collect()
    }
}

pub trait LocalProblem {
    type Label: Clone;
    fn name(&self) -> String;
    fn radius(&self) -> usize;
    /// Membership of `label` (at node `u` of `g`) in the output alphabet.
    fn label_ok(&self, g: &Graph, u: usize, label: &Self::Label) -> bool;
    /// The allowed-ball predicate; `Err` carries the reason.
    fn allowed(&self, ball: &Ball<Self::Label>) -> Result<(), String>;
}

pub fn check_solution<P: LocalProblem>(p: &P, g: &Graph, labels: &[P::Label]) -> Result<CheckReport, ProblemError> {
    if labels.len() != g.n() {
        return Err(ProblemError::LabelCount { expected: g.n(), got: labels.len() });
    }
    for (u, l) in labels.iter().enumerate() {
        if !p.label_ok(g, u, l) {
            return Err(ProblemError::LabelOutOfRange(u));
        }
    }
    let r = p.radius();
    let violations = (0..g.n())
        .filter_map(|u| {
            let ball = Ball::extract(g, u, r, |v| labels[v].clone());
            p.allowed(&ball).err().map(|why| (u, why))
        })
        .collect();
    Ok(CheckReport::from_violations(violations))
}

/// Proper colouring with colours `1..=k`.
#[derive(Debug, Clone, Copy)]
pub struct ProperColoring {
    pub k: u32,
}

impl LocalProblem for ProperColoring {
    type Label = u32;
    fn name(&self) -> String {
        format!("proper_coloring({})", self.k)
    }
    fn radius(&self) -> usize {
        1
    }
    fn label_ok(&self, _: &Graph, _: usize, c: &u32) -> bool {
        (1..=self.k).contains(c)
    }
    fn allowed(&self, b: &Ball<u32>) -> Result<(), String> {
        let me = *b.center_label();
        for q in 0..b.degree(0) {
            let w = b.neighbor(0, q).unwrap();
            if *b.label(w) == me {
                return Err(format!("neighbor on port {q} shares colour {me}"));
            }
        }
        Ok(())
    }
}

/// Maximal independent set; `true` = selected.
#[derive(Debug, Clone, Copy)]
pub struct Mis;

impl LocalProblem for Mis {
    type Label = bool;
    fn name(&self) -> String {
        "mis".into()
    }
    fn radius(&self) -> usize {
        1
    }
    fn label_ok(&self, _: &Graph, _: usize, _: &bool) -> bool {
        true
    }
    fn allowed(&self, b: &Ball<bool>) -> Result<(), String> {
        let sel = (0..b.degree(0)).filter(|&q| *b.label(b.neighbor(0, q).unwrap())).count();
        match (*b.center_label(), sel) {
            (true, 0) | (false, 1..) => Ok(()),
            (true, _) => Err("selected next to a selected neighbor".into()),
            (false, 0) => Err("unselected without a selected neighbor".into()),
        }
    }
}

/// Per-port slots of an edge-labeled orientation. The endpoint with the
/// smaller index holds the slot of the edge (`Some(true)` = edge points away
/// from the holder); the other endpoint's slot is `None`.
pub type OrientationLabel = Vec<Option<bool>>;

/// Orient every edge so that no node of degree exactly `delta` is a sink.
/// Nodes of smaller degree are unconstrained.
#[derive(Debug, Clone, Copy)]
pub struct SinklessOrientation {
    pub delta: usize,
}

impl LocalProblem for SinklessOrientation {
    type Label = OrientationLabel;
    fn name(&self) -> String {
        format!("sinkless_orientation({})", self.delta)
    }
    fn radius(&self) -> usize {
        1
    }
    fn label_ok(&self, g: &Graph, u: usize, l: &OrientationLabel) -> bool {
        l.len() == g.degree(u)
    }
    fn allowed(&self, b: &Ball<OrientationLabel>) -> Result<(), String> {
        let mut outgoing = 0;
        for q in 0..b.degree(0) {
            let w = b.neighbor(0, q).unwrap();
            let back = b.back_port(0, q).unwrap();
            let mine = b.center_label()[q];
            let theirs = b.label(w)[back];
            let holder_is_me = b.handle(0) < b.handle(w);
            let out = match (holder_is_me, mine, theirs) {
                (true, Some(o), None) => o,
                (false, None, Some(o)) => !o,
                _ => return Err(format!("edge on port {q} is not labeled by exactly its lower endpoint")),
            };
            outgoing += out as usize;
        }
        if b.degree(0) == self.delta && outgoing == 0 {
            return Err("sink".into());
        }
        Ok(())
    }
}

/// Slots encoding the orientation `arcs_forward[e]` (edge `e = (a, b)` with
/// `a < b` points `a -> b` iff `true`).
pub fn orientation_labels(g: &Graph, forward: &[bool]) -> Vec<OrientationLabel> {
    (0..g.n())
        .map(|u| {
            (0..g.degree(u))
                .map(|q| {
                    let v = g.neighbors(u)[q];
                    (u < v).then(|| forward[g.edge_at(u, q)])
                })
                .collect()
        })
        .collect()
}

/// Every node of degree `delta` grabs one incident edge, named by its colour;
/// two neighbors never grab the edge between them. Needs an edge colouring.
#[derive(Debug, Clone, Copy)]
pub struct EdgeGrabbing {
    pub delta: usize,
}

impl LocalProblem for EdgeGrabbing {
    type Label = Option<u32>;
    fn name(&self) -> String {
        format!("edge_grabbing({})", self.delta)
    }
    fn radius(&self) -> usize {
        1
    }
    fn label_ok(&self, g: &Graph, u: usize, l: &Option<u32>) -> bool {
        match l {
            None => true,
            Some(c) => (0..g.degree(u)).any(|q| g.port_color(u, q) == Some(*c)),
        }
    }
    fn allowed(&self, b: &Ball<Option<u32>>) -> Result<(), String> {
        match *b.center_label() {
            None if b.degree(0) == self.delta => Err("full-degree node grabbed nothing".into()),
            None => Ok(()),
            Some(c) => {
                let q = (0..b.degree(0)).find(|&q| b.port_color(0, q) == Some(c)).unwrap();
                let w = b.neighbor(0, q).unwrap();
                if *b.label(w) == Some(c) {
                    Err(format!("edge of colour {c} grabbed from both sides"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Input and output label of a table-driven problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IoLabel {
    pub input: u32,
    pub output: u32,
}

impl fmt::Display for IoLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.input, self.output)
    }
}

/// A problem given by the list of allowed canonical ball codes. Labels are
/// indices into `s_in` and `s_out`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableLcl {
    #[cfg_attr(feature = "serde", serde(rename = "S_in"))]
    pub s_in: Vec<String>,
    #[cfg_attr(feature = "serde", serde(rename = "S_out"))]
    pub s_out: Vec<String>,
    pub r: usize,
    pub delta: usize,
    pub allowed_balls: BTreeSet<String>,
}

impl TableLcl {
    pub fn new(
        s_in: Vec<String>,
        s_out: Vec<String>,
        r: usize,
        delta: usize,
        allowed_balls: BTreeSet<String>,
    ) -> Result<Self, ProblemError> {
        if r > 2 {
            return Err(ProblemError::RadiusTooLarge(r));
        }
        Ok(TableLcl { s_in, s_out, r, delta, allowed_balls })
    }

    pub fn code(ball: &Ball<IoLabel>) -> String {
        ball.canonical().code()
    }

    /// Tabulates `pred` over the `r`-balls of the given labeled samples;
    /// `index` maps a label of `pred` to its position in `s_out`.
    pub fn tabulate<P: LocalProblem<Label = u32>>(
        pred: &P,
        s_out: Vec<String>,
        delta: usize,
        samples: &[(Graph, Vec<u32>)],
        index: impl Fn(u32) -> u32,
    ) -> Result<Self, ProblemError> {
        let r = pred.radius();
        let mut allowed = BTreeSet::new();
        for (g, labels) in samples {
            for u in 0..g.n() {
                let b = Ball::extract(g, u, r, |v| labels[v]);
                if pred.allowed(&b).is_ok() {
                    let io = b.map_labels(|_, &o| IoLabel { input: 0, output: index(o) });
                    allowed.insert(Self::code(&io));
                }
            }
        }
        TableLcl::new(alloc::vec!["-".to_string()], s_out, r, delta, allowed)
    }
}

impl LocalProblem for TableLcl {
    type Label = IoLabel;
    fn name(&self) -> String {
        format!("table(r={}, {} balls)", self.r, self.allowed_balls.len())
    }
    fn radius(&self) -> usize {
        self.r
    }
    fn label_ok(&self, g: &Graph, u: usize, l: &IoLabel) -> bool {
        (l.output as usize) < self.s_out.len()
            && (l.input as usize) < self.s_in.len().max(1)
            && g.degree(u) <= self.delta
    }
    fn allowed(&self, b: &Ball<IoLabel>) -> Result<(), String> {
        let code = Self::code(b);
        if self.allowed_balls.contains(&code) {
            Ok(())
        } else {
            Err(format!("ball {code} not in table"))
        }
    }
}
