//! JSON documents: run results, LLL instances and round-elimination tables.
//! Decompositions and table-driven problems serialize through their own
//! serde derives.

use std::collections::BTreeMap;

use localsim_core::lll::{Event, EventKind, LllInstance};
use localsim_core::round_elim::{PathTable, ViewKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::io::FormatError;

/// Result of one algorithm run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDoc {
    pub n: usize,
    pub algorithm: String,
    pub rounds: usize,
    pub labels: Vec<Value>,
    /// `None` when no checker applies.
    pub valid: Option<bool>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub stats: BTreeMap<String, Value>,
}

impl RunDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDoc {
    pub bits: u32,
}

/// Violating assignments: either an explicit list, or `"builtin:sink"`
/// meaning "every variable takes its value in `sink`".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Violating {
    Builtin(String),
    List(Vec<Assignment>),
}

/// One violating assignment, as a bitmask over the event's variables
/// concatenated from the lowest bits (first variable lowest), or as an
/// explicit per-variable tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Assignment {
    Mask(u64),
    Tuple(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDoc {
    pub vars: Vec<usize>,
    pub violating: Violating,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LllDoc {
    pub variables: Vec<VariableDoc>,
    pub events: Vec<EventDoc>,
    #[serde(default = "default_c")]
    pub c: u32,
}

fn default_c() -> u32 {
    2
}

pub const BUILTIN_SINK: &str = "builtin:sink";

fn split_mask(mask: u64, widths: &[u32]) -> Vec<u64> {
    let mut off = 0;
    widths
        .iter()
        .map(|&w| {
            let v = if w >= 64 { mask } else { (mask >> off) & ((1u64 << w) - 1) };
            off += w;
            v
        })
        .collect()
}

impl LllDoc {
    pub fn to_instance(&self) -> Result<LllInstance, FormatError> {
        let bits: Vec<u32> = self.variables.iter().map(|v| v.bits).collect();
        let mut events = Vec::with_capacity(self.events.len());
        for (i, e) in self.events.iter().enumerate() {
            let kind = match &e.violating {
                Violating::Builtin(s) if s == BUILTIN_SINK => {
                    let want = e.sink.clone().ok_or_else(|| FormatError::Invalid(format!("event {i}: builtin:sink needs `sink`")))?;
                    EventKind::Pattern { want }
                }
                Violating::Builtin(s) => return Err(FormatError::Invalid(format!("event {i}: unknown builtin {s}"))),
                Violating::List(list) => {
                    let widths: Vec<u32> = e.vars.iter().map(|&x| bits.get(x).copied().unwrap_or(0)).collect();
                    if matches!(list.first(), Some(Assignment::Mask(_))) && widths.iter().sum::<u32>() > 64 {
                        return Err(FormatError::Invalid(format!("event {i}: mask wider than 64 bits")));
                    }
                    let violating = list
                        .iter()
                        .map(|a| match a {
                            Assignment::Mask(m) => split_mask(*m, &widths),
                            Assignment::Tuple(t) => t.clone(),
                        })
                        .collect();
                    EventKind::Table { violating }
                }
            };
            events.push(Event { vars: e.vars.clone(), kind });
        }
        LllInstance::new(bits, events, self.c).map_err(|e| FormatError::Invalid(e.to_string()))
    }

    /// Closure events have no file representation.
    pub fn from_instance(inst: &LllInstance) -> Result<Self, FormatError> {
        let variables = inst.bits.iter().map(|&bits| VariableDoc { bits }).collect();
        let mut events = Vec::with_capacity(inst.events.len());
        for (i, e) in inst.events.iter().enumerate() {
            let widths: Vec<u32> = e.vars.iter().map(|&x| inst.bits[x]).collect();
            let doc = match &e.kind {
                EventKind::Pattern { want } => {
                    EventDoc { vars: e.vars.clone(), violating: Violating::Builtin(BUILTIN_SINK.into()), sink: Some(want.clone()) }
                }
                EventKind::Table { violating } => {
                    let list = if widths.iter().sum::<u32>() <= 64 {
                        violating
                            .iter()
                            .map(|t| {
                                let mut m = 0u64;
                                let mut off = 0;
                                for (&v, &w) in t.iter().zip(&widths) {
                                    m |= v << off;
                                    off += w;
                                }
                                Assignment::Mask(m)
                            })
                            .collect()
                    } else {
                        violating.iter().cloned().map(Assignment::Tuple).collect()
                    };
                    EventDoc { vars: e.vars.clone(), violating: Violating::List(list), sink: None }
                }
                EventKind::Closure(_) => return Err(FormatError::Invalid(format!("event {i} is a closure"))),
            };
            events.push(doc);
        }
        Ok(LllDoc { variables, events, c: inst.c })
    }
}

/// Round-elimination table. `t` is the round count: an integer for
/// node-centred views, `s + 0.5` for edge-centred ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDoc {
    pub kind: String,
    pub t: f64,
    #[serde(rename = "N")]
    pub n_ids: u8,
    pub k: u64,
    pub entries: Vec<(Vec<u8>, u64)>,
}

impl TableDoc {
    pub fn from_table(tab: &PathTable) -> Self {
        let kind = match tab.kind {
            ViewKind::Node { .. } => "node",
            ViewKind::Edge { .. } => "edge",
        };
        TableDoc {
            kind: kind.into(),
            t: tab.kind.rounds(),
            n_ids: tab.n_ids,
            k: tab.k,
            entries: tab.entries.iter().map(|(v, &c)| (v.clone(), c)).collect(),
        }
    }

    pub fn to_table(&self) -> Result<PathTable, FormatError> {
        let whole = self.t.floor();
        let kind = match self.kind.as_str() {
            "node" if self.t == whole && self.t >= 0.0 => ViewKind::Node { t: whole as u32 },
            "edge" if self.t - whole == 0.5 => ViewKind::Edge { s: whole as u32 },
            _ => return Err(FormatError::Invalid(format!("bad table kind {} with t = {}", self.kind, self.t))),
        };
        for (v, _) in &self.entries {
            if v.len() != kind.len() {
                return Err(FormatError::Invalid(format!("view {v:?} has length {}, expected {}", v.len(), kind.len())));
            }
        }
        Ok(PathTable { kind, n_ids: self.n_ids, k: self.k, entries: self.entries.iter().cloned().collect() })
    }
}
