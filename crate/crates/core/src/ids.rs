//! Unique identifiers from a polynomial range `[1, n^C)`.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::graph::Graph;
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("exponent must be at least 1")]
    BadExponent,
    #[error("increasing ids need an oriented path")]
    NotOrientedPath,
    #[error("ids not distinct")]
    Duplicate,
    #[error("id {0} outside [1, {1})")]
    OutOfRange(u64, u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdMode {
    Random,
    /// Increasing along the orientation of an oriented path.
    Increasing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdAssignment {
    pub ids: Vec<u64>,
    /// Every id is below this bound.
    pub range_bound: u64,
    pub exponent: u32,
}

/// `max(n^C, n + 1)`, saturating at `u64::MAX`. The `n + 1` floor keeps the
/// range non-empty for `n = 1`.
pub fn range_bound(n: usize, exponent: u32) -> u64 {
    let mut s: u64 = 1;
    for _ in 0..exponent {
        s = s.saturating_mul(n as u64);
    }
    s.max(n as u64 + 1)
}

impl IdAssignment {
    pub fn new(ids: Vec<u64>, range_bound: u64, exponent: u32) -> Result<Self, IdError> {
        let a = IdAssignment { ids, range_bound, exponent };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), IdError> {
        let mut seen = BTreeSet::new();
        for &id in &self.ids {
            if id == 0 || id >= self.range_bound {
                return Err(IdError::OutOfRange(id, self.range_bound));
            }
            if !seen.insert(id) {
                return Err(IdError::Duplicate);
            }
        }
        Ok(())
    }

    /// Identity-like ids `1..=n`, handy in tests.
    pub fn sequential(n: usize) -> Self {
        IdAssignment { ids: (1..=n as u64).collect(), range_bound: n as u64 + 1, exponent: 1 }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Distinct ids drawn uniformly without replacement from `[1, range_bound(n, C))`.
pub fn assign_ids(g: &Graph, exponent: u32, seed: u64, mode: IdMode) -> Result<IdAssignment, IdError> {
    if exponent == 0 {
        return Err(IdError::BadExponent);
    }
    let n = g.n();
    let s = range_bound(n, exponent);
    let mut rng = rng_from(seed);
    let span = s - 1;
    let mut ids: Vec<u64> = if span <= 4 * n as u64 {
        let mut all: Vec<u64> = (1..s).collect();
        all.shuffle(&mut rng);
        all.truncate(n);
        all
    } else {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let x = rng.gen_range(1..s);
            if seen.insert(x) {
                out.push(x);
            }
        }
        out
    };
    if mode == IdMode::Increasing {
        let order = path_order(g).ok_or(IdError::NotOrientedPath)?;
        ids.sort_unstable();
        let mut out = vec![0; n];
        for (i, &u) in order.iter().enumerate() {
            out[u] = ids[i];
        }
        ids = out;
    }
    Ok(IdAssignment { ids, range_bound: s, exponent })
}

/// Nodes of an oriented path from source to sink.
pub fn path_order(g: &Graph) -> Option<Vec<usize>> {
    let n = g.n();
    if n == 0 {
        return Some(Vec::new());
    }
    if g.m() + 1 != n || g.max_degree() > 2 {
        return None;
    }
    if n == 1 {
        return Some(vec![0]);
    }
    g.orientation()?;
    let start = (0..n).find(|&u| g.predecessor(u).is_none())?;
    let mut order = vec![start];
    let mut cur = start;
    while let Some(nx) = g.successor(cur) {
        order.push(nx);
        cur = nx;
    }
    (order.len() == n).then_some(order)
}
