//! Finite per-node random tapes.

use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;
use thiserror::Error;

use crate::rng::sub_rng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TapeError {
    #[error("algorithm needs {demand} bits per node but the tape holds {budget}")]
    Exhausted { demand: usize, budget: usize },
}

pub const DEFAULT_BUDGET: usize = 256;

/// `budget` bits per node; node `u`'s bits come from stream `u` of `seed`.
/// Bit `i` of node `u` is bit `i % 64` of word `i / 64`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomTape {
    n: usize,
    budget: usize,
    seed: u64,
    words: Vec<u64>,
}

impl RandomTape {
    pub fn generate(n: usize, budget: usize, seed: u64) -> Self {
        let per = budget.div_ceil(64);
        let mut words = vec![0u64; n * per];
        for u in 0..n {
            let mut rng = sub_rng(seed, u as u64);
            for w in &mut words[u * per..(u + 1) * per] {
                *w = rng.next_u64();
            }
            mask_tail(&mut words[u * per..(u + 1) * per], budget);
        }
        RandomTape { n, budget, seed, words }
    }

    /// Tape with explicitly chosen low bits; used by derandomization and LLL replay.
    pub fn from_blocks(budget: usize, blocks: &[u64]) -> Self {
        assert!(budget <= 64, "from_blocks takes at most one word per node");
        let words = blocks.iter().map(|&b| if budget == 64 { b } else { b & ((1u64 << budget) - 1) }).collect();
        RandomTape { n: blocks.len(), budget, seed: 0, words }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn require(&self, demand: usize) -> Result<(), TapeError> {
        if demand > self.budget {
            Err(TapeError::Exhausted { demand, budget: self.budget })
        } else {
            Ok(())
        }
    }

    pub fn words(&self, u: usize) -> &[u64] {
        let per = self.budget.div_ceil(64);
        &self.words[u * per..(u + 1) * per]
    }

    pub fn bit(&self, u: usize, i: usize) -> bool {
        assert!(i < self.budget, "bit {i} beyond tape budget {}", self.budget);
        (self.words(u)[i / 64] >> (i % 64)) & 1 == 1
    }

    /// `len <= 64` bits starting at `start`, little-endian.
    pub fn bits(&self, u: usize, start: usize, len: usize) -> u64 {
        assert!(len <= 64 && start + len <= self.budget);
        let mut x = 0u64;
        for i in 0..len {
            x |= (self.bit(u, start + i) as u64) << i;
        }
        x
    }

    /// The first `len` bits of every node as one block.
    pub fn blocks(&self, len: usize) -> Vec<u64> {
        (0..self.n).map(|u| self.bits(u, 0, len)).collect()
    }
}

fn mask_tail(words: &mut [u64], budget: usize) {
    let rem = budget % 64;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regeneration_identical() {
        let a = RandomTape::generate(20, 100, 42);
        assert_eq!(a, RandomTape::generate(20, 100, 42));
        assert_ne!(a, RandomTape::generate(20, 100, 43));
        assert!((0..20).all(|u| a.words(u)[1] >> 36 == 0));
    }

    #[test]
    fn demand_checked() {
        let t = RandomTape::generate(3, 8, 1);
        assert!(t.require(8).is_ok());
        assert_eq!(t.require(9), Err(TapeError::Exhausted { demand: 9, budget: 8 }));
    }

    #[test]
    fn bits_roundtrip() {
        let t = RandomTape::generate(4, 70, 9);
        for u in 0..4 {
            let lo = t.bits(u, 0, 64);
            assert_eq!(lo, t.words(u)[0]);
            assert_eq!(t.bits(u, 64, 6), t.words(u)[1]);
        }
        let f = RandomTape::from_blocks(2, &[3, 5]);
        assert_eq!(f.blocks(2), vec![3, 1]);
    }
}
