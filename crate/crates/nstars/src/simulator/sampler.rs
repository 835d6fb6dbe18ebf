//! Dynamic weighted sampling over a growable array of integer weights,
//! backed by a Fenwick (binary indexed) tree: O(log K) append, increment and
//! sample. Weights only ever grow; nothing is removed.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("cannot sample from an empty sampler")]
    EmptySampler,
}

#[derive(Debug, Clone, Default)]
pub struct WeightedSampler {
    // tree[i] holds the sum of weights over (i - lsb(i), i], 1-based
    tree: Vec<u64>,
    total: u64,
}

impl WeightedSampler {
    pub fn new() -> Self {
        WeightedSampler { tree: Vec::new(), total: 0 }
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Append a new element with the given weight.
    pub fn push(&mut self, weight: u64) {
        let i = self.tree.len() + 1;
        // new node covers (i - lsb(i), i]; fold in the trailing tree nodes
        let mut value = weight;
        let lsb = i & i.wrapping_neg();
        let mut j = i - 1;
        while j > i - lsb {
            value += self.tree[j - 1];
            j -= j & j.wrapping_neg();
        }
        self.tree.push(value);
        self.total += weight;
    }

    /// Add `delta` to the weight of element `index`.
    pub fn increment(&mut self, index: usize, delta: u64) {
        let mut i = index + 1;
        while i <= self.tree.len() {
            self.tree[i - 1] += delta;
            i += i & i.wrapping_neg();
        }
        self.total += delta;
    }

    /// Sum of weights over elements 0..=index.
    pub fn prefix_sum(&self, index: usize) -> u64 {
        let mut i = index + 1;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i - 1];
            i -= i & i.wrapping_neg();
        }
        sum
    }

    /// Weight of a single element.
    pub fn weight(&self, index: usize) -> u64 {
        let lower = if index == 0 { 0 } else { self.prefix_sum(index - 1) };
        self.prefix_sum(index) - lower
    }

    /// Draw an index with probability weight / total.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<usize, SamplerError> {
        if self.total == 0 {
            return Err(SamplerError::EmptySampler);
        }
        let target = rng.gen_range(0..self.total);
        Ok(self.find(target))
    }

    // largest index whose prefix sum is <= target, by binary descent
    fn find(&self, mut target: u64) -> usize {
        let mut pos = 0usize;
        let mut step = self.tree.len().next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= self.tree.len() && self.tree[next - 1] <= target {
                target -= self.tree[next - 1];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }
}
