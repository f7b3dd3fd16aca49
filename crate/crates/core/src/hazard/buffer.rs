use super::FeatureVector;
use rand::seq::index;
use rand::Rng;
use std::collections::VecDeque;

pub const DEFAULT_CAPACITY: usize = 10_000;

/// Bounded FIFO of labeled feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    samples: VecDeque<(FeatureVector, f64)>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            samples: VecDeque::with_capacity(capacity.min(4096)),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Appends a sample, evicting the oldest one when full.
    pub fn push(&mut self, z: FeatureVector, y: f64) {
        debug_assert!((0.0..=1.0).contains(&y));
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back((z, y));
    }

    pub fn extend(&mut self, samples: impl IntoIterator<Item = (FeatureVector, f64)>) {
        for (z, y) in samples {
            self.push(z, y);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &(FeatureVector, f64)> {
        self.samples.iter()
    }

    /// Up to `size` distinct samples drawn uniformly, as raw arrays for training.
    pub fn sample_batch<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Vec<([f64; 5], f64)> {
        if self.samples.len() <= size {
            return self.samples.iter().map(|(z, y)| (z.0, *y)).collect();
        }
        index::sample(rng, self.samples.len(), size)
            .into_iter()
            .map(|i| (self.samples[i].0 .0, self.samples[i].1))
            .collect()
    }
}
