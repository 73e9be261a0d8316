//! Bounded experience replay buffer.

use std::collections::VecDeque;

use rand::Rng;

/// One environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    /// Flat action id in the training action space.
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Fixed-capacity FIFO of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    buf: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayMemory {
    /// `capacity` is clamped up to 1.
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            buf: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Appends a transition, evicting the oldest once full.
    pub fn push(&mut self, t: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    /// Draws `batch` transitions uniformly, with replacement.
    ///
    /// # Panics
    /// Panics on an empty buffer; callers gate on [`ReplayMemory::len`].
    pub fn sample(&self, batch: usize, rng: &mut impl Rng) -> Vec<&Transition> {
        assert!(!self.buf.is_empty(), "cannot sample an empty replay buffer");
        (0..batch)
            .map(|_| &self.buf[rng.gen_range(0..self.buf.len())])
            .collect()
    }
}
