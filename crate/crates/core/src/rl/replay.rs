use std::collections::VecDeque;

use rand::Rng;

use super::network::{ACTION_DIM, STATE_DIM};

/// One stored step. `next_actions` is the candidate action set available at
/// `next_state`, frozen when the step is stored so replay can take the max
/// over it later.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: [f64; STATE_DIM],
    pub action: [f64; ACTION_DIM],
    pub reward: f64,
    pub next_state: [f64; STATE_DIM],
    pub next_actions: Vec<[f64; ACTION_DIM]>,
    pub terminal: bool,
}

/// Bounded FIFO buffer. Every insertion gets a serial number so eviction
/// order can be observed from outside.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    next_serial: u64,
    items: VecDeque<(u64, Transition)>,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "replay capacity must be positive");
        ReplayMemory {
            capacity,
            next_serial: 0,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    /// Stores `t` and returns the serial of the evicted transition, if any.
    pub fn push(&mut self, t: Transition) -> Option<u64> {
        let evicted = if self.is_full() {
            self.items.pop_front().map(|(s, _)| s)
        } else {
            None
        };
        self.items.push_back((self.next_serial, t));
        self.next_serial += 1;
        evicted
    }

    /// Serials currently held, oldest first.
    pub fn serials(&self) -> impl Iterator<Item = u64> + '_ {
        self.items.iter().map(|(s, _)| *s)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter().map(|(_, t)| t)
    }

    /// `min(batch, len)` distinct transitions drawn uniformly.
    pub fn sample<R: Rng>(&self, rng: &mut R, batch: usize) -> Vec<&Transition> {
        let amount = batch.min(self.items.len());
        rand::seq::index::sample(rng, self.items.len(), amount)
            .into_iter()
            .map(|i| &self.items[i].1)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transition(reward: f64) -> Transition {
        Transition {
            state: [0.0, 0.0],
            action: [0.0, 0.0],
            reward,
            next_state: [0.0, 0.0],
            next_actions: vec![],
            terminal: true,
        }
    }

    #[test]
    fn evicts_oldest_first() {
        let mut m = ReplayMemory::new(3);
        for i in 0..3 {
            assert_eq!(m.push(transition(i as f64)), None);
        }
        assert!(m.is_full());
        assert_eq!(m.push(transition(3.0)), Some(0));
        assert_eq!(m.push(transition(4.0)), Some(1));
        assert_eq!(m.len(), 3);
        assert_eq!(m.serials().collect::<Vec<_>>(), vec![2, 3, 4]);
        let rewards: Vec<f64> = m.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn sample_is_distinct_and_bounded() {
        let mut m = ReplayMemory::new(10);
        for i in 0..10 {
            m.push(transition(i as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let batch = m.sample(&mut rng, 4);
        assert_eq!(batch.len(), 4);
        let mut r: Vec<i64> = batch.iter().map(|t| t.reward as i64).collect();
        r.sort();
        r.dedup();
        assert_eq!(r.len(), 4);
        assert_eq!(m.sample(&mut rng, 50).len(), 10);
    }
}
