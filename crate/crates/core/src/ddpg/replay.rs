use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};

/// One `(state, action, reward, next_state)` tuple. `action` holds phases in `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

impl Transition {
    fn validate(&self) -> Result<()> {
        let finite = self
            .state
            .iter()
            .chain(&self.action)
            .chain(&self.next_state)
            .all(|x| x.is_finite())
            && self.reward.is_finite();
        if !finite {
            return Err(Error::NonFinite("transition".into()));
        }
        if let Some(a) = self.action.iter().find(|a| !(0.0..TAU).contains(*a)) {
            return Err(Error::Parameter(format!("transition phase {a} outside [0, 2pi)")));
        }
        Ok(())
    }
}

/// Fixed-capacity FIFO ring of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    slots: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Parameter("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer {
            slots: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            cursor: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stores `t`, overwriting the oldest entry once full.
    pub fn push(&mut self, t: Transition) -> Result<()> {
        t.validate()?;
        if self.slots.len() < self.capacity {
            self.slots.push(t);
        } else {
            self.slots[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        self.sample_indices(batch_size, rng)
            .map(|idx| idx.into_iter().map(|i| &self.slots[i]).collect())
    }

    pub fn sample_indices<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.slots.is_empty() {
            return Err(Error::State("cannot sample from an empty replay buffer".into()));
        }
        Ok((0..batch_size).map(|_| rng.gen_range(0..self.slots.len())).collect())
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.slots.len() < self.capacity { 0 } else { self.cursor };
        self.slots[split..].iter().chain(&self.slots[..split])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(reward: f64) -> Transition {
        Transition {
            state: vec![0.0],
            action: vec![1.0],
            reward,
            next_state: vec![0.0],
        }
    }

    #[test]
    fn fifo_overwrite() {
        let cap = 5;
        let mut buf = ReplayBuffer::new(cap).unwrap();
        for n in 0..3 {
            for i in 0..cap + n {
                buf.push(t(i as f64)).unwrap();
            }
            let rewards: Vec<f64> = buf.iter().map(|t| t.reward).collect();
            let expected: Vec<f64> = (n..n + cap).map(|i| i as f64).collect();
            assert_eq!(rewards, expected);
            assert_eq!(buf.len(), cap);
            buf = ReplayBuffer::new(cap).unwrap();
        }
    }

    #[test]
    fn partial_fill_keeps_order() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        for i in 0..4 {
            buf.push(t(i as f64)).unwrap();
        }
        assert_eq!(buf.iter().map(|t| t.reward).collect::<Vec<_>>(), vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn uniform_sampling() {
        let cap = 20;
        let mut buf = ReplayBuffer::new(cap).unwrap();
        for i in 0..cap {
            buf.push(t(i as f64)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let mut counts = vec![0usize; cap];
        for i in buf.sample_indices(draws, &mut rng).unwrap() {
            counts[i] += 1;
        }
        let p = 1.0 / cap as f64;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 5.0 * sd, "count {c}");
        }
    }

    #[test]
    fn rejects_invalid_transitions() {
        let mut buf = ReplayBuffer::new(2).unwrap();
        let mut bad = t(0.0);
        bad.reward = f64::NAN;
        assert!(buf.push(bad).is_err());
        let mut bad = t(0.0);
        bad.action = vec![TAU];
        assert!(buf.push(bad).is_err());
        assert!(buf.sample(1, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(ReplayBuffer::new(0).is_err());
    }
}
