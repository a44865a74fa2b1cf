use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};

/// Fixed-capacity FIFO experience store.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    entries: Vec<T>,
    cursor: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts, evicting the oldest entry when full.
    pub fn push(&mut self, item: T) {
        if self.capacity == 0 {
            return;
        }
        if self.entries.len() < self.capacity {
            self.entries.push(item);
        } else {
            self.entries[self.cursor] = item;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    /// Entries from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        let (newer, older) = self.entries.split_at(self.cursor);
        older.iter().chain(newer)
    }

    /// `batch_size` distinct entries in random order.
    pub fn sample_minibatch<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<&T>> {
        if batch_size > self.entries.len() {
            return Err(Error::Underfull {
                size: self.entries.len(),
                requested: batch_size,
            });
        }
        let mut picks = index::sample(rng, self.entries.len(), batch_size).into_vec();
        picks.shuffle(rng);
        Ok(picks.into_iter().map(|i| &self.entries[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fifo_eviction() {
        let mut b = ReplayBuffer::new(5);
        for i in 1..=8 {
            b.push(i);
        }
        assert_eq!(b.iter().copied().collect::<Vec<_>>(), vec![4, 5, 6, 7, 8]);
    }

    #[test]
    fn full_batch_is_permutation() {
        let mut b = ReplayBuffer::new(20);
        (0..20).for_each(|i| b.push(i));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut got: Vec<i32> = b.sample_minibatch(20, &mut rng).unwrap().into_iter().copied().collect();
        got.sort();
        assert_eq!(got, (0..20).collect::<Vec<_>>());
        assert!(matches!(b.sample_minibatch(21, &mut rng), Err(Error::Underfull { size: 20, requested: 21 })));
    }
}
