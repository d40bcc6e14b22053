//! Direct file: the key itself addresses the slot, so every lookup is one
//! slot access regardless of how full the file is.

use super::{AccessStats, IndexError, Ptn, Residency};

#[derive(Debug, Clone)]
pub struct DirectFile<V> {
    base: Ptn,
    slots: Vec<Option<V>>,
    residency: Residency,
    occupied: usize,
}

impl<V> DirectFile<V> {
    /// Reserves one slot for every key in `base..base + capacity`.
    pub fn new(base: Ptn, capacity: usize, residency: Residency) -> Self {
        let mut slots = Vec::with_capacity(capacity);
        slots.resize_with(capacity, || None);
        Self {
            base,
            slots,
            residency,
            occupied: 0,
        }
    }

    pub fn base(&self) -> Ptn {
        self.base
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn residency(&self) -> Residency {
        self.residency
    }

    pub fn len(&self) -> usize {
        self.occupied
    }

    pub fn is_empty(&self) -> bool {
        self.occupied == 0
    }

    fn slot(&self, key: Ptn) -> Result<usize, IndexError> {
        key.checked_sub(self.base)
            .and_then(|off| usize::try_from(off).ok())
            .filter(|&off| off < self.slots.len())
            .ok_or(IndexError::OutOfRange {
                key,
                base: self.base,
                capacity: self.slots.len(),
            })
    }

    /// Stores `entry` under `key`, returning the previous entry.
    pub fn put(&mut self, key: Ptn, entry: V) -> Result<(Option<V>, AccessStats), IndexError> {
        let at = self.slot(key)?;
        let prev = self.slots[at].replace(entry);
        if prev.is_none() {
            self.occupied += 1;
        }
        Ok((prev, AccessStats::slot()))
    }

    pub fn get(&self, key: Ptn) -> Result<(Option<&V>, AccessStats), IndexError> {
        let at = self.slot(key)?;
        Ok((self.slots[at].as_ref(), AccessStats::slot()))
    }

    pub fn remove(&mut self, key: Ptn) -> Result<(Option<V>, AccessStats), IndexError> {
        let at = self.slot(key)?;
        let prev = self.slots[at].take();
        if prev.is_some() {
            self.occupied -= 1;
        }
        Ok((prev, AccessStats::slot()))
    }
}
