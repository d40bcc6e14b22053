use super::{NetworkId, VlrId};
use crate::index::Ptn;

pub const DEFAULT_CACHE_CAPACITY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheEntry {
    pub ptn: Ptn,
    pub vlr: VlrId,
    pub network: NetworkId,
    /// Network through which the VLR is reached.
    pub connection_network: NetworkId,
    pub last_touch: u64,
}

/// Recently registered, called or calling terminals. Least recently touched
/// entry goes first when full.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NlrCache {
    capacity: usize,
    entries: Vec<CacheEntry>,
    clock: u64,
}

impl Default for NlrCache {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_CAPACITY)
    }
}

impl NlrCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: Vec::with_capacity(capacity),
            clock: 0,
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

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// A hit refreshes the entry's recency.
    pub fn lookup(&mut self, ptn: Ptn) -> Option<CacheEntry> {
        let now = self.tick();
        let e = self.entries.iter_mut().find(|e| e.ptn == ptn)?;
        e.last_touch = now;
        Some(*e)
    }

    /// Lookup without touching.
    pub fn peek(&self, ptn: Ptn) -> Option<&CacheEntry> {
        self.entries.iter().find(|e| e.ptn == ptn)
    }

    /// Inserts or refreshes; returns the evicted entry, if any.
    pub fn insert(
        &mut self,
        ptn: Ptn,
        vlr: VlrId,
        network: NetworkId,
        connection_network: NetworkId,
    ) -> Option<CacheEntry> {
        if self.capacity == 0 {
            return None;
        }
        let now = self.tick();
        let fresh = CacheEntry {
            ptn,
            vlr,
            network,
            connection_network,
            last_touch: now,
        };
        if let Some(e) = self.entries.iter_mut().find(|e| e.ptn == ptn) {
            *e = fresh;
            return None;
        }
        let evicted = if self.entries.len() >= self.capacity {
            let (i, _) = self
                .entries
                .iter()
                .enumerate()
                .min_by_key(|(_, e)| e.last_touch)
                .expect("full cache is non-empty");
            Some(self.entries.swap_remove(i))
        } else {
            None
        };
        self.entries.push(fresh);
        evicted
    }

    pub fn remove(&mut self, ptn: Ptn) -> Option<CacheEntry> {
        let i = self.entries.iter().position(|e| e.ptn == ptn)?;
        Some(self.entries.swap_remove(i))
    }
}
