//! Index structures for location databases and the instrumentation that turns
//! their access counts into service-time statistics.

mod direct;
mod ttree;

pub use direct::DirectFile;
pub use ttree::{Lookup, TTree, Violation};

use thiserror::Error;

use crate::params::SystemParams;

/// Personal telecommunication number. Dense numeric keys.
pub type Ptn = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("key {0} already present")]
    DuplicateKey(Ptn),
    #[error("key {0} not found")]
    NotFound(Ptn),
    #[error("key {key} outside reserved range [{base}, {base} + {capacity})")]
    OutOfRange {
        key: Ptn,
        base: Ptn,
        capacity: usize,
    },
    #[error("bad T-node capacity: max {max_items}, min interior {min_interior}")]
    BadNodeCapacity {
        max_items: usize,
        min_interior: usize,
    },
    #[error("empty workload")]
    EmptyWorkload,
}

/// Where a direct file's slots live. Only affects the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Residency {
    Memory,
    Disk,
}

/// Work done by one index operation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AccessStats {
    pub nodes_visited: u64,
    pub comparisons: u64,
    /// Binary searches of a bounding node (0 or 1 per T-tree lookup).
    pub node_searches: u64,
    pub slot_accesses: u64,
}

impl AccessStats {
    pub(crate) fn slot() -> Self {
        Self {
            slot_accesses: 1,
            ..Self::default()
        }
    }
}

/// Converts access counts into time (seconds).
///
/// The defaults derived from [`SystemParams`] charge `c1·Tc` per node
/// visited, `Tc` per key comparison, `c2·Tc` per bounding-node search, `Ts`
/// per memory slot and `Tb` per disk slot. All weights are public, so the
/// alternative reading with `c2·Tc` per comparison is
/// `CostModel { comparison: c2 * tc, node_search: 0.0, .. }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub node_visit: f64,
    pub comparison: f64,
    pub node_search: f64,
    pub memory_slot: f64,
    pub disk_slot: f64,
}

impl CostModel {
    pub fn from_params(p: &SystemParams) -> Self {
        Self {
            node_visit: p.c1 * p.tc,
            comparison: p.tc,
            node_search: p.c2 * p.tc,
            memory_slot: p.ts,
            disk_slot: p.tb,
        }
    }

    pub fn time(&self, stats: &AccessStats, residency: Residency) -> f64 {
        let slot = match residency {
            Residency::Memory => self.memory_slot,
            Residency::Disk => self.disk_slot,
        };
        self.node_visit * stats.nodes_visited as f64
            + self.comparison * stats.comparisons as f64
            + self.node_search * stats.node_searches as f64
            + slot * stats.slot_accesses as f64
    }
}

/// Sample mean and unbiased variance of per-lookup service time, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceTimeEstimate {
    pub mean: f64,
    pub variance: f64,
    pub sample_count: u64,
}

impl ServiceTimeEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self, IndexError> {
        if samples.is_empty() {
            return Err(IndexError::EmptyWorkload);
        }
        // Welford
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let d = x - mean;
            mean += d / (i + 1) as f64;
            m2 += d * (x - mean);
        }
        let n = samples.len();
        let variance = if n > 1 {
            (m2 / (n - 1) as f64).max(0.0)
        } else {
            0.0
        };
        Ok(Self {
            mean,
            variance,
            sample_count: n as u64,
        })
    }

    pub fn mean_us(&self) -> f64 {
        self.mean * 1e6
    }

    pub fn variance_us2(&self) -> f64 {
        self.variance * 1e12
    }
}

/// A structure that can be probed by key and report its work.
pub trait Probe {
    fn probe(&self, key: Ptn) -> AccessStats;
    fn residency(&self) -> Residency;
}

impl<V> Probe for TTree<V> {
    fn probe(&self, key: Ptn) -> AccessStats {
        self.search(key).stats
    }

    fn residency(&self) -> Residency {
        Residency::Memory
    }
}

impl<V> Probe for DirectFile<V> {
    /// Out-of-range probes still cost the address check's one slot access.
    fn probe(&self, key: Ptn) -> AccessStats {
        self.get(key).map_or(AccessStats::slot(), |(_, s)| s)
    }

    fn residency(&self) -> Residency {
        DirectFile::residency(self)
    }
}

/// Per-probe service times for a workload.
pub fn service_samples<I: Probe + ?Sized>(
    index: &I,
    workload: &[Ptn],
    cost: &CostModel,
) -> Vec<f64> {
    let residency = index.residency();
    workload
        .iter()
        .map(|&k| cost.time(&index.probe(k), residency))
        .collect()
}

/// Runs every probe and summarizes the resulting service times.
pub fn measure_service_time<I: Probe + ?Sized>(
    index: &I,
    workload: &[Ptn],
    cost: &CostModel,
) -> Result<ServiceTimeEstimate, IndexError> {
    ServiceTimeEstimate::from_samples(&service_samples(index, workload, cost))
}
