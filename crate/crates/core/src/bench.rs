//! Index micro-benchmarks: fill an index with `keys` subscribers in random
//! order, probe it with uniformly drawn existing keys and price each probe
//! with the cost model.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::IndexChoice;
use crate::index::{
    service_samples, CostModel, DirectFile, IndexError, Probe, Ptn, Residency, ServiceTimeEstimate,
    TTree,
};
use crate::params::SystemParams;

pub const DEFAULT_KEYS: u64 = 10_000;
pub const DEFAULT_PROBES: usize = 10_000;

#[derive(Debug, Clone)]
pub struct IndexBench {
    pub choice: IndexChoice,
    pub keys: u64,
    pub probes: usize,
    pub estimate: ServiceTimeEstimate,
    /// Per-probe service times, seconds.
    pub samples: Arc<[f64]>,
}

/// A T-tree with the configured node capacity holding `0..keys`.
pub fn build_ttree(p: &SystemParams, keys: u64, seed: u64) -> Result<TTree<()>, IndexError> {
    let mut order: Vec<Ptn> = (0..keys).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut tree = TTree::new(p.y1, p.y2)?;
    for k in order {
        tree.insert(k, ())?;
    }
    Ok(tree)
}

pub fn bench_index(
    p: &SystemParams,
    choice: IndexChoice,
    keys: u64,
    probes: usize,
    seed: u64,
) -> Result<IndexBench, IndexError> {
    if keys == 0 || probes == 0 {
        return Err(IndexError::EmptyWorkload);
    }
    let cost = CostModel::from_params(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let build_seed = rng.random();
    let workload: Vec<Ptn> = (0..probes).map(|_| rng.random_range(0..keys)).collect();
    let index: Box<dyn Probe> = match choice {
        IndexChoice::TTreeIndex => Box::new(build_ttree(p, keys, build_seed)?),
        IndexChoice::MemoryDirect | IndexChoice::DiskDirect => {
            let residency = if choice == IndexChoice::DiskDirect {
                Residency::Disk
            } else {
                Residency::Memory
            };
            let mut file = DirectFile::new(0, keys as usize, residency);
            for k in 0..keys {
                file.put(k, ())?;
            }
            Box::new(file)
        }
    };
    let samples = service_samples(index.as_ref(), &workload, &cost);
    Ok(IndexBench {
        choice,
        keys,
        probes,
        estimate: ServiceTimeEstimate::from_samples(&samples)?,
        samples: samples.into(),
    })
}
