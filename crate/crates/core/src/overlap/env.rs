use std::collections::{BTreeMap, BTreeSet};

use super::cache::NlrCache;
use super::{NetworkId, OverlapError, RegionId, VlrId};
use crate::index::Ptn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SignalClass {
    Strong,
    Medium,
    Weak,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub id: NetworkId,
    pub operator: String,
    /// Marks the operator terminals in the scenarios subscribe to.
    pub home: bool,
}

impl Network {
    pub fn new(id: NetworkId, operator: &str, home: bool) -> Self {
        Self {
            id,
            operator: operator.to_string(),
            home,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vlr {
    pub id: VlrId,
    pub network: NetworkId,
    pub regions: BTreeSet<RegionId>,
    pub bandwidth_mbps: f64,
    pub signal: SignalClass,
}

impl Vlr {
    pub fn new(id: VlrId, network: NetworkId, regions: &[RegionId], bandwidth_mbps: f64) -> Self {
        Self {
            id,
            network,
            regions: regions.iter().copied().collect(),
            bandwidth_mbps,
            signal: SignalClass::Strong,
        }
    }

    pub fn covers(&self, region: RegionId) -> bool {
        self.regions.contains(&region)
    }

    pub fn overlaps(&self, other: &Vlr) -> bool {
        self.id != other.id && !self.regions.is_disjoint(&other.regions)
    }
}

/// Networks and VLR coverage areas. Regions are shared identifiers for
/// patches of ground; two VLRs overlap where their region sets intersect.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEnv {
    networks: BTreeMap<NetworkId, Network>,
    vlrs: BTreeMap<VlrId, Vlr>,
}

impl NetworkEnv {
    pub fn new(networks: Vec<Network>, vlrs: Vec<Vlr>) -> Result<Self, OverlapError> {
        let mut nets = BTreeMap::new();
        for n in networks {
            let id = n.id;
            if nets.insert(id, n).is_some() {
                return Err(OverlapError::InvalidEnv(format!(
                    "duplicate network id {id}"
                )));
            }
        }
        let mut map: BTreeMap<VlrId, Vlr> = BTreeMap::new();
        for v in vlrs {
            if !nets.contains_key(&v.network) {
                return Err(OverlapError::UnknownNetwork(v.network));
            }
            if !(v.bandwidth_mbps >= 0.0) {
                return Err(OverlapError::InvalidEnv(format!(
                    "VLR {} has negative bandwidth",
                    v.id
                )));
            }
            if v.regions.is_empty() {
                return Err(OverlapError::InvalidEnv(format!(
                    "VLR {} covers nothing",
                    v.id
                )));
            }
            let id = v.id;
            if map.insert(id, v).is_some() {
                return Err(OverlapError::InvalidEnv(format!("duplicate VLR id {id}")));
            }
        }
        Ok(Self {
            networks: nets,
            vlrs: map,
        })
    }

    pub fn network(&self, id: NetworkId) -> Option<&Network> {
        self.networks.get(&id)
    }

    pub fn home_network(&self) -> Option<NetworkId> {
        self.networks.values().find(|n| n.home).map(|n| n.id)
    }

    pub fn networks(&self) -> impl Iterator<Item = &Network> {
        self.networks.values()
    }

    pub fn vlr(&self, id: VlrId) -> Result<&Vlr, OverlapError> {
        self.vlrs.get(&id).ok_or(OverlapError::UnknownVlr(id))
    }

    pub fn vlrs(&self) -> impl Iterator<Item = &Vlr> {
        self.vlrs.values()
    }

    /// VLRs covering `region`, by id.
    pub fn covering(&self, region: RegionId) -> Vec<&Vlr> {
        self.vlrs.values().filter(|v| v.covers(region)).collect()
    }

    /// Same-network VLR pair: A={1,2} under VLR1, B={2,3} under VLR2.
    pub fn scenario_a() -> Self {
        Self::new(
            vec![net(1, "X")],
            vec![Vlr::new(1, 1, &[1, 2], 10.0), Vlr::new(2, 1, &[2, 3], 20.0)],
        )
        .expect("valid")
    }

    /// Like (a) but the second VLR belongs to another operator.
    pub fn scenario_b() -> Self {
        Self::new(
            vec![net(1, "X"), net(2, "Y")],
            vec![Vlr::new(1, 1, &[1, 2], 10.0), Vlr::new(2, 2, &[2, 3], 20.0)],
        )
        .expect("valid")
    }

    /// Three operators overlapping at region 2; region 4 only the third covers.
    pub fn scenario_c() -> Self {
        Self::new(
            vec![net(1, "X"), net(2, "Y"), net(3, "Z")],
            vec![
                Vlr::new(1, 1, &[1, 2], 10.0),
                Vlr::new(2, 2, &[2, 3], 20.0),
                Vlr::new(3, 3, &[2, 4], 15.0),
            ],
        )
        .expect("valid")
    }
}

fn net(id: NetworkId, operator: &str) -> Network {
    Network::new(id, operator, id == 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborEntry {
    pub vlr: VlrId,
    pub network: NetworkId,
    pub signal: SignalClass,
    pub connection_network: NetworkId,
}

/// What a BIU knows: neighbouring VLRs, the terminals currently in the
/// boundary area, and recently seen terminals.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborRegister {
    pub owner: VlrId,
    pub neighbors: Vec<NeighborEntry>,
    /// Owner regions shared with at least one neighbour.
    pub boundary: BTreeSet<RegionId>,
    pub overlap_mts: BTreeMap<Ptn, RegionId>,
    pub cache: NlrCache,
}

impl NeighborRegister {
    pub fn is_neighbor(&self, vlr: VlrId) -> bool {
        self.neighbors.iter().any(|n| n.vlr == vlr)
    }

    pub fn neighbor(&self, vlr: VlrId) -> Option<&NeighborEntry> {
        self.neighbors.iter().find(|n| n.vlr == vlr)
    }
}

/// Builds the NLR of `vlr`: every VLR whose coverage overlaps, and the
/// terminals (ptn, region) currently inside the overlap.
pub fn neighbor_scan(
    env: &NetworkEnv,
    vlr: VlrId,
    terminals: &[(Ptn, RegionId)],
    cache_capacity: usize,
) -> Result<NeighborRegister, OverlapError> {
    let own = env.vlr(vlr)?;
    let mut neighbors = Vec::new();
    let mut boundary = BTreeSet::new();
    for other in env.vlrs() {
        if own.overlaps(other) {
            neighbors.push(NeighborEntry {
                vlr: other.id,
                network: other.network,
                signal: other.signal,
                connection_network: other.network,
            });
            boundary.extend(own.regions.intersection(&other.regions).copied());
        }
    }
    let overlap_mts = terminals
        .iter()
        .filter(|(_, r)| boundary.contains(r))
        .copied()
        .collect();
    Ok(NeighborRegister {
        owner: vlr,
        neighbors,
        boundary,
        overlap_mts,
        cache: NlrCache::new(cache_capacity),
    })
}
