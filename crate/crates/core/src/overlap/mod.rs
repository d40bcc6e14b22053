//! Location management where several networks' coverage overlaps.
//!
//! A boundary interworking unit (BIU) next to every VLR discovers the
//! neighbouring VLRs of its own and other operators and records them, together
//! with terminals seen in the boundary area, in a neighbour location register
//! (NLR). The NLR also caches recently seen terminals so calls to them can be
//! connected without going up to DB1/DB0. A terminal in an overlap zone scores
//! each candidate network by bandwidth pressure and approach speed and
//! registers with the lowest score; terminals in a call keep the call alive
//! through NLR-to-NLR pointers while the handoff completes.

mod cache;
mod decision;
mod env;
mod system;

pub use cache::{CacheEntry, NlrCache, DEFAULT_CACHE_CAPACITY};
pub use decision::{
    choose_network, compute_qos, compute_velocity_sign, update_condition, Candidate, CombiningRule,
    UpdateCondition, DEFAULT_EPSILON,
};
pub use env::{
    neighbor_scan, NeighborEntry, NeighborRegister, Network, NetworkEnv, SignalClass, Vlr,
};
pub use system::{
    parse_waypoints, run_scenario, MobileTerminal, OverlapConfig, OverlapSystem, Pointer,
    Registration, Scenario, Waypoint,
};

use thiserror::Error;

pub type NetworkId = u32;
pub type VlrId = u32;
pub type RegionId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OverlapError {
    #[error("unknown VLR {0}")]
    UnknownVlr(VlrId),
    #[error("unknown network {0}")]
    UnknownNetwork(NetworkId),
    #[error("invalid network environment: {0}")]
    InvalidEnv(String),
    #[error("no bandwidth available")]
    NoCapacity,
    #[error("reference speed must be positive, got {0}")]
    BadReferenceSpeed(f64),
    #[error("no candidate networks")]
    NoCandidates,
    #[error("terminal {0} is not registered")]
    NotRegistered(u64),
    #[error("VLR {to} is not in the NLR neighbour list of VLR {from}")]
    NotNeighbor { from: VlrId, to: VlrId },
    #[error("region {0} is not covered by any VLR")]
    Uncovered(RegionId),
    #[error("malformed waypoints: {0}")]
    MalformedWaypoints(String),
}
