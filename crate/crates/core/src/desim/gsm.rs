//! Two-level HLR/VLR call delivery, kept as the baseline the three-tier
//! design is compared against.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::index::Ptn;
use crate::trace::{AccessKind, FlowStep, FlowTrace, Role};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GsmError {
    #[error("PTN {0} has no HLR record")]
    UnknownPtn(Ptn),
}

/// The HLR's view: which MSC/VLR serves each subscriber.
#[derive(Debug, Clone, Default)]
pub struct GsmNetwork {
    hlr: BTreeMap<Ptn, u32>,
    hlr_accesses: u64,
}

impl GsmNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Location update: the HLR now points at `vlr`.
    pub fn register(&mut self, ptn: Ptn, vlr: u32) -> Option<u32> {
        self.hlr_accesses += 1;
        self.hlr.insert(ptn, vlr)
    }

    pub fn serving_vlr(&self, ptn: Ptn) -> Option<u32> {
        self.hlr.get(&ptn).copied()
    }

    pub fn hlr_accesses(&self) -> u64 {
        self.hlr_accesses
    }
}

/// Call delivery from `calling_msc` to `callee`: query the HLR, ask the
/// serving MSC/VLR for a routing number, allocate a TLDN there and relay it
/// back through the HLR to the caller.
pub fn gsm_baseline_flow(
    net: &mut GsmNetwork,
    calling_msc: u32,
    callee: Ptn,
) -> Result<FlowTrace, GsmError> {
    let serving = net
        .serving_vlr(callee)
        .ok_or(GsmError::UnknownPtn(callee))?;
    net.hlr_accesses += 2;
    let mut trace = FlowTrace::new();
    let steps = [
        (Role::Msc, calling_msc, AccessKind::CallSetup),
        (Role::Hlr, 0, AccessKind::Query),
        (Role::Vlr, serving, AccessKind::RouteRequest),
        (Role::Msc, serving, AccessKind::TldnAllocate),
        (Role::Hlr, 0, AccessKind::TldnRelay),
    ];
    for (i, (role, node, kind)) in steps.into_iter().enumerate() {
        trace.push(FlowStep::at(role, node, kind, i as f64, 0));
    }
    Ok(trace)
}
