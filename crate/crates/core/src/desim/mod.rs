//! Discrete-event simulation of the three-tier location database.
//!
//! Updates and calls arrive as Poisson streams at every RA. Each event is
//! classified by how far the move (or the caller–callee pair) reaches, and
//! that class fixes the sequence of database accesses it makes. Accesses of
//! one flow are sequential; each waits in the target database's FCFS queue.

mod engine;
mod gsm;

pub use engine::{
    run_simulation, DelayMetrics, LevelMetrics, LevelService, SimConfig, SimError, SimMetrics,
};
pub use gsm::{gsm_baseline_flow, GsmError, GsmNetwork};

use rand::Rng;

use crate::params::{Level, SystemParams};
use crate::trace::{AccessKind, FlowStep, FlowTrace};

/// Which instance of a tier an access goes to: the one serving the event's
/// origin, or the one on the far side of the move or call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Origin,
    Remote,
}

/// One access of a flow skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub level: Level,
    pub side: Side,
    pub kind: AccessKind,
}

const fn step(level: Level, side: Side, kind: AccessKind) -> PathStep {
    PathStep { level, side, kind }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateClass {
    /// New RA under the same DB1.
    SameDb1Move,
    /// New DB1 area, same DB0.
    NewDb1SameDb0,
    /// New DB0 area.
    NewDb0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CallClass {
    SameDb2,
    SameDb1DiffDb2,
    SameDb0DiffDb1,
    DiffDb0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventClass {
    Update(UpdateClass),
    Call(CallClass),
}

impl UpdateClass {
    pub const ALL: [UpdateClass; 3] = [
        UpdateClass::SameDb1Move,
        UpdateClass::NewDb1SameDb0,
        UpdateClass::NewDb0,
    ];

    pub fn probability(self, p: &SystemParams) -> f64 {
        match self {
            UpdateClass::SameDb1Move => 1.0 - p.q0 - p.q1,
            UpdateClass::NewDb1SameDb0 => p.q1,
            UpdateClass::NewDb0 => p.q0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(p: &SystemParams, rng: &mut R) -> Self {
        let u: f64 = rng.random();
        if u < p.q0 {
            UpdateClass::NewDb0
        } else if u < p.q0 + p.q1 {
            UpdateClass::NewDb1SameDb0
        } else {
            UpdateClass::SameDb1Move
        }
    }
}

impl CallClass {
    pub const ALL: [CallClass; 4] = [
        CallClass::SameDb2,
        CallClass::SameDb1DiffDb2,
        CallClass::SameDb0DiffDb1,
        CallClass::DiffDb0,
    ];

    pub fn probability(self, p: &SystemParams) -> f64 {
        match self {
            CallClass::SameDb2 => 1.0 - p.p0 - p.p1 - p.p2,
            CallClass::SameDb1DiffDb2 => p.p2,
            CallClass::SameDb0DiffDb1 => p.p1,
            CallClass::DiffDb0 => p.p0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(p: &SystemParams, rng: &mut R) -> Self {
        let u: f64 = rng.random();
        if u < p.p0 {
            CallClass::DiffDb0
        } else if u < p.p0 + p.p1 {
            CallClass::SameDb0DiffDb1
        } else if u < p.p0 + p.p1 + p.p2 {
            CallClass::SameDb1DiffDb2
        } else {
            CallClass::SameDb2
        }
    }
}

use AccessKind::{Deregister, Query, Register};
use Level::{Db0, Db1, Db2};
use Side::{Origin, Remote};

// Updates register at the new RA, clear the old one, then climb as far as the
// move reaches. A move across DB0s touches the old DB0 before the new one.
const SAME_DB1_MOVE: &[PathStep] = &[
    step(Db2, Origin, Register),
    step(Db2, Remote, Deregister),
    step(Db1, Origin, Register),
];
const NEW_DB1: &[PathStep] = &[
    step(Db2, Origin, Register),
    step(Db2, Remote, Deregister),
    step(Db1, Origin, Register),
    step(Db1, Remote, Deregister),
    step(Db0, Origin, Register),
];
const NEW_DB0: &[PathStep] = &[
    step(Db2, Origin, Register),
    step(Db2, Remote, Deregister),
    step(Db1, Origin, Register),
    step(Db1, Remote, Deregister),
    step(Db0, Remote, Deregister),
    step(Db0, Origin, Register),
];

// Calls climb from the caller's DB2 to the lowest common ancestor and come
// back down to the callee's DB2.
const CALL_SAME_DB2: &[PathStep] = &[step(Db2, Origin, Query)];
const CALL_SAME_DB1: &[PathStep] = &[
    step(Db2, Origin, Query),
    step(Db1, Origin, Query),
    step(Db2, Remote, Query),
];
const CALL_SAME_DB0: &[PathStep] = &[
    step(Db2, Origin, Query),
    step(Db1, Origin, Query),
    step(Db0, Origin, Query),
    step(Db1, Remote, Query),
    step(Db2, Remote, Query),
];
const CALL_DIFF_DB0: &[PathStep] = &[
    step(Db2, Origin, Query),
    step(Db1, Origin, Query),
    step(Db0, Origin, Query),
    step(Db0, Remote, Query),
    step(Db1, Remote, Query),
    step(Db2, Remote, Query),
];

pub fn update_path(class: UpdateClass) -> &'static [PathStep] {
    match class {
        UpdateClass::SameDb1Move => SAME_DB1_MOVE,
        UpdateClass::NewDb1SameDb0 => NEW_DB1,
        UpdateClass::NewDb0 => NEW_DB0,
    }
}

pub fn call_path(class: CallClass) -> &'static [PathStep] {
    match class {
        CallClass::SameDb2 => CALL_SAME_DB2,
        CallClass::SameDb1DiffDb2 => CALL_SAME_DB1,
        CallClass::SameDb0DiffDb1 => CALL_SAME_DB0,
        CallClass::DiffDb0 => CALL_DIFF_DB0,
    }
}

pub fn event_path(class: EventClass) -> &'static [PathStep] {
    match class {
        EventClass::Update(c) => update_path(c),
        EventClass::Call(c) => call_path(c),
    }
}

fn skeleton(path: &[PathStep]) -> FlowTrace {
    let mut trace = FlowTrace::new();
    for s in path {
        let node = match s.side {
            Side::Origin => 0,
            Side::Remote => 1,
        };
        trace.push(FlowStep::at(s.level.into(), node, s.kind, 0.0, 0));
    }
    trace
}

/// Untimed trace of the accesses a location update of `class` makes. Node id
/// 0 marks the origin-side instance, 1 the remote one.
pub fn access_path_for_update(class: UpdateClass) -> FlowTrace {
    skeleton(update_path(class))
}

/// Untimed trace of the accesses a call delivery of `class` makes.
pub fn access_path_for_call(class: CallClass) -> FlowTrace {
    skeleton(call_path(class))
}

/// Accesses per tier for one path.
pub fn level_counts(path: &[PathStep]) -> [usize; 3] {
    let mut counts = [0; 3];
    for s in path {
        counts[s.level.index()] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbNode {
    pub level: Level,
    pub id: u32,
    /// DB1 above a DB2; `None` for DB1 and DB0.
    pub parent: Option<u32>,
}

/// One distributed subsystem: a DB0 over `n0 / n1` DB1s over `n0` DB2s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    pub db0: DbNode,
    pub db1: Vec<DbNode>,
    pub db2: Vec<DbNode>,
    pub n1: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot tile {n0} DB2s into DB1 groups of {n1}")]
pub struct TopologyError {
    pub n0: u32,
    pub n1: u32,
}

impl Hierarchy {
    pub fn db1_of(&self, db2: u32) -> u32 {
        db2 / self.n1
    }

    pub fn count(&self, level: Level) -> usize {
        match level {
            Level::Db0 => 1,
            Level::Db1 => self.db1.len(),
            Level::Db2 => self.db2.len(),
        }
    }

    /// DB2s under `db1`.
    pub fn children(&self, db1: u32) -> std::ops::Range<u32> {
        db1 * self.n1..(db1 + 1) * self.n1
    }
}

pub fn build_topology(p: &SystemParams) -> Result<Hierarchy, TopologyError> {
    let (n0, n1) = (p.n0, p.n1);
    if n1 == 0 || n0 < n1 || n0 % n1 != 0 {
        return Err(TopologyError { n0, n1 });
    }
    let db1 = (0..n0 / n1)
        .map(|id| DbNode {
            level: Level::Db1,
            id,
            parent: None,
        })
        .collect();
    let db2 = (0..n0)
        .map(|id| DbNode {
            level: Level::Db2,
            id,
            parent: Some(id / n1),
        })
        .collect();
    Ok(Hierarchy {
        db0: DbNode {
            level: Level::Db0,
            id: 0,
            parent: None,
        },
        db1,
        db2,
        n1,
    })
}
