//! Flow traces: the ordered database and register accesses produced by one
//! update, call or handoff, and their line-delimited text form
//! `time,level,node_id,event_kind,queue_len`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::params::Level;

/// Who handles a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Db0,
    Db1,
    Db2,
    Hlr,
    Vlr,
    Msc,
    Nlr,
    Biu,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Db0 => "DB0",
            Role::Db1 => "DB1",
            Role::Db2 => "DB2",
            Role::Hlr => "HLR",
            Role::Vlr => "VLR",
            Role::Msc => "MSC",
            Role::Nlr => "NLR",
            Role::Biu => "BIU",
        }
    }

    pub fn level(self) -> Option<Level> {
        match self {
            Role::Db0 => Some(Level::Db0),
            Role::Db1 => Some(Level::Db1),
            Role::Db2 => Some(Level::Db2),
            _ => None,
        }
    }
}

impl From<Level> for Role {
    fn from(level: Level) -> Self {
        match level {
            Level::Db0 => Role::Db0,
            Level::Db1 => Role::Db1,
            Level::Db2 => Role::Db2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Query,
    Register,
    Deregister,
    CallSetup,
    RouteRequest,
    TldnAllocate,
    TldnRelay,
    CacheLookup,
    Connect,
    OverlapStore,
    PointerCreate,
    PointerRemove,
    Detach,
    RadioSupport,
    Arrive,
    Start,
    Finish,
}

impl AccessKind {
    const ALL: [AccessKind; 17] = [
        AccessKind::Query,
        AccessKind::Register,
        AccessKind::Deregister,
        AccessKind::CallSetup,
        AccessKind::RouteRequest,
        AccessKind::TldnAllocate,
        AccessKind::TldnRelay,
        AccessKind::CacheLookup,
        AccessKind::Connect,
        AccessKind::OverlapStore,
        AccessKind::PointerCreate,
        AccessKind::PointerRemove,
        AccessKind::Detach,
        AccessKind::RadioSupport,
        AccessKind::Arrive,
        AccessKind::Start,
        AccessKind::Finish,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AccessKind::Query => "query",
            AccessKind::Register => "register",
            AccessKind::Deregister => "deregister",
            AccessKind::CallSetup => "call_setup",
            AccessKind::RouteRequest => "route_request",
            AccessKind::TldnAllocate => "tldn_allocate",
            AccessKind::TldnRelay => "tldn_relay",
            AccessKind::CacheLookup => "cache_lookup",
            AccessKind::Connect => "connect",
            AccessKind::OverlapStore => "overlap_store",
            AccessKind::PointerCreate => "pointer_create",
            AccessKind::PointerRemove => "pointer_remove",
            AccessKind::Detach => "detach",
            AccessKind::RadioSupport => "radio_support",
            AccessKind::Arrive => "arrive",
            AccessKind::Start => "start",
            AccessKind::Finish => "finish",
        }
    }
}

/// One access within a flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowStep {
    pub role: Role,
    pub node_id: u32,
    pub kind: AccessKind,
    pub enqueue: f64,
    pub dequeue: f64,
    pub finish: f64,
    /// Queue length seen on arrival. Overlap traces store the number of
    /// live NLR pointers here.
    pub queue_len: usize,
}

impl FlowStep {
    /// A step with no timing, as used in path skeletons and protocol traces.
    pub fn at(role: Role, node_id: u32, kind: AccessKind, time: f64, queue_len: usize) -> Self {
        Self {
            role,
            node_id,
            kind,
            enqueue: time,
            dequeue: time,
            finish: time,
            queue_len,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowTrace {
    pub steps: Vec<FlowStep>,
}

impl FlowTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: FlowStep) {
        self.steps.push(step);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn count(&self, role: Role) -> usize {
        self.steps.iter().filter(|s| s.role == role).count()
    }

    pub fn count_kind(&self, role: Role, kind: AccessKind) -> usize {
        self.steps
            .iter()
            .filter(|s| s.role == role && s.kind == kind)
            .count()
    }

    /// Timestamps never decrease along the trace, and each step's own
    /// enqueue ≤ dequeue ≤ finish.
    pub fn is_time_ordered(&self) -> bool {
        self.steps
            .iter()
            .all(|s| s.enqueue <= s.dequeue && s.dequeue <= s.finish)
            && self.steps.windows(2).all(|w| w[0].finish <= w[1].enqueue)
    }

    pub fn extend(&mut self, other: FlowTrace) {
        self.steps.extend(other.steps);
    }

    pub fn lines(&self) -> impl Iterator<Item = TraceLine> + '_ {
        self.steps.iter().map(|s| TraceLine {
            time: s.enqueue,
            role: s.role,
            node_id: s.node_id,
            kind: s.kind,
            queue_len: s.queue_len,
        })
    }
}

/// `time,level,node_id,event_kind,queue_len`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceLine {
    pub time: f64,
    pub role: Role,
    pub node_id: u32,
    pub kind: AccessKind,
    pub queue_len: usize,
}

pub const TRACE_HEADER: &str = "time,level,node_id,event_kind,queue_len";

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?},{},{},{},{}",
            self.time,
            self.role.name(),
            self.node_id,
            self.kind.name(),
            self.queue_len
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad trace line {line:?}: {reason}")]
pub struct TraceParseError {
    pub line: String,
    pub reason: &'static str,
}

impl FromStr for TraceLine {
    type Err = TraceParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| TraceParseError {
            line: s.to_string(),
            reason,
        };
        let fields: Vec<&str> = s.trim().split(',').collect();
        let [time, role, node, kind, qlen] = fields[..] else {
            return Err(err("expected 5 fields"));
        };
        let roles = [
            Role::Db0,
            Role::Db1,
            Role::Db2,
            Role::Hlr,
            Role::Vlr,
            Role::Msc,
            Role::Nlr,
            Role::Biu,
        ];
        Ok(TraceLine {
            time: time.parse().map_err(|_| err("bad time"))?,
            role: roles
                .into_iter()
                .find(|r| r.name() == role)
                .ok_or_else(|| err("unknown level"))?,
            node_id: node.parse().map_err(|_| err("bad node id"))?,
            kind: AccessKind::ALL
                .into_iter()
                .find(|k| k.name() == kind)
                .ok_or_else(|| err("unknown event kind"))?,
            queue_len: qlen.parse().map_err(|_| err("bad queue length"))?,
        })
    }
}
