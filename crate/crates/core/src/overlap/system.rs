use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::decision::{
    choose_network, compute_qos, compute_velocity_sign, update_condition, Candidate, CombiningRule,
};
use super::env::{neighbor_scan, NeighborRegister, NetworkEnv, Vlr};
use super::{NetworkId, OverlapError, RegionId, VlrId, DEFAULT_CACHE_CAPACITY};
use crate::index::Ptn;
use crate::trace::{AccessKind, FlowStep, FlowTrace, Role};

/// Spacing between consecutive steps of one flow in the trace clock.
const STEP_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Registration {
    pub network: NetworkId,
    pub vlr: VlrId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobileTerminal {
    ptn: Ptn,
    pub home: NetworkId,
    registration: Option<Registration>,
    pub region: Option<RegionId>,
    pub speed_kmh: f64,
    /// Network whose coverage the terminal is moving toward.
    pub heading: Option<NetworkId>,
    pub bandwidth_required: f64,
    pub in_call: bool,
}

impl MobileTerminal {
    pub fn new(ptn: Ptn, home: NetworkId, bandwidth_required: f64) -> Self {
        Self {
            ptn,
            home,
            registration: None,
            region: None,
            speed_kmh: 0.0,
            heading: None,
            bandwidth_required,
            in_call: false,
        }
    }

    pub fn ptn(&self) -> Ptn {
        self.ptn
    }

    pub fn registration(&self) -> Option<Registration> {
        self.registration
    }

    /// Signed speed toward `network`'s coverage.
    pub fn approach_speed(&self, network: NetworkId) -> f64 {
        if self.heading == Some(network) {
            self.speed_kmh
        } else {
            -self.speed_kmh
        }
    }
}

/// NLR-to-NLR address pointer held for an in-call terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pointer {
    pub ptn: Ptn,
    pub from: VlrId,
    pub to: VlrId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapConfig {
    pub rule: CombiningRule,
    /// km/h; the slower of the two mobility classes by default.
    pub reference_speed: f64,
    pub cache_capacity: usize,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        Self {
            rule: CombiningRule::default(),
            reference_speed: 56.0,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub t_s: f64,
    pub region: RegionId,
    pub speed_kmh: f64,
    pub heading: NetworkId,
    pub in_call: bool,
}

impl Waypoint {
    pub fn new(
        t_s: f64,
        region: RegionId,
        speed_kmh: f64,
        heading: NetworkId,
        in_call: bool,
    ) -> Self {
        Self {
            t_s,
            region,
            speed_kmh,
            heading,
            in_call,
        }
    }
}

impl fmt::Display for Waypoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.t_s, self.region, self.speed_kmh, self.heading, self.in_call as u8
        )
    }
}

impl FromStr for Waypoint {
    type Err = OverlapError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let bad = |what: &str| OverlapError::MalformedWaypoints(format!("{what} in {line:?}"));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        let t_s: f64 = fields[0].parse().map_err(|_| bad("bad time"))?;
        let region = fields[1].parse().map_err(|_| bad("bad region id"))?;
        let speed_kmh: f64 = fields[2].parse().map_err(|_| bad("bad speed"))?;
        let heading = fields[3]
            .parse()
            .map_err(|_| bad("bad heading network id"))?;
        let in_call = match fields[4] {
            "1" | "true" => true,
            "0" | "false" => false,
            _ => return Err(bad("bad in_call flag")),
        };
        if !(t_s.is_finite() && t_s >= 0.0) {
            return Err(bad("time must be finite and non-negative"));
        }
        if !(speed_kmh.is_finite() && speed_kmh >= 0.0) {
            return Err(bad("speed must be finite and non-negative"));
        }
        Ok(Self::new(t_s, region, speed_kmh, heading, in_call))
    }
}

/// One waypoint per line; blank lines and `#` comments are skipped.
pub fn parse_waypoints(text: &str) -> Result<Vec<Waypoint>, OverlapError> {
    let wps = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect::<Result<Vec<Waypoint>, _>>()?;
    check_waypoints(&wps)?;
    Ok(wps)
}

fn check_waypoints(wps: &[Waypoint]) -> Result<(), OverlapError> {
    if wps.is_empty() {
        return Err(OverlapError::MalformedWaypoints(
            "empty waypoint list".into(),
        ));
    }
    for w in wps {
        if !(w.t_s.is_finite() && w.t_s >= 0.0 && w.speed_kmh.is_finite() && w.speed_kmh >= 0.0) {
            return Err(OverlapError::MalformedWaypoints(format!(
                "bad waypoint {w}"
            )));
        }
    }
    if wps.windows(2).any(|p| p[1].t_s < p[0].t_s) {
        return Err(OverlapError::MalformedWaypoints(
            "times go backwards".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Two VLRs of one network.
    A,
    /// Two networks.
    B,
    /// Three networks sharing one overlap zone.
    C,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::A, Scenario::B, Scenario::C];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::A => "a",
            Scenario::B => "b",
            Scenario::C => "c",
        }
    }

    pub fn env(self) -> NetworkEnv {
        match self {
            Scenario::A => NetworkEnv::scenario_a(),
            Scenario::B => NetworkEnv::scenario_b(),
            Scenario::C => NetworkEnv::scenario_c(),
        }
    }

    /// An in-call walk at 28 km/h: A → B → C, and for (c) back through B to D.
    pub fn default_waypoints(self) -> Vec<Waypoint> {
        let toward = match self {
            Scenario::A => 1,
            Scenario::B | Scenario::C => 2,
        };
        let mut w = vec![
            Waypoint::new(0.0, 1, 28.0, toward, true),
            Waypoint::new(10.0, 2, 28.0, toward, true),
            Waypoint::new(20.0, 3, 28.0, toward, true),
        ];
        if self == Scenario::C {
            w.push(Waypoint::new(30.0, 2, 28.0, 3, true));
            w.push(Waypoint::new(40.0, 4, 28.0, 3, true));
        }
        w
    }

    pub fn terminal(self, ptn: Ptn) -> MobileTerminal {
        MobileTerminal::new(ptn, 1, 2.0)
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Scenario::A),
            "b" => Ok(Scenario::B),
            "c" => Ok(Scenario::C),
            other => Err(format!("unknown scenario {other:?}, expected a, b or c")),
        }
    }
}

/// Registers, NLRs, pointers and the DB1/DB0 view of where each terminal is.
#[derive(Debug, Clone)]
pub struct OverlapSystem {
    env: NetworkEnv,
    config: OverlapConfig,
    nlrs: BTreeMap<VlrId, NeighborRegister>,
    visitors: BTreeMap<VlrId, BTreeSet<Ptn>>,
    locations: BTreeMap<Ptn, Registration>,
    pointers: Vec<Pointer>,
    /// Trace time is `base + ticks * STEP_DT`.
    base: f64,
    ticks: u64,
}

impl OverlapSystem {
    pub fn new(env: NetworkEnv, config: OverlapConfig) -> Result<Self, OverlapError> {
        if !(config.reference_speed > 0.0) {
            return Err(OverlapError::BadReferenceSpeed(config.reference_speed));
        }
        let mut nlrs = BTreeMap::new();
        let mut visitors = BTreeMap::new();
        for v in env.vlrs() {
            nlrs.insert(v.id, neighbor_scan(&env, v.id, &[], config.cache_capacity)?);
            visitors.insert(v.id, BTreeSet::new());
        }
        Ok(Self {
            env,
            config,
            nlrs,
            visitors,
            locations: BTreeMap::new(),
            pointers: Vec::new(),
            base: 0.0,
            ticks: 0,
        })
    }

    pub fn env(&self) -> &NetworkEnv {
        &self.env
    }

    pub fn nlr(&self, vlr: VlrId) -> Result<&NeighborRegister, OverlapError> {
        self.nlrs.get(&vlr).ok_or(OverlapError::UnknownVlr(vlr))
    }

    pub fn pointers(&self) -> &[Pointer] {
        &self.pointers
    }

    pub fn pointers_of(&self, ptn: Ptn) -> usize {
        self.pointers.iter().filter(|p| p.ptn == ptn).count()
    }

    /// VLRs holding a record for `ptn`.
    pub fn vlr_records(&self, ptn: Ptn) -> Vec<VlrId> {
        self.visitors
            .iter()
            .filter(|(_, s)| s.contains(&ptn))
            .map(|(&v, _)| v)
            .collect()
    }

    /// Where DB1/DB0 would route a call.
    pub fn location(&self, ptn: Ptn) -> Option<Registration> {
        self.locations.get(&ptn).copied()
    }

    pub fn clock(&self) -> f64 {
        self.base + self.ticks as f64 * STEP_DT
    }

    fn emit(&mut self, trace: &mut FlowTrace, role: Role, node: u32, kind: AccessKind, ptn: Ptn) {
        self.ticks += 1;
        trace.push(FlowStep::at(
            role,
            node,
            kind,
            self.clock(),
            self.pointers_of(ptn),
        ));
    }

    fn score(&self, mt: &MobileTerminal, vlr: &Vlr) -> Result<Candidate, OverlapError> {
        let q = compute_qos(mt.bandwidth_required, vlr.bandwidth_mbps)?;
        let own = vlr.network == mt.home;
        let vs = compute_velocity_sign(
            mt.approach_speed(vlr.network),
            own,
            self.config.reference_speed,
        )?;
        Ok(Candidate {
            network: vlr.network,
            vlr: vlr.id,
            own,
            condition: update_condition(q, vs, self.config.rule),
        })
    }

    /// Scores every VLR covering `region` that has bandwidth and picks one.
    pub fn select(&self, mt: &MobileTerminal, region: RegionId) -> Result<Candidate, OverlapError> {
        let covering = self.env.covering(region);
        if covering.is_empty() {
            return Err(OverlapError::Uncovered(region));
        }
        let mut cands = Vec::with_capacity(covering.len());
        for v in covering {
            match self.score(mt, v) {
                Ok(c) => cands.push(c),
                Err(OverlapError::NoCapacity) => {}
                Err(e) => return Err(e),
            }
        }
        if cands.is_empty() {
            return Err(OverlapError::NoCapacity);
        }
        choose_network(&cands, self.config.rule)
    }

    /// First registration of a terminal that has none.
    pub fn attach(
        &mut self,
        mt: &mut MobileTerminal,
        vlr: VlrId,
    ) -> Result<FlowTrace, OverlapError> {
        let network = self.env.vlr(vlr)?.network;
        let ptn = mt.ptn;
        let mut trace = FlowTrace::new();
        self.emit(&mut trace, Role::Vlr, vlr, AccessKind::Register, ptn);
        self.emit(&mut trace, Role::Db1, network, AccessKind::Register, ptn);
        self.finalize(mt, Registration { network, vlr });
        Ok(trace)
    }

    fn finalize(&mut self, mt: &mut MobileTerminal, reg: Registration) {
        self.visitors.entry(reg.vlr).or_default().insert(mt.ptn);
        self.locations.insert(mt.ptn, reg);
        mt.registration = Some(reg);
        let nlr = self.nlrs.get_mut(&reg.vlr).expect("every VLR has an NLR");
        nlr.cache.insert(mt.ptn, reg.vlr, reg.network, reg.network);
    }

    fn create_pointer(&mut self, trace: &mut FlowTrace, ptn: Ptn, from: VlrId, to: VlrId) {
        if !self
            .pointers
            .iter()
            .any(|p| p.ptn == ptn && p.from == from && p.to == to)
        {
            self.pointers.push(Pointer { ptn, from, to });
            self.emit(trace, Role::Nlr, from, AccessKind::PointerCreate, ptn);
        }
    }

    fn remove_pointers(&mut self, trace: &mut FlowTrace, ptn: Ptn) {
        while let Some(i) = self.pointers.iter().position(|p| p.ptn == ptn) {
            let p = self.pointers.remove(i);
            self.emit(trace, Role::Nlr, p.from, AccessKind::PointerRemove, ptn);
        }
    }

    /// Moves the terminal's registration from its current VLR to `to`. A
    /// terminal in a call is carried by an NLR pointer and the target BIU's
    /// radio support until the new registration is final.
    pub fn handoff(
        &mut self,
        mt: &mut MobileTerminal,
        to: VlrId,
    ) -> Result<FlowTrace, OverlapError> {
        let ptn = mt.ptn;
        let from = mt.registration.ok_or(OverlapError::NotRegistered(ptn))?;
        let target = self.env.vlr(to)?.network;
        if !self.nlr(from.vlr)?.is_neighbor(to) {
            return Err(OverlapError::NotNeighbor { from: from.vlr, to });
        }
        let mut trace = FlowTrace::new();
        if mt.in_call {
            self.create_pointer(&mut trace, ptn, from.vlr, to);
            self.emit(&mut trace, Role::Vlr, from.vlr, AccessKind::Detach, ptn);
            self.emit(&mut trace, Role::Biu, to, AccessKind::RadioSupport, ptn);
        }
        self.emit(&mut trace, Role::Vlr, to, AccessKind::Register, ptn);
        self.emit(&mut trace, Role::Db1, target, AccessKind::Register, ptn);
        if target != from.network {
            self.emit(&mut trace, Role::Db0, 0, AccessKind::Register, ptn);
        }
        self.finalize(
            mt,
            Registration {
                network: target,
                vlr: to,
            },
        );
        self.visitors.entry(from.vlr).or_default().remove(&ptn);
        self.emit(&mut trace, Role::Vlr, from.vlr, AccessKind::Deregister, ptn);
        // the old NLR remembers where the terminal went
        let old = self.nlrs.get_mut(&from.vlr).expect("every VLR has an NLR");
        old.cache.insert(ptn, to, target, target);
        old.overlap_mts.remove(&ptn);
        self.remove_pointers(&mut trace, ptn);
        Ok(trace)
    }

    /// Call from a terminal served by `from_vlr` to `callee`. The caller's
    /// NLR cache is tried first; on a hit the connection goes straight to the
    /// cached VLR. Otherwise DB1 (and DB0 across networks) resolve it.
    pub fn deliver_call(
        &mut self,
        from_vlr: VlrId,
        callee: Ptn,
    ) -> Result<FlowTrace, OverlapError> {
        let origin = self.env.vlr(from_vlr)?.network;
        let mut trace = FlowTrace::new();
        self.emit(
            &mut trace,
            Role::Nlr,
            from_vlr,
            AccessKind::CacheLookup,
            callee,
        );
        let cached = self
            .nlrs
            .get_mut(&from_vlr)
            .expect("every VLR has an NLR")
            .cache
            .lookup(callee);
        let fresh = cached.filter(|e| {
            self.visitors
                .get(&e.vlr)
                .is_some_and(|s| s.contains(&callee))
        });
        let vlr = match fresh {
            Some(e) => e.vlr,
            None => {
                let loc = self
                    .locations
                    .get(&callee)
                    .copied()
                    .ok_or(OverlapError::NotRegistered(callee))?;
                self.emit(&mut trace, Role::Db1, origin, AccessKind::Query, callee);
                if loc.network != origin {
                    self.emit(&mut trace, Role::Db0, 0, AccessKind::Query, callee);
                    self.emit(
                        &mut trace,
                        Role::Db1,
                        loc.network,
                        AccessKind::Query,
                        callee,
                    );
                }
                let nlr = self.nlrs.get_mut(&from_vlr).expect("every VLR has an NLR");
                nlr.cache.insert(callee, loc.vlr, loc.network, loc.network);
                loc.vlr
            }
        };
        self.emit(&mut trace, Role::Vlr, vlr, AccessKind::Connect, callee);
        Ok(trace)
    }

    /// Applies one waypoint.
    pub fn step(
        &mut self,
        mt: &mut MobileTerminal,
        wp: &Waypoint,
    ) -> Result<FlowTrace, OverlapError> {
        check_waypoints(std::slice::from_ref(wp))?;
        if self.env.network(wp.heading).is_none() {
            return Err(OverlapError::UnknownNetwork(wp.heading));
        }
        if self.env.covering(wp.region).is_empty() {
            return Err(OverlapError::Uncovered(wp.region));
        }
        if wp.t_s > self.clock() {
            self.base = wp.t_s;
            self.ticks = 0;
        }
        mt.region = Some(wp.region);
        mt.speed_kmh = wp.speed_kmh;
        mt.heading = Some(wp.heading);
        mt.in_call = wp.in_call;
        let ptn = mt.ptn;

        let mut trace = FlowTrace::new();
        match mt.registration {
            None => {
                let best = self.select(mt, wp.region)?;
                trace.extend(self.attach(mt, best.vlr)?);
            }
            Some(cur) if self.env.vlr(cur.vlr)?.covers(wp.region) => {
                let others: Vec<(VlrId, NetworkId)> = self
                    .env
                    .covering(wp.region)
                    .into_iter()
                    .filter(|v| v.id != cur.vlr)
                    .map(|v| (v.id, v.network))
                    .collect();
                if !others.is_empty() {
                    // terminal is in the boundary area
                    self.emit(
                        &mut trace,
                        Role::Nlr,
                        cur.vlr,
                        AccessKind::OverlapStore,
                        ptn,
                    );
                    let toward = mt.in_call
                        && mt.speed_kmh > 0.0
                        && others.iter().any(|&(_, n)| Some(n) == mt.heading);
                    if toward {
                        for &(v, _) in &others {
                            self.create_pointer(&mut trace, ptn, cur.vlr, v);
                        }
                    }
                    let best = self.select(mt, wp.region)?;
                    if best.vlr != cur.vlr {
                        trace.extend(self.handoff(mt, best.vlr)?);
                    } else {
                        self.remove_pointers(&mut trace, ptn);
                    }
                }
            }
            Some(_) => {
                let best = self.select(mt, wp.region)?;
                trace.extend(self.handoff(mt, best.vlr)?);
            }
        }

        for nlr in self.nlrs.values_mut() {
            nlr.overlap_mts.remove(&ptn);
        }
        if let Some(reg) = mt.registration {
            let nlr = self.nlrs.get_mut(&reg.vlr).expect("every VLR has an NLR");
            if nlr.boundary.contains(&wp.region) {
                nlr.overlap_mts.insert(ptn, wp.region);
            }
        }
        Ok(trace)
    }

    pub fn run(
        &mut self,
        mt: &mut MobileTerminal,
        waypoints: &[Waypoint],
    ) -> Result<FlowTrace, OverlapError> {
        check_waypoints(waypoints)?;
        let mut trace = FlowTrace::new();
        for wp in waypoints {
            trace.extend(self.step(mt, wp)?);
        }
        Ok(trace)
    }
}

/// Drives `mt` through `waypoints` in the environment of `which`.
pub fn run_scenario(
    which: Scenario,
    mt: &mut MobileTerminal,
    waypoints: &[Waypoint],
) -> Result<FlowTrace, OverlapError> {
    let mut sys = OverlapSystem::new(which.env(), OverlapConfig::default())?;
    sys.run(mt, waypoints)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(t: &FlowTrace) -> Vec<(Role, AccessKind)> {
        t.steps.iter().map(|s| (s.role, s.kind)).collect()
    }

    fn is_subsequence(needle: &[(Role, AccessKind)], hay: &[(Role, AccessKind)]) -> bool {
        let mut it = hay.iter();
        needle.iter().all(|n| it.any(|h| h == n))
    }

    fn attached(which: Scenario, in_call: bool) -> (OverlapSystem, MobileTerminal) {
        let mut sys = OverlapSystem::new(which.env(), OverlapConfig::default()).unwrap();
        let mut mt = which.terminal(42);
        mt.in_call = in_call;
        sys.attach(&mut mt, 1).unwrap();
        (sys, mt)
    }

    #[test]
    fn in_call_handoff_same_network() {
        let (mut sys, mut mt) = attached(Scenario::A, true);
        let t = sys.handoff(&mut mt, 2).unwrap();
        assert!(is_subsequence(
            &[
                (Role::Nlr, AccessKind::PointerCreate),
                (Role::Biu, AccessKind::RadioSupport),
                (Role::Db1, AccessKind::Register),
                (Role::Vlr, AccessKind::Deregister),
                (Role::Nlr, AccessKind::PointerRemove),
            ],
            &kinds(&t)
        ));
        assert_eq!(t.count(Role::Db0), 0);
        assert_eq!(mt.registration(), Some(Registration { network: 1, vlr: 2 }));
        assert_eq!(sys.vlr_records(42), vec![2]);
        assert!(sys.pointers().is_empty());
    }

    #[test]
    fn cross_network_handoff_reaches_db0() {
        let (mut sys, mut mt) = attached(Scenario::B, true);
        let t = sys.handoff(&mut mt, 2).unwrap();
        let k = kinds(&t);
        let i = k
            .iter()
            .position(|&s| s == (Role::Db1, AccessKind::Register))
            .unwrap();
        assert_eq!(k[i + 1], (Role::Db0, AccessKind::Register));
    }

    #[test]
    fn idle_handoff_has_no_pointer() {
        let (mut sys, mut mt) = attached(Scenario::A, false);
        let t = sys.handoff(&mut mt, 2).unwrap();
        assert_eq!(t.count(Role::Nlr), 0);
        assert_eq!(t.count(Role::Biu), 0);
        assert_eq!(t.count_kind(Role::Db1, AccessKind::Register), 1);
    }

    #[test]
    fn handoff_errors() {
        let mut sys =
            OverlapSystem::new(NetworkEnv::scenario_a(), OverlapConfig::default()).unwrap();
        let mut mt = MobileTerminal::new(1, 1, 1.0);
        assert_eq!(sys.handoff(&mut mt, 2), Err(OverlapError::NotRegistered(1)));
        let env = NetworkEnv::new(
            vec![super::super::Network::new(1, "X", true)],
            vec![Vlr::new(1, 1, &[1], 5.0), Vlr::new(2, 1, &[2], 5.0)],
        )
        .unwrap();
        let mut sys = OverlapSystem::new(env, OverlapConfig::default()).unwrap();
        sys.attach(&mut mt, 1).unwrap();
        assert_eq!(
            sys.handoff(&mut mt, 2),
            Err(OverlapError::NotNeighbor { from: 1, to: 2 })
        );
    }

    #[test]
    fn scenario_a_walk() {
        let mut mt = Scenario::A.terminal(7);
        let t = run_scenario(Scenario::A, &mut mt, &Scenario::A.default_waypoints()).unwrap();
        assert_eq!(mt.registration().unwrap().vlr, 2);
        assert_eq!(t.count(Role::Db0), 0);
        assert!(t.is_time_ordered());
    }

    #[test]
    fn scenario_c_pointer_per_network() {
        let mut sys =
            OverlapSystem::new(NetworkEnv::scenario_c(), OverlapConfig::default()).unwrap();
        let mut mt = Scenario::C.terminal(9);
        let wps = Scenario::C.default_waypoints();
        sys.step(&mut mt, &wps[0]).unwrap();
        let t = sys.step(&mut mt, &wps[1]).unwrap();
        let created: Vec<usize> = t
            .steps
            .iter()
            .filter(|s| s.kind == AccessKind::PointerCreate)
            .map(|s| s.queue_len)
            .collect();
        assert_eq!(created, vec![1, 2]);
        assert_eq!(t.count_kind(Role::Nlr, AccessKind::PointerRemove), 2);
        assert_eq!(sys.pointers_of(9), 0);
        assert_eq!(mt.registration().unwrap().network, 2);
        let rest = sys.run(&mut mt, &wps[2..]).unwrap();
        assert_eq!(mt.registration().unwrap().vlr, 3);
        assert!(rest.count_kind(Role::Db0, AccessKind::Register) >= 1);
    }

    #[test]
    fn single_network_reduces_to_plain_handoff() {
        let mut mt = MobileTerminal::new(3, 1, 1.0);
        let wps = [
            Waypoint::new(0.0, 1, 0.0, 1, false),
            Waypoint::new(1.0, 3, 0.0, 1, false),
        ];
        let t = run_scenario(Scenario::A, &mut mt, &wps).unwrap();
        assert_eq!(mt.registration().unwrap().vlr, 2);
        assert_eq!(t.count(Role::Nlr), 0);
    }

    #[test]
    fn cache_hit_skips_db1_and_db0() {
        let (mut sys, mut mt) = attached(Scenario::B, false);
        sys.handoff(&mut mt, 2).unwrap();
        let first = sys.deliver_call(1, 42).unwrap();
        assert_eq!(first.count(Role::Db1) + first.count(Role::Db0), 0);
        assert_eq!(first.steps.last().unwrap().node_id, 2);
        // VLR2's NLR knows its own visitor
        let t = sys.deliver_call(2, 42).unwrap();
        assert_eq!(t.count(Role::Db1) + t.count(Role::Db0), 0);
    }

    #[test]
    fn cache_miss_goes_through_db_tiers() {
        let mut sys =
            OverlapSystem::new(NetworkEnv::scenario_b(), OverlapConfig::default()).unwrap();
        let mut mt = MobileTerminal::new(5, 1, 1.0);
        sys.attach(&mut mt, 2).unwrap();
        let miss = sys.deliver_call(1, 5).unwrap();
        assert_eq!(miss.count(Role::Db1), 2);
        assert_eq!(miss.count(Role::Db0), 1);
        let hit = sys.deliver_call(1, 5).unwrap();
        assert_eq!(hit.count(Role::Db1) + hit.count(Role::Db0), 0);
        assert_eq!(
            sys.deliver_call(1, 77),
            Err(OverlapError::NotRegistered(77))
        );
    }

    #[test]
    fn waypoint_parsing() {
        let w =
            parse_waypoints("# t,region,speed,heading,in_call\n0,1,28,2,1\n\n5.5,2,0,1,false\n")
                .unwrap();
        assert_eq!(w.len(), 2);
        assert!(w[0].in_call && !w[1].in_call);
        assert_eq!(w[0].to_string().parse::<Waypoint>().unwrap(), w[0]);
        for bad in [
            "",
            "0,1,28,2",
            "0,1,-3,2,1",
            "x,1,2,3,1",
            "0,1,2,3,maybe",
            "5,1,1,1,1\n4,1,1,1,1",
        ] {
            assert!(
                matches!(
                    parse_waypoints(bad),
                    Err(OverlapError::MalformedWaypoints(_))
                ),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn uncovered_region_is_rejected() {
        let mut mt = MobileTerminal::new(3, 1, 1.0);
        let wps = [Waypoint::new(0.0, 99, 0.0, 1, false)];
        assert_eq!(
            run_scenario(Scenario::A, &mut mt, &wps),
            Err(OverlapError::Uncovered(99))
        );
    }
}
