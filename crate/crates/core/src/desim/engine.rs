use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::io::Write;
use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use super::{
    build_topology, event_path, CallClass, EventClass, Hierarchy, PathStep, Side, TopologyError,
    UpdateClass,
};
use crate::analytic::{service_law, AnalyticError, IndexChoice, ServiceLaw};
use crate::index::{CostModel, Probe, Ptn};
use crate::params::{Level, SystemParams};
use crate::trace::{AccessKind, TraceLine};

/// Batches used for confidence intervals.
const BATCHES: usize = 20;
/// Two-sided 99% Student t quantile with `BATCHES - 1` degrees of freedom.
const T_99: f64 = 2.861;
/// Minimum number of events discarded as warm-up.
const WARMUP_EVENTS: f64 = 1e4;
/// A queue this long at the horizon marks the run as saturated.
const BACKLOG_LIMIT: usize = 1000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Model(#[from] AnalyticError),
    #[error("horizon {horizon} s leaves no room after the {warmup:.3} s warm-up")]
    HorizonTooShort { horizon: f64, warmup: f64 },
    #[error("random stream seed {0} used for more than one stream")]
    SeedReuse(u64),
    #[error("{level} would be saturated (utilization {utilization:.3})")]
    Saturated { level: Level, utilization: f64 },
    #[error("trace output failed: {0}")]
    Io(#[from] std::io::Error),
}

/// How a tier's service times are produced.
#[derive(Clone)]
pub enum LevelService {
    /// Draw from a distribution.
    Law(ServiceLaw),
    /// Run a real lookup for a uniform key in `keys` and charge its cost.
    LiveIndex {
        index: Arc<dyn Probe + Send + Sync>,
        keys: Range<Ptn>,
        cost: CostModel,
    },
}

impl std::fmt::Debug for LevelService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LevelService::Law(law) => f.debug_tuple("Law").field(law).finish(),
            LevelService::LiveIndex { keys, cost, .. } => f
                .debug_struct("LiveIndex")
                .field("keys", keys)
                .field("cost", cost)
                .finish_non_exhaustive(),
        }
    }
}

impl LevelService {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            LevelService::Law(law) => law.sample(rng),
            LevelService::LiveIndex { index, keys, cost } => {
                let key = rng.random_range(keys.clone());
                cost.time(&index.probe(key), index.residency())
            }
        }
    }

    fn mean(&self) -> Option<f64> {
        match self {
            LevelService::Law(law) => Some(law.mean()),
            LevelService::LiveIndex { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Simulated seconds.
    pub horizon: f64,
    pub seed: u64,
    pub services: [LevelService; 3],
    /// Run even when a tier is offered more load than it can serve.
    pub allow_saturation: bool,
    /// Explicit seeds for the arrival, class, routing and service streams.
    pub stream_seeds: Option<[u64; 4]>,
}

impl SimConfig {
    /// Service laws matching the analytic model for the given organizations.
    /// T-tree tiers resample `ttree_samples`.
    pub fn for_choices(
        p: &SystemParams,
        horizon: f64,
        seed: u64,
        choices: [IndexChoice; 3],
        ttree_samples: Option<&Arc<[f64]>>,
    ) -> Result<Self, SimError> {
        let w = p.workload();
        let mut laws = Vec::with_capacity(3);
        for level in Level::ALL {
            laws.push(LevelService::Law(service_law(
                p,
                w,
                level,
                choices[level.index()],
                ttree_samples,
            )?));
        }
        let services: [LevelService; 3] = laws.try_into().expect("three tiers");
        Ok(Self {
            horizon,
            seed,
            services,
            allow_saturation: false,
            stream_seeds: None,
        })
    }

    fn seeds(&self) -> Result<[u64; 4], SimError> {
        let seeds = self.stream_seeds.unwrap_or_else(|| {
            let mut state = self.seed;
            std::array::from_fn(|_| splitmix64(&mut state))
        });
        for i in 0..seeds.len() {
            if seeds[..i].contains(&seeds[i]) {
                return Err(SimError::SeedReuse(seeds[i]));
            }
        }
        Ok(seeds)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Running mean/variance plus per-batch sums.
#[derive(Debug, Clone)]
struct Tally {
    n: u64,
    mean: f64,
    m2: f64,
    batch_sum: [f64; BATCHES],
    batch_n: [u64; BATCHES],
}

impl Default for Tally {
    fn default() -> Self {
        Self {
            n: 0,
            mean: 0.0,
            m2: 0.0,
            batch_sum: [0.0; BATCHES],
            batch_n: [0; BATCHES],
        }
    }
}

impl Tally {
    fn add(&mut self, x: f64, batch: usize) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
        self.batch_sum[batch] += x;
        self.batch_n[batch] += 1;
    }

    fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    /// Batch-means half-width of the 99% interval on the mean.
    fn half_width(&self) -> f64 {
        let means: Vec<f64> = self
            .batch_sum
            .iter()
            .zip(&self.batch_n)
            .filter(|(_, &n)| n > 0)
            .map(|(s, &n)| s / n as f64)
            .collect();
        spread(&means)
    }
}

fn spread(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let k = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0);
    T_99 * (var / k).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelMetrics {
    /// Accesses that arrived in the measurement window.
    pub arrivals: u64,
    /// Of those, accesses that finished by the horizon.
    pub completed: u64,
    /// Seconds.
    pub mean_response: f64,
    pub var_response: f64,
    pub ci_half_width: f64,
    /// Arrivals per second at one instance of the tier.
    pub observed_rate: f64,
    pub rate_ci_half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayMetrics {
    pub count: u64,
    /// Seconds.
    pub mean: f64,
    pub ci_half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    pub levels: [LevelMetrics; 3],
    /// End-to-end location update delay.
    pub update_delay: DelayMetrics,
    /// End-to-end call delivery delay.
    pub delivery_delay: DelayMetrics,
    /// Updates and calls generated over the whole horizon.
    pub events: u64,
    pub warmup: f64,
    pub horizon: f64,
    /// Accesses ever enqueued / completed, and those still queued or in
    /// service at the horizon.
    pub enqueued: u64,
    pub completed: u64,
    pub in_flight: u64,
    pub saturated: bool,
}

impl SimMetrics {
    fn empty(horizon: f64) -> Self {
        let level = LevelMetrics {
            arrivals: 0,
            completed: 0,
            mean_response: 0.0,
            var_response: 0.0,
            ci_half_width: 0.0,
            observed_rate: 0.0,
            rate_ci_half_width: 0.0,
        };
        let delay = DelayMetrics {
            count: 0,
            mean: 0.0,
            ci_half_width: 0.0,
        };
        Self {
            levels: [level.clone(), level.clone(), level],
            update_delay: delay.clone(),
            delivery_delay: delay,
            events: 0,
            warmup: 0.0,
            horizon,
            enqueued: 0,
            completed: 0,
            in_flight: 0,
            saturated: false,
        }
    }

    pub fn level(&self, level: Level) -> &LevelMetrics {
        &self.levels[level.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ev {
    Update,
    Call,
    Done(Level, u32),
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct Job {
    flow: usize,
    arrived: f64,
}

#[derive(Debug, Default)]
struct Server {
    queue: VecDeque<Job>,
    current: Option<Job>,
}

#[derive(Debug, Clone, Copy)]
struct Flow {
    path: &'static [PathStep],
    step: usize,
    origin: u32,
    remote: u32,
    started: f64,
    update: bool,
}

struct Engine<'a, 't> {
    hierarchy: Hierarchy,
    services: &'a [LevelService; 3],
    servers: [Vec<Server>; 3],
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    flows: Vec<Option<Flow>>,
    free_flows: Vec<usize>,
    class_rng: ChaCha8Rng,
    route_rng: ChaCha8Rng,
    service_rng: ChaCha8Rng,
    warmup: f64,
    horizon: f64,
    batch_len: f64,
    response: [Tally; 3],
    arrivals: [[u64; BATCHES]; 3],
    update_delay: Tally,
    delivery_delay: Tally,
    enqueued: u64,
    completed: u64,
    trace: Option<&'t mut dyn Write>,
    params: &'a SystemParams,
}

impl Engine<'_, '_> {
    fn schedule(&mut self, time: f64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Scheduled {
            time,
            seq: self.seq,
            ev,
        });
    }

    fn batch(&self, t: f64) -> Option<usize> {
        if t < self.warmup || t > self.horizon {
            return None;
        }
        Some((((t - self.warmup) / self.batch_len) as usize).min(BATCHES - 1))
    }

    fn emit(
        &mut self,
        time: f64,
        level: Level,
        node: u32,
        kind: AccessKind,
        queue_len: usize,
    ) -> Result<(), SimError> {
        if let Some(out) = self.trace.as_deref_mut() {
            let line = TraceLine {
                time,
                role: level.into(),
                node_id: node,
                kind,
                queue_len,
            };
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    fn pick_remote(&mut self, origin: u32, class: EventClass) -> u32 {
        let h = &self.hierarchy;
        let n0 = h.db2.len() as u32;
        let db1_count = h.db1.len() as u32;
        let home = h.db1_of(origin);
        let rng = &mut self.route_rng;
        let within_db1 = |rng: &mut ChaCha8Rng| {
            let sibling = h.children(home);
            if h.n1 > 1 {
                // uniform over the other DB2s of the same DB1
                let k = rng.random_range(0..h.n1 - 1);
                let first = sibling.start;
                let off = origin - first;
                first + if k >= off { k + 1 } else { k }
            } else {
                origin
            }
        };
        match class {
            EventClass::Call(CallClass::SameDb2) => origin,
            EventClass::Update(UpdateClass::SameDb1Move)
            | EventClass::Call(CallClass::SameDb1DiffDb2) => within_db1(rng),
            EventClass::Update(UpdateClass::NewDb1SameDb0)
            | EventClass::Call(CallClass::SameDb0DiffDb1) => {
                if db1_count > 1 {
                    let k = rng.random_range(0..db1_count - 1);
                    let other = if k >= home { k + 1 } else { k };
                    rng.random_range(h.children(other))
                } else {
                    within_db1(rng)
                }
            }
            // the far DB0's subtree mirrors this one
            EventClass::Update(UpdateClass::NewDb0) | EventClass::Call(CallClass::DiffDb0) => {
                rng.random_range(0..n0)
            }
        }
    }

    fn start_flow(&mut self, now: f64, update: bool) -> Result<(), SimError> {
        let class = if update {
            EventClass::Update(UpdateClass::sample(self.params, &mut self.class_rng))
        } else {
            EventClass::Call(CallClass::sample(self.params, &mut self.class_rng))
        };
        let origin = self
            .route_rng
            .random_range(0..self.hierarchy.db2.len() as u32);
        let remote = self.pick_remote(origin, class);
        let flow = Flow {
            path: event_path(class),
            step: 0,
            origin,
            remote,
            started: now,
            update,
        };
        let id = if let Some(id) = self.free_flows.pop() {
            self.flows[id] = Some(flow);
            id
        } else {
            self.flows.push(Some(flow));
            self.flows.len() - 1
        };
        self.arrive(now, id)
    }

    fn target(&self, flow: &Flow) -> (Level, u32) {
        let s = flow.path[flow.step];
        let db2 = match s.side {
            Side::Origin => flow.origin,
            Side::Remote => flow.remote,
        };
        let node = match s.level {
            Level::Db2 => db2,
            Level::Db1 => self.hierarchy.db1_of(db2),
            Level::Db0 => 0,
        };
        (s.level, node)
    }

    fn arrive(&mut self, now: f64, flow_id: usize) -> Result<(), SimError> {
        let flow = self.flows[flow_id].expect("live flow");
        let (level, node) = self.target(&flow);
        self.enqueued += 1;
        if let Some(b) = self.batch(now) {
            self.arrivals[level.index()][b] += 1;
        }
        let job = Job {
            flow: flow_id,
            arrived: now,
        };
        let server = &mut self.servers[level.index()][node as usize];
        if server.current.is_none() {
            server.current = Some(job);
            let qlen = server.queue.len();
            self.emit(now, level, node, AccessKind::Arrive, qlen)?;
            self.begin(now, level, node)?;
        } else {
            server.queue.push_back(job);
            let qlen = server.queue.len();
            self.emit(now, level, node, AccessKind::Arrive, qlen)?;
        }
        Ok(())
    }

    fn begin(&mut self, now: f64, level: Level, node: u32) -> Result<(), SimError> {
        let s = self.services[level.index()].sample(&mut self.service_rng);
        self.schedule(now + s, Ev::Done(level, node));
        let qlen = self.servers[level.index()][node as usize].queue.len();
        self.emit(now, level, node, AccessKind::Start, qlen)
    }

    fn finish(&mut self, now: f64, level: Level, node: u32) -> Result<(), SimError> {
        let server = &mut self.servers[level.index()][node as usize];
        let job = server.current.take().expect("busy server");
        let next = server.queue.pop_front();
        let qlen = server.queue.len();
        self.completed += 1;
        self.emit(now, level, node, AccessKind::Finish, qlen)?;
        if let Some(b) = self.batch(job.arrived) {
            self.response[level.index()].add(now - job.arrived, b);
        }
        if let Some(next) = next {
            self.servers[level.index()][node as usize].current = Some(next);
            self.begin(now, level, node)?;
        }

        let flow = self.flows[job.flow].as_mut().expect("live flow");
        flow.step += 1;
        if flow.step < flow.path.len() {
            return self.arrive(now, job.flow);
        }
        let flow = self.flows[job.flow].take().expect("live flow");
        self.free_flows.push(job.flow);
        if let Some(b) = self.batch(flow.started) {
            let tally = if flow.update {
                &mut self.update_delay
            } else {
                &mut self.delivery_delay
            };
            tally.add(now - flow.started, b);
        }
        Ok(())
    }
}

/// Runs the three-tier simulation. Deterministic for a fixed configuration.
/// When `trace` is given, every arrive/start/finish is written to it in the
/// trace line format.
pub fn run_simulation(
    p: &SystemParams,
    config: &SimConfig,
    trace: Option<&mut dyn Write>,
) -> Result<SimMetrics, SimError> {
    let hierarchy = build_topology(p)?;
    let seeds = config.seeds()?;
    let w = p.workload();
    let n0 = f64::from(p.n0);
    let (update_rate, call_rate) = (n0 * w.lambda_u, n0 * w.lambda_c);
    let total_rate = update_rate + call_rate;
    if total_rate <= 0.0 {
        return Ok(SimMetrics::empty(config.horizon));
    }
    let warmup = (0.1 * config.horizon).max(WARMUP_EVENTS / total_rate);
    if !(config.horizon > 0.0) || warmup >= 0.5 * config.horizon {
        return Err(SimError::HorizonTooShort {
            horizon: config.horizon,
            warmup,
        });
    }

    let rates = crate::params::arrival_rates(p, w);
    let mut saturated = false;
    for level in Level::ALL {
        if let Some(mean) = config.services[level.index()].mean() {
            let utilization = rates.get(level) * mean;
            if utilization >= 1.0 {
                if !config.allow_saturation {
                    return Err(SimError::Saturated { level, utilization });
                }
                saturated = true;
            }
        }
    }

    let servers = std::array::from_fn(|i| {
        let level = Level::ALL[i];
        (0..hierarchy.count(level))
            .map(|_| Server::default())
            .collect()
    });
    let mut arrival_rng = ChaCha8Rng::seed_from_u64(seeds[0]);
    let mut engine = Engine {
        hierarchy,
        services: &config.services,
        servers,
        heap: BinaryHeap::new(),
        seq: 0,
        flows: Vec::new(),
        free_flows: Vec::new(),
        class_rng: ChaCha8Rng::seed_from_u64(seeds[1]),
        route_rng: ChaCha8Rng::seed_from_u64(seeds[2]),
        service_rng: ChaCha8Rng::seed_from_u64(seeds[3]),
        warmup,
        horizon: config.horizon,
        batch_len: (config.horizon - warmup) / BATCHES as f64,
        response: Default::default(),
        arrivals: [[0; BATCHES]; 3],
        update_delay: Tally::default(),
        delivery_delay: Tally::default(),
        enqueued: 0,
        completed: 0,
        trace,
        params: p,
    };

    // the two external streams share one generator but never interleave
    // draws with routing or service
    let update_gap = (update_rate > 0.0).then(|| Exp::new(update_rate).expect("positive rate"));
    let call_gap = (call_rate > 0.0).then(|| Exp::new(call_rate).expect("positive rate"));
    if let Some(g) = &update_gap {
        let t = g.sample(&mut arrival_rng);
        engine.schedule(t, Ev::Update);
    }
    if let Some(g) = &call_gap {
        let t = g.sample(&mut arrival_rng);
        engine.schedule(t, Ev::Call);
    }

    let mut events = 0u64;
    while let Some(next) = engine.heap.pop() {
        if next.time > config.horizon {
            break;
        }
        let now = next.time;
        match next.ev {
            Ev::Update | Ev::Call => {
                events += 1;
                let update = next.ev == Ev::Update;
                let gap = if update { &update_gap } else { &call_gap };
                let t = now
                    + gap
                        .as_ref()
                        .expect("stream exists")
                        .sample(&mut arrival_rng);
                engine.schedule(t, next.ev);
                engine.start_flow(now, update)?;
            }
            Ev::Done(level, node) => engine.finish(now, level, node)?,
        }
    }

    let window = config.horizon - warmup;
    let mut in_flight = 0u64;
    let levels = std::array::from_fn(|i| {
        let level = Level::ALL[i];
        let instances = engine.hierarchy.count(level) as f64;
        let mut backlog = 0usize;
        for s in &engine.servers[i] {
            let n = s.queue.len() + usize::from(s.current.is_some());
            in_flight += n as u64;
            backlog = backlog.max(s.queue.len());
        }
        if backlog > BACKLOG_LIMIT {
            saturated = true;
        }
        let counts = &engine.arrivals[i];
        let arrivals: u64 = counts.iter().sum();
        let per_batch: Vec<f64> = counts
            .iter()
            .map(|&c| c as f64 / (engine.batch_len * instances))
            .collect();
        let tally = &engine.response[i];
        LevelMetrics {
            arrivals,
            completed: tally.n,
            mean_response: tally.mean,
            var_response: tally.variance(),
            ci_half_width: tally.half_width(),
            observed_rate: arrivals as f64 / (window * instances),
            rate_ci_half_width: spread(&per_batch),
        }
    });
    let delay = |t: &Tally| DelayMetrics {
        count: t.n,
        mean: t.mean,
        ci_half_width: t.half_width(),
    };
    Ok(SimMetrics {
        levels,
        update_delay: delay(&engine.update_delay),
        delivery_delay: delay(&engine.delivery_delay),
        events,
        warmup,
        horizon: config.horizon,
        enqueued: engine.enqueued,
        completed: engine.completed,
        in_flight,
        saturated,
    })
}
