//! Closed-form M/G/1 model of the three database tiers.
//!
//! Each database is a single FCFS server with Poisson arrivals. Response time
//! is the Pollaczek–Khinchine mean; end-to-end update and call-delivery delays
//! are fixed linear combinations of the per-tier response times. Direct-file
//! tiers have two-point service laws (one or two accesses of `Ts` or `Tb`);
//! T-tree tiers take their moments from an instrumented index.

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::index::ServiceTimeEstimate;
use crate::params::{arrival_rates, Level, LevelRates, SystemParams, WorkloadRates};

/// Minimum samples behind a T-tree service estimate.
pub const MIN_TTREE_SAMPLES: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("queue saturated: utilization {utilization:.4} >= 1")]
    Saturated { utilization: f64 },
    #[error("{0} receives no load; its service-time mix is undefined")]
    ZeroLoad(Level),
    #[error("service estimate has {got} samples, need at least {need}")]
    InsufficientSamples { got: u64, need: u64 },
    #[error("no index organization fits the storage of {0}")]
    NoFeasibleChoice(Level),
    #[error("T-tree service requires a measured service-time estimate")]
    MissingEstimate,
    #[error("empty sweep")]
    EmptySweep,
}

/// Service moments and offered load of one database.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueStats {
    /// E[S], seconds.
    pub mean_service: f64,
    /// Var[S], seconds².
    pub var_service: f64,
    /// λ, per second.
    pub arrival_rate: f64,
}

impl QueueStats {
    pub fn utilization(&self) -> f64 {
        self.arrival_rate * self.mean_service
    }
}

/// Mean response time of each tier, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelDelays {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexChoice {
    MemoryDirect,
    TTreeIndex,
    DiskDirect,
}

impl IndexChoice {
    /// Tie-break order.
    pub const ALL: [IndexChoice; 3] = [
        IndexChoice::MemoryDirect,
        IndexChoice::TTreeIndex,
        IndexChoice::DiskDirect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndexChoice::MemoryDirect => "memory-direct",
            IndexChoice::TTreeIndex => "t-tree",
            IndexChoice::DiskDirect => "disk-direct",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl std::fmt::Display for IndexChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Pollaczek–Khinchine mean response time.
pub fn pk_response_time(q: &QueueStats) -> Result<f64, AnalyticError> {
    let utilization = q.utilization();
    if utilization >= 1.0 {
        return Err(AnalyticError::Saturated { utilization });
    }
    let second_moment = q.var_service + q.mean_service * q.mean_service;
    Ok(q.mean_service + q.arrival_rate * second_moment / (2.0 * (1.0 - utilization)))
}

/// End-to-end location update delay.
pub fn update_delay(d: &LevelDelays, q0: f64, q1: f64) -> f64 {
    2.0 * d.t2 + (1.0 + q0 + q1) * d.t1 + (2.0 * q0 + q1) * d.t0
}

/// End-to-end call delivery delay.
pub fn delivery_delay(d: &LevelDelays, p0: f64, p1: f64, p2: f64) -> f64 {
    (1.0 + p0 + p1 + p2) * d.t2 + (2.0 * p0 + 2.0 * p1 + p2) * d.t1 + (2.0 * p0 + p1) * d.t0
}

/// DB0 served by a direct file with per-access time `access`.
fn direct_db0(
    p: &SystemParams,
    w: WorkloadRates,
    access: f64,
) -> Result<QueueStats, AnalyticError> {
    let (lu, lc) = (w.lambda_u, w.lambda_c);
    let total = (2.0 * p.q0 + p.q1) * lu + (2.0 * p.p0 + p.p1) * lc;
    if total <= 0.0 {
        return Err(AnalyticError::ZeroLoad(Level::Db0));
    }
    let double = (p.q0 + p.q1) * lu + (p.p0 + p.p1) * lc;
    let single = p.q0 * lu + p.p0 * lc;
    Ok(QueueStats {
        mean_service: (1.0 + double / total) * access,
        var_service: single * double * access * access / (total * total),
        arrival_rate: arrival_rates(p, w).lambda0,
    })
}

fn direct_db1(p: &SystemParams, w: WorkloadRates, access: f64) -> QueueStats {
    QueueStats {
        mean_service: access,
        var_service: 0.0,
        arrival_rate: arrival_rates(p, w).lambda1,
    }
}

fn direct_db2(
    p: &SystemParams,
    w: WorkloadRates,
    access: f64,
) -> Result<QueueStats, AnalyticError> {
    let (lu, lc) = (w.lambda_u, w.lambda_c);
    let lambda2 = arrival_rates(p, w).lambda2;
    if lambda2 <= 0.0 {
        return Err(AnalyticError::ZeroLoad(Level::Db2));
    }
    let away = p.p0 + p.p1 + p.p2;
    Ok(QueueStats {
        // 4λu as printed; equals λ2 + (2λu + λc) so the mix stays in [T, 2T]
        mean_service: (4.0 * lu + (2.0 + away) * lc) / lambda2 * access,
        var_service: (2.0 * lu + lc) * away * lc * access * access / (lambda2 * lambda2),
        arrival_rate: lambda2,
    })
}

pub fn service_db0_memdirect(
    p: &SystemParams,
    w: WorkloadRates,
) -> Result<QueueStats, AnalyticError> {
    direct_db0(p, w, p.ts)
}

pub fn service_db1_memdirect(p: &SystemParams, w: WorkloadRates) -> QueueStats {
    direct_db1(p, w, p.ts)
}

pub fn service_db2_memdirect(
    p: &SystemParams,
    w: WorkloadRates,
) -> Result<QueueStats, AnalyticError> {
    direct_db2(p, w, p.ts)
}

/// Same formulas as the memory-resident file with `Tb` in place of `Ts`.
pub fn service_diskdirect(
    p: &SystemParams,
    w: WorkloadRates,
    level: Level,
) -> Result<QueueStats, AnalyticError> {
    match level {
        Level::Db0 => direct_db0(p, w, p.tb),
        Level::Db1 => Ok(direct_db1(p, w, p.tb)),
        Level::Db2 => direct_db2(p, w, p.tb),
    }
}

pub fn service_memdirect(
    p: &SystemParams,
    w: WorkloadRates,
    level: Level,
) -> Result<QueueStats, AnalyticError> {
    match level {
        Level::Db0 => service_db0_memdirect(p, w),
        Level::Db1 => Ok(service_db1_memdirect(p, w)),
        Level::Db2 => service_db2_memdirect(p, w),
    }
}

/// Queue statistics for a tier indexed by a T-tree whose lookup cost was
/// measured.
pub fn service_ttree(
    est: &ServiceTimeEstimate,
    level_rate: f64,
) -> Result<QueueStats, AnalyticError> {
    if est.sample_count < MIN_TTREE_SAMPLES {
        return Err(AnalyticError::InsufficientSamples {
            got: est.sample_count,
            need: MIN_TTREE_SAMPLES,
        });
    }
    Ok(QueueStats {
        mean_service: est.mean,
        var_service: est.variance,
        arrival_rate: level_rate,
    })
}

/// Queue statistics for any tier and organization.
pub fn level_stats(
    p: &SystemParams,
    w: WorkloadRates,
    level: Level,
    choice: IndexChoice,
    ttree: Option<&ServiceTimeEstimate>,
) -> Result<QueueStats, AnalyticError> {
    match choice {
        IndexChoice::MemoryDirect => service_memdirect(p, w, level),
        IndexChoice::DiskDirect => service_diskdirect(p, w, level),
        IndexChoice::TTreeIndex => {
            let est = ttree.ok_or(AnalyticError::MissingEstimate)?;
            service_ttree(est, arrival_rates(p, w).get(level))
        }
    }
}

fn profile_bytes(p: &SystemParams, level: Level) -> f64 {
    // DB1 stores only the index, no profiles
    if level == Level::Db1 {
        0.0
    } else {
        p.m
    }
}

/// Storage check for a direct file: one entry reserved per subscriber plus
/// the profiles of the `residents` in the area.
pub fn storage_feasible_direct(p: &SystemParams, residents: f64, level: Level) -> bool {
    p.nt as f64 * p.ei + residents * profile_bytes(p, level) <= p.phi[level.index()]
}

/// Storage check for a T-tree holding `entries` index entries.
pub fn storage_feasible_ttree(
    p: &SystemParams,
    entries: f64,
    residents: f64,
    level: Level,
) -> bool {
    let denom = p.kappa * p.y1 as f64;
    if denom <= 0.0 {
        return false;
    }
    let node_bytes = 3.0 * p.a1 + 2.0 * p.a2 + p.y1 as f64 * p.ei;
    entries * node_bytes / denom + residents * profile_bytes(p, level) <= p.phi[level.index()]
}

/// What [`select_index`] needs beyond the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionInputs {
    /// Users residing in the area.
    pub residents: f64,
    /// Entries a T-tree at this tier would index.
    pub ttree_entries: f64,
    /// Measured T-tree cost; without it the T-tree is not a candidate.
    pub ttree: Option<ServiceTimeEstimate>,
}

impl SelectionInputs {
    /// DB0 indexes every subscriber; DB1 and DB2 index only the users in
    /// their area.
    pub fn for_level(p: &SystemParams, level: Level, ttree: Option<ServiceTimeEstimate>) -> Self {
        let residents = p.residents(level);
        let ttree_entries = match level {
            Level::Db0 => p.nt as f64,
            Level::Db1 | Level::Db2 => residents,
        };
        Self {
            residents,
            ttree_entries,
            ttree,
        }
    }
}

/// Among the organizations that fit in storage, the one with the lowest
/// response time. Saturated organizations rank last; ties keep the order of
/// [`IndexChoice::ALL`].
pub fn select_index(
    level: Level,
    p: &SystemParams,
    inputs: &SelectionInputs,
) -> Result<IndexChoice, AnalyticError> {
    let w = p.workload();
    let mut best: Option<(IndexChoice, f64)> = None;
    for choice in IndexChoice::ALL {
        let feasible = match choice {
            IndexChoice::MemoryDirect | IndexChoice::DiskDirect => {
                storage_feasible_direct(p, inputs.residents, level)
            }
            IndexChoice::TTreeIndex => {
                inputs.ttree.is_some()
                    && storage_feasible_ttree(p, inputs.ttree_entries, inputs.residents, level)
            }
        };
        if !feasible {
            continue;
        }
        let response = level_stats(p, w, level, choice, inputs.ttree.as_ref())
            .and_then(|q| pk_response_time(&q))
            .unwrap_or(f64::INFINITY);
        if best.is_none_or(|(_, t)| response < t) {
            best = Some((choice, response));
        }
    }
    best.map(|(c, _)| c)
        .ok_or(AnalyticError::NoFeasibleChoice(level))
}

/// One point of a response-time curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub rho: f64,
    pub level: Level,
    pub choice: IndexChoice,
    pub stats: QueueStats,
    /// `None` when saturated.
    pub response: Option<f64>,
}

/// Response time of one tier and organization across user densities.
pub fn response_curves(
    p: &SystemParams,
    rho_sweep: &[f64],
    choice: IndexChoice,
    level: Level,
    ttree: Option<&ServiceTimeEstimate>,
) -> Result<Vec<CurvePoint>, AnalyticError> {
    if rho_sweep.is_empty() {
        return Err(AnalyticError::EmptySweep);
    }
    rho_sweep
        .iter()
        .map(|&rho| {
            let at = p.with_rho(rho);
            let stats = level_stats(&at, at.workload(), level, choice, ttree)?;
            let response = match pk_response_time(&stats) {
                Ok(t) => Some(t),
                Err(AnalyticError::Saturated { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(CurvePoint {
                rho,
                level,
                choice,
                stats,
                response,
            })
        })
        .collect()
}

/// All three tiers' queue statistics plus the end-to-end delays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemModel {
    pub rates: LevelRates,
    pub stats: [QueueStats; 3],
    pub delays: LevelDelays,
    pub update_delay: f64,
    pub delivery_delay: f64,
}

pub fn evaluate_system(
    p: &SystemParams,
    choices: [IndexChoice; 3],
    ttree: Option<&ServiceTimeEstimate>,
) -> Result<SystemModel, AnalyticError> {
    let w = p.workload();
    let mut stats = [QueueStats {
        mean_service: 0.0,
        var_service: 0.0,
        arrival_rate: 0.0,
    }; 3];
    let mut t = [0.0; 3];
    for level in Level::ALL {
        let i = level.index();
        stats[i] = level_stats(p, w, level, choices[i], ttree)?;
        t[i] = pk_response_time(&stats[i])?;
    }
    let delays = LevelDelays {
        t0: t[0],
        t1: t[1],
        t2: t[2],
    };
    Ok(SystemModel {
        rates: arrival_rates(p, w),
        stats,
        delays,
        update_delay: update_delay(&delays, p.q0, p.q1),
        delivery_delay: delivery_delay(&delays, p.p0, p.p1, p.p2),
    })
}

/// A service-time distribution a simulator can draw from.
#[derive(Debug, Clone, PartialEq)]
pub enum ServiceLaw {
    Deterministic(f64),
    /// `high` with probability `p_high`, otherwise `low`.
    TwoPoint {
        low: f64,
        high: f64,
        p_high: f64,
    },
    /// Uniform resampling of measured service times.
    Empirical(Arc<[f64]>),
}

impl ServiceLaw {
    pub fn mean(&self) -> f64 {
        match self {
            ServiceLaw::Deterministic(x) => *x,
            ServiceLaw::TwoPoint { low, high, p_high } => low + p_high * (high - low),
            ServiceLaw::Empirical(xs) => xs.iter().sum::<f64>() / xs.len() as f64,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ServiceLaw::Deterministic(_) => 0.0,
            ServiceLaw::TwoPoint { low, high, p_high } => {
                p_high * (1.0 - p_high) * (high - low) * (high - low)
            }
            ServiceLaw::Empirical(xs) => {
                let m = self.mean();
                xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ServiceLaw::Deterministic(x) => *x,
            ServiceLaw::TwoPoint { low, high, p_high } => {
                if rng.random::<f64>() < *p_high {
                    *high
                } else {
                    *low
                }
            }
            ServiceLaw::Empirical(xs) => xs[rng.random_range(0..xs.len())],
        }
    }

    /// The one- or two-access law behind a direct-file tier's moments: each
    /// request costs `access` or `2·access`, mixed so the mean matches.
    pub fn direct_file(stats: &QueueStats, access: f64) -> Self {
        let p_high = (stats.mean_service / access - 1.0).clamp(0.0, 1.0);
        if p_high == 0.0 || stats.var_service == 0.0 {
            ServiceLaw::Deterministic(stats.mean_service)
        } else {
            ServiceLaw::TwoPoint {
                low: access,
                high: 2.0 * access,
                p_high,
            }
        }
    }
}

/// The law matching [`level_stats`] for one tier. T-tree tiers resample the
/// measured per-probe times.
pub fn service_law(
    p: &SystemParams,
    w: WorkloadRates,
    level: Level,
    choice: IndexChoice,
    ttree_samples: Option<&Arc<[f64]>>,
) -> Result<ServiceLaw, AnalyticError> {
    match choice {
        IndexChoice::MemoryDirect => Ok(ServiceLaw::direct_file(
            &service_memdirect(p, w, level)?,
            p.ts,
        )),
        IndexChoice::DiskDirect => Ok(ServiceLaw::direct_file(
            &service_diskdirect(p, w, level)?,
            p.tb,
        )),
        IndexChoice::TTreeIndex => ttree_samples
            .map(|s| ServiceLaw::Empirical(Arc::clone(s)))
            .ok_or(AnalyticError::MissingEstimate),
    }
}
