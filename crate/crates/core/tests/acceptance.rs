//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Tolerances are the constants below.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use locdb::analytic::{
    evaluate_system, pk_response_time, response_curves, service_db0_memdirect,
    service_db2_memdirect, storage_feasible_direct, storage_feasible_ttree, IndexChoice,
    QueueStats,
};
use locdb::bench::bench_index;
use locdb::cli::{run, Cli};
use locdb::desim::{
    call_path, level_counts, run_simulation, update_path, CallClass, SimConfig, UpdateClass,
};
use locdb::index::{Ptn, TTree};
use locdb::overlap::{MobileTerminal, OverlapConfig, OverlapSystem, Scenario, Waypoint};
use locdb::params::{Level, SystemParams};
use locdb::trace::{AccessKind, FlowTrace, Role};

const RATE_TOL: f64 = 0.005;
const SERVICE_TOL: f64 = 0.005;
const DISK_MARGIN: f64 = 100.0;
const SIM_RESPONSE_TOL: f64 = 0.05;
const SIM_RATE_TOL: f64 = 0.02;
const SIM_MIN_EVENTS: u64 = 1_000_000;
const SIM_HORIZON_S: f64 = 500.0;
const PK_TOL: f64 = 0.01;
const PK_CUSTOMERS: usize = 10_000_000;
const TTREE_OPS: usize = 100_000;
const STORAGE_POINTS: usize = 100;
const OVERLAP_RUNS: usize = 1000;
const CLASS_DRAWS: usize = 1_000_000;
const CLASS_TOL: f64 = 0.01;

type Check = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cli_output(args: &[&str]) -> Result<String, String> {
    let cli = Cli::try_parse_from(std::iter::once("locdb").chain(args.iter().copied()))
        .map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    run(&cli, &mut out).map_err(|e| e.to_string())?;
    String::from_utf8(out).map_err(|e| e.to_string())
}

fn report_values() -> Result<BTreeMap<String, String>, String> {
    let out = cli_output(&["report", "--csv"])?;
    let mut rd = csv::Reader::from_reader(out.as_bytes());
    let mut map = BTreeMap::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        map.insert(rec[0].to_string(), rec[1].to_string());
    }
    Ok(map)
}

fn number(map: &BTreeMap<String, String>, key: &str) -> Result<f64, String> {
    map.get(key)
        .ok_or_else(|| format!("report lacks {key}"))?
        .parse()
        .map_err(|_| format!("{key} is not a number"))
}

// Table 1 inputs, typed in independently of the library defaults.
struct Table1;
impl Table1 {
    const RHO: f64 = 415.0;
    const L: f64 = 30.3;
    const A: f64 = 57.4;
    const XI: f64 = 1.4;
    const V1: f64 = 5.6;
    const V2: f64 = 56.0;
    const R1: f64 = 0.4;
    const R2: f64 = 0.1;
    const N0: f64 = 128.0;
    const N1: f64 = 16.0;
    const Q0: f64 = 0.05;
    const Q1: f64 = 0.15;
    const P0: f64 = 0.01;
    const P1: f64 = 0.04;
    const P2: f64 = 0.45;
    const TS: f64 = 10e-6;

    fn lambda_u() -> f64 {
        Self::RHO * Self::L * (Self::V1 * Self::R1 + Self::V2 * Self::R2) / (3600.0 * PI)
    }

    fn lambda_c() -> f64 {
        Self::RHO * Self::XI * Self::A / 3600.0
    }

    fn levels() -> [f64; 3] {
        let (lu, lc) = (Self::lambda_u(), Self::lambda_c());
        let (q0, q1, p0, p1, p2) = (Self::Q0, Self::Q1, Self::P0, Self::P1, Self::P2);
        [
            Self::N0 * ((2.0 * q0 + q1) * lu + (2.0 * p0 + p1) * lc),
            Self::N1 * ((1.0 + q0 + q1) * lu + (2.0 * p0 + 2.0 * p1 + p2) * lc),
            2.0 * lu + (1.0 + p0 + p1 + p2) * lc,
        ]
    }

    fn mean_s0() -> f64 {
        let (lu, lc) = (Self::lambda_u(), Self::lambda_c());
        let num = (Self::Q0 + Self::Q1) * lu + (Self::P0 + Self::P1) * lc;
        let den = (2.0 * Self::Q0 + Self::Q1) * lu + (2.0 * Self::P0 + Self::P1) * lc;
        (1.0 + num / den) * Self::TS
    }

    fn mean_s2() -> f64 {
        let (lu, lc) = (Self::lambda_u(), Self::lambda_c());
        let l2 = Self::levels()[2];
        (4.0 * lu + (2.0 + Self::P0 + Self::P1 + Self::P2) * lc) / l2 * Self::TS
    }
}

fn c1_numeric_example() -> Check {
    let r = report_values()?;
    let oracle = Table1::levels();
    let cases = [
        ("lambda_u", Table1::lambda_u(), 8.717),
        ("lambda_c", Table1::lambda_c(), 9.264),
        ("lambda_0", oracle[0], 350.1),
        ("lambda_1", oracle[1], 248.9),
        ("lambda_2", oracle[2], 31.33),
    ];
    let mut parts = Vec::new();
    for (key, hand, printed) in cases {
        let got = number(&r, key)?;
        ensure(rel(got, hand) <= RATE_TOL, || {
            format!("{key} = {got}, hand evaluation {hand}")
        })?;
        ensure(rel(got, printed) <= RATE_TOL, || {
            format!("{key} = {got}, expected about {printed}")
        })?;
        parts.push(format!("{key}={got:.4}"));
    }
    Ok(parts.join(" "))
}

fn c2_service_moments() -> Check {
    let r = report_values()?;
    let s0 = number(&r, "E_S0")? * 1e-6;
    let s2 = number(&r, "E_S2")? * 1e-6;
    ensure(rel(s0, Table1::mean_s0()) <= SERVICE_TOL, || {
        format!("E[S0] {s0} vs {}", Table1::mean_s0())
    })?;
    ensure(rel(s0, 18.07e-6) <= SERVICE_TOL, || {
        format!("E[S0] {s0} vs 18.07 us")
    })?;
    ensure(rel(s2, Table1::mean_s2()) <= SERVICE_TOL, || {
        format!("E[S2] {s2} vs {}", Table1::mean_s2())
    })?;
    ensure(rel(s2, 18.52e-6) <= SERVICE_TOL, || {
        format!("E[S2] {s2} vs 18.52 us")
    })?;

    let mut p = SystemParams::default();
    p.q0 = 0.0;
    p.p0 = 0.0;
    let v0 = service_db0_memdirect(&p, p.workload())
        .map_err(|e| e.to_string())?
        .var_service;
    ensure(v0 == 0.0, || format!("Var[S0] = {v0} with q0 = p0 = 0"))?;

    let mut p = SystemParams::default();
    p.p0 = 0.0;
    p.p1 = 0.0;
    p.p2 = 0.0;
    let s = service_db2_memdirect(&p, p.workload()).map_err(|e| e.to_string())?;
    ensure(s.mean_service == 2.0 * p.ts, || {
        format!("E[S2] = {} with p = 0", s.mean_service)
    })?;
    ensure(s.var_service == 0.0, || {
        format!("Var[S2] = {} with p = 0", s.var_service)
    })?;
    Ok(format!(
        "E[S0]={:.4}us E[S2]={:.4}us, degenerate cases exact",
        s0 * 1e6,
        s2 * 1e6
    ))
}

fn c3_curve_shapes() -> Check {
    let p = SystemParams::default();
    let ttree = bench_index(&p, IndexChoice::TTreeIndex, 10_000, 10_000, 1)
        .map_err(|e| e.to_string())?
        .estimate;
    let sweep: Vec<f64> = (1..=40).map(|i| 50.0 * i as f64).collect();
    let mut curves = BTreeMap::new();
    for level in Level::ALL {
        for choice in IndexChoice::ALL {
            let c = response_curves(&p, &sweep, choice, level, Some(&ttree))
                .map_err(|e| e.to_string())?;
            curves.insert((level.index(), choice.name()), c);
        }
    }
    // (a)
    let disk0 = &curves[&(0, "disk-direct")];
    let rho_star = disk0
        .iter()
        .find(|pt| pt.stats.utilization() >= 1.0)
        .map(|pt| pt.rho)
        .ok_or("disk-direct DB0 never saturates")?;
    ensure(
        disk0
            .iter()
            .all(|pt| (pt.stats.utilization() >= 1.0) == pt.response.is_none()),
        || "saturation marker disagrees with utilization".into(),
    )?;
    for ((level, name), c) in &curves {
        if *name != "disk-direct" {
            ensure(c.iter().all(|pt| pt.response.is_some()), || {
                format!("{name} saturates at DB{level}")
            })?;
        }
    }
    // (b)
    for ((level, name), c) in &curves {
        for w in c.windows(2) {
            let ok = match (w[0].response, w[1].response) {
                (Some(a), Some(b)) => b >= a,
                (None, Some(_)) => false,
                _ => true,
            };
            ensure(ok, || {
                format!("{name} at DB{level} not monotone at rho {}", w[1].rho)
            })?;
        }
    }
    // (c)
    let mut stable = 0;
    let mut min_ratio = f64::INFINITY;
    for level in 0..3 {
        for (d, m) in curves[&(level, "disk-direct")]
            .iter()
            .zip(&curves[&(level, "memory-direct")])
        {
            if let (Some(td), Some(tm)) = (d.response, m.response) {
                stable += 1;
                min_ratio = min_ratio.min(td / tm);
                ensure(td >= DISK_MARGIN * tm, || {
                    format!("DB{level} rho {}: ratio {}", d.rho, td / tm)
                })?;
            }
        }
    }
    // the command line marks the same points
    let csv = cli_output(&[
        "analyze",
        "--level",
        "0",
        "--index",
        "disk-direct",
        "--sweep",
        "rho=50:2000:50",
    ])?;
    let marked = csv.lines().filter(|l| l.ends_with("SATURATED")).count();
    ensure(
        marked == disk0.iter().filter(|pt| pt.response.is_none()).count(),
        || format!("analyze marked {marked} saturated rows"),
    )?;
    Ok(format!(
        "disk DB0 saturated from rho*={rho_star}; {stable} stable disk points, min disk/memory ratio {min_ratio:.0}"
    ))
}

fn c4_simulation_agreement() -> Check {
    let p = SystemParams::default();
    let choices = [IndexChoice::MemoryDirect; 3];
    let model = evaluate_system(&p, choices, None).map_err(|e| e.to_string())?;
    let cfg = SimConfig::for_choices(&p, SIM_HORIZON_S, 2024, choices, None)
        .map_err(|e| e.to_string())?;
    let m = run_simulation(&p, &cfg, None).map_err(|e| e.to_string())?;
    ensure(m.events >= SIM_MIN_EVENTS, || {
        format!("only {} events", m.events)
    })?;
    let t = [model.delays.t0, model.delays.t1, model.delays.t2];
    let mut worst_t: f64 = 0.0;
    let mut worst_rate: f64 = 0.0;
    for level in Level::ALL {
        let i = level.index();
        let lm = m.level(level);
        let e = rel(lm.mean_response, t[i]);
        worst_t = worst_t.max(e);
        ensure(e <= SIM_RESPONSE_TOL, || {
            format!("{level} response {} vs {}", lm.mean_response, t[i])
        })?;
        let lam = model.stats[i].arrival_rate;
        let band = (lm.observed_rate - lam).abs() + lm.rate_ci_half_width;
        worst_rate = worst_rate.max(band / lam);
        ensure(band <= SIM_RATE_TOL * lam, || {
            format!(
                "{level} rate {} +/- {} vs {lam}",
                lm.observed_rate, lm.rate_ci_half_width
            )
        })?;
    }
    let eu = rel(m.update_delay.mean, model.update_delay);
    let ed = rel(m.delivery_delay.mean, model.delivery_delay);
    ensure(eu <= SIM_RESPONSE_TOL, || {
        format!("T_u {} vs {}", m.update_delay.mean, model.update_delay)
    })?;
    ensure(ed <= SIM_RESPONSE_TOL, || {
        format!("T_d {} vs {}", m.delivery_delay.mean, model.delivery_delay)
    })?;
    Ok(format!(
        "{} events; worst tier error {:.2}%, T_u {:.2}%, T_d {:.2}%, worst rate CI edge {:.2}%",
        m.events,
        worst_t * 100.0,
        eu * 100.0,
        ed * 100.0,
        worst_rate * 100.0
    ))
}

/// Mean response of a FCFS single server by the Lindley recursion.
fn lindley(
    lambda: f64,
    customers: usize,
    seed: u64,
    mut service: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(lambda).expect("positive rate");
    let warm = customers / 20;
    let mut wait = 0.0;
    let mut total = 0.0;
    for n in 0..customers + warm {
        let s = service(&mut rng);
        if n >= warm {
            total += wait + s;
        }
        wait = (wait + s - gap.sample(&mut rng)).max(0.0);
    }
    total / customers as f64
}

fn c5_pk_oracle() -> Check {
    let mean = 1.0;
    let mut worst: f64 = 0.0;
    for (k, util) in [0.2, 0.5, 0.8].into_iter().enumerate() {
        let lambda = util / mean;
        // deterministic
        let q = QueueStats {
            mean_service: mean,
            var_service: 0.0,
            arrival_rate: lambda,
        };
        let analytic = pk_response_time(&q).map_err(|e| e.to_string())?;
        let sim = lindley(lambda, PK_CUSTOMERS, 100 + k as u64, |_| mean);
        worst = worst.max(rel(sim, analytic));
        ensure(rel(sim, analytic) <= PK_TOL, || {
            format!("deterministic at {util}: {sim} vs {analytic}")
        })?;
        // one or two units of work, like a direct file that sometimes needs a second access
        let (low, high, ph) = (2.0 / 3.0, 4.0 / 3.0, 0.5);
        let var = ph * (1.0 - ph) * (high - low) * (high - low);
        let q = QueueStats {
            mean_service: mean,
            var_service: var,
            arrival_rate: lambda,
        };
        let analytic = pk_response_time(&q).map_err(|e| e.to_string())?;
        let sim = lindley(lambda, PK_CUSTOMERS, 200 + k as u64, |r| {
            if r.random::<f64>() < ph {
                high
            } else {
                low
            }
        });
        worst = worst.max(rel(sim, analytic));
        ensure(rel(sim, analytic) <= PK_TOL, || {
            format!("two-point at {util}: {sim} vs {analytic}")
        })?;
    }
    Ok(format!("6 cases, worst deviation {:.3}%", worst * 100.0))
}

fn c6_ttree() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut max_height = 0;
    for (cap, min, ops, span) in [
        (15usize, 8usize, TTREE_OPS / 2, 3000u64),
        (4, 2, TTREE_OPS / 2, 600),
    ] {
        let mut tree: TTree<u64> = TTree::new(cap, min).map_err(|e| e.to_string())?;
        let mut oracle: BTreeMap<Ptn, u64> = BTreeMap::new();
        for op in 0..ops {
            let key = rng.random_range(0..span);
            match rng.random_range(0..3) {
                0 => {
                    let got = tree.insert(key, op as u64).is_ok();
                    let want = !oracle.contains_key(&key);
                    if want {
                        oracle.insert(key, op as u64);
                    }
                    ensure(got == want, || {
                        format!("insert {key}: tree {got}, oracle {want}")
                    })?;
                }
                1 => {
                    let got = tree.delete(key).ok();
                    let want = oracle.remove(&key);
                    ensure(got == want, || {
                        format!("delete {key}: tree {got:?}, oracle {want:?}")
                    })?;
                }
                _ => {
                    let got = tree.get(key).copied();
                    let want = oracle.get(&key).copied();
                    ensure(got == want, || {
                        format!("search {key}: tree {got:?}, oracle {want:?}")
                    })?;
                }
            }
            tree.validate()
                .map_err(|v| format!("after op {op}: {} {}", v.path, v.message))?;
            let nodes = tree.node_count() as f64;
            let bound = 1.4405 * (nodes + 2.0).log2() - 0.3277;
            ensure(f64::from(tree.height()) <= bound.max(1.0), || {
                format!(
                    "height {} over AVL bound {bound} for {nodes} nodes",
                    tree.height()
                )
            })?;
            max_height = max_height.max(tree.height());
        }
        let keys: Vec<Ptn> = oracle.keys().copied().collect();
        ensure(tree.keys() == keys, || "final key sets differ".into())?;
    }
    Ok(format!(
        "{TTREE_OPS} operations match the oracle; max height {max_height}"
    ))
}

fn c7_storage() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut feasible = [0usize; 2];
    let mut db1_only = 0;
    for i in 0..STORAGE_POINTS {
        let mut p = SystemParams::default();
        p.nt = rng.random_range(1_000_000..10_000_000_000u64);
        p.ei = rng.random_range(1.0..32.0);
        p.m = rng.random_range(0.0..4096.0);
        p.a1 = rng.random_range(1.0..16.0);
        p.a2 = rng.random_range(1.0..16.0);
        p.y1 = rng.random_range(2..64);
        p.kappa = rng.random_range(0.5..1.0);
        let level = Level::ALL[i % 3];
        let residents: f64 = rng.random_range(0.0..1e9);
        let entries = if level == Level::Db0 {
            p.nt as f64
        } else {
            residents
        };
        let m = if level == Level::Db1 { 0.0 } else { p.m };
        let direct_lhs = p.nt as f64 * p.ei + residents * m;
        let ttree_lhs = entries * (3.0 * p.a1 + 2.0 * p.a2 + p.y1 as f64 * p.ei)
            / (p.kappa * p.y1 as f64)
            + residents * m;
        // capacity near the requirement so both outcomes occur
        let phi = direct_lhs.max(ttree_lhs) * rng.random_range(0.5..1.5);
        p.phi[level.index()] = phi;
        let want = [direct_lhs <= phi, ttree_lhs <= phi];
        let got = [
            storage_feasible_direct(&p, residents, level),
            storage_feasible_ttree(&p, entries, residents, level),
        ];
        ensure(got == want, || {
            format!("point {i} ({level}): library {got:?}, arithmetic {want:?}")
        })?;
        feasible[0] += want[0] as usize;
        feasible[1] += want[1] as usize;
        // profiles never count at DB1
        if level == Level::Db1 && residents * p.m + p.nt as f64 * p.ei > phi && want[0] {
            db1_only += 1;
        }
    }
    ensure(db1_only > 0, || "grid never exercised the DB1 rule".into())?;
    Ok(format!(
        "{STORAGE_POINTS} points agree; {} direct / {} T-tree feasible; {db1_only} DB1 points feasible only because M = 0",
        feasible[0], feasible[1]
    ))
}

/// A random walk over the scenario's regions from the first network's
/// exclusive region to the last network's.
fn perturbed_walk(which: Scenario, rng: &mut ChaCha8Rng) -> Vec<Waypoint> {
    let (adjacent, start, end, networks): (&[(u32, u32)], u32, u32, u32) = match which {
        Scenario::A => (&[(1, 2), (2, 3)], 1, 3, 1),
        Scenario::B => (&[(1, 2), (2, 3)], 1, 3, 2),
        Scenario::C => (&[(1, 2), (2, 3), (2, 4)], 1, 4, 3),
    };
    let mut regions = vec![start];
    let mut here = start;
    while here != end || regions.len() < 3 {
        let next: Vec<u32> = adjacent
            .iter()
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .filter(|&(a, _)| a == here)
            .map(|(_, b)| b)
            .collect();
        here = next[rng.random_range(0..next.len())];
        regions.push(here);
        if rng.random_bool(0.3) {
            regions.push(here);
        }
        if regions.len() > 40 {
            regions.push(2);
            regions.push(end);
            break;
        }
    }
    let mut t = 0.0;
    regions
        .into_iter()
        .map(|r| {
            t += rng.random_range(0.0..30.0);
            let speed = if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random_range(0.0..120.0)
            };
            Waypoint::new(
                t,
                r,
                speed,
                rng.random_range(1..=networks),
                rng.random_bool(0.7),
            )
        })
        .collect()
}

fn continuity_holds(trace: &FlowTrace) -> bool {
    let steps = &trace.steps;
    steps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == AccessKind::Detach)
        .all(|(i, _)| {
            steps[i..]
                .iter()
                .take_while(|s| !(s.role == Role::Vlr && s.kind == AccessKind::Register))
                .all(|s| s.queue_len >= 1)
        })
}

fn overlap_run(which: Scenario, rng: &mut ChaCha8Rng) -> Result<[usize; 2], String> {
    let walk = perturbed_walk(which, rng);
    let mut sys =
        OverlapSystem::new(which.env(), OverlapConfig::default()).map_err(|e| e.to_string())?;
    let ptn = rng.random_range(1..u64::MAX);
    let mut mt = MobileTerminal::new(ptn, 1, rng.random_range(0.1..10.0));
    let mut full = FlowTrace::new();
    let mut three_way = 0;
    for wp in &walk {
        let before = mt.registration();
        let t = sys.step(&mut mt, wp).map_err(|e| format!("{wp}: {e}"))?;
        let reg = mt.registration().ok_or("not registered after a waypoint")?;
        ensure(mt.ptn() == ptn, || "PTN changed".into())?;
        ensure(sys.vlr_records(ptn) == vec![reg.vlr], || {
            format!("records {:?} vs registration {reg:?}", sys.vlr_records(ptn))
        })?;
        ensure(sys.location(ptn) == Some(reg), || {
            "DB view disagrees with registration".into()
        })?;
        ensure(sys.pointers().is_empty(), || {
            format!("{} pointers left at quiescence", sys.pointers().len())
        })?;
        let created = t.count_kind(Role::Nlr, AccessKind::PointerCreate);
        let removed = t.count_kind(Role::Nlr, AccessKind::PointerRemove);
        ensure(created == removed, || {
            format!("{created} pointers created, {removed} removed")
        })?;
        ensure(wp.in_call || created == 0, || {
            "pointer for a terminal not in a call".into()
        })?;
        ensure(continuity_holds(&t), || {
            "in-call handoff left the terminal unreachable".into()
        })?;
        if which == Scenario::C && wp.region == 2 {
            if let Some(prev) = before {
                let toward = wp.in_call && wp.speed_kmh > 0.0 && wp.heading != prev.network;
                // without the fan-out, only an in-call handoff's own pointer
                let want = if toward {
                    2
                } else {
                    t.count_kind(Role::Vlr, AccessKind::Detach)
                };
                ensure(created == want, || {
                    format!("{created} pointers at the three-way overlap, want {want}")
                })?;
                three_way += toward as usize;
            }
        }
        full.extend(t);
    }
    ensure(full.is_time_ordered(), || "trace out of order".into())?;
    match which {
        Scenario::A => ensure(full.count(Role::Db0) == 0, || {
            "scenario (a) touched DB0".into()
        })?,
        Scenario::B | Scenario::C => {
            let s = &full.steps;
            let hop = s.windows(2).any(|w| {
                (w[0].role, w[0].kind, w[1].role, w[1].kind)
                    == (
                        Role::Db1,
                        AccessKind::Register,
                        Role::Db0,
                        AccessKind::Register,
                    )
            });
            ensure(hop, || "no DB1 then DB0 register".into())?;
        }
    }
    // call delivery from every VLR, twice; cached answers stay below DB1
    let mut hits = 0;
    let vlrs: Vec<u32> = sys.env().vlrs().map(|v| v.id).collect();
    for &v in vlrs.iter().chain(&vlrs) {
        let cached = sys
            .nlr(v)
            .map_err(|e| e.to_string())?
            .cache
            .peek(ptn)
            .is_some_and(|e| Some(e.vlr) == mt.registration().map(|r| r.vlr));
        let call = sys.deliver_call(v, ptn).map_err(|e| e.to_string())?;
        ensure(
            call.steps.last().map(|s| s.node_id) == mt.registration().map(|r| r.vlr),
            || "call connected to the wrong VLR".into(),
        )?;
        if cached {
            hits += 1;
            ensure(call.count(Role::Db1) + call.count(Role::Db0) == 0, || {
                "cache hit reached DB1/DB0".into()
            })?;
        }
    }
    ensure(hits >= vlrs.len(), || format!("only {hits} cache hits"))?;
    Ok([three_way, hits])
}

fn c8_overlap() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut three_way = 0;
    let mut hits = 0;
    for which in Scenario::ALL {
        // the unperturbed walk first
        let mut mt = which.terminal(5551234);
        let mut sys =
            OverlapSystem::new(which.env(), OverlapConfig::default()).map_err(|e| e.to_string())?;
        sys.run(&mut mt, &which.default_waypoints())
            .map_err(|e| e.to_string())?;
        ensure(sys.pointers().is_empty(), || {
            "pointers left after the default walk".into()
        })?;
        for i in 0..OVERLAP_RUNS {
            let [t, h] = overlap_run(which, &mut rng)
                .map_err(|e| format!("scenario ({}) run {i}: {e}", which.name()))?;
            three_way += t;
            hits += h;
        }
    }
    ensure(three_way > 0, || {
        "three-way overlap pointers never exercised".into()
    })?;
    Ok(format!(
        "{} runs per scenario; {three_way} three-way pointer fans, {hits} cache hits checked",
        OVERLAP_RUNS
    ))
}

fn c9_class_coefficients() -> Check {
    let p = SystemParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut upd = [0usize; 3];
    let mut call = [0usize; 3];
    for _ in 0..CLASS_DRAWS {
        let u = level_counts(update_path(UpdateClass::sample(&p, &mut rng)));
        let c = level_counts(call_path(CallClass::sample(&p, &mut rng)));
        for i in 0..3 {
            upd[i] += u[i];
            call[i] += c[i];
        }
    }
    let n = CLASS_DRAWS as f64;
    let (q0, q1, p0, p1, p2) = (p.q0, p.q1, p.p0, p.p1, p.p2);
    // DB2, DB1, DB0
    let want_u = [2.0 * q0 + q1, 1.0 + q0 + q1, 2.0];
    let want_c = [2.0 * p0 + p1, 2.0 * p0 + 2.0 * p1 + p2, 1.0 + p0 + p1 + p2];
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        let (gu, gc) = (upd[i] as f64 / n, call[i] as f64 / n);
        worst = worst.max(rel(gu, want_u[i])).max(rel(gc, want_c[i]));
        ensure(rel(gu, want_u[i]) <= CLASS_TOL, || {
            format!("update DB{i}: {gu} vs {}", want_u[i])
        })?;
        ensure(rel(gc, want_c[i]) <= CLASS_TOL, || {
            format!("call DB{i}: {gc} vs {}", want_c[i])
        })?;
    }
    Ok(format!(
        "{CLASS_DRAWS} draws, worst deviation {:.3}%",
        worst * 100.0
    ))
}

fn c10_determinism() -> Check {
    let commands: [&[&str]; 6] = [
        &["analyze", "--sweep", "rho=50:2000:50"],
        &["--seed", "11", "simulate", "--horizon", "30"],
        &[
            "--seed",
            "11",
            "simulate",
            "--horizon",
            "30",
            "--index",
            "t-tree,memory-direct,t-tree",
        ],
        &["--seed", "5", "bench-index"],
        &["overlap-scenario", "c"],
        &["report", "--csv"],
    ];
    for args in commands {
        let a = cli_output(args)?;
        let b = cli_output(args)?;
        ensure(a == b, || format!("{args:?} differs between runs"))?;
        ensure(!a.is_empty(), || format!("{args:?} produced nothing"))?;
    }
    let a = cli_output(&["--seed", "11", "simulate", "--horizon", "30"])?;
    let b = cli_output(&["--seed", "12", "simulate", "--horizon", "30"])?;
    ensure(a != b, || "seed has no effect".into())?;
    Ok(format!(
        "{} commands byte-identical across runs",
        commands.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check, Option<Duration>); 10] = [
        (
            "1 numeric example",
            c1_numeric_example,
            Some(Duration::from_secs(1)),
        ),
        ("2 service-time moments", c2_service_moments, None),
        (
            "3 response-curve shapes",
            c3_curve_shapes,
            Some(Duration::from_secs(10)),
        ),
        (
            "4 simulation vs model",
            c4_simulation_agreement,
            Some(Duration::from_secs(60)),
        ),
        ("5 P-K vs M/G/1 simulation", c5_pk_oracle, None),
        (
            "6 T-tree vs oracle",
            c6_ttree,
            Some(Duration::from_secs(10)),
        ),
        ("7 storage feasibility", c7_storage, None),
        (
            "8 overlap protocol",
            c8_overlap,
            Some(Duration::from_secs(10)),
        ),
        ("9 access coefficients", c9_class_coefficients, None),
        ("10 determinism", c10_determinism, None),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let mut outcome = check();
        let took = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if took > limit {
                outcome = Err(format!("took {took:.2?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why} [{took:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
