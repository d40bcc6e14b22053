//! Arrival rates, per-tier service moments and end-to-end delays at the
//! built-in parameter values, with memory-resident direct files everywhere.

use locdb::analytic::{evaluate_system, IndexChoice};
use locdb::params::{Level, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SystemParams::default();
    let w = p.workload();
    println!("per-RA update rate   {:8.3} /s", w.lambda_u);
    println!("per-RA call rate     {:8.3} /s", w.lambda_c);

    let m = evaluate_system(&p, [IndexChoice::MemoryDirect; 3], None)?;
    for level in Level::ALL {
        let s = m.stats[level.index()];
        println!(
            "{level}: lambda {:8.2} /s  E[S] {:6.2} us  Var[S] {:6.2} us^2  util {:.5}",
            s.arrival_rate,
            s.mean_service * 1e6,
            s.var_service * 1e12,
            s.utilization()
        );
    }
    println!(
        "T0 {:.3} us, T1 {:.3} us, T2 {:.3} us",
        m.delays.t0 * 1e6,
        m.delays.t1 * 1e6,
        m.delays.t2 * 1e6
    );
    println!("location update delay {:.3} us", m.update_delay * 1e6);
    println!("call delivery delay   {:.3} us", m.delivery_delay * 1e6);
    Ok(())
}
