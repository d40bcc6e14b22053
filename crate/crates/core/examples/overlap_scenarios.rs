//! Walks an in-call terminal through the three overlapping-coverage layouts
//! and then delivers calls to it through the NLR cache.

use locdb::overlap::{OverlapConfig, OverlapSystem, Scenario};
use locdb::trace::Role;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for which in Scenario::ALL {
        let mut sys = OverlapSystem::new(which.env(), OverlapConfig::default())?;
        let mut mt = which.terminal(5551234);
        let trace = sys.run(&mut mt, &which.default_waypoints())?;
        let reg = mt.registration().expect("registered");
        println!(
            "scenario ({}): ends at VLR {} of network {}",
            which.name(),
            reg.vlr,
            reg.network
        );
        for line in trace.lines() {
            println!("  {line}");
        }

        // a call from the first VLR: the NLR remembers where the terminal went
        let call = sys.deliver_call(1, mt.ptn())?;
        println!(
            "  call from VLR 1: {} steps, DB1 {} DB0 {}",
            call.len(),
            call.count(Role::Db1),
            call.count(Role::Db0)
        );
    }
    Ok(())
}
