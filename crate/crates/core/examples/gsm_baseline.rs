//! Call delivery in a two-level HLR/VLR network next to the three-tier
//! paths, counting how often the top database is touched.

use locdb::desim::{access_path_for_call, gsm_baseline_flow, CallClass, GsmNetwork};
use locdb::params::SystemParams;
use locdb::trace::Role;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut net = GsmNetwork::new();
    net.register(5551234, 7);
    let flow = gsm_baseline_flow(&mut net, 2, 5551234)?;
    println!("two-level call delivery:");
    for line in flow.lines() {
        println!("  {line}");
    }

    let p = SystemParams::default();
    let mut top = 0.0;
    println!("three-tier call paths:");
    for class in CallClass::ALL {
        let path = access_path_for_call(class);
        let share = class.probability(&p);
        top += share * path.count(Role::Db0) as f64;
        println!(
            "  {class:?}: p = {share:.2}, {} accesses, {} at DB0",
            path.len(),
            path.count(Role::Db0)
        );
    }
    println!("top-level accesses per call: HLR 2, DB0 {top:.2}");
    Ok(())
}
