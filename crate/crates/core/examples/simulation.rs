//! Simulates the three tiers for a minute of traffic and sets the measured
//! response times beside the queueing model's.

use locdb::analytic::{evaluate_system, IndexChoice};
use locdb::desim::{run_simulation, SimConfig};
use locdb::params::{Level, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SystemParams::default();
    let choices = [IndexChoice::MemoryDirect; 3];
    let model = evaluate_system(&p, choices, None)?;
    let config = SimConfig::for_choices(&p, 60.0, 7, choices, None)?;
    let m = run_simulation(&p, &config, None)?;

    println!("{} events, {:.1} s warm-up", m.events, m.warmup);
    for level in Level::ALL {
        let i = level.index();
        let lm = m.level(level);
        let t = [model.delays.t0, model.delays.t1, model.delays.t2][i];
        println!(
            "{level}: simulated {:.3} +/- {:.3} us, model {:.3} us; rate {:.2} /s (model {:.2})",
            lm.mean_response * 1e6,
            lm.ci_half_width * 1e6,
            t * 1e6,
            lm.observed_rate,
            model.stats[i].arrival_rate
        );
    }
    println!(
        "update delay {:.3} us (model {:.3}), delivery delay {:.3} us (model {:.3})",
        m.update_delay.mean * 1e6,
        model.update_delay * 1e6,
        m.delivery_delay.mean * 1e6,
        model.delivery_delay * 1e6
    );
    Ok(())
}
