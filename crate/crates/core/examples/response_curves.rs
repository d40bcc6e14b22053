//! Response time against user density for every index organization at every
//! tier. Disk-resident files are far slower and saturate early.

use locdb::analytic::{response_curves, IndexChoice};
use locdb::bench::bench_index;
use locdb::params::{Level, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SystemParams::default();
    let ttree = bench_index(&p, IndexChoice::TTreeIndex, 10_000, 10_000, 1)?.estimate;
    let sweep: Vec<f64> = (1..=8).map(|i| 250.0 * i as f64).collect();

    for level in Level::ALL {
        println!("{level}");
        print!("{:>8}", "rho");
        for choice in IndexChoice::ALL {
            print!("{:>16}", choice.name());
        }
        println!();
        let curves = IndexChoice::ALL
            .iter()
            .map(|&c| response_curves(&p, &sweep, c, level, Some(&ttree)))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, rho) in sweep.iter().enumerate() {
            print!("{rho:>8}");
            for curve in &curves {
                match curve[i].response {
                    Some(t) => print!("{:>13.2} us", t * 1e6),
                    None => print!("{:>16}", "saturated"),
                }
            }
            println!();
        }
    }
    Ok(())
}
