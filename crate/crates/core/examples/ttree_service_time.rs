//! Builds a T-tree, checks its shape, measures the lookup service time and
//! asks each tier which organization it should use.

use locdb::analytic::{
    select_index, storage_feasible_direct, storage_feasible_ttree, IndexChoice, SelectionInputs,
};
use locdb::bench::{bench_index, build_ttree};
use locdb::params::{Level, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SystemParams::default();
    let tree = build_ttree(&p, 10_000, 3)?;
    tree.validate()
        .map_err(|v| format!("{}: {}", v.path, v.message))?;
    println!(
        "{} keys in {} nodes, height {}, node capacity {}..{}",
        tree.len(),
        tree.node_count(),
        tree.height(),
        tree.min_interior(),
        tree.max_items()
    );

    let hit = tree.search(4242);
    println!(
        "lookup 4242: found {}, {} nodes visited, {} comparisons",
        hit.found(),
        hit.stats.nodes_visited,
        hit.stats.comparisons
    );

    let b = bench_index(&p, IndexChoice::TTreeIndex, 10_000, 10_000, 3)?;
    println!(
        "service time {:.2} us, variance {:.2} us^2 over {} probes",
        b.estimate.mean_us(),
        b.estimate.variance_us2(),
        b.estimate.sample_count
    );

    for level in Level::ALL {
        let inputs = SelectionInputs::for_level(&p, level, Some(b.estimate));
        println!(
            "{level}: direct fits {}, T-tree fits {}, choose {}",
            storage_feasible_direct(&p, inputs.residents, level),
            storage_feasible_ttree(&p, inputs.ttree_entries, inputs.residents, level),
            select_index(level, &p, &inputs)?
        );
    }
    Ok(())
}
