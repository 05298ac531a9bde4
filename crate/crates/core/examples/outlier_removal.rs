// Distributed removal of the 16 most expensive samples from a 300-point
// ellipsoid scenario. The ellipsoid shrinks at every stage.

use constraints_consensus::consensus::even_partition;
use constraints_consensus::scenarios::{build_graph, gen_mixture};
use constraints_consensus::{remove_constraints, ConvexProgram, Protocol, RemovalReport, Result, Topology};

pub fn run_example() -> Result<RemovalReport> {
    let pool = gen_mixture(300, 5)?;
    let program = ConvexProgram::ellipsoid(&pool, pool.all_indices())?;
    let graph = build_graph(Topology::Geometric, 10, 5)?;
    let report = remove_constraints(&graph, &program, &even_partition(300, 10), 16, Protocol::Acc)?;
    for s in &report.per_stage {
        println!(
            "stage {:>2}: drop {} (multiplier {:.3})  log det W^-1 {:.4} -> {:.4}",
            s.stage, s.removed_id, s.multiplier, s.j_before, s.j_star
        );
    }
    let first = report.per_stage.first().map_or(f64::NAN, |s| s.j_before);
    println!("area ratio after removal: {:.3}", (0.5 * (report.final_solution.j_star - first)).exp());
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
