// Vertex constraints consensus over a random geometric graph. It always
// runs for exactly diam(G) rounds.

use constraints_consensus::consensus::even_partition;
use constraints_consensus::hull::pool_vertices;
use constraints_consensus::scenarios::{build_graph, consensus_error, gen_mixture};
use constraints_consensus::{run_vcc, ConvexProgram, Result, RunReport, Topology};

pub fn run_example() -> Result<RunReport> {
    let pool = gen_mixture(1000, 3)?;
    let program = ConvexProgram::ellipsoid(&pool, pool.all_indices())?;
    let graph = build_graph(Topology::Geometric, 30, 3)?;
    let report = run_vcc(&graph, &program, &even_partition(pool.len(), 30))?;
    let vert = pool_vertices(&pool, &pool.all_indices());
    println!("diameter {} rounds {}", graph.diameter(), report.rounds);
    println!("|vert(C)| = {}, every node holds it: {}", vert.len(), report.final_candidates.iter().all(|c| *c == vert));
    println!("error vs centralized: {:.2e}", consensus_error(&report, &program.solve()?));
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
