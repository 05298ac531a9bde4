// Active constraints consensus on a 10-node chain.

use constraints_consensus::consensus::even_partition;
use constraints_consensus::scenarios::{consensus_error, gen_mixture};
use constraints_consensus::{gen_chain, run_acc, ConvexProgram, Result, RunReport};

pub fn run_example() -> Result<RunReport> {
    let pool = gen_mixture(2000, 0)?;
    let program = ConvexProgram::ellipsoid(&pool, pool.all_indices())?;
    let graph = gen_chain(10)?;
    let report = run_acc(&graph, &program, &even_partition(pool.len(), 10))?;
    let central = program.solve()?;

    println!("diameter {}, stopped after {} rounds", graph.diameter(), report.rounds);
    println!("all nodes agree from round {}", report.agreement_round());
    println!("largest message: {} constraints", report.max_constraints_per_message);
    println!("error vs centralized: {:.2e}", consensus_error(&report, &central));
    for i in [0, 9] {
        println!("node {i} objective trace {:?}", report.objective_trace(i));
    }
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
