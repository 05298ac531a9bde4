// A soft-margin classifier trained by nodes that each see part of the data.

use constraints_consensus::consensus::even_partition;
use constraints_consensus::scenarios::{build_graph, gen_classification};
use constraints_consensus::{run_acc, run_vcc, ConvexProgram, Result, RunReport, Topology};

pub fn run_example() -> Result<(RunReport, RunReport)> {
    let p = 4;
    let pool = gen_classification(2000, p, 9)?;
    let program = ConvexProgram::classifier(&pool, pool.all_indices())?;
    let graph = build_graph(Topology::Geometric, 10, 9)?;
    let partition = even_partition(pool.len(), 10);

    let acc = run_acc(&graph, &program, &partition)?;
    let vcc = run_vcc(&graph, &program, &partition)?;
    let x = acc.final_solution.x_star.as_ref().expect("classifier programs are feasible");
    println!("theta {:?}, rho {:.4}, nu {:.2e}", &x[..p], x[p], x[p + 1]);
    println!("ACC: {} rounds, at most {} constraints per message (d = {})", acc.rounds, acc.max_constraints_per_message, p + 3);
    println!("VCC: {} rounds, at most {} constraints per message", vcc.rounds, vcc.max_constraints_per_message);
    Ok((acc, vcc))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
