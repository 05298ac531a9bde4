// Quantized vertex consensus: how the per-message budget trades against rounds.

use constraints_consensus::consensus::{even_partition, qvcc_round_bound};
use constraints_consensus::scenarios::gen_mixture;
use constraints_consensus::{gen_chain, run_qvcc, ConvexProgram, Result};

pub struct Row {
    pub bandwidth: usize,
    pub agreement: usize,
    pub rounds: usize,
    pub largest_message: usize,
    pub bound: f64,
}

pub fn run_example() -> Result<Vec<Row>> {
    let pool = gen_mixture(1000, 11)?;
    let program = ConvexProgram::ellipsoid(&pool, pool.all_indices())?;
    let graph = gen_chain(8)?;
    let partition = even_partition(pool.len(), 8);
    let mut rows = Vec::new();
    println!("m  agree  stop  max_msg  bound");
    for m in [1, 2, 5, 20] {
        let report = run_qvcc(&graph, &program, &partition, m)?;
        let row = Row {
            bandwidth: m,
            agreement: report.agreement_round(),
            rounds: report.rounds,
            largest_message: report.max_constraints_per_message,
            bound: qvcc_round_bound(&graph, &partition, m),
        };
        println!("{:<2} {:>5} {:>5} {:>8} {:>6.0}", m, row.agreement, row.rounds, row.largest_message, row.bound);
        rows.push(row);
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
