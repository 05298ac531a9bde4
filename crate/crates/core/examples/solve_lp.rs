// A small linear program solved directly, with its active set and multipliers.

use constraints_consensus::{active_set, tol, BoxDomain, ConstraintPool, ConvexProgram, Family, Result, Solution};

pub fn run_example() -> Result<Solution> {
    // rows are [g, -h] for g·x <= h
    let pool = ConstraintPool::new(
        Family::LinearHalfspace,
        vec![
            vec![1.0, 0.0, -2.0],
            vec![0.0, 1.0, -1.5],
            vec![1.0, 1.0, -3.0],
            vec![-1.0, 2.0, -2.0],
        ],
    )?;
    let program = ConvexProgram::new(vec![-1.0, -2.0], BoxDomain::cube(2, 10.0), &pool, pool.all_indices())?;
    let solution = program.solve()?;
    println!("x* = {:?}, J* = {}", solution.x_star, solution.j_star);
    for j in active_set(&program, &solution, tol::ACT) {
        println!("  active {} (raw {:?}) multiplier {:.4}", pool.id(j), pool.get(j).raw_delta(), solution.multiplier(j));
    }
    Ok(solution)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
