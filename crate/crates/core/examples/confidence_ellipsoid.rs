// Minimum-volume ellipsoid around 500 draws of the two-component mixture.

use constraints_consensus::mvee::Ellipsoid;
use constraints_consensus::scenarios::gen_mixture;
use constraints_consensus::{ConvexProgram, Result};

pub fn run_example() -> Result<Ellipsoid> {
    let pool = gen_mixture(500, 7)?;
    let program = ConvexProgram::ellipsoid(&pool, pool.all_indices())?;
    let solution = program.solve()?;
    let x = solution.x_star.clone().expect("500 planar points span the plane");
    let e = Ellipsoid::from_decision(&x, 2);
    println!("center {:?}", e.center);
    println!("shape  {}", e.shape);
    println!("volume {:.3}, {} points on the boundary", e.volume(), solution.active.len());
    Ok(e)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
