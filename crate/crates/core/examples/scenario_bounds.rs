// Violation-probability bounds: epsilon from N, and N from epsilon.

use constraints_consensus::{epsilon_bound, min_samples, min_samples_exact, phi, Result};

pub fn run_example() -> Result<(f64, u64, u64)> {
    let (beta, zeta) = (1e-8, 3);
    let eps = epsilon_bound(beta, zeta, 20_000)?;
    println!("N = 20000, beta = {beta:e}, zeta = {zeta}: epsilon = {eps:.4e}");
    println!("exact tail at that epsilon: {:.3e}", phi(eps, zeta - 1, 20_000)?);

    let closed = min_samples(beta, zeta, 2e-3)?;
    let exact = min_samples_exact(beta, zeta, 2e-3)?;
    println!("samples for epsilon = 2e-3: {closed} (closed form), {exact} (binomial tail)");
    Ok((eps, closed, exact))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
