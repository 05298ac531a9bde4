// Hull vertices of a point cloud, the sets exchanged by vertex consensus.

use constraints_consensus::hull::vertex_set;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let vert = vertex_set(&points);
    println!("{} of {} points are vertices in R^{}", vert.indices.len(), points.len(), vert.dim);
    vert.indices
}

#[allow(dead_code)]
fn main() {
    run_example();
}
