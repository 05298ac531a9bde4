//! Scenario generators and the experiment harness.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::consensus::{even_partition, EngineConfig, Protocol, RunReport, Simulation, StepOrder};
use crate::error::{Error, Result};
use crate::network::{default_radius, gen_chain, gen_geometric, DirectedGraph};
use crate::pool::{ConstraintPool, Family};
use crate::program::{BoxDomain, ConvexProgram, Solution};

/// Half width of the box around uncertain linear programs.
pub const LP_BOX: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    EllipsoidMixture,
    GaussianClassification,
    UncertainLp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionSpec {
    Even,
    Sizes(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Chain,
    Geometric,
    Complete,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::Chain => "chain",
            Topology::Geometric => "geometric",
            Topology::Complete => "complete",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_samples: usize,
    /// `q` for ellipsoids, `p` for classifiers, `d` for linear programs.
    pub dim: usize,
    pub seed: u64,
    pub nodes: usize,
    pub partition: PartitionSpec,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, n_samples: usize, dim: usize, nodes: usize, seed: u64) -> Self {
        Self {
            kind,
            n_samples,
            dim,
            seed,
            nodes,
            partition: PartitionSpec::Even,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.nodes == 0 || self.dim == 0 {
            return Err(Error::InvalidInput("samples, nodes and dim must be positive".into()));
        }
        if self.kind == ScenarioKind::EllipsoidMixture && self.dim != 2 {
            return Err(Error::InvalidInput("the mixture scenario is planar (dim = 2)".into()));
        }
        if let PartitionSpec::Sizes(sizes) = &self.partition {
            if sizes.len() != self.nodes || sizes.iter().sum::<usize>() != self.n_samples {
                return Err(Error::InvalidInput(format!(
                    "partition sizes must be {} entries summing to {}",
                    self.nodes, self.n_samples
                )));
            }
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Scenario> {
        self.validate()?;
        match self.kind {
            ScenarioKind::EllipsoidMixture => Scenario::standard(gen_mixture(self.n_samples, self.seed)?),
            ScenarioKind::GaussianClassification => {
                Scenario::standard(gen_classification(self.n_samples, self.dim, self.seed)?)
            }
            ScenarioKind::UncertainLp => gen_uncertain_lp(self.n_samples, self.dim, self.seed),
        }
    }

    /// Pool positions per node.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        match &self.partition {
            PartitionSpec::Even => even_partition(self.n_samples, self.nodes),
            PartitionSpec::Sizes(sizes) => {
                let mut start = 0;
                sizes
                    .iter()
                    .map(|&s| {
                        start += s;
                        (start - s..start).collect()
                    })
                    .collect()
            }
        }
    }
}

/// A generated pool with the objective and box of its program.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub pool: ConstraintPool,
    pub objective: Vec<f64>,
    pub domain: BoxDomain,
}

impl Scenario {
    fn standard(pool: ConstraintPool) -> Result<Self> {
        let p = ConvexProgram::for_pool(&pool, vec![], vec![], BoxDomain::cube(0, 1.0))?;
        let (objective, domain) = (p.objective().to_vec(), p.domain().clone());
        Ok(Self {
            pool,
            objective,
            domain,
        })
    }

    pub fn program(&self) -> Result<ConvexProgram<'_>> {
        ConvexProgram::new(
            self.objective.clone(),
            self.domain.clone(),
            &self.pool,
            self.pool.all_indices(),
        )
    }
}

fn normal2(rng: &mut ChaCha8Rng) -> [f64; 2] {
    [StandardNormal.sample(rng), StandardNormal.sample(rng)]
}

/// Mixture samples; the flag marks draws from the wide component.
pub fn mixture_samples(n: usize, seed: u64) -> Vec<(Vec<f64>, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let wide = rng.random::<f64>() < 0.05;
            let g1 = normal2(&mut rng);
            if wide {
                let g2 = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
                (vec![g2[0] + 10.0 * g1[0], g2[1] + 10.0 * g1[1]], true)
            } else {
                (g1.to_vec(), false)
            }
        })
        .collect()
}

/// Planar points drawn from `0.95·N(0, I) + 0.05·(U[−1,1]² + 10·N(0, I))`.
pub fn gen_mixture(n: usize, seed: u64) -> Result<ConstraintPool> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    ConstraintPool::new(
        Family::EllipsoidMembership,
        mixture_samples(n, seed).into_iter().map(|(y, _)| y).collect(),
    )
}

/// Two Gaussian classes `N(±10·1_p, I)`, alternating labels starting with `+1`.
pub fn gen_classification(n: usize, p: usize, seed: u64) -> Result<ConstraintPool> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput("need at least one sample and one feature".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deltas = (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            let mut delta: Vec<f64> = (0..p)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    10.0 * label + z
                })
                .collect();
            delta.push(label);
            delta
        })
        .collect();
    ConstraintPool::new(Family::ClassificationMargin, deltas)
}

/// Random polytope `uᵀx ≤ 1 + 0.1|z|` with uniform unit normals `u`, and a
/// random unit objective, over `[−10, 10]^d`. The unit ball is always feasible.
pub fn gen_uncertain_lp(n: usize, d: usize, seed: u64) -> Result<Scenario> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("need at least one sample and one variable".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objective = unit_vector(d, &mut rng);
    let deltas = (0..n)
        .map(|_| {
            let mut delta = unit_vector(d, &mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            delta.push(-(1.0 + 0.1 * z.abs()));
            delta
        })
        .collect();
    Ok(Scenario {
        pool: ConstraintPool::new(Family::LinearHalfspace, deltas)?,
        objective,
        domain: BoxDomain::cube(d, LP_BOX),
    })
}

fn unit_vector(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Builds a topology on `n` nodes; geometric graphs are seeded by `seed`.
pub fn build_graph(topology: Topology, n: usize, seed: u64) -> Result<DirectedGraph> {
    match topology {
        Topology::Chain => gen_chain(n),
        Topology::Complete => DirectedGraph::complete(n),
        Topology::Geometric => gen_geometric(
            n,
            default_radius(n),
            &mut ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
        ),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub kind: ScenarioKind,
    pub topology: Topology,
    pub protocol: String,
    pub bandwidth: Option<usize>,
    pub nodes: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub diameter: usize,
    pub iterations: usize,
    pub max_constraints_exchanged: usize,
    /// Seconds for the whole simulated run.
    pub wall_time: f64,
    /// Sum over rounds of the slowest node, i.e. the run time with one worker per node.
    pub parallel_time: f64,
    pub centralized_time: f64,
    pub consensus_error: f64,
    pub passed: bool,
}

/// Largest disagreement between any node and the centralized solution,
/// in the sup norm of `x` and the relative gap in `J`.
pub fn consensus_error(report: &RunReport, central: &Solution) -> f64 {
    report
        .node_solutions
        .iter()
        .map(|s| solution_gap(s, central))
        .fold(0.0, f64::max)
}

pub fn solution_gap(a: &Solution, b: &Solution) -> f64 {
    let dj = if a.j_star == b.j_star {
        0.0
    } else {
        (a.j_star - b.j_star).abs() / b.j_star.abs().max(1.0)
    };
    let dx = match (&a.x_star, &b.x_star) {
        (Some(x), Some(y)) => x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    if dj.is_nan() {
        f64::INFINITY
    } else {
        dj.max(dx)
    }
}

/// Runs one protocol on a generated scenario and compares every node against
/// the centralized solve.
pub fn run_experiment(spec: &ScenarioSpec, topology: Topology, protocol: Protocol) -> Result<ExperimentResult> {
    run_experiment_with(spec, topology, protocol, StepOrder::Sequential)
}

pub fn run_experiment_with(
    spec: &ScenarioSpec,
    topology: Topology,
    protocol: Protocol,
    order: StepOrder,
) -> Result<ExperimentResult> {
    let scenario = spec.generate()?;
    let program = scenario.program()?;
    let graph = build_graph(topology, spec.nodes, spec.seed)?;
    let partition = spec.partition();
    let config = EngineConfig {
        order,
        ..EngineConfig::default()
    };
    let start = Instant::now();
    let mut sim = Simulation::new(&program, &graph, &partition, protocol, config)?;
    let report = sim.run()?;
    let wall_time = start.elapsed().as_secs_f64();
    let parallel_time = sim.round_times().iter().sum();
    let start = Instant::now();
    let central = program.solve()?;
    let centralized_time = start.elapsed().as_secs_f64();
    let consensus_error = consensus_error(&report, &central);
    Ok(ExperimentResult {
        kind: spec.kind,
        topology,
        protocol: protocol.name().to_string(),
        bandwidth: match protocol {
            Protocol::Qvcc { bandwidth } => Some(bandwidth),
            _ => None,
        },
        nodes: spec.nodes,
        n_samples: spec.n_samples,
        seed: spec.seed,
        diameter: graph.diameter(),
        iterations: report.rounds,
        max_constraints_exchanged: report.max_constraints_per_message,
        wall_time,
        parallel_time,
        centralized_time,
        consensus_error,
        passed: report.converged && consensus_error <= 1e-6,
    })
}

pub fn write_results_csv<W: Write>(results: &[ExperimentResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "kind",
        "topology",
        "protocol",
        "bandwidth",
        "nodes",
        "n_samples",
        "seed",
        "diameter",
        "iterations",
        "max_constraints_exchanged",
        "wall_time",
        "parallel_time",
        "centralized_time",
        "consensus_error",
        "passed",
    ])?;
    for r in results {
        w.write_record([
            format!("{:?}", r.kind).to_lowercase(),
            r.topology.name().to_string(),
            r.protocol.clone(),
            r.bandwidth.map(|m| m.to_string()).unwrap_or_default(),
            r.nodes.to_string(),
            r.n_samples.to_string(),
            r.seed.to_string(),
            r.diameter.to_string(),
            r.iterations.to_string(),
            r.max_constraints_exchanged.to_string(),
            format!("{:.6}", r.wall_time),
            format!("{:.6}", r.parallel_time),
            format!("{:.6}", r.centralized_time),
            format!("{:e}", r.consensus_error),
            r.passed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fraction of `points` outside the ellipsoid encoded by `x`.
pub fn ellipsoid_violation_frequency(x: &[f64], points: &[Vec<f64>]) -> f64 {
    let q = points.first().map_or(0, Vec::len);
    let e = crate::mvee::Ellipsoid::from_decision(x, q);
    let outside = points.iter().filter(|y| !e.contains(y, 0.0)).count();
    outside as f64 / points.len().max(1) as f64
}
