//! Synchronous round engine for the constraints-consensus protocols.
//!
//! Round `t` reads every node's state at `t` and writes all states at `t + 1`,
//! so the order in which nodes are updated within a round cannot matter.
//! Nodes that stopped keep broadcasting their final state.

mod acc;
mod report;
mod vcc;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::DirectedGraph;
use crate::program::{ConvexProgram, Solution};
use crate::tol;

pub use report::{NodeRecord, RoundRecord, RunReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Exchange active constraints.
    Acc,
    /// Exchange hull vertices for `diam` rounds.
    Vcc,
    /// Exchange at most `bandwidth` hull vertices per message.
    Qvcc { bandwidth: usize },
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Acc => "acc",
            Protocol::Vcc => "vcc",
            Protocol::Qvcc { .. } => "qvcc",
        }
    }
}

/// How nodes are scheduled inside a round. All orders give identical results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOrder {
    Sequential,
    Parallel,
    Shuffled(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub order: StepOrder,
    /// Keep every node's candidate set in the trace.
    pub record_candidates: bool,
    pub max_rounds: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            order: StepOrder::Sequential,
            record_candidates: false,
            max_rounds: 100_000,
        }
    }
}

/// Per-node protocol state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: usize,
    /// Constraints assigned to this node.
    pub local: Vec<usize>,
    /// Active set (ACC) or hull vertices (VCC, qVCC) currently held.
    pub candidate: Vec<usize>,
    /// FIFO transmission queue (qVCC).
    pub queue: Vec<usize>,
    /// Local optimum over the current set.
    pub solution: Solution,
    /// Consecutive rounds without an objective change (ACC).
    pub stagnation: usize,
    /// Latest round known to have had a nonempty queue anywhere, or −1 (qVCC).
    pub busy_stamp: i64,
    pub stop_round: Option<usize>,
}

impl NodeState {
    fn new(id: usize, local: Vec<usize>) -> Self {
        Self {
            id,
            local,
            candidate: Vec::new(),
            queue: Vec::new(),
            solution: Solution::infeasible(),
            stagnation: 0,
            busy_stamp: -1,
            stop_round: None,
        }
    }

    fn stop(&mut self, round: usize) {
        self.stop_round.get_or_insert(round);
    }

    pub fn stopped(&self) -> bool {
        self.stop_round.is_some()
    }

    pub fn j_local(&self) -> f64 {
        self.solution.j_star
    }

    pub fn x_local(&self) -> Option<&[f64]> {
        self.solution.x_star.as_deref()
    }
}

struct Context<'a, 'p> {
    program: &'a ConvexProgram<'p>,
    graph: &'a DirectedGraph,
}

/// Serializable engine state between rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub protocol: Protocol,
    pub graph: DirectedGraph,
    pub pool_len: usize,
    pub round: usize,
    pub nodes: Vec<NodeState>,
    pub trace: Vec<RoundRecord>,
    pub converged_at: Option<usize>,
}

impl Snapshot {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A consensus run in progress.
pub struct Simulation<'p> {
    program: ConvexProgram<'p>,
    graph: DirectedGraph,
    protocol: Protocol,
    config: EngineConfig,
    round: usize,
    nodes: Vec<NodeState>,
    trace: Vec<RoundRecord>,
    converged_at: Option<usize>,
    round_times: Vec<f64>,
}

impl<'p> Simulation<'p> {
    /// Initializes every node (round 0). The program supplies the pool,
    /// objective and box; its index set is replaced by the union of the
    /// partition.
    pub fn new(
        program: &ConvexProgram<'p>,
        graph: &DirectedGraph,
        partition: &[Vec<usize>],
        protocol: Protocol,
        config: EngineConfig,
    ) -> Result<Self> {
        if partition.len() != graph.n() {
            return Err(Error::InvalidInput(format!(
                "partition has {} parts for {} nodes",
                partition.len(),
                graph.n()
            )));
        }
        if let Protocol::Qvcc { bandwidth: 0 } = protocol {
            return Err(Error::InvalidInput("bandwidth must be at least 1".into()));
        }
        let locals: Vec<Vec<usize>> = partition
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.sort_unstable();
                p.dedup();
                p
            })
            .collect();
        let all = union_sorted(locals.iter().map(Vec::as_slice));
        let program = program.with_indices(all)?;
        let mut sim = Self {
            program,
            graph: graph.clone(),
            protocol,
            config,
            round: 0,
            nodes: Vec::new(),
            trace: Vec::new(),
            converged_at: None,
            round_times: Vec::new(),
        };
        let ctx = Context {
            program: &sim.program,
            graph: &sim.graph,
        };
        let (nodes, time) = run_nodes(sim.config.order, graph.n(), |i| {
            let local = locals[i].clone();
            match protocol {
                Protocol::Acc => acc::init(&ctx, i, local),
                Protocol::Vcc => vcc::init(&ctx, i, local, false),
                Protocol::Qvcc { .. } => vcc::init(&ctx, i, local, true),
            }
            .map_err(|e| e.at_node(0, i))
        })?;
        sim.nodes = nodes;
        sim.round_times.push(time);
        sim.after_round();
        Ok(sim)
    }

    /// Rebuilds a simulation from a snapshot taken over the same pool.
    pub fn restore(program: &ConvexProgram<'p>, snapshot: Snapshot, config: EngineConfig) -> Result<Self> {
        if snapshot.pool_len != program.pool().len() {
            return Err(Error::InvalidInput("snapshot was taken over a different pool".into()));
        }
        let all = union_sorted(snapshot.nodes.iter().map(|n| n.local.as_slice()));
        Ok(Self {
            program: program.with_indices(all)?,
            graph: snapshot.graph,
            protocol: snapshot.protocol,
            config,
            round: snapshot.round,
            nodes: snapshot.nodes,
            trace: snapshot.trace,
            converged_at: snapshot.converged_at,
            round_times: Vec::new(),
        })
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            protocol: self.protocol,
            graph: self.graph.clone(),
            pool_len: self.program.pool().len(),
            round: self.round,
            nodes: self.nodes.clone(),
            trace: self.trace.clone(),
            converged_at: self.converged_at,
        }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn program(&self) -> &ConvexProgram<'p> {
        &self.program
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn is_finished(&self) -> bool {
        self.nodes.iter().all(NodeState::stopped)
    }

    /// Wall time of each executed round, taken as the slowest node; this is
    /// the duration of the round on one processor per node.
    pub fn round_times(&self) -> &[f64] {
        &self.round_times
    }

    /// Advances one round. Returns whether any node is still running.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_finished() {
            return Ok(false);
        }
        if self.round >= self.config.max_rounds {
            return Err(Error::RoundLimit(self.config.max_rounds));
        }
        let t = self.round;
        let ctx = Context {
            program: &self.program,
            graph: &self.graph,
        };
        let prev = &self.nodes;
        let protocol = self.protocol;
        let (nodes, time) = run_nodes(self.config.order, prev.len(), |i| {
            if prev[i].stopped() {
                return Ok(prev[i].clone());
            }
            match protocol {
                Protocol::Acc => acc::step(&ctx, prev, i, t),
                Protocol::Vcc => vcc::step(&ctx, prev, i, t),
                Protocol::Qvcc { bandwidth } => vcc::step_quantized(&ctx, prev, i, t, bandwidth),
            }
            .map_err(|e| e.at_node(t + 1, i))
        })?;
        self.nodes = nodes;
        self.round_times.push(time);
        self.round += 1;
        self.after_round();
        Ok(!self.is_finished())
    }

    pub fn run(&mut self) -> Result<RunReport> {
        while self.step()? {}
        Ok(self.report())
    }

    fn message_size(&self, node: &NodeState) -> usize {
        match self.protocol {
            Protocol::Acc | Protocol::Vcc => node.candidate.len(),
            Protocol::Qvcc { bandwidth } => node.queue.len().min(bandwidth),
        }
    }

    fn after_round(&mut self) {
        let t = self.round;
        if self.converged_at.is_none()
            && matches!(self.protocol, Protocol::Qvcc { .. })
            && self.nodes.iter().all(|n| n.queue.is_empty())
        {
            self.converged_at = Some(t);
        }
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeRecord {
                j_local: n.solution.j_star,
                candidate_size: n.candidate.len(),
                sent: if n.stop_round.is_none_or(|s| s >= t) {
                    self.message_size(n)
                } else {
                    0
                },
                stopped: n.stopped(),
                candidate: self.config.record_candidates.then(|| n.candidate.clone()),
            })
            .collect();
        self.trace.push(RoundRecord { round: t, nodes });
    }

    pub fn report(&self) -> RunReport {
        let node_solutions: Vec<Solution> = self.nodes.iter().map(|n| n.solution.clone()).collect();
        let infeasible_detected = node_solutions.iter().any(|s| !s.is_feasible());
        let mut report = RunReport {
            protocol: self.protocol,
            rounds: self.nodes.iter().filter_map(|n| n.stop_round).max().unwrap_or(self.round),
            per_round: self.trace.clone(),
            final_solution: node_solutions[0].clone(),
            final_candidates: self.nodes.iter().map(|n| n.candidate.clone()).collect(),
            stop_rounds: self.nodes.iter().map(|n| n.stop_round.unwrap_or(self.round)).collect(),
            max_constraints_per_message: self
                .trace
                .iter()
                .flat_map(|r| r.nodes.iter().map(|n| n.sent))
                .max()
                .unwrap_or(0),
            node_solutions,
            converged: false,
            infeasible_detected,
            converged_at: self.converged_at,
        };
        let agree = report
            .node_solutions
            .iter()
            .all(|s| tol::obj_eq(s.j_star, report.final_solution.j_star));
        report.converged = self.is_finished() && agree && report.consensus_spread() <= 1e-9;
        report
    }
}

/// Runs `update` for every node in the configured order and returns the
/// states by node index plus the slowest node's time in seconds.
fn run_nodes<F>(order: StepOrder, n: usize, update: F) -> Result<(Vec<NodeState>, f64)>
where
    F: Fn(usize) -> Result<NodeState> + Sync,
{
    let timed = |i: usize| {
        let start = Instant::now();
        let r = update(i);
        (i, r, start.elapsed().as_secs_f64())
    };
    let mut results: Vec<(usize, Result<NodeState>, f64)> = match order {
        StepOrder::Sequential => (0..n).map(timed).collect(),
        StepOrder::Parallel => (0..n).into_par_iter().map(timed).collect(),
        StepOrder::Shuffled(seed) => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            idx.into_iter().map(timed).collect()
        }
    };
    results.sort_by_key(|r| r.0);
    let time = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut nodes = Vec::with_capacity(n);
    for (_, r, _) in results {
        nodes.push(r?);
    }
    Ok((nodes, time))
}

pub(crate) fn union_sorted<'a>(sets: impl IntoIterator<Item = &'a [usize]>) -> Vec<usize> {
    let mut out: Vec<usize> = sets.into_iter().flatten().copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn run(
    protocol: Protocol,
    graph: &DirectedGraph,
    program: &ConvexProgram<'_>,
    partition: &[Vec<usize>],
) -> Result<RunReport> {
    Simulation::new(program, graph, partition, protocol, EngineConfig::default())?.run()
}

/// Active constraints consensus over `graph` with node `i` holding `partition[i]`.
pub fn run_acc(graph: &DirectedGraph, program: &ConvexProgram<'_>, partition: &[Vec<usize>]) -> Result<RunReport> {
    run(Protocol::Acc, graph, program, partition)
}

/// Vertex constraints consensus; runs exactly `diam(graph)` rounds.
pub fn run_vcc(graph: &DirectedGraph, program: &ConvexProgram<'_>, partition: &[Vec<usize>]) -> Result<RunReport> {
    run(Protocol::Vcc, graph, program, partition)
}

/// Quantized vertex constraints consensus with at most `bandwidth`
/// constraints per message.
pub fn run_qvcc(
    graph: &DirectedGraph,
    program: &ConvexProgram<'_>,
    partition: &[Vec<usize>],
    bandwidth: usize,
) -> Result<RunReport> {
    run(Protocol::Qvcc { bandwidth }, graph, program, partition)
}

/// Splits `0..len` into `parts` contiguous blocks whose sizes differ by at most one.
pub fn even_partition(len: usize, parts: usize) -> Vec<Vec<usize>> {
    let parts = parts.max(1);
    let (base, extra) = (len / parts, len % parts);
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for i in 0..parts {
        let size = base + usize::from(i < extra);
        out.push((start..start + size).collect());
        start += size;
    }
    out
}

/// Upper bound `⌈N_max/m⌉ · ((d_max+1)^diam − 1)/d_max` on qVCC rounds.
pub fn qvcc_round_bound(graph: &DirectedGraph, partition: &[Vec<usize>], bandwidth: usize) -> f64 {
    let n_max = partition.iter().map(Vec::len).max().unwrap_or(0) as f64;
    let d_max = graph.max_in_degree() as f64;
    let blocks = (n_max / bandwidth as f64).ceil();
    if d_max == 0.0 {
        return 0.0;
    }
    blocks * ((d_max + 1.0).powi(graph.diameter() as i32) - 1.0) / d_max
}
