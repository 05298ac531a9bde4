//! Run reports: per-round traces and the consensus outcome.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::network::DirectedGraph;
use crate::program::Solution;
use crate::serde_ext::extended_f64;
use crate::tol;

use super::Protocol;

/// One node's state at the start of a round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    #[serde(with = "extended_f64")]
    pub j_local: f64,
    pub candidate_size: usize,
    /// Constraints in the message broadcast this round; zero once stopped.
    pub sent: usize,
    pub stopped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub protocol: Protocol,
    /// Round at which the last node stopped.
    pub rounds: usize,
    pub per_round: Vec<RoundRecord>,
    /// Solution held by node 0 when the run ended.
    pub final_solution: Solution,
    pub node_solutions: Vec<Solution>,
    pub final_candidates: Vec<Vec<usize>>,
    pub stop_rounds: Vec<usize>,
    pub max_constraints_per_message: usize,
    /// All nodes stopped and hold the same optimum.
    pub converged: bool,
    pub infeasible_detected: bool,
    /// First round at which every transmission queue was empty (qVCC only).
    pub converged_at: Option<usize>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Streams `round,node,j_local,msg_constraints` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "node", "j_local", "msg_constraints"])?;
        for r in &self.per_round {
            for (i, node) in r.nodes.iter().enumerate() {
                w.write_record([
                    r.round.to_string(),
                    i.to_string(),
                    node.j_local.to_string(),
                    node.sent.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Per-node objective sequence.
    pub fn objective_trace(&self, node: usize) -> Vec<f64> {
        self.per_round.iter().map(|r| r.nodes[node].j_local).collect()
    }

    /// First round from which every node's objective equals its final value.
    pub fn agreement_round(&self) -> usize {
        let last: Vec<f64> = self.node_solutions.iter().map(|s| s.j_star).collect();
        self.per_round
            .iter()
            .rev()
            .take_while(|r| r.nodes.iter().zip(&last).all(|(n, &j)| tol::obj_eq(n.j_local, j)))
            .last()
            .map_or(self.rounds, |r| r.round)
    }

    /// First node and round at which a local objective decreased.
    pub fn monotonicity_violation(&self) -> Option<(usize, usize)> {
        let n = self.per_round.first().map_or(0, |r| r.nodes.len());
        for i in 0..n {
            for w in self.per_round.windows(2) {
                if !tol::obj_le(w[0].nodes[i].j_local, w[1].nodes[i].j_local) {
                    return Some((w[1].round, i));
                }
            }
        }
        None
    }

    /// First edge `(i, j)` and round `t` with `J_j(t+1) < J_i(t)`.
    pub fn edge_dominance_violation(&self, graph: &DirectedGraph) -> Option<(usize, usize, usize)> {
        for w in self.per_round.windows(2) {
            for (i, j) in graph.edges() {
                if !tol::obj_le(w[0].nodes[i].j_local, w[1].nodes[j].j_local) {
                    return Some((i, j, w[0].round));
                }
            }
        }
        None
    }

    /// Largest pairwise infinity-norm distance between the nodes' optima.
    pub fn consensus_spread(&self) -> f64 {
        let Some(first) = self.node_solutions.first() else {
            return 0.0;
        };
        let mut spread = 0f64;
        for s in &self.node_solutions[1..] {
            match (&first.x_star, &s.x_star) {
                (Some(a), Some(b)) => {
                    for (u, v) in a.iter().zip(b) {
                        spread = spread.max((u - v).abs());
                    }
                }
                (None, None) => {}
                _ => return f64::INFINITY,
            }
        }
        spread
    }
}
