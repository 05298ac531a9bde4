//! Distributed constraint removal: repeat a consensus run and drop the
//! constraint with the largest multiplier from every node.

use serde::{Deserialize, Serialize};

use crate::consensus::{EngineConfig, Protocol, RunReport, Simulation};
use crate::error::{Error, Result};
use crate::network::DirectedGraph;
use crate::pool::ConstraintId;
use crate::program::{ConvexProgram, Solution};
use crate::serde_ext::extended_f64;

pub const VCC_REMOVAL_WARNING: &str =
    "vertex-based removal ranks only hull vertices; constraints with nonzero multipliers outside the hull vertex set are never removed";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    /// Consensus optimum before this stage's removal.
    #[serde(with = "extended_f64")]
    pub j_before: f64,
    /// Consensus optimum once the constraint is gone.
    #[serde(with = "extended_f64")]
    pub j_star: f64,
    pub removed: usize,
    pub removed_id: ConstraintId,
    pub multiplier: f64,
    pub rounds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalReport {
    pub removed: Vec<usize>,
    pub removed_ids: Vec<ConstraintId>,
    pub per_stage: Vec<StageRecord>,
    pub final_solution: Solution,
    pub final_rounds: usize,
    pub warnings: Vec<String>,
}

impl RemovalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Largest multiplier of `solution`, lowest pool position on ties.
pub fn max_multiplier(solution: &Solution) -> Option<(usize, f64)> {
    solution
        .multipliers
        .iter()
        .fold(None, |best: Option<(usize, f64)>, (&j, &m)| match best {
            Some((_, bm)) if m <= bm => best,
            _ => Some((j, m)),
        })
}

/// Removes `r` constraints, one per stage, running `protocol` to convergence
/// before each removal and once more at the end.
pub fn remove_constraints(
    graph: &DirectedGraph,
    program: &ConvexProgram<'_>,
    partition: &[Vec<usize>],
    r: usize,
    protocol: Protocol,
) -> Result<RemovalReport> {
    remove_constraints_with(graph, program, partition, r, protocol, EngineConfig::default())
}

pub fn remove_constraints_with(
    graph: &DirectedGraph,
    program: &ConvexProgram<'_>,
    partition: &[Vec<usize>],
    r: usize,
    protocol: Protocol,
    config: EngineConfig,
) -> Result<RemovalReport> {
    let mut warnings = Vec::new();
    if protocol != Protocol::Acc {
        log::warn!("{VCC_REMOVAL_WARNING}");
        warnings.push(VCC_REMOVAL_WARNING.to_string());
    }
    let pool = program.pool();
    let mut parts: Vec<Vec<usize>> = partition.to_vec();
    let mut removed = Vec::with_capacity(r);
    let mut per_stage: Vec<StageRecord> = Vec::with_capacity(r);
    let mut report = consensus(graph, program, &parts, protocol, &config)?;
    for stage in 0..r {
        if !report.final_solution.is_feasible() {
            if protocol == Protocol::Acc {
                return Err(Error::InfeasibleStage { stage });
            }
            warnings.push(format!("stage {stage} is infeasible; removal stopped"));
            break;
        }
        let mut choice: Option<(usize, f64)> = None;
        for (i, candidate) in report.final_candidates.iter().enumerate() {
            let local = program.solve_subset(candidate).map_err(|e| e.at_node(report.rounds, i))?;
            let pick = max_multiplier(&local);
            match (choice, pick) {
                (_, None) => {
                    return Err(Error::InvalidInput(format!(
                        "stage {stage}: no active constraint left to remove"
                    )))
                }
                (None, p) if i == 0 => choice = p,
                (Some((c, _)), Some((j, _))) if c == j => {}
                _ => return Err(Error::RemovalDisagreement { stage }),
            }
        }
        let Some((c, multiplier)) = choice else {
            return Err(Error::InvalidInput("removal needs at least one node".into()));
        };
        for part in parts.iter_mut() {
            part.retain(|&j| j != c);
        }
        removed.push(c);
        let j_before = report.final_solution.j_star;
        let rounds = report.rounds;
        report = consensus(graph, program, &parts, protocol, &config)?;
        per_stage.push(StageRecord {
            stage,
            j_before,
            j_star: report.final_solution.j_star,
            removed: c,
            removed_id: pool.id(c),
            multiplier,
            rounds,
        });
    }
    Ok(RemovalReport {
        removed_ids: removed.iter().map(|&c| pool.id(c)).collect(),
        removed,
        per_stage,
        final_rounds: report.rounds,
        final_solution: report.final_solution,
        warnings,
    })
}

fn consensus(
    graph: &DirectedGraph,
    program: &ConvexProgram<'_>,
    parts: &[Vec<usize>],
    protocol: Protocol,
    config: &EngineConfig,
) -> Result<RunReport> {
    Simulation::new(program, graph, parts, protocol, config.clone())?.run()
}
