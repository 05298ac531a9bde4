//! Active constraints consensus: nodes exchange the constraints active at
//! their local optimum and re-solve over what they receive plus their own.

use crate::error::Result;
use crate::tol;

use super::{union_sorted, Context, NodeState};

pub(super) fn init(ctx: &Context<'_, '_>, node: usize, local: Vec<usize>) -> Result<NodeState> {
    let solution = ctx.program.solve_subset(&local)?;
    let mut state = NodeState::new(node, local);
    state.candidate = solution.active.clone();
    state.solution = solution;
    if state.solution.j_star == f64::INFINITY {
        state.stop(0);
    }
    Ok(state)
}

pub(super) fn step(ctx: &Context<'_, '_>, prev: &[NodeState], i: usize, t: usize) -> Result<NodeState> {
    let me = &prev[i];
    let mut next = me.clone();
    let incoming = ctx.graph.in_neighbors(i);
    let worst = incoming.iter().map(|&j| prev[j].solution.j_star).fold(f64::NEG_INFINITY, f64::max);
    if worst == f64::INFINITY {
        next.candidate.clear();
        next.solution = crate::program::Solution::infeasible();
        next.stop(t + 1);
        return Ok(next);
    }
    let received: Vec<usize> = union_sorted(incoming.iter().map(|&j| prev[j].candidate.as_slice()));
    let set = union_sorted([me.candidate.as_slice(), received.as_slice(), me.local.as_slice()]);
    let satisfied = me.solution.x_star.as_ref().is_some_and(|x| {
        received
            .iter()
            .all(|&j| me.candidate.binary_search(&j).is_ok() || ctx.program.satisfies(j, x))
    });
    let solution = if satisfied {
        let mut s = me.solution.clone();
        s.active = ctx.program.tight(&set, &s, tol::ACT);
        let old = std::mem::take(&mut s.multipliers);
        s.multipliers = s.active.iter().map(|&j| (j, old.get(&j).copied().unwrap_or(0.0))).collect();
        s
    } else {
        ctx.program.solve_subset(&set)?
    };
    if tol::obj_eq(solution.j_star, me.solution.j_star) {
        next.stagnation += 1;
    } else {
        next.stagnation = 0;
    }
    next.candidate = solution.active.clone();
    next.solution = solution;
    if next.solution.j_star == f64::INFINITY || next.stagnation >= 2 * ctx.graph.diameter() + 1 {
        next.stop(t + 1);
    }
    Ok(next)
}
