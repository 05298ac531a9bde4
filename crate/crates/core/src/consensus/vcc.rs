//! Vertex constraints consensus and its bandwidth-limited variant: nodes
//! exchange hull vertices of the realizations they know.

use crate::error::Result;
use crate::hull::pool_vertices;

use super::{union_sorted, Context, NodeState};

pub(super) fn init(ctx: &Context<'_, '_>, node: usize, local: Vec<usize>, queued: bool) -> Result<NodeState> {
    let vertices = pool_vertices(ctx.program.pool(), &local);
    let mut state = NodeState::new(node, local);
    state.solution = ctx.program.solve_subset(&vertices)?;
    if queued {
        state.queue = vertices.clone();
        state.busy_stamp = if state.queue.is_empty() { -1 } else { 0 };
        if quiet_long_enough(ctx, &state, 0) {
            state.stop(0);
        }
    } else if ctx.graph.diameter() == 0 {
        state.stop(0);
    }
    state.candidate = vertices;
    Ok(state)
}

pub(super) fn step(ctx: &Context<'_, '_>, prev: &[NodeState], i: usize, t: usize) -> Result<NodeState> {
    let me = &prev[i];
    let mut next = me.clone();
    let incoming = ctx.graph.in_neighbors(i);
    let set = union_sorted(
        std::iter::once(me.candidate.as_slice()).chain(incoming.iter().map(|&j| prev[j].candidate.as_slice())),
    );
    let vertices = if set == me.candidate {
        set
    } else {
        pool_vertices(ctx.program.pool(), &set)
    };
    if vertices != me.candidate {
        next.solution = ctx.program.solve_subset(&vertices)?;
        next.candidate = vertices;
    }
    if t + 1 >= ctx.graph.diameter() {
        next.stop(t + 1);
    }
    Ok(next)
}

pub(super) fn message(state: &NodeState, bandwidth: usize) -> &[usize] {
    &state.queue[..state.queue.len().min(bandwidth)]
}

pub(super) fn step_quantized(
    ctx: &Context<'_, '_>,
    prev: &[NodeState],
    i: usize,
    t: usize,
    bandwidth: usize,
) -> Result<NodeState> {
    let me = &prev[i];
    let mut next = me.clone();
    let incoming = ctx.graph.in_neighbors(i);
    let set = union_sorted(
        std::iter::once(me.candidate.as_slice()).chain(incoming.iter().map(|&j| message(&prev[j], bandwidth))),
    );
    let vertices = if set == me.candidate {
        set
    } else {
        pool_vertices(ctx.program.pool(), &set)
    };
    let sent = message(me, bandwidth);
    let mut queue: Vec<usize> = me.queue[sent.len()..]
        .iter()
        .copied()
        .filter(|j| vertices.binary_search(j).is_ok())
        .collect();
    queue.extend(vertices.iter().copied().filter(|j| me.candidate.binary_search(j).is_err()));
    if vertices != me.candidate {
        next.solution = ctx.program.solve_subset(&vertices)?;
    }
    next.candidate = vertices;
    next.queue = queue;
    let heard = incoming.iter().map(|&j| prev[j].busy_stamp).max().unwrap_or(-1);
    next.busy_stamp = me.busy_stamp.max(heard);
    if !next.queue.is_empty() {
        next.busy_stamp = (t + 1) as i64;
    }
    if quiet_long_enough(ctx, &next, t + 1) {
        next.stop(t + 1);
    }
    Ok(next)
}

fn quiet_long_enough(ctx: &Context<'_, '_>, state: &NodeState, t: usize) -> bool {
    t as i64 - state.busy_stamp > ctx.graph.diameter() as i64
}
