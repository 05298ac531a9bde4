//! Brute-force structure oracles: support constraints and essential sets.
//!
//! Both enumerate full solves and are meant for small instances.

use crate::error::{Error, Result};
use crate::program::ConvexProgram;
use crate::tol;

/// Largest index set [`essential_sets_oracle`] accepts.
pub const ESSENTIAL_CAP: usize = 20;

/// Constraints whose removal strictly lowers the optimal value.
pub fn support_set_oracle(program: &ConvexProgram<'_>) -> Result<Vec<usize>> {
    let all = program.indices();
    let full = program.solve_subset(all)?.j_star;
    let mut support = Vec::new();
    for (k, &c) in all.iter().enumerate() {
        let rest: Vec<usize> = all.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &j)| j).collect();
        let j = program.solve_subset(&rest)?.j_star;
        if tol::obj_lt(j, full) {
            support.push(c);
        }
    }
    Ok(support)
}

/// All invariant subsets of minimal cardinality, each sorted, in
/// lexicographic order.
pub fn essential_sets_oracle(program: &ConvexProgram<'_>) -> Result<Vec<Vec<usize>>> {
    let all = program.indices();
    if all.len() > ESSENTIAL_CAP {
        return Err(Error::InvalidInput(format!(
            "essential-set enumeration is capped at {ESSENTIAL_CAP} constraints, got {}",
            all.len()
        )));
    }
    let full = program.solve_subset(all)?.j_star;
    for size in 0..=all.len() {
        let mut found = Vec::new();
        let mut pick: Vec<usize> = (0..size).collect();
        loop {
            let subset: Vec<usize> = pick.iter().map(|&k| all[k]).collect();
            if tol::obj_eq(program.solve_subset(&subset)?.j_star, full) {
                found.push(subset);
            }
            if !next_combination(&mut pick, all.len()) {
                break;
            }
        }
        if !found.is_empty() {
            return Ok(found);
        }
    }
    Ok(vec![all.to_vec()])
}

fn next_combination(pick: &mut [usize], n: usize) -> bool {
    let k = pick.len();
    for i in (0..k).rev() {
        if pick[i] < n - k + i {
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
