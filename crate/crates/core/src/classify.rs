//! Soft-margin linear classification as a convex program in `(θ, ρ, ν, φ)`:
//! minimize `φ` subject to `l_j (b_jᵀθ + ρ) ≥ 1 − ν`, `ν ≥ 0` and
//! `‖θ‖₂ + ν ≤ φ`.
//!
//! Along `ν` the optimal value is piecewise linear, `(1 − ν)·h + ν` for
//! `ν ≤ 1`, where `h` is the hard-margin value `min ‖θ‖` subject to
//! `l_j (b_jᵀθ + ρ) ≥ 1`. The optimum is therefore either the hard-margin
//! classifier (`ν = 0`, when `h < 1`) or the trivial one (`θ = 0`, `ν = 1`).
//! The hard-margin problem is solved by outer linearization of the norm over
//! the LP engine; once the LP identifies a candidate support set, the KKT
//! system on that set is solved exactly and verified.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::pool::{dot, ConstraintPool};
use crate::program::{BoxDomain, Solution, Status};
use crate::tol;

const MAX_CUT_ROUNDS: usize = 400;

pub(crate) fn solve(pool: &ConstraintPool, indices: &[usize], domain: &BoxDomain) -> Result<Solution> {
    let p = pool.dim() - 1;
    let label = |j: usize| pool.delta(j)[p];
    let positives = indices.iter().filter(|&&j| label(j) > 0.0).count();
    let negatives = indices.len() - positives;
    let (rho_lo, rho_hi) = (domain.lower[p], domain.upper[p]);

    let (x, multipliers) = if positives == 0 || negatives == 0 {
        // one class: θ = 0, ν = 0 and the smallest admissible offset
        let rho = if positives > 0 { rho_lo.max(1.0) } else { rho_lo };
        if (negatives > 0 && rho > -1.0) || rho > rho_hi {
            return Err(Error::InvalidInput("offset box excludes every one-class classifier".into()));
        }
        let mut x = vec![0.0; p + 3];
        x[p] = rho;
        (x, BTreeMap::new())
    } else {
        match hard_margin(pool, indices, domain)? {
            Some(hm) if hm.norm < 1.0 => {
                let mut x = hm.theta.clone();
                x.extend([hm.rho, 0.0, hm.norm]);
                let multipliers = hm
                    .support
                    .iter()
                    .zip(&hm.alpha)
                    .map(|(&j, &a)| (j, a / hm.norm))
                    .collect();
                (x, multipliers)
            }
            _ => {
                let mut x = vec![0.0; p + 3];
                x[p + 1] = 1.0;
                x[p + 2] = 1.0;
                let multipliers = indices
                    .iter()
                    .map(|&j| {
                        let count = if label(j) > 0.0 { positives } else { negatives };
                        (j, 0.5 / count as f64)
                    })
                    .collect();
                (x, multipliers)
            }
        }
    };
    if !domain.contains(&x) {
        return Err(Error::NumericalFailure("classifier optimum lies outside the domain box".into()));
    }
    let j_star = x[p + 2];
    let active: Vec<usize> = indices
        .iter()
        .copied()
        .filter(|&j| pool.eval(j, &x).abs() <= tol::ACT)
        .collect();
    let multipliers = active
        .iter()
        .map(|&j| (j, multipliers.get(&j).copied().unwrap_or(0.0)))
        .collect();
    Ok(Solution {
        status: Status::Feasible,
        x_star: Some(x),
        j_star,
        active,
        multipliers,
    })
}

#[derive(Clone, Debug)]
struct HardMargin {
    theta: Vec<f64>,
    rho: f64,
    norm: f64,
    support: Vec<usize>,
    alpha: Vec<f64>,
}

/// Minimum `‖θ‖` separating the two classes with unit margin, or `None` when
/// no separating hyperplane exists inside the domain box.
fn hard_margin(pool: &ConstraintPool, indices: &[usize], domain: &BoxDomain) -> Result<Option<HardMargin>> {
    let p = pool.dim() - 1;
    let n = p + 2;
    let mut lower = domain.lower[..=p].to_vec();
    let mut upper = domain.upper[..=p].to_vec();
    lower.push(0.0);
    upper.push(domain.upper[p + 2]);
    let mut objective = vec![0.0; n];
    objective[p + 1] = 1.0;

    let mut cuts: Vec<Vec<f64>> = Vec::new();
    for k in 0..p {
        for s in [1.0, -1.0] {
            let mut g = vec![0.0; p];
            g[k] = s;
            cuts.push(g);
        }
    }
    for _ in 0..MAX_CUT_ROUNDS {
        let mut lp = LinearProgram::new(objective.clone(), lower.clone(), upper.clone())?
            .with_capacity(indices.len() + cuts.len());
        let mut row = vec![0.0; n];
        for &j in indices {
            let delta = pool.delta(j);
            let l = delta[p];
            for k in 0..p {
                row[k] = -l * delta[k];
            }
            row[p] = -l;
            row[p + 1] = 0.0;
            lp.push_row(&row, -1.0);
        }
        for g in &cuts {
            row[..p].copy_from_slice(g);
            row[p] = 0.0;
            row[p + 1] = -1.0;
            lp.push_row(&row, 0.0);
        }
        let sol = match lp.solve()? {
            LpOutcome::Infeasible => return Ok(None),
            LpOutcome::Optimal(s) => s,
        };
        let theta_lp = &sol.x[..p];
        let rho_lp = sol.x[p];

        let by_multiplier: Vec<usize> = (0..indices.len())
            .filter(|&r| sol.multipliers[r] > 0.0)
            .map(|r| indices[r])
            .collect();
        let by_slack: Vec<usize> = indices
            .iter()
            .copied()
            .filter(|&j| margin(pool, j, theta_lp, rho_lp) - 1.0 <= 1e-7)
            .collect();
        let mut tried: Vec<Vec<usize>> = Vec::new();
        for base in [by_multiplier, by_slack] {
            let mut candidates = vec![base.clone()];
            if base.len() > 2 {
                for drop in 0..base.len() {
                    let mut s = base.clone();
                    s.remove(drop);
                    candidates.push(s);
                }
            }
            for s in candidates {
                if s.len() < 2 || tried.contains(&s) {
                    continue;
                }
                let found = kkt(pool, indices, &s);
                tried.push(s);
                if let Some(hm) = found {
                    return Ok(Some(hm));
                }
            }
        }
        let norm = theta_lp.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NumericalFailure("hard-margin cut at the origin".into()));
        }
        let g: Vec<f64> = theta_lp.iter().map(|v| v / norm).collect();
        if cuts.contains(&g) {
            return Err(Error::NumericalFailure("hard-margin cutting planes stalled".into()));
        }
        cuts.push(g);
    }
    Err(Error::NumericalFailure(format!(
        "hard-margin cutting planes did not converge in {MAX_CUT_ROUNDS} rounds"
    )))
}

fn margin(pool: &ConstraintPool, j: usize, theta: &[f64], rho: f64) -> f64 {
    let delta = pool.delta(j);
    let p = delta.len() - 1;
    delta[p] * (dot(&delta[..p], theta) + rho)
}

/// Solves `θ = Σ α_s l_s b_s`, `Σ α_s l_s = 0`, `l_s (b_sᵀθ + ρ) = 1` on the
/// candidate support and accepts the result if it satisfies all KKT conditions.
fn kkt(pool: &ConstraintPool, indices: &[usize], support: &[usize]) -> Option<HardMargin> {
    let p = pool.dim() - 1;
    let s = support.len();
    let b = |j: usize| &pool.delta(j)[..p];
    let l = |j: usize| pool.delta(j)[p];
    let mut m = DMatrix::<f64>::zeros(s + 1, s + 1);
    let mut rhs = DVector::<f64>::zeros(s + 1);
    for (i, &ji) in support.iter().enumerate() {
        for (k, &jk) in support.iter().enumerate() {
            m[(i, k)] = l(ji) * l(jk) * dot(b(ji), b(jk));
        }
        m[(i, s)] = l(ji);
        m[(s, i)] = l(ji);
        rhs[i] = 1.0;
    }
    let sol = m.lu().solve(&rhs)?;
    let alpha: Vec<f64> = sol.iter().take(s).copied().collect();
    let rho = sol[s];
    if alpha.iter().any(|a| !a.is_finite() || *a <= 0.0) || !rho.is_finite() {
        return None;
    }
    let mut theta = vec![0.0; p];
    for (&j, &a) in support.iter().zip(&alpha) {
        for (t, v) in theta.iter_mut().zip(b(j)) {
            *t += a * l(j) * v;
        }
    }
    let ok = indices
        .iter()
        .all(|&j| margin(pool, j, &theta, rho) >= 1.0 - tol::FEAS);
    if !ok {
        return None;
    }
    let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    Some(HardMargin {
        theta,
        rho,
        norm,
        support: support.to_vec(),
        alpha,
    })
}
