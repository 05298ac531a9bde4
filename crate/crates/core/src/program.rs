//! Convex programs over a constraint pool and their solutions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::mvee;
use crate::pool::{ConstraintPool, Family};
use crate::serde_ext::extended_f64;
use crate::{classify, tol};

/// Default half-width of the box used for the ellipsoid decision vector.
pub const ELLIPSOID_BOX: f64 = 1e6;
/// Default half-width of the classifier's `θ`, `ρ` and `ν` coordinates.
pub const CLASSIFIER_BOX: f64 = 1e4;

/// Axis-aligned box `X = [lower, upper]` with finite bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidInput("box bounds must be non-empty and of equal length".into()));
        }
        for (k, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidInput(format!(
                    "box coordinate {k} needs finite lower < upper, got [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    /// `θ, ρ ∈ [−B, B]`, `ν ∈ [0, B]`, `φ ∈ [0, (p + 1)·B]`.
    pub fn classifier(p: usize) -> Self {
        let b = CLASSIFIER_BOX;
        let mut lower = vec![-b; p + 1];
        let mut upper = vec![b; p + 1];
        lower.extend([0.0, 0.0]);
        upper.extend([b, (p + 1) as f64 * b]);
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(k, v)| *v >= self.lower[k] && *v <= self.upper[k])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Feasible,
    Infeasible,
}

/// Optimal point of a program over some index set.
///
/// An infeasible program has `j_star = +∞`, no point and no active
/// constraints. A feasible ellipsoid program whose points do not span the
/// space has `j_star = −∞`, no point, and keeps every constraint active.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    pub x_star: Option<Vec<f64>>,
    #[serde(with = "extended_f64")]
    pub j_star: f64,
    pub active: Vec<usize>,
    /// Multiplier of every active constraint; all others are zero.
    pub multipliers: BTreeMap<usize, f64>,
}

impl Solution {
    pub fn infeasible() -> Self {
        Self {
            status: Status::Infeasible,
            x_star: None,
            j_star: f64::INFINITY,
            active: Vec::new(),
            multipliers: BTreeMap::new(),
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }

    pub fn multiplier(&self, index: usize) -> f64 {
        self.multipliers.get(&index).copied().unwrap_or(0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `min aᵀx` over `x ∈ X` subject to the pool constraints listed in `indices`.
///
/// Index sets are kept sorted and duplicate-free, so a program built from
/// any permutation of the same indices is the same program.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexProgram<'p> {
    objective: Vec<f64>,
    domain: BoxDomain,
    pool: &'p ConstraintPool,
    indices: Vec<usize>,
}

impl<'p> ConvexProgram<'p> {
    pub fn new(
        objective: Vec<f64>,
        domain: BoxDomain,
        pool: &'p ConstraintPool,
        indices: Vec<usize>,
    ) -> Result<Self> {
        let d = pool.decision_dim();
        if objective.len() != d || domain.dim() != d {
            return Err(Error::InvalidInput(format!(
                "{} programs have {d} variables; objective has {}, box has {}",
                pool.family(),
                objective.len(),
                domain.dim()
            )));
        }
        BoxDomain::new(domain.lower.clone(), domain.upper.clone())?;
        if objective.iter().any(|v| !v.is_finite()) || objective.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidInput("objective must be finite and nonzero".into()));
        }
        if pool.family() != Family::LinearHalfspace {
            let fixed = epigraph_objective(d);
            if objective != fixed {
                return Err(Error::InvalidInput(format!(
                    "{} programs minimize the last coordinate; objective must be e_{d}",
                    pool.family()
                )));
            }
        }
        let indices = normalize_indices(indices, pool.len())?;
        Ok(Self {
            objective,
            domain,
            pool,
            indices,
        })
    }

    /// Enclosing-ellipsoid program: minimize `log det W⁻¹` over the default box.
    pub fn ellipsoid(pool: &'p ConstraintPool, indices: Vec<usize>) -> Result<Self> {
        let d = pool.decision_dim();
        Self::new(epigraph_objective(d), BoxDomain::cube(d, ELLIPSOID_BOX), pool, indices)
    }

    /// Classifier program over [`BoxDomain::classifier`].
    pub fn classifier(pool: &'p ConstraintPool, indices: Vec<usize>) -> Result<Self> {
        let d = pool.decision_dim();
        Self::new(epigraph_objective(d), BoxDomain::classifier(pool.dim() - 1), pool, indices)
    }

    /// Program with the family's standard objective and box; linear pools use
    /// `objective` and `domain`, which other families ignore.
    pub fn for_pool(
        pool: &'p ConstraintPool,
        indices: Vec<usize>,
        objective: Vec<f64>,
        domain: BoxDomain,
    ) -> Result<Self> {
        match pool.family() {
            Family::LinearHalfspace => Self::new(objective, domain, pool, indices),
            Family::EllipsoidMembership => Self::ellipsoid(pool, indices),
            Family::ClassificationMargin => Self::classifier(pool, indices),
        }
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn pool(&self) -> &'p ConstraintPool {
        self.pool
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    /// Same objective and box over another index set.
    pub fn with_indices(&self, indices: Vec<usize>) -> Result<Self> {
        Ok(Self {
            objective: self.objective.clone(),
            domain: self.domain.clone(),
            pool: self.pool,
            indices: normalize_indices(indices, self.pool.len())?,
        })
    }

    pub fn solve(&self) -> Result<Solution> {
        self.solve_subset(&self.indices)
    }

    /// Solves the program restricted to `indices`, which must be sorted,
    /// duplicate-free positions in the pool.
    pub fn solve_subset(&self, indices: &[usize]) -> Result<Solution> {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        match self.pool.family() {
            Family::LinearHalfspace => self.solve_linear(indices),
            Family::EllipsoidMembership => self.solve_ellipsoid(indices),
            Family::ClassificationMargin => classify::solve(self.pool, indices, &self.domain),
        }
    }

    /// Constraint value `f_j(x)`; feasible means `≤ 0`.
    pub fn value(&self, j: usize, x: &[f64]) -> f64 {
        self.pool.eval(j, x)
    }

    pub fn satisfies(&self, j: usize, x: &[f64]) -> bool {
        self.pool.eval(j, x) <= tol::FEAS
    }

    /// Members of `indices` that are tight at `solution` within `tau`.
    pub fn tight(&self, indices: &[usize], solution: &Solution, tau: f64) -> Vec<usize> {
        match (&solution.status, &solution.x_star) {
            (Status::Infeasible, _) => Vec::new(),
            (Status::Feasible, None) => indices.to_vec(),
            (Status::Feasible, Some(x)) => indices
                .iter()
                .copied()
                .filter(|&j| self.pool.eval(j, x).abs() <= tau)
                .collect(),
        }
    }

    fn solve_linear(&self, indices: &[usize]) -> Result<Solution> {
        let d = self.dim();
        let mut lp = LinearProgram::new(self.objective.clone(), self.domain.lower.clone(), self.domain.upper.clone())?
            .with_capacity(indices.len());
        for &j in indices {
            let delta = self.pool.delta(j);
            lp.push_row(&delta[..d], -delta[d]);
        }
        let sol = match lp.solve()? {
            LpOutcome::Infeasible => return Ok(Solution::infeasible()),
            LpOutcome::Optimal(s) => s,
        };
        let mut solution = Solution {
            status: Status::Feasible,
            j_star: sol.objective,
            x_star: Some(sol.x),
            active: Vec::new(),
            multipliers: BTreeMap::new(),
        };
        solution.active = self.tight(indices, &solution, tol::ACT);
        let row_of: BTreeMap<usize, usize> = indices.iter().enumerate().map(|(r, &j)| (j, r)).collect();
        solution.multipliers = solution
            .active
            .iter()
            .map(|j| (*j, sol.multipliers[row_of[j]]))
            .collect();
        Ok(solution)
    }

    fn solve_ellipsoid(&self, indices: &[usize]) -> Result<Solution> {
        let points: Vec<&[f64]> = indices.iter().map(|&j| self.pool.delta(j)).collect();
        if !mvee::full_dimensional(&points) {
            return Ok(Solution {
                status: Status::Feasible,
                x_star: None,
                j_star: f64::NEG_INFINITY,
                active: indices.to_vec(),
                multipliers: BTreeMap::new(),
            });
        }
        let fit = mvee::fit(&points)?;
        let mut solution = Solution {
            status: Status::Feasible,
            x_star: Some(fit.ellipsoid.to_decision()),
            j_star: fit.ellipsoid.log_det_inv(),
            active: Vec::new(),
            multipliers: BTreeMap::new(),
        };
        solution.active = self.tight(indices, &solution, tol::ACT);
        let pos_of: BTreeMap<usize, usize> = indices.iter().enumerate().map(|(r, &j)| (j, r)).collect();
        solution.multipliers = solution
            .active
            .iter()
            .map(|j| (*j, fit.weights[pos_of[j]]))
            .collect();
        Ok(solution)
    }
}

fn epigraph_objective(d: usize) -> Vec<f64> {
    let mut a = vec![0.0; d];
    a[d - 1] = 1.0;
    a
}

fn normalize_indices(mut indices: Vec<usize>, len: usize) -> Result<Vec<usize>> {
    indices.sort_unstable();
    indices.dedup();
    if let Some(&last) = indices.last() {
        if last >= len {
            return Err(Error::InvalidInput(format!("index {last} outside a pool of {len}")));
        }
    }
    Ok(indices)
}

/// Solves `program` under the lexicographic tie-break.
pub fn solve(program: &ConvexProgram<'_>) -> Result<Solution> {
    program.solve()
}

/// Constraints of `program` with `|f_j(x*)| ≤ tau`; empty for infeasible
/// solutions.
pub fn active_set(program: &ConvexProgram<'_>, solution: &Solution, tau: f64) -> Vec<usize> {
    program.tight(program.indices(), solution, tau)
}
