//! Dense linear programming in inequality form: `min cᵀx` subject to
//! `Gx ≤ h` and a finite box `l ≤ x ≤ u`.
//!
//! The solver walks vertices of the feasible polytope. A basis is a set of `d`
//! linearly independent tight rows; each pivot releases the basic row with the
//! most negative multiplier and brings in the blocking row with the smallest
//! ratio (smallest index on ties). After a run of degenerate pivots the
//! release switches to the smallest row index (Bland's rule), so degenerate
//! vertices cannot make it cycle. Every pivot costs one `d × d`
//! factorization plus one pass over the rows.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::tol;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    dim: usize,
    objective: Vec<f64>,
    rows: Vec<f64>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOptions {
    /// Starting box corner, `true` meaning the upper bound. Defaults to the
    /// corner that minimizes the objective over the box.
    pub start_upper: Option<Vec<bool>>,
    /// Return as soon as the objective drops below this value.
    pub stop_below: Option<f64>,
    /// Break ties among optimal points by minimizing `x₁`, then `x₂`, ...
    pub lexicographic: bool,
    pub max_pivots: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            start_upper: None,
            stop_below: None,
            lexicographic: true,
            max_pivots: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row of `G`, zero for rows outside the final basis.
    pub multipliers: Vec<f64>,
    pub lower_multipliers: Vec<f64>,
    pub upper_multipliers: Vec<f64>,
    pub pivots: usize,
    /// Set when [`LpOptions::stop_below`] fired; `x` is then feasible but not
    /// necessarily optimal.
    pub stopped_early: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            LpOutcome::Infeasible => None,
        }
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let dim = objective.len();
        if dim == 0 {
            return Err(Error::InvalidInput("linear program needs at least one variable".into()));
        }
        if lower.len() != dim || upper.len() != dim {
            return Err(Error::InvalidInput("box bounds do not match the objective length".into()));
        }
        if objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("objective must be finite".into()));
        }
        for k in 0..dim {
            if !(lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k]) {
                return Err(Error::InvalidInput(format!(
                    "box coordinate {k} needs finite lower < upper, got [{}, {}]",
                    lower[k], upper[k]
                )));
            }
        }
        Ok(Self {
            dim,
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
            lower,
            upper,
        })
    }

    pub fn with_capacity(mut self, rows: usize) -> Self {
        self.rows.reserve(rows * self.dim);
        self.rhs.reserve(rows);
        self
    }

    /// Adds the row `g·x ≤ h`.
    pub fn push_row(&mut self, g: &[f64], h: f64) {
        assert_eq!(g.len(), self.dim, "row length must match the variable count");
        self.rows.extend_from_slice(g);
        self.rhs.push(h);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.dim..(r + 1) * self.dim]
    }

    pub fn rhs(&self, r: usize) -> f64 {
        self.rhs[r]
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        self.solve_with(&LpOptions::default())
    }

    pub fn solve_with(&self, opts: &LpOptions) -> Result<LpOutcome> {
        let n = self.dim;
        let m = self.num_rows();
        if self.rows.iter().chain(&self.rhs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("constraint rows must be finite".into()));
        }
        let cap = opts.max_pivots.unwrap_or(1000 + 50 * (m + 2 * n));
        let mut pivots = 0usize;

        let table = Table::from_program(self);
        let corner: Vec<bool> = match &opts.start_upper {
            Some(c) if c.len() == n => c.clone(),
            Some(_) => return Err(Error::InvalidInput("start corner has the wrong length".into())),
            None => self.objective.iter().map(|&c| c < 0.0).collect(),
        };
        let x0: Vec<f64> = (0..n)
            .map(|k| if corner[k] { self.upper[k] } else { self.lower[k] })
            .collect();
        let corner_basis: Vec<usize> = (0..n)
            .map(|k| if corner[k] { m + k } else { m + n + k })
            .collect();

        let mut worst = (0.0f64, usize::MAX);
        for r in 0..m {
            let v = dot(self.row(r), &x0) - self.rhs[r];
            if v > worst.0 {
                worst = (v, r);
            }
        }

        let mut basis = if worst.1 == usize::MAX {
            corner_basis
        } else {
            match self.phase_one(&corner_basis, worst.1, cap, &mut pivots)? {
                Some(b) => b,
                None => return Ok(LpOutcome::Infeasible),
            }
        };

        let main = simplex(&table, &self.objective, &mut basis, opts.stop_below, cap, &mut pivots)?;
        let mut multipliers = vec![0.0; m];
        let mut upper_multipliers = vec![0.0; n];
        let mut lower_multipliers = vec![0.0; n];
        for (pos, &r) in basis.iter().enumerate() {
            let lam = main.lambda[pos].max(0.0);
            if r < m {
                multipliers[r] = lam;
            } else if r < m + n {
                upper_multipliers[r - m] = lam;
            } else {
                lower_multipliers[r - m - n] = lam;
            }
        }
        if main.stopped {
            let objective = dot(&self.objective, &main.x);
            return Ok(LpOutcome::Optimal(LpSolution {
                x: main.x,
                objective,
                multipliers,
                lower_multipliers,
                upper_multipliers,
                pivots,
                stopped_early: true,
            }));
        }

        let mut x = main.x;
        if opts.lexicographic && !is_unique(&main.lambda, &self.objective) {
            x = self.lexicographic(&table, x, basis, cap, &mut pivots)?;
        }
        if let Some(canonical) = canonical_vertex(&table, &x, m + 2 * n) {
            x = canonical;
        }
        let objective = dot(&self.objective, &x);
        Ok(LpOutcome::Optimal(LpSolution {
            x,
            objective,
            multipliers,
            lower_multipliers,
            upper_multipliers,
            pivots,
            stopped_early: false,
        }))
    }

    /// Minimizes the maximum violation `t` over the box, starting from the
    /// given corner. Returns a feasible basis of the original rows, or `None`
    /// when the smallest achievable violation exceeds the feasibility tolerance.
    fn phase_one(
        &self,
        corner_basis: &[usize],
        worst_row: usize,
        cap: usize,
        pivots: &mut usize,
    ) -> Result<Option<Vec<usize>>> {
        let n = self.dim;
        let m = self.num_rows();
        let w = n + 1;
        let mut a = Vec::with_capacity((m + 2 * n + 1) * w);
        let mut b = Vec::with_capacity(m + 2 * n + 1);
        // row 0 is t ≥ 0; it sits first so it wins ratio ties and leaves t basic at zero
        a.extend(std::iter::repeat_n(0.0, n));
        a.push(-1.0);
        b.push(0.0);
        for r in 0..m {
            a.extend_from_slice(self.row(r));
            a.push(-1.0);
            b.push(self.rhs[r]);
        }
        for k in 0..n {
            a.extend((0..w).map(|j| if j == k { 1.0 } else { 0.0 }));
            b.push(self.upper[k]);
        }
        for k in 0..n {
            a.extend((0..w).map(|j| if j == k { -1.0 } else { 0.0 }));
            b.push(-self.lower[k]);
        }
        let table = Table { n: w, a, b };
        let mut basis: Vec<usize> = corner_basis.iter().map(|r| r + 1).collect();
        basis.push(worst_row + 1);
        let mut c = vec![0.0; w];
        c[n] = 1.0;
        let end = simplex(&table, &c, &mut basis, None, cap, pivots)?;
        if end.x[n] > tol::FEAS {
            return Ok(None);
        }
        if let Some(pos) = basis.iter().position(|&r| r == 0) {
            basis.remove(pos);
            return Ok(Some(basis.into_iter().map(|r| r - 1).collect()));
        }
        // t is tiny but positive: keep any d basic rows that still form a basis
        let orig = Table::from_program(self);
        let mut order: Vec<usize> = (0..basis.len()).collect();
        order.sort_by_key(|&p| std::cmp::Reverse(basis[p]));
        for drop in order {
            let candidate: Vec<usize> = basis
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != drop)
                .map(|(_, &r)| r - 1)
                .collect();
            if factor(&orig.basis_matrix(&candidate)).is_some() {
                return Ok(Some(candidate));
            }
        }
        Err(Error::NumericalFailure("phase one ended without a usable basis".into()))
    }

    fn lexicographic(
        &self,
        base: &Table,
        mut x: Vec<f64>,
        mut basis: Vec<usize>,
        cap: usize,
        pivots: &mut usize,
    ) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut table = base.clone();
        let scale = self.objective.iter().fold(0f64, |s, v| s.max(v.abs()));
        let c: Vec<f64> = self.objective.iter().map(|v| v / scale).collect();
        let level = dot(&c, &x);
        table.push(&c, level);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let end = simplex(&table, &e, &mut basis, None, cap, pivots)?;
            x = end.x;
            if is_unique(&end.lambda, &e) {
                break;
            }
            table.push(&e, x[k]);
        }
        Ok(x)
    }
}

#[derive(Clone, Debug)]
struct Table {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Table {
    /// General rows first, then `x_k ≤ u_k`, then `−x_k ≤ −l_k`.
    fn from_program(lp: &LinearProgram) -> Self {
        let n = lp.dim;
        let mut a = Vec::with_capacity(lp.rows.len() + 2 * n * n);
        a.extend_from_slice(&lp.rows);
        let mut b = lp.rhs.clone();
        for k in 0..n {
            a.extend((0..n).map(|j| if j == k { 1.0 } else { 0.0 }));
            b.push(lp.upper[k]);
        }
        for k in 0..n {
            a.extend((0..n).map(|j| if j == k { -1.0 } else { 0.0 }));
            b.push(-lp.lower[k]);
        }
        Self { n, a, b }
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.a[r * self.n..(r + 1) * self.n]
    }

    fn push(&mut self, row: &[f64], rhs: f64) {
        self.a.extend_from_slice(row);
        self.b.push(rhs);
    }

    fn basis_matrix(&self, basis: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(basis.len(), self.n, |i, j| self.a[basis[i] * self.n + j])
    }
}

struct PhaseEnd {
    x: Vec<f64>,
    /// Multipliers of the basic rows, by basis position.
    lambda: Vec<f64>,
    stopped: bool,
}

fn simplex(
    t: &Table,
    c: &[f64],
    basis: &mut [usize],
    stop_below: Option<f64>,
    cap: usize,
    pivots: &mut usize,
) -> Result<PhaseEnd> {
    let n = t.n;
    let m = t.m();
    let mut in_basis = vec![false; m];
    for &r in basis.iter() {
        in_basis[r] = true;
    }
    let cscale = c.iter().fold(0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    let opt_tol = 1e-11 * cscale;
    let neg_c = DVector::from_iterator(n, c.iter().map(|v| -v));
    let mut degenerate_streak = 0usize;
    loop {
        let ab = t.basis_matrix(basis);
        let lu = factor(&ab).ok_or_else(|| Error::NumericalFailure("singular simplex basis".into()))?;
        let hb = DVector::from_iterator(n, basis.iter().map(|&r| t.b[r]));
        let x = lu
            .solve(&hb)
            .ok_or_else(|| Error::NumericalFailure("singular simplex basis".into()))?;
        let lambda = factor(&ab.transpose())
            .and_then(|lut| lut.solve(&neg_c))
            .ok_or_else(|| Error::NumericalFailure("singular simplex basis".into()))?;
        let x: Vec<f64> = x.iter().copied().collect();
        let lambda: Vec<f64> = lambda.iter().copied().collect();

        if let Some(limit) = stop_below {
            if dot(c, &x) < limit {
                return Ok(PhaseEnd {
                    x,
                    lambda,
                    stopped: true,
                });
            }
        }

        let candidates = (0..n).filter(|&p| lambda[p] < -opt_tol);
        let leaving = if degenerate_streak > n {
            candidates.min_by_key(|&p| basis[p])
        } else {
            candidates.min_by(|&a, &b| lambda[a].total_cmp(&lambda[b]).then(basis[a].cmp(&basis[b])))
        };
        let Some(pos) = leaving else {
            return Ok(PhaseEnd {
                x,
                lambda,
                stopped: false,
            });
        };

        let mut e = DVector::zeros(n);
        e[pos] = -1.0;
        let dir = lu
            .solve(&e)
            .ok_or_else(|| Error::NumericalFailure("singular simplex basis".into()))?;
        let dir: Vec<f64> = dir.iter().copied().collect();
        let dnorm = dir.iter().fold(0f64, |s, v| s.max(v.abs()));
        let piv_tol = 1e-9 * dnorm;

        let mut best: Option<(f64, usize)> = None;
        for r in 0..m {
            if in_basis[r] {
                continue;
            }
            let row = t.row(r);
            let g = dot(row, &dir);
            if g <= piv_tol {
                continue;
            }
            let mut slack = t.b[r] - dot(row, &x);
            if slack < 1e-12 * t.b[r].abs().max(1.0) {
                slack = 0.0;
            }
            let ratio = slack / g;
            if best.is_none_or(|(b, _)| ratio < b) {
                best = Some((ratio, r));
            }
        }
        let Some((step, entering)) = best else {
            return Err(Error::NumericalFailure("objective unbounded along an edge".into()));
        };
        degenerate_streak = if step == 0.0 { degenerate_streak + 1 } else { 0 };
        in_basis[basis[pos]] = false;
        basis[pos] = entering;
        in_basis[entering] = true;
        *pivots += 1;
        if *pivots > cap {
            return Err(Error::NumericalFailure(format!("simplex exceeded {cap} pivots")));
        }
    }
}

/// Strictly positive multipliers on a full basis certify a unique minimizer.
fn is_unique(lambda: &[f64], c: &[f64]) -> bool {
    let cscale = c.iter().fold(0f64, |s, v| s.max(v.abs()));
    lambda.iter().all(|&l| l > 1e-9 * cscale)
}

/// Recomputes a vertex from its tight rows in row order, so that programs
/// sharing the same tight rows produce bit-identical points.
fn canonical_vertex(t: &Table, x: &[f64], rows: usize) -> Option<Vec<f64>> {
    let tight: Vec<usize> = (0..rows)
        .filter(|&r| (t.b[r] - dot(t.row(r), x)).abs() <= 1e-9 * t.b[r].abs().max(1.0))
        .take(t.n + 1)
        .collect();
    if tight.len() != t.n {
        return None;
    }
    let lu = factor(&t.basis_matrix(&tight))?;
    let hb = DVector::from_iterator(t.n, tight.iter().map(|&r| t.b[r]));
    let y: Vec<f64> = lu.solve(&hb)?.iter().copied().collect();
    let drift = y.iter().zip(x).fold(0f64, |s, (a, b)| s.max((a - b).abs()));
    (drift <= 1e-7 * x.iter().fold(1f64, |s, v| s.max(v.abs()))).then_some(y)
}

fn factor(a: &DMatrix<f64>) -> Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let lu = a.clone().lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].abs()).collect();
    let big = diag.iter().fold(0f64, |s, v| s.max(*v));
    let small = diag.iter().fold(f64::INFINITY, |s, v| s.min(*v));
    (big > 0.0 && small > 1e-13 * big).then_some(lu)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
