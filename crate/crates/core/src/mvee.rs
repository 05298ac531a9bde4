//! Minimum-volume enclosing ellipsoids.
//!
//! Points are lifted to `q̃ = [y; 1]` in `ℝ^{q+1}` and the dual problem
//! `max log det Σ uᵢ q̃ᵢq̃ᵢᵀ` over the simplex is solved by a Khachiyan
//! iteration with away steps. The iterate is then polished by Newton's method
//! on the optimality conditions `q̃ᵢᵀ Λ⁻¹ q̃ᵢ = q + 1` of the support points,
//! which makes the result exact to rounding. Large point sets are handled with
//! a working set that grows by the worst uncovered points.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pool::vech_len;
use crate::program::{Solution, Status};
use crate::tol;

/// Ellipsoid `{y : (y − c)ᵀ W (y − c) ≤ 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub shape: DMatrix<f64>,
}

impl Ellipsoid {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `(y − c)ᵀ W (y − c)`.
    pub fn form(&self, y: &[f64]) -> f64 {
        let d = DVector::from_iterator(self.dim(), y.iter().zip(&self.center).map(|(a, b)| a - b));
        d.dot(&(&self.shape * &d))
    }

    pub fn contains(&self, y: &[f64], slack: f64) -> bool {
        self.form(y) <= 1.0 + slack
    }

    /// `log det W⁻¹`, the objective of the enclosing problem.
    pub fn log_det_inv(&self) -> f64 {
        -self.shape.clone().cholesky().map_or(f64::NAN, |c| 2.0 * c.l().diagonal().map(f64::ln).sum())
    }

    /// Volume of the ellipsoid.
    pub fn volume(&self) -> f64 {
        let q = self.dim() as f64;
        let unit_ball = std::f64::consts::PI.powf(q / 2.0) / gamma_half_plus_one(self.dim());
        unit_ball * (0.5 * self.log_det_inv()).exp()
    }

    /// Decision vector `[c, upper triangle of W (row-major), log det W⁻¹]`.
    pub fn to_decision(&self) -> Vec<f64> {
        let q = self.dim();
        let mut x = self.center.clone();
        x.reserve(vech_len(q) + 1);
        for i in 0..q {
            for j in i..q {
                x.push(self.shape[(i, j)]);
            }
        }
        x.push(self.log_det_inv());
        x
    }

    pub fn from_decision(x: &[f64], q: usize) -> Self {
        let center = x[..q].to_vec();
        let mut shape = DMatrix::zeros(q, q);
        let mut k = q;
        for i in 0..q {
            for j in i..q {
                shape[(i, j)] = x[k];
                shape[(j, i)] = x[k];
                k += 1;
            }
        }
        Self { center, shape }
    }
}

fn gamma_half_plus_one(q: usize) -> f64 {
    // Γ(q/2 + 1)
    if q % 2 == 0 {
        (1..=q / 2).map(|k| k as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt() / 2.0;
        let mut s = 1.5;
        while s < q as f64 / 2.0 + 1.0 - 1e-9 {
            g *= s;
            s += 1.0;
        }
        g
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Fit {
    pub ellipsoid: Ellipsoid,
    /// Barycentric weight of every input point; zero off the support.
    pub weights: Vec<f64>,
    /// Relative volume gap certified by the dual weights.
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct MveeResult {
    pub ellipsoid: Ellipsoid,
    /// Refers to points by input position; the decision vector is
    /// [`Ellipsoid::to_decision`] and the multipliers are the dual weights.
    pub solution: Solution,
    /// Certified relative volume gap, at most `τ_mvee`.
    pub gap: f64,
}

/// Computes the minimum-volume ellipsoid enclosing `points`.
pub fn solve_mvee(points: &[Vec<f64>]) -> Result<MveeResult> {
    let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    if let Some(q) = refs.first().map(|p| p.len()) {
        if q == 0 || refs.iter().any(|p| p.len() != q) {
            return Err(Error::InvalidInput("points must share a positive dimension".into()));
        }
    }
    let fit = fit(&refs)?;
    let x = fit.ellipsoid.to_decision();
    let j_star = *x.last().unwrap_or(&f64::NAN);
    let active: Vec<usize> = (0..points.len())
        .filter(|&i| (fit.ellipsoid.form(points[i].as_slice()) - 1.0).abs() <= tol::ACT)
        .collect();
    let multipliers = active.iter().map(|&i| (i, fit.weights[i])).collect();
    let solution = Solution {
        status: Status::Feasible,
        x_star: Some(x),
        j_star,
        active,
        multipliers,
    };
    Ok(MveeResult {
        ellipsoid: fit.ellipsoid,
        solution,
        gap: fit.gap,
    })
}

/// True when the points span `ℝ^q` affinely.
pub fn full_dimensional(points: &[&[f64]]) -> bool {
    let Some(q) = points.first().map(|p| p.len()) else {
        return false;
    };
    if points.len() < q + 1 {
        return false;
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; q];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.iter()) {
            *m += v / n;
        }
    }
    let mut scatter = DMatrix::<f64>::zeros(q, q);
    for p in points {
        let d = DVector::from_iterator(q, p.iter().zip(&mean).map(|(a, b)| a - b));
        scatter += &d * d.transpose();
    }
    let eig = scatter.symmetric_eigen().eigenvalues;
    let big = eig.iter().fold(0f64, |s, v| s.max(v.abs()));
    let small = eig.iter().fold(f64::INFINITY, |s, v| s.min(*v));
    big > 0.0 && small > 1e-12 * big
}

const WORKING_SET_BATCH: usize = 16;
const COVER_SLACK: f64 = 1e-11;

pub(crate) fn fit(points: &[&[f64]]) -> Result<Fit> {
    let Some(q) = points.first().map(|p| p.len()) else {
        return Err(Error::DegenerateInput("no points".into()));
    };
    if !full_dimensional(points) {
        return Err(Error::DegenerateInput(format!(
            "{} points do not span an affine {q}-dimensional set",
            points.len()
        )));
    }
    let np = (q + 1) as f64;
    let mut work = initial_working_set(points);
    if !full_dimensional(&work.iter().map(|&i| points[i]).collect::<Vec<_>>()) {
        work = (0..points.len()).collect();
    }
    let (mut weights, exact) = loop {
        let sub: Vec<&[f64]> = work.iter().map(|&i| points[i]).collect();
        let (u_sub, exact) = dual_weights(&sub)?;
        let mut u = vec![0.0; points.len()];
        for (&i, &w) in work.iter().zip(&u_sub) {
            u[i] = w;
        }
        let omega = leverages(points, &u).ok_or_else(singular)?;
        let mut outside: Vec<usize> = (0..points.len())
            .filter(|&i| omega[i] > np * (1.0 + COVER_SLACK) && work.binary_search(&i).is_err())
            .collect();
        if outside.is_empty() {
            break (u, exact);
        }
        outside.sort_by(|&a, &b| omega[b].total_cmp(&omega[a]).then(a.cmp(&b)));
        outside.truncate(WORKING_SET_BATCH);
        work.extend(outside);
        work.sort_unstable();
    };

    if exact {
        // recompute from the support alone so equal supports give equal bits
        let support: Vec<usize> = (0..points.len()).filter(|&i| weights[i] > 0.0).collect();
        let sub: Vec<&[f64]> = support.iter().map(|&i| points[i]).collect();
        if let Ok((u_sub, true)) = dual_weights(&sub) {
            let mut u = vec![0.0; points.len()];
            for (&i, &w) in support.iter().zip(&u_sub) {
                u[i] = w;
            }
            if let Some(omega) = leverages(points, &u) {
                if omega.iter().all(|&w| w <= np * (1.0 + COVER_SLACK)) {
                    weights = u;
                }
            }
        }
    }

    let omega = leverages(points, &weights).ok_or_else(singular)?;
    let eps_plus = omega.iter().fold(0f64, |s, &w| s.max(w / np - 1.0)).max(0.0);
    let gap = (1.0 + eps_plus).powf(np / 2.0) - 1.0;
    if gap > tol::MVEE {
        return Err(Error::NumericalFailure(format!("ellipsoid volume gap {gap:e} above tolerance")));
    }

    let mut center = vec![0.0; q];
    for (p, &w) in points.iter().zip(&weights) {
        if w > 0.0 {
            for (c, v) in center.iter_mut().zip(p.iter()) {
                *c += w * v;
            }
        }
    }
    let mut sigma = DMatrix::<f64>::zeros(q, q);
    for (p, &w) in points.iter().zip(&weights) {
        if w > 0.0 {
            let d = DVector::from_iterator(q, p.iter().zip(&center).map(|(a, b)| a - b));
            sigma += w * &d * d.transpose();
        }
    }
    let mut shape = sigma.try_inverse().ok_or_else(singular)? / q as f64;
    shape = (&shape + shape.transpose()) * 0.5;
    let mut ellipsoid = Ellipsoid { center, shape };
    let worst = points.iter().fold(0f64, |s, p| s.max(ellipsoid.form(p)));
    if worst > 1.0 {
        ellipsoid.shape /= worst;
    }
    Ok(Fit {
        ellipsoid,
        weights,
        gap,
    })
}

fn singular() -> Error {
    Error::NumericalFailure("singular ellipsoid moment matrix".into())
}

fn initial_working_set(points: &[&[f64]]) -> Vec<usize> {
    let q = points[0].len();
    let n = points.len();
    let mut set = Vec::with_capacity(3 * q + 1);
    for k in 0..q {
        let lo = (0..n).min_by(|&a, &b| points[a][k].total_cmp(&points[b][k])).unwrap_or(0);
        let hi = (0..n).max_by(|&a, &b| points[a][k].total_cmp(&points[b][k]).then(b.cmp(&a))).unwrap_or(0);
        set.push(lo);
        set.push(hi);
    }
    let mut mean = vec![0.0; q];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.iter()) {
            *m += v / n as f64;
        }
    }
    let dist: Vec<f64> = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    set.extend(order.into_iter().take(q + 1));
    set.sort_unstable();
    set.dedup();
    set
}

fn lift(p: &[f64]) -> DVector<f64> {
    DVector::from_iterator(p.len() + 1, p.iter().copied().chain([1.0]))
}

fn moment_inverse(points: &[&[f64]], u: &[f64]) -> Option<DMatrix<f64>> {
    let n1 = points[0].len() + 1;
    let mut lam = DMatrix::<f64>::zeros(n1, n1);
    for (p, &w) in points.iter().zip(u) {
        if w != 0.0 {
            let v = lift(p);
            lam += w * &v * v.transpose();
        }
    }
    lam.try_inverse()
}

/// `ωᵢ = q̃ᵢᵀ Λ(u)⁻¹ q̃ᵢ` for every point.
fn leverages(points: &[&[f64]], u: &[f64]) -> Option<Vec<f64>> {
    let inv = moment_inverse(points, u)?;
    Some(
        points
            .iter()
            .map(|p| {
                let v = lift(p);
                v.dot(&(&inv * &v))
            })
            .collect(),
    )
}

/// Optimal dual weights for a small point set. The flag reports whether the
/// Newton polish succeeded (weights then vanish exactly off the support).
fn dual_weights(points: &[&[f64]]) -> Result<(Vec<f64>, bool)> {
    let u = khachiyan(points, 1e-9)?;
    match polish(points, &u) {
        Some(exact) => Ok((exact, true)),
        None => Ok((u, false)),
    }
}

fn khachiyan(points: &[&[f64]], eps: f64) -> Result<Vec<f64>> {
    let n = points.len();
    let np = (points[0].len() + 1) as f64;
    let mut u = vec![1.0 / n as f64; n];
    let cap = 200_000;
    for _ in 0..cap {
        let omega = leverages(points, &u).ok_or_else(singular)?;
        let (j, wj) = omega
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &w)| if w > b.1 { (i, w) } else { b });
        let (k, wk) = omega
            .iter()
            .enumerate()
            .filter(|&(i, _)| u[i] > 0.0)
            .fold((0, f64::INFINITY), |b, (i, &w)| if w < b.1 { (i, w) } else { b });
        let eps_plus = wj / np - 1.0;
        let eps_minus = 1.0 - wk / np;
        if eps_plus <= eps && eps_minus <= eps {
            return Ok(u);
        }
        if eps_plus > eps_minus {
            let beta = (wj - np) / (np * (wj - 1.0));
            for v in u.iter_mut() {
                *v *= 1.0 - beta;
            }
            u[j] += beta;
        } else {
            let cap_k = u[k] / (1.0 - u[k]);
            let beta = if wk > 1.0 {
                ((np - wk) / (np * (wk - 1.0))).min(cap_k)
            } else {
                cap_k
            };
            let drop = beta >= cap_k;
            for v in u.iter_mut() {
                *v *= 1.0 + beta;
            }
            u[k] -= beta;
            if drop {
                u[k] = 0.0;
            }
        }
    }
    Err(Error::NumericalFailure(format!("ellipsoid iteration exceeded {cap} steps")))
}

/// Newton's method on `ωᵢ(u) = q + 1` over the points that are (nearly)
/// on the boundary. Returns `None` if the support cannot be certified.
fn polish(points: &[&[f64]], u0: &[f64]) -> Option<Vec<f64>> {
    let np = (points[0].len() + 1) as f64;
    let omega = leverages(points, u0)?;
    let mut support: Vec<usize> = (0..points.len())
        .filter(|&i| u0[i] > 0.0 && omega[i] >= np * (1.0 - 1e-5))
        .collect();
    for _ in 0..points.len().max(1) {
        match newton(points, &support, u0) {
            NewtonEnd::Converged(us) => {
                let mut u = vec![0.0; points.len()];
                for (&i, &w) in support.iter().zip(&us) {
                    u[i] = w;
                }
                let omega = leverages(points, &u)?;
                let outside = (0..points.len())
                    .filter(|&i| u[i] == 0.0 && omega[i] > np * (1.0 + COVER_SLACK))
                    .max_by(|&a, &b| omega[a].total_cmp(&omega[b]));
                match outside {
                    None => return Some(u),
                    Some(i) => {
                        support.push(i);
                        support.sort_unstable();
                    }
                }
            }
            NewtonEnd::Negative(pos) => {
                support.remove(pos);
            }
            NewtonEnd::Failed => return None,
        }
        if support.len() < points[0].len() + 1 {
            return None;
        }
    }
    None
}

enum NewtonEnd {
    Converged(Vec<f64>),
    /// Position (within the support) of the most negative weight.
    Negative(usize),
    Failed,
}

fn newton(points: &[&[f64]], support: &[usize], u0: &[f64]) -> NewtonEnd {
    let s = support.len();
    let np = (points[0].len() + 1) as f64;
    let sub: Vec<&[f64]> = support.iter().map(|&i| points[i]).collect();
    let total: f64 = support.iter().map(|&i| u0[i].max(0.0)).sum();
    let mut u: Vec<f64> = if total > 0.0 {
        support.iter().map(|&i| u0[i].max(0.0) / total).collect()
    } else {
        vec![1.0 / s as f64; s]
    };
    if u.iter().any(|&w| w <= 0.0) {
        u = vec![1.0 / s as f64; s];
    }
    let lifted: Vec<DVector<f64>> = sub.iter().map(|p| lift(p)).collect();
    for _ in 0..60 {
        let Some(inv) = moment_inverse(&sub, &u) else {
            return NewtonEnd::Failed;
        };
        let y: Vec<DVector<f64>> = lifted.iter().map(|v| &inv * v).collect();
        let k = DMatrix::from_fn(s, s, |i, j| lifted[i].dot(&y[j]));
        let g = DVector::from_fn(s, |i, _| k[(i, i)] - np);
        let resid = g.amax();
        if resid <= 1e-13 * np {
            return match (0..s).filter(|&i| u[i] <= 0.0).min_by(|&a, &b| u[a].total_cmp(&u[b])) {
                Some(pos) => NewtonEnd::Negative(pos),
                None => NewtonEnd::Converged(u),
            };
        }
        let jac = DMatrix::from_fn(s, s, |i, j| -k[(i, j)] * k[(i, j)]);
        let Some(step) = jac.lu().solve(&(-&g)) else {
            return NewtonEnd::Failed;
        };
        let mut t = 1.0;
        let mut next;
        loop {
            next = u.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect::<Vec<_>>();
            if next.iter().all(|&w| w > 0.0) || t < 1e-3 {
                break;
            }
            t *= 0.5;
        }
        if next.iter().any(|&w| w <= 0.0) {
            let pos = (0..s).min_by(|&a, &b| next[a].total_cmp(&next[b])).unwrap_or(0);
            return NewtonEnd::Negative(pos);
        }
        u = next;
    }
    NewtonEnd::Failed
}
