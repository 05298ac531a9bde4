//! Vertices of the convex hull of a finite point set.
//!
//! A point `p` is a vertex of `conv(P)` iff some `w` strictly separates it
//! from the other points. The test maximizes the margin
//! `t = min_q (p − q)ᵀw` over `w ∈ [−1, 1]^ℓ` by linear programming and calls
//! `p` a vertex when `t > τ_hull`. Planar and one-dimensional inputs use exact
//! sweeps instead.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::lp::{LinearProgram, LpOptions};
use crate::pool::ConstraintPool;
use crate::tol;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSet {
    /// Positions of the vertices in the input, ascending.
    pub indices: Vec<usize>,
    pub dim: usize,
}

/// Exact hull vertices of `points`; of several coincident points only the
/// first is kept.
pub fn vertex_set(points: &[Vec<f64>]) -> VertexSet {
    let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    VertexSet {
        indices: vertex_indices(&refs),
        dim: refs.first().map_or(0, |p| p.len()),
    }
}

/// Whether `point` lies outside the convex hull of `others` by more than
/// `τ_hull` (in the separating margin).
pub fn is_vertex(point: &[f64], others: &[&[f64]]) -> bool {
    separation(point, others.iter().copied()).0 > tol::HULL
}

/// Vertices of the hull of the realizations in `indices`, as pool positions.
pub fn pool_vertices(pool: &ConstraintPool, indices: &[usize]) -> Vec<usize> {
    let points: Vec<&[f64]> = indices.iter().map(|&j| pool.hull_point(j)).collect();
    vertex_indices(&points).into_iter().map(|k| indices[k]).collect()
}

pub(crate) fn vertex_indices(points: &[&[f64]]) -> Vec<usize> {
    let unique = distinct(points);
    if unique.len() <= 1 {
        return unique;
    }
    let l = points[0].len();
    let first = points[unique[0]];
    let varying: Vec<usize> = (0..l).filter(|&k| unique.iter().any(|&i| points[i][k] != first[k])).collect();
    if varying.len() < l {
        // drop coordinates shared by every point
        let projected: Vec<Vec<f64>> = points.iter().map(|p| varying.iter().map(|&k| p[k]).collect()).collect();
        let refs: Vec<&[f64]> = projected.iter().map(Vec::as_slice).collect();
        return vertex_indices(&refs);
    }
    let mut out = match l {
        0 => vec![unique[0]],
        1 => {
            let lo = unique.iter().copied().min_by(|&a, &b| points[a][0].total_cmp(&points[b][0])).unwrap_or(0);
            let hi = unique.iter().copied().max_by(|&a, &b| points[a][0].total_cmp(&points[b][0])).unwrap_or(0);
            vec![lo, hi]
        }
        2 => monotone_chain(points, &unique),
        _ => by_separation(points, &unique),
    };
    out.sort_unstable();
    out.dedup();
    out
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Input positions of the distinct points, the first occurrence of each,
/// in lexicographic point order.
fn distinct(points: &[&[f64]]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(points[a], points[b]).then(a.cmp(&b)));
    order.dedup_by(|b, a| points[*a] == points[*b]);
    order
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain over lexicographically sorted distinct points;
/// points within `τ_hull` of an edge are dropped.
fn monotone_chain(points: &[&[f64]], sorted: &[usize]) -> Vec<usize> {
    let turn = |o: usize, a: usize, b: usize| {
        let (po, pa, pb) = (points[o], points[a], points[b]);
        let len = ((pb[0] - po[0]).powi(2) + (pb[1] - po[1]).powi(2)).sqrt();
        cross(po, pa, pb) > tol::HULL * len
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * sorted.len());
    for &i in sorted {
        while hull.len() >= 2 && !turn(hull[hull.len() - 2], hull[hull.len() - 1], i) {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in sorted.iter().rev().skip(1) {
        while hull.len() >= lower_len && !turn(hull[hull.len() - 2], hull[hull.len() - 1], i) {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    hull
}

fn by_separation(points: &[&[f64]], unique: &[usize]) -> Vec<usize> {
    let l = points[0].len();
    // lexicographic extremes along each signed axis are always vertices
    let mut known: Vec<usize> = Vec::new();
    for k in 0..l {
        let key = |a: usize, b: usize| points[a][k].total_cmp(&points[b][k]).then_with(|| lex_cmp(points[a], points[b]));
        let lo = unique.iter().copied().min_by(|&a, &b| key(a, b)).unwrap_or(unique[0]);
        let hi = unique.iter().copied().max_by(|&a, &b| key(a, b)).unwrap_or(unique[0]);
        for v in [lo, hi] {
            if !known.contains(&v) {
                known.push(v);
            }
        }
    }
    let mut centroid = vec![0.0; l];
    for &i in unique {
        for (c, v) in centroid.iter_mut().zip(points[i]) {
            *c += v / unique.len() as f64;
        }
    }
    let dist = |i: usize| -> f64 { points[i].iter().zip(&centroid).map(|(a, b)| (a - b) * (a - b)).sum() };
    let mut order: Vec<usize> = unique.iter().copied().filter(|i| !known.contains(i)).collect();
    order.sort_by(|&a, &b| dist(b).total_cmp(&dist(a)).then(a.cmp(&b)));
    let mut decided = vec![false; points.len()];
    for &k in &known {
        decided[k] = true;
    }
    for i in order {
        if decided[i] {
            continue;
        }
        loop {
            let (t, w) = separation(points[i], known.iter().map(|&k| points[k]));
            if t <= tol::HULL {
                decided[i] = true;
                break;
            }
            let Some(w) = w.filter(|_| t.is_finite()) else {
                if t.is_nan() {
                    let others = unique.iter().filter(|&&k| k != i).map(|&k| points[k]);
                    if separation(points[i], others).0 > tol::HULL {
                        known.push(i);
                    }
                } else {
                    known.push(i);
                }
                decided[i] = true;
                break;
            };
            // the extreme point along w is a vertex when it wins by more than τ
            let score = |k: usize| points[k].iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            let mut second = f64::NEG_INFINITY;
            for &k in unique {
                let v = score(k);
                if v > best.0 || (v == best.0 && lex_cmp(points[k], points[best.1]) == Ordering::Greater) {
                    second = best.0;
                    best = (v, k);
                } else if v > second {
                    second = v;
                }
            }
            let q = best.1;
            if best.0 - second > tol::HULL && !decided[q] {
                known.push(q);
                decided[q] = true;
                if q == i {
                    break;
                }
                continue;
            }
            let others = unique.iter().filter(|&&k| k != i).map(|&k| points[k]);
            if separation(points[i], others).0 > tol::HULL {
                known.push(i);
            }
            decided[i] = true;
            break;
        }
    }
    known
}

/// `max_{‖w‖∞ ≤ 1} min_q (p − q)ᵀw`, capped once it exceeds `τ_hull`, with the
/// direction reached.
fn separation<'a>(p: &[f64], others: impl Iterator<Item = &'a [f64]>) -> (f64, Option<Vec<f64>>) {
    let l = p.len();
    let others: Vec<&[f64]> = others.collect();
    if others.is_empty() {
        return (f64::INFINITY, None);
    }
    let reach = others
        .iter()
        .map(|q| q.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .fold(0f64, f64::max);
    let span = 1.0 + reach;
    let mut objective = vec![0.0; l + 1];
    objective[l] = -1.0;
    let mut lower = vec![-1.0; l + 1];
    let mut upper = vec![1.0; l + 1];
    lower[l] = -span;
    upper[l] = span;
    let Ok(lp) = LinearProgram::new(objective, lower, upper) else {
        return (f64::NAN, None);
    };
    let mut lp = lp.with_capacity(others.len());
    let mut row = vec![0.0; l + 1];
    row[l] = 1.0;
    for q in &others {
        for k in 0..l {
            row[k] = q[k] - p[k];
        }
        lp.push_row(&row, 0.0);
    }
    let opts = LpOptions {
        start_upper: Some(vec![false; l + 1]),
        stop_below: Some(-tol::HULL),
        lexicographic: false,
        max_pivots: None,
    };
    match lp.solve_with(&opts) {
        Ok(outcome) => outcome.optimal().map_or((f64::NAN, None), |s| (-s.objective, Some(s.x[..l].to_vec()))),
        Err(_) => (f64::NAN, None),
    }
}
