#![allow(dead_code)]

use std::f64::consts::PI;

use constraints_consensus::{ConstraintPool, ConvexProgram};
use num_bigint::BigUint;

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0f64, |s, v| s.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-11 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        f(&pick);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if pick[i] < n - k + i {
                pick[i] += 1;
                for j in i + 1..k {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
    }
}

fn lex_less(a: &[f64], b: &[f64], tol: f64) -> bool {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > tol {
            return x < y;
        }
    }
    false
}

/// Brute-force LP: enumerate every vertex of `{Gx ≤ h, l ≤ x ≤ u}` and keep
/// the best, lexicographically smallest on ties. `None` if infeasible.
pub fn lp_vertex_oracle(
    c: &[f64],
    rows: &[Vec<f64>],
    rhs: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Option<(f64, Vec<f64>)> {
    let d = c.len();
    let mut g: Vec<Vec<f64>> = rows.to_vec();
    let mut h: Vec<f64> = rhs.to_vec();
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        g.push(e.clone());
        h.push(upper[k]);
        e[k] = -1.0;
        g.push(e);
        h.push(-lower[k]);
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_subset(g.len(), d, |pick| {
        let a: Vec<Vec<f64>> = pick.iter().map(|&r| g[r].clone()).collect();
        let b: Vec<f64> = pick.iter().map(|&r| h[r]).collect();
        let Some(x) = solve_dense(a, b) else { return };
        let feasible = g
            .iter()
            .zip(&h)
            .all(|(row, &hr)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= hr + 1e-9 * hr.abs().max(1.0));
        if !feasible {
            return;
        }
        let j: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
        let better = match &best {
            None => true,
            Some((bj, bx)) => {
                let tol = 1e-9 * bj.abs().max(1.0);
                j < bj - tol || ((j - bj).abs() <= tol && lex_less(&x, bx, 1e-9))
            }
        };
        if better {
            best = Some((j, x));
        }
    });
    best
}

/// Whether `p` lies in the convex hull of some affinely independent subset
/// of `others` (Carathéodory), solved subset by subset.
pub fn in_hull_caratheodory(p: &[f64], others: &[&[f64]]) -> bool {
    let l = p.len();
    for k in 1..=(l + 1).min(others.len()) {
        let mut found = false;
        for_each_subset(others.len(), k, |pick| {
            if found {
                return;
            }
            // least squares on [q_1 … q_k; 1 … 1] λ = [p; 1]
            let col = |i: usize, r: usize| if r < l { others[pick[i]][r] } else { 1.0 };
            let target = |r: usize| if r < l { p[r] } else { 1.0 };
            let a: Vec<Vec<f64>> = (0..k)
                .map(|i| (0..k).map(|j| (0..=l).map(|r| col(i, r) * col(j, r)).sum()).collect())
                .collect();
            let b: Vec<f64> = (0..k).map(|i| (0..=l).map(|r| col(i, r) * target(r)).sum()).collect();
            let Some(lam) = solve_dense(a, b) else { return };
            if lam.iter().any(|&v| v < -1e-9) {
                return;
            }
            let residual = (0..=l)
                .map(|r| ((0..k).map(|i| lam[i] * col(i, r)).sum::<f64>() - target(r)).abs())
                .fold(0f64, f64::max);
            if residual <= 1e-9 {
                found = true;
            }
        });
        if found {
            return true;
        }
    }
    false
}

/// Hull vertices by exhaustive Carathéodory checks; coincident points keep
/// the first occurrence.
pub fn vertices_caratheodory(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            if (0..i).any(|j| points[j] == points[i]) {
                return false;
            }
            let others: Vec<&[f64]> = (0..points.len())
                .filter(|&j| j != i && points[j] != points[i])
                .map(|j| points[j].as_slice())
                .collect();
            others.is_empty() || !in_hull_caratheodory(&points[i], &others)
        })
        .collect()
}

/// Planar hull vertices by gift wrapping; strict vertices only, coincident
/// points keep the first occurrence.
pub fn jarvis_march(points: &[Vec<f64>]) -> Vec<usize> {
    let mut uniq: Vec<usize> = Vec::new();
    for i in 0..points.len() {
        if !uniq.iter().any(|&j| points[j] == points[i]) {
            uniq.push(i);
        }
    }
    if uniq.len() <= 2 {
        return uniq;
    }
    let cross = |o: usize, a: usize, b: usize| {
        (points[a][0] - points[o][0]) * (points[b][1] - points[o][1])
            - (points[a][1] - points[o][1]) * (points[b][0] - points[o][0])
    };
    let dist2 = |a: usize, b: usize| (points[a][0] - points[b][0]).powi(2) + (points[a][1] - points[b][1]).powi(2);
    let start = *uniq
        .iter()
        .min_by(|&&a, &&b| points[a][0].total_cmp(&points[b][0]).then(points[a][1].total_cmp(&points[b][1])))
        .unwrap();
    let mut hull = vec![start];
    let mut cur = start;
    loop {
        let mut next = if uniq[0] == cur { uniq[1] } else { uniq[0] };
        for &c in &uniq {
            if c == cur {
                continue;
            }
            let z = cross(cur, next, c);
            // clockwise of current edge, or collinear and farther
            if z < 0.0 || (z == 0.0 && dist2(cur, c) > dist2(cur, next)) {
                next = c;
            }
        }
        if next == start {
            break;
        }
        hull.push(next);
        cur = next;
        if hull.len() > uniq.len() {
            break;
        }
    }
    hull.sort_unstable();
    hull
}

/// Smallest enclosing circle `(center, radius²)` by incremental Welzl.
pub fn enclosing_circle(pts: &[[f64; 2]]) -> ([f64; 2], f64) {
    let d2 = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let inside = |c: ([f64; 2], f64), p: [f64; 2]| d2(c.0, p) <= c.1 * (1.0 + 1e-12) + 1e-300;
    let two = |a: [f64; 2], b: [f64; 2]| {
        let c = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        (c, d2(c, a))
    };
    let three = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        let (bx, by) = (b[0] - a[0], b[1] - a[1]);
        let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
        let d = 2.0 * (bx * cy - by * cx);
        if d.abs() < 1e-300 {
            let pairs = [two(a, b), two(a, c), two(b, c)];
            return pairs.into_iter().max_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
        }
        let (b2, c2) = (bx * bx + by * by, cx * cx + cy * cy);
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        let center = [a[0] + ux, a[1] + uy];
        (center, d2(center, a))
    };
    let mut c = (pts[0], 0.0);
    for i in 1..pts.len() {
        if inside(c, pts[i]) {
            continue;
        }
        c = (pts[i], 0.0);
        for j in 0..i {
            if inside(c, pts[j]) {
                continue;
            }
            c = two(pts[i], pts[j]);
            for k in 0..j {
                if !inside(c, pts[k]) {
                    c = three(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    c
}

/// Minimum enclosing-ellipse area of planar points: for each orientation and
/// aspect on a grid the best center is the smallest enclosing circle of the
/// stretched points; the best grid cell is then refined by pattern search.
pub fn grid_search_ellipse_area(points: &[Vec<f64>]) -> f64 {
    let area = |th: f64, a: f64| -> f64 {
        let (s, c) = th.sin_cos();
        let k = (a / 2.0).exp();
        let pts: Vec<[f64; 2]> = points
            .iter()
            .map(|p| [c * p[0] + s * p[1], k * (-s * p[0] + c * p[1])])
            .collect();
        // the stretch has determinant k, so the ellipse area is π r² / k
        PI * enclosing_circle(&pts).1 / k
    };
    let (gt, ga) = (180, 160);
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..gt {
        for j in 0..=ga {
            let th = PI * i as f64 / gt as f64;
            let a = -4.0 + 8.0 * j as f64 / ga as f64;
            let f = area(th, a);
            if f < best.2 {
                best = (th, a, f);
            }
        }
    }
    let mut step = (PI / gt as f64, 8.0 / ga as f64);
    while step.0 > 1e-10 {
        let mut improved = false;
        for (dt, da) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let (th, a) = (best.0 + dt * step.0, best.1 + da * step.1);
            let f = area(th, a);
            if f < best.2 {
                best = (th, a, f);
                improved = true;
            }
        }
        if !improved {
            step = (step.0 * 0.5, step.1 * 0.5);
        }
    }
    best.2
}

/// Plain Khachiyan iteration (no away steps); returns `log det W⁻¹`.
pub fn khachiyan_log_det_inv(points: &[Vec<f64>], iterations: usize) -> f64 {
    let q = points[0].len();
    let n = points.len();
    let mut u = vec![1.0 / n as f64; n];
    let lifted: Vec<Vec<f64>> = points.iter().map(|p| p.iter().copied().chain([1.0]).collect()).collect();
    let dim = q + 1;
    let mut x = vec![vec![0.0; dim]; dim];
    for (w, p) in u.iter().zip(&lifted) {
        for a in 0..dim {
            for b in 0..dim {
                x[a][b] += w * p[a] * p[b];
            }
        }
    }
    let mut inv = invert(&x);
    let mut ip = vec![0.0; dim];
    for _ in 0..iterations {
        let m: Vec<f64> = lifted
            .iter()
            .map(|p| (0..dim).map(|a| (0..dim).map(|b| p[a] * inv[a][b] * p[b]).sum::<f64>()).sum())
            .collect();
        let (j, &mj) = m.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let step = (mj - dim as f64) / (dim as f64 * (mj - 1.0));
        if step < 1e-15 {
            break;
        }
        for v in u.iter_mut() {
            *v *= 1.0 - step;
        }
        u[j] += step;
        // (1−s)X + s ppᵀ, inverted by Sherman–Morrison
        let p = &lifted[j];
        for a in 0..dim {
            ip[a] = (0..dim).map(|b| inv[a][b] * p[b]).sum();
        }
        let r = step / (1.0 - step);
        let denom = 1.0 + r * mj;
        for a in 0..dim {
            for b in 0..dim {
                inv[a][b] = (inv[a][b] - r * ip[a] * ip[b] / denom) / (1.0 - step);
            }
        }
    }
    let mut c = vec![0.0; q];
    for (w, p) in u.iter().zip(points) {
        for k in 0..q {
            c[k] += w * p[k];
        }
    }
    let mut cov = vec![vec![0.0; q]; q];
    for (w, p) in u.iter().zip(points) {
        for a in 0..q {
            for b in 0..q {
                cov[a][b] += w * (p[a] - c[a]) * (p[b] - c[b]);
            }
        }
    }
    // W = cov⁻¹ / q, scaled so every point is inside
    let inv = invert(&cov);
    let worst = points
        .iter()
        .map(|p| {
            (0..q)
                .map(|a| (0..q).map(|b| (p[a] - c[a]) * inv[a][b] * (p[b] - c[b])).sum::<f64>())
                .sum::<f64>()
        })
        .fold(0f64, f64::max);
    // det W⁻¹ = det(cov) · worst^q
    det(&cov).ln() + q as f64 * worst.ln()
}

pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let e: Vec<f64> = (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
            solve_dense(a.to_vec(), e).expect("invertible")
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

pub fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            d = -d;
        }
        d *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for k in col..n {
                m[r][k] -= f * m[col][k];
            }
        }
    }
    d
}

/// Hard-margin value `min ‖θ‖` s.t. `l_j (b_jᵀθ + ρ) ≥ 1`, by enumerating
/// candidate support sets and their minimum-norm equality solutions.
/// `None` if no candidate is feasible (non-separable data).
pub fn hard_margin_oracle(samples: &[(Vec<f64>, f64)]) -> Option<f64> {
    let p = samples[0].0.len();
    let mut best: Option<f64> = None;
    for k in 2..=(p + 1).min(samples.len()) {
        for_each_subset(samples.len(), k, |pick| {
            let labels: Vec<f64> = pick.iter().map(|&j| samples[j].1).collect();
            if labels.iter().all(|&l| l > 0.0) || labels.iter().all(|&l| l < 0.0) {
                return;
            }
            // unknowns: θ (p), ρ, α (k)
            let n = p + 1 + k;
            let mut a = vec![vec![0.0; n]; n];
            let mut b = vec![0.0; n];
            for i in 0..p {
                a[i][i] = 1.0;
                for (s, &j) in pick.iter().enumerate() {
                    a[i][p + 1 + s] = -samples[j].1 * samples[j].0[i];
                }
            }
            for (s, &j) in pick.iter().enumerate() {
                a[p][p + 1 + s] = samples[j].1;
                let r = p + 1 + s;
                for i in 0..p {
                    a[r][i] = samples[j].1 * samples[j].0[i];
                }
                a[r][p] = samples[j].1;
                b[r] = 1.0;
            }
            let Some(sol) = solve_dense(a, b) else { return };
            let theta = &sol[..p];
            let rho = sol[p];
            let feasible = samples.iter().all(|(bj, l)| {
                l * (bj.iter().zip(theta).map(|(u, v)| u * v).sum::<f64>() + rho) >= 1.0 - 1e-9
            });
            if feasible {
                let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
                if best.is_none_or(|b| norm < b) {
                    best = Some(norm);
                }
            }
        });
    }
    best
}

/// Exact `Σ_{j≤q} C(N,j) ε^j (1−ε)^{N−j}` for `ε = num/den`, rounded to f64.
pub fn phi_exact(num: u64, den: u64, q: u64, n: u64) -> f64 {
    let a = BigUint::from(num);
    let b = BigUint::from(den - num);
    let mut binom = BigUint::from(1u32);
    let mut sum = BigUint::from(0u32);
    for j in 0..=q {
        if j > 0 {
            binom = binom * BigUint::from(n - j + 1) / BigUint::from(j);
        }
        sum += &binom * a.pow(j as u32) * b.pow((n - j) as u32);
    }
    ratio_to_f64(&sum, &BigUint::from(den).pow(n as u32))
}

pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.bits() == 0 {
        return 0.0;
    }
    // shift so the quotient carries 64 significant bits
    let shift = 64 + den.bits() as i64 - num.bits() as i64;
    let q = if shift >= 0 { (num << shift as u64) / den } else { (num >> (-shift) as u64) / den };
    let digits = q.to_u64_digits();
    let mut v = 0.0;
    for (i, d) in digits.iter().enumerate() {
        v += *d as f64 * 2f64.powi(64 * i as i32);
    }
    v * 2f64.powi(-shift as i32)
}

/// Centralized marginal-cost removal: solve, drop the largest multiplier
/// (lowest position on ties), repeat.
pub fn centralized_removal(program: &ConvexProgram<'_>, r: usize) -> Vec<usize> {
    let mut remaining = program.indices().to_vec();
    let mut removed = Vec::new();
    for _ in 0..r {
        let sol = program.solve_subset(&remaining).unwrap();
        let mut best: Option<(usize, f64)> = None;
        for (&j, &m) in &sol.multipliers {
            if best.is_none_or(|(_, bm)| m > bm) {
                best = Some((j, m));
            }
        }
        let (c, _) = best.expect("an active constraint");
        remaining.retain(|&j| j != c);
        removed.push(c);
    }
    removed
}

pub fn points_of(pool: &ConstraintPool, indices: &[usize]) -> Vec<Vec<f64>> {
    indices.iter().map(|&j| pool.delta(j).to_vec()).collect()
}
