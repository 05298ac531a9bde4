//! Violation-probability calculus for scenario programs.

use crate::error::{Error, Result};

/// Binomial distribution function `Σ_{j=0}^{q} C(N, j) ε^j (1 − ε)^{N−j}`.
///
/// Terms are formed in log space, shifted by the largest, and summed with
/// compensation, so tails far below `f64::MIN_POSITIVE` stay accurate.
pub fn phi(epsilon: f64, q: u64, n: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    if q > n {
        return Err(Error::Domain(format!("q = {q} exceeds N = {n}")));
    }
    if epsilon == 0.0 || q == n {
        return Ok(1.0);
    }
    if epsilon == 1.0 {
        return Ok(0.0);
    }
    let (le, lf) = (epsilon.ln(), (-epsilon).ln_1p());
    let nf = n as f64;
    let mut logs = Vec::with_capacity(q as usize + 1);
    let mut log_binom = 0.0;
    let mut carry = 0.0;
    for j in 0..=q {
        if j > 0 {
            let jf = j as f64;
            // compensated running sum of log((N − j + 1) / j)
            let y = ((nf - jf + 1.0) / jf).ln() - carry;
            let t = log_binom + y;
            carry = (t - log_binom) - y;
            log_binom = t;
        }
        logs.push(log_binom + j as f64 * le + (nf - j as f64) * lf);
    }
    let top = logs.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &l in &logs {
        let y = (l - top).exp() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok((top.exp() * sum).clamp(0.0, 1.0))
}

fn check(beta: f64, zeta: u64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    if zeta == 0 {
        return Err(Error::Domain("zeta must be at least 1".into()));
    }
    Ok(())
}

/// `ε = 2(ln β⁻¹ + ζ − 1)/N`, clamped to `(0, 1]`.
pub fn epsilon_bound(beta: f64, zeta: u64, n: u64) -> Result<f64> {
    check(beta, zeta)?;
    if n == 0 {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    Ok((2.0 * (-beta.ln() + zeta as f64 - 1.0) / n as f64).min(1.0))
}

/// Smallest `N` with `epsilon_bound(β, ζ, N) ≤ ε`.
pub fn min_samples(beta: f64, zeta: u64, epsilon: f64) -> Result<u64> {
    check(beta, zeta)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let mut n = ((2.0 * (-beta.ln() + zeta as f64 - 1.0)) / epsilon).ceil().max(1.0) as u64;
    while n > 1 && epsilon_bound(beta, zeta, n - 1)? <= epsilon {
        n -= 1;
    }
    while epsilon_bound(beta, zeta, n)? > epsilon {
        n += 1;
    }
    Ok(n)
}

/// Smallest `N ≥ ζ` with `Φ(ε; ζ − 1, N) ≤ β`, never larger than
/// [`min_samples`].
pub fn min_samples_exact(beta: f64, zeta: u64, epsilon: f64) -> Result<u64> {
    let hi = min_samples(beta, zeta, epsilon)?.max(zeta);
    if epsilon >= 1.0 {
        return Ok(zeta);
    }
    let ok = |n: u64| phi(epsilon, zeta - 1, n).map(|p| p <= beta);
    if !ok(hi)? {
        return Ok(hi);
    }
    let (mut lo, mut hi) = (zeta - 1, hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if mid >= zeta && ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
