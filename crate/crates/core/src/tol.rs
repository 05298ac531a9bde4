//! Numerical tolerances shared by the solvers and the consensus engine.
//!
//! Constraint rows of the linear family are normalized to unit infinity norm at
//! ingestion, so the feasibility and activity thresholds below are absolute.

/// Constraint violation accepted as feasible.
pub const FEAS: f64 = 1e-8;
/// Residual below which a constraint is reported as active.
pub const ACT: f64 = 1e-6;
/// Objective values closer than this (relative to `max(1, |J|)`) are equal.
pub const OBJ: f64 = 1e-9;
/// Relative volume gap required from the enclosing-ellipsoid solver.
pub const MVEE: f64 = 1e-7;
/// Distance to the hull of the other points below which a point is not a vertex.
pub const HULL: f64 = 1e-9;

/// Objective comparison with the `OBJ` tolerance; infinities compare by sign.
pub fn obj_eq(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= OBJ * 1f64.max(a.abs()).max(b.abs())
}

/// `a < b` beyond the objective tolerance.
pub fn obj_lt(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a < b;
    }
    a < b - OBJ * 1f64.max(a.abs()).max(b.abs())
}

/// `a <= b` up to the objective tolerance.
pub fn obj_le(a: f64, b: f64) -> bool {
    !obj_lt(b, a)
}
