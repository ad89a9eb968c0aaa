//! Pointwise comparison inequalities of nonpositive curvature.
//!
//! Each function returns `slack = upper bound − lower bound` of one
//! inequality, so a nonnegative value means the inequality holds. In any
//! CAT(0) space every residual is `≥ 0` up to rounding.

use super::{TargetPoint, TargetSpace};
use crate::error::Result;

/// Convexity of `d²(p, ·)` along the geodesic from `q` to `r`:
///
/// `(1−λ) d²(p,q) + λ d²(p,r) − λ(1−λ) d²(q,r) − d²(p, q_λ)`
/// with `q_λ = interp(q, r, λ)`.
pub fn npc_quadruple_residual(
    space: &TargetSpace,
    p: &TargetPoint,
    q: &TargetPoint,
    r: &TargetPoint,
    lambda: f64,
) -> Result<f64> {
    let q_lambda = space.interp(q, r, lambda)?;
    let bound = (1.0 - lambda) * space.dist2(p, q)? + lambda * space.dist2(p, r)?
        - lambda * (1.0 - lambda) * space.dist2(q, r)?;
    Ok(bound - space.dist2(p, &q_lambda)?)
}

/// Reshetnyak quadrilateral comparison:
///
/// `d²(q,r) + d²(p,s) − (d(r,s) − d(p,q))² − [d²(p,r) + d²(q,s) − d²(p,q) − d²(r,s)]`.
pub fn quadrilateral_residual(
    space: &TargetSpace,
    p: &TargetPoint,
    q: &TargetPoint,
    r: &TargetPoint,
    s: &TargetPoint,
) -> Result<f64> {
    let pq = space.dist(p, q)?;
    let rs = space.dist(r, s)?;
    let upper = space.dist2(q, r)? + space.dist2(p, s)? - (rs - pq) * (rs - pq);
    let lower = space.dist2(p, r)? + space.dist2(q, s)? - pq * pq - rs * rs;
    Ok(upper - lower)
}

/// With `p_λ = interp(p, s, λ)`:
///
/// `d²(p,q) + d²(p,p_λ) − d²(q,p_λ) − λ (d²(p,q) + d²(p,s) − d²(q,s))`.
pub fn interpolation_inequality_residual(
    space: &TargetSpace,
    p: &TargetPoint,
    q: &TargetPoint,
    s: &TargetPoint,
    lambda: f64,
) -> Result<f64> {
    let p_lambda = space.interp(p, s, lambda)?;
    let pq = space.dist2(p, q)?;
    let upper = pq + space.dist2(p, &p_lambda)? - space.dist2(q, &p_lambda)?;
    Ok(upper - lambda * (pq + space.dist2(p, s)? - space.dist2(q, s)?))
}
