//! Hyperboloid model of the hyperbolic plane.
//!
//! Points live on the upper sheet `x0² + x1² − x2² = −1`, `x2 > 0`, with the
//! Minkowski form `⟨x, y⟩ = x0 y0 + x1 y1 − x2 y2`. Every routine that
//! produces a point re-projects it onto the sheet by recomputing the time
//! coordinate from the two spatial ones.

pub type Vec3 = [f64; 3];

pub const ORIGIN: Vec3 = [0.0, 0.0, 1.0];

#[inline]
pub fn minkowski(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

#[inline]
fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn axpy(alpha: f64, x: &Vec3, y: &Vec3) -> Vec3 {
    [
        alpha * x[0] + y[0],
        alpha * x[1] + y[1],
        alpha * x[2] + y[2],
    ]
}

#[inline]
fn scale(alpha: f64, x: &Vec3) -> Vec3 {
    [alpha * x[0], alpha * x[1], alpha * x[2]]
}

/// Lifts the spatial coordinates onto the upper sheet.
#[inline]
pub fn project(x: &Vec3) -> Vec3 {
    [x[0], x[1], (1.0 + x[0] * x[0] + x[1] * x[1]).sqrt()]
}

/// Relative defect of the sheet equation.
pub fn sheet_defect(x: &Vec3) -> f64 {
    (minkowski(x, x) + 1.0).abs() / (1.0 + x[2] * x[2])
}

/// `sinh(t)/t`, continuous at zero.
#[inline]
fn sinhc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        1.0 + t * t / 6.0
    } else {
        t.sinh() / t
    }
}

/// Geodesic distance, via `d = 2 asinh(|p − q|_M / 2)` which keeps full
/// relative precision for nearby points.
pub fn dist(p: &Vec3, q: &Vec3) -> f64 {
    let d = sub(p, q);
    let m = minkowski(&d, &d).max(0.0);
    2.0 * (0.5 * m.sqrt()).asinh()
}

/// Riemannian logarithm `log_p(q)`, a tangent vector at `p`.
pub fn log(p: &Vec3, q: &Vec3) -> Vec3 {
    let d = dist(p, q);
    if d == 0.0 {
        return [0.0; 3];
    }
    // q − cosh(d) p, written as (q − p) − 2 sinh²(d/2) p to avoid cancellation.
    let s = (0.5 * d).sinh();
    let v = axpy(-2.0 * s * s, p, &sub(q, p));
    scale(1.0 / sinhc(d), &v)
}

/// Riemannian exponential `exp_p(v)`, re-projected onto the sheet.
pub fn exp(p: &Vec3, v: &Vec3) -> Vec3 {
    let norm = minkowski(v, v).max(0.0).sqrt();
    if norm == 0.0 {
        return *p;
    }
    let x = axpy(sinhc(norm), v, &scale(norm.cosh(), p));
    project(&x)
}

/// Point at fraction `lambda` along the geodesic from `p` to `q`.
pub fn geodesic(p: &Vec3, q: &Vec3, lambda: f64) -> Vec3 {
    let v = log(p, q);
    exp(p, &scale(lambda, &v))
}

/// Tangent-plane chart at the origin: `(a, b) ↦ exp_o(a e0 + b e1)`.
pub fn from_tangent_at_origin(a: f64, b: f64) -> Vec3 {
    exp(&ORIGIN, &[a, b, 0.0])
}

/// Weighted Fréchet mean by preconditioned Riemannian gradient descent.
///
/// The Hessian of `½ Σ wᵢ d²(·, pᵢ) / W` has eigenvalues in `[1, c̄]` with
/// `c̄ = Σ wᵢ dᵢ coth dᵢ / W`, so the step `2 / (1 + c̄)` contracts at every
/// iterate. Returns `None` if `max_iter` is exhausted.
pub fn karcher_mean(points: &[&Vec3], weights: &[f64], tol: f64, max_iter: usize) -> Option<Vec3> {
    let total: f64 = weights.iter().sum();
    // Lorentzian centroid as the starting point.
    let mut m = [0.0; 3];
    for (p, &w) in points.iter().zip(weights) {
        m = axpy(w, p, &m);
    }
    let norm = (-minkowski(&m, &m)).max(f64::MIN_POSITIVE).sqrt();
    let mut x = project(&scale(1.0 / norm, &m));

    for _ in 0..max_iter {
        let mut grad = [0.0; 3];
        let mut curvature = 0.0;
        for (p, &w) in points.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let d = dist(&x, p);
            grad = axpy(w, &log(&x, p), &grad);
            curvature += w * if d < 1e-8 { 1.0 } else { d / d.tanh() };
        }
        let step = 2.0 / (1.0 + curvature / total);
        let v = scale(step / total, &grad);
        let len = minkowski(&v, &v).max(0.0).sqrt();
        x = exp(&x, &v);
        if len < tol {
            return Some(x);
        }
    }
    None
}
