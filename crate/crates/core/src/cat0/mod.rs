//! CAT(0) target spaces.
//!
//! A [`TargetSpace`] describes one nonpositively curved geodesic space and
//! carries its metric, geodesic interpolation and weighted barycenter. Points
//! are plain values ([`TargetPoint`]) tagged by the kind of space they belong
//! to; every operation checks that the kinds agree and reports a
//! [`Error::KindMismatch`] otherwise.
//!
//! Supported spaces:
//!
//! * `Euclidean { dim }`: ℝ^dim with the flat metric.
//! * `Spider { num_rays }`: `num_rays` closed half-lines glued at a common
//!   origin, with the induced tree (path) metric.
//! * `Hyperbolic2`: the hyperbolic plane in the hyperboloid model.
//! * `Product { factors }`: ℓ²-product of CAT(0) factors.

pub mod hyperbolic;
mod residual;

use std::borrow::Borrow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use residual::{
    interpolation_inequality_residual, npc_quadruple_residual, quadrilateral_residual,
};

/// Convergence threshold on the Karcher step for hyperbolic barycenters.
pub const KARCHER_TOLERANCE: f64 = 1e-12;
const KARCHER_MAX_ITER: usize = 10_000;
/// Sheet membership tolerance for hyperboloid points (relative).
pub const SHEET_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetSpace {
    Euclidean { dim: usize },
    Spider { num_rays: usize },
    Hyperbolic2,
    Product { factors: Vec<TargetSpace> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetPoint {
    Euclidean { coords: Vec<f64> },
    Spider { ray: usize, radius: f64 },
    Hyperboloid { x: [f64; 3] },
    Product { components: Vec<TargetPoint> },
}

impl TargetPoint {
    pub fn euclidean(coords: impl Into<Vec<f64>>) -> Self {
        TargetPoint::Euclidean {
            coords: coords.into(),
        }
    }

    /// Spider point; a zero radius is canonicalized onto ray 0.
    pub fn spider(ray: usize, radius: f64) -> Self {
        if radius == 0.0 {
            TargetPoint::Spider { ray: 0, radius: 0.0 }
        } else {
            TargetPoint::Spider { ray, radius }
        }
    }

    pub fn spider_origin() -> Self {
        TargetPoint::Spider { ray: 0, radius: 0.0 }
    }

    /// Hyperboloid point from its two spatial coordinates.
    pub fn hyperboloid(x0: f64, x1: f64) -> Self {
        TargetPoint::Hyperboloid {
            x: hyperbolic::project(&[x0, x1, 0.0]),
        }
    }

    pub fn product(components: Vec<TargetPoint>) -> Self {
        TargetPoint::Product { components }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TargetPoint::Euclidean { .. } => "euclidean",
            TargetPoint::Spider { .. } => "spider",
            TargetPoint::Hyperboloid { .. } => "hyperboloid",
            TargetPoint::Product { .. } => "product",
        }
    }
}

fn mismatch(space: &TargetSpace, point: &TargetPoint) -> Error {
    Error::KindMismatch {
        expected: space.describe(),
        found: point.kind_name().to_string(),
    }
}

impl TargetSpace {
    pub fn describe(&self) -> String {
        match self {
            TargetSpace::Euclidean { dim } => format!("euclidean({dim})"),
            TargetSpace::Spider { num_rays } => format!("spider({num_rays})"),
            TargetSpace::Hyperbolic2 => "hyperbolic2".to_string(),
            TargetSpace::Product { factors } => {
                let inner: Vec<String> = factors.iter().map(|f| f.describe()).collect();
                format!("product({})", inner.join(" x "))
            }
        }
    }

    /// Checks the descriptor itself.
    pub fn validate_descriptor(&self) -> Result<()> {
        match self {
            TargetSpace::Euclidean { dim } if *dim == 0 => {
                Err(Error::invalid("dim", "euclidean dimension must be positive"))
            }
            TargetSpace::Spider { num_rays } if *num_rays < 3 => Err(Error::invalid(
                "num_rays",
                format!("a spider needs at least 3 rays, got {num_rays}"),
            )),
            TargetSpace::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::invalid("factors", "product needs at least one factor"));
                }
                factors.iter().try_for_each(|f| f.validate_descriptor())
            }
            _ => Ok(()),
        }
    }

    /// A distinguished base point (origin of the model).
    pub fn base_point(&self) -> TargetPoint {
        match self {
            TargetSpace::Euclidean { dim } => TargetPoint::euclidean(vec![0.0; *dim]),
            TargetSpace::Spider { .. } => TargetPoint::spider_origin(),
            TargetSpace::Hyperbolic2 => TargetPoint::Hyperboloid {
                x: hyperbolic::ORIGIN,
            },
            TargetSpace::Product { factors } => {
                TargetPoint::product(factors.iter().map(|f| f.base_point()).collect())
            }
        }
    }

    /// Full membership test, including the numerical invariants of each kind.
    pub fn contains(&self, p: &TargetPoint) -> bool {
        self.validate(p).is_ok()
    }

    pub fn validate(&self, p: &TargetPoint) -> Result<()> {
        match (self, p) {
            (TargetSpace::Euclidean { dim }, TargetPoint::Euclidean { coords }) => {
                if coords.len() != *dim {
                    return Err(Error::NotInSpace(format!(
                        "euclidean point of dimension {} in {}",
                        coords.len(),
                        self.describe()
                    )));
                }
                if coords.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NotInSpace("non-finite coordinate".into()));
                }
                Ok(())
            }
            (TargetSpace::Spider { num_rays }, TargetPoint::Spider { ray, radius }) => {
                if *ray >= *num_rays {
                    return Err(Error::NotInSpace(format!(
                        "ray {ray} out of range for {}",
                        self.describe()
                    )));
                }
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::NotInSpace(format!("spider radius {radius}")));
                }
                if *radius == 0.0 && *ray != 0 {
                    return Err(Error::NotInSpace(
                        "origin must be represented on ray 0".into(),
                    ));
                }
                Ok(())
            }
            (TargetSpace::Hyperbolic2, TargetPoint::Hyperboloid { x }) => {
                if x.iter().any(|c| !c.is_finite()) || x[2] <= 0.0 {
                    return Err(Error::NotInSpace("hyperboloid point off the upper sheet".into()));
                }
                if hyperbolic::sheet_defect(x) > SHEET_TOLERANCE {
                    return Err(Error::NotInSpace(format!(
                        "hyperboloid sheet defect {:e}",
                        hyperbolic::sheet_defect(x)
                    )));
                }
                Ok(())
            }
            (TargetSpace::Product { factors }, TargetPoint::Product { components }) => {
                if factors.len() != components.len() {
                    return Err(Error::NotInSpace(format!(
                        "product point with {} components in {}",
                        components.len(),
                        self.describe()
                    )));
                }
                factors
                    .iter()
                    .zip(components)
                    .try_for_each(|(f, c)| f.validate(c))
            }
            _ => Err(mismatch(self, p)),
        }
    }

    pub fn dist(&self, p: &TargetPoint, q: &TargetPoint) -> Result<f64> {
        Ok(self.dist2(p, q)?.sqrt())
    }

    /// Squared distance. Cheaper than `dist` for products and Euclidean
    /// spaces, where it avoids a square root.
    pub fn dist2(&self, p: &TargetPoint, q: &TargetPoint) -> Result<f64> {
        match (self, p, q) {
            (
                TargetSpace::Euclidean { .. },
                TargetPoint::Euclidean { coords: a },
                TargetPoint::Euclidean { coords: b },
            ) => {
                if a.len() != b.len() {
                    return Err(Error::LengthMismatch {
                        what: "euclidean coordinates",
                        left: a.len(),
                        right: b.len(),
                    });
                }
                Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
            }
            (
                TargetSpace::Spider { .. },
                TargetPoint::Spider { ray: ra, radius: a },
                TargetPoint::Spider { ray: rb, radius: b },
            ) => {
                let d = if ra == rb || *a == 0.0 || *b == 0.0 {
                    (a - b).abs()
                } else {
                    a + b
                };
                Ok(d * d)
            }
            (
                TargetSpace::Hyperbolic2,
                TargetPoint::Hyperboloid { x: a },
                TargetPoint::Hyperboloid { x: b },
            ) => {
                let d = hyperbolic::dist(a, b);
                Ok(d * d)
            }
            (
                TargetSpace::Product { factors },
                TargetPoint::Product { components: a },
                TargetPoint::Product { components: b },
            ) => {
                if a.len() != factors.len() || b.len() != factors.len() {
                    return Err(Error::LengthMismatch {
                        what: "product components",
                        left: a.len(),
                        right: b.len(),
                    });
                }
                let mut total = 0.0;
                for ((f, x), y) in factors.iter().zip(a).zip(b) {
                    total += f.dist2(x, y)?;
                }
                Ok(total)
            }
            _ if self.same_kind(p) => Err(mismatch(self, q)),
            _ => Err(mismatch(self, p)),
        }
    }

    fn same_kind(&self, p: &TargetPoint) -> bool {
        matches!(
            (self, p),
            (TargetSpace::Euclidean { .. }, TargetPoint::Euclidean { .. })
                | (TargetSpace::Spider { .. }, TargetPoint::Spider { .. })
                | (TargetSpace::Hyperbolic2, TargetPoint::Hyperboloid { .. })
                | (TargetSpace::Product { .. }, TargetPoint::Product { .. })
        )
    }

    /// The point at fraction `lambda` of the geodesic from `p` to `q`, so that
    /// `d(result, p) = λ d(p, q)` and `d(result, q) = (1 − λ) d(p, q)`.
    pub fn interp(&self, p: &TargetPoint, q: &TargetPoint, lambda: f64) -> Result<TargetPoint> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid("lambda", format!("{lambda} is outside [0, 1]")));
        }
        // Kind check first so that endpoints are never returned for
        // mismatched inputs.
        self.dist2(p, q)?;
        if lambda == 0.0 {
            return Ok(p.clone());
        }
        if lambda == 1.0 {
            return Ok(q.clone());
        }
        self.interp_unchecked(p, q, lambda)
    }

    fn interp_unchecked(&self, p: &TargetPoint, q: &TargetPoint, lambda: f64) -> Result<TargetPoint> {
        Ok(match (self, p, q) {
            (
                TargetSpace::Euclidean { .. },
                TargetPoint::Euclidean { coords: a },
                TargetPoint::Euclidean { coords: b },
            ) => TargetPoint::euclidean(
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x + lambda * (y - x))
                    .collect::<Vec<_>>(),
            ),
            (
                TargetSpace::Spider { .. },
                TargetPoint::Spider { ray: ra, radius: a },
                TargetPoint::Spider { ray: rb, radius: b },
            ) => {
                if ra == rb || *a == 0.0 || *b == 0.0 {
                    let ray = if *a == 0.0 { *rb } else { *ra };
                    TargetPoint::spider(ray, a + lambda * (b - a))
                } else {
                    // Path through the origin: arclength s from p.
                    let s = lambda * (a + b);
                    if s <= *a {
                        TargetPoint::spider(*ra, a - s)
                    } else {
                        TargetPoint::spider(*rb, s - a)
                    }
                }
            }
            (
                TargetSpace::Hyperbolic2,
                TargetPoint::Hyperboloid { x: a },
                TargetPoint::Hyperboloid { x: b },
            ) => TargetPoint::Hyperboloid {
                x: hyperbolic::geodesic(a, b, lambda),
            },
            (
                TargetSpace::Product { factors },
                TargetPoint::Product { components: a },
                TargetPoint::Product { components: b },
            ) => TargetPoint::product(
                factors
                    .iter()
                    .zip(a)
                    .zip(b)
                    .map(|((f, x), y)| f.interp_unchecked(x, y, lambda))
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => return Err(mismatch(self, p)),
        })
    }

    /// Weighted Fréchet mean: the minimizer of `Σ wᵢ d²(x, pᵢ)`.
    ///
    /// Euclidean and product spaces use closed forms; spiders use the
    /// fold-to-line rule; the hyperbolic plane uses a preconditioned Karcher
    /// iteration stopped once the step falls below [`KARCHER_TOLERANCE`].
    pub fn barycenter<P: Borrow<TargetPoint>>(
        &self,
        points: &[P],
        weights: &[f64],
    ) -> Result<TargetPoint> {
        if points.is_empty() {
            return Err(Error::Empty("barycenter points"));
        }
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                what: "barycenter points and weights",
                left: points.len(),
                right: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("weights", "weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroWeights);
        }
        match self {
            TargetSpace::Euclidean { dim } => {
                let mut mean = vec![0.0; *dim];
                for (p, &w) in points.iter().zip(weights) {
                    match p.borrow() {
                        TargetPoint::Euclidean { coords } if coords.len() == *dim => {
                            for (m, c) in mean.iter_mut().zip(coords) {
                                *m += w * c;
                            }
                        }
                        other => return Err(mismatch(self, other)),
                    }
                }
                for m in &mut mean {
                    *m /= total;
                }
                Ok(TargetPoint::euclidean(mean))
            }
            TargetSpace::Spider { num_rays } => {
                spider_barycenter(self, *num_rays, points, weights, total)
            }
            TargetSpace::Hyperbolic2 => {
                let mut coords = Vec::with_capacity(points.len());
                for p in points {
                    match p.borrow() {
                        TargetPoint::Hyperboloid { x } => coords.push(x),
                        other => return Err(mismatch(self, other)),
                    }
                }
                hyperbolic::karcher_mean(&coords, weights, KARCHER_TOLERANCE, KARCHER_MAX_ITER)
                    .map(|x| TargetPoint::Hyperboloid { x })
                    .ok_or(Error::NotConverged {
                        sweeps: KARCHER_MAX_ITER,
                        residual: f64::NAN,
                        tolerance: KARCHER_TOLERANCE,
                    })
            }
            TargetSpace::Product { factors } => {
                let mut out = Vec::with_capacity(factors.len());
                for (k, factor) in factors.iter().enumerate() {
                    let mut slice = Vec::with_capacity(points.len());
                    for p in points {
                        match p.borrow() {
                            TargetPoint::Product { components } if components.len() == factors.len() => {
                                slice.push(&components[k])
                            }
                            other => return Err(mismatch(self, other)),
                        }
                    }
                    out.push(factor.barycenter(&slice, weights)?);
                }
                Ok(TargetPoint::product(out))
            }
        }
    }

    /// Weighted objective `Σ wᵢ d²(x, pᵢ)`.
    pub fn frechet_objective<P: Borrow<TargetPoint>>(
        &self,
        x: &TargetPoint,
        points: &[P],
        weights: &[f64],
    ) -> Result<f64> {
        let mut total = 0.0;
        for (p, &w) in points.iter().zip(weights) {
            total += w * self.dist2(x, p.borrow())?;
        }
        Ok(total)
    }
}

/// Fold candidate ray `j` onto the positive half-line and every other ray
/// onto the negative one; the barycenter of the folded problem is the
/// weighted mean `m_j`. At most one `m_j` is positive, and if none is the
/// origin is optimal.
fn spider_barycenter<P: Borrow<TargetPoint>>(
    space: &TargetSpace,
    num_rays: usize,
    points: &[P],
    weights: &[f64],
    total: f64,
) -> Result<TargetPoint> {
    // Per-ray weighted radius sums; the fold mean on ray j is (2 A_j − S) / W.
    let mut per_ray = [0.0f64; 16];
    let mut spill: Vec<f64>;
    let sums: &mut [f64] = if num_rays <= per_ray.len() {
        &mut per_ray[..num_rays]
    } else {
        spill = vec![0.0; num_rays];
        &mut spill
    };
    let mut all = 0.0;
    for (p, &w) in points.iter().zip(weights) {
        match p.borrow() {
            TargetPoint::Spider { ray, radius } if *ray < num_rays => {
                sums[*ray] += w * radius;
                all += w * radius;
            }
            other => return Err(mismatch(space, other)),
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for (j, a) in sums.iter().enumerate() {
        let m = (2.0 * a - all) / total;
        if m > 0.0 && best.map_or(true, |(_, b)| m > b) {
            best = Some((j, m));
        }
    }
    Ok(match best {
        Some((j, m)) => TargetPoint::spider(j, m),
        None => TargetPoint::spider_origin(),
    })
}
