//! Seeded random points and smooth random maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cat0::{hyperbolic, TargetPoint, TargetSpace};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridMap};

/// A random point at scale `scale`. Spider samples land on the origin with
/// probability 1/10 so that the branch point is exercised.
pub fn random_point<R: Rng + ?Sized>(space: &TargetSpace, rng: &mut R, scale: f64) -> TargetPoint {
    match space {
        TargetSpace::Euclidean { dim } => {
            TargetPoint::euclidean((0..*dim).map(|_| rng.random_range(-scale..=scale)).collect::<Vec<_>>())
        }
        TargetSpace::Spider { num_rays } => {
            if rng.random_bool(0.1) {
                TargetPoint::spider_origin()
            } else {
                TargetPoint::spider(rng.random_range(0..*num_rays), rng.random_range(0.0..=scale))
            }
        }
        TargetSpace::Hyperbolic2 => {
            let [x0, x1, x2] = hyperbolic::from_tangent_at_origin(
                rng.random_range(-scale..=scale),
                rng.random_range(-scale..=scale),
            );
            TargetPoint::Hyperboloid { x: [x0, x1, x2] }
        }
        TargetSpace::Product { factors } => {
            TargetPoint::product(factors.iter().map(|f| random_point(f, rng, scale)).collect())
        }
    }
}

/// Random trigonometric polynomial on the torus with wavelengths no shorter
/// than a correlation length, scaled to `max |f| = 1` over the grid nodes.
struct SmoothField {
    modes: Vec<([f64; 2], f64, f64)>,
    scale: f64,
}

impl SmoothField {
    fn new(grid: &Grid, corr_len: f64, rng: &mut ChaCha8Rng) -> Self {
        let kmax = ((grid.length() / corr_len).floor() as i64).max(1);
        let ky_range = if grid.dim() == 2 { -kmax..=kmax } else { 0..=0 };
        let mut modes = Vec::new();
        for kx in 0..=kmax {
            for ky in ky_range.clone() {
                if (kx == 0 && ky <= 0) || ((kx * kx + ky * ky) as f64).sqrt() > kmax as f64 {
                    continue;
                }
                let amp = rng.random_range(-1.0..=1.0);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                modes.push(([kx as f64, ky as f64], amp, phase));
            }
        }
        let mut field = SmoothField { modes, scale: 1.0 };
        let peak = (0..grid.node_count())
            .map(|i| field.raw(grid, i).abs())
            .fold(0.0, f64::max);
        field.scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
        field
    }

    fn raw(&self, grid: &Grid, index: usize) -> f64 {
        let p = grid.position(index);
        let w = std::f64::consts::TAU / grid.length();
        self.modes
            .iter()
            .map(|(k, a, phi)| a * (w * (k[0] * p[0] + k[1] * p[1]) + phi).cos())
            .sum()
    }

    fn at(&self, grid: &Grid, index: usize) -> f64 {
        self.scale * self.raw(grid, index)
    }
}

fn smooth_values(
    grid: &Grid,
    space: &TargetSpace,
    rng: &mut ChaCha8Rng,
    amplitude: f64,
    corr_len: f64,
) -> Vec<TargetPoint> {
    let nodes = grid.node_count();
    match space {
        TargetSpace::Euclidean { dim } => {
            let fields: Vec<SmoothField> = (0..*dim).map(|_| SmoothField::new(grid, corr_len, rng)).collect();
            (0..nodes)
                .map(|i| TargetPoint::euclidean(fields.iter().map(|f| amplitude * f.at(grid, i)).collect::<Vec<_>>()))
                .collect()
        }
        TargetSpace::Spider { num_rays } => {
            // ℓ∞ → spider: the leading field picks the ray, its lead over the
            // runner-up sets the radius. Lipschitz, and hits the origin on ties.
            let fields: Vec<SmoothField> = (0..*num_rays).map(|_| SmoothField::new(grid, corr_len, rng)).collect();
            (0..nodes)
                .map(|i| {
                    let mut vals: Vec<(f64, usize)> = fields.iter().enumerate().map(|(j, f)| (f.at(grid, i), j)).collect();
                    vals.sort_by(|a, b| b.0.total_cmp(&a.0));
                    TargetPoint::spider(vals[0].1, 0.5 * amplitude * (vals[0].0 - vals[1].0))
                })
                .collect()
        }
        TargetSpace::Hyperbolic2 => {
            let (f, g) = (SmoothField::new(grid, corr_len, rng), SmoothField::new(grid, corr_len, rng));
            (0..nodes)
                .map(|i| {
                    let x = hyperbolic::from_tangent_at_origin(amplitude * f.at(grid, i), amplitude * g.at(grid, i));
                    TargetPoint::Hyperboloid { x }
                })
                .collect()
        }
        TargetSpace::Product { factors } => {
            let parts: Vec<Vec<TargetPoint>> = factors
                .iter()
                .map(|f| smooth_values(grid, f, rng, amplitude, corr_len))
                .collect();
            (0..nodes)
                .map(|i| TargetPoint::product(parts.iter().map(|p| p[i].clone()).collect()))
                .collect()
        }
    }
}

/// Smooth random map: superposition of torus modes with wavelength at least
/// `corr_len`, pushed into the target at scale `amplitude`.
pub fn random_smooth_map(
    grid: Grid,
    space: TargetSpace,
    seed: u64,
    amplitude: f64,
    corr_len: f64,
) -> Result<GridMap> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::invalid("amplitude", "must be finite and nonnegative"));
    }
    if !(corr_len.is_finite() && corr_len > 0.0) {
        return Err(Error::invalid("correlation_length", "must be positive"));
    }
    space.validate_descriptor()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = smooth_values(&grid, &space, &mut rng, amplitude, corr_len);
    GridMap::new(grid, space, values)
}
