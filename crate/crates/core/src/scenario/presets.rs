//! Initial data presets.

use serde::{Deserialize, Serialize};

use crate::cat0::{TargetPoint, TargetSpace};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridMap};
use crate::sample::random_smooth_map;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// The given point everywhere (the space's base point if omitted).
    Constant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<TargetPoint>,
    },
    /// Euclidean target: `slope · (x₀ − L/2)` on the core `|x₀ − L/2| ≤ L/4`,
    /// folded back to zero at the seam (a periodic tent). Every component
    /// carries the same profile; the second axis is ignored.
    LinearCore {
        #[serde(default = "one")]
        slope: f64,
    },
    /// Spider target: ray 0 at radius `amplitude` on `L/4 ≤ x₀ < 3L/4`, ray 1
    /// elsewhere.
    TwoRayStep {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Spider target: three arcs of length `L/3`, arc `k` on ray `k` with
    /// radius `amplitude · sin²(π s)`, `s` the position within the arc.
    /// Invariant under the cyclic ray shift combined with translation by
    /// `L/3` when `N` is divisible by 3.
    ThreeRaySymmetric {
        #[serde(default = "one")]
        amplitude: f64,
    },
    RandomSmooth {
        seed: u64,
        #[serde(default = "one")]
        amplitude: f64,
        correlation_length: f64,
    },
}

fn need_spider(space: &TargetSpace, preset: &str) -> Result<()> {
    match space {
        TargetSpace::Spider { .. } => Ok(()),
        other => Err(Error::invalid(
            "initial_data.kind",
            format!("{preset} needs a spider target, got {}", other.describe()),
        )),
    }
}

impl InitialData {
    pub fn name(&self) -> &'static str {
        match self {
            InitialData::Constant { .. } => "constant",
            InitialData::LinearCore { .. } => "linear_core",
            InitialData::TwoRayStep { .. } => "two_ray_step",
            InitialData::ThreeRaySymmetric { .. } => "three_ray_symmetric",
            InitialData::RandomSmooth { .. } => "random_smooth",
        }
    }

    pub fn build(&self, grid: Grid, space: &TargetSpace) -> Result<GridMap> {
        space.validate_descriptor()?;
        let l = grid.length();
        let x = move |i: usize| grid.position(i)[0];
        match self {
            InitialData::Constant { value } => {
                let p = value.clone().unwrap_or_else(|| space.base_point());
                GridMap::constant(grid, space.clone(), p)
            }
            InitialData::LinearCore { slope } => {
                let TargetSpace::Euclidean { dim } = space else {
                    return Err(Error::invalid(
                        "initial_data.kind",
                        format!("linear_core needs a euclidean target, got {}", space.describe()),
                    ));
                };
                let dim = *dim;
                GridMap::from_fn(grid, space.clone(), |i| {
                    let s = x(i) - 0.5 * l;
                    let v = if s.abs() <= 0.25 * l { s } else { s.signum() * (0.5 * l - s.abs()) };
                    TargetPoint::euclidean(vec![slope * v; dim])
                })
            }
            InitialData::TwoRayStep { amplitude } => {
                need_spider(space, "two_ray_step")?;
                GridMap::from_fn(grid, space.clone(), |i| {
                    let ray = if (0.25 * l..0.75 * l).contains(&x(i)) { 0 } else { 1 };
                    TargetPoint::spider(ray, *amplitude)
                })
            }
            InitialData::ThreeRaySymmetric { amplitude } => {
                need_spider(space, "three_ray_symmetric")?;
                let n = grid.nodes_per_axis();
                GridMap::from_fn(grid, space.clone(), |i| {
                    // Exact rational position so that the symmetry is bitwise.
                    let k = grid.coords(i)[0];
                    let arc = (3 * k) / n;
                    let s = (3 * k - arc * n) as f64 / n as f64;
                    TargetPoint::spider(arc % 3, amplitude * (std::f64::consts::PI * s).sin().powi(2))
                })
            }
            InitialData::RandomSmooth { seed, amplitude, correlation_length } => {
                random_smooth_map(grid, space.clone(), *seed, *amplitude, *correlation_length)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_core_is_a_periodic_tent() {
        let grid = Grid::new(1, 16, 8.0).unwrap();
        let u = InitialData::LinearCore { slope: 1.0 }.build(grid, &TargetSpace::Euclidean { dim: 1 }).unwrap();
        let v: Vec<f64> = u
            .values()
            .iter()
            .map(|p| match p {
                TargetPoint::Euclidean { coords } => coords[0],
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(v[8], 0.0);
        assert_eq!(v[10], 1.0);
        assert_eq!(v[12], 2.0);
        assert_eq!(v[14], 1.0);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[4], -2.0);
    }

    #[test]
    fn presets_check_the_target() {
        let grid = Grid::new(1, 12, 1.0).unwrap();
        assert!(InitialData::TwoRayStep { amplitude: 1.0 }.build(grid, &TargetSpace::Euclidean { dim: 1 }).is_err());
        assert!(InitialData::LinearCore { slope: 1.0 }.build(grid, &TargetSpace::Spider { num_rays: 3 }).is_err());
    }

    #[test]
    fn three_ray_data_is_symmetric() {
        let grid = Grid::new(1, 12, 1.0).unwrap();
        let u = InitialData::ThreeRaySymmetric { amplitude: 1.0 }.build(grid, &TargetSpace::Spider { num_rays: 3 }).unwrap();
        for i in 0..12 {
            let (TargetPoint::Spider { ray: a, radius: r }, TargetPoint::Spider { ray: b, radius: s }) = (u.value(i), u.value((i + 4) % 12)) else {
                panic!()
            };
            assert_eq!(r, s);
            if *r > 0.0 {
                assert_eq!((a + 1) % 3, *b);
            }
        }
    }
}
