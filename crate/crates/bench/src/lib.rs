//! Fixtures shared by the solver benchmarks.

use npcflow::scenario::InitialData;
use npcflow::{Grid, GridMap, TargetPoint, TargetSpace};

pub fn spider3() -> TargetSpace {
    TargetSpace::Spider { num_rays: 3 }
}

/// Two-ray step on a 1-D grid with `nodes` nodes over `[0, 4)`.
pub fn two_ray(nodes: usize) -> GridMap {
    let grid = Grid::new(1, nodes, 4.0).expect("grid");
    InitialData::TwoRayStep { amplitude: 1.0 }.build(grid, &spider3()).expect("preset")
}

/// Smooth random map into `space` on an `n`-dimensional grid.
pub fn random_map(space: TargetSpace, n: usize, nodes: usize, seed: u64) -> GridMap {
    let grid = Grid::new(n, nodes, 4.0).expect("grid");
    InitialData::RandomSmooth { seed, amplitude: 1.0, correlation_length: 1.0 }.build(grid, &space).expect("preset")
}

/// `count` points spread over the rays of `space` with deterministic weights.
pub fn barycenter_input(space: &TargetSpace, count: usize) -> (Vec<TargetPoint>, Vec<f64>) {
    let points = (0..count)
        .map(|k| match space {
            TargetSpace::Spider { num_rays } => TargetPoint::spider(k % num_rays, 0.3 + 0.1 * k as f64),
            TargetSpace::Hyperbolic2 => TargetPoint::hyperboloid(0.2 * k as f64 - 0.5, 0.3 * (k % 3) as f64),
            TargetSpace::Euclidean { dim } => TargetPoint::euclidean(vec![k as f64; *dim]),
            TargetSpace::Product { .. } => unimplemented!("no product fixture"),
        })
        .collect();
    let weights = (0..count).map(|k| 1.0 + (k % 4) as f64).collect();
    (points, weights)
}
