use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use npcflow::sample::{random_point, random_smooth_map};
use npcflow::scenario::InitialData;
use npcflow::{
    dirichlet_energy, energy_density, l2_distance, proximal_step, run_flow, Grid, GridMap, SolverOptions, TargetPoint,
    TargetSpace, TimeSlices,
};

fn spaces() -> Vec<TargetSpace> {
    vec![
        TargetSpace::Euclidean { dim: 2 },
        TargetSpace::Spider { num_rays: 3 },
        TargetSpace::Spider { num_rays: 5 },
        TargetSpace::Hyperbolic2,
        TargetSpace::Product { factors: vec![TargetSpace::Euclidean { dim: 1 }, TargetSpace::Spider { num_rays: 3 }] },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn geodesics_have_constant_speed(seed in any::<u64>(), which in 0usize..5, lambda in 0.0f64..=1.0) {
        let space = &spaces()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_point(space, &mut rng, 2.0);
        let q = random_point(space, &mut rng, 2.0);
        let d = space.dist(&p, &q).unwrap();
        let m = space.interp(&p, &q, lambda).unwrap();
        let tol = 1e-9 * (1.0 + d);
        prop_assert!((space.dist(&p, &m).unwrap() - lambda * d).abs() <= tol);
        prop_assert!((space.dist(&m, &q).unwrap() - (1.0 - lambda) * d).abs() <= tol);
    }

    #[test]
    fn distance_is_a_metric(seed in any::<u64>(), which in 0usize..5) {
        let space = &spaces()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [p, q, r] = [0; 3].map(|_| random_point(space, &mut rng, 2.0));
        let d = |a: &TargetPoint, b: &TargetPoint| space.dist(a, b).unwrap();
        prop_assert!(d(&p, &p) <= 1e-12);
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() <= 1e-12 * (1.0 + d(&p, &q)));
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
    }

    #[test]
    fn l2_distance_satisfies_the_triangle_inequality(a in 0u64..1000, b in 0u64..1000, c in 0u64..1000) {
        let grid = Grid::new(1, 16, 2.0).unwrap();
        let space = TargetSpace::Spider { num_rays: 3 };
        let m = |s| random_smooth_map(grid, space.clone(), s, 1.0, 0.5).unwrap();
        let (u, v, w) = (m(a), m(b), m(c));
        prop_assert!(l2_distance(&u, &w).unwrap() <= l2_distance(&u, &v).unwrap() + l2_distance(&v, &w).unwrap() + 1e-12);
    }
}

fn spider_d(a: (usize, f64), b: (usize, f64)) -> f64 {
    if a.0 == b.0 || a.1 == 0.0 || b.1 == 0.0 {
        (a.1 - b.1).abs()
    } else {
        a.1 + b.1
    }
}

/// Exhaustive oracle: on each ray the objective is a parabola in the
/// radius, so the constrained minimum is a clamped vertex.
fn spider_oracle(k: usize, pts: &[(usize, f64)], w: &[f64]) -> ((usize, f64), f64) {
    let total: f64 = w.iter().sum();
    let objective = |x: (usize, f64)| pts.iter().zip(w).map(|(&p, &wi)| wi * spider_d(x, p).powi(2)).sum::<f64>();
    (0..k)
        .map(|ray| {
            let signed: f64 = pts.iter().zip(w).map(|(&(j, r), &wi)| if j == ray { wi * r } else { -wi * r }).sum();
            let x = (ray, (signed / total).max(0.0));
            (x, objective(x))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

#[test]
fn spider_barycenter_matches_the_per_ray_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for instance in 0..1000 {
        let k = rng.random_range(3..=6);
        let space = TargetSpace::Spider { num_rays: k };
        let m = rng.random_range(1..=7);
        let pts: Vec<(usize, f64)> = (0..m).map(|_| (rng.random_range(0..k), rng.random_range(0.0..3.0))).collect();
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
        let points: Vec<TargetPoint> = pts.iter().map(|&(j, r)| TargetPoint::spider(j, r)).collect();
        let got = space.barycenter(&points, &w).unwrap();
        let (best, value) = spider_oracle(k, &pts, &w);
        let TargetPoint::Spider { ray, radius } = got else { panic!("not a spider point") };
        let mine: f64 = pts.iter().zip(&w).map(|(&p, &wi)| wi * spider_d((ray, radius), p).powi(2)).sum();
        assert!(mine <= value + 1e-10 * (1.0 + value), "instance {instance}: {mine} > {value}");
        assert!(spider_d((ray, radius), best) <= 1e-8, "instance {instance}: {ray}/{radius} vs {best:?}");
    }
}

#[test]
fn density_integrates_to_twice_the_energy() {
    for (n, space) in [(1, TargetSpace::Spider { num_rays: 3 }), (2, TargetSpace::Hyperbolic2), (2, TargetSpace::Euclidean { dim: 3 })] {
        let grid = Grid::new(n, 12, 3.0).unwrap();
        let u = random_smooth_map(grid, space, 5, 1.0, 1.0).unwrap();
        let e = dirichlet_energy(&u);
        let total = energy_density(&u).integral();
        assert!((total - 2.0 * e).abs() <= 1e-12 * e, "{total} vs {e}");
    }
}

fn translate(u: &GridMap, shift: usize, relabel: impl Fn(&TargetPoint) -> TargetPoint) -> GridMap {
    let g = *u.grid();
    GridMap::from_fn(g, u.space().clone(), |i| {
        let [a, b] = g.coords(i);
        let from = g.index([(a + g.nodes_per_axis() - shift) % g.nodes_per_axis(), b]);
        relabel(u.value(from))
    })
    .unwrap()
}

#[test]
fn energy_and_proximal_step_commute_with_translation() {
    let grid = Grid::new(2, 12, 2.0).unwrap();
    let u = random_smooth_map(grid, TargetSpace::Spider { num_rays: 3 }, 8, 1.0, 0.7).unwrap();
    let v = translate(&u, 5, Clone::clone);
    assert!((dirichlet_energy(&u) - dirichlet_energy(&v)).abs() <= 1e-12 * dirichlet_energy(&u));
    let opts = SolverOptions::default();
    let su = proximal_step(&u, 0.01, &opts).unwrap().map;
    let sv = proximal_step(&v, 0.01, &opts).unwrap().map;
    let gap = l2_distance(&translate(&su, 5, Clone::clone), &sv).unwrap();
    assert!(gap <= 1e-8, "{gap:e}");
}

#[test]
fn three_ray_symmetry_is_preserved() {
    let grid = Grid::new(1, 48, 3.0).unwrap();
    let space = TargetSpace::Spider { num_rays: 3 };
    let u0 = InitialData::ThreeRaySymmetric { amplitude: 1.0 }.build(grid, &space).unwrap();
    let rotate = |p: &TargetPoint| match p {
        &TargetPoint::Spider { ray, radius } => TargetPoint::spider((ray + 1) % 3, radius),
        _ => unreachable!(),
    };
    assert_eq!(translate(&u0, 16, rotate), u0);
    let trace = run_flow(&u0, 0.002, 100, &SolverOptions::default()).unwrap();
    for (k, u) in trace.slices().iter().enumerate() {
        let gap = l2_distance(&translate(u, 16, rotate), u).unwrap();
        assert!(gap <= 1e-8, "slice {k}: {gap:e}");
    }
}

#[test]
fn two_ray_flow_stays_on_its_two_rays() {
    let grid = Grid::new(1, 32, 2.0).unwrap();
    let space = TargetSpace::Spider { num_rays: 3 };
    let u0 = InitialData::TwoRayStep { amplitude: 1.0 }.build(grid, &space).unwrap();
    let trace = run_flow(&u0, 0.005, 100, &SolverOptions::default()).unwrap();
    for u in trace.slices() {
        for p in u.values() {
            let TargetPoint::Spider { ray, radius } = *p else { unreachable!() };
            assert!(ray < 2 || radius == 0.0, "{p:?}");
        }
    }
}
