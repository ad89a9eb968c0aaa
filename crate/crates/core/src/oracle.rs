//! Independent reference computations used to validate the solvers.
//!
//! Nothing here calls the barycenter or sweep code of [`crate::flow`]:
//! Euclidean problems are assembled as dense linear systems and solved by
//! Cholesky factorization, spider barycenters by exhaustive scanning.

use nalgebra::{DMatrix, DVector};

use crate::cat0::{TargetPoint, TargetSpace};
use crate::error::{Error, Result};
use crate::flow::{FlowTrace, SliceDiagnostics, SpaceTimeMap};
use crate::grid::{dirichlet_energy, time_density, Grid, GridMap};

/// Unknown-count cap for the dense WED system.
pub const WED_ORACLE_CAP: usize = 20_000;

#[derive(Debug, Clone)]
pub struct OracleResult<T> {
    pub id: &'static str,
    pub value: T,
    pub method: &'static str,
    /// Characteristic resolution of the computation (mesh width, scan step).
    pub resolution: f64,
}

fn euclidean_dim(u: &GridMap) -> Result<usize> {
    match u.space() {
        TargetSpace::Euclidean { dim } => Ok(*dim),
        other => Err(Error::KindMismatch {
            expected: "euclidean".into(),
            found: other.describe(),
        }),
    }
}

/// Component `c` of every node as a dense vector.
fn component(u: &GridMap, c: usize) -> DVector<f64> {
    DVector::from_iterator(
        u.values().len(),
        u.values().iter().map(|p| match p {
            TargetPoint::Euclidean { coords } => coords[c],
            _ => unreachable!("checked euclidean"),
        }),
    )
}

fn assemble(grid: &Grid, space: &TargetSpace, dim: usize, columns: &[DVector<f64>]) -> GridMap {
    let values = (0..grid.node_count())
        .map(|i| TargetPoint::euclidean((0..dim).map(|c| columns[c][i]).collect::<Vec<_>>()))
        .collect();
    GridMap::new(*grid, space.clone(), values).expect("finite euclidean values")
}

/// Periodic neighbor, computed from coordinates directly.
fn wrap_neighbor(grid: &Grid, x: usize, axis: usize, shift: isize) -> usize {
    let n = grid.nodes_per_axis() as isize;
    let mut c = grid.coords(x);
    c[axis] = ((c[axis] as isize + shift).rem_euclid(n)) as usize;
    grid.index(c)
}

/// Dense graph Laplacian `(L u)(x) = Σᵢ (2u(x) − u(x+heᵢ) − u(x−heᵢ)) / h²`.
pub fn dense_laplacian(grid: &Grid) -> DMatrix<f64> {
    let m = grid.node_count();
    let h2 = grid.spacing() * grid.spacing();
    let mut lap = DMatrix::zeros(m, m);
    for x in 0..m {
        for axis in 0..grid.dim() {
            for shift in [-1isize, 1] {
                let y = wrap_neighbor(grid, x, axis, shift);
                lap[(x, x)] += 1.0 / h2;
                lap[(x, y)] -= 1.0 / h2;
            }
        }
    }
    lap
}

/// Implicit Euler for the linear heat equation: `(I + τ L) u^{k+1} = u^k`,
/// componentwise, by a single Cholesky factorization.
pub fn euclid_heat_oracle(u0: &GridMap, tau: f64, steps: usize) -> Result<OracleResult<FlowTrace>> {
    let dim = euclidean_dim(u0)?;
    if !(tau > 0.0) {
        return Err(Error::invalid("tau", "must be positive"));
    }
    let grid = u0.grid();
    let m = grid.node_count();
    let system = DMatrix::identity(m, m) + dense_laplacian(grid) * tau;
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::Precondition("I + tau L is not positive definite".into()))?;
    let mut columns: Vec<DVector<f64>> = (0..dim).map(|c| component(u0, c)).collect();
    let mut slices = vec![u0.clone()];
    for _ in 0..steps {
        for col in columns.iter_mut() {
            *col = chol.solve(col);
        }
        slices.push(assemble(grid, u0.space(), dim, &columns));
    }
    Ok(OracleResult {
        id: "euclid_heat",
        value: FlowTrace::from_slices(slices, tau)?,
        method: "dense Cholesky solve of (I + tau L_h) u_next = u",
        resolution: grid.spacing(),
    })
}

/// Eigenvalue of the periodic graph Laplacian for wavenumber `k` per axis.
pub fn laplacian_eigenvalue(grid: &Grid, k: [usize; 2]) -> f64 {
    let n = grid.nodes_per_axis() as f64;
    let h2 = grid.spacing() * grid.spacing();
    (0..grid.dim())
        .map(|a| (2.0 - 2.0 * (2.0 * std::f64::consts::PI * k[a] as f64 / n).cos()) / h2)
        .sum()
}

/// Closed-form implicit-Euler solution for a single cosine mode
/// `u0(x) = amplitude · cos(2π k·x / L)`: each step multiplies the amplitude
/// by `1 / (1 + τ λ_k)`.
pub fn heat_mode_slices(
    grid: &Grid,
    k: [usize; 2],
    amplitude: f64,
    tau: f64,
    steps: usize,
) -> Vec<GridMap> {
    let lambda = laplacian_eigenvalue(grid, k);
    let space = TargetSpace::Euclidean { dim: 1 };
    (0..=steps)
        .map(|s| {
            let a = amplitude * (1.0 + tau * lambda).powi(-(s as i32));
            GridMap::from_fn(*grid, space.clone(), |i| {
                let p = grid.position(i);
                let phase = 2.0 * std::f64::consts::PI * (k[0] as f64 * p[0] + k[1] as f64 * p[1])
                    / grid.length();
                TargetPoint::euclidean(vec![a * phase.cos()])
            })
            .expect("finite mode values")
        })
        .collect()
}

fn spider_objective(points: &[TargetPoint], weights: &[f64], ray: usize, radius: f64) -> f64 {
    points
        .iter()
        .zip(weights)
        .map(|(p, w)| match p {
            TargetPoint::Spider { ray: r, radius: s } => {
                let d = if *r == ray || *s == 0.0 || radius == 0.0 {
                    (radius - s).abs()
                } else {
                    radius + s
                };
                w * d * d
            }
            _ => unreachable!("checked spider"),
        })
        .sum()
}

/// Exhaustive scan of every ray of a spider at resolution `step`.
pub fn grid_barycenter_oracle(
    space: &TargetSpace,
    points: &[TargetPoint],
    weights: &[f64],
    step: f64,
) -> Result<OracleResult<TargetPoint>> {
    let num_rays = match space {
        TargetSpace::Spider { num_rays } => *num_rays,
        other => {
            return Err(Error::KindMismatch {
                expected: "spider".into(),
                found: other.describe(),
            })
        }
    };
    for p in points {
        space.validate(p)?;
    }
    if !(step > 0.0) {
        return Err(Error::invalid("step", "must be positive"));
    }
    let reach = points
        .iter()
        .map(|p| match p {
            TargetPoint::Spider { radius, .. } => *radius,
            _ => 0.0,
        })
        .fold(0.0, f64::max);
    let samples = (reach / step).ceil() as usize + 1;
    let mut best = (0usize, 0.0f64, spider_objective(points, weights, 0, 0.0));
    for ray in 0..num_rays {
        for i in 1..=samples {
            let r = i as f64 * step;
            let f = spider_objective(points, weights, ray, r);
            if f < best.2 {
                best = (ray, r, f);
            }
        }
    }
    Ok(OracleResult {
        id: "grid_barycenter",
        value: TargetPoint::spider(best.0, best.1),
        method: "exhaustive scan of every ray",
        resolution: step,
    })
}

/// Ternary search of the spider objective on `ray` within `[lo, hi]`.
/// Comparing objective values limits accuracy to about `√ε_mach` times the
/// data scale.
pub fn refine_on_ray(points: &[TargetPoint], weights: &[f64], ray: usize, lo: f64, hi: f64) -> TargetPoint {
    let (mut a, mut b) = (lo.max(0.0), hi);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if spider_objective(points, weights, ray, m1) <= spider_objective(points, weights, ray, m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    TargetPoint::spider(ray, 0.5 * (a + b))
}

/// Dense normal equations of the discrete WED functional for Euclidean
/// targets. The unknowns are slices `1..=J`; slice 0 enters the right-hand
/// side.
pub fn wed_quadratic_oracle(
    u0: &GridMap,
    epsilon: f64,
    dt: f64,
    horizon: f64,
) -> Result<OracleResult<SpaceTimeMap>> {
    let dim = euclidean_dim(u0)?;
    if !(epsilon > 0.0 && dt > 0.0 && horizon > 0.0) {
        return Err(Error::invalid("epsilon/dt/horizon", "must be positive"));
    }
    let grid = u0.grid();
    let nodes = grid.node_count();
    let last = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let unknowns = last * nodes;
    if unknowns > WED_ORACLE_CAP {
        return Err(Error::OracleTooLarge {
            unknowns,
            cap: WED_ORACLE_CAP,
        });
    }
    let h = grid.spacing();
    let vol = grid.cell_volume();
    let w: Vec<f64> = (0..=last).map(|j| (-(j as f64) * dt / epsilon).exp() / epsilon).collect();
    let idx = |j: usize, x: usize| (j - 1) * nodes + x;

    let mut hess = DMatrix::zeros(unknowns, unknowns);
    // Coupling of each unknown to slice 0, per node.
    let mut to_initial = vec![0.0; nodes];
    for j in 0..last {
        let a = w[j] * epsilon * vol / dt;
        for x in 0..nodes {
            let next = idx(j + 1, x);
            hess[(next, next)] += a;
            if j == 0 {
                to_initial[x] += a;
            } else {
                let cur = idx(j, x);
                hess[(cur, cur)] += a;
                hess[(cur, next)] -= a;
                hess[(next, cur)] -= a;
            }
        }
        if j == 0 {
            continue;
        }
        let b = w[j] * dt * vol / (h * h);
        for x in 0..nodes {
            for axis in 0..grid.dim() {
                let y = wrap_neighbor(grid, x, axis, 1);
                let (p, q) = (idx(j, x), idx(j, y));
                hess[(p, p)] += b;
                hess[(q, q)] += b;
                hess[(p, q)] -= b;
                hess[(q, p)] -= b;
            }
        }
    }
    let chol = hess
        .cholesky()
        .ok_or_else(|| Error::Precondition("WED Hessian is not positive definite".into()))?;

    let mut solutions = Vec::with_capacity(dim);
    for c in 0..dim {
        let init = component(u0, c);
        let rhs = DVector::from_fn(unknowns, |k, _| if k < nodes { to_initial[k] * init[k] } else { 0.0 });
        solutions.push(chol.solve(&rhs));
    }
    let mut slices = vec![u0.clone()];
    for j in 1..=last {
        let cols: Vec<DVector<f64>> = solutions
            .iter()
            .map(|s| s.rows((j - 1) * nodes, nodes).into_owned())
            .collect();
        slices.push(assemble(grid, u0.space(), dim, &cols));
    }

    // Functional evaluated straight from its definition on component arrays.
    let comps: Vec<Vec<DVector<f64>>> = slices
        .iter()
        .map(|s| (0..dim).map(|c| component(s, c)).collect())
        .collect();
    let mut functional = 0.0;
    for j in 0..last {
        let mut kinetic = 0.0;
        let mut gradient = 0.0;
        for c in 0..dim {
            kinetic += (&comps[j + 1][c] - &comps[j][c]).norm_squared();
            for x in 0..nodes {
                for axis in 0..grid.dim() {
                    let y = wrap_neighbor(grid, x, axis, 1);
                    let d = comps[j][c][x] - comps[j][c][y];
                    gradient += d * d;
                }
            }
        }
        let energy = 0.5 * vol * gradient / (h * h);
        functional += w[j] * dt * (0.5 * epsilon * vol * kinetic / (dt * dt) + energy);
    }

    let mut diagnostics = Vec::with_capacity(slices.len());
    let mut dissipation = 0.0;
    for (j, s) in slices.iter().enumerate() {
        let mtd = if j == 0 {
            0.0
        } else {
            let td = time_density(&slices[j - 1], s, dt)?;
            dissipation += vol * dt * td.values().iter().sum::<f64>();
            td.max()
        };
        diagnostics.push(SliceDiagnostics {
            energy: dirichlet_energy(s),
            max_time_density: mtd,
            sweeps: 0,
            residual: 0.0,
        });
    }
    Ok(OracleResult {
        id: "wed_quadratic",
        value: SpaceTimeMap::from_parts(
            *grid,
            u0.space().clone(),
            dt,
            horizon,
            epsilon,
            slices,
            diagnostics,
            functional,
            0,
            0.0,
            dissipation,
        ),
        method: "dense Cholesky solve of the WED normal equations",
        resolution: grid.spacing(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::TimeSlices;

    fn euclid_line(values: &[f64], length: f64) -> GridMap {
        let grid = Grid::new(1, values.len(), length).unwrap();
        GridMap::from_fn(grid, TargetSpace::Euclidean { dim: 1 }, |i| {
            TargetPoint::euclidean(vec![values[i]])
        })
        .unwrap()
    }

    #[test]
    fn constant_stays_constant() {
        let u = euclid_line(&[1.5; 8], 1.0);
        let trace = euclid_heat_oracle(&u, 0.1, 3).unwrap().value;
        for s in trace.slices() {
            for p in s.values() {
                let TargetPoint::Euclidean { coords } = p else { panic!() };
                assert!((coords[0] - 1.5).abs() < 1e-14);
            }
        }
        let st = wed_quadratic_oracle(&u, 0.1, 0.025, 1.0).unwrap().value;
        assert!(st.functional().abs() < 1e-20);
    }

    #[test]
    fn single_mode_decays_by_resolvent_factor() {
        let grid = Grid::new(1, 16, 2.0).unwrap();
        let (tau, steps) = (0.01, 5);
        let expected = heat_mode_slices(&grid, [3, 0], 0.7, tau, steps);
        let trace = euclid_heat_oracle(&expected[0], tau, steps).unwrap().value;
        for (a, b) in trace.slices().iter().zip(&expected) {
            assert!(crate::grid::l2_distance(a, b).unwrap() < 1e-13);
        }
    }

    #[test]
    fn mean_is_conserved() {
        let u = euclid_line(&[0.0, 3.0, -1.0, 2.0, 5.0, 0.5, 1.0, -4.0], 1.0);
        let mean = |m: &GridMap| -> f64 {
            m.values()
                .iter()
                .map(|p| match p {
                    TargetPoint::Euclidean { coords } => coords[0],
                    _ => unreachable!(),
                })
                .sum::<f64>()
                / 8.0
        };
        let m0 = mean(&u);
        let trace = euclid_heat_oracle(&u, 0.05, 20).unwrap().value;
        for s in trace.slices() {
            assert!((mean(s) - m0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_euclidean() {
        let grid = Grid::new(1, 4, 1.0).unwrap();
        let u = GridMap::constant(grid, TargetSpace::Spider { num_rays: 3 }, TargetPoint::spider_origin()).unwrap();
        assert!(euclid_heat_oracle(&u, 0.1, 1).is_err());
        assert!(wed_quadratic_oracle(&u, 0.1, 0.025, 1.0).is_err());
    }

    #[test]
    fn wed_size_cap() {
        let u = euclid_line(&[0.0; 64], 1.0);
        let err = wed_quadratic_oracle(&u, 0.1, 0.0001, 1.0).unwrap_err();
        assert!(matches!(err, Error::OracleTooLarge { .. }));
    }

    #[test]
    fn wed_single_mode_stays_single_mode() {
        let grid = Grid::new(1, 12, 1.0).unwrap();
        let u0 = &heat_mode_slices(&grid, [2, 0], 1.0, 0.1, 0)[0];
        let st = wed_quadratic_oracle(u0, 0.1, 0.025, 1.0).unwrap().value;
        for s in st.slices() {
            // Project onto the mode; the remainder must vanish.
            let vals: Vec<f64> = s
                .values()
                .iter()
                .map(|p| match p {
                    TargetPoint::Euclidean { coords } => coords[0],
                    _ => unreachable!(),
                })
                .collect();
            let basis: Vec<f64> = (0..12)
                .map(|i| (2.0 * std::f64::consts::PI * 2.0 * i as f64 / 12.0).cos())
                .collect();
            let coef = vals.iter().zip(&basis).map(|(a, b)| a * b).sum::<f64>()
                / basis.iter().map(|b| b * b).sum::<f64>();
            let resid: f64 = vals.iter().zip(&basis).map(|(a, b)| (a - coef * b).powi(2)).sum();
            assert!(resid < 1e-24, "{resid}");
        }
    }

    #[test]
    fn barycenter_scan_examples() {
        let s = TargetSpace::Spider { num_rays: 3 };
        let sym = [
            TargetPoint::spider(0, 1.0),
            TargetPoint::spider(1, 1.0),
            TargetPoint::spider(2, 1.0),
        ];
        let b = grid_barycenter_oracle(&s, &sym, &[1.0; 3], 1e-4).unwrap().value;
        assert_eq!(b, TargetPoint::spider_origin());

        let pts = [
            TargetPoint::spider(0, 2.0),
            TargetPoint::spider(1, 1.0),
            TargetPoint::spider(2, 1.0),
        ];
        let b = grid_barycenter_oracle(&s, &pts, &[0.5, 0.25, 0.25], 1e-4).unwrap().value;
        let TargetPoint::Spider { ray, radius } = b else { panic!() };
        assert_eq!(ray, 0);
        assert!((radius - 0.5).abs() <= 1e-4);
        let refined = refine_on_ray(&pts, &[0.5, 0.25, 0.25], 0, radius - 1e-4, radius + 1e-4);
        assert!(s.dist(&refined, &TargetPoint::spider(0, 0.5)).unwrap() < 1e-7);

        let one = [TargetPoint::spider(2, 0.8)];
        let b = grid_barycenter_oracle(&s, &one, &[1.0], 1e-4).unwrap().value;
        assert!(s.dist(&b, &one[0]).unwrap() <= 1e-4);
    }
}
