use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{spread, StopRule, visit_order, SliceDiagnostics, SolverOptions, TimeSlices};
use crate::cat0::{TargetPoint, TargetSpace};
use crate::error::{Error, Result};
use crate::grid::{dirichlet_energy, dist2_valid, time_density, Grid, GridMap};
use crate::sum::CompensatedSum;

/// Relative slack on the `T ≥ 10ε` and `Δt ≤ ε/4` preconditions.
const PRECONDITION_SLACK: f64 = 1e-12;

/// Discrete weighted energy-dissipation problem
///
/// `I = Σ_{j<J} w_j Δt [ (ε/2) hⁿ Σ_x d²(u(x,t_{j+1}), u(x,t_j)) / Δt² + E(u(·,t_j)) ]`
///
/// with `w_j = e^{−t_j/ε} / ε` and slice 0 clamped to the initial data.
pub struct WedSolver {
    grid: Grid,
    space: TargetSpace,
    epsilon: f64,
    dt: f64,
    horizon: f64,
    /// `w_j` for `j = 0..=J`.
    weights: Vec<f64>,
    slices: Vec<GridMap>,
    opts: SolverOptions,
    rng: ChaCha8Rng,
    stop: StopRule,
    sweeps: usize,
    last_move: f64,
}

impl WedSolver {
    pub fn new(u0: &GridMap, epsilon: f64, dt: f64, horizon: f64, opts: SolverOptions) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if dt > 0.25 * epsilon * (1.0 + PRECONDITION_SLACK) {
            return Err(Error::invalid(
                "dt",
                format!("time step {dt} is too coarse for epsilon {epsilon}; need dt <= epsilon/4"),
            ));
        }
        if !(horizon.is_finite() && horizon >= 10.0 * epsilon * (1.0 - PRECONDITION_SLACK)) {
            return Err(Error::invalid(
                "horizon",
                format!("horizon {horizon} must be at least 10 * epsilon = {}", 10.0 * epsilon),
            ));
        }
        opts.validate()?;
        let last = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
        let weights = (0..=last)
            .map(|j| (-(j as f64) * dt / epsilon).exp() / epsilon)
            .collect();
        Ok(WedSolver {
            grid: *u0.grid(),
            space: u0.space().clone(),
            epsilon,
            dt,
            horizon,
            weights,
            slices: vec![u0.clone(); last + 1],
            opts,
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            stop: StopRule::new(opts.tolerance * (1.0 + spread(u0))),
            sweeps: 0,
            last_move: f64::INFINITY,
        })
    }

    /// Replaces the current iterate (slice 0 stays clamped).
    pub fn set_initial_guess(&mut self, guess: &[GridMap]) -> Result<()> {
        if guess.len() != self.slices.len() {
            return Err(Error::LengthMismatch {
                what: "initial guess slices",
                left: guess.len(),
                right: self.slices.len(),
            });
        }
        for (slot, g) in self.slices.iter_mut().zip(guess).skip(1) {
            slot.ensure_compatible(g)?;
            *slot = g.clone();
        }
        Ok(())
    }

    pub fn last_slice(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn slices(&self) -> &[GridMap] {
        &self.slices
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Current value of the discrete functional.
    pub fn functional(&self) -> f64 {
        let vol = self.grid.cell_volume();
        let mut acc = CompensatedSum::new();
        for j in 0..self.last_slice() {
            let (a, b) = (&self.slices[j], &self.slices[j + 1]);
            let kinetic: f64 = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(p, q)| dist2_valid(&self.space, p, q))
                .sum();
            let term = 0.5 * self.epsilon * vol * kinetic / (self.dt * self.dt) + dirichlet_energy(a);
            acc.add(self.weights[j] * self.dt * term);
        }
        acc.value()
    }

    /// One sweep over all free node-slice unknowns; returns the weighted L²
    /// norm `(Σ_j w_j Δt hⁿ Σ_x d²(old, new))^{1/2}` of the update.
    pub fn sweep(&mut self) -> Result<f64> {
        let per_slice = self.grid.node_count();
        let free = per_slice * self.last_slice();
        let grid = self.grid;
        let order = visit_order(
            self.opts.order,
            free,
            |k| {
                let (j, x) = (k / per_slice + 1, k % per_slice);
                grid.is_red(x) ^ (j % 2 == 1)
            },
            &mut self.rng,
        );
        let mut moved = CompensatedSum::new();
        for k in order {
            let (j, x) = (k / per_slice + 1, k % per_slice);
            let updated = self.node_update(j, x)?;
            let slot = &mut self.slices[j].values_mut()[x];
            moved.add(self.weights[j] * dist2_valid(&self.space, slot, &updated));
            *slot = updated;
        }
        self.sweeps += 1;
        self.last_move = (self.dt * self.grid.cell_volume() * moved.value()).sqrt();
        Ok(self.last_move)
    }

    /// Exact minimizer in `u(x, t_j)` with everything else frozen.
    fn node_update(&self, j: usize, x: usize) -> Result<TargetPoint> {
        let h = self.grid.spacing();
        let vol = self.grid.cell_volume();
        let kinetic = self.epsilon * vol / self.dt;
        let mut points: [&TargetPoint; 6] = [self.slices[j].value(x); 6];
        let mut weights = [0.0; 6];
        points[0] = self.slices[j - 1].value(x);
        weights[0] = self.weights[j - 1] * kinetic;
        let mut k = 1;
        if j < self.last_slice() {
            points[k] = self.slices[j + 1].value(x);
            weights[k] = self.weights[j] * kinetic;
            k += 1;
            let spatial = self.weights[j] * self.dt * vol / (h * h);
            for y in self.grid.neighbors(x) {
                points[k] = self.slices[j].value(y);
                weights[k] = spatial;
                k += 1;
            }
        }
        self.space.barycenter(&points[..k], &weights[..k])
    }

    pub fn solve(mut self) -> Result<SpaceTimeMap> {
        loop {
            let moved = self.sweep()?;
            if self.stop.converged(moved) {
                break;
            }
            if self.sweeps >= self.opts.max_sweeps {
                return Err(Error::NotConverged {
                    sweeps: self.sweeps,
                    residual: moved,
                    tolerance: self.stop.threshold(),
                });
            }
        }
        self.finish()
    }

    fn finish(self) -> Result<SpaceTimeMap> {
        let functional = self.functional();
        let mut diagnostics = Vec::with_capacity(self.slices.len());
        let vol = self.grid.cell_volume();
        let mut dissipation = CompensatedSum::new();
        for (j, slice) in self.slices.iter().enumerate() {
            let max_time_density = if j == 0 {
                0.0
            } else {
                let td = time_density(&self.slices[j - 1], slice, self.dt)?;
                dissipation.add(vol * self.dt * td.values().iter().sum::<f64>());
                td.max()
            };
            diagnostics.push(SliceDiagnostics {
                energy: dirichlet_energy(slice),
                max_time_density,
                sweeps: if j == 0 { 0 } else { self.sweeps },
                residual: if j == 0 { 0.0 } else { self.last_move },
            });
        }
        Ok(SpaceTimeMap {
            grid: self.grid,
            space: self.space,
            dt: self.dt,
            horizon: self.horizon,
            epsilon: self.epsilon,
            slices: self.slices,
            diagnostics,
            functional,
            sweeps: self.sweeps,
            residual: self.last_move,
            dissipation: dissipation.value(),
        })
    }
}

/// A converged WED minimizer on the truncated space-time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeMap {
    grid: Grid,
    space: TargetSpace,
    dt: f64,
    horizon: f64,
    epsilon: f64,
    slices: Vec<GridMap>,
    diagnostics: Vec<SliceDiagnostics>,
    functional: f64,
    sweeps: usize,
    residual: f64,
    dissipation: f64,
}

impl SpaceTimeMap {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        grid: Grid,
        space: TargetSpace,
        dt: f64,
        horizon: f64,
        epsilon: f64,
        slices: Vec<GridMap>,
        diagnostics: Vec<SliceDiagnostics>,
        functional: f64,
        sweeps: usize,
        residual: f64,
        dissipation: f64,
    ) -> Self {
        SpaceTimeMap {
            grid,
            space,
            dt,
            horizon,
            epsilon,
            slices,
            diagnostics,
            functional,
            sweeps,
            residual,
            dissipation,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn functional(&self) -> f64 {
        self.functional
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn diagnostics(&self) -> &[SliceDiagnostics] {
        &self.diagnostics
    }

    pub fn energies(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.energy).collect()
    }

    /// `Σ_j hⁿ Δt Σ_x |∂ₜu|²` over the truncated horizon.
    pub fn dissipation(&self) -> f64 {
        self.dissipation
    }

    /// `δ_h` in `dissipation ≤ (1 + δ_h) E(u₀)`; zero for constant data.
    pub fn energy_bound_excess(&self) -> f64 {
        let e0 = self.diagnostics[0].energy;
        if e0 == 0.0 {
            0.0
        } else {
            self.dissipation / e0 - 1.0
        }
    }

    /// Tail weight `e^{−T/ε}` dropped by truncating the horizon.
    pub fn truncation_weight(&self) -> f64 {
        (-self.horizon / self.epsilon).exp()
    }
}

impl TimeSlices for SpaceTimeMap {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn space(&self) -> &TargetSpace {
        &self.space
    }
    fn time_step(&self) -> f64 {
        self.dt
    }
    fn slices(&self) -> &[GridMap] {
        &self.slices
    }
}

/// Minimizes the discrete WED functional for initial data `u0`.
///
/// Requires `T ≥ 10ε` (tail weight at most `e^{−10}`) and `Δt ≤ ε/4`.
pub fn wed_minimize(
    u0: &GridMap,
    epsilon: f64,
    dt: f64,
    horizon: f64,
    opts: &SolverOptions,
) -> Result<SpaceTimeMap> {
    WedSolver::new(u0, epsilon, dt, horizon, *opts)?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::SweepOrder;

    fn spider_data() -> GridMap {
        let grid = Grid::new(1, 8, 1.0).unwrap();
        GridMap::from_fn(grid, TargetSpace::Spider { num_rays: 3 }, |i| {
            let s = (2.0 * std::f64::consts::PI * i as f64 / 8.0).cos();
            if s >= 0.0 {
                TargetPoint::spider(0, s)
            } else {
                TargetPoint::spider(2, -s)
            }
        })
        .unwrap()
    }

    #[test]
    fn constant_data_gives_zero_functional() {
        let grid = Grid::new(1, 6, 1.0).unwrap();
        let u0 = GridMap::constant(grid, TargetSpace::Hyperbolic2, TargetPoint::hyperboloid(0.2, 0.1)).unwrap();
        let st = wed_minimize(&u0, 0.1, 0.025, 1.0, &SolverOptions::default()).unwrap();
        assert_eq!(st.functional(), 0.0);
        assert!(st.slices().iter().all(|s| s == &u0));
        assert_eq!(st.slices().len(), 41);
    }

    #[test]
    fn preconditions() {
        let u0 = spider_data();
        let opts = SolverOptions::default();
        assert!(matches!(
            wed_minimize(&u0, 0.1, 0.05, 1.0, &opts),
            Err(Error::InvalidParameter { ref name, .. }) if name == "dt"
        ));
        assert!(matches!(
            wed_minimize(&u0, 0.1, 0.01, 0.5, &opts),
            Err(Error::InvalidParameter { ref name, .. }) if name == "horizon"
        ));
        assert!(wed_minimize(&u0, 0.0, 0.01, 0.5, &opts).is_err());
    }

    #[test]
    fn functional_decreases_monotonically_over_sweeps() {
        let u0 = spider_data();
        for order in [SweepOrder::Lexicographic, SweepOrder::RedBlack, SweepOrder::SeededRandom] {
            let opts = SolverOptions { order, seed: 11, ..Default::default() };
            let mut solver = WedSolver::new(&u0, 0.04, 0.01, 0.4, opts).unwrap();
            let mut last = solver.functional();
            for _ in 0..40 {
                solver.sweep().unwrap();
                let now = solver.functional();
                assert!(now <= last * (1.0 + 1e-14), "{order:?}: {now} > {last}");
                last = now;
            }
        }
    }

    #[test]
    fn terminal_slice_copies_its_predecessor() {
        let u0 = spider_data();
        let st = wed_minimize(&u0, 0.04, 0.01, 0.4, &SolverOptions::default()).unwrap();
        let n = st.slices().len();
        let gap = crate::grid::l2_distance(&st.slices()[n - 1], &st.slices()[n - 2]).unwrap();
        assert!(gap < 1e-9);
        assert_eq!(&st.slices()[0], &u0);
    }
}
