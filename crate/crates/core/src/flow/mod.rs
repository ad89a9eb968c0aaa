//! Constructions of the heat flow.
//!
//! * [`proximal_step`] / [`run_flow`]: minimizing movements
//!   `u^{k+1} = argmin_v E(v) + d₂²(v, u^k) / (2τ)`, solved by Gauss–Seidel
//!   sweeps of exact per-node barycenter updates.
//! * [`wed_minimize`]: the weighted energy-dissipation functional on a
//!   truncated space-time grid with the initial slice clamped, solved by
//!   cyclic node-slice coordinate minimization.

mod io;
mod proximal;
mod wed;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cat0::TargetSpace;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridMap};

pub use io::{read_trace, write_diagnostics_csv, StoredTrace, TraceHeader, TraceKind, TRACE_SCHEMA, TRACE_SCHEMA_VERSION};
pub use proximal::{proximal_objective, proximal_step, run_flow, FlowTrace, ProximalSolver, StepOutcome};
pub use wed::{wed_minimize, SpaceTimeMap, WedSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    #[default]
    Lexicographic,
    RedBlack,
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub order: SweepOrder,
    pub max_sweeps: usize,
    /// A solve stops once one full sweep moves the unknowns by at most
    /// `tolerance · (1 + spread)` in (weighted) L², where `spread` is the L²
    /// spread of the input map around its first node.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            order: SweepOrder::Lexicographic,
            max_sweeps: 200_000,
            tolerance: 1e-12,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::invalid("max_sweeps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Per-slice bookkeeping stored alongside every trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceDiagnostics {
    pub energy: f64,
    /// `max_x |∂ₜu|²` over the step that produced the slice (0 for slice 0).
    pub max_time_density: f64,
    pub sweeps: usize,
    pub residual: f64,
}

/// Read access to a time-indexed sequence of maps on a uniform time grid.
pub trait TimeSlices {
    fn grid(&self) -> &Grid;
    fn space(&self) -> &TargetSpace;
    fn time_step(&self) -> f64;
    fn slices(&self) -> &[GridMap];

    fn time(&self, slice: usize) -> f64 {
        slice as f64 * self.time_step()
    }

    fn final_time(&self) -> f64 {
        self.time(self.slices().len() - 1)
    }
}

/// Visiting order for one sweep over `count` unknowns.
pub(crate) fn visit_order(
    order: SweepOrder,
    count: usize,
    is_red: impl Fn(usize) -> bool,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    match order {
        SweepOrder::Lexicographic => (0..count).collect(),
        SweepOrder::RedBlack => {
            let (mut red, black): (Vec<usize>, Vec<usize>) = (0..count).partition(|&i| is_red(i));
            red.extend(black);
            red
        }
        SweepOrder::SeededRandom => {
            let mut v: Vec<usize> = (0..count).collect();
            v.shuffle(rng);
            v
        }
    }
}

/// Sweep termination. A sweep whose move is below `threshold` ends the solve
/// only if the geometric tail `move · ρ/(1−ρ)`, with `ρ` the ratio of the last
/// two moves, is below it as well; slowly contracting sweeps otherwise stop
/// far from the fixed point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StopRule {
    threshold: f64,
    previous: f64,
}

impl StopRule {
    pub(crate) fn new(threshold: f64) -> Self {
        StopRule { threshold, previous: f64::INFINITY }
    }

    pub(crate) fn threshold(&self) -> f64 {
        self.threshold
    }

    pub(crate) fn converged(&mut self, moved: f64) -> bool {
        let ratio = moved / self.previous;
        self.previous = moved;
        if moved > self.threshold {
            return false;
        }
        // Round-off floor: the ratio is noise down here.
        if moved <= 1e-3 * self.threshold {
            return true;
        }
        ratio < 1.0 && moved * ratio / (1.0 - ratio) <= self.threshold
    }
}

/// L² spread of a map around its first node value.
pub(crate) fn spread(u: &GridMap) -> f64 {
    let space = u.space();
    let base = u.value(0);
    let s: f64 = u
        .values()
        .iter()
        .map(|p| crate::grid::dist2_valid(space, base, p))
        .sum();
    (u.grid().cell_volume() * s).sqrt()
}
