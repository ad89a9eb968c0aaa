//! Convergence of WED minimizers to the proximal flow as `ε → 0`.

use super::{Resolution, VerifierReport};
use crate::error::{Error, Result};
use crate::flow::{run_flow, FlowTrace, SolverOptions, SpaceTimeMap, TimeSlices, WedSolver};
use crate::grid::{l2_distance, l2_distance_squared, GridMap};

/// Gaps at or below this count as agreement.
pub const ROUNDOFF_GAP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub epsilons: Vec<f64>,
    /// Space-time L² gap on `[0, t_compare]`.
    pub gaps: Vec<f64>,
    /// L² gap of the slices at `t_compare`.
    pub slice_gaps: Vec<f64>,
    pub sweeps: Vec<usize>,
    pub report: VerifierReport,
}

/// `(Σ_{j=1..=upto} Δt d₂²(a_j, b_j))^{1/2}`.
pub fn space_time_gap(a: &[GridMap], b: &[GridMap], dt: f64, upto: usize) -> Result<f64> {
    if a.len() <= upto || b.len() <= upto {
        return Err(Error::Precondition(format!("need {} slices for the gap", upto + 1)));
    }
    let mut acc = 0.0;
    for j in 1..=upto {
        acc += dt * l2_distance_squared(&a[j], &b[j])?;
    }
    Ok(acc.sqrt())
}

/// Horizon used for each `ε`: the comparison window plus a `10ε` collar so
/// that the free terminal slice does not reach `t_compare`.
pub fn study_horizon(epsilon: f64, t_compare: f64) -> f64 {
    t_compare + 10.0 * epsilon
}

/// Solves the WED problem for each `ε` (descending) on a common time step,
/// starting from the proximal flow with `τ = Δt`, and compares against that
/// same flow. PASS iff the gaps strictly decrease.
pub fn wed_convergence_study(
    u0: &GridMap,
    epsilons: &[f64],
    dt: f64,
    t_compare: f64,
    opts: &SolverOptions,
    reference: Option<&FlowTrace>,
) -> Result<ConvergenceStudy> {
    if epsilons.is_empty() {
        return Err(Error::Empty("epsilon list"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("epsilon_list", "must be strictly descending"));
    }
    let upto = (t_compare / dt).round();
    if !(upto >= 1.0 && (upto * dt - t_compare).abs() <= 1e-9 * t_compare) {
        return Err(Error::invalid("t_compare", format!("{t_compare} is not a positive multiple of dt = {dt}")));
    }
    let upto = upto as usize;
    let horizon_slices = |eps: f64| (study_horizon(eps, t_compare) / dt - 1e-9).ceil() as usize;
    let needed = horizon_slices(epsilons[0]);
    let owned;
    let reference = match reference {
        Some(r) => r,
        None => {
            owned = run_flow(u0, dt, needed, opts)?;
            &owned
        }
    };
    if reference.time_step() != dt || reference.slices().len() <= needed {
        return Err(Error::Precondition("reference flow must use tau = dt and cover the largest horizon".into()));
    }

    let mut gaps = Vec::new();
    let mut slice_gaps = Vec::new();
    let mut sweeps = Vec::new();
    for &eps in epsilons {
        let horizon = study_horizon(eps, t_compare);
        let mut solver = WedSolver::new(u0, eps, dt, horizon, *opts)?;
        solver.set_initial_guess(&reference.slices()[..=solver.last_slice()])?;
        let st: SpaceTimeMap = solver.solve()?;
        gaps.push(space_time_gap(st.slices(), reference.slices(), dt, upto)?);
        slice_gaps.push(l2_distance(&st.slices()[upto], &reference.slices()[upto])?);
        sweeps.push(st.sweeps());
    }

    // Solutions that agree to round-off (e.g. constant data) leave nothing
    // to converge.
    let exact = gaps.iter().all(|&g| g <= ROUNDOFF_GAP);
    let decreasing = exact || gaps.windows(2).all(|w| w[1] < w[0]);
    let worst = gaps.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let rates: Vec<String> = gaps
        .windows(2)
        .zip(epsilons.windows(2))
        .map(|(g, e)| format!("{:.3}", (g[0] / g[1]).ln() / (e[0] / e[1]).ln()))
        .collect();
    let series = epsilons.iter().zip(&gaps).map(|(e, g)| [*e, *g]).collect();
    let report = VerifierReport::new(
        "wed_convergence",
        "gap(eps) strictly decreasing along the descending epsilon list (or all gaps <= 1e-12)",
        if gaps.len() == 1 || exact { 0.0 } else { worst },
        0.0,
        decreasing,
    )
    .with_resolution(Resolution::of(reference))
    .with_series("epsilon, space-time gap", series)
    .with_note(format!(
        "slice gaps at t = {t_compare}: {slice_gaps:?}; observed rates: [{}]; sweeps: {sweeps:?}",
        rates.join(", ")
    ));
    Ok(ConvergenceStudy { epsilons: epsilons.to_vec(), gaps, slice_gaps, sweeps, report })
}
