//! Audits of the proximal flow (EVI, dissipation, contraction) and of the
//! energy bounds along WED minimizers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Location, Resolution, VerifierReport};
use crate::error::{Error, Result};
use crate::flow::{FlowTrace, SpaceTimeMap, TimeSlices};
use crate::grid::{dirichlet_energy, l2_distance, l2_distance_squared, GridMap};
use crate::sample::{random_point, random_smooth_map};

/// `[u₀, constant, smooth, constant, smooth, …]`, `count` maps in total.
/// Constants sit at random target points; smooth maps have correlation
/// length `L/2`. Everything is drawn from `seed`.
pub fn standard_competitors(u0: &GridMap, count: usize, seed: u64) -> Result<Vec<GridMap>> {
    let grid = *u0.grid();
    let space = u0.space().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let w = match k {
            0 => u0.clone(),
            k if k % 2 == 1 => GridMap::constant(grid, space.clone(), random_point(&space, &mut rng, 1.0))?,
            k => random_smooth_map(grid, space.clone(), seed.wrapping_add(k as u64), 1.0, 0.5 * grid.length())?,
        };
        out.push(w);
    }
    Ok(out)
}

/// `max_{k,w} [d₂²(u^{k+1},w) − d₂²(u^k,w)]/(2τ) + E(u^{k+1}) − E(w)`;
/// PASS iff at most `1e-8 (1 + E(u₀))`.
pub fn evi_residual(trace: &FlowTrace, competitors: &[GridMap]) -> Result<VerifierReport> {
    if competitors.is_empty() {
        return Err(Error::Empty("competitors"));
    }
    let slices = trace.slices();
    let tau = trace.tau();
    let energies: Vec<f64> = slices.iter().map(dirichlet_energy).collect();
    let tolerance = 1e-8 * (1.0 + energies[0]);
    let mut worst = f64::NEG_INFINITY;
    let mut location = Location::default();
    for (c, w) in competitors.iter().enumerate() {
        slices[0].ensure_compatible(w)?;
        let ew = dirichlet_energy(w);
        let mut prev = l2_distance_squared(&slices[0], w)?;
        for k in 0..slices.len() - 1 {
            let next = l2_distance_squared(&slices[k + 1], w)?;
            let r = (next - prev) / (2.0 * tau) + energies[k + 1] - ew;
            if r > worst {
                worst = r;
                location = Location { slice: Some(k + 1), member: Some(c), ..Default::default() };
            }
            prev = next;
        }
    }
    if slices.len() == 1 {
        worst = 0.0;
    }
    Ok(VerifierReport::new("evi", "max residual <= 1e-8 (1 + E(u0))", worst, tolerance, worst <= tolerance)
        .with_location(location)
        .with_resolution(Resolution::of(trace)))
}

/// `max_k E(u^{k+1}) + d₂²(u^{k+1},u^k)/(2τ) − E(u^k)`; PASS iff at most
/// `1e-9 E(u₀)`.
pub fn dissipation_audit(trace: &FlowTrace) -> Result<VerifierReport> {
    let s = trace.slices();
    let e: Vec<f64> = s.iter().map(dirichlet_energy).collect();
    let tolerance = 1e-9 * e[0];
    let mut worst = 0.0f64;
    let mut at = 0;
    for k in 0..s.len() - 1 {
        let v = e[k + 1] + l2_distance_squared(&s[k + 1], &s[k])? / (2.0 * trace.tau()) - e[k];
        if k == 0 || v > worst {
            worst = v;
            at = k + 1;
        }
    }
    Ok(VerifierReport::new("dissipation", "max one-step excess <= 1e-9 E(u0)", worst, tolerance, worst <= tolerance)
        .with_location(Location { slice: Some(at), ..Default::default() })
        .with_resolution(Resolution::of(trace)))
}

/// `max_k E(u^{k+1}) − E(u^k)`; PASS iff at most `1e-9 E(u₀)`.
pub fn energy_monotonicity(slices: &dyn TimeSlices) -> VerifierReport {
    let e: Vec<f64> = slices.slices().iter().map(dirichlet_energy).collect();
    let tolerance = 1e-9 * e[0];
    let (mut worst, mut at) = (0.0f64, 0);
    for k in 0..e.len() - 1 {
        let v = e[k + 1] - e[k];
        if k == 0 || v > worst {
            worst = v;
            at = k + 1;
        }
    }
    VerifierReport::new("energy_monotonicity", "max energy increase <= 1e-9 E(u0)", worst, tolerance, worst <= tolerance)
        .with_location(Location { slice: Some(at), ..Default::default() })
        .with_resolution(Resolution::of(slices))
}

/// `max_k d₂(u^{k+1},v^{k+1}) − d₂(u^k,v^k)`; PASS iff at most `1e-9`.
pub fn contraction_audit(a: &FlowTrace, b: &FlowTrace) -> Result<VerifierReport> {
    if a.slices().len() != b.slices().len() {
        return Err(Error::LengthMismatch { what: "trace slices", left: a.slices().len(), right: b.slices().len() });
    }
    if a.tau() != b.tau() {
        return Err(Error::invalid("tau", "contraction compares traces with equal time steps"));
    }
    let d: Vec<f64> = a
        .slices()
        .iter()
        .zip(b.slices())
        .map(|(u, v)| l2_distance(u, v))
        .collect::<Result<_>>()?;
    let tolerance = 1e-9;
    let (mut worst, mut at) = (0.0f64, 0);
    for k in 0..d.len() - 1 {
        let v = d[k + 1] - d[k];
        if k == 0 || v > worst {
            worst = v;
            at = k + 1;
        }
    }
    let series = d.iter().enumerate().map(|(k, x)| [k as f64, *x]).collect();
    Ok(VerifierReport::new("contraction", "max increase of d2(u^k, v^k) <= 1e-9", worst, tolerance, worst <= tolerance)
        .with_location(Location { slice: Some(at), ..Default::default() })
        .with_resolution(Resolution::of(a))
        .with_series("step, d2", series))
}

/// Energy bounds along a WED minimizer, relative to `E(u₀)`:
/// `δ₁ = Σ hⁿΔt |∂ₜu|² / E(u₀) − 1` and
/// `δ₂ = Σ_{j<J} Δt ∫|∇u_j|² / ((T + ε) E(u₀)) − 1`.
/// Reports `max(δ₁, δ₂)`; PASS iff at most `tolerance`.
pub fn wed_energy_bound(st: &SpaceTimeMap, tolerance: f64) -> VerifierReport {
    let slices = st.slices();
    let e0 = dirichlet_energy(&slices[0]);
    let last = slices.len() - 1;
    let grad: f64 = slices[..last].iter().map(|u| 2.0 * dirichlet_energy(u) * st.time_step()).sum();
    let horizon = last as f64 * st.time_step();
    let rel = |value: f64, bound: f64| {
        if bound > 0.0 {
            value / bound - 1.0
        } else if value > 0.0 {
            f64::MAX
        } else {
            0.0
        }
    };
    let d1 = rel(st.dissipation(), e0);
    let d2 = rel(grad, (horizon + st.epsilon()) * e0);
    let worst = d1.max(d2);
    VerifierReport::new("wed_energy_bound", "max relative excess over the energy bounds <= tolerance", worst, tolerance, worst <= tolerance)
        .with_resolution(Resolution::of(st))
        .with_note(format!("dissipation excess {d1:.6e}, gradient excess {d2:.6e}"))
}
