//! Scaling of `|∇u|²` and `|∂ₜu|²` on parabolic cylinders
//! `P_r(z₀) = B_r(x₀) × (t₀ − r², t₀ + r²)`.

use serde::{Deserialize, Serialize};

use super::{Location, Resolution, VerifierReport};
use crate::error::{Error, Result};
use crate::flow::{wed_minimize, SolverOptions, SpaceTimeMap, TimeSlices};
use crate::grid::{dirichlet_energy, energy_density, time_density, GridMap};

/// Largest admissible ratio `max/min` of the constants across a scan.
pub const SCAN_RATIO: f64 = 4.0;
/// Largest admissible growth of a scan maximum under one refinement.
pub const REFINEMENT_GROWTH: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderCenter {
    pub node: usize,
    pub time: f64,
}

/// Slices with `|t_j − t₀| ≤ r²`, after checking the cylinder fits in time
/// (`upper` is the last slice the field is defined on) and space.
fn cylinder(slices: &dyn TimeSlices, c: &CylinderCenter, r: f64, upper: usize) -> Result<Vec<usize>> {
    let dt = slices.time_step();
    let (lo, hi) = (c.time - r * r, c.time + r * r);
    let slack = 1e-9 * dt;
    if lo < -slack || hi > upper as f64 * dt + slack {
        return Err(Error::Precondition(format!(
            "cylinder of radius {r} at t = {} exits the time range [0, {}]",
            c.time,
            upper as f64 * dt
        )));
    }
    if 2.0 * r > slices.grid().length() {
        return Err(Error::Precondition(format!("cylinder radius {r} wraps around the torus")));
    }
    if c.node >= slices.grid().node_count() {
        return Err(Error::invalid("center.node", format!("{} is not a grid node", c.node)));
    }
    Ok((0..=upper).filter(|&j| (j as f64 * dt - c.time).abs() <= r * r + slack).collect())
}

fn ball(slices: &dyn TimeSlices, node: usize, r: f64) -> Vec<usize> {
    let g = slices.grid();
    (0..g.node_count()).filter(|&x| g.torus_dist2(node, x) <= r * r * (1.0 + 1e-12)).collect()
}

/// `max_{z₀} sup_{P_r(z₀)} |∇u|² / ([ε/r^{n+2} + 1/rⁿ] E(u₀))`.
pub fn lipschitz_constant(st: &SpaceTimeMap, centers: &[CylinderCenter], r: f64) -> Result<(f64, Location)> {
    let eps = st.epsilon();
    if eps > r * r * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("epsilon {eps} exceeds r^2 = {}", r * r)));
    }
    let maps = st.slices();
    let e0 = dirichlet_energy(&maps[0]);
    let n = st.grid().dim() as i32;
    let bound = (eps / r.powi(n + 2) + 1.0 / r.powi(n)) * e0;
    let densities: Vec<_> = maps.iter().map(energy_density).collect();
    let mut best = (0.0f64, Location::default());
    for c in centers {
        let nodes = ball(st, c.node, r);
        for j in cylinder(st, c, r, maps.len() - 1)? {
            for &x in &nodes {
                let v = densities[j].values()[x];
                let ratio = if bound > 0.0 { v / bound } else { 0.0 };
                if ratio > best.0 {
                    best = (ratio, Location { node: Some(x), slice: Some(j), radius: Some(r), ..Default::default() });
                }
            }
        }
    }
    Ok(best)
}

/// `max_{z₀} sup_{P_r(z₀)} |∂ₜu|² r^{n+2} / E(u₀)`, with `|∂ₜu|²` the forward
/// difference quotient.
pub fn harnack_constant(slices: &dyn TimeSlices, centers: &[CylinderCenter], r: f64) -> Result<(f64, Location)> {
    let maps = slices.slices();
    let e0 = dirichlet_energy(&maps[0]);
    let n = slices.grid().dim() as i32;
    let scale = if e0 > 0.0 { r.powi(n + 2) / e0 } else { 0.0 };
    let mut best = (0.0f64, Location::default());
    let upper = maps.len() - 2;
    for c in centers {
        let nodes = ball(slices, c.node, r);
        for j in cylinder(slices, c, r, upper)? {
            let td = time_density(&maps[j], &maps[j + 1], slices.time_step())?;
            for &x in &nodes {
                let v = td.values()[x] * scale;
                if v > best.0 {
                    best = (v, Location { node: Some(x), slice: Some(j), radius: Some(r), ..Default::default() });
                }
            }
        }
    }
    Ok(best)
}

/// PASS iff `max/min ≤ 4` over the `(r, constant)` table.
pub fn scan_ratio_report(id: impl Into<String>, series: Vec<[f64; 2]>) -> VerifierReport {
    let max = series.iter().map(|p| p[1]).fold(0.0, f64::max);
    let min = series.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let ratio = if max == 0.0 {
        1.0
    } else if min > 0.0 {
        max / min
    } else {
        f64::MAX
    };
    // Direction matters for reading a FAIL: decay towards small r is
    // compatible with an upper bound, growth is not.
    let by_r = |pick: fn(f64, f64) -> bool| {
        series.iter().copied().reduce(|a, b| if pick(b[0], a[0]) { b } else { a }).map(|p| p[1])
    };
    let trend = match (by_r(|a, b| a < b), by_r(|a, b| a > b)) {
        (Some(small), Some(large)) if large > 0.0 => small / large,
        _ => 1.0,
    };
    VerifierReport::new(id, "max/min of the scaled constant across the scan <= 4", ratio, SCAN_RATIO, ratio <= SCAN_RATIO)
        .with_note(format!(
            "max constant {max:.6e}, min constant {min:.6e}, constant at smallest r / at largest r = {trend:.4e}"
        ))
        .with_series("r, constant", series)
}

/// PASS iff the fine scan maximum exceeds the coarse one by at most 25%.
pub fn refinement_growth_report(id: impl Into<String>, coarse: f64, fine: f64) -> VerifierReport {
    let growth = if coarse > 0.0 { fine / coarse } else if fine > 0.0 { f64::MAX } else { 1.0 };
    VerifierReport::new(id, "fine/coarse scan maximum <= 1.25", growth, REFINEMENT_GROWTH, growth <= REFINEMENT_GROWTH)
        .with_series("level, maximum", vec![[0.0, coarse], [1.0, fine]])
}

fn scan(
    id: &str,
    slices: &dyn TimeSlices,
    radii: &[f64],
    mut constant: impl FnMut(f64) -> Result<(f64, Location)>,
) -> Result<VerifierReport> {
    if radii.is_empty() {
        return Err(Error::Empty("radii"));
    }
    let mut series = Vec::with_capacity(radii.len());
    let mut top = (f64::NEG_INFINITY, Location::default());
    for &r in radii {
        let (c, loc) = constant(r)?;
        series.push([r, c]);
        if c > top.0 {
            top = (c, loc);
        }
    }
    Ok(scan_ratio_report(id, series).with_location(top.1).with_resolution(Resolution::of(slices)))
}

/// Lipschitz constants of one WED minimizer over several radii.
pub fn lipschitz_scan(st: &SpaceTimeMap, centers: &[CylinderCenter], radii: &[f64]) -> Result<VerifierReport> {
    scan("lipschitz_scan", st, radii, |r| lipschitz_constant(st, centers, r))
}

/// Harnack-scaled time-derivative bounds over several radii.
pub fn harnack_scan(slices: &dyn TimeSlices, centers: &[CylinderCenter], radii: &[f64]) -> Result<VerifierReport> {
    scan("harnack_scan", slices, radii, |r| harnack_constant(slices, centers, r))
}

/// Lipschitz and Harnack scans with one WED solve per radius: `ε = r²`,
/// `Δt = ε/4` and horizon `max(10ε, t₀ + r² + Δt)`, so that every cylinder
/// (including the forward difference of the Harnack field) fits.
pub fn epsilon_scaled_scan(
    u0: &GridMap,
    centers: &[CylinderCenter],
    radii: &[f64],
    opts: &SolverOptions,
) -> Result<(VerifierReport, VerifierReport)> {
    if radii.is_empty() {
        return Err(Error::Empty("radii"));
    }
    if centers.is_empty() {
        return Err(Error::Empty("cylinder centers"));
    }
    let latest = centers.iter().map(|c| c.time).fold(f64::NEG_INFINITY, f64::max);
    let (mut lip, mut har) = (Vec::new(), Vec::new());
    let (mut lip_top, mut har_top) = ((f64::NEG_INFINITY, Location::default()), (f64::NEG_INFINITY, Location::default()));
    let mut resolution = None;
    let mut sweeps = Vec::new();
    for &r in radii {
        let eps = r * r;
        let dt = eps / 4.0;
        let horizon = (10.0 * eps).max(latest + eps + dt);
        let st = wed_minimize(u0, eps, dt, horizon, opts)?;
        let (c, mut loc) = lipschitz_constant(&st, centers, r)?;
        let (hc, mut hloc) = harnack_constant(&st, centers, r)?;
        loc.time = loc.slice.map(|j| st.time(j));
        hloc.time = hloc.slice.map(|j| st.time(j));
        lip.push([r, c]);
        har.push([r, hc]);
        if c > lip_top.0 {
            lip_top = (c, loc);
        }
        if hc > har_top.0 {
            har_top = (hc, hloc);
        }
        resolution.get_or_insert(Resolution::of(&st));
        sweeps.push(st.sweeps());
    }
    let note = |r: VerifierReport| {
        let prev = r.note.clone().unwrap_or_default();
        r.with_note(format!("{prev}; one WED solve per r with eps = r^2, dt = eps/4; sweeps {sweeps:?}"))
    };
    let mut a = note(scan_ratio_report("lipschitz_scan", lip).with_location(lip_top.1));
    let mut b = note(scan_ratio_report("harnack_scan", har).with_location(har_top.1));
    if let Some(res) = resolution {
        a = a.with_resolution(res);
        b = b.with_resolution(res);
    }
    Ok((a, b))
}
