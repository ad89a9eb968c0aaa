//! Gaussian-weighted frequency of a flow at a space-time point.
//!
//! With `G` the backward heat kernel centered at `z₀ = (x₀, t₀)` and evaluated
//! at `t = t₀ − R²`,
//!
//! `E = 2R² hⁿ Σ G |∇u|²`, `H = hⁿ Σ G d²(u(x,t), u(z₀))`, `N = E / H`.
//!
//! Slices are interpolated linearly in `t` (for `E`, `H`) and geodesically
//! for `u(z₀)`. The kernel is cut off at six standard deviations, which must
//! fit in half the torus so that the periodic grid stands in for ℝⁿ.

use serde::{Deserialize, Serialize};

use super::{Location, Resolution, VerifierReport};
use crate::cat0::TargetPoint;
use crate::error::{Error, Result};
use crate::flow::TimeSlices;
use crate::grid::{dist2_valid, energy_density, GridMap};
use crate::sum::CompensatedSum;

/// Below this `H` the frequency is reported as degenerate.
pub const DEGENERATE_HEIGHT: f64 = 1e-14;
const MONOTONE_TOLERANCE: f64 = 5e-2;
const CALIBRATION_TOLERANCE: f64 = 2e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyValue {
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

/// Slice index and weight of `t` on the time grid.
fn locate(slices: &dyn TimeSlices, t: f64) -> Result<(usize, f64)> {
    let dt = slices.time_step();
    let last = slices.slices().len() - 1;
    let s = t / dt;
    if s < -1e-9 || s > last as f64 + 1e-9 {
        return Err(Error::Precondition(format!(
            "time {t} lies outside the trace [0, {}]",
            last as f64 * dt
        )));
    }
    let s = s.clamp(0.0, last as f64);
    let nearest = s.round();
    if (s - nearest).abs() <= 1e-9 {
        return Ok((nearest as usize, 0.0));
    }
    let j = (s.floor() as usize).min(last.saturating_sub(1));
    Ok((j, s - j as f64))
}

fn value_at(slices: &dyn TimeSlices, node: usize, t: f64) -> Result<TargetPoint> {
    let (j, theta) = locate(slices, t)?;
    let maps = slices.slices();
    if theta == 0.0 {
        return Ok(maps[j].value(node).clone());
    }
    slices.space().interp(maps[j].value(node), maps[j + 1].value(node), theta)
}

fn heights(u: &GridMap, kernel: &[(usize, f64)], center: &TargetPoint, radius: f64) -> (f64, f64) {
    let density = energy_density(u);
    let vol = u.grid().cell_volume();
    let (mut e, mut h) = (CompensatedSum::new(), CompensatedSum::new());
    for &(x, g) in kernel {
        e.add(g * density.values()[x]);
        h.add(g * dist2_valid(u.space(), u.value(x), center));
    }
    (2.0 * radius * radius * vol * e.value(), vol * h.value())
}

pub fn frequency(slices: &dyn TimeSlices, node: usize, t0: f64, radius: f64) -> Result<FrequencyValue> {
    let grid = *slices.grid();
    if node >= grid.node_count() {
        return Err(Error::invalid("node", format!("{node} is not a grid node")));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid("radius", "must be positive"));
    }
    let cutoff = 6.0 * std::f64::consts::SQRT_2 * radius;
    if cutoff > 0.5 * grid.length() {
        return Err(Error::Precondition(format!(
            "Gaussian collar 6 sigma = {cutoff} exceeds half the torus side {}",
            0.5 * grid.length()
        )));
    }
    let t = t0 - radius * radius;
    let (j, theta) = locate(slices, t)?;
    let center = value_at(slices, node, t0)?;

    let n = grid.dim() as i32;
    let norm = (4.0 * std::f64::consts::PI * radius * radius).powf(-0.5 * n as f64);
    let kernel: Vec<(usize, f64)> = (0..grid.node_count())
        .filter_map(|x| {
            let r2 = grid.torus_dist2(node, x);
            (r2 <= cutoff * cutoff).then(|| (x, norm * (-r2 / (4.0 * radius * radius)).exp()))
        })
        .collect();

    let maps = slices.slices();
    let (mut e, mut h) = heights(&maps[j], &kernel, &center, radius);
    if theta > 0.0 {
        let (e1, h1) = heights(&maps[j + 1], &kernel, &center, radius);
        e = (1.0 - theta) * e + theta * e1;
        h = (1.0 - theta) * h + theta * h1;
    }
    if h < DEGENERATE_HEIGHT {
        return Err(Error::DegenerateFrequency { height: h });
    }
    Ok(FrequencyValue { n: e / h, e, h })
}

fn check_resolvable(slices: &dyn TimeSlices, t0: f64, radii: &[f64]) -> Result<()> {
    let h = slices.grid().spacing();
    let (lo, hi) = (4.0 * h, 0.5 * t0.max(0.0).sqrt());
    for w in radii.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("radii", "must be strictly ascending"));
        }
    }
    for &r in radii {
        if r < lo * (1.0 - 1e-12) || r > hi * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "radius {r} is outside the resolvable range [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

/// `N(R)` over ascending radii; PASS iff no adjacent decrease exceeds `5e-2`.
pub fn frequency_profile(slices: &dyn TimeSlices, node: usize, t0: f64, radii: &[f64]) -> Result<VerifierReport> {
    if radii.is_empty() {
        return Err(Error::Empty("radii"));
    }
    check_resolvable(slices, t0, radii)?;
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| frequency(slices, node, t0, r).map(|f| f.n))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    let mut at = radii[0];
    for (i, w) in values.windows(2).enumerate() {
        let d = w[1] - w[0];
        if d < worst {
            worst = d;
            at = radii[i + 1];
        }
    }
    let violations = values.windows(2).filter(|w| w[1] - w[0] < -MONOTONE_TOLERANCE).count();
    let series = radii.iter().zip(&values).map(|(r, n)| [*r, *n]).collect();
    Ok(VerifierReport::new(
        "frequency_profile",
        "min adjacent change N(R_i+1) - N(R_i) >= -tolerance",
        worst,
        MONOTONE_TOLERANCE,
        violations == 0,
    )
    .with_location(Location { node: Some(node), time: Some(t0), radius: Some(at), ..Default::default() })
    .with_resolution(Resolution::of(slices))
    .with_series("R, N", series)
    .with_note(format!("{violations} adjacent decrease(s) beyond tolerance")))
}

/// Largest deviation `|N(R) − 1|` over the radii; PASS iff at most `2e-2`.
pub fn frequency_calibration(slices: &dyn TimeSlices, node: usize, t0: f64, radii: &[f64]) -> Result<VerifierReport> {
    check_resolvable(slices, t0, radii)?;
    let mut series = Vec::with_capacity(radii.len());
    let (mut worst, mut at) = (0.0f64, radii.first().copied().unwrap_or(0.0));
    for &r in radii {
        let n = frequency(slices, node, t0, r)?.n;
        series.push([r, n]);
        if (n - 1.0).abs() > worst {
            worst = (n - 1.0).abs();
            at = r;
        }
    }
    Ok(VerifierReport::new("frequency_calibration", "max |N(R) - 1| <= tolerance", worst, CALIBRATION_TOLERANCE, worst <= CALIBRATION_TOLERANCE)
        .with_location(Location { node: Some(node), time: Some(t0), radius: Some(at), ..Default::default() })
        .with_resolution(Resolution::of(slices))
        .with_series("R, N", series))
}

/// `min N` over sample points and radii; PASS iff at least `1 − 5e-2`.
/// Points where `H` degenerates are skipped and counted in the note; an
/// audit where every point degenerates is an error.
pub fn frequency_lower_bound(slices: &dyn TimeSlices, points: &[(usize, f64)], radii: &[f64]) -> Result<VerifierReport> {
    let mut worst = f64::INFINITY;
    let mut location = Location::default();
    let (mut evaluated, mut degenerate) = (0usize, 0usize);
    let mut series = Vec::new();
    for &(node, t0) in points {
        check_resolvable(slices, t0, radii)?;
        for &r in radii {
            match frequency(slices, node, t0, r) {
                Ok(f) => {
                    evaluated += 1;
                    series.push([r, f.n]);
                    if f.n < worst {
                        worst = f.n;
                        location = Location { node: Some(node), time: Some(t0), radius: Some(r), ..Default::default() };
                    }
                }
                Err(Error::DegenerateFrequency { .. }) => degenerate += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::DegenerateFrequency { height: 0.0 });
    }
    let bound = 1.0 - MONOTONE_TOLERANCE;
    Ok(VerifierReport::new("frequency_lower_bound", "min N >= 1 - 5e-2", worst, bound, worst >= bound)
        .with_location(location)
        .with_resolution(Resolution::of(slices))
        .with_series("R, N", series)
        .with_note(format!("{evaluated} evaluations, {degenerate} degenerate point(s) skipped")))
}
