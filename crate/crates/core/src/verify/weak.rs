//! Weak-form pairings of energy densities against bump test functions.
//!
//! A differential inequality `P f ≥ 0` with
//! `P = a_tt ∂ₜ² − a_t ∂ₜ + a_lap Δ` holds weakly iff
//! `Σ f · (a_tt D²η + a_t Dη + a_lap Δ_h η) hⁿ Δt ≥ 0` for every bump
//! `η ≥ 0`, where `D` and `D²` are centered time differences and `Δ_h` the
//! 2n-point stencil. Bumps vanish on the first and last two slices, so
//! moving the stencils back onto `f` ([`strong_pairing`]) is an exact finite
//! rearrangement.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Location, Resolution, VerifierReport};
use crate::error::{Error, Result};
use crate::flow::TimeSlices;
use crate::grid::{dist2_valid, energy_density, time_density, Grid};
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeakField {
    /// `|∇u|²`, the symmetrized energy density of each slice.
    GradDensity,
    /// `|∂ₜu|²` from the forward difference `d²(u_j, u_{j+1}) / Δt²`.
    TimeDensity,
    /// `d²(u(x, t_j), u(x, t_{j+δ}))`.
    PairDistance { delta: usize },
}

impl fmt::Display for WeakField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeakField::GradDensity => write!(f, "grad_density"),
            WeakField::TimeDensity => write!(f, "time_density"),
            WeakField::PairDistance { delta } => write!(f, "pair_distance({delta})"),
        }
    }
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// Coefficients of `a_tt ∂ₜ² − a_t ∂ₜ + a_lap Δ + a_0`. The zeroth-order
/// term is off by default; it stands in for curvature constants of a
/// non-flat domain in sensitivity runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub a_tt: f64,
    pub a_t: f64,
    pub a_lap: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub a_0: f64,
}

impl Coefficients {
    pub const fn new(a_tt: f64, a_t: f64, a_lap: f64) -> Self {
        Coefficients { a_tt, a_t, a_lap, a_0: 0.0 }
    }

    pub const fn with_zeroth(mut self, a_0: f64) -> Self {
        self.a_0 = a_0;
        self
    }
}

impl fmt::Display for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{}", self.a_tt, self.a_t, self.a_lap)?;
        if self.a_0 != 0.0 {
            write!(f, ",{}", self.a_0)?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    #[default]
    TensorBumps,
}

/// Bump center in physical coordinates; unused axes are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpCenter {
    pub position: [f64; 2],
    pub time: f64,
}

/// Physical support radii of a bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpRadii {
    pub space: f64,
    pub time: f64,
}

/// Tensor product of hat-squared profiles `(1 − |s|/r)²₊`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: BumpCenter,
    pub radii: BumpRadii,
}

fn hat_squared(s: f64) -> f64 {
    let a = 1.0 - s.abs();
    if a > 0.0 {
        a * a
    } else {
        0.0
    }
}

impl Bump {
    pub fn spatial(&self, grid: &Grid, node: usize) -> f64 {
        let p = grid.position(node);
        let l = grid.length();
        (0..grid.dim())
            .map(|a| {
                let d = (p[a] - self.center.position[a] + 0.5 * l).rem_euclid(l) - 0.5 * l;
                hat_squared(d / self.radii.space)
            })
            .product()
    }

    pub fn temporal(&self, t: f64) -> f64 {
        hat_squared((t - self.center.time) / self.radii.time)
    }

    /// Slices where the bump can be nonzero, widened by one for stencils.
    fn slice_window(&self, dt: f64, last: usize) -> (usize, usize) {
        let lo = ((self.center.time - self.radii.time) / dt).floor() - 1.0;
        let hi = ((self.center.time + self.radii.time) / dt).ceil() + 1.0;
        (lo.max(0.0) as usize, (hi.max(0.0) as usize).min(last))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionFamily {
    #[serde(default)]
    pub kind: FamilyKind,
    pub centers: Vec<BumpCenter>,
    pub radii: Vec<BumpRadii>,
    /// Seed that placed the centers, if they were drawn at random.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn time_window(dt: f64, last: usize, radii: &[BumpRadii]) -> Result<(f64, f64)> {
    let rt = radii.iter().map(|r| r.time).fold(0.0, f64::max);
    let (lo, hi) = (dt + rt, (last as f64 - 1.0) * dt - rt);
    if lo > hi {
        return Err(Error::Precondition(format!(
            "temporal radius {rt} does not fit between the boundary slices of a {last}-step trace"
        )));
    }
    Ok((lo, hi))
}

impl TestFunctionFamily {
    /// Centers on a regular sublattice: `per_axis` positions per spatial axis
    /// (on nodes) times `per_time` times spread over the admissible window.
    pub fn lattice(grid: &Grid, dt: f64, last: usize, per_axis: usize, per_time: usize, radii: Vec<BumpRadii>) -> Result<Self> {
        if per_axis == 0 || per_time == 0 || radii.is_empty() {
            return Err(Error::invalid("family", "needs at least one center and one radius"));
        }
        let (lo, hi) = time_window(dt, last, &radii)?;
        let times: Vec<f64> = if per_time == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            (0..per_time).map(|k| lo + (hi - lo) * k as f64 / (per_time - 1) as f64).collect()
        };
        let nodes = grid.nodes_per_axis();
        let axis: Vec<f64> = (0..per_axis)
            .map(|k| ((k * nodes) / per_axis) as f64 * grid.spacing())
            .collect();
        let ys: Vec<f64> = if grid.dim() == 2 { axis.clone() } else { vec![0.0] };
        let mut centers = Vec::new();
        for &time in &times {
            for &x in &axis {
                for &y in &ys {
                    centers.push(BumpCenter { position: [x, y], time });
                }
            }
        }
        Ok(TestFunctionFamily { kind: FamilyKind::TensorBumps, centers, radii, seed: None })
    }

    /// `count` centers drawn uniformly from the admissible region.
    pub fn random(grid: &Grid, dt: f64, last: usize, count: usize, radii: Vec<BumpRadii>, seed: u64) -> Result<Self> {
        let (lo, hi) = time_window(dt, last, &radii)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = grid.length();
        let centers = (0..count)
            .map(|_| {
                let x = rng.random_range(0.0..l);
                let y = if grid.dim() == 2 { rng.random_range(0.0..l) } else { 0.0 };
                BumpCenter { position: [x, y], time: rng.random_range(lo..=hi) }
            })
            .collect();
        Ok(TestFunctionFamily { kind: FamilyKind::TensorBumps, centers, radii, seed: Some(seed) })
    }

    pub fn members(&self) -> impl Iterator<Item = Bump> + '_ {
        self.centers
            .iter()
            .flat_map(move |c| self.radii.iter().map(move |r| Bump { center: *c, radii: *r }))
    }

    pub fn len(&self) -> usize {
        self.centers.len() * self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every member must vanish on slices `0, 1, J−1, J` and fit in the torus.
    pub fn validate(&self, grid: &Grid, dt: f64, last: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Empty("test function family"));
        }
        let slack = 1e-9 * dt;
        for b in self.members() {
            let r = b.radii;
            if !(r.space > 0.0 && r.time > 0.0) {
                return Err(Error::invalid("family.radii", "radii must be positive"));
            }
            if 2.0 * r.space > grid.length() {
                return Err(Error::Precondition(format!(
                    "spatial radius {} wraps around a torus of side {}",
                    r.space,
                    grid.length()
                )));
            }
            let t = b.center.time;
            if t - r.time < dt - slack || t + r.time > (last as f64 - 1.0) * dt + slack {
                return Err(Error::Precondition(format!(
                    "test function centered at t = {t} with radius {} touches the temporal boundary",
                    r.time
                )));
            }
        }
        Ok(())
    }
}

/// A scalar field sampled on some of the slices of a trace.
#[derive(Debug, Clone)]
pub struct FieldSamples {
    grid: Grid,
    dt: f64,
    values: Vec<Option<Vec<f64>>>,
}

impl FieldSamples {
    pub fn from_values(grid: Grid, dt: f64, values: Vec<Option<Vec<f64>>>) -> Result<Self> {
        for v in values.iter().flatten() {
            if v.len() != grid.node_count() {
                return Err(Error::LengthMismatch { what: "field slice", left: v.len(), right: grid.node_count() });
            }
        }
        Ok(FieldSamples { grid, dt, values })
    }

    pub fn last_slice(&self) -> usize {
        self.values.len() - 1
    }

    pub fn slice(&self, j: usize) -> Result<&[f64]> {
        self.values
            .get(j)
            .and_then(|v| v.as_deref())
            .ok_or_else(|| Error::Precondition(format!("field is not available on slice {j}")))
    }

    fn sup_on(&self, j0: usize, j1: usize) -> f64 {
        (j0..=j1)
            .filter_map(|j| self.values[j].as_ref())
            .flat_map(|v| v.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub fn field_samples(slices: &dyn TimeSlices, field: WeakField) -> Result<FieldSamples> {
    let maps = slices.slices();
    let dt = slices.time_step();
    let last = maps.len() - 1;
    let values = match field {
        WeakField::GradDensity => maps.iter().map(|u| Some(energy_density(u).values().to_vec())).collect(),
        WeakField::TimeDensity => (0..=last)
            .map(|j| {
                (j < last)
                    .then(|| time_density(&maps[j], &maps[j + 1], dt).map(|d| d.values().to_vec()))
                    .transpose()
            })
            .collect::<Result<_>>()?,
        WeakField::PairDistance { delta } => {
            if delta == 0 {
                return Err(Error::invalid("delta", "must be at least 1"));
            }
            let space = slices.space();
            (0..=last)
                .map(|j| {
                    (j + delta <= last).then(|| {
                        maps[j]
                            .values()
                            .iter()
                            .zip(maps[j + delta].values())
                            .map(|(p, q)| dist2_valid(space, p, q))
                            .collect()
                    })
                })
                .collect()
        }
    };
    FieldSamples::from_values(*slices.grid(), dt, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pairing {
    pub value: f64,
    pub eta_l1: f64,
    /// `sup |f|` over the slices the stencil touches.
    pub f_sup: f64,
}

impl Pairing {
    /// `value / (‖f‖_∞ ‖η‖₁)`, zero when the field vanishes on the support.
    pub fn normalized(&self) -> f64 {
        let scale = self.f_sup * self.eta_l1;
        if scale > 0.0 {
            self.value / scale
        } else {
            0.0
        }
    }
}

fn eta_table(grid: &Grid, dt: f64, bump: &Bump, j0: usize, j1: usize) -> (Vec<f64>, Vec<f64>) {
    let spatial = (0..grid.node_count()).map(|x| bump.spatial(grid, x)).collect();
    let temporal = (j0..=j1).map(|j| bump.temporal(j as f64 * dt)).collect();
    (spatial, temporal)
}

fn lap(grid: &Grid, v: &[f64], x: usize) -> f64 {
    let h2 = grid.spacing() * grid.spacing();
    (0..grid.dim())
        .map(|a| v[grid.neighbor(x, a, true)] + v[grid.neighbor(x, a, false)] - 2.0 * v[x])
        .sum::<f64>()
        / h2
}

/// `Σ f · (a_tt D²η + a_t Dη + a_lap Δ_h η + a_0 η) hⁿ Δt` for one bump.
pub fn weak_pairing(samples: &FieldSamples, bump: &Bump, c: Coefficients) -> Result<Pairing> {
    let grid = &samples.grid;
    let dt = samples.dt;
    let last = samples.last_slice();
    let (j0, j1) = bump.slice_window(dt, last);
    let (space, time) = eta_table(grid, dt, bump, j0, j1);
    let tt = |j: usize| if j < j0 || j > j1 { 0.0 } else { time[j - j0] };
    let lap_space: Vec<f64> = (0..grid.node_count()).map(|x| lap(grid, &space, x)).collect();
    let w = grid.cell_volume() * dt;
    let mut value = CompensatedSum::new();
    let mut l1 = CompensatedSum::new();
    for j in j0..=j1 {
        let prev = if j == 0 { 0.0 } else { tt(j - 1) };
        let (cur, next) = (tt(j), tt(j + 1));
        let d2 = (next - 2.0 * cur + prev) / (dt * dt);
        let d1 = (next - prev) / (2.0 * dt);
        if cur == 0.0 && d2 == 0.0 && d1 == 0.0 {
            continue;
        }
        let f = samples.slice(j)?;
        for x in 0..grid.node_count() {
            let op = (c.a_tt * d2 + c.a_t * d1 + c.a_0 * cur) * space[x] + c.a_lap * cur * lap_space[x];
            value.add(f[x] * op * w);
            l1.add(space[x] * cur * w);
        }
    }
    Ok(Pairing { value: value.value(), eta_l1: l1.value(), f_sup: samples.sup_on(j0, j1) })
}

/// The same pairing with the stencils applied to `f`:
/// `Σ η · (a_tt D²f − a_t Df + a_lap Δ_h f + a_0 f) hⁿ Δt`.
pub fn strong_pairing(samples: &FieldSamples, bump: &Bump, c: Coefficients) -> Result<f64> {
    let grid = &samples.grid;
    let dt = samples.dt;
    let (j0, j1) = bump.slice_window(dt, samples.last_slice());
    let (space, time) = eta_table(grid, dt, bump, j0, j1);
    let w = grid.cell_volume() * dt;
    let mut value = CompensatedSum::new();
    for j in j0..=j1 {
        let eta_t = time[j - j0];
        if eta_t == 0.0 {
            continue;
        }
        let before = j
            .checked_sub(1)
            .ok_or_else(|| Error::Precondition("test function is nonzero on slice 0".into()))?;
        let (fp, f, fn_) = (samples.slice(before)?, samples.slice(j)?, samples.slice(j + 1)?);
        for x in 0..grid.node_count() {
            let d2 = (fn_[x] - 2.0 * f[x] + fp[x]) / (dt * dt);
            let d1 = (fn_[x] - fp[x]) / (2.0 * dt);
            let op = c.a_tt * d2 - c.a_t * d1 + c.a_lap * lap(grid, f, x) + c.a_0 * f[x];
            value.add(space[x] * eta_t * op * w);
        }
    }
    Ok(value.value())
}

/// Minimum normalized pairing over the family; PASS iff it is at least
/// `−tolerance`.
pub fn weak_parabolic_residual(
    slices: &dyn TimeSlices,
    field: WeakField,
    coefficients: Coefficients,
    family: &TestFunctionFamily,
    tolerance: f64,
) -> Result<VerifierReport> {
    let last = slices.slices().len() - 1;
    family.validate(slices.grid(), slices.time_step(), last)?;
    let samples = field_samples(slices, field)?;
    let mut worst = f64::INFINITY;
    let mut location = Location::default();
    let mut series = Vec::with_capacity(family.len());
    for (k, bump) in family.members().enumerate() {
        let p = weak_pairing(&samples, &bump, coefficients)?;
        let v = p.normalized();
        series.push([k as f64, v]);
        if v < worst {
            worst = v;
            let grid = slices.grid();
            let c = bump.center;
            let node_of = |x: f64| ((x / grid.spacing()).round() as usize) % grid.nodes_per_axis();
            let coords = [node_of(c.position[0]), if grid.dim() == 2 { node_of(c.position[1]) } else { 0 }];
            location = Location {
                node: Some(grid.index(coords)),
                slice: Some((c.time / slices.time_step()).round() as usize),
                time: Some(c.time),
                radius: Some(bump.radii.space),
                member: Some(k),
                detail: Some(format!("temporal radius {}", bump.radii.time)),
            };
        }
    }
    let id = format!("weak_{field}_{coefficients}");
    let mut report = VerifierReport::new(
        id,
        "min over the family of pairing / (sup|f| * |eta|_1) >= -tolerance",
        worst,
        tolerance,
        worst >= -tolerance,
    )
    .with_location(location)
    .with_resolution(Resolution::of(slices))
    .with_series("member, normalized pairing", series);
    if let Some(seed) = family.seed {
        report = report.with_seed(seed);
    }
    Ok(report)
}

impl Default for Coefficients {
    fn default() -> Self {
        Coefficients::new(0.0, 1.0, 1.0)
    }
}

/// Compares violation magnitudes `max(0, −worst)` of the same audit at two
/// resolutions; PASS iff the finer one is not larger.
pub fn refinement_report(id: impl Into<String>, coarse: &VerifierReport, fine: &VerifierReport) -> VerifierReport {
    let vc = (-coarse.worst_value).max(0.0);
    let vf = (-fine.worst_value).max(0.0);
    let h = |r: &VerifierReport| r.resolution.map(|r| r.h).unwrap_or(f64::NAN);
    VerifierReport::new(
        id,
        "violation at the fine resolution <= violation at the coarse resolution",
        vf,
        vc,
        vf <= vc,
    )
    .with_series("h, violation magnitude", vec![[h(coarse), vc], [h(fine), vf]])
}
