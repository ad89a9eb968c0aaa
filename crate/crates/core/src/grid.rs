//! Periodic flat grids, maps into a target space, and their discrete
//! Korevaar–Schoen energies.
//!
//! Nodes are indexed row-major: in two dimensions node `(i0, i1)` has index
//! `i0 * N + i1`, where axis 0 is the slow axis. All serialized arrays use
//! this order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::cat0::{TargetPoint, TargetSpace};
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Periodic grid on the flat torus `[0, L)ⁿ` with `N` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(rename = "n")]
    dim: usize,
    #[serde(rename = "N")]
    nodes_per_axis: usize,
    #[serde(rename = "L")]
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, nodes_per_axis: usize, length: f64) -> Result<Self> {
        let grid = Grid {
            dim,
            nodes_per_axis,
            length,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(Error::invalid("n", format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        if self.nodes_per_axis < 4 {
            return Err(Error::invalid(
                "N",
                format!("need at least 4 nodes per axis, got {}", self.nodes_per_axis),
            ));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::invalid("L", format!("side length must be positive, got {}", self.length)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Mesh width `h = L / N`.
    pub fn spacing(&self) -> f64 {
        self.length / self.nodes_per_axis as f64
    }

    /// `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.pow(self.dim as u32)
    }

    pub fn coords(&self, index: usize) -> [usize; 2] {
        let n = self.nodes_per_axis;
        if self.dim == 1 {
            [index, 0]
        } else {
            [index / n, index % n]
        }
    }

    pub fn index(&self, coords: [usize; 2]) -> usize {
        if self.dim == 1 {
            coords[0]
        } else {
            coords[0] * self.nodes_per_axis + coords[1]
        }
    }

    /// Periodic neighbor one step along `axis`, forward or backward.
    #[inline]
    pub fn neighbor(&self, index: usize, axis: usize, forward: bool) -> usize {
        let n = self.nodes_per_axis;
        let mut c = self.coords(index);
        c[axis] = if forward { (c[axis] + 1) % n } else { (c[axis] + n - 1) % n };
        self.index(c)
    }

    /// All `2n` neighbors: forward then backward along each axis.
    pub fn neighbors(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).flat_map(move |axis| {
            [self.neighbor(index, axis, true), self.neighbor(index, axis, false)]
        })
    }

    /// Physical position of a node.
    pub fn position(&self, index: usize) -> [f64; 2] {
        let c = self.coords(index);
        let h = self.spacing();
        [c[0] as f64 * h, if self.dim == 2 { c[1] as f64 * h } else { 0.0 }]
    }

    /// Signed minimal-image displacement from node `from` to node `to`.
    pub fn torus_offset(&self, from: usize, to: usize) -> [f64; 2] {
        let (a, b) = (self.position(from), self.position(to));
        let wrap = |d: f64| d - self.length * (d / self.length).round();
        [wrap(b[0] - a[0]), if self.dim == 2 { wrap(b[1] - a[1]) } else { 0.0 }]
    }

    pub fn torus_dist2(&self, from: usize, to: usize) -> f64 {
        let o = self.torus_offset(from, to);
        o[0] * o[0] + o[1] * o[1]
    }

    /// Nodes whose coordinate sum is even come first in red–black order.
    pub fn is_red(&self, index: usize) -> bool {
        let c = self.coords(index);
        (c[0] + c[1]) % 2 == 0
    }
}

/// A map from the grid into a target space, one point per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    grid: Grid,
    space: TargetSpace,
    values: Vec<TargetPoint>,
}

impl GridMap {
    pub fn new(grid: Grid, space: TargetSpace, values: Vec<TargetPoint>) -> Result<Self> {
        grid.validate()?;
        space.validate_descriptor()?;
        if values.len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                what: "grid map values",
                left: values.len(),
                right: grid.node_count(),
            });
        }
        for p in &values {
            space.validate(p)?;
        }
        Ok(GridMap { grid, space, values })
    }

    pub fn constant(grid: Grid, space: TargetSpace, value: TargetPoint) -> Result<Self> {
        let values = vec![value; grid.node_count()];
        Self::new(grid, space, values)
    }

    pub fn from_fn(
        grid: Grid,
        space: TargetSpace,
        f: impl FnMut(usize) -> TargetPoint,
    ) -> Result<Self> {
        let values = (0..grid.node_count()).map(f).collect();
        Self::new(grid, space, values)
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, space: TargetSpace, values: Vec<TargetPoint>) -> Self {
        GridMap { grid, space, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> &TargetSpace {
        &self.space
    }

    pub fn values(&self) -> &[TargetPoint] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [TargetPoint] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<TargetPoint> {
        self.values
    }

    pub fn value(&self, index: usize) -> &TargetPoint {
        &self.values[index]
    }

    pub fn compatible(&self, other: &GridMap) -> bool {
        self.grid == other.grid && self.space == other.space
    }

    pub fn ensure_compatible(&self, other: &GridMap) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Applies `f` to every value, keeping grid and space.
    pub fn map_values(&self, f: impl FnMut(&TargetPoint) -> TargetPoint) -> Result<GridMap> {
        let values = self.values.iter().map(f).collect();
        GridMap::new(self.grid, self.space.clone(), values)
    }

    /// Writes the NDJSON form: a header line, then one `{index, point}` line
    /// per node in row-major order.
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> Result<()> {
        let header = MapHeader {
            grid: self.grid,
            space: self.space.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        for (index, point) in self.values.iter().enumerate() {
            let line = NodeRecord { index, point: point.clone() };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
        }
        Ok(())
    }

    pub fn read_ndjson<R: BufRead>(input: R) -> Result<GridMap> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::CorruptTrace { line: 1, reason: "missing header".into() })?;
        let header: MapHeader = serde_json::from_str(&header?)
            .map_err(|e| Error::CorruptTrace { line: 1, reason: e.to_string() })?;
        let mut values = Vec::with_capacity(header.grid.node_count());
        for (k, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: NodeRecord = serde_json::from_str(&line)
                .map_err(|e| Error::CorruptTrace { line: k + 1, reason: e.to_string() })?;
            if rec.index != values.len() {
                return Err(Error::CorruptTrace {
                    line: k + 1,
                    reason: format!("expected node {}, found {}", values.len(), rec.index),
                });
            }
            values.push(rec.point);
        }
        GridMap::new(header.grid, header.space, values)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapHeader {
    grid: Grid,
    space: TargetSpace,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    index: usize,
    point: TargetPoint,
}

/// Nonnegative scalar field on a grid (an energy density).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    grid: Grid,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                what: "density values",
                left: values.len(),
                right: grid.node_count(),
            });
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("density", "densities must be nonnegative"));
        }
        Ok(DensityField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        DensityField {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `hⁿ Σ values`.
    pub fn integral(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        acc.extend(self.values.iter().copied());
        self.grid.cell_volume() * acc.value()
    }

    /// CSV with header `node_index,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "node_index,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{i},{v:?}")?;
        }
        Ok(())
    }
}

/// Discrete Dirichlet energy with forward differences and periodic wrap:
/// `E(u) = (hⁿ / 2) Σ_x Σ_i d²(u(x), u(x + h eᵢ)) / h²`.
pub fn dirichlet_energy(u: &GridMap) -> f64 {
    let grid = u.grid();
    let space = u.space();
    let h = grid.spacing();
    let mut acc = CompensatedSum::new();
    for x in 0..grid.node_count() {
        for axis in 0..grid.dim() {
            let y = grid.neighbor(x, axis, true);
            acc.add(dist2_valid(space, &u.values[x], &u.values[y]));
        }
    }
    0.5 * grid.cell_volume() * acc.value() / (h * h)
}

/// Symmetrized energy density
/// `Σᵢ [d²(u(x), u(x+heᵢ)) + d²(u(x), u(x−heᵢ))] / (2h²)`,
/// so that `hⁿ Σ density = 2 E(u)`.
pub fn energy_density(u: &GridMap) -> DensityField {
    let grid = u.grid();
    let space = u.space();
    let h2 = grid.spacing() * grid.spacing();
    let n = grid.node_count();
    // Edge values computed once and shared by both endpoints.
    let mut forward = vec![0.0; n * grid.dim()];
    for x in 0..n {
        for axis in 0..grid.dim() {
            let y = grid.neighbor(x, axis, true);
            forward[x * grid.dim() + axis] = dist2_valid(space, &u.values[x], &u.values[y]);
        }
    }
    let values = (0..n)
        .map(|x| {
            let mut s = 0.0;
            for axis in 0..grid.dim() {
                let back = grid.neighbor(x, axis, false);
                s += forward[x * grid.dim() + axis] + forward[back * grid.dim() + axis];
            }
            s / (2.0 * h2)
        })
        .collect();
    DensityField { grid: *grid, values }
}

/// `d₂(u, v) = (hⁿ Σ_x d²(u(x), v(x)))^{1/2}`.
pub fn l2_distance(u: &GridMap, v: &GridMap) -> Result<f64> {
    Ok(l2_distance_squared(u, v)?.sqrt())
}

pub fn l2_distance_squared(u: &GridMap, v: &GridMap) -> Result<f64> {
    u.ensure_compatible(v)?;
    let mut acc = CompensatedSum::new();
    for (p, q) in u.values.iter().zip(&v.values) {
        acc.add(u.space.dist2(p, q)?);
    }
    Ok(u.grid.cell_volume() * acc.value())
}

/// `|∂ₜu|²` from two slices: `d²(u_prev(x), u_next(x)) / Δt²`.
pub fn time_density(u_prev: &GridMap, u_next: &GridMap, dt: f64) -> Result<DensityField> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", format!("time step must be positive, got {dt}")));
    }
    u_prev.ensure_compatible(u_next)?;
    let values = u_prev
        .values
        .iter()
        .zip(&u_next.values)
        .map(|(p, q)| Ok(u_prev.space.dist2(p, q)? / (dt * dt)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityField {
        grid: u_prev.grid,
        values,
    })
}

/// Squared distance between two members of a validated map.
#[inline]
pub(crate) fn dist2_valid(space: &TargetSpace, p: &TargetPoint, q: &TargetPoint) -> f64 {
    space
        .dist2(p, q)
        .expect("grid map values are validated against the map's space")
}
