//! NDJSON persistence for traces and CSV export of diagnostics.
//!
//! A trace file is one header line followed by one record per slice. Each
//! slice record carries the map values, the stored diagnostics and the
//! per-node energy density, so that a replay can recompute every derived
//! number from the values and compare bit for bit.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{FlowTrace, SliceDiagnostics, SpaceTimeMap, TimeSlices};
use crate::cat0::{TargetPoint, TargetSpace};
use crate::error::{Error, Result};
use crate::grid::{energy_density, Grid, GridMap};

pub const TRACE_SCHEMA: &str = "npcflow.trace";
pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Flow,
    Wed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub schema: String,
    pub schema_version: u32,
    /// Version of the crate that wrote the file; informational only.
    pub producer: String,
    pub kind: TraceKind,
    pub grid: Grid,
    pub space: TargetSpace,
    pub time_step: f64,
    pub slices: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wed: Option<WedSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WedSummary {
    pub epsilon: f64,
    pub horizon: f64,
    pub functional: f64,
    pub sweeps: usize,
    pub residual: f64,
    pub dissipation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceRecord {
    pub slice: usize,
    pub time: f64,
    pub diagnostics: SliceDiagnostics,
    pub density: Vec<f64>,
    pub values: Vec<TargetPoint>,
}

/// Everything read back from a trace file, before any consistency check.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredTrace {
    pub header: TraceHeader,
    pub records: Vec<SliceRecord>,
}

fn header_for(kind: TraceKind, slices: &dyn TimeSlices, wed: Option<WedSummary>) -> TraceHeader {
    TraceHeader {
        schema: TRACE_SCHEMA.to_string(),
        schema_version: TRACE_SCHEMA_VERSION,
        producer: format!("npcflow {}", env!("CARGO_PKG_VERSION")),
        kind,
        grid: *slices.grid(),
        space: slices.space().clone(),
        time_step: slices.time_step(),
        slices: slices.slices().len(),
        wed,
    }
}

fn write_records<W: Write>(
    out: &mut W,
    header: &TraceHeader,
    slices: &[GridMap],
    diagnostics: &[SliceDiagnostics],
) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string(header)?)?;
    for (j, (slice, diag)) in slices.iter().zip(diagnostics).enumerate() {
        let record = SliceRecord {
            slice: j,
            time: j as f64 * header.time_step,
            diagnostics: *diag,
            density: energy_density(slice).values().to_vec(),
            values: slice.values().to_vec(),
        };
        writeln!(out, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}

impl FlowTrace {
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> Result<()> {
        let header = header_for(TraceKind::Flow, self, None);
        write_records(&mut out, &header, self.slices(), self.diagnostics())
    }
}

impl SpaceTimeMap {
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> Result<()> {
        let summary = WedSummary {
            epsilon: self.epsilon(),
            horizon: self.horizon(),
            functional: self.functional(),
            sweeps: self.sweeps(),
            residual: self.residual(),
            dissipation: self.dissipation(),
        };
        let header = header_for(TraceKind::Wed, self, Some(summary));
        write_records(&mut out, &header, self.slices(), self.diagnostics())
    }
}

/// Parses a trace file. Structural damage (bad JSON, wrong schema, missing
/// or out-of-order slices, invalid points) is an error; numeric consistency
/// is left to the caller.
pub fn read_trace<R: BufRead>(input: R) -> Result<StoredTrace> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::CorruptTrace { line: 1, reason: "empty file".into() })??;
    let header: TraceHeader = serde_json::from_str(&first)
        .map_err(|e| Error::CorruptTrace { line: 1, reason: e.to_string() })?;
    if header.schema != TRACE_SCHEMA {
        return Err(Error::CorruptTrace {
            line: 1,
            reason: format!("unknown schema `{}`", header.schema),
        });
    }
    if header.schema_version != TRACE_SCHEMA_VERSION {
        return Err(Error::CorruptTrace {
            line: 1,
            reason: format!(
                "schema version {} is not supported (expected {TRACE_SCHEMA_VERSION})",
                header.schema_version
            ),
        });
    }
    header
        .grid
        .validate()
        .map_err(|e| Error::CorruptTrace { line: 1, reason: e.to_string() })?;
    let mut records = Vec::with_capacity(header.slices);
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SliceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::CorruptTrace { line: lineno, reason: e.to_string() })?;
        if rec.slice != records.len() {
            return Err(Error::CorruptTrace {
                line: lineno,
                reason: format!("expected slice {}, found {}", records.len(), rec.slice),
            });
        }
        let n = header.grid.node_count();
        if rec.values.len() != n || rec.density.len() != n {
            return Err(Error::CorruptTrace {
                line: lineno,
                reason: format!("slice {} has the wrong node count", rec.slice),
            });
        }
        for p in &rec.values {
            header
                .space
                .validate(p)
                .map_err(|e| Error::CorruptTrace { line: lineno, reason: e.to_string() })?;
        }
        records.push(rec);
    }
    if records.len() != header.slices {
        return Err(Error::CorruptTrace {
            line: records.len() + 2,
            reason: format!("truncated: {} of {} slices present", records.len(), header.slices),
        });
    }
    Ok(StoredTrace { header, records })
}

impl StoredTrace {
    pub fn maps(&self) -> Vec<GridMap> {
        self.records
            .iter()
            .map(|r| GridMap::from_parts_unchecked(self.header.grid, self.header.space.clone(), r.values.clone()))
            .collect()
    }

    pub fn stored_diagnostics(&self) -> Vec<SliceDiagnostics> {
        self.records.iter().map(|r| r.diagnostics).collect()
    }

    /// Rebuilds a flow trace with the stored diagnostics.
    pub fn into_flow_trace(self) -> Result<FlowTrace> {
        let diagnostics = self.stored_diagnostics();
        let maps = self.maps();
        Ok(FlowTrace::from_parts(
            self.header.grid,
            self.header.space,
            self.header.time_step,
            maps,
            diagnostics,
        ))
    }

    pub fn into_space_time_map(self) -> Result<SpaceTimeMap> {
        let wed = self
            .header
            .wed
            .ok_or_else(|| Error::CorruptTrace { line: 1, reason: "not a WED trace".into() })?;
        let diagnostics = self.stored_diagnostics();
        let maps = self.maps();
        Ok(SpaceTimeMap::from_parts(
            self.header.grid,
            self.header.space,
            self.header.time_step,
            wed.horizon,
            wed.epsilon,
            maps,
            diagnostics,
            wed.functional,
            wed.sweeps,
            wed.residual,
            wed.dissipation,
        ))
    }
}

/// CSV with header `step,energy,max_time_density,sweeps,residual`.
pub fn write_diagnostics_csv<W: Write>(mut out: W, diagnostics: &[SliceDiagnostics]) -> Result<()> {
    writeln!(out, "step,energy,max_time_density,sweeps,residual")?;
    for (k, d) in diagnostics.iter().enumerate() {
        writeln!(
            out,
            "{k},{:?},{:?},{},{:?}",
            d.energy, d.max_time_density, d.sweeps, d.residual
        )?;
    }
    Ok(())
}
