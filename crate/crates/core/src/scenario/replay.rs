//! Bit-exact recomputation of the stored diagnostics of a trace file.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::read_trace;
use crate::grid::{dirichlet_energy, energy_density, time_density};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub slice: usize,
    /// Set for per-node quantities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    pub quantity: String,
    pub stored: f64,
    pub recomputed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub schema_version: u32,
    pub producer: String,
    pub slices: usize,
    pub matches: bool,
    pub mismatches: Vec<Mismatch>,
}

impl ReplayReport {
    /// Nodes whose stored density disagrees, in slice order.
    pub fn affected_nodes(&self) -> Vec<(usize, usize)> {
        self.mismatches.iter().filter_map(|m| m.node.map(|x| (m.slice, x))).collect()
    }
}

pub fn replay(path: &Path) -> Result<ReplayReport> {
    replay_reader(BufReader::new(File::open(path)?))
}

/// Recomputes energy, per-node density and `max |∂ₜu|²` of every slice
/// from the stored values and compares them bit for bit with the stored
/// numbers. The producer version is not checked; the schema version is.
pub fn replay_reader<R: BufRead>(input: R) -> Result<ReplayReport> {
    let stored = read_trace(input)?;
    let maps = stored.maps();
    let dt = stored.header.time_step;
    let mut mismatches = Vec::new();
    let mut push = |slice, node, quantity: &str, stored: f64, recomputed: f64| {
        if stored.to_bits() != recomputed.to_bits() {
            mismatches.push(Mismatch { slice, node, quantity: quantity.to_string(), stored, recomputed });
        }
    };
    for (j, (rec, map)) in stored.records.iter().zip(&maps).enumerate() {
        push(j, None, "energy", rec.diagnostics.energy, dirichlet_energy(map));
        let density = energy_density(map);
        for (x, (&s, &r)) in rec.density.iter().zip(density.values()).enumerate() {
            push(j, Some(x), "density", s, r);
        }
        let td = if j == 0 { 0.0 } else { time_density(&maps[j - 1], map, dt)?.max() };
        push(j, None, "max_time_density", rec.diagnostics.max_time_density, td);
    }
    Ok(ReplayReport {
        schema_version: stored.header.schema_version,
        producer: stored.header.producer,
        slices: stored.records.len(),
        matches: mismatches.is_empty(),
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{run_flow, SolverOptions};
    use crate::grid::{Grid, GridMap};
    use crate::{TargetPoint, TargetSpace};

    fn trace_text() -> String {
        let grid = Grid::new(1, 8, 2.0).unwrap();
        let u = GridMap::from_fn(grid, TargetSpace::Euclidean { dim: 1 }, |i| TargetPoint::euclidean(vec![0.1 * i as f64])).unwrap();
        let trace = run_flow(&u, 0.01, 3, &SolverOptions::default()).unwrap();
        let mut buf = Vec::new();
        trace.write_ndjson(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn fresh_trace_matches() {
        let r = replay_reader(trace_text().as_bytes()).unwrap();
        assert!(r.matches, "{:?}", r.mismatches);
        assert_eq!(r.slices, 4);
    }

    #[test]
    fn edited_density_is_reported_at_its_node() {
        let text = trace_text();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut rec: serde_json::Value = serde_json::from_str(&lines[2]).unwrap();
        let d = rec["density"][5].as_f64().unwrap();
        rec["density"][5] = serde_json::json!(d * 1.5 + 1.0);
        lines[2] = rec.to_string();
        let r = replay_reader(lines.join("\n").as_bytes()).unwrap();
        assert!(!r.matches);
        assert_eq!(r.affected_nodes(), vec![(1, 5)]);
    }
}
