use std::fs;
use std::path::PathBuf;

use npcflow::scenario::{replay, replay_reader};
use npcflow::{run_flow, GridMap, SolverOptions, Grid, TargetSpace};
use npcflow::scenario::InitialData;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/trace_schema1_older_producer.ndjson")
}

#[test]
fn older_producer_with_the_same_schema_replays() {
    let r = replay(&fixture()).unwrap();
    assert_eq!(r.producer, "npcflow 0.0.7");
    assert_eq!(r.schema_version, 1);
    assert_eq!(r.slices, 4);
    assert!(r.matches, "{:?}", r.mismatches);
}

#[test]
fn newer_schema_is_refused() {
    let text = fs::read_to_string(fixture()).unwrap();
    let bumped = text.replacen("\"schema_version\":1", "\"schema_version\":2", 1);
    assert_ne!(bumped, text);
    assert!(replay_reader(bumped.as_bytes()).is_err());
}

#[test]
fn fixture_is_what_the_current_solver_produces() {
    let grid = Grid::new(1, 8, 2.0).unwrap();
    let space = TargetSpace::Spider { num_rays: 3 };
    let u0: GridMap = InitialData::ThreeRaySymmetric { amplitude: 1.0 }.build(grid, &space).unwrap();
    let trace = run_flow(&u0, 0.01, 3, &SolverOptions::default()).unwrap();
    let mut buf = Vec::new();
    trace.write_ndjson(&mut buf).unwrap();
    let fresh = String::from_utf8(buf).unwrap();
    let stored = fs::read_to_string(fixture()).unwrap();
    // Everything after the header line is byte-identical.
    let body = |s: &str| s.lines().skip(1).map(String::from).collect::<Vec<_>>();
    assert_eq!(body(&fresh), body(&stored));
    assert!(replay_reader(fresh.as_bytes()).unwrap().matches);
}
