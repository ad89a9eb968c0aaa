//! Presets, configuration, execution and persistence of scenario runs.

mod config;
mod presets;
mod replay;
mod run;

pub use config::{
    Check, FamilySpec, FrequencyPoint, FrequencySpec, GridConfig, LipschitzSpec, ScenarioConfig, SolverBlock,
    Tolerances, VerifyBlock, WedBlock,
};
pub use presets::InitialData;
pub use replay::{replay, replay_reader, Mismatch, ReplayReport};
pub use run::{
    execute, report_file_name, run_scenario, write_outputs, FileEntry, Manifest, ReportEntry, RunOutcome, RunSummary,
    FLOW_ORACLE_TOLERANCE, MANIFEST_SCHEMA, MANIFEST_SCHEMA_VERSION, WED_ORACLE_TOLERANCE,
};
