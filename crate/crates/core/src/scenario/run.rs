//! Scenario execution: flows first, then the requested audits, then
//! artifacts and a manifest of content hashes.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{every_eighth, Check, ScenarioConfig};
use super::InitialData;
use crate::error::{Error, Result};
use crate::flow::{run_flow, write_diagnostics_csv, wed_minimize, FlowTrace, SpaceTimeMap, TimeSlices};
use crate::grid::{l2_distance, GridMap};
use crate::oracle::{euclid_heat_oracle, wed_quadratic_oracle};
use crate::sample::random_smooth_map;
use crate::verify::{
    contraction_audit, dissipation_audit, energy_monotonicity, epsilon_scaled_scan, evi_residual,
    frequency_calibration, frequency_lower_bound, frequency_profile, standard_competitors,
    wed_convergence_study, wed_energy_bound, weak_parabolic_residual, Coefficients, Location,
    Resolution, TestFunctionFamily, VerifierReport, WeakField,
};

pub const MANIFEST_SCHEMA: &str = "npcflow.manifest";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Deviation bounds for the `oracle` flag.
pub const FLOW_ORACLE_TOLERANCE: f64 = 1e-7;
pub const WED_ORACLE_TOLERANCE: f64 = 1e-8;

/// Everything a run computed, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ScenarioConfig,
    pub flow: Option<FlowTrace>,
    pub wed: Option<SpaceTimeMap>,
    pub reports: Vec<VerifierReport>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub id: String,
    pub file: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub schema_version: u32,
    pub producer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub config_sha256: String,
    pub seed: u64,
    pub pass: bool,
    pub reports: Vec<ReportEntry>,
    /// Every file written next to the manifest, sorted by path.
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
    pub reports: Vec<VerifierReport>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.manifest.pass
    }
}

/// Runs the scenario and writes its artifacts to `config.output_dir`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunSummary> {
    let outcome = execute(config)?;
    let manifest = write_outputs(&outcome, &config.output_dir)?;
    Ok(RunSummary { output_dir: config.output_dir.clone(), manifest, reports: outcome.reports })
}

/// Runs flows and audits in memory.
pub fn execute(config: &ScenarioConfig) -> Result<RunOutcome> {
    config.validate()?;
    let grid = config.grid()?;
    let u0 = config
        .initial_data
        .build(grid, &config.space)
        .map_err(|e| Error::config("initial_data", e.to_string()))?;
    let opts = config.solver_options();

    let flow = match &config.solver {
        Some(s) => Some(run_flow(&u0, s.tau, s.steps, &opts).map_err(Error::during("proximal flow"))?),
        None => None,
    };
    let wed = match &config.wed {
        Some(w) => match w.epsilon {
            Some(eps) => Some(wed_minimize(&u0, eps, w.dt, w.horizon, &opts).map_err(Error::during("WED solve"))?),
            None => None,
        },
        None => None,
    };

    let mut reports = Vec::new();
    if config.oracle {
        if let (Some(s), Some(trace)) = (&config.solver, &flow) {
            let reference = euclid_heat_oracle(&u0, s.tau, s.steps).map_err(Error::during("flow oracle"))?;
            reports.push(oracle_report("oracle_flow", trace, &reference.value, FLOW_ORACLE_TOLERANCE)?);
        }
        if let (Some(w), Some(st)) = (&config.wed, &wed) {
            let eps = w.epsilon.unwrap_or_default();
            let reference = wed_quadratic_oracle(&u0, eps, w.dt, w.horizon).map_err(Error::during("WED oracle"))?;
            reports.push(oracle_report("oracle_wed", st, &reference.value, WED_ORACLE_TOLERANCE)?);
        }
    }

    let audit = Auditor { config, u0: &u0, flow: flow.as_ref(), wed: wed.as_ref() };
    for check in Check::ALL {
        if config.verify.checks.contains(&check) {
            let stage = format!("check `{}`", check.name());
            reports.extend(audit.run(check).map_err(Error::during(stage))?);
        }
    }
    let reports = reports.into_iter().map(|r| r.with_seed(config.seed)).collect();
    Ok(RunOutcome { config: config.clone(), flow, wed, reports })
}

fn oracle_report(id: &str, run: &dyn TimeSlices, reference: &dyn TimeSlices, tolerance: f64) -> Result<VerifierReport> {
    let (mut worst, mut at) = (0.0f64, 0);
    for (j, (a, b)) in run.slices().iter().zip(reference.slices()).enumerate() {
        let d = l2_distance(a, b)?;
        if d > worst {
            worst = d;
            at = j;
        }
    }
    Ok(VerifierReport::new(id, "max L2 deviation from the dense linear oracle <= tolerance", worst, tolerance, worst <= tolerance)
        .with_location(Location { slice: Some(at), ..Default::default() })
        .with_resolution(Resolution::of(run)))
}

struct Auditor<'a> {
    config: &'a ScenarioConfig,
    u0: &'a GridMap,
    flow: Option<&'a FlowTrace>,
    wed: Option<&'a SpaceTimeMap>,
}

impl Auditor<'_> {
    fn flow(&self) -> Result<&FlowTrace> {
        self.flow.ok_or_else(|| Error::config("solver", "this check needs the proximal flow"))
    }

    fn wed(&self) -> Result<&SpaceTimeMap> {
        self.wed.ok_or_else(|| Error::config("wed.epsilon", "this check needs a single WED solve"))
    }

    /// Family on the slices `0..=last` where the audited field exists.
    fn family(&self, slices: &dyn TimeSlices, last: usize) -> Result<TestFunctionFamily> {
        let spec = &self.config.verify.family;
        let grid = slices.grid();
        let dt = slices.time_step();
        let radii = spec.radii_for(grid.length(), last as f64 * dt);
        match spec.random {
            Some(count) => TestFunctionFamily::random(grid, dt, last, count, radii, self.config.seed),
            None => TestFunctionFamily::lattice(grid, dt, last, spec.per_axis, spec.per_time, radii),
        }
    }

    fn weak(&self, slices: &dyn TimeSlices, field: WeakField, c: Coefficients) -> Result<VerifierReport> {
        let last = slices.slices().len() - 1;
        let available = match field {
            WeakField::GradDensity => last,
            WeakField::TimeDensity => last.saturating_sub(1),
            WeakField::PairDistance { delta } => last.saturating_sub(delta),
        };
        let family = self.family(slices, available)?;
        weak_parabolic_residual(slices, field, c, &family, self.config.verify.tolerances.weak)
    }

    fn run(&self, check: Check) -> Result<Vec<VerifierReport>> {
        let v = &self.config.verify;
        let seed = self.config.seed;
        let sub_caloric = Coefficients::new(0.0, 1.0, 2.0 * v.sub_caloric_factor);
        Ok(match check {
            Check::Evi => {
                let competitors = standard_competitors(self.u0, v.competitors, seed)?;
                vec![evi_residual(self.flow()?, &competitors)?]
            }
            Check::Dissipation => vec![dissipation_audit(self.flow()?)?],
            Check::EnergyMonotonicity => vec![energy_monotonicity(self.flow()?)],
            Check::Contraction => {
                let flow = self.flow()?;
                let grid = *self.u0.grid();
                let partner_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
                let v0 = random_smooth_map(grid, self.u0.space().clone(), partner_seed, 1.0, 0.5 * grid.length())?;
                let other = run_flow(&v0, flow.tau(), flow.slices().len() - 1, &self.config.solver_options())?;
                vec![contraction_audit(flow, &other)?]
            }
            Check::WeakGradient => {
                let c = Coefficients::new(0.0, 1.0, 1.0).with_zeroth(v.curvature_constant);
                vec![self.weak(self.flow()?, WeakField::GradDensity, c)?]
            }
            Check::WeakPairDistance => {
                vec![self.weak(self.flow()?, WeakField::PairDistance { delta: v.pair_delta }, sub_caloric)?]
            }
            Check::WeakTimeDensity => vec![self.weak(self.flow()?, WeakField::TimeDensity, sub_caloric)?],
            Check::WedWeak => {
                let st = self.wed()?;
                let c = Coefficients::new(st.epsilon(), 1.0, 1.0).with_zeroth(v.curvature_constant);
                vec![self.weak(st, WeakField::GradDensity, c)?]
            }
            Check::WedEnergyBound => vec![wed_energy_bound(self.wed()?, v.tolerances.wed_energy_bound)],
            Check::Frequency => self.frequency()?,
            Check::Lipschitz => {
                let spec = v.lipschitz.as_ref().ok_or_else(|| Error::config("verify.lipschitz", "missing"))?;
                let centers = spec.centers(self.u0.grid());
                let (a, b) = epsilon_scaled_scan(self.u0, &centers, &spec.radii(), &self.config.solver_options())?;
                vec![a, b]
            }
            Check::Convergence => {
                let w = self.config.wed.as_ref().ok_or_else(|| Error::config("wed", "missing"))?;
                let list = w.epsilon_list.as_deref().ok_or_else(|| Error::config("wed.epsilon_list", "missing"))?;
                let study = wed_convergence_study(self.u0, list, w.dt, w.horizon, &self.config.solver_options(), None)?;
                vec![study.report]
            }
        })
    }

    fn frequency(&self) -> Result<Vec<VerifierReport>> {
        let flow = self.flow()?;
        let grid = flow.grid();
        let spec = self.config.verify.frequency.clone().unwrap_or_default();
        let t_end = flow.final_time();
        let points: Vec<(usize, f64)> = match &spec.points {
            Some(p) => p.iter().map(|p| (p.node, p.t0)).collect(),
            None => every_eighth(grid).into_iter().map(|x| (x, t_end)).collect(),
        };
        if points.is_empty() {
            return Err(Error::config("verify.frequency.points", "must not be empty"));
        }
        let t_min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let radii = match &spec.radii {
            Some(r) => r.clone(),
            None => default_radii(grid.spacing(), grid.length(), t_min)?,
        };

        let mut profiles = Vec::new();
        let mut degenerate = 0;
        for &(node, t0) in &points {
            match frequency_profile(flow, node, t0, &radii) {
                Ok(r) => profiles.push(r),
                Err(Error::DegenerateFrequency { .. }) => degenerate += 1,
                Err(e) => return Err(e),
            }
        }
        let mut out = vec![merge_profiles(profiles, points.len(), degenerate)];
        out.push(match frequency_lower_bound(flow, &points, &radii) {
            Ok(r) => r,
            Err(Error::DegenerateFrequency { .. }) => {
                VerifierReport::new("frequency_lower_bound", "min N >= 1 - 5e-2", 0.0, 0.95, true)
                    .with_resolution(Resolution::of(flow))
                    .with_note("every sample point is degenerate (H below 1e-14): no frequency is defined")
            }
            Err(e) => return Err(e),
        });
        if matches!(self.config.initial_data, InitialData::LinearCore { .. }) {
            let n = grid.nodes_per_axis();
            let row = if grid.dim() == 2 { n / 2 } else { 0 };
            let center = grid.index([n / 2, row]);
            out.push(frequency_calibration(flow, center, t_min, &radii)?);
        }
        Ok(out)
    }
}

/// Five radii, geometrically spaced over `[4h, min(√t₀/2, L/(12√2))]`; the
/// upper limit keeps the 6σ kernel collar inside half the torus.
fn default_radii(h: f64, length: f64, t0: f64) -> Result<Vec<f64>> {
    let lo = 4.0 * h;
    let hi = (0.5 * t0.max(0.0).sqrt()).min(length / (12.0 * std::f64::consts::SQRT_2));
    if lo > hi {
        return Err(Error::Precondition(format!(
            "no resolvable frequency radius: 4h = {lo} exceeds the upper limit {hi}"
        )));
    }
    if lo == hi {
        return Ok(vec![lo]);
    }
    let ratio = hi / lo;
    Ok((0..5).map(|k| if k == 4 { hi } else { lo * ratio.powf(k as f64 / 4.0) }).collect())
}

/// One report for the profile audit over all sample points: the worst point
/// decides the value, any failing point fails the audit.
fn merge_profiles(profiles: Vec<VerifierReport>, points: usize, degenerate: usize) -> VerifierReport {
    let pass = profiles.iter().all(|r| r.pass);
    let failing = profiles.iter().filter(|r| !r.pass).count();
    let note = format!("{} point(s) evaluated, {failing} failing, {degenerate} degenerate skipped", points - degenerate);
    match profiles.into_iter().min_by(|a, b| a.worst_value.total_cmp(&b.worst_value)) {
        Some(mut worst) => {
            let inner = worst.note.take().unwrap_or_default();
            worst.pass = pass;
            worst.with_note(format!("{note}; worst point: {inner}"))
        }
        None => VerifierReport::new("frequency_profile", "min adjacent change N(R_i+1) - N(R_i) >= -tolerance", 0.0, 5e-2, true)
            .with_note(format!("{note}: no frequency is defined")),
    }
}

/// Keeps report file names portable.
pub fn report_file_name(id: &str) -> String {
    let stem: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' { c } else { '_' })
        .collect();
    format!("report_{stem}.json")
}

fn file_entry(dir: &Path, name: &str) -> Result<FileEntry> {
    let bytes = fs::read(dir.join(name))?;
    Ok(FileEntry { path: name.to_string(), sha256: hex::encode(Sha256::digest(&bytes)), bytes: bytes.len() as u64 })
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<String> {
    let mut out = BufWriter::new(fs::File::create(dir.join(name))?);
    f(&mut out)?;
    std::io::Write::flush(&mut out)?;
    Ok(name.to_string())
}

/// Writes traces, diagnostics, reports, the effective config and the
/// manifest. With both a flow and a WED solve, the WED files get a `wed_`
/// prefix.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    files.push(write_file(dir, "config.json", |out| {
        serde_json::to_writer_pretty(&mut *out, &outcome.config.portable())?;
        std::io::Write::write_all(out, b"\n")?;
        Ok(())
    })?);
    if let Some(trace) = &outcome.flow {
        files.push(write_file(dir, "trace.ndjson", |out| trace.write_ndjson(out))?);
        files.push(write_file(dir, "diagnostics.csv", |out| write_diagnostics_csv(out, trace.diagnostics()))?);
    }
    if let Some(st) = &outcome.wed {
        let prefix = if outcome.flow.is_some() { "wed_" } else { "" };
        files.push(write_file(dir, &format!("{prefix}trace.ndjson"), |out| st.write_ndjson(out))?);
        files.push(write_file(dir, &format!("{prefix}diagnostics.csv"), |out| write_diagnostics_csv(out, st.diagnostics()))?);
    }
    let mut entries = Vec::new();
    for r in &outcome.reports {
        let name = report_file_name(&r.id);
        files.push(write_file(dir, &name, |out| r.write_json(out))?);
        entries.push(ReportEntry { id: r.id.clone(), file: name, pass: r.pass });
    }
    files.push(write_file(dir, "suite.csv", |out| crate::verify::write_suite_csv(out, &outcome.reports))?);
    files.sort();
    files.dedup();
    let files = files.iter().map(|f| file_entry(dir, f)).collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.to_string(),
        schema_version: MANIFEST_SCHEMA_VERSION,
        producer: format!("npcflow {}", env!("CARGO_PKG_VERSION")),
        name: outcome.config.name.clone(),
        config_sha256: outcome.config.hash()?,
        seed: outcome.config.seed,
        pass: outcome.passed(),
        reports: entries,
        files,
    };
    write_file(dir, "manifest.json", |out| {
        serde_json::to_writer_pretty(&mut *out, &manifest)?;
        std::io::Write::write_all(out, b"\n")?;
        Ok(())
    })?;
    Ok(manifest)
}
