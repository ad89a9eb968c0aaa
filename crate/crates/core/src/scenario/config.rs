//! Scenario configuration: one JSON document, unknown keys rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::InitialData;
use crate::cat0::TargetSpace;
use crate::error::{Error, Result};
use crate::flow::SolverOptions;
use crate::grid::Grid;
use crate::verify::{BumpRadii, CylinderCenter, WEAK_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "N")]
    pub nodes: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub tau: f64,
    pub steps: usize,
}

/// Either a single `epsilon` (then `T` is the horizon of the solve) or a
/// descending `epsilon_list` (then `T` is the comparison time of the
/// convergence study and each solve runs to `T + 10ε`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WedBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_list: Option<Vec<f64>>,
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Evi,
    Dissipation,
    EnergyMonotonicity,
    Contraction,
    /// `(−∂ₜ + Δ)|∇u|² ≥ 0` on the flow.
    WeakGradient,
    /// `d²(u(t), u(t+δ))` against `∂ₜ − 2aΔ` (subsolution direction).
    WeakPairDistance,
    /// `|∂ₜu|²` against `∂ₜ − 2aΔ` (subsolution direction).
    WeakTimeDensity,
    /// `(ε∂ₜ² − ∂ₜ + Δ)|∇u_ε|² ≥ 0` on the WED minimizer.
    WedWeak,
    WedEnergyBound,
    Frequency,
    Lipschitz,
    Convergence,
}

impl Check {
    pub const ALL: [Check; 12] = [
        Check::Evi,
        Check::Dissipation,
        Check::EnergyMonotonicity,
        Check::Contraction,
        Check::WeakGradient,
        Check::WeakPairDistance,
        Check::WeakTimeDensity,
        Check::WedWeak,
        Check::WedEnergyBound,
        Check::Frequency,
        Check::Lipschitz,
        Check::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Evi => "evi",
            Check::Dissipation => "dissipation",
            Check::EnergyMonotonicity => "energy_monotonicity",
            Check::Contraction => "contraction",
            Check::WeakGradient => "weak_gradient",
            Check::WeakPairDistance => "weak_pair_distance",
            Check::WeakTimeDensity => "weak_time_density",
            Check::WedWeak => "wed_weak",
            Check::WedEnergyBound => "wed_energy_bound",
            Check::Frequency => "frequency",
            Check::Lipschitz => "lipschitz",
            Check::Convergence => "convergence",
        }
    }

    pub fn parse(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }

    fn needs_flow(self) -> bool {
        matches!(
            self,
            Check::Evi
                | Check::Dissipation
                | Check::EnergyMonotonicity
                | Check::Contraction
                | Check::WeakGradient
                | Check::WeakPairDistance
                | Check::WeakTimeDensity
                | Check::Frequency
        )
    }

    fn needs_single_wed(self) -> bool {
        matches!(self, Check::WedWeak | Check::WedEnergyBound)
    }
}

/// Bump family for the weak audits. Radii default to `{L/8, L/4}` in space
/// and `{0.16, 0.3}` of the trace duration in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default = "FamilySpec::default_per_axis")]
    pub per_axis: usize,
    #[serde(default = "FamilySpec::default_per_time")]
    pub per_time: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<BumpRadii>>,
    /// Draw this many random centers (from the scenario seed) instead of
    /// the lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<usize>,
}

impl FamilySpec {
    fn default_per_axis() -> usize {
        8
    }
    fn default_per_time() -> usize {
        3
    }

    pub fn radii_for(&self, length: f64, duration: f64) -> Vec<BumpRadii> {
        self.radii.clone().unwrap_or_else(|| {
            vec![
                BumpRadii { space: length / 8.0, time: 0.16 * duration },
                BumpRadii { space: length / 4.0, time: 0.3 * duration },
            ]
        })
    }
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec { per_axis: 8, per_time: 3, radii: None, random: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "Tolerances::default_weak")]
    pub weak: f64,
    #[serde(default = "Tolerances::default_weak")]
    pub wed_energy_bound: f64,
}

impl Tolerances {
    fn default_weak() -> f64 {
        WEAK_TOLERANCE
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { weak: WEAK_TOLERANCE, wed_energy_bound: WEAK_TOLERANCE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyPoint {
    pub node: usize,
    pub t0: f64,
}

/// Sample points default to every `N/8`-th node of the first axis at the
/// final time; radii default to five values spread over the admissible
/// range.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<FrequencyPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
}

/// Scan over `r ∈ {r0, r0/2, …}` (`levels` values), one WED solve per `r`
/// with `ε = r²`, `Δt = ε/4` and horizon `max(10ε, time + r² + Δt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzSpec {
    pub r0: f64,
    #[serde(default = "LipschitzSpec::default_levels")]
    pub levels: usize,
    /// Center time; defaults to `1.5 r0²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    /// Center nodes; default every `N/8`-th node of the first axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
}

impl LipschitzSpec {
    fn default_levels() -> usize {
        3
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.r0 / (1u64 << k) as f64).collect()
    }

    pub fn center_time(&self) -> f64 {
        self.time.unwrap_or(1.5 * self.r0 * self.r0)
    }

    pub fn centers(&self, grid: &Grid) -> Vec<CylinderCenter> {
        let time = self.center_time();
        let nodes = self.nodes.clone().unwrap_or_else(|| every_eighth(grid));
        nodes.into_iter().map(|node| CylinderCenter { node, time }).collect()
    }
}

pub(crate) fn every_eighth(grid: &Grid) -> Vec<usize> {
    let n = grid.nodes_per_axis();
    let step = (n / 8).max(1);
    let row = if grid.dim() == 2 { n / 2 } else { 0 };
    (step / 2..n).step_by(step).map(|i| grid.index([i, row])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub family: FamilySpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "VerifyBlock::default_competitors")]
    pub competitors: usize,
    /// `a` in the `∂ₜ − 2aΔ` audits.
    #[serde(default = "VerifyBlock::default_factor")]
    pub sub_caloric_factor: f64,
    /// Zeroth-order term `C` added to the gradient audits (0 on flat tori).
    #[serde(default)]
    pub curvature_constant: f64,
    #[serde(default = "VerifyBlock::default_delta")]
    pub pair_delta: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<FrequencySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<LipschitzSpec>,
}

impl VerifyBlock {
    fn default_competitors() -> usize {
        5
    }
    fn default_factor() -> f64 {
        1.0
    }
    fn default_delta() -> usize {
        1
    }
}

impl Default for VerifyBlock {
    fn default() -> Self {
        VerifyBlock {
            checks: Vec::new(),
            family: FamilySpec::default(),
            tolerances: Tolerances::default(),
            competitors: 5,
            sub_caloric_factor: 1.0,
            curvature_constant: 0.0,
            pair_delta: 1,
            frequency: None,
            lipschitz: None,
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub grid: GridConfig,
    pub space: TargetSpace,
    pub initial_data: InitialData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wed: Option<WedBlock>,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub options: SolverOptions,
    /// Compare Euclidean runs against the dense linear oracles.
    #[serde(default)]
    pub oracle: bool,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Seeds competitors, random families, the contraction partner and the
    /// randomized sweep order.
    #[serde(default)]
    pub seed: u64,
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive, got {v}")))
    }
}

impl ScenarioConfig {
    /// Parses and validates a JSON document. Unknown keys and type errors
    /// are reported with their line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| {
            let path = if e.is_data() { "<document>" } else { "<syntax>" };
            Error::config(path, e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The config with `output_dir` reset: where a run is written is not
    /// part of the experiment.
    pub fn portable(&self) -> ScenarioConfig {
        ScenarioConfig { output_dir: default_output(), ..self.clone() }
    }

    /// SHA-256 of the compact JSON encoding of [`Self::portable`].
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(&self.portable())?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = self.grid;
        Grid::new(g.n, g.nodes, g.length).map_err(|e| match e {
            Error::InvalidParameter { name, reason } => Error::config(&format!("grid.{name}"), reason),
            other => other,
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { seed: self.seed, ..self.options }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.space
            .validate_descriptor()
            .map_err(|e| Error::config("space", e.to_string()))?;
        if self.solver.is_none() && self.wed.is_none() {
            return Err(Error::config("solver", "at least one of `solver` and `wed` is required"));
        }
        if let Some(s) = &self.solver {
            positive("solver.tau", s.tau)?;
            if s.steps == 0 {
                return Err(Error::config("solver.steps", "must be at least 1"));
            }
        }
        if let Some(w) = &self.wed {
            positive("wed.dt", w.dt)?;
            positive("wed.T", w.horizon)?;
            match (&w.epsilon, &w.epsilon_list) {
                (Some(e), None) => positive("wed.epsilon", *e)?,
                (None, Some(list)) => {
                    if list.is_empty() {
                        return Err(Error::config("wed.epsilon_list", "must not be empty"));
                    }
                    for (i, e) in list.iter().enumerate() {
                        positive(&format!("wed.epsilon_list[{i}]"), *e)?;
                    }
                    if list.windows(2).any(|p| p[1] >= p[0]) {
                        return Err(Error::config("wed.epsilon_list", "must be strictly descending"));
                    }
                }
                _ => return Err(Error::config("wed.epsilon", "give exactly one of `epsilon` and `epsilon_list`")),
            }
        }
        self.options
            .validate()
            .map_err(|e| Error::config("options", e.to_string()))?;
        let v = &self.verify;
        for (i, c) in v.checks.iter().enumerate() {
            let path = format!("verify.checks[{i}]");
            if c.needs_flow() && self.solver.is_none() {
                return Err(Error::config(&path, format!("`{}` needs a `solver` block", c.name())));
            }
            let single = self.wed.as_ref().is_some_and(|w| w.epsilon.is_some());
            let list = self.wed.as_ref().is_some_and(|w| w.epsilon_list.is_some());
            if c.needs_single_wed() && !single {
                return Err(Error::config(&path, format!("`{}` needs a `wed` block with `epsilon`", c.name())));
            }
            if *c == Check::Convergence && !list {
                return Err(Error::config(&path, "`convergence` needs a `wed` block with `epsilon_list`"));
            }
            if *c == Check::Lipschitz && v.lipschitz.is_none() {
                return Err(Error::config(&path, "`lipschitz` needs `verify.lipschitz`"));
            }
        }
        positive("verify.tolerances.weak", v.tolerances.weak)?;
        positive("verify.tolerances.wed_energy_bound", v.tolerances.wed_energy_bound)?;
        positive("verify.sub_caloric_factor", v.sub_caloric_factor)?;
        if !v.curvature_constant.is_finite() {
            return Err(Error::config("verify.curvature_constant", "must be finite"));
        }
        if v.pair_delta == 0 {
            return Err(Error::config("verify.pair_delta", "must be at least 1"));
        }
        if v.competitors == 0 {
            return Err(Error::config("verify.competitors", "must be at least 1"));
        }
        if v.family.per_axis == 0 {
            return Err(Error::config("verify.family.per_axis", "must be at least 1"));
        }
        if v.family.per_time == 0 {
            return Err(Error::config("verify.family.per_time", "must be at least 1"));
        }
        if let Some(radii) = &v.family.radii {
            if radii.is_empty() {
                return Err(Error::config("verify.family.radii", "must not be empty"));
            }
            for (i, r) in radii.iter().enumerate() {
                positive(&format!("verify.family.radii[{i}].space"), r.space)?;
                positive(&format!("verify.family.radii[{i}].time"), r.time)?;
            }
        }
        if let Some(l) = &v.lipschitz {
            positive("verify.lipschitz.r0", l.r0)?;
            if l.levels == 0 {
                return Err(Error::config("verify.lipschitz.levels", "must be at least 1"));
            }
        }
        if self.oracle && !matches!(self.space, TargetSpace::Euclidean { .. }) {
            return Err(Error::config("oracle", "the dense oracles need a Euclidean target"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "grid": {"n": 1, "N": 16, "L": 2.0},
        "space": {"kind": "spider", "num_rays": 3},
        "initial_data": {"kind": "two_ray_step"},
        "solver": {"tau": 0.01, "steps": 5}
    }"#;

    #[test]
    fn minimal_document_parses_with_defaults() {
        let c = ScenarioConfig::from_json(BASE).unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.verify.competitors, 5);
        assert_eq!(c.output_dir, PathBuf::from("out"));
        let back = ScenarioConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash().unwrap(), c.hash().unwrap());
        let moved = ScenarioConfig { output_dir: PathBuf::from("elsewhere"), ..c.clone() };
        assert_eq!(moved.hash().unwrap(), c.hash().unwrap());
        let reseeded = ScenarioConfig { seed: 1, ..c.clone() };
        assert_ne!(reseeded.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn nonpositive_tau_names_the_field() {
        let text = BASE.replace("\"tau\": 0.01", "\"tau\": 0.0");
        match ScenarioConfig::from_json(&text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "solver.tau"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.replace("\"steps\": 5", "\"steps\": 5, \"stpes\": 6");
        let err = ScenarioConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("stpes"), "{err}");
    }

    #[test]
    fn grid_errors_carry_the_block_name() {
        let text = BASE.replace("\"N\": 16", "\"N\": 2");
        match ScenarioConfig::from_json(&text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "grid.N"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn checks_need_their_blocks() {
        let text = BASE.replace(
            "\"solver\": {\"tau\": 0.01, \"steps\": 5}",
            "\"wed\": {\"epsilon\": 0.05, \"dt\": 0.01, \"T\": 0.5}, \"verify\": {\"checks\": [\"evi\"]}",
        );
        match ScenarioConfig::from_json(&text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "verify.checks[0]"),
            other => panic!("{other:?}"),
        }
        let neither = BASE.replace(",\n        \"solver\": {\"tau\": 0.01, \"steps\": 5}", "");
        assert!(matches!(ScenarioConfig::from_json(&neither), Err(Error::Config { .. })));
    }

    #[test]
    fn check_names_roundtrip() {
        for c in Check::ALL {
            assert_eq!(Check::parse(c.name()), Some(c));
            assert_eq!(serde_json::to_value(c).unwrap(), serde_json::Value::String(c.name().into()));
        }
    }
}
