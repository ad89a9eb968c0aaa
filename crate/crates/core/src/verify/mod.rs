//! Audits of the inequalities satisfied by the discrete flows.
//!
//! Every check produces a [`VerifierReport`]. Weak (distributional)
//! inequalities are paired against a finite family of nonnegative bumps, so
//! a PASS means "no violation found over the family", nothing stronger.

mod convergence;
mod evi;
mod frequency;
mod lipschitz;
mod weak;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::TimeSlices;

pub use convergence::{space_time_gap, study_horizon, wed_convergence_study, ConvergenceStudy};
pub use evi::{
    contraction_audit, dissipation_audit, energy_monotonicity, evi_residual, standard_competitors,
    wed_energy_bound,
};
pub use frequency::{frequency, frequency_calibration, frequency_lower_bound, frequency_profile, FrequencyValue, DEGENERATE_HEIGHT};
pub use lipschitz::{
    epsilon_scaled_scan, harnack_constant, harnack_scan, lipschitz_constant, lipschitz_scan, refinement_growth_report,
    scan_ratio_report, CylinderCenter,
};
pub use weak::{
    field_samples, refinement_report, strong_pairing, weak_pairing, weak_parabolic_residual, Bump,
    BumpCenter, BumpRadii, Coefficients, FamilyKind, FieldSamples, Pairing, TestFunctionFamily,
    WeakField,
};

/// Baseline tolerance of the normalized weak pairings.
pub const WEAK_TOLERANCE: f64 = 5e-2;

/// Where the worst value of a check was attained.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Location {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Discretization the check ran at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub n: usize,
    #[serde(rename = "N")]
    pub nodes_per_axis: usize,
    pub h: f64,
    pub dt: f64,
}

impl Resolution {
    pub fn of(slices: &dyn TimeSlices) -> Self {
        let g = slices.grid();
        Resolution {
            n: g.dim(),
            nodes_per_axis: g.nodes_per_axis(),
            h: g.spacing(),
            dt: slices.time_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifierReport {
    pub id: String,
    pub pass: bool,
    /// The value compared against `tolerance`; whether smaller or larger is
    /// worse depends on the check and is stated in `criterion`.
    pub worst_value: f64,
    pub tolerance: f64,
    pub criterion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
    /// Measured table `(x, y)`, meaning given by `series_label`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerifierReport {
    pub(crate) fn new(id: impl Into<String>, criterion: impl Into<String>, worst_value: f64, tolerance: f64, pass: bool) -> Self {
        VerifierReport {
            id: id.into(),
            pass,
            worst_value,
            tolerance,
            criterion: criterion.into(),
            location: None,
            seed: None,
            resolution: None,
            series: Vec::new(),
            series_label: None,
            note: None,
        }
    }

    pub fn with_location(mut self, location: Location) -> Self {
        self.location = Some(location);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_resolution(mut self, resolution: Resolution) -> Self {
        self.resolution = Some(resolution);
        self
    }

    pub fn with_series(mut self, label: impl Into<String>, series: Vec<[f64; 2]>) -> Self {
        self.series_label = Some(label.into());
        self.series = series;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn status(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }
}

/// One CSV row per report: `id,pass,worst_value,tolerance,seed`.
pub fn write_suite_csv<W: Write>(mut out: W, reports: &[VerifierReport]) -> Result<()> {
    writeln!(out, "id,pass,worst_value,tolerance,seed")?;
    for r in reports {
        let seed = r.seed.map(|s| s.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{:?},{:?},{}", r.id, r.pass, r.worst_value, r.tolerance, seed)?;
    }
    Ok(())
}
