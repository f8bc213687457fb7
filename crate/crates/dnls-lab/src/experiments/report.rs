//! Machine-readable experiment reports and their on-disk layout.
//!
//! An output directory receives `report.json`, `plotdata.csv` (one row per
//! diagnostic time) and, when a trajectory was computed, one CSV per snapshot.
//! Reports are deterministic: identical configs (including RNG seeds) produce
//! byte-identical JSON.

use crate::alpha::TraceSeriesRecord;
use crate::error::Result;
use crate::experiments::config::ExperimentConfig;
use crate::field::Field;
use crate::norms::NormParams;
use crate::solver::Invariants;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

/// One named check with the quantity it verifies.
///
/// `claim` states the mathematical property being instantiated, so a failure
/// names exactly what broke.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub claim: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    /// Pass when `value <= tolerance`.
    pub fn upper(name: impl Into<String>, claim: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            claim: claim.into(),
            value,
            tolerance: tol,
            pass: value <= tol && value.is_finite(),
        }
    }

    /// Pass/fail determined by the caller; `value` is informational.
    pub fn flag(
        name: impl Into<String>,
        claim: impl Into<String>,
        value: f64,
        pass: bool,
    ) -> Self {
        Self {
            name: name.into(),
            claim: claim.into(),
            value,
            tolerance: f64::NAN,
            pass,
        }
    }
}

/// Alpha value at one (time, kappa) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaSample {
    pub kappa: f64,
    pub alpha: f64,
    pub converged: bool,
}

/// Diagnostics recorded at one snapshot time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimePoint {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<AlphaSample>,
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub besov: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

/// Headline numbers; `pass` is a pure function of the checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub max_drift_alpha: f64,
    pub max_drift_mpe: f64,
    pub norm_ratio_sup: f64,
    pub pass: bool,
}

/// Truncation-sensitivity diagnostic: change in alpha when the radius halves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationSensitivity {
    pub kappa: f64,
    pub alpha_full: f64,
    pub alpha_half_radius: f64,
    pub rel_change: f64,
}

/// Norm ratios along a trajectory for one (s, r) pair and one seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormRatioSweep {
    pub seed: Option<u64>,
    pub params: NormParams,
    pub besov_ratio_sup: f64,
    pub z_ratio_sup: f64,
}

/// One lambda of the rescaling sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescalePoint {
    pub lambda: f64,
    pub n_points: usize,
    pub l2: f64,
    pub z: f64,
}

/// Log-log fit of the series tail against kappa.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailFit {
    pub kappas: Vec<f64>,
    pub tails: Vec<f64>,
    pub slope: f64,
    pub predicted_ceiling: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub config: ExperimentConfig,
    pub checks: Vec<CheckResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_time: Vec<TimePoint>,
    pub summary: Summary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace_series: Vec<TraceSeriesRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub truncation_sensitivity: Vec<TruncationSensitivity>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub norm_ratios: Vec<NormRatioSweep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rescaling: Vec<RescalePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_fit: Option<TailFit>,
}

impl ExperimentReport {
    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    pub fn failures(&self) -> FailureList {
        FailureList {
            failures: self
                .checks
                .iter()
                .filter(|c| !c.pass)
                .cloned()
                .collect(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Wide-format CSV with one row per diagnostic time, suitable for any
    /// external plotting tool.
    pub fn plotdata_csv(&self) -> String {
        let mut kappas: Vec<f64> = Vec::new();
        for tp in &self.per_time {
            for a in &tp.alpha {
                if !kappas.contains(&a.kappa) {
                    kappas.push(a.kappa);
                }
            }
        }
        let mut out = String::from("t");
        for k in &kappas {
            out.push_str(&format!(",alpha_k{k}"));
        }
        out.push_str(",M,P,E,besov,z\n");
        for tp in &self.per_time {
            out.push_str(&format!("{}", tp.t));
            for k in &kappas {
                match tp.alpha.iter().find(|a| a.kappa == *k) {
                    Some(a) => out.push_str(&format!(",{}", a.alpha)),
                    None => out.push(','),
                }
            }
            out.push_str(&format!(",{},{},{}", tp.mass, tp.momentum, tp.energy));
            match tp.besov {
                Some(b) => out.push_str(&format!(",{b}")),
                None => out.push(','),
            }
            match tp.z {
                Some(z) => out.push_str(&format!(",{z}")),
                None => out.push(','),
            }
            out.push('\n');
        }
        out
    }

    /// Write `report.json`, `plotdata.csv` and per-snapshot field CSVs.
    pub fn write_outputs(&self, dir: &Path, snapshots: Option<(&[f64], &[Field])>) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json_pretty())?;
        fs::write(dir.join("plotdata.csv"), self.plotdata_csv())?;
        if !self.pass() {
            fs::write(
                dir.join("failures.json"),
                serde_json::to_string_pretty(&self.failures())?,
            )?;
        }
        if let Some((times, fields)) = snapshots {
            for (i, field) in fields.iter().enumerate() {
                let name = format!("snapshot_{i:04}.csv");
                let mut file = fs::File::create(dir.join(name))?;
                writeln!(file, "# t={}", times[i])?;
                field.write_csv(&mut file)?;
            }
        }
        Ok(())
    }
}

/// Machine-readable failure list; emitted on stdout and as `failures.json`
/// when an experiment does not pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureList {
    pub failures: Vec<CheckResult>,
}

/// Report of the norms subcommand for a single field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub s: f64,
    pub r: crate::norms::LebesgueOrder,
    pub lambda: f64,
    pub values: NormValues,
    pub per_block: Vec<BlockEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormValues {
    pub z: f64,
    pub besov: f64,
    pub sobolev: f64,
    pub l2: f64,
}

/// One dyadic block: the direct pairing and its reconstruction from
/// leading-term differences.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockEntry {
    pub n: f64,
    pub pairing: f64,
    pub alpha_diff: f64,
}

/// Manifest of a simulate run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationManifest {
    pub config: ExperimentConfig,
    pub times: Vec<f64>,
    pub snapshot_files: Vec<String>,
    pub drifts: DriftSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftSummary {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
}

impl DriftSummary {
    pub fn from_invariants(series: &[Invariants]) -> Self {
        let rel = |a: f64, b: f64| {
            if b.abs() > 0.0 {
                ((a - b) / b).abs()
            } else {
                a.abs()
            }
        };
        let first = series.first().copied().unwrap_or(Invariants {
            mass: 0.0,
            momentum: 0.0,
            energy: 0.0,
        });
        let mut out = Self {
            mass: 0.0,
            momentum: 0.0,
            energy: 0.0,
        };
        for inv in series {
            out.mass = out.mass.max(rel(inv.mass, first.mass));
            out.momentum = out.momentum.max(rel(inv.momentum, first.momentum));
            out.energy = out.energy.max(rel(inv.energy, first.energy));
        }
        out
    }

    pub fn max(&self) -> f64 {
        self.mass.max(self.momentum).max(self.energy)
    }
}
