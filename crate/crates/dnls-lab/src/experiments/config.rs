//! Experiment configuration: one JSON document drives every subcommand.

use crate::error::{LabError, Result};
use crate::field::Field;
use crate::grid::TorusGrid;
use crate::norms::{LebesgueOrder, NormParams};
use crate::samples::InitialData;
use crate::solver::SolverConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Conservation,
    Apriori,
    Convergence,
    Rescaling,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExperimentKind::Conservation => "conservation",
            ExperimentKind::Apriori => "apriori",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Rescaling => "rescaling",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub lambda: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.lambda, self.n_points)
    }
}

fn default_l_max() -> usize {
    8
}

fn default_tol() -> f64 {
    1e-13
}

/// Trace-series evaluation parameters. A missing radius falls back to
/// `max(64 / lambda, 8 * l_max * bandwidth(q))`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TraceSpec {
    #[serde(default = "default_l_max")]
    pub l_max: usize,
    /// Absolute tolerance on the geometric tail bound.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self {
            l_max: default_l_max(),
            tol: default_tol(),
            truncation_radius: None,
        }
    }
}

impl TraceSpec {
    pub fn radius_for(&self, q: &Field) -> f64 {
        self.truncation_radius
            .unwrap_or_else(|| crate::alpha::default_truncation_radius(q, self.l_max))
    }
}

/// Check tolerances; defaults are the values frozen after the refinement
/// studies in the acceptance suite.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Tolerances {
    /// Max relative drift of alpha along a trajectory.
    #[serde(default = "Tolerances::default_alpha_drift")]
    pub alpha_drift: f64,
    /// Max relative drift of the classical invariants M, P, E.
    #[serde(default = "Tolerances::default_mpe_drift")]
    pub mpe_drift: f64,
    /// Ceiling on sup_t ||q(t)|| / ||q(0)|| for the norm families.
    #[serde(default = "Tolerances::default_norm_ratio_sup")]
    pub norm_ratio_sup: f64,
    /// Relative tolerance on scaling-critical L2 equality.
    #[serde(default = "Tolerances::default_l2_scaling")]
    pub l2_scaling: f64,
    /// Slack added to the predicted tail exponent in the log-log fit.
    #[serde(default = "Tolerances::default_tail_slope_slack")]
    pub tail_slope_slack: f64,
}

impl Tolerances {
    fn default_alpha_drift() -> f64 {
        1e-5
    }
    fn default_mpe_drift() -> f64 {
        1e-8
    }
    fn default_norm_ratio_sup() -> f64 {
        5.0
    }
    fn default_l2_scaling() -> f64 {
        1e-12
    }
    fn default_tail_slope_slack() -> f64 {
        0.5
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            alpha_drift: Self::default_alpha_drift(),
            mpe_drift: Self::default_mpe_drift(),
            norm_ratio_sup: Self::default_norm_ratio_sup(),
            l2_scaling: Self::default_l2_scaling(),
            tail_slope_slack: Self::default_tail_slope_slack(),
        }
    }
}

fn default_kappas() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

fn default_norm_params() -> NormParams {
    NormParams::new(0.25, LebesgueOrder::Finite(2.0), 128.0)
}

/// The single configuration document consumed by every CLI subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    pub grid: GridSpec,
    pub initial_data: InitialData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    #[serde(default)]
    pub trace: TraceSpec,
    #[serde(default = "default_norm_params")]
    pub norm_params: NormParams,
    /// Additional (s, r) pairs swept by the a-priori experiment; the primary
    /// `norm_params` is always included.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub norm_sweep: Vec<NormParams>,
    /// Torus sweep for the rescaling experiment.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Extra seeds for multi-seed experiments (random-band data only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build_grid(&self) -> Result<TorusGrid> {
        self.grid.build()
    }

    pub fn build_initial(&self) -> Result<Field> {
        let grid = self.build_grid()?;
        self.initial_data.build(&grid)
    }

    /// Initial data with the random-band seed replaced (other families are
    /// returned unchanged).
    pub fn initial_with_seed(&self, seed: u64) -> InitialData {
        match self.initial_data {
            InitialData::RandomBand {
                bandwidth,
                l2_target,
                ..
            } => InitialData::RandomBand {
                seed,
                bandwidth,
                l2_target,
            },
            ref other => other.clone(),
        }
    }

    pub fn solver(&self) -> Result<&SolverConfig> {
        self.solver.as_ref().ok_or_else(|| {
            LabError::InvalidExperimentConfig("this experiment requires a solver section".into())
        })
    }

    /// Structural checks plus the small-data guard: experiments that lean on
    /// the small-L2 regime reject random-band targets above 0.25.
    pub fn validate(&self, expected: Option<ExperimentKind>) -> Result<()> {
        if let (Some(want), Some(have)) = (expected, self.kind) {
            if want != have {
                return Err(LabError::InvalidExperimentConfig(format!(
                    "config kind is {have}, but this experiment runs {want}"
                )));
            }
        }
        let grid = self.build_grid()?;
        if let Some(ref s) = self.solver {
            s.validate(&grid)?;
        }
        for &k in &self.kappas {
            if !(k > 0.0) {
                return Err(LabError::InvalidKappa(k));
            }
        }
        self.norm_params.validate()?;
        for p in &self.norm_sweep {
            p.validate()?;
        }
        let smallness_kind = matches!(
            expected.or(self.kind),
            Some(ExperimentKind::Conservation) | Some(ExperimentKind::Apriori)
        );
        if smallness_kind {
            if let InitialData::RandomBand { l2_target, .. } = self.initial_data {
                if l2_target > 0.25 {
                    return Err(LabError::InvalidExperimentConfig(format!(
                        "l2_target = {l2_target} leaves the small-data regime (max 0.25)"
                    )));
                }
            }
        }
        Ok(())
    }
}
