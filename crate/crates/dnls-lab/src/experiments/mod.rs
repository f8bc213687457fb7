//! Reproducible experiment harness.
//!
//! Four experiment kinds wire the solver, the trace series and the norm
//! family into end-to-end checks:
//!
//! - `conservation`: evolve small data and verify that alpha(kappa; q(t)) and
//!   the classical invariants stay put,
//! - `apriori`: track Besov and Z norm growth along a trajectory,
//! - `convergence`: geometric decay of the series terms and the kappa-decay
//!   of the tail beyond the leading term,
//! - `rescaling`: scaling-critical L2 equality and Z-norm smallness under the
//!   torus sweep.
//!
//! Runners are pure functions of their config; snapshot-level evaluations are
//! independent and side-effect free, so callers may distribute them. Reports
//! serialize deterministically for a fixed config.

pub mod config;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind, GridSpec, Tolerances, TraceSpec};
pub use report::{
    AlphaSample, BlockEntry, CheckResult, DriftSummary, ExperimentReport, FailureList,
    NormRatioSweep, NormReport, NormValues, RescalePoint, SimulationManifest, Summary, TailFit,
    TimePoint, TruncationSensitivity,
};

use crate::alpha::{alpha_series, TraceSeries, TraceSeriesRecord};
use crate::error::{LabError, Result};
use crate::field::Field;
use crate::norms::{besov_norm, sobolev_norm, weighted_pairing, z_block_from_alpha, z_norm};
use crate::solver::{conserved_quantities, evolve, rescale, Trajectory};

/// Report plus the trajectory it was computed from, when one exists, so the
/// caller can export snapshots.
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub trajectory: Option<Trajectory>,
}

fn relative_drift(values: &[f64]) -> f64 {
    let first = values.first().copied().unwrap_or(0.0);
    let scale = first.abs().max(1e-300);
    values
        .iter()
        .map(|v| (v - first).abs() / scale)
        .fold(0.0, f64::max)
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Geometric ratio fitted over all consecutive term pairs,
/// `exp(slope of ln|alpha_l| against l)`.
fn fitted_ratio(series: &TraceSeries) -> f64 {
    let mags: Vec<f64> = series
        .terms
        .iter()
        .map(|c| c.norm().max(1e-300))
        .collect();
    if mags.len() < 2 {
        return 0.0;
    }
    let xs: Vec<f64> = (1..=mags.len()).map(|l| l as f64).collect();
    let ys: Vec<f64> = mags.iter().map(|m| m.ln()).collect();
    least_squares_slope(&xs, &ys).exp()
}

fn norms_for(q: &Field, params: &crate::norms::NormParams) -> Result<(f64, f64)> {
    Ok((besov_norm(q, params)?, z_norm(q, params)?))
}

/// Evolve small data and verify conservation of alpha and of M, P, E.
pub fn run_conservation(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate(Some(ExperimentKind::Conservation))?;
    let q0 = cfg.build_initial()?;
    let solver = cfg.solver()?;
    let trajectory = evolve(&q0, solver)?;
    let radius = cfg.trace.radius_for(&q0);
    let tol = &cfg.tolerances;

    let mut checks: Vec<CheckResult> = Vec::new();
    let mut per_time: Vec<TimePoint> = Vec::new();
    let mut trace_series: Vec<TraceSeriesRecord> = Vec::new();
    let mut sensitivity: Vec<TruncationSensitivity> = Vec::new();

    // alpha(kappa, t) over the whole trajectory
    let mut alpha_by_kappa: Vec<Vec<TraceSeries>> = Vec::new();
    for &kappa in &cfg.kappas {
        let mut row = Vec::with_capacity(trajectory.snapshots.len());
        for snap in &trajectory.snapshots {
            row.push(alpha_series(
                snap,
                kappa,
                cfg.trace.tol,
                cfg.trace.l_max,
                radius,
            )?);
        }
        if let Some(s) = row.first() {
            trace_series.push(s.record());
        }
        alpha_by_kappa.push(row);
    }

    // invariants and norms per snapshot
    let invariants: Vec<_> = trajectory
        .snapshots
        .iter()
        .map(conserved_quantities)
        .collect();
    let mut besov0 = None;
    let mut besov_sup: f64 = 0.0;
    for (i, snap) in trajectory.snapshots.iter().enumerate() {
        let (besov, z) = norms_for(snap, &cfg.norm_params)?;
        let b0 = *besov0.get_or_insert(besov);
        if b0 > 0.0 {
            besov_sup = besov_sup.max(besov / b0);
        }
        per_time.push(TimePoint {
            t: trajectory.times[i],
            alpha: cfg
                .kappas
                .iter()
                .enumerate()
                .map(|(ki, &kappa)| AlphaSample {
                    kappa,
                    alpha: alpha_by_kappa[ki][i].alpha,
                    converged: alpha_by_kappa[ki][i].converged,
                })
                .collect(),
            mass: invariants[i].mass,
            momentum: invariants[i].momentum,
            energy: invariants[i].energy,
            besov: Some(besov),
            z: Some(z),
        });
    }

    let mut max_drift_alpha: f64 = 0.0;
    for (ki, &kappa) in cfg.kappas.iter().enumerate() {
        let alphas: Vec<f64> = alpha_by_kappa[ki].iter().map(|s| s.alpha).collect();
        let drift = relative_drift(&alphas);
        max_drift_alpha = max_drift_alpha.max(drift);
        checks.push(CheckResult::upper(
            format!("alpha-drift-k{kappa}"),
            "d/dt alpha(kappa; q) = 0 along the flow",
            drift,
            tol.alpha_drift,
        ));
        let all_converged = alpha_by_kappa[ki].iter().all(|s| s.converged);
        checks.push(CheckResult::flag(
            format!("alpha-series-converged-k{kappa}"),
            "geometric convergence of the trace series at every snapshot",
            alpha_by_kappa[ki]
                .iter()
                .map(|s| s.ratio_estimate)
                .fold(0.0, f64::max),
            all_converged,
        ));

        // truncation sensitivity at t = 0: rerun at half radius
        let full = &alpha_by_kappa[ki][0];
        let half = alpha_series(&q0, kappa, cfg.trace.tol, cfg.trace.l_max, radius / 2.0)?;
        let scale = full.alpha.abs().max(1e-300);
        sensitivity.push(TruncationSensitivity {
            kappa,
            alpha_full: full.alpha,
            alpha_half_radius: half.alpha,
            rel_change: (full.alpha - half.alpha).abs() / scale,
        });
    }

    let mpe = DriftSummary::from_invariants(&invariants);
    checks.push(CheckResult::upper(
        "mpe-drift",
        "mass, momentum and energy are conserved by the flow",
        mpe.max(),
        tol.mpe_drift,
    ));

    let pass = checks.iter().all(|c| c.pass);
    let report = ExperimentReport {
        kind: ExperimentKind::Conservation.to_string(),
        config: cfg.clone(),
        checks,
        per_time,
        summary: Summary {
            max_drift_alpha,
            max_drift_mpe: mpe.max(),
            norm_ratio_sup: besov_sup,
            pass,
        },
        trace_series,
        truncation_sensitivity: sensitivity,
        norm_ratios: vec![],
        rescaling: vec![],
        tail_fit: None,
    };
    Ok(ExperimentOutcome {
        report,
        trajectory: Some(trajectory),
    })
}

/// Track Besov and Z norm growth along trajectories for an (s, r) sweep.
pub fn run_apriori(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate(Some(ExperimentKind::Apriori))?;
    let solver = cfg.solver()?;
    let tol = &cfg.tolerances;

    let seeds: Vec<Option<u64>> = if cfg.seeds.is_empty() {
        vec![None]
    } else {
        cfg.seeds.iter().map(|&s| Some(s)).collect()
    };
    let mut sweep = vec![cfg.norm_params];
    sweep.extend(cfg.norm_sweep.iter().copied());

    let mut checks = Vec::new();
    let mut norm_ratios = Vec::new();
    let mut per_time = Vec::new();
    let mut first_traj: Option<Trajectory> = None;
    let mut sup_all: f64 = 0.0;
    let mut max_mpe: f64 = 0.0;

    for &seed in &seeds {
        let data = match seed {
            Some(s) => cfg.initial_with_seed(s),
            None => cfg.initial_data.clone(),
        };
        let grid = cfg.build_grid()?;
        let q0 = data.build(&grid)?;
        let trajectory = evolve(&q0, solver)?;
        let invariants: Vec<_> = trajectory
            .snapshots
            .iter()
            .map(conserved_quantities)
            .collect();
        max_mpe = max_mpe.max(DriftSummary::from_invariants(&invariants).max());

        for params in &sweep {
            let mut besov_sup: f64 = 0.0;
            let mut z_sup: f64 = 0.0;
            let mut besov0 = 0.0;
            let mut z0 = 0.0;
            for (i, snap) in trajectory.snapshots.iter().enumerate() {
                let (besov, z) = norms_for(snap, params)?;
                if i == 0 {
                    besov0 = besov;
                    z0 = z;
                } else {
                    if besov0 > 0.0 {
                        besov_sup = besov_sup.max(besov / besov0);
                    }
                    if z0 > 0.0 {
                        z_sup = z_sup.max(z / z0);
                    }
                }
            }
            besov_sup = besov_sup.max(1.0);
            z_sup = z_sup.max(1.0);
            sup_all = sup_all.max(besov_sup);
            let label = match seed {
                Some(s) => format!("seed{s}-"),
                None => String::new(),
            };
            let r_label = match params.r {
                crate::norms::LebesgueOrder::Finite(r) => format!("{r}"),
                crate::norms::LebesgueOrder::Infinity => "inf".into(),
            };
            checks.push(CheckResult::upper(
                format!("besov-ratio-{label}s{}-r{}", params.s, r_label),
                "sup_t ||q(t)||_B / ||q(0)||_B stays bounded for small data",
                besov_sup,
                tol.norm_ratio_sup,
            ));
            norm_ratios.push(NormRatioSweep {
                seed,
                params: *params,
                besov_ratio_sup: besov_sup,
                z_ratio_sup: z_sup,
            });
        }

        if first_traj.is_none() {
            for (i, snap) in trajectory.snapshots.iter().enumerate() {
                let (besov, z) = norms_for(snap, &cfg.norm_params)?;
                per_time.push(TimePoint {
                    t: trajectory.times[i],
                    alpha: vec![],
                    mass: invariants[i].mass,
                    momentum: invariants[i].momentum,
                    energy: invariants[i].energy,
                    besov: Some(besov),
                    z: Some(z),
                });
            }
            first_traj = Some(trajectory);
        }
    }

    let pass = checks.iter().all(|c| c.pass);
    let report = ExperimentReport {
        kind: ExperimentKind::Apriori.to_string(),
        config: cfg.clone(),
        checks,
        per_time,
        summary: Summary {
            max_drift_alpha: 0.0,
            max_drift_mpe: max_mpe,
            norm_ratio_sup: sup_all,
            pass,
        },
        trace_series: vec![],
        truncation_sensitivity: vec![],
        norm_ratios,
        rescaling: vec![],
        tail_fit: None,
    };
    Ok(ExperimentOutcome {
        report,
        trajectory: first_traj,
    })
}

/// Per-term decay of the series over a kappa sweep, plus the log-log fit of
/// the tail `|alpha - alpha_1|` against kappa.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate(Some(ExperimentKind::Convergence))?;
    let q0 = cfg.build_initial()?;
    let tol = &cfg.tolerances;
    let small_data = q0.l2_norm() <= 0.5;

    if q0.l2_norm() == 0.0 {
        // empty series: nothing to sum, nothing to fit
        let report = ExperimentReport {
            kind: ExperimentKind::Convergence.to_string(),
            config: cfg.clone(),
            checks: vec![CheckResult::flag(
                "empty-series",
                "zero data has an identically zero series",
                0.0,
                true,
            )],
            per_time: vec![],
            summary: Summary {
                max_drift_alpha: 0.0,
                max_drift_mpe: 0.0,
                norm_ratio_sup: 0.0,
                pass: true,
            },
            trace_series: vec![],
            truncation_sensitivity: vec![],
            norm_ratios: vec![],
            rescaling: vec![],
            tail_fit: None,
        };
        return Ok(ExperimentOutcome {
            report,
            trajectory: None,
        });
    }

    let radius = cfg.trace.radius_for(&q0);
    let mut checks = Vec::new();
    let mut trace_series = Vec::new();
    let mut kappas = cfg.kappas.clone();
    kappas.sort_by(|a, b| a.partial_cmp(b).expect("kappas are finite"));

    let mut fit_kappas = Vec::new();
    let mut fit_tails = Vec::new();
    for &kappa in &kappas {
        let series = alpha_series(&q0, kappa, cfg.trace.tol, cfg.trace.l_max, radius)?;
        let ratio = fitted_ratio(&series);
        if small_data {
            checks.push(CheckResult::flag(
                format!("geometric-ratio-k{kappa}"),
                "fitted per-order ratio below one in the small-data regime",
                ratio,
                ratio < 1.0 && series.converged,
            ));
        }
        let tail = (series.alpha - series.partial_sums_real[0]).abs();
        if tail > 0.0 {
            fit_kappas.push(kappa.ln());
            fit_tails.push(tail.ln());
        }
        trace_series.push(series.record());
    }

    let mut tail_fit = None;
    if fit_kappas.len() >= 3 {
        let slope = least_squares_slope(&fit_kappas, &fit_tails);
        let s_prime = cfg.norm_params.s.min(0.25);
        let ceiling = -4.0 * s_prime + tol.tail_slope_slack;
        if small_data {
            checks.push(CheckResult::flag(
                "tail-exponent",
                "log-log slope of |alpha - alpha_1| vs kappa stays below the predicted power",
                slope,
                slope <= ceiling,
            ));
        }
        tail_fit = Some(TailFit {
            kappas: fit_kappas.iter().map(|x| x.exp()).collect(),
            tails: fit_tails.iter().map(|x| x.exp()).collect(),
            slope,
            predicted_ceiling: ceiling,
        });
    }

    let pass = checks.iter().all(|c| c.pass);
    let report = ExperimentReport {
        kind: ExperimentKind::Convergence.to_string(),
        config: cfg.clone(),
        checks,
        per_time: vec![],
        summary: Summary {
            max_drift_alpha: 0.0,
            max_drift_mpe: 0.0,
            norm_ratio_sup: 0.0,
            pass,
        },
        trace_series,
        truncation_sensitivity: vec![],
        norm_ratios: vec![],
        rescaling: vec![],
        tail_fit,
    };
    Ok(ExperimentOutcome {
        report,
        trajectory: None,
    })
}

/// Scaling-critical L2 equality and Z-norm decay under the torus sweep.
pub fn run_rescaling(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate(Some(ExperimentKind::Rescaling))?;
    let q0 = cfg.build_initial()?;
    let tol = &cfg.tolerances;
    let l2_base = q0.l2_norm();

    let mut checks = Vec::new();
    let mut points = Vec::new();
    for &lambda in &cfg.lambdas {
        let scaled = rescale(&q0, lambda, None)?;
        // the Z sum must reach the target grid's Nyquist frequency
        let mut params = cfg.norm_params;
        while params.dyadic_max < scaled.grid().nyquist() {
            params.dyadic_max *= 2.0;
        }
        let z = z_norm(&scaled, &params)?;
        let l2 = scaled.l2_norm();
        checks.push(CheckResult::upper(
            format!("l2-scaling-lambda{lambda}"),
            "the L2 norm is invariant under the scaling map",
            (l2 - l2_base).abs() / l2_base.max(1e-300),
            tol.l2_scaling,
        ));
        points.push(RescalePoint {
            lambda,
            n_points: scaled.grid().n_points(),
            l2,
            z,
        });
    }

    let mut decreasing = true;
    let mut worst_ratio: f64 = 0.0;
    for w in points.windows(2) {
        if w[1].lambda > w[0].lambda && w[0].z > 0.0 {
            let r = w[1].z / w[0].z;
            worst_ratio = worst_ratio.max(r);
            if r >= 1.0 {
                decreasing = false;
            }
        }
    }
    checks.push(CheckResult::flag(
        "z-norm-decreasing",
        "the Z norm shrinks as the torus is rescaled larger",
        worst_ratio,
        decreasing,
    ));

    let pass = checks.iter().all(|c| c.pass);
    let report = ExperimentReport {
        kind: ExperimentKind::Rescaling.to_string(),
        config: cfg.clone(),
        checks,
        per_time: vec![],
        summary: Summary {
            max_drift_alpha: 0.0,
            max_drift_mpe: 0.0,
            norm_ratio_sup: worst_ratio,
            pass,
        },
        trace_series: vec![],
        truncation_sensitivity: vec![],
        norm_ratios: vec![],
        rescaling: points,
        tail_fit: None,
    };
    Ok(ExperimentOutcome {
        report,
        trajectory: None,
    })
}

/// Plain evolution with trajectory export metadata.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<(SimulationManifest, Trajectory)> {
    cfg.validate(None)?;
    let q0 = cfg.build_initial()?;
    let solver = cfg.solver()?;
    let trajectory = evolve(&q0, solver)?;
    let invariants: Vec<_> = trajectory
        .snapshots
        .iter()
        .map(conserved_quantities)
        .collect();
    let manifest = SimulationManifest {
        config: cfg.clone(),
        times: trajectory.times.clone(),
        snapshot_files: (0..trajectory.snapshots.len())
            .map(|i| format!("snapshot_{i:04}.csv"))
            .collect(),
        drifts: DriftSummary::from_invariants(&invariants),
    };
    Ok((manifest, trajectory))
}

/// Trace series of the initial data for every configured kappa.
pub fn run_alpha(cfg: &ExperimentConfig) -> Result<Vec<TraceSeriesRecord>> {
    cfg.validate(None)?;
    let q0 = cfg.build_initial()?;
    let radius = cfg.trace.radius_for(&q0);
    cfg.kappas
        .iter()
        .map(|&kappa| {
            alpha_series(&q0, kappa, cfg.trace.tol, cfg.trace.l_max, radius).map(|s| s.record())
        })
        .collect()
}

/// Norm zoo of the initial data, including the per-block identity columns.
pub fn run_norms(cfg: &ExperimentConfig) -> Result<NormReport> {
    cfg.validate(None)?;
    let q0 = cfg.build_initial()?;
    let params = cfg.norm_params;
    let z = z_norm(&q0, &params)?;
    let besov = besov_norm(&q0, &params)?;
    let sobolev = sobolev_norm(&q0, params.s);
    let l2 = q0.l2_norm();
    let mut per_block = Vec::new();
    let mut n = params.dyadic_min.max(2.0);
    while n <= params.dyadic_max {
        per_block.push(BlockEntry {
            n,
            pairing: weighted_pairing(&q0, n),
            alpha_diff: z_block_from_alpha(&q0, n)?,
        });
        n *= 2.0;
    }
    Ok(NormReport {
        s: params.s,
        r: params.r,
        lambda: q0.grid().lambda(),
        values: NormValues {
            z,
            besov,
            sobolev,
            l2,
        },
        per_block,
    })
}

/// Dispatch an experiment by its configured kind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let kind = cfg.kind.ok_or_else(|| {
        LabError::InvalidExperimentConfig("config must set a kind for this entry point".into())
    })?;
    match kind {
        ExperimentKind::Conservation => run_conservation(cfg),
        ExperimentKind::Apriori => run_apriori(cfg),
        ExperimentKind::Convergence => run_convergence(cfg),
        ExperimentKind::Rescaling => run_rescaling(cfg),
    }
}
