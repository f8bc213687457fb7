//! The conserved perturbation-determinant series
//!
//! ```text
//!     alpha(kappa; q) = Re sum_{l >= 1} ((-1)^l i^{l+1} kappa^l / l)
//!                            tr{ [ (kappa - d)^{-1} q (kappa + d)^{-1} conj(q) ]^l }
//! ```
//!
//! evaluated through dense truncated matrices, together with the closed-form
//! leading term on the torus,
//!
//! ```text
//!     Re tr( kappa (kappa-d)^{-1} u (kappa+d)^{-1} conj(u) )
//!         = C(lambda, kappa) * (1/lambda) sum_xi 2 kappa^2 |uhat(xi)|^2 / (4 kappa^2 + xi^2),
//!     C(lambda, kappa) = (1 + e^{-2 pi lambda kappa}) / (1 - e^{-2 pi lambda kappa}),
//! ```
//!
//! which anchors the sign and prefactor convention of the whole series: the
//! l = 1 term must reproduce the (positive) right-hand side above.
//!
//! Truncation behaviour: the trace of the l = 1 term converges to the closed
//! form at first order in 1/radius (the resolvent tail decays like 1/xi^2
//! along the diagonal); higher-order terms converge much faster. The series
//! itself converges geometrically once the loop operator is a contraction,
//! which is the small-data / large-kappa regime.

use crate::error::{LabError, Result};
use crate::field::Field;
use crate::operators::{multiplication_matrix, ModeSet};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Circle correction factor `C(lambda, kappa)`; tends to 1 as
/// `lambda * kappa` grows, recovering the line identities.
pub fn circle_correction(lambda: f64, kappa: f64) -> f64 {
    let e = (-2.0 * PI * lambda * kappa).exp();
    (1.0 + e) / (1.0 - e)
}

/// Series prefactor `(-1)^l i^{l+1} kappa^l / l`.
pub fn alpha_prefactor(l: usize, kappa: f64) -> Complex64 {
    let i_pow = match (l + 1) % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
    i_pow * sign * kappa.powi(l as i32) / l as f64
}

/// Default truncation radius: `max(64 / lambda, 8 * l_max * bandwidth(q))`.
pub fn default_truncation_radius(q: &Field, l_max: usize) -> f64 {
    let bw = q.bandwidth(1e-12).max(1.0);
    (64.0 / q.grid().lambda()).max(8.0 * l_max as f64 * bw)
}

/// The loop matrix `T = (kappa - d)^{-1} M_q (kappa + d)^{-1} M_qbar` over the
/// truncated lattice; `tr(T^l)` supplies the series terms.
fn loop_matrix(q: &Field, kappa: f64, modes: &ModeSet) -> Result<Array2<Complex64>> {
    let mq = multiplication_matrix(q, modes)?;
    let mqbar = mq.adjoint(); // multiplication by conj(q)
    let m = modes.len();
    let mut left = mq.entries().clone();
    for i in 0..m {
        let dm = Complex64::new(kappa, -modes.xi(i)).inv(); // (kappa - d)^{-1}
        for j in 0..m {
            let dp = Complex64::new(kappa, modes.xi(j)).inv(); // (kappa + d)^{-1}
            left[(i, j)] *= dm * dp;
        }
    }
    Ok(left.dot(mqbar.entries()))
}

/// `tr(A B)` without forming the product.
fn trace_of_product(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    let m = a.nrows();
    let mut acc = Complex64::ZERO;
    for i in 0..m {
        for k in 0..m {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn guard_truncation(radius: f64, l: usize, bandwidth: f64) -> Result<()> {
    if radius < l as f64 * bandwidth + 2.0 {
        return Err(LabError::TruncationTooSmall {
            radius,
            order: l,
            bandwidth,
        });
    }
    Ok(())
}

/// Single series term `alpha_l` with the fixed prefactor, by a standard
/// matrix trace of the l-th power of the loop matrix.
pub fn alpha_term(q: &Field, kappa: f64, l: usize, truncation_radius: f64) -> Result<Complex64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(LabError::InvalidKappa(kappa));
    }
    if l == 0 {
        return Err(LabError::InvalidExperimentConfig(
            "series order l must be >= 1".into(),
        ));
    }
    let bw = q.bandwidth(1e-6);
    guard_truncation(truncation_radius, l, bw)?;
    let modes = ModeSet::from_radius(q.grid().lambda(), truncation_radius)?;
    let t = loop_matrix(q, kappa, &modes)?;
    let mut power = t.clone();
    for _ in 1..l {
        power = power.dot(&t);
    }
    let tau = power.diag().sum();
    Ok(alpha_prefactor(l, kappa) * tau)
}

/// Per-order terms of the series plus convergence metadata.
#[derive(Debug, Clone)]
pub struct TraceSeries {
    pub kappa: f64,
    /// `alpha_l` with prefactors applied, `l = 1..=terms.len()`.
    pub terms: Vec<Complex64>,
    /// Running real parts `Re sum_{l' <= l} alpha_{l'}`.
    pub partial_sums_real: Vec<f64>,
    /// Real part of the final partial sum; the alpha estimate.
    pub alpha: f64,
    /// Empirical geometric ratio `|alpha_{L}| / |alpha_{L-1}|` of the last pair.
    pub ratio_estimate: f64,
    /// `|alpha_L| / (1 - ratio_estimate)` when the ratio is below one.
    pub tail_bound: f64,
    pub truncation_radius: f64,
    pub converged: bool,
}

/// Record form matching the serialized interchange schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSeriesRecord {
    pub kappa: f64,
    pub terms: Vec<TermRecord>,
    pub alpha: f64,
    pub ratio_estimate: f64,
    pub tail_bound: f64,
    pub truncation_radius: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermRecord {
    pub l: usize,
    pub re: f64,
    pub im: f64,
}

impl TraceSeries {
    pub fn record(&self) -> TraceSeriesRecord {
        TraceSeriesRecord {
            kappa: self.kappa,
            terms: self
                .terms
                .iter()
                .enumerate()
                .map(|(i, c)| TermRecord {
                    l: i + 1,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
            alpha: self.alpha,
            ratio_estimate: self.ratio_estimate,
            tail_bound: self.tail_bound,
            truncation_radius: self.truncation_radius,
            converged: self.converged,
        }
    }
}

/// Evaluate the series until the geometric tail bound drops below `tol`
/// (absolute) or `l_max` terms have been taken.
///
/// Non-convergence (empirical ratio >= 1) is reported through the `converged`
/// flag, not an error: it signals leaving the small-data regime.
pub fn alpha_series(
    q: &Field,
    kappa: f64,
    tol: f64,
    l_max: usize,
    truncation_radius: f64,
) -> Result<TraceSeries> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(LabError::InvalidKappa(kappa));
    }
    if l_max < 3 {
        return Err(LabError::InvalidExperimentConfig(format!(
            "l_max must be >= 3, got {l_max}"
        )));
    }
    if q.l2_norm() == 0.0 {
        return Ok(TraceSeries {
            kappa,
            terms: vec![Complex64::ZERO],
            partial_sums_real: vec![0.0],
            alpha: 0.0,
            ratio_estimate: 0.0,
            tail_bound: 0.0,
            truncation_radius,
            converged: true,
        });
    }
    let bw = q.bandwidth(1e-6);
    guard_truncation(truncation_radius, 1, bw)?;
    let modes = ModeSet::from_radius(q.grid().lambda(), truncation_radius)?;
    let t = loop_matrix(q, kappa, &modes)?;

    let mut terms: Vec<Complex64> = vec![alpha_prefactor(1, kappa) * t.diag().sum()];
    let mut sums = vec![terms[0].re];
    let mut ratio = f64::INFINITY;
    let mut tail = f64::INFINITY;
    let mut converged = false;

    // rolling power: p holds T^k; even orders come from tr(T^k T^k), odd
    // orders 2k+1 from tr(T^{k+1} T^k) formed while advancing k
    let mut p = t.clone();
    let mut l = 1;
    while l < l_max {
        l += 1;
        guard_truncation(truncation_radius, l, bw)?;
        let tau = if l % 2 == 0 {
            trace_of_product(&p, &p)
        } else {
            let next = p.dot(&t);
            let tau = trace_of_product(&next, &p);
            p = next;
            tau
        };
        terms.push(alpha_prefactor(l, kappa) * tau);
        sums.push(sums[l - 2] + terms[l - 1].re);

        let prev = terms[l - 2].norm();
        let last = terms[l - 1].norm();
        ratio = if prev > 0.0 {
            last / prev
        } else if last == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        tail = if ratio < 1.0 {
            last / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        if ratio < 1.0 && tail <= tol {
            converged = true;
            break;
        }
    }

    Ok(TraceSeries {
        kappa,
        alpha: *sums.last().expect("at least one term"),
        terms,
        partial_sums_real: sums,
        ratio_estimate: ratio,
        tail_bound: tail,
        truncation_radius,
        converged,
    })
}

/// Closed-form value of the leading term,
/// `C(lambda, kappa) * (1/lambda) sum_xi 2 kappa^2 |qhat(xi)|^2 / (4 kappa^2 + xi^2)`.
///
/// Serves as the independent oracle for `alpha_term(l = 1)`; hypotheses
/// `kappa >= 1`, `lambda >= 1`.
pub fn leading_term_exact(q: &Field, kappa: f64) -> Result<f64> {
    let lambda = q.grid().lambda();
    if !(kappa >= 1.0) || !(lambda >= 1.0) {
        return Err(LabError::LeadingTermHypothesis { kappa, lambda });
    }
    let grid = q.grid();
    let mut sum = 0.0;
    for (i, c) in q.spectrum().iter().enumerate() {
        let xi = grid.mode(i);
        sum += 2.0 * kappa * kappa * c.norm_sqr() / (4.0 * kappa * kappa + xi * xi);
    }
    Ok(circle_correction(lambda, kappa) * sum / lambda)
}

/// Weighted spectral sum bounding the Hilbert-Schmidt norm of
/// `(kappa - d)^{-1/2} q (kappa + d)^{-1/2}`, plus the Frobenius norm of the
/// actual truncated matrix so the equivalence ratio can be reported.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HsReport {
    /// `(1/lambda) sum_xi log(4 + xi^2/kappa^2) |qhat(xi)|^2 / sqrt(4 kappa^2 + xi^2)`
    pub weighted_sum: f64,
    /// Squared Frobenius norm of the truncated matrix.
    pub frobenius_sq: f64,
}

impl HsReport {
    /// Measured equivalence constant `frobenius_sq / weighted_sum`.
    pub fn ratio(&self) -> f64 {
        self.frobenius_sq / self.weighted_sum
    }
}

pub fn hs_norm_sq(q: &Field, kappa: f64, truncation_radius: f64) -> Result<HsReport> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(LabError::InvalidKappa(kappa));
    }
    let grid = q.grid();
    let lambda = grid.lambda();
    let mut weighted_sum = 0.0;
    for (i, c) in q.spectrum().iter().enumerate() {
        let xi = grid.mode(i);
        weighted_sum += (4.0 + xi * xi / (kappa * kappa)).ln() * c.norm_sqr()
            / (4.0 * kappa * kappa + xi * xi).sqrt();
    }
    weighted_sum /= lambda;

    let modes = ModeSet::from_radius(lambda, truncation_radius)?;
    let mq = multiplication_matrix(q, &modes)?;
    let m = modes.len();
    let mut frobenius_sq = 0.0;
    for i in 0..m {
        let xi = modes.xi(i);
        let wi = 1.0 / (kappa * kappa + xi * xi).sqrt(); // |(kappa - i xi)^{-1/2}|^2
        for j in 0..m {
            let eta = modes.xi(j);
            let wj = 1.0 / (kappa * kappa + eta * eta).sqrt();
            let e = mq.entry(i, j).norm_sqr();
            if e > 0.0 {
                frobenius_sq += wi * e * wj;
            }
        }
    }
    Ok(HsReport {
        weighted_sum,
        frobenius_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::samples;
    use approx::assert_relative_eq;

    #[test]
    fn prefactor_cycle() {
        let k = 1.3f64;
        assert!((alpha_prefactor(1, k) - Complex64::new(k, 0.0)).norm() < 1e-15);
        assert!((alpha_prefactor(2, k) - Complex64::new(0.0, -k * k / 2.0)).norm() < 1e-15);
        assert!((alpha_prefactor(3, k) - Complex64::new(-k.powi(3) / 3.0, 0.0)).norm() < 1e-15);
        assert!((alpha_prefactor(4, k) - Complex64::new(0.0, k.powi(4) / 4.0)).norm() < 1e-15);
    }

    #[test]
    fn circle_correction_values() {
        let e = (-2.0 * PI).exp();
        assert_relative_eq!(
            circle_correction(1.0, 1.0),
            (1.0 + e) / (1.0 - e),
            max_relative = 1e-15
        );
        // line limit: the factor collapses to exactly 1 in f64 for large lambda*kappa
        assert_eq!(circle_correction(64.0, 2.0), 1.0);
    }

    #[test]
    fn leading_term_anchor_value() {
        // q = 0.1 e^{ix}, kappa = 1, lambda = 1:
        // C(1,1) * 2 * (2 pi 0.01) / 5  ~  0.0252268
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let q = samples::plane_wave(&grid, 0.1, 1).unwrap();
        let expect = circle_correction(1.0, 1.0) * 2.0 * (2.0 * PI * 0.01) / 5.0;
        let got = leading_term_exact(&q, 1.0).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-14);
        assert_relative_eq!(got, 0.0252268, max_relative = 1e-5);
    }

    #[test]
    fn leading_term_hypothesis_guard() {
        let grid = TorusGrid::new(1.0, 32).unwrap();
        let q = samples::plane_wave(&grid, 0.1, 1).unwrap();
        assert!(matches!(
            leading_term_exact(&q, 0.5),
            Err(LabError::LeadingTermHypothesis { .. })
        ));
    }

    #[test]
    fn leading_term_of_zero() {
        let grid = TorusGrid::new(1.0, 32).unwrap();
        assert_eq!(leading_term_exact(&Field::zero(grid), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn alpha_term_of_zero_vanishes() {
        let grid = TorusGrid::new(1.0, 32).unwrap();
        let z = Field::zero(grid);
        for l in 1..=3 {
            assert_eq!(alpha_term(&z, 1.0, l, 16.0).unwrap(), Complex64::ZERO);
        }
    }

    #[test]
    fn matrix_trace_approaches_closed_form_at_first_order() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let q = samples::plane_wave(&grid, 0.1, 1).unwrap();
        let exact = leading_term_exact(&q, 1.0).unwrap();
        let err_at = |radius: f64| {
            let a1 = alpha_term(&q, 1.0, 1, radius).unwrap().re;
            ((a1 - exact) / exact).abs()
        };
        let e128 = err_at(128.0);
        let e256 = err_at(256.0);
        assert!(e256 < 8e-3, "error at radius 256: {e256:.3e}");
        let improvement = e128 / e256;
        assert!(
            (1.7..=2.3).contains(&improvement),
            "expected first-order decay, got ratio {improvement:.3}"
        );
    }

    #[test]
    fn quadratic_homogeneity_of_terms() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let q = samples::random_band(&grid, 3, 4.0, 0.2).unwrap();
        let doubled = q.scaled(Complex64::new(2.0, 0.0));
        for l in [1usize, 2] {
            let a = alpha_term(&q, 1.5, l, 48.0).unwrap();
            let b = alpha_term(&doubled, 1.5, l, 48.0).unwrap();
            let factor = 4f64.powi(l as i32);
            assert!(
                (b - a * factor).norm() <= 1e-12 * b.norm(),
                "homogeneity violated at l={l}"
            );
        }
    }

    #[test]
    fn global_phase_leaves_terms_unchanged() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let q = samples::random_band(&grid, 5, 4.0, 0.2).unwrap();
        let rotated = q.scaled(Complex64::from_polar(1.0, 0.7));
        for l in [1usize, 2, 3] {
            let a = alpha_term(&q, 1.0, l, 48.0).unwrap();
            let b = alpha_term(&rotated, 1.0, l, 48.0).unwrap();
            assert!(
                (a - b).norm() <= 1e-10 * a.norm().max(1e-300),
                "phase dependence at l={l}"
            );
        }
    }

    #[test]
    fn series_of_zero_field() {
        let grid = TorusGrid::new(1.0, 32).unwrap();
        let s = alpha_series(&Field::zero(grid), 1.0, 1e-12, 6, 16.0).unwrap();
        assert!(s.converged);
        assert_eq!(s.alpha, 0.0);
        assert_eq!(s.terms, vec![Complex64::ZERO]);
    }

    #[test]
    fn series_converges_for_small_data() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let q = samples::random_band(&grid, 7, 4.0, 0.1).unwrap();
        let s = alpha_series(&q, 1.0, 1e-14, 8, 48.0).unwrap();
        assert!(s.converged, "ratio {}", s.ratio_estimate);
        assert!(s.ratio_estimate < 1.0);
        assert!(s.alpha > 0.0); // leading term dominates and is positive
        assert_eq!(s.partial_sums_real.len(), s.terms.len());
    }

    #[test]
    fn series_flags_large_data() {
        // concentrated low-frequency data at L2 norm 3 pushes the loop
        // operator past a contraction; the terms eventually grow
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let q = samples::random_band(&grid, 7, 1.0, 3.0).unwrap();
        let s = alpha_series(&q, 1.0, 1e-14, 6, 40.0).unwrap();
        assert!(!s.converged);
        assert!(s.ratio_estimate >= 1.0, "ratio {}", s.ratio_estimate);
        assert!(s.tail_bound.is_infinite());
    }

    #[test]
    fn ratio_decreases_with_kappa() {
        // monotone once kappa reaches the data bandwidth; below it the
        // resolvent weights are flat across the band and the trend reverses
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let q = samples::random_band(&grid, 11, 4.0, 0.2).unwrap();
        let mut prev = f64::INFINITY;
        for kappa in [4.0, 8.0, 16.0, 32.0] {
            let s = alpha_series(&q, kappa, 0.0, 4, 64.0).unwrap();
            assert!(
                s.ratio_estimate < prev,
                "ratio not decreasing at kappa={kappa}: {} !< {prev}",
                s.ratio_estimate
            );
            prev = s.ratio_estimate;
        }
    }

    #[test]
    fn series_guards_truncation() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let q = samples::random_band(&grid, 3, 8.0, 0.1).unwrap();
        assert!(matches!(
            alpha_series(&q, 1.0, 0.0, 8, 9.0),
            Err(LabError::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn hs_sum_constant_field_example() {
        // q == 0.1 on T_1, kappa = 1: single xi = 0 term log(4) * 2 pi 0.01 / 2
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let q = Field::constant(grid, Complex64::new(0.1, 0.0));
        let r = hs_norm_sq(&q, 1.0, 16.0).unwrap();
        let expect = 4f64.ln() * 2.0 * PI * 0.01 / 2.0;
        assert_relative_eq!(r.weighted_sum, expect, max_relative = 1e-13);
        assert_relative_eq!(r.weighted_sum, 0.043556, max_relative = 1e-4);
    }

    #[test]
    fn hs_sum_is_quadratically_homogeneous() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let q = samples::random_band(&grid, 13, 6.0, 0.3).unwrap();
        let r1 = hs_norm_sq(&q, 2.0, 32.0).unwrap();
        let r2 = hs_norm_sq(&q.scaled(Complex64::new(3.0, 0.0)), 2.0, 32.0).unwrap();
        assert_relative_eq!(r2.weighted_sum, 9.0 * r1.weighted_sum, max_relative = 1e-12);
        assert_relative_eq!(r2.frobenius_sq, 9.0 * r1.frobenius_sq, max_relative = 1e-12);
    }

    #[test]
    fn hs_sum_obeys_sup_bound() {
        let grid = TorusGrid::new(1.0, 128).unwrap();
        let q = samples::random_band(&grid, 17, 8.0, 0.4).unwrap();
        for kappa in [1.0, 2.0, 4.0] {
            let r = hs_norm_sq(&q, kappa, 32.0).unwrap();
            let sup = q
                .grid()
                .modes()
                .iter()
                .map(|&xi| (4.0 + xi * xi / (kappa * kappa)).ln() / (4.0 * kappa * kappa + xi * xi).sqrt())
                .fold(0.0f64, f64::max);
            let l2 = q.l2_norm();
            assert!(r.weighted_sum <= sup * l2 * l2 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn record_layout() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let q = samples::random_band(&grid, 7, 4.0, 0.1).unwrap();
        let s = alpha_series(&q, 1.0, 1e-14, 6, 48.0).unwrap();
        let rec = s.record();
        assert_eq!(rec.terms[0].l, 1);
        assert_eq!(rec.terms[0].re, s.terms[0].re);
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.starts_with("{\"kappa\""));
        assert!(json.contains("\"converged\""));
    }
}
