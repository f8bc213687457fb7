//! The norm family used by the a-priori estimates: the weighted pairing built
//! from
//!
//! ```text
//!     w(xi, kappa) = kappa^2/(xi^2 + 4 kappa^2) - (kappa/2)^2/(xi^2 + kappa^2)
//!                  = 3 kappa^2 xi^2 / (4 (xi^2 + kappa^2)(xi^2 + 4 kappa^2)),
//! ```
//!
//! the dyadic `Z^s_r` norm assembled from those pairings, sharp-cutoff
//! Littlewood-Paley Besov norms, Sobolev norms, and the identity expressing a
//! dyadic block through differences of the closed-form leading term:
//!
//! ```text
//!     <f, w(-i d/dx, N) f> = (1/2) [ alpha_1(N, f)/C(lambda, N)
//!                                    - alpha_1(N/2, f)/C(lambda, N/2) ].
//! ```
//!
//! Dyadic sums run over `N = dyadic_min, 2 dyadic_min, ..., dyadic_max`; the
//! starting block defaults to `N = 2` so that `N/2 >= 1` keeps the closed-form
//! identity inside its hypotheses. Sharp Fourier cutoffs are used throughout,
//! keeping every identity an exact finite sum.

use crate::alpha::{circle_correction, leading_term_exact};
use crate::error::{LabError, Result};
use crate::field::Field;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exponent `r in [1, infinity]` of the dyadic l^r sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LebesgueOrder {
    Finite(f64),
    Infinity,
}

impl LebesgueOrder {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LebesgueOrder::Finite(r) if r >= 1.0 && r.is_finite() => Ok(()),
            LebesgueOrder::Infinity => Ok(()),
            LebesgueOrder::Finite(r) => Err(LabError::InvalidNormParams(format!(
                "r must lie in [1, infinity], got {r}"
            ))),
        }
    }
}

impl Serialize for LebesgueOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            LebesgueOrder::Finite(r) => s.serialize_f64(r),
            LebesgueOrder::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for LebesgueOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(r) if r.is_infinite() && r > 0.0 => Ok(LebesgueOrder::Infinity),
            Raw::Num(r) => Ok(LebesgueOrder::Finite(r)),
            Raw::Text(ttt) => match ttt.as_str() {
                "inf" | "infty" | "infinity" => Ok(LebesgueOrder::Infinity),
                other => Err(D::Error::custom(format!("unrecognized order: {other}"))),
            },
        }
    }
}

fn default_dyadic_min() -> f64 {
    2.0
}

/// Regularity and summation parameters for the dyadic norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    /// Regularity index, `0 < s < 1/2`.
    pub s: f64,
    pub r: LebesgueOrder,
    /// Largest dyadic block in the sum (power of two, `>= 2`).
    pub dyadic_max: f64,
    /// First dyadic block (power of two). Defaults to 2, keeping `N/2 >= 1`
    /// inside the closed-form identity's hypotheses.
    #[serde(default = "default_dyadic_min")]
    pub dyadic_min: f64,
}

impl NormParams {
    pub fn new(s: f64, r: LebesgueOrder, dyadic_max: f64) -> Self {
        Self {
            s,
            r,
            dyadic_max,
            dyadic_min: default_dyadic_min(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 0.5) {
            return Err(LabError::InvalidNormParams(format!(
                "s must lie in (0, 1/2), got {}",
                self.s
            )));
        }
        self.r.validate()?;
        for (name, v) in [("dyadic_max", self.dyadic_max), ("dyadic_min", self.dyadic_min)] {
            let l = v.log2();
            if !(v >= 1.0) || (l - l.round()).abs() > 1e-12 {
                return Err(LabError::InvalidNormParams(format!(
                    "{name} must be a power of two >= 1, got {v}"
                )));
            }
        }
        if self.dyadic_max < 2.0 {
            return Err(LabError::InvalidNormParams(format!(
                "dyadic_max must be >= 2, got {}",
                self.dyadic_max
            )));
        }
        if self.dyadic_min > self.dyadic_max {
            return Err(LabError::InvalidNormParams(
                "dyadic_min exceeds dyadic_max".into(),
            ));
        }
        Ok(())
    }

    fn blocks(&self) -> impl Iterator<Item = f64> {
        let min = self.dyadic_min;
        let max = self.dyadic_max;
        std::iter::successors(Some(min), |n| Some(n * 2.0)).take_while(move |&n| n <= max)
    }
}

/// The nonnegative multiplier weight; evaluated through its factored form,
/// which is manifestly nonnegative and cancellation-free.
pub fn weight_w(xi: f64, n: f64) -> f64 {
    3.0 * n * n * xi * xi / (4.0 * (xi * xi + n * n) * (xi * xi + 4.0 * n * n))
}

/// `<f, w(-i d/dx, N) f> = (1/lambda) sum_xi w(xi, N) |fhat(xi)|^2`.
pub fn weighted_pairing(f: &Field, n: f64) -> f64 {
    let grid = f.grid();
    let mut sum = 0.0;
    for (i, c) in f.spectrum().iter().enumerate() {
        let sq = c.norm_sqr();
        if sq > 0.0 {
            sum += weight_w(grid.mode(i), n) * sq;
        }
    }
    sum / grid.lambda()
}

/// Dyadic `Z^s_r` norm: `( sum_N N^{rs} <f, w(.,N) f>^{r/2} )^{1/r}`, with the
/// supremum over blocks when `r = infinity`.
pub fn z_norm(f: &Field, p: &NormParams) -> Result<f64> {
    p.validate()?;
    if p.dyadic_max < f.grid().nyquist() {
        return Err(LabError::InvalidNormParams(format!(
            "dyadic_max = {} does not reach the grid Nyquist frequency {}",
            p.dyadic_max,
            f.grid().nyquist()
        )));
    }
    match p.r {
        LebesgueOrder::Infinity => {
            let mut sup = 0.0f64;
            for n in p.blocks() {
                sup = sup.max(n.powf(p.s) * weighted_pairing(f, n).sqrt());
            }
            Ok(sup)
        }
        LebesgueOrder::Finite(r) => {
            let mut sum = 0.0f64;
            for n in p.blocks() {
                sum += n.powf(r * p.s) * weighted_pairing(f, n).powf(r / 2.0);
            }
            Ok(sum.powf(1.0 / r))
        }
    }
}

/// L2 mass of the sharp dyadic shell `N/2 < |xi| <= N` (the block at `N = 1`
/// collects `|xi| <= 1`).
fn shell_mass(f: &Field, n: f64) -> f64 {
    let grid = f.grid();
    let lo = if n == 1.0 { -1.0 } else { n / 2.0 };
    let mut sum = 0.0;
    for (i, c) in f.spectrum().iter().enumerate() {
        let a = grid.mode(i).abs();
        if a > lo && a <= n {
            sum += c.norm_sqr();
        }
    }
    sum / grid.lambda()
}

/// Littlewood-Paley Besov norm with sharp cutoffs:
/// `( sum_N N^{rs} ||P_N f||_2^r )^{1/r}` over `N = 1, 2, 4, ...` up to the
/// grid Nyquist frequency.
pub fn besov_norm(f: &Field, p: &NormParams) -> Result<f64> {
    if !(p.s > 0.0 && p.s < 0.5) {
        return Err(LabError::InvalidNormParams(format!(
            "s must lie in (0, 1/2), got {}",
            p.s
        )));
    }
    p.r.validate()?;
    let nyquist = f.grid().nyquist();
    let blocks = std::iter::successors(Some(1.0f64), |n| Some(n * 2.0))
        .take_while(|&n| n / 2.0 <= nyquist);
    match p.r {
        LebesgueOrder::Infinity => {
            let mut sup = 0.0f64;
            for n in blocks {
                sup = sup.max(n.powf(p.s) * shell_mass(f, n).sqrt());
            }
            Ok(sup)
        }
        LebesgueOrder::Finite(r) => {
            let mut sum = 0.0f64;
            for n in blocks {
                sum += n.powf(r * p.s) * shell_mass(f, n).powf(r / 2.0);
            }
            Ok(sum.powf(1.0 / r))
        }
    }
}

/// `( (1/lambda) sum_xi (1 + xi^2)^s |fhat(xi)|^2 )^{1/2}`; reduces to the L2
/// norm at `s = 0` and accepts any real `s` (negative orders included).
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    let grid = f.grid();
    let mut sum = 0.0;
    for (i, c) in f.spectrum().iter().enumerate() {
        let xi = grid.mode(i);
        let sq = c.norm_sqr();
        if sq > 0.0 {
            sum += (1.0 + xi * xi).powf(s) * sq;
        }
    }
    (sum / grid.lambda()).sqrt()
}

/// Dyadic block recovered from leading-term differences along the closed-form
/// path; equals [`weighted_pairing`] exactly (up to rounding).
pub fn z_block_from_alpha(f: &Field, n: f64) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(LabError::InvalidDyadicBlock(n));
    }
    let lambda = f.grid().lambda();
    let hi = leading_term_exact(f, n)? / circle_correction(lambda, n);
    let lo = leading_term_exact(f, n / 2.0)? / circle_correction(lambda, n / 2.0);
    Ok(0.5 * (hi - lo))
}

/// Same block through truncated matrix traces instead of the closed form;
/// agreement is limited by the first-order truncation tail.
pub fn z_block_from_alpha_traced(f: &Field, n: f64, truncation_radius: f64) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(LabError::InvalidDyadicBlock(n));
    }
    let lambda = f.grid().lambda();
    let hi = crate::alpha::alpha_term(f, n, 1, truncation_radius)?.re / circle_correction(lambda, n);
    let lo = crate::alpha::alpha_term(f, n / 2.0, 1, truncation_radius)?.re
        / circle_correction(lambda, n / 2.0);
    Ok(0.5 * (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::samples;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn weight_closed_forms_agree() {
        // difference form kappa^2/(xi^2+4kappa^2) - (kappa/2)^2/(xi^2+kappa^2)
        let difference = |xi: f64, n: f64| {
            n * n / (xi * xi + 4.0 * n * n) - (n / 2.0) * (n / 2.0) / (xi * xi + n * n)
        };
        for n in [1.0, 2.0, 8.0, 64.0] {
            for k in -200..=200 {
                let xi = k as f64 / 4.0;
                let a = weight_w(xi, n);
                let b = difference(xi, n);
                assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0 / n), "xi={xi} N={n}");
                assert!(a >= 0.0);
            }
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight_w(0.0, 4.0), 0.0);
        for n in [1.0, 2.0, 16.0] {
            assert_relative_eq!(weight_w(n, n), 3.0 / 40.0, max_relative = 1e-15);
            assert_eq!(weight_w(-3.7, n), weight_w(3.7, n));
        }
    }

    #[test]
    fn pairing_single_mode_example() {
        // f = 0.1 e^{ix} on T_1, N = 1: w(1,1) * 2 pi 0.01 = 0.075 * 0.0628...
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let f = samples::plane_wave(&grid, 0.1, 1).unwrap();
        let got = weighted_pairing(&f, 1.0);
        assert_relative_eq!(got, 0.075 * 2.0 * PI * 0.01, max_relative = 1e-13);
        assert_relative_eq!(got, 0.00471239, max_relative = 1e-5);
    }

    #[test]
    fn pairing_of_constants_and_zero() {
        let grid = TorusGrid::new(1.0, 32).unwrap();
        let c = Field::constant(grid, Complex64::new(0.3, 0.1));
        assert_eq!(weighted_pairing(&c, 4.0), 0.0); // only xi = 0, w(0, N) = 0
        assert_eq!(weighted_pairing(&Field::zero(grid), 4.0), 0.0);
    }

    #[test]
    fn z_norm_homogeneity_and_zero() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let p = NormParams::new(0.25, LebesgueOrder::Finite(2.0), 32.0);
        assert_eq!(z_norm(&Field::zero(grid), &p).unwrap(), 0.0);
        let f = samples::random_band(&grid, 3, 8.0, 0.2).unwrap();
        let a = z_norm(&f, &p).unwrap();
        let b = z_norm(&f.scaled(Complex64::new(2.0, 0.0)), &p).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-12);
    }

    #[test]
    fn z_norm_single_mode_against_direct_sum() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let f = samples::plane_wave(&grid, 0.1, 1).unwrap();
        let p = NormParams::new(0.25, LebesgueOrder::Finite(2.0), 32.0);
        let got = z_norm(&f, &p).unwrap();
        // brute-force dyadic sum over N in {2,4,8,16,32}
        let mass = 2.0 * PI * 0.01;
        let mut sum = 0.0f64;
        let mut n = 2.0f64;
        while n <= 32.0 {
            sum += n.powf(0.5) * (weight_w(1.0, n) * mass);
            n *= 2.0;
        }
        assert_relative_eq!(got, sum.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn z_norm_requires_nyquist_coverage() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let f = samples::plane_wave(&grid, 0.1, 1).unwrap();
        let p = NormParams::new(0.25, LebesgueOrder::Finite(2.0), 16.0);
        assert!(matches!(
            z_norm(&f, &p),
            Err(LabError::InvalidNormParams(_))
        ));
    }

    #[test]
    fn besov_single_shell() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        for (k, n_shell) in [(3i64, 4.0f64), (4, 4.0), (5, 8.0), (1, 1.0)] {
            let f = samples::plane_wave(&grid, 0.2, k).unwrap();
            for (s, r) in [(0.25, LebesgueOrder::Finite(2.0)), (0.375, LebesgueOrder::Infinity)] {
                let p = NormParams::new(s, r, 32.0);
                let got = besov_norm(&f, &p).unwrap();
                let expect = n_shell.powf(s) * f.l2_norm();
                assert_relative_eq!(got, expect, max_relative = 1e-12);
            }
        }
        assert_eq!(
            besov_norm(&Field::zero(grid), &NormParams::new(0.25, LebesgueOrder::Finite(2.0), 32.0))
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn besov_r2_comparable_to_sobolev_shellwise() {
        let grid = TorusGrid::new(1.0, 128).unwrap();
        let s = 0.25;
        let p = NormParams::new(s, LebesgueOrder::Finite(2.0), 64.0);
        for seed in 0..10 {
            let f = samples::random_band(&grid, seed, 20.0, 0.3).unwrap();
            let b = besov_norm(&f, &p).unwrap();
            let h = sobolev_norm(&f, s);
            // shell-wise oracle: bound N^s vs (1+xi^2)^{s/2} over occupied modes
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for (i, c) in f.spectrum().iter().enumerate() {
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let xi = f.grid().mode(i).abs();
                let n = if xi <= 1.0 {
                    1.0
                } else {
                    2f64.powf(xi.log2().ceil())
                };
                let ratio = n.powf(s) / (1.0 + xi * xi).powf(s / 2.0);
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            let measured = b / h;
            assert!(
                measured >= lo * (1.0 - 1e-12) && measured <= hi * (1.0 + 1e-12),
                "ratio {measured} outside shell oracle [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn sobolev_examples() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let f = samples::random_band(&grid, 9, 8.0, 0.4).unwrap();
        assert_relative_eq!(sobolev_norm(&f, 0.0), f.l2_norm(), max_relative = 1e-14);

        let single = samples::plane_wave(&grid, 0.1, 1).unwrap();
        let expect = 2f64.powf(0.25) * 0.1 * (2.0 * PI).sqrt();
        assert_relative_eq!(sobolev_norm(&single, 0.5), expect, max_relative = 1e-13);
        assert_relative_eq!(sobolev_norm(&single, 0.5), 0.29807, max_relative = 1e-4);

        let k3 = samples::plane_wave(&grid, 0.2, 3).unwrap();
        assert_relative_eq!(
            sobolev_norm(&k3, 0.3),
            10f64.powf(0.15) * k3.l2_norm(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn block_identity_single_mode() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        let f = samples::plane_wave(&grid, 0.3, 1).unwrap();
        let lhs = z_block_from_alpha(&f, 2.0).unwrap();
        let rhs = weighted_pairing(&f, 2.0);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
    }

    #[test]
    fn block_identity_random_fields_every_block() {
        let grid = TorusGrid::new(2.0, 128).unwrap();
        for seed in 0..5 {
            let f = samples::random_band(&grid, seed, 10.0, 0.3).unwrap();
            let mut n = 2.0;
            while n <= 32.0 {
                let lhs = z_block_from_alpha(&f, n).unwrap();
                let rhs = weighted_pairing(&f, n);
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300),
                    "block N={n}: {lhs} vs {rhs}"
                );
                n *= 2.0;
            }
        }
    }

    #[test]
    fn block_identity_rejects_small_n() {
        let grid = TorusGrid::new(1.0, 32).unwrap();
        let f = samples::plane_wave(&grid, 0.1, 1).unwrap();
        assert!(matches!(
            z_block_from_alpha(&f, 1.0),
            Err(LabError::InvalidDyadicBlock(_))
        ));
    }

    #[test]
    fn zero_blocks() {
        let grid = TorusGrid::new(1.0, 32).unwrap();
        assert_eq!(z_block_from_alpha(&Field::zero(grid), 4.0).unwrap(), 0.0);
    }

    #[test]
    fn large_lambda_correction_is_unity() {
        // at lambda = 64 the circle correction collapses to 1 in f64, so the
        // torus block identity and its line form coincide exactly
        let grid = TorusGrid::new(64.0, 512).unwrap();
        let f = samples::random_band(&grid, 4, 2.0, 0.2).unwrap();
        assert_eq!(circle_correction(64.0, 2.0), 1.0);
        let torus = z_block_from_alpha(&f, 2.0).unwrap();
        let line = 0.5 * (leading_term_exact(&f, 2.0).unwrap() - leading_term_exact(&f, 1.0).unwrap());
        assert_relative_eq!(torus, line, max_relative = 1e-15);
    }

    #[test]
    fn order_serde_forms() {
        let p: NormParams =
            serde_json::from_str(r#"{"s":0.25,"r":2.0,"dyadic_max":64.0}"#).unwrap();
        assert_eq!(p.r, LebesgueOrder::Finite(2.0));
        assert_eq!(p.dyadic_min, 2.0);
        let p: NormParams =
            serde_json::from_str(r#"{"s":0.125,"r":"inf","dyadic_max":32.0,"dyadic_min":4.0}"#)
                .unwrap();
        assert_eq!(p.r, LebesgueOrder::Infinity);
        assert_eq!(p.dyadic_min, 4.0);
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"r\":\"inf\""));
    }
}
