//! Named initial-data families used by experiments, examples and tests.
//!
//! All families are built directly in Fourier space so smoothness is exact:
//! plane waves and random-band data are finite Fourier sums, the Gaussian is
//! the periodized Gaussian with coefficients `A w exp(-w^2 xi^2 / 2 - i xi x0)`.

use crate::error::{LabError, Result};
use crate::field::{sqrt_two_pi, Field};
use crate::grid::TorusGrid;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Reproducible initial-data specification.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialData {
    /// `c exp(i (k/lambda) x)` with real amplitude `c`.
    PlaneWave { amplitude: f64, wavenumber: i64 },
    /// Periodized Gaussian bump; `center` defaults to the domain midpoint.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<f64>,
    },
    /// Complex Gaussian coefficients on `|xi| <= bandwidth`, seeded and then
    /// rescaled so the L2 norm hits `l2_target` exactly.
    RandomBand {
        seed: u64,
        bandwidth: f64,
        l2_target: f64,
    },
}

impl InitialData {
    pub fn build(&self, grid: &TorusGrid) -> Result<Field> {
        match *self {
            InitialData::PlaneWave {
                amplitude,
                wavenumber,
            } => plane_wave(grid, amplitude, wavenumber),
            InitialData::Gaussian {
                amplitude,
                width,
                center,
            } => gaussian(grid, amplitude, width, center),
            InitialData::RandomBand {
                seed,
                bandwidth,
                l2_target,
            } => random_band(grid, seed, bandwidth, l2_target),
        }
    }

    /// Exact L2 norm of the data this spec produces on any adequate grid, when
    /// available in closed form.
    pub fn l2_norm_closed_form(&self, grid: &TorusGrid) -> Option<f64> {
        match *self {
            InitialData::PlaneWave { amplitude, .. } => {
                Some(amplitude.abs() * (2.0 * PI * grid.lambda()).sqrt())
            }
            InitialData::RandomBand { l2_target, .. } => Some(l2_target),
            InitialData::Gaussian { .. } => None,
        }
    }
}

/// Single-mode field `c exp(i (k/lambda) x)`.
pub fn plane_wave(grid: &TorusGrid, amplitude: f64, wavenumber: i64) -> Result<Field> {
    let i = grid.position_of(wavenumber).ok_or_else(|| {
        LabError::InsufficientResolution(format!(
            "wavenumber index {wavenumber} outside grid range +-{}",
            grid.n_points() / 2
        ))
    })?;
    let mut spectrum = vec![Complex64::ZERO; grid.n_points()];
    spectrum[i] = Complex64::new(amplitude * sqrt_two_pi() * grid.lambda(), 0.0);
    Field::from_spectrum(*grid, spectrum)
}

/// Periodized Gaussian `A sum_m exp(-(x - x0 - 2 pi lambda m)^2 / (2 w^2))`,
/// built from its exact Fourier coefficients.
pub fn gaussian(grid: &TorusGrid, amplitude: f64, width: f64, center: Option<f64>) -> Result<Field> {
    if !(width > 0.0) {
        return Err(LabError::InvalidExperimentConfig(format!(
            "gaussian width must be positive, got {width}"
        )));
    }
    let x0 = center.unwrap_or(PI * grid.lambda());
    let n = grid.n_points();
    let mut spectrum = vec![Complex64::ZERO; n];
    for (i, slot) in spectrum.iter_mut().enumerate() {
        let xi = grid.mode(i);
        let mag = amplitude * width * (-0.5 * width * width * xi * xi).exp();
        *slot = Complex64::from_polar(mag, -xi * x0);
    }
    Field::from_spectrum(*grid, spectrum)
}

/// Seeded random band-limited field with exact L2 norm `l2_target`.
///
/// Coefficients are drawn in a fixed mode order (k ascending), so a given seed
/// produces bit-identical data on every run and platform.
pub fn random_band(grid: &TorusGrid, seed: u64, bandwidth: f64, l2_target: f64) -> Result<Field> {
    if bandwidth > grid.nyquist() {
        return Err(LabError::InsufficientResolution(format!(
            "bandwidth {bandwidth} exceeds grid Nyquist {}",
            grid.nyquist()
        )));
    }
    if !(l2_target >= 0.0) {
        return Err(LabError::InvalidExperimentConfig(format!(
            "l2_target must be nonnegative, got {l2_target}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k_band = (bandwidth * grid.lambda()).floor() as i64;
    let n = grid.n_points();
    let mut spectrum = vec![Complex64::ZERO; n];
    for k in -k_band..=k_band {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        if let Some(i) = grid.position_of(k) {
            spectrum[i] = Complex64::new(re, im);
        }
    }
    let current: f64 = (spectrum.iter().map(|c| c.norm_sqr()).sum::<f64>() / grid.lambda()).sqrt();
    if current > 0.0 {
        let scale = l2_target / current;
        for c in &mut spectrum {
            *c *= scale;
        }
    }
    Field::from_spectrum(*grid, spectrum)
}
