//! Discrete tori `T_lambda = R / (2 pi lambda Z)` and their frequency lattices.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Collocation grid on the torus of circumference `2 pi lambda`.
///
/// The frequency lattice is `Z / lambda`: integer indices `k` with
/// `-n/2 <= k < n/2` carry the frequencies `xi = k / lambda`. All public
/// spectra are ordered monotonically in `xi`; FFT storage order never leaks
/// out of this crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    lambda: f64,
    n_points: usize,
    dx: f64,
}

impl TorusGrid {
    /// Build a grid with `n_points` collocation points `x_j = j dx`,
    /// `dx = 2 pi lambda / n_points`.
    ///
    /// Rejects `lambda < 1` (the trace identities downstream are stated for
    /// `lambda >= 1`) and point counts that are not a power of two `>= 8`.
    pub fn new(lambda: f64, n_points: usize) -> Result<Self> {
        if !(lambda >= 1.0) || !lambda.is_finite() {
            return Err(LabError::InvalidLambda(lambda));
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(LabError::InvalidPointCount(n_points));
        }
        Ok(Self {
            lambda,
            n_points,
            dx: 2.0 * PI * lambda / n_points as f64,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Grid spacing; `dx * n_points = 2 pi lambda` to machine precision.
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Collocation point `x_j`.
    pub fn point(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    /// Integer frequency index at monotone position `i`, i.e. `i - n/2`.
    pub fn mode_index(&self, i: usize) -> i64 {
        i as i64 - (self.n_points / 2) as i64
    }

    /// Frequency `xi = k / lambda` at monotone position `i`.
    pub fn mode(&self, i: usize) -> f64 {
        self.mode_index(i) as f64 / self.lambda
    }

    /// All frequencies in monotone order `-n/2, ..., n/2 - 1` over `lambda`.
    pub fn modes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.mode(i)).collect()
    }

    /// Monotone position of integer frequency index `k`, if on the lattice.
    pub fn position_of(&self, k: i64) -> Option<usize> {
        let half = (self.n_points / 2) as i64;
        if (-half..half).contains(&k) {
            Some((k + half) as usize)
        } else {
            None
        }
    }

    /// Largest resolved frequency magnitude `(n/2) / lambda`.
    pub fn nyquist(&self) -> f64 {
        (self.n_points / 2) as f64 / self.lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_torus_eight_points() {
        let g = TorusGrid::new(1.0, 8).unwrap();
        assert_eq!(g.modes(), vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(g.dx(), PI / 4.0);
        assert_eq!(g.point(2), PI / 2.0);
    }

    #[test]
    fn double_torus_sixteen_points() {
        let g = TorusGrid::new(2.0, 16).unwrap();
        let modes = g.modes();
        assert_eq!(modes[0], -4.0);
        assert_eq!(modes[1], -3.5);
        assert_eq!(*modes.last().unwrap(), 3.5);
        assert_eq!(g.dx(), PI / 4.0);
    }

    #[test]
    fn rejects_bad_sizes_and_lambda() {
        assert!(matches!(
            TorusGrid::new(1.0, 7),
            Err(LabError::InvalidPointCount(7))
        ));
        assert!(matches!(
            TorusGrid::new(1.0, 12),
            Err(LabError::InvalidPointCount(12))
        ));
        assert!(matches!(
            TorusGrid::new(1.0, 4),
            Err(LabError::InvalidPointCount(4))
        ));
        assert!(matches!(
            TorusGrid::new(0.5, 8),
            Err(LabError::InvalidLambda(_))
        ));
        assert!(TorusGrid::new(1.0, 8).is_ok());
    }

    #[test]
    fn circumference_identity() {
        for (lambda, n) in [(1.0, 8), (2.0, 64), (8.0, 256), (64.0, 4096)] {
            let g = TorusGrid::new(lambda, n).unwrap();
            let err = (g.dx() * n as f64 - 2.0 * PI * lambda).abs();
            assert!(err <= 1e-12 * lambda, "dx * n != 2 pi lambda: {err}");
        }
    }

    #[test]
    fn positions_round_trip() {
        let g = TorusGrid::new(2.0, 16).unwrap();
        for i in 0..16 {
            let k = g.mode_index(i);
            assert_eq!(g.position_of(k), Some(i));
        }
        assert_eq!(g.position_of(8), None);
        assert_eq!(g.position_of(-9), None);
    }
}
