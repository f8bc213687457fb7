//! Complex fields on a torus grid, stored as paired collocation values and
//! Fourier coefficients.
//!
//! Conventions (fixed so that every downstream trace identity holds with its
//! stated constants, without fudge factors):
//!
//! ```text
//! fhat(xi) = (1/sqrt(2 pi)) * integral_0^{2 pi lambda} f(x) exp(-i x xi) dx
//! f(x)     = (1/(sqrt(2 pi) lambda)) * sum_{xi in Z/lambda} fhat(xi) exp(i x xi)
//! ```
//!
//! realized by the trapezoid-exact quadrature `fhat = (dx/sqrt(2 pi)) * DFT`.
//! With the normalized counting measure `(1/lambda) sum_xi`, Plancherel holds:
//! `||f||_{L2(T_lambda)} = ||fhat||_{L2(Z_lambda, (dxi)_lambda)}`.

use crate::error::{LabError, Result};
use crate::fft;
use crate::grid::TorusGrid;
use num_complex::Complex64;
use std::io::{BufRead, Write};

const SQRT_2PI: f64 = 2.5066282746310002; // sqrt(2 pi)

/// Immutable complex field: collocation values and spectrum kept mutually
/// consistent under the crate's transform pair. Safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<Complex64>,
    spectrum: Vec<Complex64>,
}

/// Quadrature realization of the forward transform on the grid's frequency
/// lattice, returned in monotone mode order.
pub fn forward_transform(grid: &TorusGrid, values: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = grid.n_points();
    if values.len() != n {
        return Err(LabError::LengthMismatch {
            expected: n,
            got: values.len(),
        });
    }
    let mut buf = values.to_vec();
    fft::dft_in_place(&mut buf);
    // DFT bin m holds frequency index k = m (m < n/2) or m - n; shift to
    // monotone order and apply the quadrature weight dx / sqrt(2 pi).
    let scale = grid.dx() / SQRT_2PI;
    let half = n / 2;
    let mut out = vec![Complex64::ZERO; n];
    for (i, slot) in out.iter_mut().enumerate() {
        let m = (i + half) % n;
        *slot = buf[m] * scale;
    }
    Ok(out)
}

/// Inverse of [`forward_transform`]; expects monotone mode order.
pub fn inverse_transform(grid: &TorusGrid, spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = grid.n_points();
    if spectrum.len() != n {
        return Err(LabError::LengthMismatch {
            expected: n,
            got: spectrum.len(),
        });
    }
    let half = n / 2;
    let mut buf = vec![Complex64::ZERO; n];
    for (i, &c) in spectrum.iter().enumerate() {
        buf[(i + half) % n] = c;
    }
    fft::idft_in_place(&mut buf);
    let scale = 1.0 / (SQRT_2PI * grid.lambda());
    for v in &mut buf {
        *v *= scale;
    }
    Ok(buf)
}

impl Field {
    pub fn zero(grid: TorusGrid) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            values: vec![Complex64::ZERO; n],
            spectrum: vec![Complex64::ZERO; n],
        }
    }

    pub fn from_values(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        let spectrum = forward_transform(&grid, &values)?;
        Ok(Self {
            grid,
            values,
            spectrum,
        })
    }

    pub fn from_spectrum(grid: TorusGrid, spectrum: Vec<Complex64>) -> Result<Self> {
        let values = inverse_transform(&grid, &spectrum)?;
        Ok(Self {
            grid,
            values,
            spectrum,
        })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..grid.n_points()).map(|j| f(grid.point(j))).collect();
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Fourier coefficients in monotone mode order.
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// Coefficient at integer frequency index `k`; zero off the lattice.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.grid
            .position_of(k)
            .map_or(Complex64::ZERO, |i| self.spectrum[i])
    }

    /// `sqrt((1/lambda) sum_xi |fhat(xi)|^2)`, the spectral-side L2 norm.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.spectrum.iter().map(|c| c.norm_sqr()).sum();
        (sum / self.grid.lambda()).sqrt()
    }

    /// `sqrt(dx sum_j |f(x_j)|^2)`, the quadrature L2 norm on the physical side.
    pub fn l2_norm_physical(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|c| c.norm_sqr()).sum();
        (sum * self.grid.dx()).sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            spectrum: self.spectrum.iter().map(|v| v * c).collect(),
        }
    }

    pub fn conjugate(&self) -> Self {
        let values = self.values.iter().map(|v| v.conj()).collect();
        Self::from_values(self.grid, values).expect("lengths preserved")
    }

    /// Spectral derivative: multiply each coefficient by `i xi`.
    pub fn derivative(&self) -> Self {
        let spectrum = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(i, c)| Complex64::new(0.0, self.grid.mode(i)) * c)
            .collect();
        Self::from_spectrum(self.grid, spectrum).expect("lengths preserved")
    }

    /// Largest `|xi|` whose coefficient exceeds `rel_threshold` times the peak
    /// coefficient magnitude. Zero for the zero field.
    pub fn bandwidth(&self, rel_threshold: f64) -> f64 {
        let peak = self
            .spectrum
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let cut = peak * rel_threshold;
        let mut bw = 0.0f64;
        for (i, c) in self.spectrum.iter().enumerate() {
            if c.norm() > cut {
                bw = bw.max(self.grid.mode(i).abs());
            }
        }
        bw
    }

    /// Constant field `f == c`.
    pub fn constant(grid: TorusGrid, c: Complex64) -> Self {
        let n = grid.n_points();
        let mut spectrum = vec![Complex64::ZERO; n];
        // fhat(0) = sqrt(2 pi) lambda c
        spectrum[n / 2] = c * SQRT_2PI * grid.lambda();
        Self::from_spectrum(grid, spectrum).expect("length correct")
    }

    /// Writes the CSV interchange form: a comment header carrying `lambda` and
    /// `n_points`, then one row per index with physical and spectral columns.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# lambda={} n_points={}",
            self.grid.lambda(),
            self.grid.n_points()
        )?;
        writeln!(w, "x,re_value,im_value,xi,re_coeff,im_coeff")?;
        for i in 0..self.grid.n_points() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.grid.point(i),
                self.values[i].re,
                self.values[i].im,
                self.grid.mode(i),
                self.spectrum[i].re,
                self.spectrum[i].im
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("csv is utf8")
    }

    /// Reads the format produced by [`Field::write_csv`]. The spectrum columns
    /// are authoritative; values are recomputed, so the round trip is exact.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| LabError::MalformedCsv("empty input".into()))??;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| LabError::MalformedCsv("missing '#' header".into()))?;
        let mut lambda = None;
        let mut n_points = None;
        for tok in header.split_whitespace() {
            if let Some(v) = tok.strip_prefix("lambda=") {
                lambda = v.parse::<f64>().ok();
            } else if let Some(v) = tok.strip_prefix("n_points=") {
                n_points = v.parse::<usize>().ok();
            }
        }
        let (lambda, n_points) = match (lambda, n_points) {
            (Some(l), Some(n)) => (l, n),
            _ => {
                return Err(LabError::MalformedCsv(
                    "header must carry lambda= and n_points=".into(),
                ))
            }
        };
        let grid = TorusGrid::new(lambda, n_points)?;
        let columns = lines
            .next()
            .ok_or_else(|| LabError::MalformedCsv("missing column row".into()))??;
        if columns.trim() != "x,re_value,im_value,xi,re_coeff,im_coeff" {
            return Err(LabError::MalformedCsv(format!(
                "unexpected column row: {columns}"
            )));
        }
        let mut spectrum = Vec::with_capacity(n_points);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 6 {
                return Err(LabError::MalformedCsv(format!("bad row: {line}")));
            }
            let re = cells[4]
                .parse::<f64>()
                .map_err(|e| LabError::MalformedCsv(e.to_string()))?;
            let im = cells[5]
                .parse::<f64>()
                .map_err(|e| LabError::MalformedCsv(e.to_string()))?;
            spectrum.push(Complex64::new(re, im));
        }
        if spectrum.len() != n_points {
            return Err(LabError::LengthMismatch {
                expected: n_points,
                got: spectrum.len(),
            });
        }
        Self::from_spectrum(grid, spectrum)
    }
}

/// `sqrt(2 pi)` as used by the transform normalization.
pub fn sqrt_two_pi() -> f64 {
    SQRT_2PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Independent oracle: O(n^2) quadrature sum for the forward transform,
    /// straight from the definition.
    fn naive_forward(grid: &TorusGrid, values: &[Complex64]) -> Vec<Complex64> {
        let n = grid.n_points();
        let scale = grid.dx() / SQRT_2PI;
        (0..n)
            .map(|i| {
                let xi = grid.mode(i);
                let mut acc = Complex64::ZERO;
                for (j, &v) in values.iter().enumerate() {
                    let phase = Complex64::from_polar(1.0, -grid.point(j) * xi);
                    acc += v * phase;
                }
                acc * scale
            })
            .collect()
    }

    fn random_band(grid: TorusGrid, band: i64, seed: u64) -> Field {
        // tiny deterministic LCG; good enough for transform tests
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let n = grid.n_points();
        let mut spectrum = vec![Complex64::ZERO; n];
        for k in -band..=band {
            if let Some(i) = grid.position_of(k) {
                spectrum[i] = Complex64::new(next(), next());
            }
        }
        Field::from_spectrum(grid, spectrum).unwrap()
    }

    #[test]
    fn constant_field_spectrum() {
        let grid = TorusGrid::new(1.0, 32).unwrap();
        let c = Complex64::new(0.3, -0.4);
        let f = Field::from_fn(grid, |_| c).unwrap();
        // fhat(0) = sqrt(2 pi) c on T_1, everything else zero
        assert_relative_eq!(f.coeff(0).re, SQRT_2PI * c.re, max_relative = 1e-13);
        assert_relative_eq!(f.coeff(0).im, SQRT_2PI * c.im, max_relative = 1e-13);
        for k in 1..16 {
            assert!(f.coeff(k).norm() < 1e-13);
            assert!(f.coeff(-k).norm() < 1e-13);
        }
    }

    #[test]
    fn plane_wave_spectrum() {
        let grid = TorusGrid::new(1.0, 64).unwrap();
        for k in [1i64, 3, -5] {
            let f = Field::from_fn(grid, |x| Complex64::from_polar(1.0, k as f64 * x)).unwrap();
            assert_relative_eq!(f.coeff(k).re, SQRT_2PI, max_relative = 1e-12);
            assert!(f.coeff(k).im.abs() < 1e-12);
            assert!(f.coeff(k + 1).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let grid = TorusGrid::new(2.0, 16).unwrap();
        let f = Field::zero(grid);
        assert!(f.spectrum().iter().all(|c| c.norm() == 0.0));
        assert_eq!(f.l2_norm(), 0.0);
    }

    #[test]
    fn inversion_of_single_mode() {
        let grid = TorusGrid::new(1.0, 16).unwrap();
        let mut spectrum = vec![Complex64::ZERO; 16];
        spectrum[8] = Complex64::new(SQRT_2PI, 0.0);
        let f = Field::from_spectrum(grid, spectrum).unwrap();
        for v in f.values() {
            assert_relative_eq!(v.re, 1.0, max_relative = 1e-13);
            assert!(v.im.abs() < 1e-13);
        }
    }

    #[test]
    fn fft_matches_naive_quadrature() {
        for (lambda, n) in [(1.0, 16), (2.0, 32), (8.0, 64)] {
            let grid = TorusGrid::new(lambda, n).unwrap();
            let f = random_band(grid, (n / 4) as i64, 99);
            let oracle = naive_forward(&grid, f.values());
            for (a, b) in f.spectrum().iter().zip(&oracle) {
                assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()));
            }
        }
    }

    #[test]
    fn round_trip_and_plancherel() {
        for (lambda, n) in [(1.0, 64), (2.0, 64), (8.0, 128)] {
            let grid = TorusGrid::new(lambda, n).unwrap();
            for seed in 0..20 {
                let f = random_band(grid, (n / 3) as i64, seed);
                let back = forward_transform(&grid, f.values()).unwrap();
                let scale = f.l2_norm().max(1e-300);
                for (a, b) in back.iter().zip(f.spectrum()) {
                    assert!((a - b).norm() <= 1e-12 * scale);
                }
                assert_relative_eq!(f.l2_norm(), f.l2_norm_physical(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn l2_norm_examples() {
        let grid = TorusGrid::new(1.0, 32).unwrap();
        let one = Field::constant(grid, Complex64::new(1.0, 0.0));
        assert_relative_eq!(one.l2_norm(), (2.0 * PI).sqrt(), max_relative = 1e-13);

        let f = Field::from_fn(grid, |x| Complex64::from_polar(0.1, x)).unwrap();
        assert_relative_eq!(f.l2_norm(), 0.1 * (2.0 * PI).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn modulation_shifts_spectrum() {
        let grid = TorusGrid::new(2.0, 64).unwrap();
        let f = random_band(grid, 6, 5);
        let shift = 3i64; // multiply by e^{i (shift/lambda) x}
        let g = Field::from_values(
            grid,
            f.values()
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, shift as f64 / 2.0 * grid.point(j)))
                .collect(),
        )
        .unwrap();
        for k in -10..=10i64 {
            let a = g.coeff(k + shift);
            let b = f.coeff(k);
            assert!((a - b).norm() < 1e-12, "shift mismatch at k={k}");
        }
    }

    #[test]
    fn transform_length_mismatch() {
        let grid = TorusGrid::new(1.0, 16).unwrap();
        assert!(matches!(
            forward_transform(&grid, &[Complex64::ZERO; 8]),
            Err(LabError::LengthMismatch { .. })
        ));
        assert!(matches!(
            inverse_transform(&grid, &[Complex64::ZERO; 17]),
            Err(LabError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let grid = TorusGrid::new(2.0, 32).unwrap();
        let f = random_band(grid, 9, 1234);
        let text = f.to_csv_string();
        let back = Field::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.grid(), f.grid());
        for (a, b) in back.spectrum().iter().zip(f.spectrum()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}
