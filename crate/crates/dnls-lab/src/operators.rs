//! Dense operator matrices over a truncated frequency lattice.
//!
//! Multiplication operators, resolvents and their products are represented in
//! the orthonormal Fourier basis of `L^2(T_lambda)`, truncated to
//! `|xi| <= Xi_max`. In this basis the multiplication operator by `q` has
//! entries `qhat(xi - eta) / (sqrt(2 pi) lambda)` and resolvents are diagonal,
//! so every operator identity used downstream is a finite matrix identity.

use crate::error::{LabError, Result};
use crate::field::{sqrt_two_pi, Field};
use ndarray::Array2;
use ndarray_linalg::SVD;
use num_complex::Complex64;

/// Symmetric truncated frequency lattice `{ k / lambda : |k| <= k_max }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSet {
    lambda: f64,
    k_max: i64,
}

impl ModeSet {
    /// Lattice of all `xi in Z/lambda` with `|xi| <= radius`.
    pub fn from_radius(lambda: f64, radius: f64) -> Result<Self> {
        if !(lambda >= 1.0) || !lambda.is_finite() {
            return Err(LabError::InvalidLambda(lambda));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(LabError::TruncationTooSmall {
                radius,
                order: 0,
                bandwidth: 0.0,
            });
        }
        Ok(Self {
            lambda,
            k_max: (radius * lambda).floor() as i64,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn len(&self) -> usize {
        (2 * self.k_max + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Truncation radius `Xi_max = k_max / lambda`.
    pub fn radius(&self) -> f64 {
        self.k_max as f64 / self.lambda
    }

    /// Integer index at position `i`: `i - k_max`.
    pub fn index(&self, i: usize) -> i64 {
        i as i64 - self.k_max
    }

    /// Frequency at position `i`.
    pub fn xi(&self, i: usize) -> f64 {
        self.index(i) as f64 / self.lambda
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.xi(i)).collect()
    }
}

/// Dense complex matrix indexed by a [`ModeSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    modes: ModeSet,
    entries: Array2<Complex64>,
}

impl OperatorMatrix {
    pub fn new(modes: ModeSet, entries: Array2<Complex64>) -> Result<Self> {
        let m = modes.len();
        if entries.nrows() != m || entries.ncols() != m {
            return Err(LabError::DimensionMismatch(entries.nrows(), m));
        }
        Ok(Self { modes, entries })
    }

    pub fn zeros(modes: ModeSet) -> Self {
        let m = modes.len();
        Self {
            modes,
            entries: Array2::zeros((m, m)),
        }
    }

    pub fn identity(modes: ModeSet) -> Self {
        let m = modes.len();
        Self {
            modes,
            entries: Array2::from_diag_elem(m, Complex64::ONE),
        }
    }

    pub fn from_diagonal(modes: ModeSet, diag: impl Fn(f64) -> Complex64) -> Self {
        let m = modes.len();
        let mut entries = Array2::zeros((m, m));
        for i in 0..m {
            entries[(i, i)] = diag(modes.xi(i));
        }
        Self { modes, entries }
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diag().sum()
    }

    pub fn adjoint(&self) -> Self {
        let m = self.dim();
        let mut entries = Array2::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                entries[(i, j)] = self.entries[(j, i)].conj();
            }
        }
        Self {
            modes: self.modes,
            entries,
        }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest entry-wise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let m = self.dim();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in i..m {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.modes != other.modes {
            return Err(LabError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Self {
            modes: self.modes,
            entries: self.entries.dot(&other.entries),
        })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            modes: self.modes,
            entries: self.entries.mapv(|v| v * c),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.modes != other.modes {
            return Err(LabError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Self {
            modes: self.modes,
            entries: &self.entries + &other.entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.modes != other.modes {
            return Err(LabError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Self {
            modes: self.modes,
            entries: &self.entries - &other.entries,
        })
    }

    /// Apply to a coefficient vector over the same mode set.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(LabError::LengthMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let m = self.dim();
        let mut out = vec![Complex64::ZERO; m];
        for i in 0..m {
            let mut acc = Complex64::ZERO;
            for j in 0..m {
                acc += self.entries[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let (_, s, _) = self
            .entries
            .svd(false, false)
            .map_err(|e| LabError::Linalg(e.to_string()))?;
        let mut vals: Vec<f64> = s.to_vec();
        vals.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
        Ok(vals)
    }
}

/// Fourier-side kernel of `f -> q f`: entries `qhat(xi - eta) / (sqrt(2 pi) lambda)`,
/// zero outside the band of `q`. Acting on coefficient vectors reproduces
/// pointwise multiplication for band-limited inputs.
pub fn multiplication_matrix(q: &Field, modes: &ModeSet) -> Result<OperatorMatrix> {
    if q.grid().lambda() != modes.lambda() {
        return Err(LabError::LambdaMismatch {
            mode_lambda: modes.lambda(),
            field_lambda: q.grid().lambda(),
        });
    }
    let m = modes.len();
    let scale = 1.0 / (sqrt_two_pi() * modes.lambda());
    let mut entries = Array2::zeros((m, m));
    for i in 0..m {
        let ki = modes.index(i);
        for j in 0..m {
            let d = ki - modes.index(j);
            let c = q.coeff(d);
            if c != Complex64::ZERO {
                entries[(i, j)] = c * scale;
            }
        }
    }
    OperatorMatrix::new(*modes, entries)
}

/// Sign placement inside a resolvent symbol; see [`resolvent_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventSign {
    Plus,
    Minus,
}

/// Power of the resolvent symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventPower {
    /// `(d/dx -+ kappa)^{-1}` with symbol `1 / (i xi -+ kappa)`.
    Inverse,
    /// `(kappa -+ d/dx)^{-1/2}` with symbol `(kappa -+ i xi)^{-1/2}`,
    /// principal branch (safe: the real part `kappa` is positive).
    InverseSqrt,
}

/// Diagonal resolvent matrix.
///
/// For [`ResolventPower::Inverse`], `sign` is the sign of `kappa`:
/// `Minus` gives `1/(i xi - kappa)`, `Plus` gives `1/(i xi + kappa)`.
/// For [`ResolventPower::InverseSqrt`], `sign` is the sign of the derivative:
/// `Minus` gives `(kappa - i xi)^{-1/2}`, `Plus` gives `(kappa + i xi)^{-1/2}`.
pub fn resolvent_matrix(
    kappa: f64,
    sign: ResolventSign,
    power: ResolventPower,
    modes: &ModeSet,
) -> Result<OperatorMatrix> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(LabError::InvalidKappa(kappa));
    }
    let f = move |xi: f64| -> Complex64 {
        match (power, sign) {
            (ResolventPower::Inverse, ResolventSign::Minus) => {
                Complex64::new(-kappa, xi).inv()
            }
            (ResolventPower::Inverse, ResolventSign::Plus) => Complex64::new(kappa, xi).inv(),
            (ResolventPower::InverseSqrt, ResolventSign::Minus) => {
                Complex64::new(kappa, -xi).sqrt().inv()
            }
            (ResolventPower::InverseSqrt, ResolventSign::Plus) => {
                Complex64::new(kappa, xi).sqrt().inv()
            }
        }
    };
    Ok(OperatorMatrix::from_diagonal(*modes, f))
}

/// `l^p` norm of the singular-value vector; operator norm for `p = infinity`.
pub fn schatten_norm(a: &OperatorMatrix, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(LabError::InvalidSchattenOrder(p));
    }
    let sv = a.singular_values()?;
    if p.is_infinite() {
        return Ok(sv.first().copied().unwrap_or(0.0));
    }
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Residuals of the commutator identities used in the conservation argument,
/// assembled as matrices and compared entry-wise on the interior mode block.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct OperatorIdentityReport {
    /// `(|q|^2 q)_x = (d - kappa)(|q|^2 q) - (|q|^2 q)(d + kappa) + 2 kappa (|q|^2 q)`
    pub cubic: f64,
    /// same with the conjugate cubic and flipped signs
    pub cubic_conjugate: f64,
    /// `q_xx = q(d^2 - 2 kappa d - kappa^2) + (d^2 + 2 kappa d - kappa^2) q + 2 (kappa - d) q (kappa + d)`
    pub second_derivative: f64,
    /// conjugate version of the second-derivative identity
    pub second_derivative_conjugate: f64,
    /// number of boundary rows/columns excluded on each side
    pub interior_margin: usize,
}

impl OperatorIdentityReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.cubic
            .max(self.cubic_conjugate)
            .max(self.second_derivative)
            .max(self.second_derivative_conjugate)
    }
}

fn interior_max(diff: &OperatorMatrix, margin: usize) -> f64 {
    let m = diff.dim();
    if 2 * margin >= m {
        return f64::NAN;
    }
    let mut worst = 0.0f64;
    for i in margin..m - margin {
        for j in margin..m - margin {
            worst = worst.max(diff.entry(i, j).norm());
        }
    }
    worst
}

/// Verify the operator identities behind term-by-term differentiation of the
/// trace series, as matrix identities over a truncated lattice.
pub fn verify_operator_identities(
    q: &Field,
    kappa: f64,
    radius: f64,
) -> Result<OperatorIdentityReport> {
    if !(kappa > 0.0) {
        return Err(LabError::InvalidKappa(kappa));
    }
    let modes = ModeSet::from_radius(q.grid().lambda(), radius)?;
    // cubic field |q|^2 q, formed pointwise (grid must resolve 3x bandwidth)
    let cubic_values: Vec<Complex64> = q.values().iter().map(|v| v * v.norm_sqr()).collect();
    let u = Field::from_values(*q.grid(), cubic_values)?;
    let cube_band = u.bandwidth(1e-13);
    if radius <= cube_band + 1.0 {
        return Err(LabError::TruncationTooSmall {
            radius,
            order: 1,
            bandwidth: cube_band,
        });
    }
    let margin = ((cube_band * modes.lambda()).ceil() as usize + 1).min(modes.len() / 2);

    let kap = Complex64::new(kappa, 0.0);

    let diag_scale = |mat: &OperatorMatrix, left: &dyn Fn(f64) -> Complex64, right: &dyn Fn(f64) -> Complex64| {
        let m = mat.dim();
        let mut entries = mat.entries().clone();
        for i in 0..m {
            let li = left(modes.xi(i));
            for j in 0..m {
                entries[(i, j)] *= li * right(modes.xi(j));
            }
        }
        OperatorMatrix::new(modes, entries).expect("dims preserved")
    };
    let one = |_: f64| Complex64::ONE;

    // identity for |q|^2 q
    let m_u = multiplication_matrix(&u, &modes)?;
    let m_ux = multiplication_matrix(&u.derivative(), &modes)?;
    let rhs_cubic = diag_scale(&m_u, &|xi| Complex64::new(-kappa, xi), &one)
        .sub(&diag_scale(&m_u, &one, &|xi| Complex64::new(kappa, xi)))?
        .add(&m_u.scaled(2.0 * kap))?;
    let cubic = interior_max(&m_ux.sub(&rhs_cubic)?, margin);

    // identity for |q|^2 conj(q)
    let v = u.conjugate();
    let m_v = multiplication_matrix(&v, &modes)?;
    let m_vx = multiplication_matrix(&v.derivative(), &modes)?;
    let rhs_cubic_conj = diag_scale(&m_v, &|xi| Complex64::new(kappa, xi), &one)
        .sub(&diag_scale(&m_v, &one, &|xi| Complex64::new(-kappa, xi)))?
        .sub(&m_v.scaled(2.0 * kap))?;
    let cubic_conjugate = interior_max(&m_vx.sub(&rhs_cubic_conj)?, margin);

    // identity for q_xx
    let m_q = multiplication_matrix(q, &modes)?;
    let m_qxx = multiplication_matrix(&q.derivative().derivative(), &modes)?;
    let second = {
        let right_sym = |xi: f64| Complex64::new(-xi * xi - kappa * kappa, -2.0 * kappa * xi);
        let left_sym = |xi: f64| Complex64::new(-xi * xi - kappa * kappa, 2.0 * kappa * xi);
        let term1 = diag_scale(&m_q, &one, &right_sym);
        let term2 = diag_scale(&m_q, &left_sym, &one);
        let term3 = diag_scale(
            &m_q,
            &|xi| Complex64::new(kappa, -xi),
            &|xi| Complex64::new(kappa, xi),
        )
        .scaled(Complex64::new(2.0, 0.0));
        term1.add(&term2)?.add(&term3)?
    };
    let second_derivative = interior_max(&m_qxx.sub(&second)?, margin);

    // conjugate second-derivative identity
    let qbar = q.conjugate();
    let m_qbar = multiplication_matrix(&qbar, &modes)?;
    let m_qbarxx = multiplication_matrix(&qbar.derivative().derivative(), &modes)?;
    let second_conj = {
        let right_sym = |xi: f64| Complex64::new(-xi * xi - kappa * kappa, 2.0 * kappa * xi);
        let left_sym = |xi: f64| Complex64::new(-xi * xi - kappa * kappa, -2.0 * kappa * xi);
        let term1 = diag_scale(&m_qbar, &left_sym, &one);
        let term2 = diag_scale(&m_qbar, &one, &right_sym);
        let term3 = diag_scale(
            &m_qbar,
            &|xi| Complex64::new(kappa, xi),
            &|xi| Complex64::new(kappa, -xi),
        )
        .scaled(Complex64::new(2.0, 0.0));
        term1.add(&term2)?.add(&term3)?
    };
    let second_derivative_conjugate = interior_max(&m_qbarxx.sub(&second_conj)?, margin);

    Ok(OperatorIdentityReport {
        cubic,
        cubic_conjugate,
        second_derivative,
        second_derivative_conjugate,
        interior_margin: margin,
    })
}
