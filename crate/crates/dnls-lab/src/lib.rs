//! Numerical laboratory for the derivative nonlinear Schrödinger equation
//!
//! ```text
//!     i dq/dt + d^2q/dx^2 + i d/dx(|q|^2 q) = 0
//! ```
//!
//! on rescaled tori `T_lambda = R/(2 pi lambda Z)`. The crate provides
//!
//! - lambda-torus grids and transforms with a fixed `1/sqrt(2 pi)`
//!   normalization ([`grid`], [`field`]),
//! - an integrating-factor RK4 pseudo-spectral solver with the classical
//!   invariants M, P, E and the scaling map ([`solver`]),
//! - dense Fourier-basis operator matrices, the conserved perturbation
//!   determinant series `alpha(kappa; q)` and its closed-form leading term,
//!   Hilbert-Schmidt sums and Schatten norms ([`operators`], [`alpha`]),
//! - the weighted `Z^s_r`, Besov and Sobolev norm family together with the
//!   identity expressing dyadic blocks through leading-term differences
//!   ([`norms`]),
//! - a reproducible experiment harness with JSON/CSV reports
//!   ([`experiments`]).
//!
//! Start with the runnable examples (`cargo run --release --example ...`);
//! each one exercises a major capability end to end.

pub mod alpha;
pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod norms;
pub mod operators;
pub mod samples;
pub mod solver;

pub mod experiments;

pub use error::{LabError, Result};
pub use field::Field;
pub use grid::TorusGrid;
