//! Deterministic equivalents for the spectrum of the power-law random
//! features covariance.
//!
//! For features built from a `v x d` Gaussian matrix whose rows are scaled by
//! `j^{-alpha}` and a target with coefficients `j^{-beta}`, the empirical
//! eigenvalue distribution and the eigenbasis coefficients of the target
//! concentrate, as `d` grows, around deterministic measures that depend only
//! on `(alpha, beta, d, v)`. This crate computes those deterministic objects
//! without ever forming a random matrix:
//!
//! - [`solve_m`] solves the scalar self-consistent equation for the Stieltjes
//!   transform `m(z)` of the companion resolvent on a grid of complex points
//!   just above the real axis ([`default_grid`] builds a suitable grid).
//! - [`build_measures`] turns a resolvent solution into two nonnegative
//!   spectral measures: the target-weighted measure (whose total mass tracks
//!   the square norm of the target) and the kernel measure (whose bulk mass
//!   tracks the second moment of the eigenvalues).
//! - [`compute_f0`] evaluates the irreducible loss — the part of the target
//!   norm carried by directions outside the feature span — from a
//!   one-dimensional fixed point, without any matrix work.
//! - [`deterministic_spectrum`] converts the pair of measures into the
//!   weighted quadrature spectrum consumed by the ODE loss predictor, so
//!   whole families of loss curves can be predicted from `(alpha, beta, d, v)`
//!   alone.
//!
//! All routines are deterministic: the same inputs produce bitwise identical
//! outputs.

mod atom;
mod export;
mod measures;
mod resolvent;

pub use atom::{compute_f0, kappa_solve};
pub use export::deterministic_spectrum;
pub use measures::{
    build_measures, measure_header_json, write_measure_csv, MeasureKind, SpectralMeasure,
};
pub use resolvent::{default_grid, eta_schedule, refined_grid, solve_m, ResolventSolution};

use thiserror::Error;

/// Errors reported by the deterministic-equivalent routines.
#[derive(Debug, Error)]
pub enum DetEquivError {
    /// Inputs violate a precondition (documented on each routine).
    #[error("invalid input: {0}")]
    BadInput(String),
    /// The scalar fixed point could not be bracketed; the defining function
    /// does not cross its target value on the search interval.
    #[error("bracketing failed: {0}")]
    BracketFailure(String),
    /// A computed spectral density came out materially negative, which means
    /// the imaginary offsets of the evaluation grid are too small for the
    /// achieved solver accuracy.
    #[error("negative spectral mass at x = {x}: {mass} (imaginary offset too small)")]
    NegativeMass { x: f64, mass: f64 },
    /// Every quadrature cell of the bulk carried zero mass, so no spectrum
    /// can be exported.
    #[error("deterministic bulk is empty: no cell carries positive mass")]
    EmptyBulk,
    /// Writing an export file failed.
    #[error("export failed: {0}")]
    Io(#[from] std::io::Error),
}
