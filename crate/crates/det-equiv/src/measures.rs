//! Spectral measures read off from the solved resolvent.
//!
//! Two measures matter for loss prediction:
//!
//! - the **target measure** (`MeasureKind::Target`): mass near eigenvalue `x`
//!   weighted by how much of the target projects onto the corresponding
//!   eigendirections; its bulk density at `x + i eta` is
//!   `(1/pi) * Im sum_j j^{-2 alpha - 2 beta} / (a_j m - z)` **minus the
//!   Lorentzian tail of its zero-atom** (see below), and it carries an
//!   additional atom at zero equal to the irreducible loss;
//! - the **kernel measure** (`MeasureKind::Kernel`): eigenvalue mass weighted
//!   by the eigenvalue itself, with bulk density
//!   `(x d / pi) * (-Im m)`; its total mass tracks the second moment of the
//!   eigenvalue distribution and controls gradient-noise feedback.
//!
//! The target transform has an exact simple pole `-F0 / z` at zero on the
//! physical branch (the zero-atom). Evaluated at `x + i eta` it contributes
//! the Lorentzian `(F0 / pi) * eta / (x^2 + eta^2)` to the raw imaginary
//! part; summed over the grid this tail amounts to a few *multiples* of `F0`
//! of spurious slowly-decaying mass if it is left inside the bulk cells. The
//! residue is known in closed form at finite size
//! (`atom::discrete_zero_data`), so the tail is subtracted pointwise before
//! cells are integrated and the atom is kept as an exact point mass instead.

use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write as _;
use std::path::Path;

use crate::atom::discrete_zero_data;
use crate::resolvent::ResolventSolution;
use crate::DetEquivError;

/// Which weighting a [`SpectralMeasure`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    /// Target-projection weighting; atom at zero = irreducible loss.
    Target,
    /// Eigenvalue weighting; no atom at zero.
    Kernel,
}

/// A nonnegative measure on the positive axis, discretized on cells.
///
/// Cell `k` spans `[cell_edges[k], cell_edges[k+1]]`, is represented by the
/// geometric midpoint `support_grid[k]`, and carries `masses[k] >= 0`;
/// `densities[k]` is the cell-averaged density `masses[k] / width`. The
/// `atom_at_zero` is separate from the cells.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    /// Geometric midpoints of the cells, ascending.
    pub support_grid: Vec<f64>,
    /// Nonnegative mass per cell.
    pub masses: Vec<f64>,
    /// Cell boundaries; `len() == masses.len() + 1`.
    pub cell_edges: Vec<f64>,
    /// Cell-averaged density (mass / width) per cell.
    pub densities: Vec<f64>,
    /// Point mass at zero (irreducible loss for the target measure).
    pub atom_at_zero: f64,
    /// Which weighting this measure carries.
    pub kind: MeasureKind,
}

impl SpectralMeasure {
    /// Total mass of the bulk cells (excluding the atom at zero).
    pub fn bulk_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Total mass including the atom at zero.
    pub fn total_mass(&self) -> f64 {
        self.bulk_mass() + self.atom_at_zero
    }
}

/// Pointwise bulk densities of both measures at the accepted grid points.
///
/// The target density has the zero-atom's Lorentzian tail
/// `(atom / pi) * eta / (x^2 + eta^2)` subtracted. Below the spectral bottom
/// the cancellation is exact up to analytic-continuation terms of the same
/// order as the tail itself, so residuals within one tail magnitude of zero
/// are clamped to zero; anything more negative is left for the branch-error
/// check downstream.
fn pointwise_densities(
    solution: &ResolventSolution,
    alpha: f64,
    beta: f64,
    d: usize,
    v: usize,
    zero_atom: f64,
) -> (Vec<f64>, Vec<f64>) {
    let a: Vec<f64> = (1..=v).map(|j| (j as f64).powf(-2.0 * alpha)).collect();
    let c: Vec<f64> = (1..=v)
        .map(|j| (j as f64).powf(-2.0 * alpha - 2.0 * beta))
        .collect();
    let inv_pi = std::f64::consts::FRAC_1_PI;
    let df = d as f64;
    solution
        .grid
        .par_iter()
        .zip(solution.m_values.par_iter())
        .map(|(&z, &m)| {
            let mut weighted = Complex64::new(0.0, 0.0);
            for (&aj, &cj) in a.iter().zip(&c) {
                weighted += cj / (aj * m - z);
            }
            let pole_tail = inv_pi * zero_atom * z.im / z.norm_sqr();
            let mut target_density = inv_pi * weighted.im - pole_tail;
            if target_density < 0.0 && -target_density <= pole_tail {
                target_density = 0.0;
            }
            let kernel_density = inv_pi * z.re * df * (-m.im);
            (target_density, kernel_density)
        })
        .unzip()
}

/// Integrates the solved resolvent into the target and kernel measures.
///
/// Cells are the intervals between consecutive accepted grid abscissas; each
/// cell's mass is the trapezoid of the pointwise densities at its endpoints.
/// The target measure receives an atom at zero equal to the exact
/// finite-size pole residue of its transform (the discrete-sum counterpart
/// of [`crate::compute_f0`], which it matches to `O(1/d)`), and that pole's
/// Lorentzian tail is subtracted from the bulk cells so the atom is not
/// double-counted. A materially negative density (beyond `-1e-8` of the
/// measure's scale) signals that the grid's imaginary offsets are too small
/// and is returned as [`DetEquivError::NegativeMass`]; round-off-level
/// negatives are clamped to zero.
pub fn build_measures(
    solution: &ResolventSolution,
    alpha: f64,
    beta: f64,
    d: usize,
    v: usize,
) -> Result<(SpectralMeasure, SpectralMeasure), DetEquivError> {
    if solution.grid.len() < 2 {
        return Err(DetEquivError::BadInput(format!(
            "need at least 2 accepted grid points to form cells, got {}",
            solution.grid.len()
        )));
    }
    let n = solution.grid.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| solution.grid[i].re.total_cmp(&solution.grid[j].re));
    for w in order.windows(2) {
        if solution.grid[w[0]].re >= solution.grid[w[1]].re {
            return Err(DetEquivError::BadInput(
                "grid abscissas must be distinct".into(),
            ));
        }
    }

    let (_, zero_atom) = discrete_zero_data(alpha, beta, d, v)?;
    let (target_density, kernel_density) =
        pointwise_densities(solution, alpha, beta, d, v, zero_atom);

    let edges: Vec<f64> = order.iter().map(|&i| solution.grid[i].re).collect();
    let build = |density: &[f64], kind: MeasureKind, atom: f64| {
        let scale = order
            .iter()
            .map(|&i| density[i].abs())
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        let mut support_grid = Vec::with_capacity(n - 1);
        let mut masses = Vec::with_capacity(n - 1);
        let mut densities = Vec::with_capacity(n - 1);
        for (w, pair) in order.windows(2).enumerate() {
            let (lo, hi) = (edges[w], edges[w + 1]);
            let (rho_lo, rho_hi) = (density[pair[0]], density[pair[1]]);
            for (x, rho) in [(lo, rho_lo), (hi, rho_hi)] {
                if rho < -1e-8 * scale {
                    return Err(DetEquivError::NegativeMass { x, mass: rho });
                }
            }
            let width = hi - lo;
            let mass = (0.5 * (rho_lo.max(0.0) + rho_hi.max(0.0)) * width).max(0.0);
            support_grid.push((lo * hi).sqrt());
            masses.push(mass);
            densities.push(mass / width);
        }
        Ok(SpectralMeasure {
            support_grid,
            masses,
            cell_edges: edges.clone(),
            densities,
            atom_at_zero: atom,
            kind,
        })
    };

    let target = build(&target_density, MeasureKind::Target, zero_atom)?;
    let kernel = build(&kernel_density, MeasureKind::Kernel, 0.0)?;
    Ok((target, kernel))
}

/// Writes a measure as CSV with columns `x, density, mass` (one row per cell).
pub fn write_measure_csv(measure: &SpectralMeasure, path: &Path) -> Result<(), DetEquivError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,density,mass")?;
    for ((&x, &rho), &mass) in measure
        .support_grid
        .iter()
        .zip(&measure.densities)
        .zip(&measure.masses)
    {
        writeln!(out, "{x},{rho},{mass}")?;
    }
    out.flush()?;
    Ok(())
}

/// JSON header describing a measure: kind, atom, bulk mass, cell count, and
/// the model parameters it was built from.
pub fn measure_header_json(
    measure: &SpectralMeasure,
    alpha: f64,
    beta: f64,
    d: usize,
    v: usize,
) -> String {
    let kind = match measure.kind {
        MeasureKind::Target => "target",
        MeasureKind::Kernel => "kernel",
    };
    serde_json::json!({
        "kind": kind,
        "atom_at_zero": measure.atom_at_zero,
        "bulk_mass": measure.bulk_mass(),
        "cells": measure.masses.len(),
        "alpha": alpha,
        "beta": beta,
        "d": d,
        "v": v,
    })
    .to_string()
}
