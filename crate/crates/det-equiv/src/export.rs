//! Conversion of the deterministic measures into an ODE-ready spectrum.
//!
//! The loss predictor consumes a weighted list of modes
//! `(lambda_k, rho_k^2(0), w_k)` plus an irreducible floor: the loss is
//! `p_inf + sum_k w_k lambda_k rho_k^2` and gradient-noise feedback couples
//! through `sum_k w_k lambda_k^2 (...)`. A quadrature cell at node `x_k`
//! carrying target mass `f_k` and kernel mass `k_k` reproduces both
//! weightings exactly when
//!
//! ```text
//! lambda_k = x_k,    w_k = k_k / x_k^2,    rho_k^2(0) = f_k * x_k / k_k,
//! ```
//!
//! because then `w_k lambda_k rho_k^2 = f_k` (target mass preserved) and
//! `w_k lambda_k^2 = k_k` (kernel mass preserved).

use plrf_core::Spectrum;

use crate::measures::{MeasureKind, SpectralMeasure};
use crate::DetEquivError;

/// Builds the deterministic quadrature spectrum from the target and kernel
/// measures of [`crate::build_measures`].
///
/// Both measures must share the same cells. Cells where both masses vanish
/// are skipped; cells with target mass but (numerically) zero kernel mass
/// fall back to `w_k = f_k / x_k, rho_k^2 = 1`, which still preserves the
/// target mass. The irreducible floor is the target measure's atom at zero.
pub fn deterministic_spectrum(
    target: &SpectralMeasure,
    kernel: &SpectralMeasure,
) -> Result<Spectrum, DetEquivError> {
    if target.kind != MeasureKind::Target || kernel.kind != MeasureKind::Kernel {
        return Err(DetEquivError::BadInput(
            "expected (target, kernel) measures in that order".into(),
        ));
    }
    if target.cell_edges != kernel.cell_edges {
        return Err(DetEquivError::BadInput(
            "target and kernel measures must share the same cells".into(),
        ));
    }
    let kernel_total = kernel.bulk_mass();
    let mut lambdas = Vec::new();
    let mut rho0 = Vec::new();
    let mut weights = Vec::new();
    for ((&x, &f), &k) in target
        .support_grid
        .iter()
        .zip(&target.masses)
        .zip(&kernel.masses)
    {
        if f <= 0.0 && k <= 0.0 {
            continue;
        }
        let (w, rho2) = if k > 1e-15 * kernel_total {
            (k / (x * x), f * x / k)
        } else {
            (f / x, 1.0)
        };
        lambdas.push(x);
        rho0.push(rho2);
        weights.push(w);
    }
    if lambdas.is_empty() {
        return Err(DetEquivError::EmptyBulk);
    }
    Ok(Spectrum {
        lambdas,
        rho0,
        weights: Some(weights),
        p_inf: target.atom_at_zero,
    })
}
