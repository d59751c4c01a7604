//! Integrator state and its invariants.

/// State of the coupled second-moment system at one time point.
///
/// `nu[j] = (ρ_j², ξ_j², χ_j)` holds the parameter-error energy, momentum
/// energy, and cross term for the `j`-th eigenvalue; `p` is the expected loss
/// `p_inf + Σ_j w_j λ_j ρ_j²` and `t` the current time.
#[derive(Debug, Clone)]
pub struct OdeState {
    pub nu: Vec<[f64; 3]>,
    pub p: f64,
    pub t: f64,
}

/// Negative excursions of the energies ρ², ξ² beyond this are step
/// rejections; smaller ones are clamped to zero.
pub(crate) const POSITIVITY_TOL: f64 = 1e-10;

/// Slack allowed in the Cauchy–Schwarz inequality χ² ≤ ρ²·ξ², relative to
/// the scale of the product.
pub(crate) const CAUCHY_SCHWARZ_TOL: f64 = 1e-8;

impl OdeState {
    /// Checks the state invariants: energies are nonnegative (within
    /// `POSITIVITY_TOL`) and every cross term satisfies Cauchy–Schwarz
    /// within `CAUCHY_SCHWARZ_TOL`. Returns a description of the first
    /// violation, if any.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (j, nu) in self.nu.iter().enumerate() {
            let [rho2, xi2, chi] = *nu;
            if !(rho2.is_finite() && xi2.is_finite() && chi.is_finite()) {
                return Err(format!("mode {j}: non-finite state ({rho2}, {xi2}, {chi})"));
            }
            if rho2 < -POSITIVITY_TOL {
                return Err(format!("mode {j}: negative parameter energy {rho2:.3e}"));
            }
            if xi2 < -POSITIVITY_TOL {
                return Err(format!("mode {j}: negative momentum energy {xi2:.3e}"));
            }
            let product = rho2.max(0.0) * xi2.max(0.0);
            if chi * chi > product + CAUCHY_SCHWARZ_TOL * (1.0 + product) {
                return Err(format!(
                    "mode {j}: cross term violates Cauchy-Schwarz (χ² = {:.3e} > ρ²ξ² = {:.3e})",
                    chi * chi,
                    product
                ));
            }
        }
        Ok(())
    }

    /// Clamps tolerated negative excursions of the energies to zero.
    pub(crate) fn clamp_energies(&mut self) {
        for nu in &mut self.nu {
            for v in &mut nu[..2] {
                if *v < 0.0 && *v >= -POSITIVITY_TOL {
                    *v = 0.0;
                }
            }
        }
    }
}
