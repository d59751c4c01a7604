//! Deterministic predictions for the expected loss of stochastic momentum
//! methods on power-law random-features regression.
//!
//! Conditioned on the embedding matrix, the expected per-mode second moments
//! `ν_j = (ρ_j², ξ_j², χ_j)` — parameter error, momentum energy, and their
//! cross term along the `j`-th eigenvector of the feature covariance — close
//! into a family of linear ODEs coupled only through the scalar expected loss
//!
//! ```text
//! P(t) = p_inf + Σ_j w_j λ_j ρ_j²(t),
//! dν_j/dt = Ω(t; λ_j) ν_j + λ_j B P(t) · dir(t).
//! ```
//!
//! Three closures of increasing fidelity are provided ([`OdeVariant`]): the
//! `Simplified` system used throughout the scaling-law analysis, the `Exact`
//! system retaining all second-order terms in the rates, and the `Coinflip`
//! system of the two-stage randomized update (exposed for testing).
//!
//! The crate offers two independent solvers:
//! * [`integrate`] — implicit Euler in the log-time variable `u = log(1+t)`
//!   with an exact scalar closure of the loss coupling at each step;
//! * [`volterra_oracle`] — a direct solution of the equivalent Volterra
//!   equation `P(t) = F(t) + ∫₀ᵗ K_s(t) P(s) ds` built from Runge–Kutta
//!   fundamental systems, used to cross-validate the integrator.

mod integrate;
mod state;
mod variant;
mod volterra;

pub use integrate::{integrate, integrate_with, IntegrateOptions, OdeSolution};
pub use state::OdeState;
pub use variant::{omega_and_g, omega_and_g_from_rates, OdeVariant};
pub use volterra::{volterra_components, volterra_oracle, VolterraOptions, VolterraTable};

use thiserror::Error;

/// Errors reported by the ODE integrator and the Volterra oracle.
#[derive(Debug, Error)]
pub enum OdeError {
    /// Invalid input (non-positive step, negative eigenvalue or weight, ...).
    #[error("invalid input: {0}")]
    BadInput(String),
    /// A step kept violating state invariants (or produced a singular
    /// implicit system) even after the maximum number of halvings.
    #[error("step at t = {t:.6e} failed after {halvings} halvings: {reason}")]
    StepFailure {
        t: f64,
        halvings: u32,
        reason: String,
    },
    /// The Volterra grid cannot resolve the solution to the required
    /// accuracy; the refinement residual is reported.
    #[error("Volterra grid too coarse: refinement residual {residual:.3e} exceeds 1e-3")]
    GridTooCoarse { residual: f64 },
    /// The Volterra grid exceeds the supported size (the solver is O(n²·d)).
    #[error("Volterra grid size {n} exceeds the maximum {max}")]
    GridTooLarge { n: usize, max: usize },
}
