//! Power-law random features (PLRF) model.
//!
//! A PLRF instance is the least-squares problem
//!
//! ```text
//!     min_θ  P(θ),    P(θ) = E_x [ (⟨Wᵀx, θ⟩ − ⟨x, b⟩)² ] = (Wθ − b)ᵀ D (Wθ − b),
//! ```
//!
//! where the data x has independent coordinates x_j = j^{-α} z_j with z_j standard
//! normal (so E[xxᵀ] = D = Diag(j^{-2α})), the target coefficients are b_j = j^{-β},
//! and W is a v×d random embedding with i.i.d. N(0, 1/d) entries. The exponents α
//! and β control how fast the data spectrum and the target energy decay; the
//! standing assumption 2α + 2β > 1 keeps the initial risk finite as v → ∞.
//!
//! The risk convention here is P(θ) itself, with no ½ factor; the ½ sometimes used
//! in least-squares objectives is a constant that cancels in every exponent and
//! every relative comparison, and it is omitted consistently across the workspace.
//!
//! Besides the instance itself this crate carries the spectral decomposition that
//! the loss dynamics are diagonal in ([`SpectralData`]), the quadrature-friendly
//! [`Spectrum`] form consumed by the ODE integrators, and the shared [`LossCurve`]
//! container with its CSV representation.

mod curve;
mod instance;
mod spectrum;

pub use curve::{iteration_grid, log_space, CurveMeta, CurveSource, LossCurve};
pub use instance::{InstanceSpec, PLRFInstance, PlrfError};
pub use spectrum::{spectral_data, SpectralData, Spectrum};

/// Σ_{j=1}^{n} j^{-2α}: trace of the data covariance truncated at n.
pub fn trace_diag(alpha: f64, n: usize) -> f64 {
    (1..=n).map(|j| (j as f64).powf(-2.0 * alpha)).sum()
}
