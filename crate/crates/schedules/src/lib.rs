//! Hyperparameter schedules for the generalized stochastic momentum family.
//!
//! Every algorithm in this workspace is an instance of the two-line iteration
//!
//! ```text
//!     y_t     = (1 − Δ(t)) y_{t−1} + γ₁(t) g_t,
//!     θ_{t+1} = θ_t − γ₂(t; d) g_t − γ₃(t; d) y_t,
//! ```
//!
//! where `g_t` is the mini-batch gradient estimate and the four schedules
//! (γ₁, γ₂, γ₃, Δ) select the algorithm: plain SGD keeps only γ₂; SGD-M uses a
//! constant momentum decay Δ ≡ δ; the dimension-adapted variants scale γ₂ and γ₃
//! by powers of d and decay γ₃ and Δ by powers of 1 + t. Schedule-free averaging
//! and accelerated/Nesterov methods translate into the same four-schedule form.
//!
//! A [`ScheduleSet`] stores schedules as numeric parameter families (constants,
//! power laws, and the accelerated ramp) rather than closures, so it serializes
//! into configs and manifests and evaluates cheaply inside inner loops. Builders
//! resolve all dimension dependence at construction time: a set is specific to
//! one `d`.
//!
//! [`stability_check`] evaluates the known stability predicates for the SGD,
//! SGD-M, and power-law families, reporting `stable`, `boundary` (within 5% of
//! the binding constraint), or `unstable` with the constraint spelled out.

mod param;
mod preset;
mod stability;

pub use param::ParamSchedule;
pub use preset::{
    build_preset, default_delta, effective_sgd_rate, InstanceSummary, Overrides,
    Preset, ScheduleError, ScheduleSet,
};
pub use stability::{stability_check, StabilityReport, Verdict};
