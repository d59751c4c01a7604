//! Numeric schedule families: the closed set of time-dependences used by the
//! algorithm presets.

use serde::{Deserialize, Serialize};

/// One scalar hyperparameter as a function of the iteration counter t ≥ 0.
///
/// The three variants cover every preset in this workspace; keeping them as
/// data (not closures) makes schedule sets serializable and comparable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ParamSchedule {
    /// Time-independent value.
    Constant { value: f64 },
    /// `coeff · (shift + t)^{-exponent}` — power-law decay (or constant when
    /// the exponent is zero). The shift keeps the value finite at t = 0.
    PowerLaw { coeff: f64, exponent: f64, shift: f64 },
    /// `(t+1)·(rate·(t+1) − damp)/(t+2)` — the gradient weight produced by
    /// translating accelerated/Nesterov iterations into momentum form. Grows
    /// linearly for large t and is negative while `rate·(t+1) < damp`.
    AccelRamp { rate: f64, damp: f64 },
}

impl ParamSchedule {
    pub const ZERO: ParamSchedule = ParamSchedule::Constant { value: 0.0 };
    pub const ONE: ParamSchedule = ParamSchedule::Constant { value: 1.0 };

    pub fn constant(value: f64) -> Self {
        ParamSchedule::Constant { value }
    }

    /// Evaluate at time t (t ≥ 0; continuous time is fine).
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            ParamSchedule::Constant { value } => value,
            ParamSchedule::PowerLaw { coeff, exponent, shift } => {
                coeff * (shift + t).powf(-exponent)
            }
            ParamSchedule::AccelRamp { rate, damp } => {
                (t + 1.0) * (rate * (t + 1.0) - damp) / (t + 2.0)
            }
        }
    }

    /// The value when the schedule does not depend on t; `None` otherwise.
    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            ParamSchedule::Constant { value } => Some(value),
            ParamSchedule::PowerLaw { coeff, exponent, .. } => {
                (exponent == 0.0).then_some(coeff)
            }
            ParamSchedule::AccelRamp { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant_value() == Some(0.0)
    }
}
