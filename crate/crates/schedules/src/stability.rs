//! Stability predicates for the SGD, SGD-M, and power-law schedule families.

use serde::{Deserialize, Serialize};

use crate::param::ParamSchedule;
use crate::preset::{ScheduleError, ScheduleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Boundary,
    Unstable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Boundary => "boundary",
            Verdict::Unstable => "unstable",
        }
    }
}

/// Outcome of a stability check: the verdict, the binding constraint spelled
/// out with its numbers, and a caveat flag for boundary verdicts (the sharp
/// constant in the underlying theorem is not quantified, so near-threshold
/// calls are judgement).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: Verdict,
    pub reason: String,
    pub caveat: bool,
}

struct Constraint {
    label: String,
    value: f64,
    bound: f64,
    /// Hard constraints flip to unstable the moment value ≥ bound (divergence
    /// thresholds); soft ones get the ±5% boundary band.
    hard: bool,
}

impl Constraint {
    fn ratio(&self) -> f64 {
        if self.bound > 0.0 {
            self.value / self.bound
        } else if self.value <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn describe(&self) -> String {
        format!("{}: {:.6e} vs bound {:.6e}", self.label, self.value, self.bound)
    }
}

enum Family {
    Sgd { g2: f64 },
    SgdM { g2: f64, g3: f64, delta: f64 },
    PowerLaw { g2: f64, g3_coeff: f64, kappa3: f64 },
}

fn classify(s: &ScheduleSet) -> Result<Family, ScheduleError> {
    let g2 = s.gamma2.constant_value().ok_or(ScheduleError::UnrecognizedFamily)?;

    // γ₃ ≡ 0: the accumulator never feeds θ, so the dynamics are plain SGD
    // whatever γ₁ and Δ do.
    if s.gamma3.is_zero() {
        return Ok(Family::Sgd { g2 });
    }

    if let (Some(g3), Some(delta)) = (s.gamma3.constant_value(), s.delta.constant_value()) {
        if delta <= 0.0 {
            return Err(ScheduleError::BadDelta(delta));
        }
        return Ok(Family::SgdM { g2, g3, delta });
    }

    // Power-law family: γ₁ ≡ 1, γ₂ constant, γ₃ = coeff·(1+t)^{-κ₃},
    // Δ = δ/(1+t). Only the product coeff = γ̃₃ d^{-κ₂} enters the conditions.
    let gamma1_is_unit = s.gamma1.constant_value() == Some(1.0);
    let delta_is_decaying = matches!(
        s.delta,
        ParamSchedule::PowerLaw { exponent, shift, coeff }
            if exponent == 1.0 && shift == 1.0 && coeff > 0.0
    );
    if gamma1_is_unit && delta_is_decaying {
        if let ParamSchedule::PowerLaw { coeff, exponent, shift } = s.gamma3 {
            if shift == 1.0 && exponent >= 0.0 {
                return Ok(Family::PowerLaw { g2, g3_coeff: coeff, kappa3: exponent });
            }
        }
    }
    Err(ScheduleError::UnrecognizedFamily)
}

/// Evaluate the stability conditions for a schedule on a problem with data
/// exponent `alpha` and parameter count `d`, using mini-batch size `batch` and
/// safety constant `safety` (1 reproduces the empirical tolerance; smaller is
/// more conservative). The gradient-rate bound compares against
/// min{1/B, 1/tr} with tr = Σ_{j=1}^{d} j^{-2α}.
pub fn stability_check(
    schedule: &ScheduleSet,
    alpha: f64,
    d: usize,
    batch: usize,
    safety: f64,
) -> Result<StabilityReport, ScheduleError> {
    let positive = |x: f64| x > 0.0 && x.is_finite();
    if batch == 0 || d == 0 || !positive(alpha) || !positive(safety) {
        return Err(ScheduleError::BadValue(format!(
            "need batch ≥ 1, d ≥ 1, alpha > 0, safety > 0; got batch={batch}, d={d}, alpha={alpha}, safety={safety}"
        )));
    }
    let tr = plrf_core::trace_diag(alpha, d);
    let b = batch as f64;
    let rate_bound = safety * (1.0 / b).min(1.0 / tr);

    let mut constraints = Vec::new();
    match classify(schedule)? {
        Family::Sgd { g2 } => {
            constraints.push(Constraint {
                label: format!("gradient rate γ₂ = {g2:.6e} against the divergence threshold 2/(B+1)"),
                value: g2,
                bound: 2.0 / (b + 1.0),
                hard: true,
            });
            constraints.push(Constraint {
                label: format!("gradient rate γ₂ = {g2:.6e} against c·min(1/B, 1/tr)"),
                value: g2,
                bound: rate_bound,
                hard: false,
            });
        }
        Family::SgdM { g2, g3, delta } => {
            constraints.push(Constraint {
                label: format!("momentum decay δ = {delta:.6e} against 2"),
                value: delta,
                bound: 2.0,
                hard: true,
            });
            let eff = g2 + g3 / delta;
            constraints.push(Constraint {
                label: format!("effective rate γ₂ + γ₃/δ = {eff:.6e} against c·min(1/B, 1/tr)"),
                value: eff,
                bound: rate_bound,
                hard: false,
            });
        }
        Family::PowerLaw { g2, g3_coeff, kappa3 } => {
            constraints.push(Constraint {
                label: format!("gradient rate γ₂ = {g2:.6e} against c·min(1/B, 1/tr)"),
                value: g2,
                bound: rate_bound,
                hard: false,
            });
            constraints.push(Constraint {
                label: format!("momentum coefficient γ̃₃·d^-κ₂ = {g3_coeff:.6e} against c·γ₂"),
                value: g3_coeff,
                bound: safety * g2,
                hard: false,
            });
            let critical = 1.0 / (2.0 * alpha);
            if kappa3 < critical {
                // Slow decay: the momentum coefficient must shrink by the gap
                // to the critical exponent, d^{2α(κ₃ − 1/(2α))}.
                let shrink = (d as f64).powf(2.0 * alpha * (kappa3 - critical));
                constraints.push(Constraint {
                    label: format!(
                        "momentum coefficient γ̃₃·d^-κ₂ = {g3_coeff:.6e} against \
                         c·γ₂·d^(2ακ₃−1) for decay κ₃ = {kappa3} below critical {critical}"
                    ),
                    value: g3_coeff,
                    bound: safety * g2 * shrink,
                    hard: false,
                });
            }
        }
    }

    // Hard failures dominate; otherwise the most-stressed constraint decides.
    for c in &constraints {
        if c.hard && c.value >= c.bound {
            return Ok(StabilityReport {
                verdict: Verdict::Unstable,
                reason: c.describe(),
                caveat: false,
            });
        }
    }
    let binding = constraints
        .iter()
        .max_by(|a, b| a.ratio().partial_cmp(&b.ratio()).unwrap())
        .expect("every family has at least one constraint");
    let ratio = binding.ratio();
    let (verdict, caveat) = if ratio > 1.05 {
        (Verdict::Unstable, false)
    } else if ratio >= 0.95 {
        (Verdict::Boundary, true)
    } else {
        (Verdict::Stable, false)
    };
    Ok(StabilityReport { verdict, reason: binding.describe(), caveat })
}
