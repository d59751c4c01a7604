//! Algorithm presets: named hyperparameter choices resolved against one
//! problem size, plus the SGD/SGD-M rate correspondence.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::param::ParamSchedule;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("unknown algorithm preset '{0}'")]
    UnknownPreset(String),
    #[error(
        "decaying-rate preset needs 2α > 1 for its default exponent (α = {0}); \
         pass an explicit kappa3 override"
    )]
    NeedsExplicitKappa3(f64),
    #[error("{0} is not constant in time; rate correspondence needs SGD-M form")]
    NotConstant(&'static str),
    #[error("momentum decay δ = {0} must be positive")]
    BadDelta(f64),
    #[error("schedule shape outside the SGD / SGD-M / power-law families")]
    UnrecognizedFamily,
    #[error("{0}")]
    BadValue(String),
}

/// The named algorithms this workspace can instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Sgd,
    SgdM,
    DanaConstant,
    DanaDecaying,
    ScheduleFree,
    #[serde(rename = "acsgd")]
    AcSgd,
    SNesterov,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Sgd => "sgd",
            Preset::SgdM => "sgd-m",
            Preset::DanaConstant => "dana-constant",
            Preset::DanaDecaying => "dana-decaying",
            Preset::ScheduleFree => "schedule-free",
            Preset::AcSgd => "acsgd",
            Preset::SNesterov => "s-nesterov",
        }
    }

    pub const ALL: [Preset; 7] = [
        Preset::Sgd,
        Preset::SgdM,
        Preset::DanaConstant,
        Preset::DanaDecaying,
        Preset::ScheduleFree,
        Preset::AcSgd,
        Preset::SNesterov,
    ];
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "sgd" => Ok(Preset::Sgd),
            "sgdm" | "sgdmomentum" => Ok(Preset::SgdM),
            "danaconstant" => Ok(Preset::DanaConstant),
            "danadecaying" | "dana" => Ok(Preset::DanaDecaying),
            "schedulefree" | "schedulefreesgd" => Ok(Preset::ScheduleFree),
            "acsgd" => Ok(Preset::AcSgd),
            "snesterov" | "stochasticnesterov" | "nesterov" => Ok(Preset::SNesterov),
            _ => Err(ScheduleError::UnknownPreset(s.to_string())),
        }
    }
}

/// The problem-size facts a preset needs: dimensions and the covariance trace
/// Σ_{j=1}^{v} j^{-2α} of the instance the schedule will run on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub d: usize,
    pub v: usize,
    pub trace_d: f64,
}

impl InstanceSummary {
    pub fn new(d: usize, v: usize, trace_d: f64) -> Self {
        Self { d, v, trace_d }
    }

    /// Compute the trace from the exponent and dimensions.
    pub fn from_dims(alpha: f64, d: usize, v: usize) -> Self {
        Self { d, v, trace_d: plrf_core::trace_diag(alpha, v) }
    }
}

/// Optional overrides applied on top of a preset's defaults. Unset fields keep
/// the preset's choice; coefficient overrides are the pre-dimension-scaling
/// values (γ̃₂, γ̃₃), so they compose with the κ exponents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    /// γ̃₂ in γ₂ = γ̃₂ · d^{-κ₁}. For the constant-rate presets (κ₁ = 0) this is
    /// γ₂ itself.
    pub gamma2_tilde: Option<f64>,
    /// γ̃₃ in γ₃(t) = γ̃₃ · d^{-κ₂} (1+t)^{-κ₃}.
    pub gamma3_tilde: Option<f64>,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub kappa3: Option<f64>,
    /// δ in Δ(t) = δ/(1+t) (power-law presets) or Δ ≡ δ (SGD-M).
    pub delta: Option<f64>,
    pub batch: Option<usize>,
    /// β̃ for schedule-free averaging.
    pub beta_momentum: Option<f64>,
    /// γ̃ for schedule-free and Nesterov presets.
    pub gamma_tilde: Option<f64>,
    /// Accelerated-SGD constants: α̃ = c1/(d·tr), β̃ = c2/tr.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

/// A fully resolved schedule set for one algorithm at one problem size.
///
/// Immutable value object; all dimension dependence is baked in, so evaluation
/// is a function of t alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSet {
    /// Canonical algorithm name, carried into curve metadata.
    pub name: String,
    /// Gradient weight in the momentum accumulator.
    pub gamma1: ParamSchedule,
    /// Gradient step size on θ.
    pub gamma2: ParamSchedule,
    /// Momentum step size on θ.
    pub gamma3: ParamSchedule,
    /// Momentum decay Δ(t); the accumulator keeps the fraction 1 − Δ(t).
    pub delta: ParamSchedule,
    /// Mini-batch size B.
    pub batch: usize,
    /// Named exponents and coefficients (kappa1, kappa2, kappa3, kappa_b,
    /// delta, gamma2_tilde, gamma3_tilde) when the schedule is of power-law
    /// form; empty otherwise.
    pub tags: BTreeMap<String, f64>,
}

impl ScheduleSet {
    /// All four schedule values at time t: (γ₁, γ₂, γ₃, Δ).
    pub fn rates_at(&self, t: f64) -> (f64, f64, f64, f64) {
        (
            self.gamma1.value(t),
            self.gamma2.value(t),
            self.gamma3.value(t),
            self.delta.value(t),
        )
    }

    pub fn tag(&self, key: &str) -> Option<f64> {
        self.tags.get(key).copied()
    }
}

/// Default momentum-decay coefficient δ for the power-law presets, large enough
/// for stability and acceleration across the experimental grid:
/// max{(2α+2β−1)/α, 2 − 1/α} + 1 when β is known, 8 otherwise (the
/// exponent-agnostic recommendation).
pub fn default_delta(alpha: f64, beta: Option<f64>) -> f64 {
    match beta {
        Some(b) => {
            let a = (2.0 * alpha + 2.0 * b - 1.0) / alpha;
            a.max(2.0 - 1.0 / alpha) + 1.0
        }
        None => 8.0,
    }
}

fn dana_tags(
    kappa: [f64; 3],
    delta: f64,
    gamma2_tilde: f64,
    gamma3_tilde: f64,
) -> BTreeMap<String, f64> {
    let mut tags = BTreeMap::new();
    tags.insert("kappa1".into(), kappa[0]);
    tags.insert("kappa2".into(), kappa[1]);
    tags.insert("kappa3".into(), kappa[2]);
    tags.insert("kappa_b".into(), 0.0);
    tags.insert("delta".into(), delta);
    tags.insert("gamma2_tilde".into(), gamma2_tilde);
    tags.insert("gamma3_tilde".into(), gamma3_tilde);
    tags
}

/// Resolve a preset into a concrete [`ScheduleSet`] for one problem size.
///
/// `beta` feeds the default δ of the power-law presets; pass it whenever the
/// target exponent is known. All defaults are overridable through `overrides`.
pub fn build_preset(
    preset: Preset,
    alpha: f64,
    beta: Option<f64>,
    summary: InstanceSummary,
    overrides: &Overrides,
) -> Result<ScheduleSet, ScheduleError> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(ScheduleError::BadValue(format!("alpha must be positive, got {alpha}")));
    }
    if summary.trace_d <= 0.0 || !summary.trace_d.is_finite() {
        return Err(ScheduleError::BadValue(format!(
            "trace must be positive, got {}",
            summary.trace_d
        )));
    }
    let batch = overrides.batch.unwrap_or(1);
    if batch == 0 {
        return Err(ScheduleError::BadValue("batch size must be ≥ 1".into()));
    }
    let o = overrides;
    let d = summary.d as f64;
    let tr = summary.trace_d;
    let half_inv_tr = 1.0 / (2.0 * tr);

    let set = match preset {
        Preset::Sgd => {
            let g2 = o.gamma2_tilde.unwrap_or(half_inv_tr);
            ScheduleSet {
                name: preset.as_str().into(),
                gamma1: ParamSchedule::ZERO,
                gamma2: ParamSchedule::constant(g2),
                gamma3: ParamSchedule::ZERO,
                delta: ParamSchedule::ONE,
                batch,
                tags: BTreeMap::new(),
            }
        }
        Preset::SgdM => {
            // Constant momentum with the customary decay 1 − Δ = 0.9; the split
            // γ₂ = γ₃/δ keeps the effective SGD rate at the SGD default 1/(2tr).
            let delta = o.delta.unwrap_or(0.1);
            if delta <= 0.0 {
                return Err(ScheduleError::BadDelta(delta));
            }
            let g2 = o.gamma2_tilde.unwrap_or(0.5 * half_inv_tr);
            let g3 = o.gamma3_tilde.unwrap_or(delta * 0.5 * half_inv_tr);
            ScheduleSet {
                name: preset.as_str().into(),
                gamma1: ParamSchedule::ONE,
                gamma2: ParamSchedule::constant(g2),
                gamma3: ParamSchedule::constant(g3),
                delta: ParamSchedule::constant(delta),
                batch,
                tags: BTreeMap::new(),
            }
        }
        Preset::DanaConstant => {
            let k1 = o.kappa1.unwrap_or((1.0 - 2.0 * alpha).max(0.0));
            let k2 = o.kappa2.unwrap_or(k1 + 1.0);
            let k3 = o.kappa3.unwrap_or(0.0);
            build_power_law(preset, alpha, beta, summary, o, batch, [k1, k2, k3])?
        }
        Preset::DanaDecaying => {
            let k3 = match o.kappa3 {
                Some(k) => k,
                None if 2.0 * alpha > 1.0 => 1.0 / (2.0 * alpha),
                None => return Err(ScheduleError::NeedsExplicitKappa3(alpha)),
            };
            let k1 = o.kappa1.unwrap_or(0.0);
            let k2 = o.kappa2.unwrap_or(0.0);
            build_power_law(preset, alpha, beta, summary, o, batch, [k1, k2, k3])?
        }
        Preset::ScheduleFree => {
            let beta_m = o.beta_momentum.unwrap_or(0.9);
            let g_tilde = o.gamma_tilde.unwrap_or(0.5 / tr);
            let g2 = g_tilde * (1.0 - beta_m);
            let g3_coeff = g_tilde * beta_m;
            ScheduleSet {
                name: preset.as_str().into(),
                gamma1: ParamSchedule::ONE,
                gamma2: ParamSchedule::constant(g2),
                gamma3: ParamSchedule::PowerLaw { coeff: g3_coeff, exponent: 1.0, shift: 1.0 },
                delta: ParamSchedule::PowerLaw { coeff: 1.0, exponent: 1.0, shift: 1.0 },
                batch,
                tags: dana_tags([0.0, 0.0, 1.0], 1.0, g2, g3_coeff),
            }
        }
        Preset::AcSgd => {
            let c1 = o.c1.unwrap_or(0.5);
            let c2 = o.c2.unwrap_or(0.5);
            let rate = c1 / (d * tr);
            let damp = c2 / tr;
            accelerated_set(preset, rate, damp, damp, batch)
        }
        Preset::SNesterov => {
            let g_tilde = o.gamma_tilde.unwrap_or(0.5 / tr);
            accelerated_set(preset, g_tilde, g_tilde, g_tilde, batch)
        }
    };
    Ok(set)
}

/// Common shape of the accelerated translations: a ramping gradient weight in
/// the accumulator, constant γ₂, γ₃ = 1/(t+1), Δ = 1/(t+2).
fn accelerated_set(
    preset: Preset,
    rate: f64,
    damp: f64,
    gamma2: f64,
    batch: usize,
) -> ScheduleSet {
    ScheduleSet {
        name: preset.as_str().into(),
        gamma1: ParamSchedule::AccelRamp { rate, damp },
        gamma2: ParamSchedule::constant(gamma2),
        gamma3: ParamSchedule::PowerLaw { coeff: 1.0, exponent: 1.0, shift: 1.0 },
        delta: ParamSchedule::PowerLaw { coeff: 1.0, exponent: 1.0, shift: 2.0 },
        batch,
        tags: BTreeMap::new(),
    }
}

fn build_power_law(
    preset: Preset,
    alpha: f64,
    beta: Option<f64>,
    summary: InstanceSummary,
    o: &Overrides,
    batch: usize,
    kappa: [f64; 3],
) -> Result<ScheduleSet, ScheduleError> {
    let d = summary.d as f64;
    let tr = summary.trace_d;
    let [k1, k2, k3] = kappa;
    // Default gradient rate is 1/(2tr), which already carries the right
    // d-scaling; the stored tilde coefficient is its d^{κ₁} multiple so the
    // power-law form γ₂ = γ̃₂ d^{-κ₁} holds exactly.
    let g2_tilde = o.gamma2_tilde.unwrap_or_else(|| d.powf(k1) / (2.0 * tr));
    let g2 = g2_tilde * d.powf(-k1);
    let g3_tilde = o.gamma3_tilde.unwrap_or(g2 / 5.0);
    let delta = o.delta.unwrap_or_else(|| default_delta(alpha, beta));
    if delta <= 0.0 {
        return Err(ScheduleError::BadDelta(delta));
    }
    Ok(ScheduleSet {
        name: preset.as_str().into(),
        gamma1: ParamSchedule::ONE,
        gamma2: ParamSchedule::constant(g2),
        gamma3: ParamSchedule::PowerLaw {
            coeff: g3_tilde * d.powf(-k2),
            exponent: k3,
            shift: 1.0,
        },
        delta: ParamSchedule::PowerLaw { coeff: delta, exponent: 1.0, shift: 1.0 },
        batch,
        tags: dana_tags(kappa, delta, g2_tilde, g3_tilde),
    })
}

/// The SGD learning rate with the same risk dynamics as a constant-coefficient
/// momentum schedule: γ₂ + γ₃/δ.
///
/// Rejects schedules whose γ₂, γ₃, or Δ vary in time.
pub fn effective_sgd_rate(schedule: &ScheduleSet) -> Result<f64, ScheduleError> {
    let g2 = schedule
        .gamma2
        .constant_value()
        .ok_or(ScheduleError::NotConstant("gamma2"))?;
    let g3 = schedule
        .gamma3
        .constant_value()
        .ok_or(ScheduleError::NotConstant("gamma3"))?;
    let delta = schedule
        .delta
        .constant_value()
        .ok_or(ScheduleError::NotConstant("delta"))?;
    if g3 == 0.0 {
        return Ok(g2);
    }
    if delta <= 0.0 {
        return Err(ScheduleError::BadDelta(delta));
    }
    Ok(g2 + g3 / delta)
}
