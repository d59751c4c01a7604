//! Implicit-Euler integration of the coupled second-moment system.

use plrf_core::{CurveMeta, CurveSource, LossCurve, Spectrum};
use rayon::prelude::*;
use schedules::ScheduleSet;

use crate::state::OdeState;
use crate::variant::{omega_and_g_from_rates, OdeVariant};
use crate::OdeError;

/// Tuning knobs for [`integrate_with`].
#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    /// Uniform step in the log-time variable `u = log(1+t)`; on the original
    /// clock each step advances by `h' = step·(1+t)`. Default `1e-2`; use
    /// `1e-3` for precision runs.
    pub step: f64,
    /// Density of the log-spaced output grid (points per decade of `t`).
    pub outputs_per_decade: usize,
    /// Additional exact record times; values are interpolated between the
    /// two bracketing integrator steps.
    pub record_times: Option<Vec<f64>>,
    /// Test hook: drop the loss forcing `g`, leaving the homogeneous system.
    pub zero_forcing: bool,
    /// Loss level at which the trajectory is declared divergent and the
    /// curve truncated.
    pub divergence_threshold: f64,
    /// Maximum number of step halvings after a rejection before giving up.
    pub max_halvings: u32,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            step: 1e-2,
            outputs_per_decade: 40,
            record_times: None,
            zero_forcing: false,
            divergence_threshold: 1e12,
            max_halvings: 20,
        }
    }
}

/// Result of [`integrate_with`]: the sampled loss curve, whether the implicit
/// closure flagged an unstable loss feedback (denominator ≤ 0), and the final
/// integrator state.
#[derive(Debug)]
pub struct OdeSolution {
    pub curve: LossCurve,
    pub instability: bool,
    pub final_state: OdeState,
}

enum Reject {
    Singular,
    Invariant(String),
    Instability,
}

/// Integrates the chosen closure of the second-moment system over the given
/// spectrum up to `horizon`, recording the expected loss on a log-spaced
/// output grid.
pub fn integrate(
    spectrum: &Spectrum,
    variant: OdeVariant,
    schedule: &ScheduleSet,
    horizon: f64,
    step: f64,
    meta: CurveMeta,
) -> Result<LossCurve, OdeError> {
    let opts = IntegrateOptions {
        step,
        ..IntegrateOptions::default()
    };
    integrate_with(spectrum, variant, schedule, horizon, &opts, meta).map(|sol| sol.curve)
}

/// [`integrate`] with full control over stepping, recording, and test hooks.
///
/// Each step solves, per eigenvalue, the implicit system
/// `(I − h'Ω_j)ν_j⁺ = ν_j + h'·λ_jB·P⁺·dir` and closes the scalar loss
/// exactly: writing `ν_j⁺ = a_j + P⁺·c_j`, the loss satisfies
/// `P⁺ = p_inf + Σ_j w_jλ_j(a_j + P⁺c_j)₁`, a single linear equation. A
/// non-positive denominator `1 − Σ w_jλ_j(c_j)₁` signals an unstable loss
/// feedback; the curve is truncated and flagged. Singular implicit systems
/// and state-invariant violations reject the step, which is retried with up
/// to `max_halvings` halvings.
pub fn integrate_with(
    spectrum: &Spectrum,
    variant: OdeVariant,
    schedule: &ScheduleSet,
    horizon: f64,
    opts: &IntegrateOptions,
    meta: CurveMeta,
) -> Result<OdeSolution, OdeError> {
    validate(spectrum, horizon, opts)?;
    let mut state = OdeState {
        nu: spectrum.rho0.iter().map(|&r| [r, 0.0, 0.0]).collect(),
        p: 0.0,
        t: 0.0,
    };
    state.p = loss_of(spectrum, &state.nu);

    let targets = build_targets(horizon, opts);
    let mut records = vec![(0.0, state.p)];
    let mut target_idx = 0usize;
    let mut instability = false;
    let mut diverged = false;

    while state.t < horizon * (1.0 - 1e-12) {
        let h_full = (opts.step * (1.0 + state.t)).min(horizon - state.t);
        let mut n_sub: u64 = 1;
        let mut halvings = 0u32;
        let next = loop {
            match cross_interval(spectrum, variant, schedule, &state, h_full, n_sub, opts) {
                Ok(next) => break Some(next),
                Err(Reject::Instability) => break None,
                Err(reject) => {
                    if halvings < opts.max_halvings {
                        halvings += 1;
                        n_sub *= 2;
                        continue;
                    }
                    let reason = match reject {
                        Reject::Singular => "singular implicit system".to_string(),
                        Reject::Invariant(msg) => msg,
                        Reject::Instability => unreachable!(),
                    };
                    return Err(OdeError::StepFailure {
                        t: state.t,
                        halvings,
                        reason,
                    });
                }
            }
        };
        let Some(next) = next else {
            instability = true;
            diverged = true;
            break;
        };
        if !next.p.is_finite() || next.p > opts.divergence_threshold {
            diverged = true;
            break;
        }
        while target_idx < targets.len() && targets[target_idx] <= next.t * (1.0 + 1e-12) {
            let tau = targets[target_idx].min(next.t);
            records.push((tau, interp_loss(state.t, state.p, next.t, next.p, tau)));
            target_idx += 1;
        }
        state = next;
    }

    let batch = schedule.batch as f64;
    let flops_dim = if meta.d > 0 {
        meta.d as f64
    } else {
        spectrum.lambdas.len() as f64
    };
    let times: Vec<f64> = records.iter().map(|r| r.0).collect();
    let losses: Vec<f64> = records.iter().map(|r| r.1).collect();
    let flops: Vec<f64> = times.iter().map(|t| t * batch * flops_dim).collect();
    let stderr = vec![0.0; times.len()];
    let curve = LossCurve {
        times,
        losses,
        stderr,
        flops,
        diverged,
        source: CurveSource::Ode,
        variant: variant.as_str().to_string(),
        meta,
    };
    Ok(OdeSolution {
        curve,
        instability,
        final_state: state,
    })
}

/// Crosses `[start.t, start.t + h_total]` in `n_sub` equal implicit-Euler
/// substeps, enforcing the state invariants after each one.
fn cross_interval(
    spectrum: &Spectrum,
    variant: OdeVariant,
    schedule: &ScheduleSet,
    start: &OdeState,
    h_total: f64,
    n_sub: u64,
    opts: &IntegrateOptions,
) -> Result<OdeState, Reject> {
    let hs = h_total / n_sub as f64;
    let batch = schedule.batch as f64;
    let n = start.nu.len();
    let mut state = start.clone();
    let mut work: Vec<([f64; 3], [f64; 3])> = vec![([0.0; 3], [0.0; 3]); n];

    for k in 0..n_sub {
        let t_left = start.t + hs * k as f64;
        let (g1, g2, g3, dl) = schedule.rates_at(t_left);
        let solve_mode = |j: usize, nu_j: &[f64; 3]| -> Result<([f64; 3], [f64; 3]), Reject> {
            let lam = spectrum.lambdas[j];
            let (omega, dir) = omega_and_g_from_rates(variant, g1, g2, g3, dl, batch, lam);
            let mut m = [[0.0f64; 3]; 3];
            for (r, row) in m.iter_mut().enumerate() {
                for (c, entry) in row.iter_mut().enumerate() {
                    *entry = f64::from(u8::from(r == c)) - hs * omega[r][c];
                }
            }
            let forcing = if opts.zero_forcing {
                [0.0; 3]
            } else {
                let s = hs * lam * batch;
                [s * dir[0], s * dir[1], s * dir[2]]
            };
            solve3_two(m, *nu_j, forcing).ok_or(Reject::Singular)
        };
        if n >= 64 {
            work.par_iter_mut()
                .zip(state.nu.par_iter())
                .enumerate()
                .try_for_each(|(j, (slot, nu_j))| {
                    *slot = solve_mode(j, nu_j)?;
                    Ok(())
                })?;
        } else {
            for (j, (slot, nu_j)) in work.iter_mut().zip(&state.nu).enumerate() {
                *slot = solve_mode(j, nu_j)?;
            }
        }
        let mut sum_a = 0.0;
        let mut sum_c = 0.0;
        for (j, (a, c)) in work.iter().enumerate() {
            let wl = spectrum.weight(j) * spectrum.lambdas[j];
            sum_a += wl * a[0];
            sum_c += wl * c[0];
        }
        let denom = 1.0 - sum_c;
        if denom <= 0.0 || denom.is_nan() {
            return Err(Reject::Instability);
        }
        let p_new = (spectrum.p_inf.max(0.0) + sum_a) / denom;
        for (nu_j, (a, c)) in state.nu.iter_mut().zip(&work) {
            for ((v, av), cv) in nu_j.iter_mut().zip(a).zip(c) {
                *v = av + p_new * cv;
            }
        }
        state.p = p_new;
        state.t = start.t + hs * (k + 1) as f64;
        state.check_invariants().map_err(Reject::Invariant)?;
        state.clamp_energies();
    }
    state.t = start.t + h_total;
    Ok(state)
}

/// Solves `M x = b1` and `M y = b2` by Gauss–Jordan elimination with partial
/// pivoting on the 3×5 augmented system. Returns `None` when a pivot falls
/// below the numerical-singularity threshold.
fn solve3_two(m: [[f64; 3]; 3], b1: [f64; 3], b2: [f64; 3]) -> Option<([f64; 3], [f64; 3])> {
    let mut a = [[0.0f64; 5]; 3];
    for (row, (mr, (x1, x2))) in a.iter_mut().zip(m.iter().zip(b1.iter().zip(&b2))) {
        row[..3].copy_from_slice(mr);
        row[3] = *x1;
        row[4] = *x2;
    }
    let scale = m
        .iter()
        .flatten()
        .fold(1.0f64, |acc, &v| acc.max(v.abs()));
    let tiny = scale * 1e-14;
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() <= tiny || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        let inv = 1.0 / a[col][col];
        let pivot_row = a[col];
        for (r, row) in a.iter_mut().enumerate() {
            if r == col {
                continue;
            }
            let f = row[col] * inv;
            if f != 0.0 {
                for (x, pv) in row.iter_mut().zip(pivot_row).skip(col) {
                    *x -= f * pv;
                }
            }
        }
        for x in a[col].iter_mut().skip(col) {
            *x *= inv;
        }
    }
    Some((
        [a[0][3], a[1][3], a[2][3]],
        [a[0][4], a[1][4], a[2][4]],
    ))
}

fn loss_of(spectrum: &Spectrum, nu: &[[f64; 3]]) -> f64 {
    let bulk: f64 = nu
        .iter()
        .enumerate()
        .map(|(j, v)| spectrum.weight(j) * spectrum.lambdas[j] * v[0])
        .sum();
    spectrum.p_inf.max(0.0) + bulk
}

/// Log-spaced record targets on `(0, horizon]`, merged with any explicitly
/// requested times.
fn build_targets(horizon: f64, opts: &IntegrateOptions) -> Vec<f64> {
    let mut targets: Vec<f64> = Vec::new();
    if horizon <= 0.0 {
        return targets;
    }
    if horizon >= 1.0 && opts.outputs_per_decade > 0 {
        let decades = horizon.log10().max(0.0);
        let count = ((decades * opts.outputs_per_decade as f64).ceil() as usize + 1).max(2);
        targets.extend(plrf_core::log_space(1.0, horizon, count));
    }
    if let Some(extra) = &opts.record_times {
        targets.extend(
            extra
                .iter()
                .copied()
                .filter(|&t| t > 0.0 && t <= horizon * (1.0 + 1e-12))
                .map(|t| t.min(horizon)),
        );
    }
    targets.push(horizon);
    targets.sort_by(|x, y| x.partial_cmp(y).unwrap());
    targets.dedup_by(|x, y| (*x - *y).abs() <= 4.0 * f64::EPSILON * y.abs());
    targets
}

/// Interpolates the loss at `tau ∈ [t0, t1]` between two accepted steps,
/// linearly in `(log(1+t), log P)` when both losses are positive.
fn interp_loss(t0: f64, p0: f64, t1: f64, p1: f64, tau: f64) -> f64 {
    if tau <= t0 {
        return p0;
    }
    if tau >= t1 {
        return p1;
    }
    let x = ((1.0 + tau).ln() - (1.0 + t0).ln()) / ((1.0 + t1).ln() - (1.0 + t0).ln());
    if p0 > 0.0 && p1 > 0.0 {
        (p0.ln() + x * (p1.ln() - p0.ln())).exp()
    } else {
        p0 + x * (p1 - p0)
    }
}

fn validate(spectrum: &Spectrum, horizon: f64, opts: &IntegrateOptions) -> Result<(), OdeError> {
    if opts.step <= 0.0 || !opts.step.is_finite() {
        return Err(OdeError::BadInput(format!(
            "step must be positive and finite, got {}",
            opts.step
        )));
    }
    if horizon < 0.0 || !horizon.is_finite() {
        return Err(OdeError::BadInput(format!(
            "horizon must be nonnegative and finite, got {horizon}"
        )));
    }
    if opts.divergence_threshold <= 0.0 {
        return Err(OdeError::BadInput(
            "divergence threshold must be positive".to_string(),
        ));
    }
    if spectrum.rho0.len() != spectrum.lambdas.len() {
        return Err(OdeError::BadInput(
            "spectrum rho0 and lambdas lengths differ".to_string(),
        ));
    }
    if let Some(w) = &spectrum.weights {
        if w.len() != spectrum.lambdas.len() {
            return Err(OdeError::BadInput(
                "spectrum weights and lambdas lengths differ".to_string(),
            ));
        }
        if w.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(OdeError::BadInput(
                "spectrum weights must be nonnegative".to_string(),
            ));
        }
    }
    if spectrum
        .lambdas
        .iter()
        .any(|&l| l < 0.0 || !l.is_finite())
    {
        return Err(OdeError::BadInput(
            "eigenvalues must be nonnegative".to_string(),
        ));
    }
    if spectrum.rho0.iter().any(|&r| r < 0.0 || !r.is_finite()) {
        return Err(OdeError::BadInput(
            "initial mode energies must be nonnegative".to_string(),
        ));
    }
    if !spectrum.p_inf.is_finite() || spectrum.p_inf < -1e-6 {
        return Err(OdeError::BadInput(format!(
            "irreducible loss must be finite and nonnegative, got {}",
            spectrum.p_inf
        )));
    }
    Ok(())
}
