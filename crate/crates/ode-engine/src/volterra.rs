//! Direct Volterra-equation solver used to cross-validate the integrator.
//!
//! The expected loss of the simplified closure satisfies
//! `P(t) = F(t) + ∫₀ᵗ K_s(t) P(s) ds` with
//! `F(t) = p_inf + Σ_j w_jλ_jρ_j²(0)·(Φ_{λ_j}(t,0))₁₁` and
//! `K_s(t) = B·Σ_j w_jλ_j²[γ₂²(s)(Φ_{λ_j}(t,s))₁₁ + γ₁²(s)(Φ_{λ_j}(t,s))₁₂]`,
//! where `Φ_λ(t,s)` is the fundamental system of the homogeneous per-mode
//! ODE. The solver integrates each grid cell backward with a classical
//! Runge–Kutta scheme, which yields the cell propagator together with the
//! exact first and second kernel moments against the linear hat functions;
//! chaining the propagators tabulates the moments of `K_s(t_i)` for every
//! node pair. The equation is then solved by the product trapezoidal rule:
//! the kernel is integrated exactly while the loss is treated as piecewise
//! linear, so the quadrature error is governed by the curvature of the loss
//! rather than by the decay width of the kernel.

use plrf_core::{CurveMeta, CurveSource, LossCurve, Spectrum};
use schedules::ScheduleSet;

use crate::variant::{omega_and_g_from_rates, OdeVariant};
use crate::OdeError;

/// Largest supported grid; the solver is O(n²·d) in time and O(n²) in memory.
pub const MAX_GRID: usize = 4096;

/// Tuning knobs for [`volterra_components`].
#[derive(Debug, Clone)]
pub struct VolterraOptions {
    /// Number of grid nodes (log-spaced on `[0, horizon]`).
    pub grid: usize,
    /// Test hook: zero the kernel, so the solution equals the forcing.
    pub zero_kernel: bool,
}

impl Default for VolterraOptions {
    fn default() -> Self {
        VolterraOptions {
            grid: 1024,
            zero_kernel: false,
        }
    }
}

/// Tabulated Volterra solution: grid times, forcing function, solved loss,
/// and the grid-refinement residual.
#[derive(Debug, Clone)]
pub struct VolterraTable {
    pub times: Vec<f64>,
    pub forcing: Vec<f64>,
    pub loss: Vec<f64>,
    /// Maximum relative deviation between the full-grid solution and the
    /// solution on the half-density subgrid; an estimate of the quadrature
    /// error. Values above `1e-3` are rejected as "grid too coarse".
    pub residual: f64,
}

/// Solves the Volterra equation of the simplified closure on a log-spaced
/// grid of `n` nodes and returns the loss curve.
pub fn volterra_oracle(
    spectrum: &Spectrum,
    schedule: &ScheduleSet,
    horizon: f64,
    n: usize,
    meta: CurveMeta,
) -> Result<LossCurve, OdeError> {
    let opts = VolterraOptions {
        grid: n,
        ..VolterraOptions::default()
    };
    let table = volterra_components(spectrum, schedule, horizon, &opts)?;
    let batch = schedule.batch as f64;
    let flops_dim = if meta.d > 0 {
        meta.d as f64
    } else {
        spectrum.lambdas.len() as f64
    };
    let flops: Vec<f64> = table.times.iter().map(|t| t * batch * flops_dim).collect();
    let stderr = vec![0.0; table.times.len()];
    Ok(LossCurve {
        times: table.times,
        losses: table.loss,
        stderr,
        flops,
        diverged: false,
        source: CurveSource::Volterra,
        variant: OdeVariant::Simplified.as_str().to_string(),
        meta,
    })
}

/// Per-cell kernel moments against the linear hat basis, accumulated over
/// the spectrum: for cell `c = [t_c, t_{c+1}]` and node `i ≥ c+1`,
/// `m0[c·n+i] = ∫_cell K_s(t_i) ds` and
/// `m1[c·n+i] = ∫_cell K_s(t_i)·(s−t_c)/Δ_c ds`.
struct KernelMoments {
    m0: Vec<f64>,
    m1: Vec<f64>,
    n: usize,
}

/// Builds the forcing function and kernel moments of the simplified closure
/// and solves the Volterra equation, exposing the components for validation.
pub fn volterra_components(
    spectrum: &Spectrum,
    schedule: &ScheduleSet,
    horizon: f64,
    opts: &VolterraOptions,
) -> Result<VolterraTable, OdeError> {
    let n = opts.grid;
    if n > MAX_GRID {
        return Err(OdeError::GridTooLarge { n, max: MAX_GRID });
    }
    if n < 4 {
        return Err(OdeError::BadInput(format!(
            "Volterra grid needs at least 4 nodes, got {n}"
        )));
    }
    if horizon <= 0.0 || !horizon.is_finite() {
        return Err(OdeError::BadInput(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    if spectrum.rho0.len() != spectrum.lambdas.len() {
        return Err(OdeError::BadInput(
            "spectrum rho0 and lambdas lengths differ".to_string(),
        ));
    }

    // Log-spaced grid: t_i = (1+T)^{i/(n-1)} − 1, pinned at 0 and T.
    let times: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                0.0
            } else if i == n - 1 {
                horizon
            } else {
                (1.0 + horizon).powf(i as f64 / (n - 1) as f64) - 1.0
            }
        })
        .collect();
    let batch = schedule.batch as f64;

    let mut forcing = vec![spectrum.p_inf.max(0.0); n];
    let mut moments = KernelMoments {
        m0: vec![0.0f64; if opts.zero_kernel { 0 } else { n * n }],
        m1: vec![0.0f64; if opts.zero_kernel { 0 } else { n * n }],
        n,
    };

    for (j, &lam) in spectrum.lambdas.iter().enumerate() {
        let w = spectrum.weight(j);
        let wl_forcing = w * lam * spectrum.rho0[j];
        let wl_kernel = w * lam * lam * batch;
        if wl_forcing == 0.0 && wl_kernel == 0.0 {
            continue;
        }
        // One backward pass per cell gives the propagator G_c = Φ_λ(t_{c+1}, t_c)
        // and the hat moments V0_c, V1_c of Φ_λ(t_{c+1}, s)·(γ₂²(s), γ₁²(s), 0)ᵀ.
        let mut props = Vec::with_capacity(n - 1);
        let mut v0 = Vec::with_capacity(n - 1);
        let mut v1 = Vec::with_capacity(n - 1);
        for c in 0..n - 1 {
            let (g, a0, a1) = cell_backward(lam, batch, schedule, times[c], times[c + 1]);
            props.push(g);
            v0.push(a0);
            v1.push(a1);
        }
        for (i, fi) in forcing.iter_mut().enumerate() {
            // First row of Φ_λ(t_i, t_{c+1}), chained backward from c = i−1.
            let mut row = [1.0f64, 0.0, 0.0];
            let mut reached_zero = true;
            for c in (0..i).rev() {
                if !opts.zero_kernel {
                    let idx = c * n + i;
                    moments.m0[idx] += wl_kernel * dot(row, v0[c]);
                    moments.m1[idx] += wl_kernel * dot(row, v1[c]);
                }
                row = row_times_mat(row, &props[c]);
                // A fully decayed mode contributes nothing to earlier cells.
                if row.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-200 {
                    reached_zero = false;
                    break;
                }
            }
            if reached_zero {
                *fi += wl_forcing * row[0];
            }
        }
    }

    let loss = solve_product_integration(&times, &forcing, &moments, opts.zero_kernel)?;

    // Residual check: re-solve on the half-density subgrid (whose cell
    // moments are exact sums of the fine-cell moments) and compare.
    let residual = if opts.zero_kernel {
        0.0
    } else {
        let mut coarse_idx: Vec<usize> = (0..n).step_by(2).collect();
        if *coarse_idx.last().unwrap() != n - 1 {
            coarse_idx.push(n - 1);
        }
        let nc = coarse_idx.len();
        let c_times: Vec<f64> = coarse_idx.iter().map(|&i| times[i]).collect();
        let c_forcing: Vec<f64> = coarse_idx.iter().map(|&i| forcing[i]).collect();
        let mut c_moments = KernelMoments {
            m0: vec![0.0f64; nc * nc],
            m1: vec![0.0f64; nc * nc],
            n: nc,
        };
        for a in 0..nc - 1 {
            let (lo, hi) = (coarse_idx[a], coarse_idx[a + 1]);
            let width = times[hi] - times[lo];
            for (b, &i) in coarse_idx.iter().enumerate().skip(a + 1) {
                let (mut s0, mut s1) = (0.0, 0.0);
                for c in lo..hi {
                    let idx = c * n + i;
                    s0 += moments.m0[idx];
                    s1 += moments.m1[idx] * (times[c + 1] - times[c])
                        + (times[c] - times[lo]) * moments.m0[idx];
                }
                c_moments.m0[a * nc + b] = s0;
                c_moments.m1[a * nc + b] = s1 / width;
            }
        }
        let c_loss = solve_product_integration(&c_times, &c_forcing, &c_moments, false)?;
        let scale = loss.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        let mut residual = 0.0f64;
        for (a, &i) in coarse_idx.iter().enumerate() {
            let denom = loss[i].abs().max(scale * 1e-6).max(f64::MIN_POSITIVE);
            residual = residual.max((c_loss[a] - loss[i]).abs() / denom);
        }
        residual
    };
    if !loss.iter().all(|v| v.is_finite()) || !residual.is_finite() {
        return Err(OdeError::BadInput(
            "non-finite Volterra solution: the schedule appears unstable on this spectrum"
                .to_string(),
        ));
    }
    if residual > 1e-3 {
        return Err(OdeError::GridTooCoarse { residual });
    }

    Ok(VolterraTable {
        times,
        forcing,
        loss,
        residual,
    })
}

/// Product trapezoidal solve: with the loss piecewise linear on the grid and
/// the kernel moments exact, node `i` satisfies
/// `P_i = F_i + Σ_{c<i} [P_c (m0 − m1) + P_{c+1} m1]`,
/// which is explicit in `P_i` after dividing by `1 − m1[i−1, i]`.
fn solve_product_integration(
    times: &[f64],
    forcing: &[f64],
    moments: &KernelMoments,
    zero_kernel: bool,
) -> Result<Vec<f64>, OdeError> {
    let n = times.len();
    let mut loss = vec![0.0f64; n];
    loss[0] = forcing[0];
    if zero_kernel {
        loss.copy_from_slice(forcing);
        return Ok(loss);
    }
    for i in 1..n {
        let mut acc = forcing[i];
        for c in 0..i - 1 {
            let m0 = moments.m0[c * moments.n + i];
            let m1 = moments.m1[c * moments.n + i];
            acc += loss[c] * (m0 - m1) + loss[c + 1] * m1;
        }
        let m0_last = moments.m0[(i - 1) * moments.n + i];
        let m1_last = moments.m1[(i - 1) * moments.n + i];
        acc += loss[i - 1] * (m0_last - m1_last);
        if m1_last >= 1.0 {
            return Err(OdeError::GridTooCoarse {
                residual: f64::INFINITY,
            });
        }
        loss[i] = acc / (1.0 - m1_last);
    }
    Ok(loss)
}

/// Integrates one grid cell backward in the anchor variable: returns the
/// propagator `G = Φ_λ(t1, t0)` together with the kernel hat moments
/// `V0 = ∫_{t0}^{t1} Φ_λ(t1, s)·c(s) ds` and
/// `V1 = ∫_{t0}^{t1} Φ_λ(t1, s)·c(s)·(s−t0)/(t1−t0) ds`,
/// where `c(s) = (γ₂²(s), γ₁²(s), 0)ᵀ`. Uses classical Runge–Kutta on
/// `dY/ds = −Y·Ω(s)` from `Y(t1) = Id` with stability-bounded substeps and
/// Simpson accumulation of the integrands on substep pairs.
fn cell_backward(
    lam: f64,
    batch: f64,
    schedule: &ScheduleSet,
    t0: f64,
    t1: f64,
) -> ([[f64; 3]; 3], [f64; 3], [f64; 3]) {
    let omega_at = |t: f64| {
        let (g1, g2, g3, dl) = schedule.rates_at(t);
        omega_and_g_from_rates(OdeVariant::Simplified, g1, g2, g3, dl, batch, lam).0
    };
    let cvec_at = |t: f64| {
        let (g1, g2, _, _) = schedule.rates_at(t);
        [g2 * g2, g1 * g1, 0.0]
    };
    let dt = t1 - t0;
    let norm = inf_norm(&omega_at(t0)).max(inf_norm(&omega_at(t1)));
    let mut substeps = ((norm * dt / 0.1).ceil() as usize).clamp(2, 200_000);
    if substeps % 2 == 1 {
        substeps += 1;
    }
    let h = dt / substeps as f64;

    let mut y = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    // Integrand samples f_m = Y(s_m)·c(s_m) at s_m = t0 + m·h, filled from
    // the top (m = substeps) down.
    let mut samples = vec![[0.0f64; 3]; substeps + 1];
    samples[substeps] = mat_vec(&y, cvec_at(t1));
    for m in (0..substeps).rev() {
        let s_hi = t0 + h * (m + 1) as f64;
        let s_mid = t0 + h * (m as f64 + 0.5);
        let s_lo = t0 + h * m as f64;
        let om_hi = omega_at(s_hi);
        let om_mid = omega_at(s_mid);
        let om_lo = omega_at(s_lo);
        // Backward step of dY/ds = −Y·Ω(s) from s_hi to s_lo, written with
        // positive increments of the reversed variable.
        let l1 = mat_mul(&y, &om_hi);
        let l2 = mat_mul(&mat_axpy(&y, 0.5 * h, &l1), &om_mid);
        let l3 = mat_mul(&mat_axpy(&y, 0.5 * h, &l2), &om_mid);
        let l4 = mat_mul(&mat_axpy(&y, h, &l3), &om_lo);
        for r in 0..3 {
            for c in 0..3 {
                y[r][c] += h / 6.0 * (l1[r][c] + 2.0 * l2[r][c] + 2.0 * l3[r][c] + l4[r][c]);
            }
        }
        samples[m] = mat_vec(&y, cvec_at(s_lo));
    }

    // Simpson on substep pairs; the hat weight is (s_m − t0)/dt = m/substeps.
    let mut v0 = [0.0f64; 3];
    let mut v1 = [0.0f64; 3];
    let inv = 1.0 / substeps as f64;
    for m in (0..substeps).step_by(2) {
        for r in 0..3 {
            let s0 = samples[m][r];
            let s1 = samples[m + 1][r];
            let s2 = samples[m + 2][r];
            v0[r] += h / 3.0 * (s0 + 4.0 * s1 + s2);
            v1[r] += h / 3.0
                * (s0 * (m as f64 * inv)
                    + 4.0 * s1 * ((m + 1) as f64 * inv)
                    + s2 * ((m + 2) as f64 * inv));
        }
    }
    (y, v0, v1)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

fn inf_norm(m: &[[f64; 3]; 3]) -> f64 {
    m.iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0f64; 3]; 3];
    for (r, out_row) in out.iter_mut().enumerate() {
        for (c, entry) in out_row.iter_mut().enumerate() {
            *entry = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

/// `base + s·delta` entrywise.
fn mat_axpy(base: &[[f64; 3]; 3], s: f64, delta: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = *base;
    for (out_row, d_row) in out.iter_mut().zip(delta) {
        for (v, dv) in out_row.iter_mut().zip(d_row) {
            *v += s * dv;
        }
    }
    out
}

fn row_times_mat(row: [f64; 3], m: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut out = [0.0f64; 3];
    for (c, entry) in out.iter_mut().enumerate() {
        *entry = row[0] * m[0][c] + row[1] * m[1][c] + row[2] * m[2][c];
    }
    out
}
