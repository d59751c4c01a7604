//! Irreducible loss of the overparametrized random features model.
//!
//! With `v` features in dimension `d < v`, a fraction of the target norm is
//! orthogonal to the feature span and can never be fit. That irreducible part
//! concentrates around a deterministic value `F0` controlled by a scalar
//! `kappa` solving
//!
//! ```text
//! integral_0^{v/d} kappa / (kappa + u^{2 alpha}) du = 1.
//! ```

use crate::DetEquivError;

/// Positive abscissas and weights of the 16-point Gauss-Legendre rule.
const GL16_NODES: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003_0,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_WEIGHTS: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_8,
    0.062_253_523_938_647_9,
    0.027_152_459_411_754_1,
];

fn gl16(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL16_NODES.iter().zip(&GL16_WEIGHTS) {
        acc += w * (f(c + h * x) + f(c - h * x));
    }
    acc * h
}

/// `integral_0^T du / (1 + u^p)` for `T >= 0`, `p > 0`.
///
/// Gauss-Legendre panels graded geometrically from `2^-54` up to `T`: on a
/// panel of bounded log-width the integrand is analytic with an order-one
/// scale (the endpoint-derivative singularity at `u = 0` and the slow decay
/// at large `u` both sit outside every panel), so 16 nodes per panel reach
/// machine precision. Large `p` squeezes the complex poles of the integrand
/// toward the positive axis near `u = 1`, hence the extra subdivision.
fn unit_rational_integral(t: f64, p: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let f = |u: f64| 1.0 / (1.0 + u.powf(p));
    let sub = ((p / 4.0).ceil() as usize).max(1);
    // Below 2^-54 the integrand is 1 to machine precision.
    let mut lo = (2.0_f64).powi(-54).min(t);
    let mut total = lo;
    while lo < t {
        let hi = (2.0 * lo).min(t);
        let step = (hi - lo) / sub as f64;
        for k in 0..sub {
            total += gl16(&f, lo + k as f64 * step, lo + (k + 1) as f64 * step);
        }
        lo = hi;
    }
    total
}

/// `g(kappa) = integral_0^{L} kappa / (kappa + u^{2 alpha}) du`, evaluated
/// through the substitution `u = kappa^{1/(2 alpha)} w`, which maps it to
/// `kappa^{1/(2 alpha)} * integral_0^{L kappa^{-1/(2 alpha)}} dw / (1 + w^{2 alpha})`.
fn g_of_kappa(kappa: f64, alpha: f64, ratio: f64) -> f64 {
    let p = 2.0 * alpha;
    let scale = kappa.powf(1.0 / p);
    scale * unit_rational_integral(ratio / scale, p)
}

/// Solves `integral_0^{v/d} kappa / (kappa + u^{2 alpha}) du = 1` for
/// `kappa > 0` by bisection on `[1e-12, 1e12]`.
///
/// The left side is strictly increasing in `kappa` with supremum `v/d`, so a
/// root exists exactly when `ratio = v/d > 1`; otherwise the bracket check
/// fails and [`DetEquivError::BracketFailure`] is returned.
pub fn kappa_solve(alpha: f64, ratio: f64) -> Result<f64, DetEquivError> {
    if !(alpha > 0.0) || !alpha.is_finite() || !ratio.is_finite() || ratio <= 0.0 {
        return Err(DetEquivError::BadInput(format!(
            "need alpha > 0 and a positive finite feature ratio, got alpha = {alpha}, ratio = {ratio}"
        )));
    }
    let (mut lo, mut hi) = (1e-12_f64, 1e12_f64);
    let g_lo = g_of_kappa(lo, alpha, ratio);
    let g_hi = g_of_kappa(hi, alpha, ratio);
    if !(g_lo < 1.0 && g_hi > 1.0) {
        return Err(DetEquivError::BracketFailure(format!(
            "g(kappa) - 1 does not change sign on [1e-12, 1e12]: g = {g_lo:.6e} .. {g_hi:.6e} \
             (requires feature ratio v/d > 1, got {ratio})"
        )));
    }
    // Bisect in log(kappa) until the bracket is relatively tight.
    for _ in 0..500 {
        if (hi - lo) <= 1e-12 * hi {
            break;
        }
        let mid = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
        if g_of_kappa(mid, alpha, ratio) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp())
}

/// Deterministic irreducible loss
/// `F0 = sum_{j=1..v} j^{-2 alpha - 2 beta} / (1 + j^{-2 alpha} d^{2 alpha} kappa)`
/// with `kappa` from [`kappa_solve`] at ratio `v/d`.
///
/// Requires `2 alpha + 2 beta > 1` (summable target norm) and `v > d`.
pub fn compute_f0(alpha: f64, beta: f64, d: usize, v: usize) -> Result<f64, DetEquivError> {
    if !(2.0 * alpha + 2.0 * beta > 1.0) {
        return Err(DetEquivError::BadInput(format!(
            "need 2*alpha + 2*beta > 1 for a finite target norm, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if d == 0 || v == 0 {
        return Err(DetEquivError::BadInput(format!(
            "dimensions must be positive, got d = {d}, v = {v}"
        )));
    }
    let ratio = v as f64 / d as f64;
    let kappa = kappa_solve(alpha, ratio)?;
    let df = d as f64;
    let scale = df.powf(2.0 * alpha) * kappa;
    let mut f0 = 0.0;
    for j in (1..=v).rev() {
        let jf = j as f64;
        let aj = jf.powf(-2.0 * alpha);
        f0 += jf.powf(-2.0 * alpha - 2.0 * beta) / (1.0 + aj * scale);
    }
    Ok(f0)
}

/// Exact finite-size analog of the `kappa` fixed point: solves
/// `(q/d) * sum_{j=1..v} a_j / (1 + a_j q) = 1` for `q > 0`, where
/// `q = R(0)/d` and `R(0) = sum_i 1/lambda_i` over the `d` deterministic
/// eigenvalues. On the physical branch the target transform has the exact
/// pole `-F0_disc / z` at zero with residue
/// `F0_disc = sum_j j^{-2 alpha - 2 beta} / (1 + a_j q)`; this is the
/// discrete-sum version of [`compute_f0`] (which uses the continuum kappa,
/// `q ~ d^{2 alpha} kappa`).
pub(crate) fn discrete_zero_data(
    alpha: f64,
    beta: f64,
    d: usize,
    v: usize,
) -> Result<(f64, f64), DetEquivError> {
    let a: Vec<f64> = (1..=v).map(|j| (j as f64).powf(-2.0 * alpha)).collect();
    let df = d as f64;
    let g = |q: f64| -> f64 {
        let mut acc = 0.0;
        for &aj in a.iter().rev() {
            acc += aj * q / (1.0 + aj * q);
        }
        acc / df
    };
    let (mut lo, mut hi) = (1e-16_f64, 1e16_f64);
    if !(g(lo) < 1.0 && g(hi) > 1.0) {
        return Err(DetEquivError::BracketFailure(format!(
            "zero-resolvent fixed point does not bracket 1 (v/d = {})",
            v as f64 / df
        )));
    }
    for _ in 0..500 {
        if (hi - lo) <= 1e-14 * hi {
            break;
        }
        let mid = (lo * hi).sqrt();
        if g(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = (lo * hi).sqrt();
    let mut residue = 0.0;
    for j in (1..=v).rev() {
        let jf = j as f64;
        residue += jf.powf(-2.0 * alpha - 2.0 * beta) / (1.0 + jf.powf(-2.0 * alpha) * q);
    }
    Ok((q, residue))
}
