//! Instance construction and exact population risk.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from instance construction and risk evaluation.
#[derive(Debug, Error)]
pub enum PlrfError {
    #[error("alpha must be positive, got {0}")]
    BadAlpha(f64),
    #[error("2α+2β = {0} ≤ 1: target energy not summable, instance rejected")]
    NonSummable(f64),
    #[error("need 1 ≤ d < v, got d={d}, v={v}")]
    BadDims { d: usize, v: usize },
    #[error("theta has length {got}, instance has d={want}")]
    DimMismatch { got: usize, want: usize },
    #[error("spectral decomposition failed: {0}")]
    Factorization(String),
}

/// The serializable identity of an instance: enough to regenerate W bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
    pub v: usize,
    pub seed: u64,
}

/// A concrete PLRF problem: exponents, dimensions, the random embedding W, and
/// the deterministic covariance/target vectors.
///
/// Instances are immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct PLRFInstance {
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
    pub v: usize,
    pub seed: u64,
    /// v×d embedding with i.i.d. N(0, 1/d) entries.
    w: Array2<f64>,
    /// Diagonal covariance entries D_j = j^{-2α}, 1-based j.
    diag: Vec<f64>,
    /// Target coefficients b_j = j^{-β}.
    target: Vec<f64>,
}

fn validate_exponents(alpha: f64, beta: f64) -> Result<(), PlrfError> {
    if alpha <= 0.0 || alpha.is_nan() {
        return Err(PlrfError::BadAlpha(alpha));
    }
    let s = 2.0 * alpha + 2.0 * beta;
    if s <= 1.0 || s.is_nan() {
        return Err(PlrfError::NonSummable(s));
    }
    Ok(())
}

fn power_vectors(alpha: f64, beta: f64, v: usize) -> (Vec<f64>, Vec<f64>) {
    let diag = (1..=v).map(|j| (j as f64).powf(-2.0 * alpha)).collect();
    let target = (1..=v).map(|j| (j as f64).powf(-beta)).collect();
    (diag, target)
}

impl PLRFInstance {
    /// Draw a fresh instance. Deterministic given `seed`: row j of W is filled from
    /// an independent ChaCha8 stream (base key = seed, stream counter = j), so rows
    /// can be regenerated independently and the whole matrix is reproducible.
    pub fn generate(
        alpha: f64,
        beta: f64,
        d: usize,
        v: usize,
        seed: u64,
    ) -> Result<Self, PlrfError> {
        validate_exponents(alpha, beta)?;
        if d == 0 || v <= d {
            return Err(PlrfError::BadDims { d, v });
        }
        let scale = (1.0 / d as f64).sqrt();
        let mut w = Array2::zeros((v, d));
        for (row, mut out) in w.outer_iter_mut().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(row as u64);
            for x in out.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x = scale * z;
            }
        }
        let (diag, target) = power_vectors(alpha, beta, v);
        Ok(Self { alpha, beta, d, v, seed, w, diag, target })
    }

    /// Build an instance around an explicitly supplied embedding matrix. Intended
    /// for toy constructions (interpolation checks, hand-sized spectra); the
    /// covariance and target still follow the power laws for (alpha, beta).
    /// Unlike [`generate`](Self::generate), a square W (v = d) is accepted so
    /// interpolating solutions can be exercised.
    pub fn with_matrix(
        alpha: f64,
        beta: f64,
        w: Array2<f64>,
    ) -> Result<Self, PlrfError> {
        validate_exponents(alpha, beta)?;
        let (v, d) = w.dim();
        if d == 0 || v < d {
            return Err(PlrfError::BadDims { d, v });
        }
        let (diag, target) = power_vectors(alpha, beta, v);
        Ok(Self { alpha, beta, d, v, seed: 0, w, diag, target })
    }

    pub fn from_spec(spec: &InstanceSpec) -> Result<Self, PlrfError> {
        Self::generate(spec.alpha, spec.beta, spec.d, spec.v, spec.seed)
    }

    pub fn spec(&self) -> InstanceSpec {
        InstanceSpec {
            alpha: self.alpha,
            beta: self.beta,
            d: self.d,
            v: self.v,
            seed: self.seed,
        }
    }

    /// The embedding matrix W (v×d).
    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    /// Covariance diagonal D_j = j^{-2α}.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Target coefficients b_j = j^{-β}.
    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Σ_{j=1}^{v} j^{-2α}.
    pub fn trace_diag(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Exact population risk P(θ) = (Wθ − b)ᵀ D (Wθ − b).
    pub fn population_risk(&self, theta: &[f64]) -> Result<f64, PlrfError> {
        if theta.len() != self.d {
            return Err(PlrfError::DimMismatch { got: theta.len(), want: self.d });
        }
        let theta = ndarray::ArrayView1::from(theta);
        let wt = self.w.dot(&theta);
        Ok(self.risk_of_prediction(&wt))
    }

    /// Risk given a precomputed prediction vector Wθ (avoids the matvec when the
    /// caller already maintains it).
    pub fn risk_of_prediction(&self, w_theta: &Array1<f64>) -> f64 {
        debug_assert_eq!(w_theta.len(), self.v);
        let mut acc = 0.0;
        for j in 0..self.v {
            let r = w_theta[j] - self.target[j];
            acc += self.diag[j] * r * r;
        }
        acc
    }

    /// Risk at θ = 0 in closed form: Σ_{j=1}^{v} j^{-2α-2β}.
    pub fn risk_at_zero(&self) -> f64 {
        let expo = -2.0 * self.alpha - 2.0 * self.beta;
        (1..=self.v).map(|j| (j as f64).powf(expo)).sum()
    }
}
