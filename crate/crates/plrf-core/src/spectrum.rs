//! Spectral decomposition of the projected covariance.
//!
//! The loss dynamics of every algorithm in this workspace are diagonal in the
//! eigenbasis of K̂ = D^{1/2} W Wᵀ D^{1/2}, whose nonzero eigenvalues coincide
//! with those of Ǩ = Wᵀ D W. With the thin SVD D^{1/2}W = U Σ Vᵀ the nonzero
//! eigenvalues are λ_j = σ_j², and the target decomposes into per-mode weights
//! ⟨u_j, D^{1/2}b⟩² plus an orthogonal remainder p_inf that no parameter choice
//! can remove: summing gives ‖D^{1/2}b‖² = Σ_j λ_j ρ_j²(0) + p_inf, the risk at
//! θ = 0.

use ndarray::{Array1, Array2};
use ndarray_linalg::{JobSvd, SVDDC};
use serde::{Deserialize, Serialize};

use crate::instance::{PLRFInstance, PlrfError};

/// Spectral data of one instance: eigenvalues of the projected covariance,
/// per-mode initial weights, and the irreducible loss floor.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Nonzero eigenvalues λ_j of K̂, descending; length d.
    pub lambdas: Vec<f64>,
    /// ρ_j²(0) = ⟨u_j, D^{1/2}b⟩² / λ_j, so that λ_j ρ_j²(0) = ⟨u_j, D^{1/2}b⟩²
    /// is the mode's share of the initial risk.
    pub rho0: Vec<f64>,
    /// P(Θ_∞) = ‖D^{1/2}b‖² − Σ_j λ_j ρ_j²(0): the part of the target outside
    /// the span of the embedding.
    pub p_inf: f64,
    /// Σ_{j=1}^{v} j^{-2α}.
    pub trace_d: f64,
}

/// A spectrum in the shape the ODE integrators consume: either an empirical
/// eigen-decomposition (unit node weights) or a quadrature of a deterministic
/// spectral measure (fractional node multiplicities).
///
/// The expected loss is p_inf + Σ_k weight_k · λ_k · ρ_k²(t).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub lambdas: Vec<f64>,
    pub rho0: Vec<f64>,
    /// Node multiplicities; `None` means every node counts once.
    pub weights: Option<Vec<f64>>,
    pub p_inf: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[k])
    }

    /// The loss when every mode still sits at its initial weight: p_inf + Σ wλρ²(0).
    pub fn initial_loss(&self) -> f64 {
        let mut acc = self.p_inf;
        for k in 0..self.len() {
            acc += self.weight(k) * self.lambdas[k] * self.rho0[k];
        }
        acc
    }
}

impl SpectralData {
    pub fn to_spectrum(&self) -> Spectrum {
        Spectrum {
            lambdas: self.lambdas.clone(),
            rho0: self.rho0.clone(),
            weights: None,
            p_inf: self.p_inf,
        }
    }

    /// Σ_j λ_j ρ_j²(0) + p_inf, which must reproduce the risk at θ = 0.
    pub fn total_initial_loss(&self) -> f64 {
        let bulk: f64 = self
            .lambdas
            .iter()
            .zip(&self.rho0)
            .map(|(l, r)| l * r)
            .sum();
        bulk + self.p_inf
    }
}

/// Compute the spectral data of an instance via the thin SVD of the v×d matrix
/// D^{1/2}W (O(v d²), never forming the v×v kernel matrix).
///
/// Pure: repeated calls on the same instance return identical output.
pub fn spectral_data(instance: &PLRFInstance) -> Result<SpectralData, PlrfError> {
    let v = instance.v;
    let d = instance.d;
    let diag = instance.diag();

    // A = D^{1/2} W, scaling each row of W by sqrt(D_j).
    let mut a = instance.w().clone();
    for (j, mut row) in a.outer_iter_mut().enumerate() {
        let s = diag[j].sqrt();
        row.mapv_inplace(|x| x * s);
    }

    let (u, sigma, _) = a
        .svddc(JobSvd::Some)
        .map_err(|e| PlrfError::Factorization(e.to_string()))?;
    let u: Array2<f64> = u.ok_or_else(|| {
        PlrfError::Factorization("SVD did not return singular vectors".into())
    })?;

    // c = D^{1/2} b and its per-mode projections q_j = ⟨u_j, c⟩.
    let c = Array1::from_iter(
        (0..v).map(|j| diag[j].sqrt() * instance.target()[j]),
    );
    let q = u.t().dot(&c);

    let norm_c2: f64 = c.iter().map(|x| x * x).sum();
    let mut lambdas = Vec::with_capacity(d);
    let mut rho0 = Vec::with_capacity(d);
    let mut captured = 0.0;
    for j in 0..d {
        let lam = sigma[j] * sigma[j];
        if lam <= 0.0 || !lam.is_finite() {
            return Err(PlrfError::Factorization(format!(
                "nonpositive eigenvalue λ_{} = {lam:e}; embedding effectively rank-deficient, retry with a new seed",
                j + 1
            )));
        }
        let qj2 = q[j] * q[j];
        lambdas.push(lam);
        rho0.push(qj2 / lam);
        captured += qj2;
    }
    debug_assert!(
        lambdas.windows(2).all(|w| w[0] >= w[1]),
        "singular values must come back descending"
    );

    let p_inf_raw = norm_c2 - captured;
    if p_inf_raw < -1e-10 * norm_c2 {
        return Err(PlrfError::Factorization(format!(
            "negative irreducible loss {p_inf_raw:e} beyond tolerance; decomposition unreliable"
        )));
    }
    let p_inf = p_inf_raw.max(0.0);

    Ok(SpectralData { lambdas, rho0, p_inf, trace_d: instance.trace_diag() })
}
