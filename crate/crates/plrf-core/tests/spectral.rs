//! Spectral-decomposition oracles: hand formulas for tiny dimensions, the
//! Parseval identity, and agreement between the two kernel routes.

use approx::assert_relative_eq;
use ndarray::{array, Array2};
use ndarray_linalg::{Eigh, UPLO};
use plrf_core::{spectral_data, PLRFInstance};
use proptest::prelude::*;

#[test]
fn single_column_closed_form() {
    // d = 1: the kernel has one eigenvalue λ₁ = wᵀDw, the target projects onto
    // the single mode with q₁² = (wᵀDb)²/λ₁, and ρ₁²(0) = q₁²/λ₁.
    let (alpha, beta) = (1.0, 1.0);
    let w_col = [0.6, -0.8, 0.5];
    let w = Array2::from_shape_vec((3, 1), w_col.to_vec()).unwrap();
    let inst = PLRFInstance::with_matrix(alpha, beta, w).expect("toy accepted");

    let d_diag = [1.0, 0.25, 1.0 / 9.0];
    let b = [1.0, 0.5, 1.0 / 3.0];
    let wdw: f64 = (0..3).map(|j| d_diag[j] * w_col[j] * w_col[j]).sum();
    let wdb: f64 = (0..3).map(|j| d_diag[j] * w_col[j] * b[j]).sum();
    let norm_c2: f64 = (0..3).map(|j| d_diag[j] * b[j] * b[j]).sum();

    let sd = spectral_data(&inst).expect("decomposition");
    assert_eq!(sd.lambdas.len(), 1);
    assert_relative_eq!(sd.lambdas[0], wdw, max_relative = 1e-14);
    assert_relative_eq!(sd.rho0[0], wdb * wdb / (wdw * wdw), max_relative = 1e-14);
    assert_relative_eq!(
        sd.lambdas[0] * sd.rho0[0],
        wdb * wdb / wdw,
        max_relative = 1e-14
    );
    assert_relative_eq!(sd.p_inf, norm_c2 - wdb * wdb / wdw, max_relative = 1e-12);
}

#[test]
fn two_by_three_matches_characteristic_polynomial() {
    // Independent oracle: form the 2×2 kernel Ǩ = WᵀDW by hand and solve its
    // characteristic polynomial with the quadratic formula.
    let (alpha, beta) = (1.0, 0.5);
    let w = array![[0.4, -0.2], [0.1, 0.5], [-0.3, 0.25]];
    let d_diag = [1.0, 0.25, 1.0 / 9.0];

    let mut k = [[0.0f64; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            k[a][b] = (0..3).map(|j| d_diag[j] * w[(j, a)] * w[(j, b)]).sum();
        }
    }
    let tr = k[0][0] + k[1][1];
    let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
    let disc = (tr * tr - 4.0 * det).sqrt();
    let lam_hi = 0.5 * (tr + disc);
    let lam_lo = det / lam_hi; // stable small root via the product identity

    let inst = PLRFInstance::with_matrix(alpha, beta, w).expect("toy accepted");
    let sd = spectral_data(&inst).expect("decomposition");
    assert_relative_eq!(sd.lambdas[0], lam_hi, max_relative = 1e-12);
    assert_relative_eq!(sd.lambdas[1], lam_lo, max_relative = 1e-12);
}

#[test]
fn hat_and_check_kernels_share_nonzero_eigenvalues() {
    // K̂ = D^{1/2}WWᵀD^{1/2} (v×v) and Ǩ = WᵀDW (d×d) must agree on nonzero
    // eigenvalues; the v − d extra eigenvalues of K̂ are zero.
    let inst = PLRFInstance::generate(0.8, 0.6, 3, 5, 11).expect("valid instance");
    let d_sqrt: Vec<f64> = inst.diag().iter().map(|x| x.sqrt()).collect();
    let mut a = inst.w().clone();
    for (j, mut row) in a.outer_iter_mut().enumerate() {
        row.mapv_inplace(|x| x * d_sqrt[j]);
    }
    let k_hat = a.dot(&a.t());
    let k_check = a.t().dot(&a);

    let (mut ev_hat, _) = k_hat.eigh(UPLO::Upper).expect("5×5 eigendecomposition");
    let (mut ev_check, _) = k_check.eigh(UPLO::Upper).expect("3×3 eigendecomposition");
    ev_hat.as_slice_mut().unwrap().sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev_check.as_slice_mut().unwrap().sort_by(|a, b| b.partial_cmp(a).unwrap());

    let sd = spectral_data(&inst).expect("decomposition");
    for j in 0..3 {
        assert_relative_eq!(ev_hat[j], ev_check[j], max_relative = 1e-10);
        assert_relative_eq!(sd.lambdas[j], ev_check[j], max_relative = 1e-10);
    }
    for j in 3..5 {
        assert!(
            ev_hat[j].abs() < 1e-12 * ev_hat[0],
            "trailing eigenvalue {j} should vanish, got {:e}",
            ev_hat[j]
        );
    }
}

#[test]
fn parseval_identity_on_generated_instance() {
    let inst = PLRFInstance::generate(1.2, 0.6, 40, 160, 5).expect("valid instance");
    let sd = spectral_data(&inst).expect("decomposition");
    let at_zero = inst.population_risk(&vec![0.0; 40]).unwrap();
    assert_relative_eq!(sd.total_initial_loss(), at_zero, max_relative = 1e-8);
    assert!(sd.p_inf >= 0.0, "irreducible loss must be nonnegative");
    assert!(
        sd.lambdas.windows(2).all(|w| w[0] >= w[1] && w[1] > 0.0),
        "eigenvalues must be positive and descending"
    );
}

#[test]
fn spectral_data_is_pure() {
    let inst = PLRFInstance::generate(1.0, 0.7, 20, 80, 17).expect("valid instance");
    let a = spectral_data(&inst).expect("first call");
    let b = spectral_data(&inst).expect("second call");
    assert_eq!(a.lambdas, b.lambdas, "repeated calls must agree bit-for-bit");
    assert_eq!(a.rho0, b.rho0);
    assert_eq!(a.p_inf, b.p_inf);
}

#[test]
fn spectrum_view_preserves_totals_and_weights() {
    let inst = PLRFInstance::generate(1.0, 0.7, 10, 40, 2).expect("valid instance");
    let sd = spectral_data(&inst).expect("decomposition");
    let spec = sd.to_spectrum();
    assert_relative_eq!(spec.initial_loss(), sd.total_initial_loss(), max_relative = 1e-14);

    // Fractional multiplicities scale each mode's contribution.
    let mut weighted = spec.clone();
    weighted.weights = Some(vec![0.5; weighted.len()]);
    let bulk = sd.total_initial_loss() - sd.p_inf;
    assert_relative_eq!(
        weighted.initial_loss(),
        sd.p_inf + 0.5 * bulk,
        max_relative = 1e-14
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Parseval and ordering invariants across a range of exponents, dimensions,
    /// and seeds.
    #[test]
    fn spectral_invariants_hold(
        alpha in 0.3f64..2.0,
        beta in 0.1f64..1.5,
        d in 1usize..6,
        extra in 1usize..8,
        seed in 0u64..1000,
    ) {
        prop_assume!(2.0 * alpha + 2.0 * beta > 1.05);
        let v = d + extra;
        let inst = PLRFInstance::generate(alpha, beta, d, v, seed).unwrap();
        let sd = spectral_data(&inst).unwrap();

        prop_assert_eq!(sd.lambdas.len(), d);
        prop_assert!(sd.lambdas.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(sd.lambdas.iter().all(|&l| l > 0.0));
        prop_assert!(sd.p_inf >= 0.0);

        let at_zero = inst.risk_at_zero();
        let total = sd.total_initial_loss();
        prop_assert!(
            (total - at_zero).abs() <= 1e-8 * at_zero,
            "loss decomposition must resum to the risk at zero: {} vs {}",
            total,
            at_zero
        );
    }
}
