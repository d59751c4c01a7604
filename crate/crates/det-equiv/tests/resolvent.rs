//! Oracle tests for the resolvent fixed point.
//!
//! Independent references used here:
//! - for a single unit weight (`d = v = 1`, where `a_1 = 1` for every
//!   `alpha`), the fixed point reduces to the quadratic `m^2 - m z + z = 0`,
//!   solvable in closed form;
//! - the physical branch satisfies `m(z) = -z R(z) / d` where `R` is the
//!   Stieltjes transform of the `d` positive deterministic eigenvalues, so
//!   as `z -> 0` (below the spectrum) `m` vanishes linearly in `z` with a
//!   negative real slope `-R(0)/d`;
//! - as `|z| -> infinity`, `m -> 1`.

use approx::assert_abs_diff_eq;
use det_equiv::{default_grid, eta_schedule, solve_m, DetEquivError};
use num_complex::Complex64;

/// Root of `m^2 - m z + z = 0` on the `Im(m) <= 0` branch.
fn quadratic_branch(z: Complex64) -> Complex64 {
    let s = (z * z - 4.0 * z).sqrt();
    let roots = [(z + s) / 2.0, (z - s) / 2.0];
    let picked: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|m| m.im <= 1e-12)
        .collect();
    assert_eq!(
        picked.len(),
        1,
        "exactly one quadratic root should lie in the closed lower half plane, z = {z}"
    );
    picked[0]
}

#[test]
fn single_weight_matches_the_closed_form_quadratic() {
    let grid: Vec<Complex64> = [
        (0.5, 1e-2),
        (0.5, 1e-5),
        (2.0, 1e-2),
        (2.0, 1e-5),
        (3.5, 1e-2),
        (3.5, 1e-5),
        (6.0, 1e-3),
    ]
    .iter()
    .map(|&(x, eta)| Complex64::new(x, eta))
    .collect();
    // alpha is irrelevant when v = 1 (a_1 = 1^{-2 alpha} = 1): pick an
    // arbitrary value to make sure nothing else depends on it.
    let solution = solve_m(0.9, 1, 1, &grid).unwrap();
    assert!(solution.dropped.is_empty(), "all points should converge");
    for (z, m) in solution.grid.iter().zip(&solution.m_values) {
        let oracle = quadratic_branch(*z);
        assert_abs_diff_eq!(m.re, oracle.re, epsilon = 1e-9);
        assert_abs_diff_eq!(m.im, oracle.im, epsilon = 1e-9);
    }
}

#[test]
fn below_the_spectrum_m_vanishes_linearly_in_z() {
    // March from far outside the spectrum down to z ~ 0 so each point warm
    // starts near the physical branch. On that branch m = -z R(z)/d with
    // R(0) = sum_i 1/lambda_i > 0 finite, so m/z converges to a negative
    // real constant as z -> 0.
    let n = 120;
    let (x_hi, x_lo) = (10.0_f64, 1e-8_f64);
    let step = (x_lo / x_hi).ln() / (n - 1) as f64;
    let grid: Vec<Complex64> = (0..n)
        .map(|k| {
            let x = x_hi * (step * k as f64).exp();
            Complex64::new(x, 0.5 * x)
        })
        .collect();
    let solution = solve_m(0.5, 4, 8, &grid).unwrap();
    assert!(solution.dropped.is_empty(), "all points should converge");

    let m_last = *solution.m_values.last().unwrap();
    assert!(m_last.norm() < 1e-6, "m should vanish with z, got {m_last}");
    let slope_last = m_last / solution.grid[n - 1];
    let slope_prev = solution.m_values[n - 2] / solution.grid[n - 2];
    assert!(
        slope_last.re < 0.0,
        "-R(0)/d must be negative, got {slope_last}"
    );
    assert_abs_diff_eq!(slope_last.re, slope_prev.re, epsilon = 1e-2 * slope_last.re.abs());
    assert!(
        slope_last.im.abs() < 1e-2 * slope_last.re.abs(),
        "the slope should become real in the limit, got {slope_last}"
    );

    // And the first point sits in the large-|z| regime where m ~ 1.
    let m_first = solution.m_values[0];
    assert!(
        (m_first - Complex64::new(1.0, 0.0)).norm() < 0.5,
        "far outside the spectrum m should be near 1, got {m_first}"
    );
}

#[test]
fn beyond_the_edge_m_is_near_one_and_real() {
    let z = Complex64::new(2.0, 1e-6);
    let solution = solve_m(0.6, 4000, 16000, &[z]).unwrap();
    assert_eq!(solution.m_values.len(), 1);
    let m = solution.m_values[0];
    assert!(
        m.re > 0.5 && m.re < 1.5,
        "outside the spectrum m stays in [0.5, 1.5], got {m}"
    );
    assert!(m.im.abs() < 1e-4, "m should be nearly real, got {m}");
}

#[test]
fn default_grid_solution_is_accurate_branch_consistent_and_continuous() {
    let (alpha, d, v) = (1.0, 100, 400);
    let grid = default_grid(alpha, d);
    assert!(grid.len() >= 2000);
    let solution = solve_m(alpha, d, v, &grid).unwrap();
    assert!(
        solution.dropped.is_empty(),
        "no default-grid point should fail: {:?}",
        solution.dropped
    );
    for (res, m) in solution.residuals.iter().zip(&solution.m_values) {
        assert!(*res < 1e-10, "accepted residual too large: {res}");
        assert!(m.im <= 0.0, "accepted m crossed the branch: {m}");
    }
    // Successive values change by less than ~10x the local Lipschitz scale
    // |dz| / eta: a branch jump would show up as an O(1) violation.
    for k in 0..solution.grid.len() - 1 {
        let dz = (solution.grid[k + 1] - solution.grid[k]).norm();
        let eta = solution.grid[k].im.min(solution.grid[k + 1].im);
        let dm = (solution.m_values[k + 1] - solution.m_values[k]).norm();
        let scale = solution.m_values[k].norm().max(1.0);
        assert!(
            dm <= 10.0 * (dz / eta) * scale + 1e-9,
            "discontinuity at x = {}: |dm| = {dm}, allowed = {}",
            solution.grid[k].re,
            10.0 * (dz / eta) * scale
        );
    }
}

#[test]
fn grid_offsets_track_spacing_below_and_sharpen_at_the_top() {
    // Near the bottom of the spectrum the offset follows the local eigenvalue
    // spacing scale, which shrinks with d.
    let fine = eta_schedule(1.0, 1000, 1e-5);
    let coarse = eta_schedule(1.0, 100, 1e-5);
    assert!(fine < coarse, "larger d should need a smaller offset");
    // The profile-spacing branch at x = 1 is x^{1 + 1/(2 alpha)} = 1.
    assert_abs_diff_eq!(eta_schedule(1.0, 100, 1.0), 1.0, epsilon = 1e-15);

    // On the default grid the top region (isolated eigenvalues) gets a sharp
    // constant offset, resolved by several abscissas per offset width.
    let grid = default_grid(1.0, 100);
    let top: Vec<_> = grid.iter().filter(|z| z.re > 1.0).collect();
    assert!(top.len() > 100);
    let eta_top = top[0].im;
    assert!(eta_top <= 5e-3, "top offset should be sharp, got {eta_top}");
    for pair in top.windows(2) {
        assert!(pair[0].im == eta_top);
        assert!(pair[1].re - pair[0].re <= 0.5 * eta_top);
    }
    // Offsets never exceed the sharp cap anywhere on the default grid.
    assert!(grid.iter().all(|z| z.im > 0.0 && z.im <= eta_top + 1e-15));
}

#[test]
fn invalid_inputs_are_rejected() {
    let good = [Complex64::new(1.0, 1e-3)];
    let on_axis = [Complex64::new(1.0, 0.0)];
    assert!(matches!(
        solve_m(1.0, 10, 40, &on_axis),
        Err(DetEquivError::BadInput(_))
    ));
    assert!(matches!(
        solve_m(1.0, 10, 40, &[]),
        Err(DetEquivError::BadInput(_))
    ));
    assert!(matches!(
        solve_m(-1.0, 10, 40, &good),
        Err(DetEquivError::BadInput(_))
    ));
    assert!(matches!(
        solve_m(1.0, 0, 40, &good),
        Err(DetEquivError::BadInput(_))
    ));
}
