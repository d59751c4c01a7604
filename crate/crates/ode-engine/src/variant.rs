//! The three closures of the per-mode second-moment dynamics.

use schedules::ScheduleSet;
use serde::{Deserialize, Serialize};

/// Which closure of the second-moment dynamics to integrate.
///
/// * `Simplified` — drops every term that is second order in the eigenvalue,
///   the momentum rate γ₃, and the averaging rate Δ. This is the system the
///   scaling-law analysis is built on and the default everywhere.
/// * `Exact` — the full closure for the discrete iteration, including all
///   quadratic corrections; the difference from `Simplified` is second order
///   in (λ, γ₃, Δ).
/// * `Coinflip` — the closure of the two-stage randomized update that flips a
///   coin between the momentum and gradient steps; it keeps the quadratic
///   noise terms but not the cross terms. Exposed for testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OdeVariant {
    Simplified,
    Exact,
    Coinflip,
}

impl OdeVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            OdeVariant::Simplified => "simplified",
            OdeVariant::Exact => "exact",
            OdeVariant::Coinflip => "coinflip",
        }
    }
}

impl std::fmt::Display for OdeVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Generator matrix `Ω(t; λ)` and forcing direction for one eigenvalue.
///
/// The per-mode dynamics are `dν/dt = Ω ν + λBP(t)·dir` with
/// `ν = (ρ², ξ², χ)`. The returned `dir` is the vector multiplying `λBP(t)`
/// in the forcing; for the simplified and coin-flip closures it is
/// `(γ₂², γ₁², 0)`, while the exact closure adds the rate cross terms.
///
/// Both λ and t must be nonnegative; the formulas themselves are pure.
pub fn omega_and_g(
    variant: OdeVariant,
    t: f64,
    lambda: f64,
    schedule: &ScheduleSet,
) -> ([[f64; 3]; 3], [f64; 3]) {
    debug_assert!(lambda >= 0.0, "eigenvalue must be nonnegative");
    debug_assert!(t >= 0.0, "time must be nonnegative");
    let (g1, g2, g3, dl) = schedule.rates_at(t);
    let b = schedule.batch as f64;
    omega_and_g_from_rates(variant, g1, g2, g3, dl, b, lambda)
}

/// Same as [`omega_and_g`] but from raw rate values (γ₁, γ₂, γ₃, Δ) and
/// batch size, so a single schedule lookup can serve many eigenvalues.
pub fn omega_and_g_from_rates(
    variant: OdeVariant,
    g1: f64,
    g2: f64,
    g3: f64,
    dl: f64,
    batch: f64,
    lambda: f64,
) -> ([[f64; 3]; 3], [f64; 3]) {
    let bl = batch * lambda;
    // B(B+1)λ² factor of the quadratic noise terms.
    let bbl2 = batch * (batch + 1.0) * lambda * lambda;
    let base = [
        [-2.0 * g2 * bl, 0.0, -2.0 * g3],
        [0.0, -2.0 * dl, 2.0 * g1 * bl],
        [g1 * bl, -g3, -dl - g2 * bl],
    ];
    let dir_base = [g2 * g2, g1 * g1, 0.0];
    match variant {
        OdeVariant::Simplified => (base, dir_base),
        OdeVariant::Exact => {
            let mut m = base;
            m[0][0] += -2.0 * g1 * g3 * bl + (2.0 * g1 * g2 * g3 + g2 * g2 + g1 * g1 * g3 * g3) * bbl2;
            m[0][1] += g3 * g3 * (1.0 - dl) * (1.0 - dl);
            m[0][2] += 2.0 * g3 * dl + 2.0 * (g2 * g3 + g3 * g3 * g1) * (1.0 - dl) * bl;
            m[1][0] += g1 * g1 * bbl2;
            m[1][1] += dl * dl;
            m[1][2] += -2.0 * g1 * dl * bl;
            m[2][0] += -(g1 * g2 + g1 * g1 * g3) * bbl2;
            m[2][1] += g3 * dl * (2.0 - dl);
            m[2][2] += (g2 * dl - 2.0 * (1.0 - dl) * g1 * g3) * bl;
            let dir = [
                g2 * g2 + 2.0 * g1 * g2 * g3 + g1 * g1 * g3 * g3,
                g1 * g1,
                -g1 * g2 - g1 * g1 * g3,
            ];
            (m, dir)
        }
        OdeVariant::Coinflip => {
            let m = [
                [
                    -2.0 * g2 * bl + bbl2 * g2 * g2,
                    g3 * g3,
                    2.0 * g3 * (-1.0 + g2 * bl),
                ],
                [g1 * g1 * bbl2, -2.0 * dl + dl * dl, 2.0 * g1 * bl * (1.0 - dl)],
                [g1 * bl, -g3, -dl - g2 * bl],
            ];
            (m, dir_base)
        }
    }
}
