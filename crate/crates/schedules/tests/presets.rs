//! Preset construction oracles: published default formulas, the rate
//! correspondence, and serialization round-trips.

use approx::assert_relative_eq;
use proptest::prelude::*;
use schedules::{
    build_preset, default_delta, effective_sgd_rate, InstanceSummary, Overrides,
    ParamSchedule, Preset, ScheduleError, ScheduleSet,
};

fn summary(alpha: f64, d: usize, v: usize) -> InstanceSummary {
    InstanceSummary::from_dims(alpha, d, v)
}

#[test]
fn sgd_default_rate_is_half_inverse_trace() {
    let s = summary(1.0, 200, 800);
    let set = build_preset(Preset::Sgd, 1.0, Some(0.7), s, &Overrides::default()).unwrap();
    assert_relative_eq!(
        set.gamma2.constant_value().unwrap(),
        1.0 / (2.0 * plrf_core::trace_diag(1.0, 800)),
        max_relative = 1e-15
    );
    for t in [0.0, 1.0, 1e5] {
        let (g1, _, g3, delta) = set.rates_at(t);
        assert_eq!(g1, 0.0, "plain SGD keeps no momentum accumulator");
        assert_eq!(g3, 0.0);
        assert_eq!(delta, 1.0);
    }
    assert!(set.tags.is_empty(), "non-power-law presets carry no exponent tags");
}

#[test]
fn dana_decaying_defaults_decay_at_half_inverse_alpha() {
    let s = summary(1.0, 500, 2000);
    let set =
        build_preset(Preset::DanaDecaying, 1.0, Some(0.7), s, &Overrides::default()).unwrap();
    let g2 = set.gamma2.constant_value().unwrap();
    assert_relative_eq!(g2, 1.0 / (2.0 * s.trace_d), max_relative = 1e-15);
    assert_eq!(set.tag("kappa3"), Some(0.5), "default decay exponent is 1/(2α)");
    assert_eq!(set.tag("kappa1"), Some(0.0));
    assert_eq!(set.tag("kappa2"), Some(0.0));
    for t in [0.0, 3.0, 99.0, 1e6] {
        assert_relative_eq!(
            set.gamma3.value(t),
            (g2 / 5.0) * (1.0 + t).powf(-0.5),
            max_relative = 1e-14
        );
    }
    // Δ(t) = δ/(1+t) with the β-dependent default δ.
    let delta = set.tag("delta").unwrap();
    assert_relative_eq!(delta, 3.4, max_relative = 1e-12);
    assert_relative_eq!(set.delta.value(9.0), delta / 10.0, max_relative = 1e-14);
}

#[test]
fn dana_decaying_needs_explicit_exponent_for_flat_spectra() {
    let s = summary(0.4, 100, 400);
    let err = build_preset(Preset::DanaDecaying, 0.4, Some(0.8), s, &Overrides::default())
        .unwrap_err();
    assert!(matches!(err, ScheduleError::NeedsExplicitKappa3(a) if a == 0.4));

    let with_kappa = Overrides { kappa3: Some(1.3), ..Overrides::default() };
    let set = build_preset(Preset::DanaDecaying, 0.4, Some(0.8), s, &with_kappa).unwrap();
    assert_eq!(set.tag("kappa3"), Some(1.3));
}

#[test]
fn dana_constant_exponents_adapt_to_alpha() {
    // Steep spectrum: no d-scaling on γ₂, one power of d on γ₃.
    let s = summary(1.0, 400, 1600);
    let set =
        build_preset(Preset::DanaConstant, 1.0, Some(0.7), s, &Overrides::default()).unwrap();
    assert_eq!(set.tag("kappa1"), Some(0.0));
    assert_eq!(set.tag("kappa2"), Some(1.0));
    assert_eq!(set.tag("kappa3"), Some(0.0));
    let g2 = set.gamma2.constant_value().unwrap();
    let g3 = set.gamma3.constant_value().expect("κ₃ = 0 makes γ₃ constant in t");
    assert_relative_eq!(g3, (g2 / 5.0) / 400.0, max_relative = 1e-14);

    // Flat spectrum: κ₁ = 1 − 2α kicks in; the default rate still lands on
    // 1/(2tr) after the d-scaling.
    let s = summary(0.3, 400, 1600);
    let set =
        build_preset(Preset::DanaConstant, 0.3, Some(0.8), s, &Overrides::default()).unwrap();
    assert_relative_eq!(set.tag("kappa1").unwrap(), 0.4, max_relative = 1e-15);
    assert_relative_eq!(set.tag("kappa2").unwrap(), 1.4, max_relative = 1e-15);
    assert_relative_eq!(
        set.gamma2.constant_value().unwrap(),
        1.0 / (2.0 * s.trace_d),
        max_relative = 1e-13
    );
    // The tilde coefficient and the κ₁ scaling reproduce the stored rate.
    let g2t = set.tag("gamma2_tilde").unwrap();
    assert_relative_eq!(
        g2t * 400f64.powf(-0.4),
        set.gamma2.constant_value().unwrap(),
        max_relative = 1e-14
    );
}

#[test]
fn schedule_free_matches_published_translation() {
    let s = summary(1.0, 100, 400);
    let o = Overrides {
        gamma_tilde: Some(1.0),
        beta_momentum: Some(0.9),
        ..Overrides::default()
    };
    let set = build_preset(Preset::ScheduleFree, 1.0, Some(0.7), s, &o).unwrap();
    assert_relative_eq!(set.gamma2.constant_value().unwrap(), 0.1, max_relative = 1e-12);
    assert_relative_eq!(set.gamma3.value(0.0), 0.9, max_relative = 1e-15);
    assert_eq!(set.delta.value(0.0), 1.0);
    assert_relative_eq!(set.gamma3.value(9.0), 0.09, max_relative = 1e-14);
    assert_eq!(set.gamma1.constant_value(), Some(1.0));
    assert_eq!(set.tag("kappa3"), Some(1.0), "averaging decays the momentum rate like 1/t");

    // Defaults: β̃ = 0.9 and γ̃ = 0.5/tr.
    let set = build_preset(Preset::ScheduleFree, 1.0, None, s, &Overrides::default()).unwrap();
    assert_relative_eq!(
        set.gamma2.constant_value().unwrap(),
        0.05 / s.trace_d,
        max_relative = 1e-13
    );
}

#[test]
fn accelerated_presets_ramp_the_gradient_weight() {
    let s = summary(1.0, 100, 400);
    let set = build_preset(Preset::AcSgd, 1.0, Some(0.7), s, &Overrides::default()).unwrap();
    let tr = s.trace_d;
    let rate = 0.5 / (100.0 * tr);
    let damp = 0.5 / tr;
    // Early iterations: the ramp starts negative because the per-dimension
    // rate is far below the damping term.
    assert_relative_eq!(set.gamma1.value(0.0), (rate - damp) / 2.0, max_relative = 1e-13);
    assert!(set.gamma1.value(0.0) < 0.0);
    // Large t: γ₁(t)γ₃(t) converges to the per-dimension rate.
    let t = 1e6;
    assert_relative_eq!(
        set.gamma1.value(t) * set.gamma3.value(t),
        rate,
        max_relative = 1e-3
    );
    assert_relative_eq!(set.gamma2.constant_value().unwrap(), damp, max_relative = 1e-15);
    assert_eq!(set.delta.value(0.0), 0.5, "Δ(0) = 1/2 for the shifted decay");

    // The Nesterov preset is the same shape with one shared rate; its ramp
    // starts at exactly zero.
    let set = build_preset(Preset::SNesterov, 1.0, Some(0.7), s, &Overrides::default()).unwrap();
    assert_eq!(set.gamma1.value(0.0), 0.0);
    let g = 0.5 / tr;
    assert_relative_eq!(set.gamma1.value(2.0), g * 2.0 * 3.0 / 4.0, max_relative = 1e-14);
    assert_relative_eq!(set.gamma2.constant_value().unwrap(), g, max_relative = 1e-15);
}

#[test]
fn effective_rate_correspondence() {
    let make = |g2: f64, g3: f64, delta: f64| ScheduleSet {
        name: "sgd-m".into(),
        gamma1: ParamSchedule::ONE,
        gamma2: ParamSchedule::constant(g2),
        gamma3: ParamSchedule::constant(g3),
        delta: ParamSchedule::constant(delta),
        batch: 1,
        tags: Default::default(),
    };
    assert_relative_eq!(
        effective_sgd_rate(&make(0.05, 0.045, 0.1)).unwrap(),
        0.5,
        max_relative = 1e-14
    );
    assert_relative_eq!(
        effective_sgd_rate(&make(0.3, 0.0, 0.9)).unwrap(),
        0.3,
        max_relative = 1e-15
    );
    assert_relative_eq!(
        effective_sgd_rate(&make(0.0, 0.09, 0.9)).unwrap(),
        0.1,
        max_relative = 1e-14
    );

    // Time-varying schedules are rejected.
    let mut varying = make(0.1, 0.05, 0.5);
    varying.gamma3 = ParamSchedule::PowerLaw { coeff: 0.05, exponent: 1.0, shift: 1.0 };
    assert!(matches!(
        effective_sgd_rate(&varying),
        Err(ScheduleError::NotConstant("gamma3"))
    ));
}

#[test]
fn sgd_m_default_matches_sgd_default_through_the_correspondence() {
    let s = summary(1.2, 300, 1200);
    let sgd = build_preset(Preset::Sgd, 1.2, Some(0.6), s, &Overrides::default()).unwrap();
    let sgdm = build_preset(Preset::SgdM, 1.2, Some(0.6), s, &Overrides::default()).unwrap();
    assert_relative_eq!(
        effective_sgd_rate(&sgdm).unwrap(),
        sgd.gamma2.constant_value().unwrap(),
        max_relative = 1e-14
    );
    assert_eq!(sgdm.delta.constant_value(), Some(0.1), "customary decay 1 − Δ = 0.9");
}

#[test]
fn default_delta_formula_and_fallback() {
    assert_relative_eq!(default_delta(1.0, Some(0.7)), 3.4, max_relative = 1e-12);
    // max{(1.2+0.6−1)/0.6, 2 − 1/0.6} + 1 = 0.8/0.6 + 1.
    assert_relative_eq!(
        default_delta(0.6, Some(0.3)),
        0.8 / 0.6 + 1.0,
        max_relative = 1e-12
    );
    // The first branch binds whenever β > 0: (2α+2β−1)/α ≥ 2 − 1/α exactly then.
    assert_relative_eq!(default_delta(2.0, Some(0.1)), 2.6, max_relative = 1e-12);
    assert_eq!(default_delta(1.0, None), 8.0);
}

#[test]
fn preset_names_parse_with_aliases() {
    let cases: [(&str, Preset); 9] = [
        ("sgd", Preset::Sgd),
        ("SGD-M", Preset::SgdM),
        ("sgd_momentum", Preset::SgdM),
        ("dana-constant", Preset::DanaConstant),
        ("DANA-decaying", Preset::DanaDecaying),
        ("ScheduleFreeSGD", Preset::ScheduleFree),
        ("schedule-free", Preset::ScheduleFree),
        ("AcSGD", Preset::AcSgd),
        ("StochasticNesterov", Preset::SNesterov),
    ];
    for (text, want) in cases {
        assert_eq!(text.parse::<Preset>().unwrap(), want, "parsing {text:?}");
    }
    assert!("adamw".parse::<Preset>().is_err());
    assert_eq!(Preset::DanaDecaying.to_string(), "dana-decaying");
}

#[test]
fn overrides_reject_unknown_fields() {
    let err = serde_json::from_str::<Overrides>(r#"{"gamma2_tilde": 0.1, "gamma4": 1.0}"#);
    assert!(err.is_err(), "config typos must not be silently ignored");
    let ok: Overrides = serde_json::from_str(r#"{"kappa3": 0.25, "batch": 4}"#).unwrap();
    assert_eq!(ok.kappa3, Some(0.25));
    assert_eq!(ok.batch, Some(4));
}

#[test]
fn schedule_sets_serialize_round_trip() {
    let s = summary(0.7, 64, 256);
    let set =
        build_preset(Preset::DanaDecaying, 0.7, Some(1.0), s, &Overrides::default()).unwrap();
    let json = serde_json::to_string(&set).unwrap();
    let back: ScheduleSet = serde_json::from_str(&json).unwrap();
    assert_eq!(set, back, "tags and schedule forms must round-trip exactly");

    let again =
        build_preset(Preset::DanaDecaying, 0.7, Some(1.0), s, &Overrides::default()).unwrap();
    assert_eq!(set, again, "builders are deterministic");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Finiteness/nonnegativity across the non-ramp presets, and the exact
    /// power-law reconstruction from tags for the dimension-adapted families.
    #[test]
    fn preset_schedules_are_finite_and_consistent(
        alpha in 0.3f64..2.0,
        beta in 0.1f64..1.5,
        d in 2usize..500,
        which in 0usize..5,
    ) {
        prop_assume!(2.0 * alpha + 2.0 * beta > 1.05);
        let preset = [
            Preset::Sgd,
            Preset::SgdM,
            Preset::DanaConstant,
            Preset::DanaDecaying,
            Preset::ScheduleFree,
        ][which];
        prop_assume!(preset != Preset::DanaDecaying || 2.0 * alpha > 1.02);

        let s = InstanceSummary::from_dims(alpha, d, 4 * d);
        let set = build_preset(preset, alpha, Some(beta), s, &Overrides::default()).unwrap();
        for t in [0.0, 1.0, 7.0, 1e3, 1e6] {
            let (g1, g2, g3, delta) = set.rates_at(t);
            for (label, x) in [("γ₁", g1), ("γ₂", g2), ("γ₃", g3), ("Δ", delta)] {
                prop_assert!(x.is_finite() && x >= 0.0, "{} = {} at t = {}", label, x, t);
            }
        }

        if !set.tags.is_empty() {
            let dd = d as f64;
            let g2t = set.tag("gamma2_tilde").unwrap();
            let g3t = set.tag("gamma3_tilde").unwrap();
            let (k1, k2, k3) = (
                set.tag("kappa1").unwrap(),
                set.tag("kappa2").unwrap(),
                set.tag("kappa3").unwrap(),
            );
            let delta_tag = set.tag("delta").unwrap();
            for t in [0.0, 5.0, 1e4] {
                let g2 = set.gamma2.value(t);
                let g3 = set.gamma3.value(t);
                prop_assert!((g2 - g2t * dd.powf(-k1)).abs() <= 1e-13 * g2.abs());
                let want3 = g3t * dd.powf(-k2) * (1.0 + t).powf(-k3);
                prop_assert!((g3 - want3).abs() <= 1e-13 * want3.abs());
                let want_delta = delta_tag / (1.0 + t);
                prop_assert!(
                    (set.delta.value(t) - want_delta).abs() <= 1e-13 * want_delta.abs()
                );
            }
        }
    }
}
