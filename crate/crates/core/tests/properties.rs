mod common;

use proptest::prelude::*;

use common::{model, searcher};
use radshoot::classifier::{classify_lenient, ClassifierOptions};
use radshoot::integrator::{EventKind, Termination};
use radshoot::nonlinearity::Profile;
use radshoot::report::envelope;
use radshoot::theorems::{ck_formula, integrate_adaptive};
use radshoot::Shooter;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn energy_never_increases(frac in 0.0f64..1.0) {
        let (cfg, m, lm) = model("m1.ini");
        let alpha = lm.beta_star + frac * (lm.gamma_star - lm.beta_star);
        let t = Shooter::new(&m).integrate(&cfg.integrator.with_alpha(alpha)).unwrap();
        let tol = 10.0 * t.config.rel_tol;
        let i: Vec<f64> = t.samples.iter().map(|s| t.energy_i(s.r).unwrap()).collect();
        prop_assert!((t.i0 - m.eval_F(alpha).unwrap()).abs() <= 1e-14);
        for w in i.windows(2) {
            prop_assert!(w[1] <= w[0] + tol * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn trapped_runs_stay_in_their_well(frac in 0.0f64..1.0) {
        let (cfg, m, lm) = model("m1.ini");
        let alpha = lm.beta_star + frac * (lm.gamma_star - lm.beta_star);
        let t = Shooter::new(&m).integrate(&cfg.integrator.with_alpha(alpha)).unwrap();
        if let Termination::TrappedInWell { well } = t.termination {
            let chain = m.gamma_chain();
            let end = t.terminal();
            prop_assert_eq!(chain.well_of(end.u()), Some(well));
            prop_assert!(t.energy_i(t.r_end).unwrap() < chain.trap_level(well));
        }
    }

    #[test]
    fn zeros_alternate_in_direction(frac in 0.0f64..1.0) {
        let (cfg, m, lm) = model("m1.ini");
        let alpha = lm.beta_star + frac * (lm.gamma_star - lm.beta_star);
        let t = Shooter::new(&m).integrate(&cfg.integrator.with_alpha(alpha)).unwrap();
        let signs: Vec<i8> = t
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::SimpleZero { uprime_sign } => Some(uprime_sign),
                _ => None,
            })
            .collect();
        prop_assert_eq!(signs.len(), t.count_sign_changes());
        prop_assert!(signs.first().is_none_or(|&s| s < 0));
        prop_assert!(signs.windows(2).all(|w| w[0] == -w[1]));
    }

    #[test]
    fn primitive_matches_integral_of_f(s in -2.99f64..1.99) {
        let (_, m, _) = model("m1.ini");
        let f = |x: f64| m.value(Profile::Force, x);
        let mut cuts: Vec<f64> = m.knots().into_iter().filter(|&k| k > s.min(0.0) && k < s.max(0.0)).collect();
        cuts.push(0.0);
        cuts.push(s);
        cuts.sort_by(f64::total_cmp);
        let area: f64 = cuts.windows(2).map(|w| integrate_adaptive(&f, w[0], w[1], 1e-14, 30)).sum();
        let integral = if s < 0.0 { -area } else { area };
        prop_assert!((integral - m.eval_F(s).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn pohozaev_profile_definition(s in -2.99f64..1.99) {
        let (_, m, _) = model("m1.ini");
        let q = m.eval_Q(3, s).unwrap();
        let direct = 6.0 * m.eval_F(s).unwrap() - s * m.eval_f(s).unwrap();
        prop_assert!((q - direct).abs() <= 1e-12);
    }

    #[test]
    fn ck_scales_with_k_plus_one(
        k in 0usize..40,
        n in 2u32..8,
        bb in 0.5f64..5.0,
        u in -5.0f64..-0.1,
        f2 in 2.0f64..10.0,
        ft in 0.0f64..1.0,
        fb in 0.0f64..1.9,
    ) {
        let c0 = ck_formula(0, n, bb, u, f2, ft, fb);
        prop_assert_eq!(ck_formula(k, n, bb, u, f2, ft, fb), c0 * (k + 1) as f64);
        prop_assert!(c0 > 0.0);
    }

    #[test]
    fn envelope_round_trips_floats(xs in proptest::collection::vec(-1e300f64..1e300, 0..16)) {
        let a = envelope("t", "h", &xs).unwrap();
        prop_assert_eq!(&a, &envelope("t", "h", &xs).unwrap());
        let back: serde_json::Value = serde_json::from_str(&a).unwrap();
        let got: Vec<f64> = back["result"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        prop_assert_eq!(got, xs);
    }
}

proptest! {
    #![proptest_config(cases(24))]

    /// Interior points of a `Q` band keep their label under a small change
    /// of the initial value.
    #[test]
    fn q_bands_are_open(t in 3.0f64..12.0, nudge in -1.0f64..1.0) {
        let s = searcher("m1.ini");
        let opts = ClassifierOptions::for_landmarks(&s.landmarks);
        let label = |offset: f64| {
            let traj = s.shoot(offset, true).unwrap();
            classify_lenient(&traj, &s.landmarks, &opts).unwrap()
        };
        let d = s.offset_at(t);
        let c = label(d);
        prop_assume!(c.label.symbol() == "Q" && c.margin > 0.05);
        let near = label(d * (1.0 + 1e-6 * nudge));
        prop_assert_eq!(near.tag(), c.tag());
    }
}

#[test]
fn landmark_invariants_hold_for_every_shipped_model() {
    for name in ["m1.ini", "m2.ini", "m3_deep_well.ini", "a2_tail.ini"] {
        let (_, m, lm) = model(name);
        let big = |s: f64| m.eval_F(s).unwrap();
        assert!(0.0 < lm.delta && lm.delta < lm.gamma_1(), "{name}");
        assert!(lm.gamma_m() < lm.beta_star && lm.beta_star < lm.beta_bar, "{name}");
        assert!((big(lm.beta_star) - big(lm.gamma_m())).abs() <= 1e-10, "{name}");
        for (i, b) in lm.betas_pos.iter().enumerate() {
            assert!((big(*b) - big(lm.gamma(i as i32))).abs() <= 1e-10, "{name}");
        }
        assert!(lm.gammas_pos.windows(2).all(|w| big(w[0]) < big(w[1])), "{name}");
        assert!((1..100).all(|j| big(lm.delta * j as f64 / 100.0) < 0.0), "{name}");
    }
}
