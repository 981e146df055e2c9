mod common;

use std::f64::consts::PI;

use common::{load, model, searcher};
use radshoot::classifier::{classify_lenient, extract_zk_tk, ClassifierOptions};
use radshoot::config::RunConfig;
use radshoot::integrator::{EventKind, Termination};
use radshoot::nonlinearity::{Case, ModelKind, NonlinearityModel};
use radshoot::search::{AlphaKCertificate, SearchError};
use radshoot::theorems::{compute_u_bar, k0_condition, k0_formula, k0_inputs, nonexistence_condition};
use radshoot::{Model, ProblemConfig, Shooter};

fn poly(coefficients: &[f64]) -> Model {
    NonlinearityModel::new(ModelKind::Polynomial(coefficients.to_vec()), f64::NEG_INFINITY, f64::INFINITY).unwrap()
}

fn shoot(m: &Model, n: u32, alpha: f64, r_max: f64) -> radshoot::Trajectory {
    let mut cfg = ProblemConfig::new(n, alpha);
    cfg.r_max = r_max;
    Shooter::new(m).integrate(&cfg).unwrap()
}

#[test]
fn profile_values() {
    let cubic = poly(&[0.0, -1.0, 0.0, 1.0]);
    assert_eq!(cubic.eval_f(1.0).unwrap(), 0.0);
    assert_eq!(cubic.eval_f(0.0).unwrap(), 0.0);
    assert!((cubic.eval_F(1.0).unwrap() + 0.25).abs() < 1e-15);
    assert!(cubic.eval_F(2f64.sqrt()).unwrap().abs() < 1e-15);
    let pure = poly(&[0.0, 0.0, 0.0, 1.0]);
    assert!((pure.eval_Q(3, 2.0).unwrap() - 8.0).abs() < 1e-12);
    let (_, m1, _) = model("m1.ini");
    assert_eq!(m1.eval_f(1.0).unwrap(), 0.0);
    assert_eq!(m1.eval_F(0.0).unwrap(), 0.0);
    assert_eq!(m1.eval_Q(3, 0.0).unwrap(), 0.0);
    for s in [-2.5, -0.7, 0.3, 1.2, 1.8] {
        assert!((m1.eval_Q(2, s).unwrap() - 4.0 * m1.eval_F(s).unwrap()).abs() < 1e-14);
    }
}

#[test]
fn hypothesis_verdicts() {
    let cubic = poly(&[0.0, -1.0, 0.0, 1.0]);
    let rep = cubic.check_hypotheses(3);
    assert_eq!(rep.case, Case::Neither);
    assert_eq!(rep.first_failure().unwrap().0, "f3");

    let (_, m1, _) = model("m1.ini");
    let rep = m1.check_hypotheses(3);
    assert_eq!(rep.case, Case::A1);
    assert!(rep.first_failure().is_none());

    // f = s^6 / 64 beyond 2 keeps f(2) = 1; the exponent is above (N+2)/(N-2) = 5
    let text = std::fs::read_to_string(common::config_path("a2_tail.ini"))
        .unwrap()
        .replace("tail_c = 0.25", "tail_c = 0.015625")
        .replace("tail_p = 2", "tail_p = 6");
    let m = RunConfig::parse(&text).unwrap().nonlinearity.build().unwrap();
    let rep = m.check_hypotheses(3);
    assert_eq!(rep.case, Case::Neither);
    assert_eq!(rep.first_failure().unwrap().0, "f5");
}

#[test]
fn m1_landmarks() {
    let (_, m1, lm) = model("m1.ini");
    assert_eq!((lm.gamma_1(), lm.gamma_star, lm.m, lm.m_bar), (1.0, 2.0, 1, 0));
    assert_eq!(lm.gamma(-1), -3.0);
    let b1 = lm.beta_1();
    assert!(b1 > 0.5 && b1 < 1.0 && m1.eval_F(b1).unwrap().abs() < 1e-12);
    assert!(lm.beta_star > 1.5 && lm.beta_star < 2.0);
    assert!((m1.eval_F(lm.beta_star).unwrap() - 0.4).abs() < 1e-12);
    assert!((lm.beta_star - 1.693481571552698).abs() < 1e-12);
    let u = compute_u_bar(&m1, &lm).unwrap();
    assert!(u > -3.0 && u < -1.0 && (m1.eval_F(u).unwrap() - 0.4).abs() < 1e-12);
}

#[test]
fn series_start() {
    let zero = poly(&[0.0]);
    let cfg = ProblemConfig::new(3, 0.7);
    let (_, u, v) = Shooter::new(&zero).series_start(&cfg);
    assert_eq!((u, v), (0.7, 0.0));

    let lin = poly(&[0.0, 1.0]);
    let cfg = ProblemConfig::new(3, 1.0);
    let r0 = 1e-4;
    let (u, v) = Shooter::new(&lin).series_at(&cfg, r0);
    assert!((u - (1.0 - r0 * r0 / 6.0)).abs() < 1e-15);
    assert!(v < 0.0);
}

#[test]
fn constant_solution_without_events() {
    let zero = poly(&[0.0]);
    let t = shoot(&zero, 3, 1.0, 50.0);
    assert!(t.events.is_empty());
    assert!(matches!(t.termination, Termination::ReachedRmax), "{:?}", t.termination);
    assert!(t.samples.iter().all(|s| s.u == 1.0 && s.uprime == 0.0));
    assert_eq!(t.count_sign_changes(), 0);
    assert_eq!(t.energy_residual(1.0, 40.0).unwrap(), 0.0);
}

#[test]
fn linear_closed_form_quantities() {
    let lin = poly(&[0.0, 1.0]);
    let t = shoot(&lin, 3, 1.0, 10.0);
    assert_eq!(t.count_sign_changes(), 3);
    assert_eq!(t.energy_i(0.0).unwrap(), 0.5);
    assert!((t.energy_i(PI).unwrap() - 1.0 / (2.0 * PI * PI)).abs() < 1e-8);
    assert_eq!(t.energy_residual(2.0, 2.0).unwrap(), 0.0);
    assert_eq!(t.big_h(0.0).unwrap(), 0.0);
    assert_eq!(t.pohozaev_e(0.0).unwrap(), 0.0);
    assert!(t.tilde_h(3.0, t.energy_i(3.0).unwrap()).unwrap().abs() < 1e-15);

    let short = shoot(&lin, 3, 1.0, 7.0);
    let marks = extract_zk_tk(&short).unwrap();
    let z: Vec<f64> = marks.zeros.iter().map(|z| z.r).collect();
    assert_eq!(z.len(), 2);
    assert!((z[0] - PI).abs() < 1e-7 && (z[1] - 2.0 * PI).abs() < 1e-7);
    // first positive root of tan r = r
    assert_eq!(marks.extrema.len(), 1);
    assert!((marks.extrema[0].r - 4.493409457909064).abs() < 1e-6);

    let planar = shoot(&lin, 2, 1.0, 5.0);
    for r in [0.5, 1.7, 4.2] {
        let e = planar.pohozaev_e(r).unwrap();
        assert!((e - 2.0 * r * r * planar.energy_i(r).unwrap()).abs() < 1e-14);
    }
}

#[test]
fn big_h_decreases_inside_the_origin_well() {
    // a small start inside (0, delta) never leaves the punctured well
    let (cfg, m1, lm) = model("m1.ini");
    let alpha = 0.5 * lm.delta;
    let t = Shooter::new(&m1).integrate(&cfg.integrator.with_alpha(alpha)).unwrap();
    let radii: Vec<f64> = t.samples.iter().map(|s| s.r).filter(|&r| r > 0.0).collect();
    assert!(t.samples.iter().all(|s| s.u.abs() < lm.delta));
    for w in radii.windows(2) {
        assert!(t.big_h(w[1]).unwrap() <= t.big_h(w[0]).unwrap());
    }
}

#[test]
fn m1_labels_near_the_ends() {
    let (cfg, m1, lm) = model("m1.ini");
    let opts = ClassifierOptions::for_landmarks(&lm);
    let shooter = Shooter::new(&m1);
    let label = |alpha: f64| {
        let t = shooter.integrate(&cfg.integrator.with_alpha(alpha)).unwrap();
        classify_lenient(&t, &lm, &opts).unwrap()
    };
    let low = label(lm.beta_star + 1e-3);
    assert!(low.is("Q", 1) || low.is("S", 1), "{}", low.tag());
    let c = low.critical_value.unwrap();
    assert!(c > 0.0 && c < lm.beta_star, "{c}");
    // frozen from direct integration: this start is trapped in well 1 before any zero
    let high = label(lm.gamma_star - 1e-3);
    assert_eq!(high.tag(), "S1(1)");
    assert_eq!(high.sign_changes, 0);
}

#[test]
fn alpha_k_estimates() {
    let s = searcher("m1.ini");
    let a0 = s.estimate_alpha_k(0).unwrap();
    assert_eq!(a0.alpha, s.landmarks.beta_star);
    assert_eq!(a0.certificate, AlphaKCertificate::Trivial);
    let a1 = s.estimate_alpha_k(1).unwrap();
    assert!(a1.alpha < 2.0 && a1.alpha > s.landmarks.beta_star);
    assert!(matches!(a1.certificate, AlphaKCertificate::ScanRun { points } if points > 0));

    let a2 = searcher("a2_tail.ini");
    let est = a2.estimate_alpha_k(1).unwrap();
    let two_bb = 2.0 * a2.landmarks.beta_bar;
    assert!(est.alpha > two_bb);
    match est.certificate {
        AlphaKCertificate::RadiusBound { r_bar, c_k } => assert!(r_bar >= c_k),
        AlphaKCertificate::PohozaevBound { e, threshold, .. } => assert!(e >= threshold),
        other => panic!("{other:?}"),
    }
}

#[test]
fn scan_and_refine_edge_cases() {
    let s = searcher("m1.ini");
    let one = s.scan(1.8, 1.9, 1).unwrap();
    assert_eq!(one.points.len(), 1);
    assert!(matches!(s.scan(1.8, 1.8, 4), Err(SearchError::InvalidRange(_))));
    let any = |_: &radshoot::search::ScanPoint<f64>| true;
    assert!(matches!(s.refine_boundary(0.1, 0.1, &any), Err(SearchError::InvalidRange(_))));
    assert!(matches!(s.refine_boundary(0.1, 0.2, &any), Err(SearchError::NoSignSplit(_))));
}

#[test]
fn m1_scan_alternates_labels() {
    let s = searcher("m1.ini");
    let scan = s.scan_level(512).unwrap();
    let tags: Vec<&str> = scan.intervals.iter().map(|r| r.tag.as_str()).collect();
    assert!(tags.len() > 8, "{tags:?}");
    assert_eq!(tags[0], "S1(1)");
    assert!(tags.contains(&"Q2") && tags.contains(&"Q5"));
}

#[test]
fn deep_well_pair_without_sign_change() {
    let s = searcher("m3_deep_well.ini");
    let p = s.find_pairs(0).unwrap();
    assert!(p.distinct);
    for b in [&p.alpha_sharp, &p.alpha_star] {
        assert!(b.certified);
        assert_eq!(b.sign_changes, 0);
        let a = b.approach.unwrap();
        assert!(a.u.abs() <= 1e-5 && a.uprime.abs() <= 1e-5 && a.energy.abs() <= 1e-8);
        let lo = b.inside.alpha.min(b.outside.alpha);
        let hi = b.inside.alpha.max(b.outside.alpha);
        assert!(lo <= b.alpha() && b.alpha() <= hi);
    }
    assert!(p.alpha_sharp.alpha() < p.alpha_star.alpha());
}

#[test]
fn nonexistence_values() {
    let (cfg, m1, lm) = model("m1.ini");
    let r = nonexistence_condition(&m1, &lm, cfg.n, 0, None).unwrap();
    assert!(!r.holds && r.rhs < 0.0);

    let (cfg, m2, lm) = model("m2.ini");
    let reports: Vec<_> = (0..4).map(|k| nonexistence_condition(&m2, &lm, cfg.n, k, None).unwrap()).collect();
    assert!(reports[0].holds && reports[1].holds);
    assert!(reports.windows(2).all(|w| w[1].rhs < w[0].rhs));
    assert!(reports.windows(2).all(|w| !w[1].holds || w[0].holds));
}

#[test]
fn k0_condition_values() {
    let (cfg, m1, lm) = model("m1.ini");
    let r1 = k0_condition(&m1, &lm, cfg.n, None).unwrap();
    assert!(r1.constants.0.iter().all(|(_, v)| v.is_finite()));
    assert!(!r1.holds);
    // a deeper well on (0, beta_1) raises the right-hand side
    let (cfg, m3, lm3) = model("m3_deep_well.ini");
    let r3 = k0_condition(&m3, &lm3, cfg.n, None).unwrap();
    assert!(r3.rhs > r1.rhs);

    let mut x = k0_inputs(&m1, &lm, cfg.n, None).unwrap();
    x.case = Case::A2;
    x.f_infinity = Some(1e300);
    assert!(!k0_formula(&x).holds);
}

#[test]
fn shipped_configs_parse() {
    for name in ["m1.ini", "m2.ini", "m3_deep_well.ini", "linear.ini", "cubic.ini", "a2_tail.ini"] {
        let cfg = load(name);
        assert!(cfg.nonlinearity.build().is_ok(), "{name}");
    }
    assert_eq!(load("m1.ini").k, 1);
}

#[test]
fn double_zero_threshold_scales_with_eps_double() {
    let (cfg, m1, _) = model("m1.ini");
    let sh = Shooter::new(&m1);
    let base = cfg.integrator.with_alpha(1.9);
    let mut tight = base.clone();
    tight.eps_double = base.eps_double / 10.0;
    assert!((sh.double_zero_threshold(&tight) * 10.0 - sh.double_zero_threshold(&base)).abs() < 1e-18);
    let t = sh.integrate(&base).unwrap();
    assert!(t
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::DoubleZero))
        .all(|e| e.energy.abs() < 1e-6));
}

#[test]
fn single_precision_core() {
    use radshoot::integrator::{ProblemConfig as Config, Shooter as GenericShooter};
    let m = NonlinearityModel::<f32>::new(ModelKind::Polynomial(vec![0.0, 1.0]), f32::NEG_INFINITY, f32::INFINITY).unwrap();
    let mut cfg = Config::<f32>::new(3, 1.0);
    cfg.rel_tol = 1e-5;
    cfg.abs_tol = 1e-6;
    cfg.eps_zero = 1e-5;
    cfg.eps_double = 1e-4;
    cfg.r_max = 10.0;
    let t = GenericShooter::new(&m).integrate(&cfg).unwrap();
    assert_eq!(t.count_sign_changes(), 3);
    for s in &t.samples {
        let exact = if s.r == 0.0 { 1.0 } else { s.r.sin() / s.r };
        assert!((s.u - exact).abs() < 1e-3, "r = {}", s.r);
    }
}

#[test]
fn alpha_k_is_nondecreasing_on_m1() {
    let s = searcher("m1.ini");
    let a: Vec<f64> = (0..6).map(|k| s.estimate_alpha_k(k).unwrap().alpha).collect();
    assert!(a.windows(2).all(|w| w[0] <= w[1]), "{a:?}");
}
