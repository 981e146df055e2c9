#![allow(dead_code)]

use std::io::Write;
use std::path::PathBuf;

use radshoot::config::RunConfig;
use radshoot::search::{SearchOptions, Searcher};
use radshoot::{Landmarks, Model};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn load(name: &str) -> RunConfig {
    let text = std::fs::read_to_string(config_path(name)).expect("config file");
    RunConfig::parse(&text).expect("valid config")
}

pub fn model(name: &str) -> (RunConfig, Model, Landmarks) {
    let cfg = load(name);
    let model = cfg.nonlinearity.build().expect("model");
    let lm = model.compute_landmarks(cfg.n).expect("landmarks");
    (cfg, model, lm)
}

pub fn searcher(name: &str) -> Searcher<f64> {
    let (cfg, model, lm) = model(name);
    let base = cfg.integrator.with_alpha(lm.beta_star);
    Searcher::new(&model, lm, base, cfg.search).expect("searcher")
}

pub fn searcher_with(name: &str, options: SearchOptions<f64>) -> Searcher<f64> {
    let (cfg, model, lm) = model(name);
    let base = cfg.integrator.with_alpha(lm.beta_star);
    Searcher::new(&model, lm, base, options).expect("searcher")
}

/// Writes past the test harness capture, so the line shows in every run.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {criterion}: {verdict} {detail}");
}
