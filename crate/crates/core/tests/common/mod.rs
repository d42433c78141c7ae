#![allow(dead_code)]

use std::sync::OnceLock;

use wp_curvature::config::{RunConfig, Stage};
use wp_curvature::pipeline::{execute, RunOutcome};

/// Run through the `Q` stage on the given mesh level, no artifacts.
pub fn run_through_q(level: u32) -> RunOutcome {
    let cfg = RunConfig { mesh_level: level, stage: Some(Stage::Q), ..RunConfig::default() };
    execute(&cfg, None).unwrap()
}

pub fn level3() -> &'static RunOutcome {
    static R: OnceLock<RunOutcome> = OnceLock::new();
    R.get_or_init(|| run_through_q(3))
}
