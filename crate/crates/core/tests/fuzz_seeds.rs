//! Runs the checked-in fuzz seeds through the same round trip the fuzz targets use.

use std::fs;
use std::path::Path;

use opcalc::campaign::{CampaignConfig, ReproBundle};
use opcalc::circlefn::CircleFunction;
use opcalc::linalg::CMat;
use opcalc::shift::ShiftFunction;
use opcalc::Result;

fn seeds(target: &str) -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| fs::read_to_string(e.unwrap().path()).unwrap()).collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn round_trip<T>(target: &str, parse: fn(&str) -> Result<T>, emit: fn(&T) -> String) {
    for s in seeds(target) {
        let once = emit(&parse(&s).unwrap_or_else(|e| panic!("{target}: {e}")));
        assert_eq!(emit(&parse(&once).unwrap()), once, "{target}");
    }
    // truncated seeds must be rejected, not panic
    for s in seeds(target) {
        for cut in [0, 1, s.len() / 2, s.len() - 1] {
            let _ = parse(&s[..cut]);
        }
    }
}

#[test]
fn matrix_seeds() {
    round_trip("matrix_json", CMat::from_json, CMat::to_json);
}

#[test]
fn circle_function_seeds() {
    round_trip("circle_function_json", CircleFunction::from_json, CircleFunction::to_json);
}

#[test]
fn shift_function_seeds() {
    round_trip("shift_function_json", ShiftFunction::from_json, ShiftFunction::to_json);
}

#[test]
fn campaign_config_seeds() {
    round_trip("campaign_config_json", CampaignConfig::from_json, CampaignConfig::to_json);
}

#[test]
fn repro_bundle_seeds() {
    round_trip("repro_bundle_json", ReproBundle::from_json, ReproBundle::to_json);
}
