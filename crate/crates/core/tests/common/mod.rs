#![allow(dead_code)]

use std::path::PathBuf;

use cavres::config::{LoadedConfig, RunConfig};
use cavres::oracle::PiecewisePotential;
use cavres::pes::PesCurve;
use cavres::ses::KineticSpec;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn load(name: &str) -> LoadedConfig {
    RunConfig::load(&data_dir().join(name)).expect("shipped config loads")
}

/// The three double barriers used for the oracle comparison.
pub fn synthetic_barriers() -> Vec<(&'static str, PiecewisePotential)> {
    [
        ("A", vec![-1.5, -0.9, 0.9, 1.5], [50.0, 20.0, 50.0]),
        ("B", vec![-1.5, -0.9, 0.9, 1.35], [40.0, 15.0, 30.0]),
        ("C", vec![-1.2, -0.75, 0.75, 1.2], [60.0, 15.0, 55.0]),
    ]
    .into_iter()
    .map(|(name, bps, h)| (name, PiecewisePotential::from_inner(bps, &h).unwrap()))
    .collect()
}

/// Double barrier deep enough for four quasi-bound states.
pub fn four_state_barrier() -> PiecewisePotential {
    PiecewisePotential::from_inner(vec![-1.5, -0.9, 0.9, 1.5], &[80.0, 10.0, 80.0]).unwrap()
}

pub fn unit_kinetic() -> KineticSpec {
    KineticSpec::new(1.0).unwrap()
}

pub fn sampled(pot: &PiecewisePotential, spacing: f64, half_width: f64) -> PesCurve {
    cavres::commands::piecewise_curve(pot, spacing, half_width).unwrap()
}

/// Relative error of `a` against reference `b`, per component.
pub fn rel_parts(a: cavres::linalg::C64, b: cavres::linalg::C64) -> (f64, f64) {
    (
        (a.re - b.re).abs() / b.re.abs(),
        (a.im - b.im).abs() / b.im.abs(),
    )
}
