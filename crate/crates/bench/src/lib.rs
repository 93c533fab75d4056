//! Shared fixtures for the criterion benchmarks.

use bulgekit::builders::quad_double_scene;
use bulgekit::scene::{GluingKit, Scene};

pub const THETA: f64 = std::f64::consts::FRAC_PI_3;
pub const BULGE: f64 = 2.45;

pub fn bulged_scene(depth: usize, samples: usize) -> Scene {
    quad_double_scene(THETA, BULGE, 7, depth, samples).expect("demo scene builds")
}

pub fn bulged_kit(depth: usize, samples: usize) -> GluingKit {
    GluingKit::compile(&bulged_scene(depth, samples)).expect("scene compiles")
}
