//! The canonical parameter set used by `verify` and the acceptance tests.

use spaceform::SpaceForm;

pub const R0: f64 = 0.3;
pub const R1: f64 = 1.0;
/// Inner radius of the second Euclidean torsion oracle.
pub const EUCLIDEAN_R0: f64 = 0.5;
pub const LEVEL: u32 = 3;
pub const DELTA: f64 = 1e-3;
/// Offset used for the derivative cross-checks.
pub const PROBE_T: f64 = 0.35;
pub const CONVERGENCE_LEVELS: std::ops::RangeInclusive<u32> = 2..=5;

/// `0, 0.1, …, 0.6`.
pub fn t_grid() -> Vec<f64> {
    (0..=6).map(|k| k as f64 / 10.0).collect()
}

/// Radii of the concentric oracle annulus for each geometry.
pub fn oracle_radii(geom: SpaceForm) -> (f64, f64) {
    match geom {
        SpaceForm::Euclidean => (EUCLIDEAN_R0, R1),
        _ => (R0, R1),
    }
}
