//! Tolerance constants shared by the geometry and validation code.

/// Trigonometric and chart identities (law of cosines, reflections, on-circle checks).
pub const GEOMETRY: f64 = 1e-10;

/// Purely algebraic round trips (Möbius inverse, chart inverse, boundary placement).
pub const ALGEBRAIC: f64 = 1e-12;

/// Relative residual required from every SPD solve.
pub const SOLVE_RESIDUAL: f64 = 1e-12;

/// Minimum scaled triangle quality accepted by the mesh validator.
pub const MIN_QUALITY: f64 = 0.05;

/// Margin on the half-domain criterion when selecting reflection pairs.
pub const HALF_DOMAIN_MARGIN: f64 = 1e-8;

/// Relative zero-tolerance for Hadamard integrals at the concentric offset,
/// measured against the integral of the absolute integrand.
pub const STATIONARITY: f64 = 1e-6;
