//! Physical constants (CODATA 2018). Every module reads them from here.

/// Newtonian constant of gravitation, m³ kg⁻¹ s⁻².
pub const G: f64 = 6.674_30e-11;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;
/// Vacuum magnetic permeability, N A⁻².
pub const MU0: f64 = 1.256_637_062_12e-6;

/// Minimum closest-branch distance that keeps Casimir-Polder coupling an
/// order of magnitude below gravity, in metres.
pub const CASIMIR_POLDER_MIN_DISTANCE: f64 = 200e-6;

/// Immutable bundle of the constants above, for callers that want them as a value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PhysicalConstants {
    pub g: f64,
    pub hbar: f64,
    pub c: f64,
    pub mu0: f64,
}

pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    g: G,
    hbar: HBAR,
    c: C,
    mu0: MU0,
};
