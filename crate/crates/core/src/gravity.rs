//! Gravitational phases from branch geometry, the mode-sum recovery of the
//! Newtonian rate, per-mode field displacements and the Casimir-Polder gate.

use serde::Serialize;
use thiserror::Error;

use crate::constants::{C as LIGHT_SPEED, CASIMIR_POLDER_MIN_DISTANCE, G, HBAR};
use crate::scalar::{cis, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GravityError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("branch separation s = {s} must satisfy 0 < s < d = {d}")]
    InvalidGeometry { d: f64, s: f64 },
    #[error("mode frequency is zero")]
    ZeroFrequency,
    #[error(
        "cutoff too small: truncation bound 1/(Λ·Δx) = {bound:e} exceeds tolerance {tolerance:e}"
    )]
    CutoffTooSmall { bound: f64, tolerance: f64 },
    #[error("at least {min} quadrature points required, got {got}")]
    TooFewPoints { min: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, GravityError>;

fn positive<T: Real>(name: &'static str, value: T) -> Result<T> {
    if value > T::zero() {
        Ok(value)
    } else {
        Err(GravityError::NonPositive {
            name,
            value: value.as_f64(),
        })
    }
}

/// Collinear two-interferometer geometry.
///
/// Both superpositions are split by `s` along the axis joining the probes, so
/// the closest, farthest and reference pair distances are `d − s`, `d + s`
/// and `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchGeometry<T> {
    d: T,
    s: T,
}

impl<T: Real> BranchGeometry<T> {
    pub fn new(d: T, s: T) -> Result<Self> {
        positive("d", d)?;
        if !(s > T::zero() && s < d) {
            return Err(GravityError::InvalidGeometry {
                d: d.as_f64(),
                s: s.as_f64(),
            });
        }
        Ok(Self { d, s })
    }

    pub fn d(&self) -> T {
        self.d
    }

    pub fn s(&self) -> T {
        self.s
    }

    /// Closest branch pair.
    pub fn d1(&self) -> T {
        self.d - self.s
    }

    /// Farthest branch pair.
    pub fn d2(&self) -> T {
        self.d + self.s
    }

    /// Reference pair (both upper or both lower arms).
    pub fn d3(&self) -> T {
        self.d
    }
}

/// Branch phases `φ₁, φ₂, φ₃` and the relative phases `Δφⱼ = φⱼ − φ₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSet<T> {
    pub phi1: T,
    pub phi2: T,
    pub phi3: T,
    pub dphi1: T,
    pub dphi2: T,
}

impl<T: Real> PhaseSet<T> {
    /// Builds the set from relative phases alone, with `φ₃ = 0`.
    pub fn from_relative(dphi1: T, dphi2: T) -> Self {
        Self {
            phi1: dphi1,
            phi2: dphi2,
            phi3: T::zero(),
            dphi1,
            dphi2,
        }
    }

    /// `Δφ₁ + Δφ₂`, the only combination that entangles.
    pub fn entangling_phase(&self) -> T {
        self.dphi1 + self.dphi2
    }
}

/// `G m² t / (ħ d)`.
pub fn pairwise_phase<T: Real>(mass: T, distance: T, time: T) -> Result<T> {
    positive("mass", mass)?;
    positive("distance", distance)?;
    if time < T::zero() {
        return Err(GravityError::Negative {
            name: "time",
            value: time.as_f64(),
        });
    }
    // G/ħ first keeps intermediates inside the f32 exponent range.
    Ok(T::lit(G / HBAR) * mass * mass * time / distance)
}

/// Phase accumulation rate `G m² / (ħ d)` in rad/s.
pub fn pairwise_rate<T: Real>(mass: T, distance: T) -> Result<T> {
    pairwise_phase(mass, distance, T::one())
}

pub fn phase_set<T: Real>(geom: &BranchGeometry<T>, mass: T, time: T) -> Result<PhaseSet<T>> {
    let phi1 = pairwise_phase(mass, geom.d1(), time)?;
    let phi2 = pairwise_phase(mass, geom.d2(), time)?;
    let phi3 = pairwise_phase(mass, geom.d3(), time)?;
    Ok(PhaseSet {
        phi1,
        phi2,
        phi3,
        dphi1: phi1 - phi3,
        dphi2: phi2 - phi3,
    })
}

/// A single gravitational field mode coupled to a probe of mass `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCoupling<T> {
    pub k: T,
    pub omega_k: T,
    pub g_k: T,
    pub volume: T,
    pub mass: T,
}

impl<T: Real> ModeCoupling<T> {
    /// Massless dispersion `ω = c k`, coupling `g = m c √(2πG / (ħ ω V))`.
    pub fn new(k: T, volume: T, mass: T) -> Result<Self> {
        positive("k", k)?;
        positive("volume", volume)?;
        positive("mass", mass)?;
        let c = T::lit(LIGHT_SPEED);
        let omega_k = c * k;
        let g_k =
            mass * c * (T::lit(2.0 * std::f64::consts::PI * G / HBAR) / (omega_k * volume)).sqrt();
        Ok(Self {
            k,
            omega_k,
            g_k,
            volume,
            mass,
        })
    }
}

/// Coherent displacement `α_k = (g_k/ω_k)(e^{−ik x_A} + e^{ik x_B})` of the
/// mode sourced by probes at `x_a` and `x_b`.
pub fn field_displacement<T: Real>(mode: &ModeCoupling<T>, x_a: T, x_b: T) -> Result<C<T>> {
    if mode.omega_k == T::zero() {
        return Err(GravityError::ZeroFrequency);
    }
    let ratio = mode.g_k / mode.omega_k;
    Ok((cis(-mode.k * x_a) + cis(mode.k * x_b)).scale(ratio))
}

/// Settings for the radial quadrature of the continuum mode integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeQuadrature {
    /// Dimensionless cutoff `Λ·Δx`.
    pub cutoff: f64,
    pub n_points: usize,
    /// Largest admissible relative truncation bound `1/(Λ·Δx)`.
    pub tolerance: f64,
    /// Average the running integral over the last oscillation period.
    pub cesaro: bool,
}

impl ModeQuadrature {
    pub const MIN_POINTS: usize = 10_000;
    pub const MIN_CUTOFF: f64 = 50.0;

    pub fn new(cutoff: f64) -> Self {
        Self {
            cutoff,
            n_points: Self::MIN_POINTS.max((40.0 * cutoff).ceil() as usize),
            tolerance: 1.0 / Self::MIN_CUTOFF,
            cesaro: true,
        }
    }
}

fn sinc<T: Real>(u: T) -> T {
    if u.abs() < T::lit(1e-8) {
        T::one()
    } else {
        u.sin() / u
    }
}

/// `(2/π) ∫₀^U sin(u)/u du` by composite midpoint, optionally Cesàro-averaged
/// over the final period `[U − 2π, U]`.
pub fn radial_mode_integral<T: Real>(cutoff: T, n_points: usize, cesaro: bool) -> T {
    let h = cutoff / T::lit(n_points as f64);
    let two_pi = T::two_pi();
    let mut running = T::zero();
    // ∫ over the window of the piecewise-linear running integral.
    let window_start = cutoff - two_pi;
    let mut window_area = T::zero();
    let half = T::lit(0.5);
    for k in 0..n_points {
        let lo = h * T::lit(k as f64);
        let hi = lo + h;
        let next = running + h * sinc(lo + h * half);
        if cesaro && hi > window_start {
            let from = lo.max(window_start);
            let frac = (from - lo) / h;
            let start_val = running + (next - running) * frac;
            window_area += (hi - from) * (start_val + next) * half;
        }
        running = next;
    }
    let integral = if cesaro {
        window_area / two_pi
    } else {
        running
    };
    integral * T::lit(2.0) / T::pi()
}

/// Rate `(Gm²/ħ)(2/π)∫₀^Λ sinc(k Δx) dk`, which tends to `Gm²/(ħΔx)` as
/// `Λ → ∞`.
pub fn newtonian_from_modes<T: Real>(mass: T, separation: T, quad: &ModeQuadrature) -> Result<T> {
    positive("mass", mass)?;
    positive("separation", separation)?;
    let bound = 1.0 / quad.cutoff;
    if !(quad.cutoff >= ModeQuadrature::MIN_CUTOFF) || bound > quad.tolerance {
        return Err(GravityError::CutoffTooSmall {
            bound,
            tolerance: quad.tolerance.min(1.0 / ModeQuadrature::MIN_CUTOFF),
        });
    }
    if quad.n_points < ModeQuadrature::MIN_POINTS {
        return Err(GravityError::TooFewPoints {
            min: ModeQuadrature::MIN_POINTS,
            got: quad.n_points,
        });
    }
    // Substituting u = kΔx pulls out 1/Δx.
    let shape = radial_mode_integral(T::lit(quad.cutoff), quad.n_points, quad.cesaro);
    Ok(T::lit(G / HBAR) * mass * mass / separation * shape)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CasimirVerdict {
    pub pass: bool,
    pub d1_m: f64,
    pub threshold_m: f64,
    /// `d1 − threshold`; zero when the two agree to rounding.
    pub margin_m: f64,
}

/// Gravity dominates Casimir-Polder coupling iff the closest branches are at
/// least 200 μm apart.
pub fn casimir_gate<T: Real>(d1: T) -> CasimirVerdict {
    let d1 = d1.as_f64();
    let threshold = CASIMIR_POLDER_MIN_DISTANCE;
    let mut margin = d1 - threshold;
    if margin.abs() <= 1e-12 * threshold {
        margin = 0.0;
    }
    CasimirVerdict {
        pass: margin >= 0.0,
        d1_m: d1,
        threshold_m: threshold,
        margin_m: margin,
    }
}
