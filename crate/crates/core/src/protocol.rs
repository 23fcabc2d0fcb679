//! Stage machine for the trapped two-nanodiamond interferometer.
//!
//! The 16-dimensional protocol state is ordered `(spin_A, path_A, spin_B,
//! path_B)`. Spin basis index 0 is `|↑⟩`, index 1 is `|↓⟩`; path index 0 is
//! the undisplaced branch. Stages run in a fixed order:
//!
//! 1. preparation: Hadamard on each spin, from `|↑0⟩|↑0⟩`;
//! 2. splitting: the gradient displaces one spin component onto path 1;
//! 3. gravitational stage: diagonal branch phases, interleaved with
//!    dynamical-decoupling π pulses;
//! 4. dephasing of each path coherence by `e^{−t/T₂}`;
//! 5. recombination: the inverse of splitting under the current gradient sign.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::MU0;
use crate::gravity::{casimir_gate, phase_set, BranchGeometry, GravityError, PhaseSet};
use crate::qstate::{
    gates, partial_trace, CMatrix, DensityMatrix, PureState, QStateError, QuantumState, PATH_A,
    PATH_B, SPIN_A, SPIN_B,
};
use crate::scalar::{cis, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid trap parameter: {0}")]
    InvalidTrap(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("oscillation frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("no decoupling pulse fits in {duration} s at period {period} s")]
    NoPulses { duration: f64, period: f64 },
    #[error("stage {next:?} cannot follow {previous:?}")]
    StageOrder { previous: Stage, next: Stage },
    #[error("stage {stage:?} left trace {trace}")]
    TraceDrift { stage: Stage, trace: f64 },
    #[error(transparent)]
    Gravity(#[from] GravityError),
    #[error(transparent)]
    QState(#[from] QStateError),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// Magnetic trap acting on a nanodiamond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapParams<T> {
    /// Field gradient `B'`, T/m.
    pub b_prime: T,
    /// Bias field `B₀`, T. Sets the equilibrium position only.
    pub b0: T,
    /// Volume magnetic susceptibility.
    pub chi: T,
    /// Nanodiamond density, kg/m³.
    pub rho_nd: T,
}

impl<T: Real> TrapParams<T> {
    pub fn new(b_prime: T, b0: T, chi: T, rho_nd: T) -> Result<Self> {
        if !(b_prime > T::zero()) {
            return Err(ProtocolError::InvalidTrap("gradient must be positive"));
        }
        if !(rho_nd > T::zero()) {
            return Err(ProtocolError::InvalidTrap("density must be positive"));
        }
        if chi == T::zero() || !chi.is_finite() {
            return Err(ProtocolError::InvalidTrap(
                "susceptibility must be non-zero",
            ));
        }
        Ok(Self {
            b_prime,
            b0,
            chi,
            rho_nd,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapFrequency<T> {
    /// Angular frequency, rad/s.
    pub omega: T,
    /// Set when the susceptibility is negative; `|χ|` was used.
    pub diamagnetic: bool,
}

/// `ω = B' √(|χ| / (μ₀ ρ))`.
pub fn trap_frequency<T: Real>(trap: &TrapParams<T>) -> TrapFrequency<T> {
    let omega = trap.b_prime * (trap.chi.abs() / (T::lit(MU0) * trap.rho_nd)).sqrt();
    TrapFrequency {
        omega,
        diamagnetic: trap.chi < T::zero(),
    }
}

/// Half an oscillation period: the branches are at maximal separation with
/// zero velocity.
pub fn split_time<T: Real>(omega: T) -> Result<T> {
    if !(omega > T::zero()) {
        return Err(ProtocolError::NonPositiveFrequency(omega.as_f64()));
    }
    Ok(T::pi() / omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pulse<T> {
    pub time: T,
    /// Every π pulse is accompanied by a sign flip of `B'`.
    pub gradient_flip: bool,
}

/// Pulse train at `ω_DD = nω`: one pulse at the midpoint of every complete
/// period `2π/(nω)` inside `[0, duration]`.
pub fn dd_schedule<T: Real>(n: u32, omega: T, duration: T) -> Result<Vec<Pulse<T>>> {
    if n == 0 {
        return Err(ProtocolError::InvalidConfig(
            "pulse count must be at least 1".into(),
        ));
    }
    if !(omega > T::zero()) {
        return Err(ProtocolError::NonPositiveFrequency(omega.as_f64()));
    }
    let period = T::two_pi() / (T::lit(n as f64) * omega);
    let count = (duration / period).floor().as_f64();
    if !(duration > T::zero()) || !(count >= 1.0) {
        return Err(ProtocolError::NoPulses {
            duration: duration.as_f64(),
            period: period.as_f64(),
        });
    }
    let half = T::lit(0.5);
    Ok((0..count as usize)
        .map(|k| Pulse {
            time: (T::lit(k as f64) + half) * period,
            gradient_flip: true,
        })
        .collect())
}

/// Frame in which the gravitational branch phases are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PhaseConvention {
    /// Raw branch phases `(0, Δφ₁, Δφ₂, 0)` on `|00⟩, |01⟩, |10⟩, |11⟩`.
    #[default]
    #[serde(rename = "eq1")]
    Branch,
    /// Local phase gates `diag(1, e^{−iΔφ₂})` on path A and
    /// `diag(1, e^{−iΔφ₁})` on path B follow the gravitational stage, leaving
    /// `(0, 0, 0, −(Δφ₁+Δφ₂))`. At `Δφ₁+Δφ₂ = π` this is the graph state whose
    /// witness `X_A Z_B + Z_A X_B` reaches 2.
    #[serde(rename = "eq5")]
    Compensated,
}

/// Which spin component the gradient pushes onto path 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DisplacedSpin {
    Up,
    Down,
}

impl DisplacedSpin {
    pub fn index(self) -> usize {
        match self {
            DisplacedSpin::Up => 0,
            DisplacedSpin::Down => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            DisplacedSpin::Up => DisplacedSpin::Down,
            DisplacedSpin::Down => DisplacedSpin::Up,
        }
    }

    /// Path eigenvalue (`Z = +1` on path 0) tagged by spin basis index `spin`.
    pub fn path_sign(self, spin: usize) -> i8 {
        if spin == self.index() {
            -1
        } else {
            1
        }
    }
}

/// Probe-local splitter on `(spin, path)`: flips the path of the displaced
/// spin component. It is its own inverse.
pub fn splitter<T: Real>(displaced: DisplacedSpin) -> CMatrix<T> {
    let mut u = CMatrix::<T>::identity(4, 4);
    let base = 2 * displaced.index();
    u.swap_rows(base, base + 1);
    u
}

/// Controlled-NOT from path (control) onto spin (target), on `(spin, path)`.
/// Moves a spin-tagged path qubit into a product with the spin.
fn path_disentangler<T: Real>() -> CMatrix<T> {
    let mut u = CMatrix::<T>::identity(4, 4);
    // |s,1⟩ ↔ |1−s,1⟩: indices 1 and 3.
    u.swap_rows(1, 3);
    u
}

/// Two-qubit path state carried by a spin-tagged protocol state.
pub fn path_state<T: Real>(rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    if rho.dims() != [2, 2, 2, 2] {
        return Err(QStateError::DimensionMismatch {
            expected: 16,
            found: rho.dim(),
        }
        .into());
    }
    let cnot = path_disentangler::<T>();
    let untagged = rho
        .apply_unitary(&cnot, &[SPIN_A, PATH_A])?
        .apply_unitary(&cnot, &[SPIN_B, PATH_B])?;
    Ok(partial_trace(&untagged, &[PATH_A, PATH_B])?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolConfig<T> {
    pub mass: T,
    pub geometry: BranchGeometry<T>,
    pub trap: TrapParams<T>,
    /// Duration of the gradient-off stage, s.
    pub t_grav: T,
    pub n_dd: u32,
    /// Path coherence time, s; `∞` disables dephasing.
    pub t2_path: T,
    pub convention: PhaseConvention,
    /// Replaces the geometric phases with `(Δφ₁, Δφ₂)` accumulated over
    /// `t_grav`.
    pub phase_override: Option<(T, T)>,
}

impl<T: Real> ProtocolConfig<T> {
    pub fn new(mass: T, geometry: BranchGeometry<T>, trap: TrapParams<T>, t_grav: T) -> Self {
        Self {
            mass,
            geometry,
            trap,
            t_grav,
            n_dd: 0,
            t2_path: T::lit(f64::INFINITY),
            convention: PhaseConvention::default(),
            phase_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > T::zero()) {
            return Err(ProtocolError::InvalidConfig("mass must be positive".into()));
        }
        if !(self.t_grav >= T::zero()) || !self.t_grav.is_finite() {
            return Err(ProtocolError::InvalidConfig(
                "t_grav must be finite and non-negative".into(),
            ));
        }
        if !(self.t2_path > T::zero()) {
            return Err(ProtocolError::InvalidConfig(
                "t2_path must be positive".into(),
            ));
        }
        TrapParams::new(
            self.trap.b_prime,
            self.trap.b0,
            self.trap.chi,
            self.trap.rho_nd,
        )?;
        BranchGeometry::new(self.geometry.d(), self.geometry.s())?;
        Ok(())
    }

    pub fn phases(&self) -> Result<PhaseSet<T>> {
        match self.phase_override {
            Some((a, b)) => Ok(PhaseSet::from_relative(a, b)),
            None => Ok(phase_set(&self.geometry, self.mass, self.t_grav)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Stage {
    Preparation,
    Splitting,
    Gravitational,
    Dephasing,
    Recombination,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub start: f64,
    pub duration: f64,
    pub trace: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseRecord {
    pub time: f64,
    pub spin_flip: bool,
    pub gradient_flip: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageLog {
    pub stages: Vec<StageRecord>,
    pub pulses: Vec<PulseRecord>,
    pub warnings: Vec<String>,
}

impl StageLog {
    fn push(
        &mut self,
        stage: Stage,
        start: f64,
        duration: f64,
        trace: f64,
        tol: f64,
    ) -> Result<()> {
        if let Some(prev) = self.stages.last() {
            if prev.stage >= stage {
                return Err(ProtocolError::StageOrder {
                    previous: prev.stage,
                    next: stage,
                });
            }
        }
        if (trace - 1.0).abs() > tol {
            return Err(ProtocolError::TraceDrift { stage, trace });
        }
        self.stages.push(StageRecord {
            stage,
            start,
            duration,
            trace,
        });
        Ok(())
    }

    pub fn end_time(&self) -> f64 {
        self.stages.last().map_or(0.0, |s| s.start + s.duration)
    }
}

/// A protocol state together with the spin labelling of its paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T: Real> {
    pub state: DensityMatrix<T>,
    pub displaced: DisplacedSpin,
    pub recombined: bool,
}

#[derive(Debug, Clone)]
pub struct ProtocolRun<T: Real> {
    /// State entering the splitter (after preparation).
    pub initial_state: DensityMatrix<T>,
    pub pre_recombination: DensityMatrix<T>,
    pub final_state: DensityMatrix<T>,
    pub phases: PhaseSet<T>,
    /// Gradient labelling in force at recombination.
    pub displaced: DisplacedSpin,
    pub log: StageLog,
}

impl<T: Real> ProtocolRun<T> {
    pub fn before_recombination(&self) -> Snapshot<T> {
        Snapshot {
            state: self.pre_recombination.clone(),
            displaced: self.displaced,
            recombined: false,
        }
    }

    pub fn after_recombination(&self) -> Snapshot<T> {
        Snapshot {
            state: self.final_state.clone(),
            displaced: self.displaced,
            recombined: true,
        }
    }

    /// Path qubits before recombination, where the entanglement lives.
    pub fn path_state(&self) -> Result<DensityMatrix<T>> {
        path_state(&self.pre_recombination)
    }
}

fn branch_phase_gate<T: Real>(dphi1: T, dphi2: T) -> CMatrix<T> {
    let mut u = CMatrix::<T>::identity(4, 4);
    u[(1, 1)] = cis(dphi1);
    u[(2, 2)] = cis(dphi2);
    u
}

/// `|↑0⟩|↑0⟩`, before spin preparation.
pub fn vacuum_state<T: Real>() -> DensityMatrix<T> {
    PureState::basis(0, vec![2, 2, 2, 2])
        .expect("16-dimensional basis state")
        .to_density()
}

/// Prepares `(|↑⟩+|↓⟩)/√2 ⊗ |0⟩` on each probe and runs the interferometer.
pub fn run_protocol<T: Real>(config: &ProtocolConfig<T>) -> Result<ProtocolRun<T>> {
    config.validate()?;
    let h = gates::hadamard::<T>();
    let prepared = vacuum_state::<T>()
        .apply_unitary(&h, &[SPIN_A])?
        .apply_unitary(&h, &[SPIN_B])?;
    let mut log = StageLog::default();
    let tol = T::tol(1e-10).as_f64();
    log.push(Stage::Preparation, 0.0, 0.0, prepared.trace().as_f64(), tol)?;
    interferometer(config, prepared, log)
}

/// Splitting through recombination applied to an arbitrary 16-dimensional
/// input state.
pub fn run_interferometer<T: Real>(
    config: &ProtocolConfig<T>,
    input: DensityMatrix<T>,
) -> Result<ProtocolRun<T>> {
    config.validate()?;
    if input.dims() != [2, 2, 2, 2] {
        return Err(QStateError::DimensionMismatch {
            expected: 16,
            found: input.dim(),
        }
        .into());
    }
    interferometer(config, input, StageLog::default())
}

fn interferometer<T: Real>(
    config: &ProtocolConfig<T>,
    input: DensityMatrix<T>,
    mut log: StageLog,
) -> Result<ProtocolRun<T>> {
    let tol = T::tol(1e-10).as_f64();
    let gate = casimir_gate(config.geometry.d1());
    if !gate.pass {
        log.warnings.push(format!(
            "closest branch distance {:e} m is below the Casimir-Polder limit {:e} m",
            gate.d1_m, gate.threshold_m
        ));
    }
    let freq = trap_frequency(&config.trap);
    if freq.diamagnetic {
        log.warnings
            .push("negative susceptibility: trap frequency uses |chi|".to_string());
    }
    let transit = split_time(freq.omega)?.as_f64();
    let phases = config.phases()?;
    let mut clock = log.end_time();

    let mut displaced = DisplacedSpin::Up;
    let split = splitter::<T>(displaced);
    let mut rho = input
        .apply_unitary(&split, &[SPIN_A, PATH_A])?
        .apply_unitary(&split, &[SPIN_B, PATH_B])?;
    log.push(Stage::Splitting, clock, transit, rho.trace().as_f64(), tol)?;
    clock += transit;

    // Gravitational stage, segmented at the decoupling pulses.
    let t_grav = config.t_grav;
    let pulses = if config.n_dd == 0 || t_grav == T::zero() {
        Vec::new()
    } else {
        match dd_schedule(config.n_dd, freq.omega, t_grav) {
            Ok(p) => p,
            Err(e) => {
                log.warnings.push(format!("decoupling disabled: {e}"));
                Vec::new()
            }
        }
    };
    let fraction = |dt: T| {
        if t_grav > T::zero() {
            dt / t_grav
        } else {
            T::zero()
        }
    };
    let spin_flip = gates::pauli_x::<T>();
    let mut last = T::zero();
    for pulse in &pulses {
        let f = fraction(pulse.time - last);
        rho = rho.apply_unitary(
            &branch_phase_gate(phases.dphi1 * f, phases.dphi2 * f),
            &[PATH_A, PATH_B],
        )?;
        rho = rho
            .apply_unitary(&spin_flip, &[SPIN_A])?
            .apply_unitary(&spin_flip, &[SPIN_B])?;
        if pulse.gradient_flip {
            displaced = displaced.flipped();
        }
        log.pulses.push(PulseRecord {
            time: clock + pulse.time.as_f64(),
            spin_flip: true,
            gradient_flip: pulse.gradient_flip,
        });
        last = pulse.time;
    }
    let f = fraction(t_grav - last);
    rho = rho.apply_unitary(
        &branch_phase_gate(phases.dphi1 * f, phases.dphi2 * f),
        &[PATH_A, PATH_B],
    )?;
    if config.convention == PhaseConvention::Compensated {
        rho = rho
            .apply_unitary(&gates::phase(-phases.dphi2), &[PATH_A])?
            .apply_unitary(&gates::phase(-phases.dphi1), &[PATH_B])?;
    }
    if pulses.len() % 2 == 1 {
        log.warnings.push(format!(
            "odd pulse count {}: spins end flipped relative to preparation",
            pulses.len()
        ));
    }
    log.push(
        Stage::Gravitational,
        clock,
        t_grav.as_f64(),
        rho.trace().as_f64(),
        tol,
    )?;
    clock += t_grav.as_f64();

    let keep = if t_grav == T::zero() || !config.t2_path.is_finite() {
        T::one()
    } else {
        (-t_grav / config.t2_path).exp()
    };
    rho = dephase_paths(&rho, keep);
    log.push(Stage::Dephasing, clock, 0.0, rho.trace().as_f64(), tol)?;

    let pre_recombination = rho.clone();
    let merge = splitter::<T>(displaced);
    rho = rho
        .apply_unitary(&merge, &[SPIN_A, PATH_A])?
        .apply_unitary(&merge, &[SPIN_B, PATH_B])?;
    log.push(
        Stage::Recombination,
        clock,
        transit,
        rho.trace().as_f64(),
        tol,
    )?;

    Ok(ProtocolRun {
        initial_state: input,
        pre_recombination,
        final_state: rho,
        phases,
        displaced,
        log,
    })
}

/// Multiplies every coherence between different branches of one probe by
/// `keep`, independently for each probe.
pub fn dephase_paths<T: Real>(rho: &DensityMatrix<T>, keep: T) -> DensityMatrix<T> {
    if keep == T::one() {
        return rho.clone();
    }
    // bit 2 of the index is path_A, bit 0 is path_B
    rho.hadamard_scale(|i, j| {
        let mut f = T::one();
        if (i >> 2) & 1 != (j >> 2) & 1 {
            f *= keep;
        }
        if i & 1 != j & 1 {
            f *= keep;
        }
        f
    })
}
