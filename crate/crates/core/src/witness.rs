//! The entanglement witness `W = X_A Z_B + Z_A X_B` on the two path qubits,
//! evaluated exactly or estimated from simulated single-shot spin readouts.
//!
//! `|⟨W⟩| ≤ 1` on every separable state while the graph state reaches 2, so a
//! sampled value whose error bar sits above 1 certifies path entanglement.
//!
//! Two readout schemes are supported. Before recombination ([`run_strategy1`])
//! the spin of one probe reveals its path; the partner is then recombined on
//! its own and its spin measured along x. After recombination
//! ([`run_strategy2`]) both spins carry the full path information and are
//! measured directly. Each shot estimates one of the two witness terms,
//! alternating `Z_A X_B`, `X_A Z_B`, `Z_A X_B`, ...

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{path_state, splitter, DisplacedSpin, ProtocolError, Snapshot};
use crate::qstate::{
    embed, gates, partial_trace, sample_index, DensityMatrix, Observable, ProjectiveBasis,
    PureState, QStateError, QuantumState, PATH_A, PATH_B, SPIN_A, SPIN_B,
};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("witness needs a 4- or 16-dimensional state, got dims {0:?}")]
    Dimension(Vec<usize>),
    #[error("at least 2 shots are needed for an error estimate, got {0}")]
    TooFewShots(u64),
    #[error("snapshot is already recombined; this strategy reads out split paths")]
    AlreadyRecombined,
    #[error("paths are not recombined: population of |00⟩ is {0}")]
    NotRecombined(f64),
    #[error("readout fidelity must lie in [0, 1], got {0}")]
    InvalidFidelity(f64),
    #[error("conditioning outcome has probability {0:e}")]
    ZeroProbability(f64),
    #[error(transparent)]
    QState(#[from] QStateError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

pub type Result<T> = std::result::Result<T, WitnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Exact,
    Strategy1,
    Strategy2,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Exact => "exact",
            Strategy::Strategy1 => "strategy1",
            Strategy::Strategy2 => "strategy2",
        }
    }
}

/// One of the two witness terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    /// `Z_A X_B`: probe A is read in z, probe B in x.
    #[serde(rename = "ZA_XB")]
    ZaXb,
    /// `X_A Z_B`.
    #[serde(rename = "XA_ZB")]
    XaZb,
}

impl Term {
    /// Even shots sample `Z_A X_B`, odd shots `X_A Z_B`.
    pub fn of_shot(shot: u64) -> Self {
        if shot.is_multiple_of(2) {
            Term::ZaXb
        } else {
            Term::XaZb
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    A,
    B,
}

impl Probe {
    pub fn spin(self) -> usize {
        match self {
            Probe::A => SPIN_A,
            Probe::B => SPIN_B,
        }
    }

    pub fn path(self) -> usize {
        match self {
            Probe::A => PATH_A,
            Probe::B => PATH_B,
        }
    }

    pub fn partner(self) -> Self {
        match self {
            Probe::A => Probe::B,
            Probe::B => Probe::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessEstimate<T> {
    pub value: T,
    /// Zero exactly for [`Strategy::Exact`].
    pub stderr: T,
    /// Number of sampled shots; 0 for an exact evaluation.
    pub shots: u64,
    pub strategy: Strategy,
}

/// One simulated shot. Outcomes are `±1` eigenvalues of the path observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub shot: u64,
    pub strategy: Strategy,
    pub term: Term,
    #[serde(rename = "outcome_A")]
    pub outcome_a: i8,
    #[serde(rename = "outcome_B")]
    pub outcome_b: i8,
    pub product: i8,
}

/// Symmetric readout error: each spin outcome is reported flipped with
/// probability `1 − fidelity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Readout {
    fidelity: f64,
}

impl Readout {
    pub const IDEAL: Readout = Readout { fidelity: 1.0 };

    pub fn new(fidelity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fidelity) {
            return Err(WitnessError::InvalidFidelity(fidelity));
        }
        Ok(Self { fidelity })
    }

    pub fn fidelity(self) -> f64 {
        self.fidelity
    }
}

impl Default for Readout {
    fn default() -> Self {
        Self::IDEAL
    }
}

/// `X ⊗ Z + Z ⊗ X` on two qubits.
pub fn witness_operator<T: Real>() -> Observable<T> {
    let xz = Observable::product(&[gates::pauli_x(), gates::pauli_z()]).expect("Pauli product");
    let zx = Observable::product(&[gates::pauli_z(), gates::pauli_x()]).expect("Pauli product");
    &xz + &zx
}

/// `⟨X_A Z_B + Z_A X_B⟩` on a two-qubit path state, or on the path qubits of
/// a split 16-dimensional protocol state.
pub fn witness_exact<T: Real>(rho: &DensityMatrix<T>) -> Result<WitnessEstimate<T>> {
    let paths = match rho.dims() {
        [2, 2] => rho.clone(),
        [2, 2, 2, 2] => path_state(rho)?,
        dims => return Err(WitnessError::Dimension(dims.to_vec())),
    };
    Ok(WitnessEstimate {
        value: paths.expectation(&witness_operator())?,
        stderr: T::zero(),
        shots: 0,
        strategy: Strategy::Exact,
    })
}

/// Exact witness of a snapshot. A recombined snapshot is split again with
/// the same gradient so the path qubits can be read off.
pub fn witness_snapshot<T: Real>(snapshot: &Snapshot<T>) -> Result<WitnessEstimate<T>> {
    if !snapshot.recombined {
        return witness_exact(&snapshot.state);
    }
    let split = splitter::<T>(snapshot.displaced);
    let resplit = snapshot
        .state
        .apply_unitary(&split, &[SPIN_A, PATH_A])?
        .apply_unitary(&split, &[SPIN_B, PATH_B])?;
    witness_exact(&resplit)
}

/// State of the partner probe's `(spin, path)` after the spin of `measured`
/// is found in z-basis state `outcome` (0 = `|↑⟩`, 1 = `|↓⟩`).
pub fn relative_state<T: Real>(
    rho: &DensityMatrix<T>,
    measured: Probe,
    outcome: usize,
) -> Result<DensityMatrix<T>> {
    if rho.dims() != [2, 2, 2, 2] {
        return Err(WitnessError::Dimension(rho.dims().to_vec()));
    }
    let z = ProjectiveBasis::<T>::z();
    let projector = z
        .projectors()
        .get(outcome)
        .ok_or(QStateError::SubsystemOutOfRange {
            index: outcome,
            count: 2,
        })?;
    let (p, post) = rho.condition(&embed(projector, rho.dims(), &[measured.spin()])?)?;
    let post = post
        .filter(|_| p > T::lit(1e-12))
        .ok_or(WitnessError::ZeroProbability(p.as_f64()))?;
    let partner = measured.partner();
    Ok(partial_trace(&post, &[partner.spin(), partner.path()])?)
}

/// Maximally entangled split state
/// `½[|↑0⟩(|↑0⟩+|↓1⟩) + |↓1⟩(|↑0⟩−|↓1⟩)]`, in which `|↓⟩` rides on path 1.
pub fn reference_phi<T: Real>() -> PureState<T> {
    let mut amps = [0.0; 16];
    amps[0] = 0.5;
    amps[3] = 0.5;
    amps[12] = 0.5;
    amps[15] = -0.5;
    PureState::from_real(&amps, vec![2, 2, 2, 2]).expect("normalised")
}

/// [`reference_phi`] after both probes are recombined:
/// `½[|↑⟩(|↑⟩+|↓⟩) + |↓⟩(|↑⟩−|↓⟩)] ⊗ |00⟩`.
pub fn reference_phi_prime<T: Real>() -> PureState<T> {
    let mut amps = [0.0; 16];
    amps[0] = 0.5;
    amps[2] = 0.5;
    amps[8] = 0.5;
    amps[10] = -0.5;
    PureState::from_real(&amps, vec![2, 2, 2, 2]).expect("normalised")
}

/// Running sums of one witness term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TermTally {
    pub shots: u64,
    /// Sum of the `±1` products.
    pub sum: i64,
}

/// Accumulated shots of one strategy; shards merge by addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub strategy: Strategy,
    pub za_xb: TermTally,
    pub xa_zb: TermTally,
}

impl Tally {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            za_xb: TermTally::default(),
            xa_zb: TermTally::default(),
        }
    }

    pub fn shots(&self) -> u64 {
        self.za_xb.shots + self.xa_zb.shots
    }

    pub fn merge(&mut self, other: &Tally) {
        debug_assert_eq!(self.strategy, other.strategy);
        self.za_xb.shots += other.za_xb.shots;
        self.za_xb.sum += other.za_xb.sum;
        self.xa_zb.shots += other.xa_zb.shots;
        self.xa_zb.sum += other.xa_zb.sum;
    }

    fn record(&mut self, term: Term, product: i8) {
        let t = match term {
            Term::ZaXb => &mut self.za_xb,
            Term::XaZb => &mut self.xa_zb,
        };
        t.shots += 1;
        t.sum += i64::from(product);
    }

    /// Sum of the two term means. The error bar uses the binomial bound
    /// `Var ≤ 1` for a `±1` variable, so `stderr = √(1/n₁ + 1/n₂)`, which is
    /// `2/√shots` for an even split. The plug-in variance would vanish on
    /// perfectly correlated data and report a false certainty.
    pub fn estimate<T: Real>(&self) -> Result<WitnessEstimate<T>> {
        let shots = self.shots();
        if shots < 2 || self.za_xb.shots == 0 || self.xa_zb.shots == 0 {
            return Err(WitnessError::TooFewShots(shots));
        }
        let n1 = self.za_xb.shots as f64;
        let n2 = self.xa_zb.shots as f64;
        let value = self.za_xb.sum as f64 / n1 + self.xa_zb.sum as f64 / n2;
        Ok(WitnessEstimate {
            value: T::lit(value),
            stderr: T::lit((1.0 / n1 + 1.0 / n2).sqrt()),
            shots,
            strategy: self.strategy,
        })
    }
}

/// Exact outcome distributions of both witness terms for one strategy,
/// computed once and then sampled shot by shot.
///
/// Entry `2·a + b` of each table is the probability of `(outcome_A,
/// outcome_B) = ((−1)^a, (−1)^b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSampler {
    strategy: Strategy,
    za_xb: [f64; 4],
    xa_zb: [f64; 4],
}

impl WitnessSampler {
    /// Readout before recombination: z on one spin (a path proxy), then
    /// recombine the partner alone and read its spin along x.
    pub fn strategy1<T: Real>(snapshot: &Snapshot<T>) -> Result<Self> {
        if snapshot.recombined {
            return Err(WitnessError::AlreadyRecombined);
        }
        Self::build(Strategy::Strategy1, snapshot, true)
    }

    /// Readout after recombination: z and x directly on the two spins.
    pub fn strategy2<T: Real>(snapshot: &Snapshot<T>) -> Result<Self> {
        let paths = partial_trace(&snapshot.state, &[PATH_A, PATH_B])?;
        let population = paths.entries()[(0, 0)].re.as_f64();
        if population < 1.0 - 1e-8 {
            return Err(WitnessError::NotRecombined(population));
        }
        Self::build(Strategy::Strategy2, snapshot, false)
    }

    fn build<T: Real>(strategy: Strategy, snapshot: &Snapshot<T>, recombine: bool) -> Result<Self> {
        if snapshot.state.dims() != [2, 2, 2, 2] {
            return Err(WitnessError::Dimension(snapshot.state.dims().to_vec()));
        }
        let za_xb = joint_table(snapshot, Probe::A, recombine)?;
        let by_b = joint_table(snapshot, Probe::B, recombine)?;
        // by_b is indexed (z_B, x_A); reorder to (A, B).
        let xa_zb = [by_b[0], by_b[2], by_b[1], by_b[3]];
        Ok(Self {
            strategy,
            za_xb,
            xa_zb,
        })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Exact mean of the sampled estimator under a given readout fidelity.
    pub fn expected_value(&self, readout: Readout) -> f64 {
        let mean = |t: &[f64; 4]| t[0] - t[1] - t[2] + t[3];
        let shrink = (2.0 * readout.fidelity - 1.0).powi(2);
        shrink * (mean(&self.za_xb) + mean(&self.xa_zb))
    }

    /// Simulates the shots with global indices `shots` and optionally
    /// appends one record per shot to `sink`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        shots: Range<u64>,
        readout: Readout,
        rng: &mut R,
        mut sink: Option<&mut Vec<MeasurementRecord>>,
    ) -> Tally {
        let mut tally = Tally::new(self.strategy);
        let flip_p = 1.0 - readout.fidelity;
        for shot in shots {
            let term = Term::of_shot(shot);
            let table = match term {
                Term::ZaXb => &self.za_xb,
                Term::XaZb => &self.xa_zb,
            };
            let k = sample_index(table, rng);
            let mut a: i8 = if k & 2 == 0 { 1 } else { -1 };
            let mut b: i8 = if k & 1 == 0 { 1 } else { -1 };
            if flip_p > 0.0 {
                if rng.random::<f64>() < flip_p {
                    a = -a;
                }
                if rng.random::<f64>() < flip_p {
                    b = -b;
                }
            }
            let product = a * b;
            tally.record(term, product);
            if let Some(out) = sink.as_deref_mut() {
                out.push(MeasurementRecord {
                    shot,
                    strategy: self.strategy,
                    term,
                    outcome_a: a,
                    outcome_b: b,
                    product,
                });
            }
        }
        tally
    }
}

/// Joint distribution of (path z of `measured`, path x of its partner),
/// indexed `2·z + x` with bit 0 meaning eigenvalue `+1`.
fn joint_table<T: Real>(
    snapshot: &Snapshot<T>,
    measured: Probe,
    recombine: bool,
) -> Result<[f64; 4]> {
    let partner = measured.partner();
    let labels = snapshot.displaced;
    let split = splitter::<T>(labels);
    let mut table = [0.0; 4];
    let z_branches = ProjectiveBasis::<T>::z().branches(&snapshot.state, &[measured.spin()])?;
    for (spin, (p, post)) in z_branches.into_iter().enumerate() {
        let Some(post) = post else { continue };
        let post = if recombine {
            post.apply_unitary(&split, &[partner.spin(), partner.path()])?
        } else {
            post
        };
        let z_bit = usize::from(labels.path_sign(spin) < 0);
        let x_branches = ProjectiveBasis::<T>::x().branches(&post, &[partner.spin()])?;
        for (x_bit, (q, _)) in x_branches.into_iter().enumerate() {
            table[2 * z_bit + x_bit] += (p * q).as_f64().max(0.0);
        }
    }
    Ok(table)
}

fn run<T: Real, R: Rng + ?Sized>(
    sampler: &WitnessSampler,
    shots: u64,
    readout: Readout,
    rng: &mut R,
) -> Result<WitnessEstimate<T>> {
    if shots < 2 {
        return Err(WitnessError::TooFewShots(shots));
    }
    sampler.sample(0..shots, readout, rng, None).estimate()
}

/// Strategy 1 on a snapshot taken before recombination, ideal readout.
pub fn run_strategy1<T: Real, R: Rng + ?Sized>(
    snapshot: &Snapshot<T>,
    shots: u64,
    rng: &mut R,
) -> Result<WitnessEstimate<T>> {
    run(
        &WitnessSampler::strategy1(snapshot)?,
        shots,
        Readout::IDEAL,
        rng,
    )
}

/// Strategy 2 on a recombined snapshot, ideal readout.
pub fn run_strategy2<T: Real, R: Rng + ?Sized>(
    snapshot: &Snapshot<T>,
    shots: u64,
    rng: &mut R,
) -> Result<WitnessEstimate<T>> {
    run(
        &WitnessSampler::strategy2(snapshot)?,
        shots,
        Readout::IDEAL,
        rng,
    )
}

/// Snapshot of [`reference_phi`] (`|↓⟩` displaced, paths split).
pub fn reference_snapshot<T: Real>() -> Snapshot<T> {
    Snapshot {
        state: reference_phi().to_density(),
        displaced: DisplacedSpin::Down,
        recombined: false,
    }
}
