//! Simulation of a two-nanodiamond spin interferometer in which the only
//! coupling between the masses is Newtonian gravity.
//!
//! Each nanodiamond carries an NV spin. A magnetic gradient splits it into a
//! superposition of two positions tagged by the spin, the two masses sit
//! side by side while gravity imprints branch-dependent phases, and the
//! paths are recombined. Entanglement between the two path qubits can only
//! have come from the gravitational interaction.
//!
//! * [`qstate`]: dense states, partial traces, negativity, concurrence,
//!   projective measurement.
//! * [`gravity`]: branch geometry, Newtonian phases, the mode-sum
//!   derivation of the static potential, the Casimir-Polder distance gate.
//! * [`protocol`]: trap, splitting, decoupling pulses, dephasing and
//!   recombination as a logged stage machine.
//! * [`witness`]: the witness `X_A Z_B + Z_A X_B`, exactly and by simulated
//!   single-shot readout.
//! * [`mediator`]: the classical-mediator state family and its
//!   separability scan.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod gravity;
pub mod mediator;
pub mod protocol;
pub mod qstate;
pub mod scalar;
pub mod witness;

pub use scalar::Real;

pub type DensityMatrix64 = qstate::DensityMatrix<f64>;
pub type PureState64 = qstate::PureState<f64>;
pub type Observable64 = qstate::Observable<f64>;
pub type BranchGeometry64 = gravity::BranchGeometry<f64>;
pub type PhaseSet64 = gravity::PhaseSet<f64>;
pub type TrapParams64 = protocol::TrapParams<f64>;
pub type ProtocolConfig64 = protocol::ProtocolConfig<f64>;
pub type ProtocolRun64 = protocol::ProtocolRun<f64>;
pub type Snapshot64 = protocol::Snapshot<f64>;
pub type WitnessEstimate64 = witness::WitnessEstimate<f64>;
pub type MediatorParams64 = mediator::MediatorParams<f64>;

pub type DensityMatrix32 = qstate::DensityMatrix<f32>;
pub type ProtocolConfig32 = protocol::ProtocolConfig<f32>;
