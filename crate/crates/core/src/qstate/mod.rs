//! Dense complex linear algebra for pure states and density matrices on
//! small composite Hilbert spaces.
//!
//! Subsystems are ordered as in the Kronecker product: subsystem 0 is the
//! most significant digit of a basis index. Protocol states use the fixed
//! order `(spin_A, path_A, spin_B, path_B)`, see [`SPIN_A`] and friends.

mod entanglement;
mod measure;
mod reduce;
mod state;

use nalgebra::{ComplexField, DMatrix, DVector};
use thiserror::Error;

use crate::scalar::{c, Real, C};

pub use entanglement::{concurrence, hermitian_eigenvalues, negativity, pure_concurrence};
pub(crate) use measure::sample_index;
pub use measure::{measure_projective, Measurement, ProjectiveBasis};
pub use reduce::{partial_trace, partial_transpose};
pub use state::{tensor, DensityMatrix, Observable, PureState, QuantumState, Tensor};

/// Spin of probe A in a protocol state.
pub const SPIN_A: usize = 0;
/// Path (branch label) of probe A.
pub const PATH_A: usize = 1;
/// Spin of probe B.
pub const SPIN_B: usize = 2;
/// Path of probe B.
pub const PATH_B: usize = 3;

/// Largest total Hilbert-space dimension accepted anywhere in the crate.
pub const MAX_DIM: usize = 16;

pub type CMatrix<T> = DMatrix<C<T>>;
pub type CVector<T> = DVector<C<T>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QStateError {
    #[error("invalid subsystem dimensions {0:?}: each must be at least 2")]
    InvalidDims(Vec<usize>),
    #[error("total dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    TooLarge(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("state is not normalised (norm² = {0})")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    TraceNotOne(f64),
    #[error("matrix is not positive semidefinite (minimum eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("operator is not unitary (max deviation {0:e})")]
    NonUnitary(f64),
    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },
    #[error("subsystem index {0} listed more than once")]
    DuplicateSubsystem(usize),
    #[error("subsystem list is empty")]
    EmptySubsystems,
    #[error("projectors do not form a complete orthogonal set (deviation {0:e})")]
    IncompleteBasis(f64),
    #[error("expectation value has imaginary residue {0:e}")]
    ImaginaryExpectation(f64),
    #[error("expected a two-qubit operator, found dims {0:?}")]
    NotTwoQubit(Vec<usize>),
    #[error("outcome has probability {0:e}, too small to condition on")]
    ZeroProbability(f64),
}

pub type Result<T> = std::result::Result<T, QStateError>;

pub(crate) fn validate_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(QStateError::InvalidDims(dims.to_vec()));
    }
    let total = dims.iter().product();
    if total > MAX_DIM {
        return Err(QStateError::TooLarge(total));
    }
    Ok(total)
}

pub(crate) fn validate_targets(targets: &[usize], count: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(QStateError::EmptySubsystems);
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= count {
            return Err(QStateError::SubsystemOutOfRange { index: t, count });
        }
        if targets[..i].contains(&t) {
            return Err(QStateError::DuplicateSubsystem(t));
        }
    }
    Ok(())
}

/// Mixed-radix digits of `index`, most significant first.
pub(crate) fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

pub(crate) fn compose(digits: impl IntoIterator<Item = usize>, dims: &[usize]) -> usize {
    digits
        .into_iter()
        .zip(dims)
        .fold(0, |acc, (x, &d)| acc * d + x)
}

/// Embeds `op`, acting on `targets` (in that order), into the full space.
pub fn embed<T: Real>(op: &CMatrix<T>, dims: &[usize], targets: &[usize]) -> Result<CMatrix<T>> {
    validate_targets(targets, dims.len())?;
    let target_dims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
    let sub: usize = target_dims.iter().product();
    if op.nrows() != sub || op.ncols() != sub {
        return Err(QStateError::DimensionMismatch {
            expected: sub,
            found: op.nrows(),
        });
    }
    let n: usize = dims.iter().product();
    let all: Vec<Vec<usize>> = (0..n).map(|i| digits(i, dims)).collect();
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
    let local = |ds: &[usize]| compose(targets.iter().map(|&t| ds[t]), &target_dims);

    let mut full = CMatrix::<T>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if rest.iter().all(|&k| all[i][k] == all[j][k]) {
                full[(i, j)] = op[(local(&all[i]), local(&all[j]))];
            }
        }
    }
    Ok(full)
}

pub(crate) fn max_abs<T: Real>(m: &CMatrix<T>) -> f64 {
    m.iter().map(|z| z.modulus().as_f64()).fold(0.0, f64::max)
}

pub(crate) fn hermitian_deviation<T: Real>(m: &CMatrix<T>) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub(crate) fn unitary_deviation<T: Real>(u: &CMatrix<T>) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::<T>::identity(n, n)))
}

/// Kronecker product of two complex matrices.
pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

/// Single-qubit Pauli and Clifford matrices.
pub mod gates {
    use super::*;

    pub fn identity<T: Real>(n: usize) -> CMatrix<T> {
        CMatrix::identity(n, n)
    }

    pub fn pauli_x<T: Real>() -> CMatrix<T> {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    pub fn pauli_y<T: Real>() -> CMatrix<T> {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
    }

    pub fn pauli_z<T: Real>() -> CMatrix<T> {
        CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
    }

    pub fn hadamard<T: Real>() -> CMatrix<T> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)])
    }

    /// `diag(1, e^{iθ})`.
    pub fn phase<T: Real>(theta: T) -> CMatrix<T> {
        let mut m = identity::<T>(2);
        m[(1, 1)] = crate::scalar::cis(theta);
        m
    }

    /// The three Pauli matrices as an array, `[σx, σy, σz]`.
    pub fn paulis<T: Real>() -> [CMatrix<T>; 3] {
        [pauli_x(), pauli_y(), pauli_z()]
    }
}
