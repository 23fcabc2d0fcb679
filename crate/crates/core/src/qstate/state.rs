use nalgebra::ComplexField;

use super::{
    embed, hermitian_deviation, hermitian_eigenvalues, unitary_deviation, validate_dims, CMatrix,
    CVector, QStateError, Result,
};
use crate::scalar::{cr, Real, C};

/// Operations shared by pure and mixed states.
pub trait QuantumState<T: Real>: Sized + Clone {
    fn dims(&self) -> &[usize];

    fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    /// Applies `u` to `targets`, identity elsewhere.
    fn apply_unitary(&self, u: &CMatrix<T>, targets: &[usize]) -> Result<Self>;

    /// `Re⟨obs⟩`. Fails if the imaginary residue exceeds `1e-10`.
    fn expectation(&self, obs: &Observable<T>) -> Result<T>;

    /// Born probability of a full-space projector and the renormalised
    /// post-measurement state (`None` when the probability vanishes).
    fn condition(&self, projector: &CMatrix<T>) -> Result<(T, Option<Self>)>;

    fn to_density(&self) -> DensityMatrix<T>;
}

/// Kronecker product with concatenated dims; operand order is subsystem order.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

pub fn tensor<S: Tensor>(a: &S, b: &S) -> S {
    a.tensor(b)
}

fn concat(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().chain(b).copied().collect()
}

fn checked_unitary<T: Real>(
    u: &CMatrix<T>,
    dims: &[usize],
    targets: &[usize],
) -> Result<CMatrix<T>> {
    if u.nrows() != u.ncols() {
        return Err(QStateError::NotSquare {
            rows: u.nrows(),
            cols: u.ncols(),
        });
    }
    let dev = unitary_deviation(u);
    if dev > T::tol(1e-10).as_f64() {
        return Err(QStateError::NonUnitary(dev));
    }
    embed(u, dims, targets)
}

fn real_part<T: Real>(z: C<T>) -> Result<T> {
    if z.im.abs() > T::tol(1e-10) {
        return Err(QStateError::ImaginaryExpectation(z.im.as_f64()));
    }
    Ok(z.re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Real> {
    amplitudes: CVector<T>,
    dims: Vec<usize>,
}

impl<T: Real> PureState<T> {
    pub fn new(amplitudes: CVector<T>, dims: Vec<usize>) -> Result<Self> {
        let n = validate_dims(&dims)?;
        if amplitudes.len() != n {
            return Err(QStateError::DimensionMismatch {
                expected: n,
                found: amplitudes.len(),
            });
        }
        let norm2 = amplitudes.norm_squared();
        if (norm2 - T::one()).abs() > T::tol(1e-12) {
            return Err(QStateError::NotNormalized(norm2.as_f64()));
        }
        Ok(Self { amplitudes, dims })
    }

    /// Normalises `amplitudes` before validating.
    pub fn normalized(amplitudes: CVector<T>, dims: Vec<usize>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm <= T::zero() {
            return Err(QStateError::NotNormalized(0.0));
        }
        Self::new(amplitudes.unscale(norm), dims)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(index: usize, dims: Vec<usize>) -> Result<Self> {
        let n = validate_dims(&dims)?;
        if index >= n {
            return Err(QStateError::DimensionMismatch {
                expected: n,
                found: index,
            });
        }
        let mut amps = CVector::<T>::zeros(n);
        amps[index] = cr(T::one());
        Ok(Self {
            amplitudes: amps,
            dims,
        })
    }

    /// Qubit state from real amplitudes, normalised.
    pub fn from_real(amps: &[f64], dims: Vec<usize>) -> Result<Self> {
        let v = CVector::from_iterator(amps.len(), amps.iter().map(|&a| cr(T::lit(a))));
        Self::normalized(v, dims)
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.amplitudes
    }

    pub fn norm_squared(&self) -> T {
        self.amplitudes.norm_squared()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> T {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }
}

impl<T: Real> QuantumState<T> for PureState<T> {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn apply_unitary(&self, u: &CMatrix<T>, targets: &[usize]) -> Result<Self> {
        let full = checked_unitary(u, &self.dims, targets)?;
        Ok(Self {
            amplitudes: full * &self.amplitudes,
            dims: self.dims.clone(),
        })
    }

    fn expectation(&self, obs: &Observable<T>) -> Result<T> {
        if obs.dim() != self.dim() {
            return Err(QStateError::DimensionMismatch {
                expected: self.dim(),
                found: obs.dim(),
            });
        }
        real_part(self.amplitudes.dotc(&(&obs.entries * &self.amplitudes)))
    }

    fn condition(&self, projector: &CMatrix<T>) -> Result<(T, Option<Self>)> {
        if projector.nrows() != self.dim() {
            return Err(QStateError::DimensionMismatch {
                expected: self.dim(),
                found: projector.nrows(),
            });
        }
        let projected = projector * &self.amplitudes;
        let p = projected.norm_squared();
        if p <= T::tol(1e-12) {
            return Ok((p, None));
        }
        let post = Self {
            amplitudes: projected.unscale(p.sqrt()),
            dims: self.dims.clone(),
        };
        Ok((p, Some(post)))
    }

    fn to_density(&self) -> DensityMatrix<T> {
        DensityMatrix::from_raw(
            &self.amplitudes * self.amplitudes.adjoint(),
            self.dims.clone(),
        )
    }
}

impl<T: Real> Tensor for PureState<T> {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
            dims: concat(&self.dims, &other.dims),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    entries: CMatrix<T>,
    dims: Vec<usize>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: CMatrix<T>, dims: Vec<usize>) -> Result<Self> {
        let n = validate_dims(&dims)?;
        if entries.nrows() != entries.ncols() {
            return Err(QStateError::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.nrows() != n {
            return Err(QStateError::DimensionMismatch {
                expected: n,
                found: entries.nrows(),
            });
        }
        let herm = hermitian_deviation(&entries);
        if herm > T::tol(1e-12).as_f64() {
            return Err(QStateError::NotHermitian(herm));
        }
        let tr = entries.trace();
        if (tr.re - T::one()).abs() > T::tol(1e-12) {
            return Err(QStateError::TraceNotOne(tr.re.as_f64()));
        }
        let min = hermitian_eigenvalues(&entries).min();
        if min < -T::tol(1e-10) {
            return Err(QStateError::NotPositive(min.as_f64()));
        }
        Ok(Self { entries, dims })
    }

    /// Trusted constructor for outputs of trace-preserving maps; symmetrises
    /// away rounding drift.
    pub(crate) fn from_raw(entries: CMatrix<T>, dims: Vec<usize>) -> Self {
        let half = T::lit(0.5);
        let entries = (&entries + entries.adjoint()).map(|z| z.scale(half));
        Self { entries, dims }
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let n = validate_dims(&dims)?;
        let scale = T::one() / T::lit(n as f64);
        Ok(Self {
            entries: CMatrix::<T>::identity(n, n).map(|z| z.scale(scale)),
            dims,
        })
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn trace(&self) -> T {
        self.entries.trace().re
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> T {
        (&self.entries * &self.entries).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        hermitian_eigenvalues(&self.entries)
            .iter()
            .copied()
            .collect()
    }

    /// Applies a completely positive trace-preserving map given by Kraus
    /// operators acting on `targets`.
    pub fn apply_kraus(&self, kraus: &[CMatrix<T>], targets: &[usize]) -> Result<Self> {
        let n = self.entries.nrows();
        let mut out = CMatrix::<T>::zeros(n, n);
        let mut completeness = CMatrix::<T>::zeros(n, n);
        for k in kraus {
            let full = embed(k, &self.dims, targets)?;
            completeness += full.adjoint() * &full;
            out += &full * &self.entries * full.adjoint();
        }
        let dev = super::max_abs(&(completeness - CMatrix::<T>::identity(n, n)));
        if dev > T::tol(1e-10).as_f64() {
            return Err(QStateError::IncompleteBasis(dev));
        }
        Ok(Self::from_raw(out, self.dims.clone()))
    }

    /// Multiplies each matrix element by `f(row, col)`; `f` must describe a
    /// valid Schur-product channel (e.g. dephasing).
    pub fn hadamard_scale(&self, f: impl Fn(usize, usize) -> T) -> Self {
        let mut entries = self.entries.clone();
        for i in 0..entries.nrows() {
            for j in 0..entries.ncols() {
                entries[(i, j)] = entries[(i, j)].scale(f(i, j));
            }
        }
        Self::from_raw(entries, self.dims.clone())
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn distance_max(&self, other: &Self) -> f64 {
        super::max_abs(&(&self.entries - &other.entries))
    }
}

impl<T: Real> QuantumState<T> for DensityMatrix<T> {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn apply_unitary(&self, u: &CMatrix<T>, targets: &[usize]) -> Result<Self> {
        let full = checked_unitary(u, &self.dims, targets)?;
        let rotated = &full * &self.entries * full.adjoint();
        Ok(Self::from_raw(rotated, self.dims.clone()))
    }

    fn expectation(&self, obs: &Observable<T>) -> Result<T> {
        if obs.dim() != self.dim() {
            return Err(QStateError::DimensionMismatch {
                expected: self.dim(),
                found: obs.dim(),
            });
        }
        real_part((&obs.entries * &self.entries).trace())
    }

    fn condition(&self, projector: &CMatrix<T>) -> Result<(T, Option<Self>)> {
        if projector.nrows() != self.dim() {
            return Err(QStateError::DimensionMismatch {
                expected: self.dim(),
                found: projector.nrows(),
            });
        }
        let projected = projector * &self.entries * projector.adjoint();
        let p = projected.trace().re;
        if p <= T::tol(1e-12) {
            return Ok((p, None));
        }
        let post = Self::from_raw(projected.unscale(p), self.dims.clone());
        Ok((p, Some(post)))
    }

    fn to_density(&self) -> DensityMatrix<T> {
        self.clone()
    }
}

impl<T: Real> Tensor for DensityMatrix<T> {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            entries: self.entries.kronecker(&other.entries),
            dims: concat(&self.dims, &other.dims),
        }
    }
}

/// Hermitian operator on a composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable<T: Real> {
    entries: CMatrix<T>,
    dims: Vec<usize>,
}

impl<T: Real> Observable<T> {
    pub fn new(entries: CMatrix<T>, dims: Vec<usize>) -> Result<Self> {
        let n = validate_dims(&dims)?;
        if entries.nrows() != n || entries.ncols() != n {
            return Err(QStateError::DimensionMismatch {
                expected: n,
                found: entries.nrows(),
            });
        }
        let herm = hermitian_deviation(&entries);
        if herm > T::tol(1e-12).as_f64() {
            return Err(QStateError::NotHermitian(herm));
        }
        Ok(Self { entries, dims })
    }

    /// Tensor product of single-subsystem Hermitian factors.
    pub fn product(factors: &[CMatrix<T>]) -> Result<Self> {
        let mut iter = factors.iter();
        let first = iter.next().ok_or(QStateError::EmptySubsystems)?.clone();
        let dims = factors.iter().map(|f| f.nrows()).collect();
        let entries = iter.fold(first, |acc, f| acc.kronecker(f));
        Self::new(entries, dims)
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        hermitian_eigenvalues(&self.entries)
            .iter()
            .copied()
            .collect()
    }
}

impl<T: Real> std::ops::Add for &Observable<T> {
    type Output = Observable<T>;

    fn add(self, rhs: Self) -> Observable<T> {
        assert_eq!(self.dims, rhs.dims, "observable dims differ");
        Observable {
            entries: &self.entries + &rhs.entries,
            dims: self.dims.clone(),
        }
    }
}

impl<T: Real> Tensor for Observable<T> {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            entries: self.entries.kronecker(&other.entries),
            dims: concat(&self.dims, &other.dims),
        }
    }
}
