use rand::Rng;

use super::{embed, max_abs, CMatrix, CVector, QStateError, QuantumState, Result};
use crate::scalar::{c, Real};

/// Complete set of orthogonal projectors on a (possibly composite) target space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveBasis<T: Real> {
    projectors: Vec<CMatrix<T>>,
}

impl<T: Real> ProjectiveBasis<T> {
    /// Checks `Σ Pᵢ = I` and `Pᵢ Pⱼ = δᵢⱼ Pᵢ` within `1e-10`.
    pub fn new(projectors: Vec<CMatrix<T>>) -> Result<Self> {
        let n = projectors
            .first()
            .ok_or(QStateError::EmptySubsystems)?
            .nrows();
        let tol = T::tol(1e-10).as_f64();
        let mut sum = CMatrix::<T>::zeros(n, n);
        for (i, p) in projectors.iter().enumerate() {
            if p.nrows() != n || p.ncols() != n {
                return Err(QStateError::DimensionMismatch {
                    expected: n,
                    found: p.nrows(),
                });
            }
            sum += p;
            for (j, q) in projectors.iter().enumerate() {
                let expect = if i == j {
                    p.clone()
                } else {
                    CMatrix::zeros(n, n)
                };
                let dev = max_abs(&(p * q - expect));
                if dev > tol {
                    return Err(QStateError::IncompleteBasis(dev));
                }
            }
        }
        let dev = max_abs(&(sum - CMatrix::<T>::identity(n, n)));
        if dev > tol {
            return Err(QStateError::IncompleteBasis(dev));
        }
        Ok(Self { projectors })
    }

    /// Rank-one projectors onto the given vectors.
    pub fn from_vectors(vectors: &[CVector<T>]) -> Result<Self> {
        Self::new(vectors.iter().map(|v| v * v.adjoint()).collect())
    }

    /// `{|0⟩, |1⟩}`, eigenvalues `+1, −1` of σz in that order.
    pub fn z() -> Self {
        Self::from_vectors(&[
            CVector::from_vec(vec![c(1., 0.), c(0., 0.)]),
            CVector::from_vec(vec![c(0., 0.), c(1., 0.)]),
        ])
        .expect("computational basis is complete")
    }

    /// `{|+⟩, |−⟩}`, eigenvalues `+1, −1` of σx in that order.
    pub fn x() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_vectors(&[
            CVector::from_vec(vec![c(h, 0.), c(h, 0.)]),
            CVector::from_vec(vec![c(h, 0.), c(-h, 0.)]),
        ])
        .expect("x basis is complete")
    }

    pub fn projectors(&self) -> &[CMatrix<T>] {
        &self.projectors
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    /// Born probabilities and conditional post-states of every outcome.
    pub fn branches<S: QuantumState<T>>(
        &self,
        state: &S,
        targets: &[usize],
    ) -> Result<Vec<(T, Option<S>)>> {
        self.projectors
            .iter()
            .map(|p| state.condition(&embed(p, state.dims(), targets)?))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Measurement<S> {
    pub outcome: usize,
    pub state: S,
    pub probability: f64,
}

/// Samples one outcome of `basis` on `targets` with Born probabilities.
pub fn measure_projective<T: Real, S: QuantumState<T>, R: Rng + ?Sized>(
    state: &S,
    basis: &ProjectiveBasis<T>,
    targets: &[usize],
    rng: &mut R,
) -> Result<Measurement<S>> {
    let branches = basis.branches(state, targets)?;
    let probs: Vec<f64> = branches.iter().map(|(p, _)| p.as_f64().max(0.0)).collect();
    let outcome = sample_index(&probs, rng);
    let (p, post) = branches.into_iter().nth(outcome).expect("index in range");
    let post = post.ok_or(QStateError::ZeroProbability(p.as_f64()))?;
    Ok(Measurement {
        outcome,
        state: post,
        probability: p.as_f64(),
    })
}

/// Inverse-CDF draw from non-negative weights that sum to (roughly) one.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_nonzero
}
