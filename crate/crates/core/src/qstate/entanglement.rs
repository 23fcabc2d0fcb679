use nalgebra::{ComplexField, DVector};

use super::QuantumState;
use super::{
    gates, partial_transpose, CMatrix, CVector, DensityMatrix, PureState, QStateError, Result,
};
use crate::scalar::Real;

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues<T: Real>(m: &CMatrix<T>) -> DVector<T> {
    let mut vals: Vec<T> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    DVector::from_vec(vals)
}

fn require_two_qubit<T: Real>(rho: &DensityMatrix<T>) -> Result<()> {
    if rho.dims() != [2, 2] {
        return Err(QStateError::NotTwoQubit(rho.dims().to_vec()));
    }
    Ok(())
}

/// Sum of the moduli of the negative eigenvalues of `ρ^{T_B}`.
///
/// Zero exactly on separable two-qubit states (Peres-Horodecki).
pub fn negativity<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    require_two_qubit(rho)?;
    let pt = partial_transpose(rho, 1)?;
    Ok(hermitian_eigenvalues(&pt)
        .iter()
        .filter(|&&l| l < T::zero())
        .fold(T::zero(), |acc, &l| acc - l))
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// Writes `ρ = Σ |wᵢ⟩⟨wᵢ|` with `wᵢ = √pᵢ vᵢ` from the spectral decomposition;
/// the λᵢ are the singular values of the symmetric matrix
/// `τᵢⱼ = wᵢᵀ (σy⊗σy) wⱼ`. Eigenvalues below `64·ε` are treated as zero so
/// that eigensolver noise does not enter through a square root.
pub fn concurrence<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    require_two_qubit(rho)?;
    let eig = rho.entries().clone().symmetric_eigen();
    let cutoff = T::default_epsilon() * T::lit(64.0);
    let weighted: Vec<CVector<T>> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .filter(|(&p, _)| p > cutoff)
        .map(|(&p, v)| v.into_owned().scale(p.sqrt()))
        .collect();
    if weighted.is_empty() {
        return Ok(T::zero());
    }
    let yy = gates::pauli_y::<T>().kronecker(&gates::pauli_y::<T>());
    let k = weighted.len();
    let tau = CMatrix::<T>::from_fn(k, k, |i, j| {
        (weighted[i].transpose() * &yy * &weighted[j])[(0, 0)]
    });
    let mut lambdas: Vec<T> = tau.singular_values().iter().copied().collect();
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    lambdas.resize(4, T::zero());
    let c = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    Ok(c.max(T::zero()).min(T::one()))
}

/// `2|ad − bc|` for a two-qubit pure state `a|00⟩ + b|01⟩ + c|10⟩ + d|11⟩`.
pub fn pure_concurrence<T: Real>(psi: &PureState<T>) -> Result<T> {
    if psi.dims() != [2, 2] {
        return Err(QStateError::NotTwoQubit(psi.dims().to_vec()));
    }
    let a = psi.amplitudes();
    Ok((a[0] * a[3] - a[1] * a[2]).modulus() * T::lit(2.0))
}

#[cfg(test)]
mod tests {
    use super::super::tensor;
    use super::*;

    fn bell() -> DensityMatrix<f64> {
        PureState::from_real(&[1., 0., 0., 1.], vec![2, 2])
            .unwrap()
            .to_density()
    }

    #[test]
    fn bell_values() {
        // Bell partial transpose spectrum is {1/2, 1/2, 1/2, -1/2}.
        assert!((negativity(&bell()).unwrap() - 0.5).abs() < 1e-12);
        assert!((concurrence(&bell()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_values() {
        let a = PureState::<f64>::from_real(&[0.6, 0.8], vec![2]).unwrap();
        let b = PureState::<f64>::from_real(&[1., 1.], vec![2]).unwrap();
        let rho = tensor(&a, &b).to_density();
        assert!(negativity(&rho).unwrap() < 1e-12);
        assert!(concurrence(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn graph_state_concurrence() {
        // a = b = c = 1/2, d = -1/2
        let psi = PureState::<f64>::from_real(&[1., 1., 1., -1.], vec![2, 2]).unwrap();
        assert!((pure_concurrence(&psi).unwrap() - 1.0).abs() < 1e-15);
        assert!((concurrence(&psi.to_density()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn werner_threshold() {
        // p·Bell + (1-p)·I/4 has concurrence max(0, (3p-1)/2).
        let mm = DensityMatrix::<f64>::maximally_mixed(vec![2, 2]).unwrap();
        for &p in &[0.2, 1.0 / 3.0, 0.5, 0.9] {
            let m = bell().entries() * nalgebra::Complex::new(p, 0.0)
                + mm.entries() * nalgebra::Complex::new(1.0 - p, 0.0);
            let rho = DensityMatrix::new(m, vec![2, 2]).unwrap();
            let expect = ((3.0 * p - 1.0) / 2.0f64).max(0.0);
            assert!(
                (concurrence(&rho).unwrap() - expect).abs() < 1e-12,
                "p = {p}"
            );
            let neg = ((3.0 * p - 1.0) / 4.0f64).max(0.0);
            assert!((negativity(&rho).unwrap() - neg).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn wrong_dimension() {
        let rho = DensityMatrix::<f64>::maximally_mixed(vec![2, 2, 2]).unwrap();
        assert!(matches!(negativity(&rho), Err(QStateError::NotTwoQubit(_))));
        assert!(matches!(
            concurrence(&rho),
            Err(QStateError::NotTwoQubit(_))
        ));
    }
}
