use super::QuantumState;
use super::{compose, digits, validate_targets, CMatrix, DensityMatrix, QStateError, Result};
use crate::scalar::Real;

/// Traces out every subsystem not listed in `keep`. Kept subsystems stay in
/// ascending order regardless of the order given.
pub fn partial_trace<T: Real>(rho: &DensityMatrix<T>, keep: &[usize]) -> Result<DensityMatrix<T>> {
    let dims = rho.dims();
    validate_targets(keep, dims.len())?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let n_keep: usize = keep_dims.iter().product();
    let n_traced: usize = traced_dims.iter().product();

    let full_index = |kept: &[usize], env: &[usize]| {
        let mut ds = vec![0; dims.len()];
        for (&k, &v) in keep.iter().zip(kept) {
            ds[k] = v;
        }
        for (&k, &v) in traced.iter().zip(env) {
            ds[k] = v;
        }
        compose(ds, dims)
    };

    let m = rho.entries();
    let mut out = CMatrix::<T>::zeros(n_keep, n_keep);
    for i in 0..n_keep {
        let di = digits(i, &keep_dims);
        for j in 0..n_keep {
            let dj = digits(j, &keep_dims);
            let mut acc = out[(i, j)];
            for e in 0..n_traced {
                let de = digits(e, &traced_dims);
                acc += m[(full_index(&di, &de), full_index(&dj, &de))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix::from_raw(out, keep_dims))
}

/// Transposes the indices of one subsystem. The result is Hermitian but not
/// necessarily positive, so it is returned as a bare matrix.
pub fn partial_transpose<T: Real>(rho: &DensityMatrix<T>, subsystem: usize) -> Result<CMatrix<T>> {
    let dims = rho.dims();
    if subsystem >= dims.len() {
        return Err(QStateError::SubsystemOutOfRange {
            index: subsystem,
            count: dims.len(),
        });
    }
    let n = rho.dim();
    let m = rho.entries();
    let mut out = CMatrix::<T>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut di = digits(i, dims);
            let mut dj = digits(j, dims);
            std::mem::swap(&mut di[subsystem], &mut dj[subsystem]);
            out[(i, j)] = m[(compose(di, dims), compose(dj, dims))];
        }
    }
    Ok(out)
}
