//! Classical-mediator states on two probe qubits and a binary mediator `M`.
//!
//! A mediator that only ever carries the classical variable `σ_z` can
//! correlate with each probe, but the family
//!
//! `ρ = ⅛ (I + r_A·σ⊗I⊗I + r_B·I⊗σ⊗I + s_z I⊗I⊗σ_z
//!        + t_A·σ⊗I⊗σ_z + t_B·I⊗σ⊗σ_z)`
//!
//! has no `σ⊗σ` term between the probes, so tracing out `M` never leaves
//! them entangled. [`gwt_scan`] checks this numerically and
//! [`direct_coupling_counterexample`] shows the cross term is what it takes.
//!
//! Subsystem order is `(A, B, M)`.

use rand::Rng;
use serde::Serialize;

use crate::qstate::{
    gates, hermitian_eigenvalues, negativity, partial_trace, CMatrix, DensityMatrix, QStateError,
    QuantumState,
};
use crate::scalar::{cr, Real};

pub const PROBE_A: usize = 0;
pub const PROBE_B: usize = 1;
pub const MEDIATOR: usize = 2;

/// Eigenvalues above `−POSITIVITY_TOLERANCE` count as non-negative (widened
/// to a few thousand ulps for single precision).
pub const POSITIVITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MediatorParams<T> {
    pub r_a: [T; 3],
    pub r_b: [T; 3],
    pub t_a: [T; 3],
    pub t_b: [T; 3],
    pub s_z: T,
}

impl<T: Real> MediatorParams<T> {
    pub fn zero() -> Self {
        Self {
            r_a: [T::zero(); 3],
            r_b: [T::zero(); 3],
            t_a: [T::zero(); 3],
            t_b: [T::zero(); 3],
            s_z: T::zero(),
        }
    }

    /// All 13 parameters drawn independently from `U(−half_width, half_width)`.
    pub fn sample<R: Rng + ?Sized>(half_width: f64, rng: &mut R) -> Self {
        let mut draw = || T::lit(rng.random_range(-half_width..=half_width));
        Self {
            r_a: [draw(), draw(), draw()],
            r_b: [draw(), draw(), draw()],
            t_a: [draw(), draw(), draw()],
            t_b: [draw(), draw(), draw()],
            s_z: draw(),
        }
    }
}

/// Outcome of building a mediator state.
#[derive(Debug, Clone, PartialEq)]
pub enum MediatorState<T: Real> {
    Valid(DensityMatrix<T>),
    PositivityViolation { min_eigenvalue: T },
}

impl<T: Real> MediatorState<T> {
    pub fn valid(self) -> Option<DensityMatrix<T>> {
        match self {
            MediatorState::Valid(rho) => Some(rho),
            MediatorState::PositivityViolation { .. } => None,
        }
    }
}

fn i2<T: Real>() -> CMatrix<T> {
    gates::identity(2)
}

fn kron3<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>, m: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b).kronecker(m)
}

/// The unnormalised operator `8ρ` of the classical-mediator family.
fn mediator_operator<T: Real>(p: &MediatorParams<T>) -> CMatrix<T> {
    let sigma = gates::paulis::<T>();
    let z = gates::pauli_z::<T>();
    let id = i2::<T>();
    let mut m = CMatrix::<T>::identity(8, 8);
    for (k, s) in sigma.iter().enumerate() {
        m += kron3(s, &id, &id) * cr(p.r_a[k]);
        m += kron3(&id, s, &id) * cr(p.r_b[k]);
        m += kron3(s, &id, &z) * cr(p.t_a[k]);
        m += kron3(&id, s, &z) * cr(p.t_b[k]);
    }
    m += kron3(&id, &id, &z) * cr(p.s_z);
    m
}

fn finish<T: Real>(unnormalised: CMatrix<T>) -> MediatorState<T> {
    let rho = unnormalised.unscale(T::lit(8.0));
    let min = hermitian_eigenvalues(&rho)[0];
    if min < -T::tol(POSITIVITY_TOLERANCE) {
        return MediatorState::PositivityViolation {
            min_eigenvalue: min,
        };
    }
    MediatorState::Valid(DensityMatrix::from_raw(rho, vec![2, 2, 2]))
}

/// Builds the classical-mediator state, or reports its most negative
/// eigenvalue when the parameters leave the positive cone.
pub fn build_mediator_state<T: Real>(p: &MediatorParams<T>) -> MediatorState<T> {
    finish(mediator_operator(p))
}

/// The same family plus a direct probe-probe term `Σ c_jk σ_j⊗σ_k⊗I / 8`,
/// which no classical mediator can produce.
pub fn build_with_cross_term<T: Real>(p: &MediatorParams<T>, c: &[[T; 3]; 3]) -> MediatorState<T> {
    let sigma = gates::paulis::<T>();
    let id = i2::<T>();
    let mut m = mediator_operator(p);
    for (j, row) in c.iter().enumerate() {
        for (k, &cjk) in row.iter().enumerate() {
            m += kron3(&sigma[j], &sigma[k], &id) * cr(cjk);
        }
    }
    finish(m)
}

/// Two-probe state left after tracing out the mediator.
pub fn probe_reduction<T: Real>(rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>, QStateError> {
    if rho.dims() != [2, 2, 2] {
        return Err(QStateError::DimensionMismatch {
            expected: 8,
            found: rho.entries().nrows(),
        });
    }
    partial_trace(rho, &[PROBE_A, PROBE_B])
}

/// `¼ (I + r_A·σ⊗I + I⊗r_B·σ)`, the only form a reduction can take.
pub fn uncorrelated_form<T: Real>(r_a: &[T; 3], r_b: &[T; 3]) -> CMatrix<T> {
    let sigma = gates::paulis::<T>();
    let id = i2::<T>();
    let mut m = CMatrix::<T>::identity(4, 4);
    for k in 0..3 {
        m += sigma[k].kronecker(&id) * cr(r_a[k]);
        m += id.kronecker(&sigma[k]) * cr(r_b[k]);
    }
    m.unscale(T::lit(4.0))
}

/// Local Bloch vectors `r_A,k = tr(ρ σ_k⊗I)` and `r_B,k = tr(ρ I⊗σ_k)` of a
/// two-qubit state.
pub fn bloch_vectors<T: Real>(rho: &DensityMatrix<T>) -> ([T; 3], [T; 3]) {
    let sigma = gates::paulis::<T>();
    let id = i2::<T>();
    let mut r_a = [T::zero(); 3];
    let mut r_b = [T::zero(); 3];
    for k in 0..3 {
        r_a[k] = (sigma[k].kronecker(&id) * rho.entries()).trace().re;
        r_b[k] = (id.kronecker(&sigma[k]) * rho.entries()).trace().re;
    }
    (r_a, r_b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    /// Number of positivity-accepted samples to collect.
    pub accepted: u64,
    /// Parameters are drawn from `U(−half_width, half_width)`.
    pub half_width: f64,
    /// Draw budget; the scan stops early if it is exhausted.
    pub max_draws: u64,
}

impl ScanSettings {
    /// About a quarter of draws are positive at this width. On the full cube
    /// `[−1, 1]¹³` the fraction is near `10⁻⁶`.
    pub const DEFAULT_HALF_WIDTH: f64 = 0.35;

    pub fn new(accepted: u64) -> Self {
        Self {
            accepted,
            half_width: Self::DEFAULT_HALF_WIDTH,
            max_draws: accepted.saturating_mul(1000).max(1000),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanReport {
    pub draws: u64,
    pub accepted: u64,
    /// Largest probe-reduction negativity over accepted samples.
    pub max_negativity: f64,
}

impl ScanReport {
    pub fn empty() -> Self {
        Self {
            draws: 0,
            accepted: 0,
            max_negativity: 0.0,
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.accepted as f64 / self.draws as f64
        }
    }

    pub fn merge(&self, other: &ScanReport) -> ScanReport {
        ScanReport {
            draws: self.draws + other.draws,
            accepted: self.accepted + other.accepted,
            max_negativity: self.max_negativity.max(other.max_negativity),
        }
    }
}

/// Rejection-samples classical-mediator states until `settings.accepted`
/// are positive, recording the largest negativity of their probe reductions.
pub fn gwt_scan<T: Real, R: Rng + ?Sized>(settings: &ScanSettings, rng: &mut R) -> ScanReport {
    let mut report = ScanReport::empty();
    while report.accepted < settings.accepted && report.draws < settings.max_draws {
        report.draws += 1;
        let params = MediatorParams::<T>::sample(settings.half_width, rng);
        let Some(rho) = build_mediator_state(&params).valid() else {
            continue;
        };
        report.accepted += 1;
        let reduced = probe_reduction(&rho).expect("8-dimensional mediator state");
        let n = negativity(&reduced).expect("two-qubit reduction").as_f64();
        report.max_negativity = report.max_negativity.max(n);
    }
    report
}

#[derive(Debug, Clone)]
pub struct Counterexample<T: Real> {
    pub state: DensityMatrix<T>,
    pub reduction: DensityMatrix<T>,
    pub negativity: T,
    pub min_eigenvalue: T,
}

/// `⅛ (I + X⊗X⊗I − Y⊗Y⊗I + Z⊗Z⊗I)`: the probes reduce to the Bell state
/// `(|00⟩+|11⟩)/√2`, negativity ½.
pub fn direct_coupling_counterexample<T: Real>() -> Counterexample<T> {
    let one = T::one();
    let z = T::zero();
    let c = [[one, z, z], [z, -one, z], [z, z, one]];
    let state = build_with_cross_term(&MediatorParams::zero(), &c)
        .valid()
        .expect("Bell-diagonal construction is positive");
    let reduction = probe_reduction(&state).expect("8-dimensional state");
    let negativity = negativity(&reduction).expect("two-qubit reduction");
    let min_eigenvalue = state.eigenvalues()[0];
    Counterexample {
        state,
        reduction,
        negativity,
        min_eigenvalue,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::PureState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_dev(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_params_is_maximally_mixed() {
        let rho = build_mediator_state(&MediatorParams::<f64>::zero())
            .valid()
            .unwrap();
        let mm = DensityMatrix::<f64>::maximally_mixed(vec![2, 2, 2]).unwrap();
        assert!(rho.distance_max(&mm) < 1e-15);
        let red = probe_reduction(&rho).unwrap();
        assert!(red.distance_max(&DensityMatrix::maximally_mixed(vec![2, 2]).unwrap()) < 1e-15);
    }

    #[test]
    fn polarised_probe_is_product() {
        let p = MediatorParams {
            r_a: [0.0, 0.0, 1.0],
            ..MediatorParams::zero()
        };
        let rho = build_mediator_state(&p).valid().unwrap();
        let up = PureState::<f64>::basis(0, vec![2]).unwrap().to_density();
        let half = DensityMatrix::<f64>::maximally_mixed(vec![2]).unwrap();
        let expect = up
            .entries()
            .kronecker(half.entries())
            .kronecker(half.entries());
        assert!(max_dev(rho.entries(), &expect) < 1e-15);
        assert!(negativity(&probe_reduction(&rho).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn overlong_bloch_vector_violates_positivity() {
        let p = MediatorParams::<f64> {
            r_a: [0.0, 0.0, 2.0],
            ..MediatorParams::zero()
        };
        match build_mediator_state(&p) {
            MediatorState::PositivityViolation { min_eigenvalue } => {
                assert!((min_eigenvalue + 0.125).abs() < 1e-14)
            }
            MediatorState::Valid(_) => panic!("expected a violation"),
        }
    }

    #[test]
    fn reduction_drops_mediator_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        while checked < 200 {
            let p = MediatorParams::<f64>::sample(0.3, &mut rng);
            let Some(rho) = build_mediator_state(&p).valid() else {
                continue;
            };
            let red = probe_reduction(&rho).unwrap();
            assert!(max_dev(red.entries(), &uncorrelated_form(&p.r_a, &p.r_b)) < 1e-12);
            let (r_a, r_b) = bloch_vectors(&red);
            for k in 0..3 {
                assert!((r_a[k] - p.r_a[k]).abs() < 1e-12);
                assert!((r_b[k] - p.r_b[k]).abs() < 1e-12);
            }
            assert!(max_dev(red.entries(), &uncorrelated_form(&r_a, &r_b)) < 1e-12);
            checked += 1;
        }
    }

    #[test]
    fn scan_finds_no_entanglement() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let report = gwt_scan::<f64, _>(&ScanSettings::new(500), &mut rng);
        assert_eq!(report.accepted, 500);
        assert!(report.draws > report.accepted);
        assert!(report.acceptance_rate() > 0.0 && report.acceptance_rate() < 1.0);
        assert!(report.max_negativity <= 1e-9);
    }

    #[test]
    fn scan_is_deterministic_and_mergeable() {
        let settings = ScanSettings::new(50);
        let a = gwt_scan::<f64, _>(&settings, &mut ChaCha8Rng::seed_from_u64(4));
        let b = gwt_scan::<f64, _>(&settings, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        let merged = a.merge(&ScanReport::empty());
        assert_eq!(merged, a);
    }

    #[test]
    fn scan_respects_draw_budget() {
        let settings = ScanSettings {
            accepted: 10,
            half_width: 1.0,
            max_draws: 100,
        };
        let report = gwt_scan::<f64, _>(&settings, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(report.draws, 100);
        assert!(report.accepted < 10);
    }

    #[test]
    fn counterexample_is_entangled() {
        let ce = direct_coupling_counterexample::<f64>();
        assert!((ce.negativity - 0.5).abs() < 1e-10);
        assert!(ce.min_eigenvalue >= -1e-15);
        let bell = PureState::<f64>::from_real(&[1., 0., 0., 1.], vec![2, 2])
            .unwrap()
            .to_density();
        assert!(ce.reduction.distance_max(&bell) < 1e-15);
        let without = build_with_cross_term(&MediatorParams::<f64>::zero(), &[[0.0; 3]; 3])
            .valid()
            .unwrap();
        assert!(negativity(&probe_reduction(&without).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn single_precision_counterexample() {
        let ce = direct_coupling_counterexample::<f32>();
        assert!((ce.negativity - 0.5).abs() < 1e-5);
    }
}
