//! Cross-module properties: separable bound of the witness, estimator
//! statistics, and closed forms of the protocol output.

use std::f64::consts::PI;

use bmv_core::gravity::BranchGeometry;
use bmv_core::protocol::{run_protocol, PhaseConvention, ProtocolConfig, TrapParams};
use bmv_core::qstate::{concurrence, negativity, CMatrix, DensityMatrix};
use bmv_core::witness::{
    reference_snapshot, witness_exact, witness_operator, witness_snapshot, Readout, WitnessSampler,
};
use bmv_core::{DensityMatrix64, ProtocolConfig64};
use nalgebra::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(dphi1: f64, dphi2: f64, convention: PhaseConvention) -> ProtocolConfig64 {
    let geom = BranchGeometry::new(300e-6, 100e-6).unwrap();
    let trap = TrapParams::new(10.0, 0.0, 2.2e-5, 3500.0).unwrap();
    ProtocolConfig {
        convention,
        phase_override: Some((dphi1, dphi2)),
        ..ProtocolConfig::new(1e-14, geom, trap, 1.0)
    }
}

/// Qubit state with a Bloch vector drawn uniformly from the unit ball.
fn random_qubit<R: Rng>(rng: &mut R) -> CMatrix<f64> {
    let r = loop {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            break v;
        }
    };
    let c = |re: f64, im: f64| Complex::new(re / 2.0, im / 2.0);
    CMatrix::from_row_slice(
        2,
        2,
        &[
            c(1.0 + r[2], 0.0),
            c(r[0], -r[1]),
            c(r[0], r[1]),
            c(1.0 - r[2], 0.0),
        ],
    )
}

fn random_separable<R: Rng>(rng: &mut R) -> DensityMatrix64 {
    let terms = rng.random_range(1..=4);
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut m = CMatrix::<f64>::zeros(4, 4);
    for w in weights {
        m += random_qubit(rng).kronecker(&random_qubit(rng)) * Complex::new(w / total, 0.0);
    }
    DensityMatrix::new(m, vec![2, 2]).unwrap()
}

#[test]
fn separable_states_respect_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let worst = (0..10_000)
        .map(|_| {
            witness_exact(&random_separable(&mut rng))
                .unwrap()
                .value
                .abs()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1.0 + 1e-9, "{worst}");
    // The sample reaches well into the allowed range.
    assert!(worst > 0.8, "{worst}");
}

#[test]
fn witness_operator_square() {
    let w = witness_operator::<f64>();
    let mut eig = w.eigenvalues();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (e, x) in eig.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
        assert!((e - x).abs() < 1e-10);
    }
}

#[test]
fn estimators_are_unbiased() {
    let cfg = ProtocolConfig64 {
        t2_path: 4.0,
        ..config(0.8, 1.4, PhaseConvention::Compensated)
    };
    let run = run_protocol(&cfg).unwrap();
    let exact = witness_snapshot(&run.before_recombination()).unwrap().value;
    let samplers = [
        WitnessSampler::strategy1(&run.before_recombination()).unwrap(),
        WitnessSampler::strategy2(&run.after_recombination()).unwrap(),
    ];
    for (k, sampler) in samplers.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let reps = 100;
        let estimates: Vec<_> = (0..reps)
            .map(|_| {
                sampler
                    .sample(0..10_000, Readout::IDEAL, &mut rng, None)
                    .estimate::<f64>()
                    .unwrap()
            })
            .collect();
        let mean = estimates.iter().map(|e| e.value).sum::<f64>() / reps as f64;
        let sem = estimates[0].stderr / (reps as f64).sqrt();
        assert!(
            (mean - exact).abs() < 5.0 * sem,
            "strategy {k}: mean {mean} exact {exact}"
        );
    }
}

#[test]
fn stderr_scales_as_inverse_root_shots() {
    let sampler = WitnessSampler::strategy1(&reference_snapshot::<f64>()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let base = sampler
        .sample(0..100, Readout::IDEAL, &mut rng, None)
        .estimate::<f64>()
        .unwrap()
        .stderr;
    for shots in [1_000u64, 10_000, 100_000] {
        let s = sampler
            .sample(0..shots, Readout::IDEAL, &mut rng, None)
            .estimate::<f64>()
            .unwrap()
            .stderr;
        let ratio = s * (shots as f64 / 100.0).sqrt() / base;
        assert!((ratio - 1.0).abs() < 0.1, "{shots}: {ratio}");
    }
}

#[test]
fn dephasing_reduces_witness_below_one() {
    let t_grav = 1.0;
    let cfg = ProtocolConfig64 {
        t2_path: t_grav / 10.0,
        ..config(PI / 2.0, PI / 2.0, PhaseConvention::Compensated)
    };
    let run = run_protocol(&cfg).unwrap();
    let exact = witness_snapshot(&run.before_recombination()).unwrap().value;
    assert!(exact < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let est = WitnessSampler::strategy2(&run.after_recombination())
        .unwrap()
        .sample(0..10_000, Readout::IDEAL, &mut rng, None)
        .estimate::<f64>()
        .unwrap();
    assert!((est.value - exact).abs() < 5.0 * est.stderr);
}

#[test]
fn single_precision_protocol() {
    let geom = BranchGeometry::<f32>::new(300e-6, 100e-6).unwrap();
    let trap = TrapParams::<f32>::new(10.0, 0.0, 2.2e-5, 3500.0).unwrap();
    let cfg = ProtocolConfig {
        phase_override: Some((1.0f32, 0.5)),
        ..ProtocolConfig::new(1e-14f32, geom, trap, 1.0)
    };
    let run = run_protocol(&cfg).unwrap();
    let c = concurrence(&run.path_state().unwrap()).unwrap();
    assert!((c - 0.75f32.sin()).abs() < 1e-4, "{c}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concurrence_follows_phase_sum(a in 0.0..2.0 * PI, b in 0.0..2.0 * PI, n_dd in 0u32..3) {
        let cfg = ProtocolConfig64 { n_dd, ..config(a, b, PhaseConvention::Branch) };
        let run = run_protocol(&cfg).unwrap();
        let paths = run.path_state().unwrap();
        let expect = ((a + b) / 2.0).sin().abs();
        prop_assert!((concurrence(&paths).unwrap() - expect).abs() < 1e-10);
        // A pure two-qubit state has negativity C/2.
        prop_assert!((negativity(&paths).unwrap() - expect / 2.0).abs() < 1e-10);
    }

    #[test]
    fn witness_closed_form_under_dephasing(sum in 0.0..2.0 * PI, split in 0.0..1.0f64, t2 in 0.1..10.0f64) {
        let cfg = ProtocolConfig64 {
            t2_path: t2,
            ..config(sum * split, sum * (1.0 - split), PhaseConvention::Compensated)
        };
        let run = run_protocol(&cfg).unwrap();
        let lambda = (-1.0 / t2).exp();
        let w = witness_snapshot(&run.before_recombination()).unwrap().value;
        prop_assert!((w - lambda * (1.0 - sum.cos())).abs() < 1e-12);
        prop_assert!((run.final_state.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn protocol_preserves_positivity(a in -4.0..4.0f64, b in -4.0..4.0f64, t2 in 0.05..5.0f64) {
        let cfg = ProtocolConfig64 { t2_path: t2, ..config(a, b, PhaseConvention::Branch) };
        let run = run_protocol(&cfg).unwrap();
        let min = run.final_state.eigenvalues()[0];
        prop_assert!(min > -1e-12);
        prop_assert!(run.final_state.purity() <= 1.0 + 1e-12);
    }
}
