//! Property tests over the circuit primitives: structural invariants that
//! must hold for arbitrary (seeded) inputs, each checked against a direct
//! index-sum oracle where one exists.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qadkit::qcore::{
    apply_channel, apply_unitary_pure, basis_projector, gates, partial_trace, partial_trace_pure,
    projection_probability_pure, random, tensor_density, tensor_pure, DensityMatrix, KrausChannel,
    PureState, RegisterLayout, Unitary,
};

fn random_density(dim: usize, rng: &mut impl rand::Rng) -> DensityMatrix {
    let a = random::haar_state(dim, rng).to_density();
    let b = random::haar_state(dim, rng).to_density();
    DensityMatrix::new(a.mat() * Complex64::new(0.7, 0.0) + b.mat() * Complex64::new(0.3, 0.0))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Tracing out the second factor of a product state recovers the first,
    /// for all subsystem dimensions up to 4.
    #[test]
    fn partial_trace_inverts_tensor(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
        let mut rng = random::seeded_rng(seed);
        let rho = random_density(da, &mut rng);
        let sigma = random_density(db, &mut rng);
        let layout = RegisterLayout::new(vec![da, db]).unwrap();
        let reduced = partial_trace(&tensor_density(&rho, &sigma), &layout, &[0]).unwrap();
        for i in 0..da {
            for j in 0..da {
                prop_assert!((reduced.mat()[(i, j)] - rho.mat()[(i, j)]).norm() < 1e-12);
            }
        }
    }

    /// The Kronecker product agrees entrywise with the index-expansion
    /// oracle `(A (x) B)[(i1 i2), (j1 j2)] = A[i1, j1] B[i2, j2]`.
    #[test]
    fn tensor_matches_index_sum_oracle(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
        let mut rng = random::seeded_rng(seed);
        let a = random_density(da, &mut rng);
        let b = random_density(db, &mut rng);
        let prod = tensor_density(&a, &b);
        for i1 in 0..da {
            for i2 in 0..db {
                for j1 in 0..da {
                    for j2 in 0..db {
                        let direct = a.mat()[(i1, j1)] * b.mat()[(i2, j2)];
                        let got = prod.mat()[(i1 * db + i2, j1 * db + j2)];
                        prop_assert!((got - direct).norm() < 1e-14);
                    }
                }
            }
        }
    }

    /// Partial trace of a pure state agrees with the direct double sum
    /// `rho[a][b] = sum_rest psi[(a, rest)] conj(psi[(b, rest)])`.
    #[test]
    fn partial_trace_pure_matches_double_sum(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
        let mut rng = random::seeded_rng(seed);
        let psi = random::haar_state(da * db, &mut rng);
        let layout = RegisterLayout::new(vec![da, db]).unwrap();
        let reduced = partial_trace_pure(&psi, &layout, &[0]).unwrap();
        for a in 0..da {
            for b in 0..da {
                let mut acc = Complex64::default();
                for r in 0..db {
                    acc += psi.amps()[a * db + r] * psi.amps()[b * db + r].conj();
                }
                prop_assert!((reduced.mat()[(a, b)] - acc).norm() < 1e-12);
            }
        }
        prop_assert!((reduced.mat().trace().re - 1.0).abs() < 1e-12);
    }

    /// Unitaries preserve the norm on any target subsystem.
    #[test]
    fn apply_unitary_preserves_norm(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=3) {
        let mut rng = random::seeded_rng(seed);
        let psi = random::haar_state(da * db, &mut rng);
        let u = random::haar_unitary(db, &mut rng);
        let layout = RegisterLayout::new(vec![da, db]).unwrap();
        let out = apply_unitary_pure(&psi, &layout, &u, &[1]).unwrap();
        let norm: f64 = out.amps().iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    /// Measurement probabilities over a complete projector set sum to 1.
    #[test]
    fn measurement_probabilities_complete(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
        let mut rng = random::seeded_rng(seed);
        let psi = random::haar_state(da * db, &mut rng);
        let layout = RegisterLayout::new(vec![da, db]).unwrap();
        let total: f64 = (0..da)
            .map(|k| projection_probability_pure(&psi, &layout, &basis_projector(da, k), &[0]).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    /// Channels preserve the trace and positivity.
    #[test]
    fn channels_are_trace_preserving(seed in any::<u64>(), dim in 2usize..=4, p in 0.0f64..=1.0) {
        let mut rng = random::seeded_rng(seed);
        let rho = random_density(dim, &mut rng);
        let ch = KrausChannel::new(gates::depolarizing_kraus(dim, p)).unwrap();
        let layout = RegisterLayout::new(vec![dim]).unwrap();
        let out = apply_channel(&rho, &layout, &ch, &[0]).unwrap();
        prop_assert!((out.mat().trace().re - 1.0).abs() < 1e-12);
        // DensityMatrix::new inside apply_channel already enforces PSD
    }

    /// The exact modified swap test reassembles the complex inner product.
    #[test]
    fn swap_test_decodes_inner_product(seed in any::<u64>(), dim in 2usize..=8) {
        let mut rng = random::seeded_rng(seed);
        let a = random::haar_unitary(dim, &mut rng);
        let b = random::haar_unitary(dim, &mut rng);
        let est = qadkit::swaptest::complex_overlap(&a, &b, qadkit::swaptest::EstimatorMode::Exact).unwrap();
        let direct = a.first_column().inner(&b.first_column());
        prop_assert!((est.value - direct).norm() < 1e-12);
    }

    /// Dataset files round-trip bytewise through save and load.
    #[test]
    fn dataset_round_trip(seed in any::<u64>(), m in 2usize..=4, pure in any::<bool>()) {
        let spec = qadkit::registry::DatasetSpec {
            m,
            dim: 3,
            kind: if pure { "pure".into() } else { "mixed".into() },
            base: qadkit::registry::BaseRecipe::Haar,
            delta: 0.3,
            anomaly: if pure {
                qadkit::registry::AnomalyRecipe::Orthogonal
            } else {
                qadkit::registry::AnomalyRecipe::Depolarize { p: 0.5 }
            },
            seed,
        };
        let ts = qadkit::registry::synthesize(&spec).unwrap();
        let text = qadkit::registry::to_json_string(&ts).unwrap();
        let reloaded = qadkit::registry::load_str(&text).unwrap();
        prop_assert_eq!(text, qadkit::registry::to_json_string(&reloaded).unwrap());
    }

    /// Shot partitions merge to the sequential count: evaluating partitions
    /// in parallel (any order) reproduces the sequential run bit for bit.
    #[test]
    fn shot_partitions_merge_associatively(seed in any::<u64>(), p in 0.0f64..=1.0) {
        use rand_distr::{Binomial, Distribution};
        use rayon::prelude::*;

        let shots = 3 * qadkit::qcore::PARTITION_SHOTS + 123;
        let sequential = qadkit::qcore::sample_bernoulli(p, shots, seed).unwrap();

        let partitions: Vec<(u64, u64)> = {
            let mut v = Vec::new();
            let mut remaining = shots;
            let mut index = 0u64;
            while remaining > 0 {
                let batch = remaining.min(qadkit::qcore::PARTITION_SHOTS);
                v.push((index, batch));
                remaining -= batch;
                index += 1;
            }
            v
        };
        let parallel_ones: u64 = partitions
            .par_iter()
            .map(|&(index, batch)| {
                let mut rng = qadkit::qcore::sampling::partition_rng(seed, index);
                Binomial::new(batch, p).unwrap().sample(&mut rng)
            })
            .sum();
        prop_assert_eq!(parallel_ones, sequential.ones);
    }
}

/// A disjoint-target commutation check kept outside proptest: the operators
/// act on different subsystems, so order cannot matter.
#[test]
fn disjoint_unitaries_commute_on_density_matrices() {
    let mut rng = random::seeded_rng(99);
    let rho = {
        let a = random::haar_state(6, &mut rng).to_density();
        DensityMatrix::new(a.mat().clone()).unwrap()
    };
    let u = random::haar_unitary(2, &mut rng);
    let v = random::haar_unitary(3, &mut rng);
    let layout = RegisterLayout::new(vec![2, 3]).unwrap();
    let a = qadkit::qcore::apply_unitary_density(&rho, &layout, &u, &[0]).unwrap();
    let a = qadkit::qcore::apply_unitary_density(&a, &layout, &v, &[1]).unwrap();
    let b = qadkit::qcore::apply_unitary_density(&rho, &layout, &v, &[1]).unwrap();
    let b = qadkit::qcore::apply_unitary_density(&b, &layout, &u, &[0]).unwrap();
    assert!((a.mat() - b.mat()).iter().all(|x| x.norm() < 1e-12));
}

/// The gather/scatter density update agrees with the embedded-operator
/// conjugation it replaces.
#[test]
fn density_update_matches_embedded_conjugation() {
    let mut rng = random::seeded_rng(100);
    let rho = {
        let a = random::haar_state(12, &mut rng).to_density();
        let b = random::haar_state(12, &mut rng).to_density();
        DensityMatrix::new(a.mat() * Complex64::new(0.4, 0.0) + b.mat() * Complex64::new(0.6, 0.0))
            .unwrap()
    };
    let layout = RegisterLayout::new(vec![2, 3, 2]).unwrap();
    let u = random::haar_unitary(4, &mut rng);
    let fast = qadkit::qcore::apply_unitary_density(&rho, &layout, &u, &[2, 0]).unwrap();
    let embedded = qadkit::qcore::embed_operator(u.mat(), &layout, &[2, 0]).unwrap();
    let slow = &embedded * rho.mat() * embedded.adjoint();
    assert!((fast.mat() - slow).iter().all(|x| x.norm() < 1e-12));
}

/// Unitary wrapper rejects a non-unitary matrix (error-path sanity).
#[test]
fn unitary_gate_rejects_scaled_matrix() {
    let mat = DMatrix::from_diagonal_element(2, 2, Complex64::new(1.1, 0.0));
    assert!(Unitary::new(mat).is_err());
}

/// Tensor of pure states stays a valid pure state for every dim pair.
#[test]
fn tensor_pure_norms() {
    let mut rng = random::seeded_rng(101);
    for da in 1..=4usize {
        for db in 1..=4usize {
            let a = random::haar_state(da, &mut rng);
            let b = random::haar_state(db, &mut rng);
            let ab = tensor_pure(&a, &b);
            let norm: f64 = ab.amps().iter().map(|x| x.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            let _ = PureState::new(ab.amps().clone()).unwrap();
        }
    }
}
