//! Overlap and fidelity estimator circuits.
//!
//! Three estimators, each simulated as its measurement circuit:
//!
//! - [`modified_swap_test`] — complex overlap `<psi_A|psi_B>` for pure
//!   sources, one real component per run (the phase-sensitive variant of the
//!   swap test);
//! - [`standard_swap_test`] — `tr(rho_a rho_b)` for any pair of states via
//!   the controlled-SWAP circuit;
//! - [`kraus_inner_product`] — the mixed-state pairing
//!   `<rho_A, rho_B> = sum_l <0| E_l^(A)dagger E_l^(B) |0>` through the
//!   interferometric channel whose Kraus operators act per branch.
//!
//! Every estimator runs in exact mode (report the analytic circuit
//! probability) or shot mode (seeded Bernoulli sampling of that
//! probability). Decode conventions are fixed against the dense oracle:
//! `Re = 1 - 2P` and, under `zeta = i`, `Im = 2P - 1`. For the
//! interferometric test the imaginary-part gate is the Hadamard *preceded*
//! by `diag(1, -i)`; a phase applied after the Hadamard would leave the
//! outcome statistics untouched, so the phase has to come first.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QadError, Result};
use crate::qcore::{
    apply_kraus_full, apply_unitary_density, apply_unitary_pure, basis_projector, controlled,
    gates, projection_probability_density, sample_bernoulli, tensor_density, DensityMatrix,
    KrausChannel, PureState, RegisterLayout, Unitary,
};
use crate::registry::RealizedState;

const MODULE: &str = "swaptest";

/// Exact analytic probabilities, or Bernoulli sampling with a budget and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

impl EstimatorMode {
    pub fn is_exact(&self) -> bool {
        matches!(self, EstimatorMode::Exact)
    }

    /// The same mode with a component-derived seed, so independent
    /// components inside one estimate draw from unrelated streams.
    pub fn derived(&self, index: u64) -> EstimatorMode {
        match *self {
            EstimatorMode::Exact => EstimatorMode::Exact,
            EstimatorMode::Shots { shots, seed } => EstimatorMode::Shots {
                shots,
                seed: crate::qcore::derive_seed(seed, index),
            },
        }
    }
}

/// Which part of a complex overlap a single run estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapComponent {
    Real,
    Imag,
}

impl OverlapComponent {
    /// The ancilla phase `zeta` of the preparation `(|0> + zeta|1>)/sqrt(2)`.
    pub fn zeta(self) -> Complex64 {
        match self {
            OverlapComponent::Real => Complex64::new(1.0, 0.0),
            OverlapComponent::Imag => Complex64::new(0.0, 1.0),
        }
    }

    fn label(self) -> &'static str {
        match self {
            OverlapComponent::Real => "re",
            OverlapComponent::Imag => "im",
        }
    }

    /// `Re = 1 - 2P`; `Im = 2P - 1` (from `Re(i w) = -Im(w)`).
    fn decode(self, p: f64) -> f64 {
        match self {
            OverlapComponent::Real => 1.0 - 2.0 * p,
            OverlapComponent::Imag => 2.0 * p - 1.0,
        }
    }
}

/// One measured circuit output: the ancilla probability (exact and, in shot
/// mode, sampled), the decoded value, and the Wald error of the probability.
#[derive(Debug, Clone, Copy)]
pub struct ComponentEstimate {
    pub label: &'static str,
    /// Analytic circuit probability.
    pub raw_probability: f64,
    /// Sampled frequency in shot mode; equals `raw_probability` in exact mode.
    pub probability: f64,
    /// Decoded component value.
    pub value: f64,
    /// Standard error of `probability` (0 in exact mode).
    pub stderr: f64,
    pub shots: u64,
}

impl ComponentEstimate {
    /// Standard error of the decoded value (the decode maps are `+-2p + c`).
    pub fn value_stderr(&self) -> f64 {
        2.0 * self.stderr
    }
}

/// A complex estimate assembled from per-component circuit runs.
#[derive(Debug, Clone)]
pub struct OverlapEstimate {
    pub value: Complex64,
    pub exact: bool,
    pub components: Vec<ComponentEstimate>,
}

impl OverlapEstimate {
    pub fn shots_total(&self) -> u64 {
        self.components.iter().map(|c| c.shots).sum()
    }
}

fn finish(
    label: &'static str,
    raw_probability: f64,
    mode: EstimatorMode,
    decode: impl Fn(f64) -> f64,
) -> Result<ComponentEstimate> {
    match mode {
        EstimatorMode::Exact => Ok(ComponentEstimate {
            label,
            raw_probability,
            probability: raw_probability,
            value: decode(raw_probability),
            stderr: 0.0,
            shots: 0,
        }),
        EstimatorMode::Shots { shots, seed } => {
            if shots == 0 {
                return Err(QadError::precondition(MODULE, "estimate", "shots must be >= 1"));
            }
            let sample = sample_bernoulli(raw_probability, shots, seed)?;
            Ok(ComponentEstimate {
                label,
                raw_probability,
                probability: sample.estimate,
                value: decode(sample.estimate),
                stderr: sample.stderr,
                shots,
            })
        }
    }
}

/// Estimates one real component of `<psi_A|psi_B>` by preparing
/// `(|0> + zeta|1>)/sqrt(2) (x) |0>`, applying
/// `|0><0| (x) U_A + |1><1| (x) U_B`, a Hadamard on the ancilla, and
/// measuring `P(1) = (1/2)(1 - Re(zeta <psi_A|psi_B>))`.
pub fn modified_swap_test(
    src_a: &Unitary,
    src_b: &Unitary,
    component: OverlapComponent,
    mode: EstimatorMode,
) -> Result<ComponentEstimate> {
    if src_a.dim() != src_b.dim() {
        return Err(QadError::dimension(
            MODULE,
            "modified_swap_test",
            format!("source dims {} vs {}", src_a.dim(), src_b.dim()),
        ));
    }
    let d = src_a.dim();
    let layout = RegisterLayout::new(vec![2, d])?;
    let mut state = PureState::basis(2 * d, 0);
    state = apply_unitary_pure(&state, &layout, &gates::superpose_with_phase(component.zeta())?, &[0])?;
    let ctrl = controlled(&[src_a.clone(), src_b.clone()])?;
    state = apply_unitary_pure(&state, &layout, &ctrl, &[0, 1])?;
    state = apply_unitary_pure(&state, &layout, &gates::hadamard(), &[0])?;
    let p = crate::qcore::projection_probability_pure(&state, &layout, &basis_projector(2, 1), &[0])?;
    finish(component.label(), p, mode, |p| component.decode(p))
}

/// Runs the modified swap test for both components and reassembles the
/// complex overlap `<psi_A|psi_B>`.
pub fn complex_overlap(src_a: &Unitary, src_b: &Unitary, mode: EstimatorMode) -> Result<OverlapEstimate> {
    let re = modified_swap_test(src_a, src_b, OverlapComponent::Real, mode.derived(0))?;
    let im = modified_swap_test(src_a, src_b, OverlapComponent::Imag, mode.derived(1))?;
    Ok(OverlapEstimate {
        value: Complex64::new(re.value, im.value),
        exact: mode.is_exact(),
        components: vec![re, im],
    })
}

/// Estimates `tr(rho_a rho_b)` (`|<a|b>|^2` for pure inputs) via the
/// controlled-SWAP circuit: `P(pass) = (1/2)(1 + tr(rho_a rho_b))`.
pub fn standard_swap_test(
    a: &RealizedState,
    b: &RealizedState,
    mode: EstimatorMode,
) -> Result<ComponentEstimate> {
    let rho_a = a.to_density();
    let rho_b = b.to_density();
    if rho_a.dim() != rho_b.dim() {
        return Err(QadError::dimension(
            MODULE,
            "standard_swap_test",
            format!("state dims {} vs {}", rho_a.dim(), rho_b.dim()),
        ));
    }
    let d = rho_a.dim();
    let layout = RegisterLayout::new(vec![2, d, d])?;
    let plus = {
        let h = gates::hadamard();
        DensityMatrix::new(h.mat().column(0).clone_owned() * h.mat().column(0).adjoint())
            .expect("|+><+| is a valid density matrix")
    };
    let mut rho = tensor_density(&tensor_density(&plus, &rho_a), &rho_b);
    let cswap = controlled(&[Unitary::identity(d * d), gates::swap(d)])?;
    rho = apply_unitary_density(&rho, &layout, &cswap, &[0, 1, 2])?;
    rho = apply_unitary_density(&rho, &layout, &gates::hadamard(), &[0])?;
    let p = projection_probability_density(&rho, &layout, &basis_projector(2, 0), &[0])?;
    // tr(rho_a rho_b) = 2 P(pass) - 1
    finish("swap", p, mode, |p| 2.0 * p - 1.0)
}

/// The final ancilla gate of the interferometric imaginary-part circuit:
/// `H . diag(1, -i)`.
fn imag_decode_gate() -> Unitary {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Unitary::new(DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(s, 0.0),
            Complex64::new(0.0, -s),
            Complex64::new(s, 0.0),
            Complex64::new(0.0, s),
        ],
    ))
    .expect("unitary by construction")
}

fn kraus_component(
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    component: OverlapComponent,
    mode: EstimatorMode,
) -> Result<ComponentEstimate> {
    let d = ch_a.dim();
    let layout = RegisterLayout::new(vec![2, d])?;

    // P_l = |0><0| (x) E_l^(B) + |1><1| (x) E_l^(A): the conjugated slot of
    // <rho_A, rho_B> rides the |1> branch
    let mut interferometric = Vec::with_capacity(ch_a.len());
    for (ea, eb) in ch_a.operators().iter().zip(ch_b.operators()) {
        let mut p = DMatrix::<Complex64>::zeros(2 * d, 2 * d);
        for r in 0..d {
            for c in 0..d {
                p[(r, c)] = eb[(r, c)];
                p[(d + r, d + c)] = ea[(r, c)];
            }
        }
        interferometric.push(p);
    }
    // joint completeness follows from each channel's completeness; assert it
    let completeness = crate::qcore::completeness_deviation(&interferometric);
    if completeness > crate::qcore::TOL_COMPLETENESS {
        return Err(QadError::invariant(
            MODULE,
            "kraus_inner_product",
            format!("interferometric Kraus set completeness deviation {completeness:.3e}"),
        ));
    }

    let plus = {
        let h = gates::hadamard();
        DensityMatrix::new(h.mat().column(0).clone_owned() * h.mat().column(0).adjoint())
            .expect("|+><+| is a valid density matrix")
    };
    let zero = PureState::basis(d, 0).to_density();
    let rho_in = tensor_density(&plus, &zero);
    let mut rho = apply_kraus_full(&rho_in, &interferometric)?;
    let final_gate = match component {
        OverlapComponent::Real => gates::hadamard(),
        OverlapComponent::Imag => imag_decode_gate(),
    };
    rho = apply_unitary_density(&rho, &layout, &final_gate, &[0])?;
    let p = projection_probability_density(&rho, &layout, &basis_projector(2, 1), &[0])?;
    finish(component.label(), p, mode, |p| component.decode(p))
}

/// Estimates the mixed-state pairing
/// `<rho_A, rho_B> = sum_l <0| E_l^(A)dagger E_l^(B) |0>`,
/// which reduces to `<psi_A|psi_B>` for unitary channels. Requires aligned
/// Kraus counts (training sets pad on construction).
pub fn kraus_inner_product(
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    mode: EstimatorMode,
) -> Result<OverlapEstimate> {
    if ch_a.dim() != ch_b.dim() {
        return Err(QadError::dimension(
            MODULE,
            "kraus_inner_product",
            format!("channel dims {} vs {}", ch_a.dim(), ch_b.dim()),
        ));
    }
    if ch_a.len() != ch_b.len() {
        return Err(QadError::precondition(
            MODULE,
            "kraus_inner_product",
            format!(
                "Kraus counts {} vs {}; align them (zero padding) first",
                ch_a.len(),
                ch_b.len()
            ),
        ));
    }
    let re = kraus_component(ch_a, ch_b, OverlapComponent::Real, mode.derived(0))?;
    let im = kraus_component(ch_a, ch_b, OverlapComponent::Imag, mode.derived(1))?;
    Ok(OverlapEstimate {
        value: Complex64::new(re.value, im.value),
        exact: mode.is_exact(),
        components: vec![re, im],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equal_sources_give_unit_real_part() {
        let u = gates::hadamard();
        let est = modified_swap_test(&u, &u, OverlapComponent::Real, EstimatorMode::Exact).unwrap();
        assert_abs_diff_eq!(est.raw_probability, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn orthogonal_sources_give_half_probability() {
        let a = Unitary::identity(2);
        let b = gates::pauli_x();
        for component in [OverlapComponent::Real, OverlapComponent::Imag] {
            let est = modified_swap_test(&a, &b, component, EstimatorMode::Exact).unwrap();
            assert_abs_diff_eq!(est.raw_probability, 0.5, epsilon = 1e-14);
            assert_abs_diff_eq!(est.value, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn reassembled_overlap_matches_inner_product() {
        let mut rng = random::seeded_rng(3);
        for _ in 0..10 {
            let a = random::haar_unitary(4, &mut rng);
            let b = random::haar_unitary(4, &mut rng);
            let est = complex_overlap(&a, &b, EstimatorMode::Exact).unwrap();
            let direct = a.first_column().inner(&b.first_column());
            assert_abs_diff_eq!(est.value.re, direct.re, epsilon = 1e-12);
            assert_abs_diff_eq!(est.value.im, direct.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn swap_test_pure_self_fidelity() {
        let mut rng = random::seeded_rng(4);
        let psi = RealizedState::Pure(random::haar_state(4, &mut rng));
        let est = standard_swap_test(&psi, &psi, EstimatorMode::Exact).unwrap();
        assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn swap_test_mixed_against_basis_state() {
        let rho = RealizedState::Mixed(DensityMatrix::maximally_mixed(2));
        let psi = RealizedState::Pure(PureState::basis(2, 0));
        let est = standard_swap_test(&rho, &psi, EstimatorMode::Exact).unwrap();
        assert_abs_diff_eq!(est.value, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn swap_test_random_mixed_pair_matches_trace() {
        let mut rng = random::seeded_rng(5);
        for _ in 0..5 {
            let a = random_density(3, &mut rng);
            let b = random_density(3, &mut rng);
            let est = standard_swap_test(
                &RealizedState::Mixed(a.clone()),
                &RealizedState::Mixed(b.clone()),
                EstimatorMode::Exact,
            )
            .unwrap();
            assert_abs_diff_eq!(est.value, a.overlap(&b), epsilon = 1e-12);
        }
    }

    #[test]
    fn swap_test_shot_mode_within_stderr() {
        let mut rng = random::seeded_rng(6);
        let a = random_density(2, &mut rng);
        let b = random_density(2, &mut rng);
        let exact = a.overlap(&b);
        let est = standard_swap_test(
            &RealizedState::Mixed(a),
            &RealizedState::Mixed(b),
            EstimatorMode::Shots { shots: 10_000, seed: 7 },
        )
        .unwrap();
        assert!((est.value - exact).abs() <= 4.0 * est.value_stderr() + 1e-9);
    }

    fn random_density(d: usize, rng: &mut impl rand::Rng) -> DensityMatrix {
        // mixture of two random pure states
        let p = 0.3;
        let a = random::haar_state(d, rng).to_density();
        let b = random::haar_state(d, rng).to_density();
        DensityMatrix::new(
            a.mat() * Complex64::new(p, 0.0) + b.mat() * Complex64::new(1.0 - p, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn unitary_channels_reduce_to_modified_swap_test() {
        let mut rng = random::seeded_rng(8);
        let u = random::haar_unitary(3, &mut rng);
        let v = random::haar_unitary(3, &mut rng);
        let mixed = kraus_inner_product(
            &KrausChannel::from_unitary(&u),
            &KrausChannel::from_unitary(&v),
            EstimatorMode::Exact,
        )
        .unwrap();
        let pure = complex_overlap(&u, &v, EstimatorMode::Exact).unwrap();
        assert_abs_diff_eq!(mixed.value.re, pure.value.re, epsilon = 1e-12);
        assert_abs_diff_eq!(mixed.value.im, pure.value.im, epsilon = 1e-12);
        // and both equal <0|U^dagger V|0>
        let direct = u.first_column().inner(&v.first_column());
        assert_abs_diff_eq!(mixed.value.re, direct.re, epsilon = 1e-12);
        assert_abs_diff_eq!(mixed.value.im, direct.im, epsilon = 1e-12);
    }

    #[test]
    fn identical_channels_give_unity_by_completeness() {
        let ch = KrausChannel::new(gates::depolarizing_kraus(2, 0.35)).unwrap();
        let est = kraus_inner_product(&ch, &ch, EstimatorMode::Exact).unwrap();
        assert_abs_diff_eq!(est.value.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.value.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn random_channels_match_direct_kraus_sum() {
        let mut rng = random::seeded_rng(9);
        for _ in 0..5 {
            let a = random_two_kraus_channel(&mut rng);
            let b = random_two_kraus_channel(&mut rng);
            let est = kraus_inner_product(&a, &b, EstimatorMode::Exact).unwrap();
            let mut direct = Complex64::default();
            for (ea, eb) in a.operators().iter().zip(b.operators()) {
                direct += ea.column(0).dotc(&eb.column(0));
            }
            assert_abs_diff_eq!(est.value.re, direct.re, epsilon = 1e-12);
            assert_abs_diff_eq!(est.value.im, direct.im, epsilon = 1e-12);
        }
    }

    /// Two-operator channel built from a random unitary's block columns.
    fn random_two_kraus_channel(rng: &mut impl rand::Rng) -> KrausChannel {
        let big = random::haar_unitary(4, rng);
        // E_0 = top 2x2 block of the first two columns, E_1 = bottom block;
        // completeness follows from the columns' orthonormality
        let e0 = DMatrix::from_fn(2, 2, |r, c| big.mat()[(r, c)]);
        let e1 = DMatrix::from_fn(2, 2, |r, c| big.mat()[(r + 2, c)]);
        KrausChannel::new(vec![e0, e1]).unwrap()
    }

    #[test]
    fn hermitian_symmetry_of_pairing() {
        let mut rng = random::seeded_rng(10);
        let a = random_two_kraus_channel(&mut rng);
        let b = random_two_kraus_channel(&mut rng);
        let ab = kraus_inner_product(&a, &b, EstimatorMode::Exact).unwrap();
        let ba = kraus_inner_product(&b, &a, EstimatorMode::Exact).unwrap();
        assert_abs_diff_eq!(ab.value.re, ba.value.re, epsilon = 1e-12);
        assert_abs_diff_eq!(ab.value.im, -ba.value.im, epsilon = 1e-12);
    }

    #[test]
    fn unaligned_kraus_counts_rejected() {
        let one = KrausChannel::from_unitary(&Unitary::identity(2));
        let four = KrausChannel::new(gates::depolarizing_kraus(2, 0.5)).unwrap();
        assert_eq!(
            kraus_inner_product(&one, &four, EstimatorMode::Exact).unwrap_err().kind(),
            "precondition"
        );
    }

    #[test]
    fn shot_mode_converges_across_budgets() {
        // |estimate - exact| <= 4 stderr in >= 95% of 200 seeded trials,
        // for every budget in {100, 1000, 10000}
        let mut rng = random::seeded_rng(12);
        let a = random::haar_unitary(4, &mut rng);
        let b = random::haar_unitary(4, &mut rng);
        let exact = modified_swap_test(&a, &b, OverlapComponent::Real, EstimatorMode::Exact).unwrap();
        for shots in [100u64, 1_000, 10_000] {
            let mut hits = 0;
            for seed in 0..200 {
                let est = modified_swap_test(
                    &a,
                    &b,
                    OverlapComponent::Real,
                    EstimatorMode::Shots { shots, seed },
                )
                .unwrap();
                if (est.value - exact.value).abs() <= 4.0 * est.value_stderr() + 1e-12 {
                    hits += 1;
                }
            }
            assert!(hits >= 190, "{hits}/200 at {shots} shots");
        }
    }

    #[test]
    fn shot_mode_is_deterministic_and_reports_stderr() {
        let u = Unitary::identity(2);
        let v = gates::hadamard();
        let mode = EstimatorMode::Shots { shots: 2048, seed: 11 };
        let a = complex_overlap(&u, &v, mode).unwrap();
        let b = complex_overlap(&u, &v, mode).unwrap();
        assert_eq!(a.value, b.value);
        for c in &a.components {
            assert_abs_diff_eq!(
                c.stderr,
                (c.probability * (1.0 - c.probability) / 2048.0).sqrt(),
                epsilon = 1e-15
            );
        }
    }
}
