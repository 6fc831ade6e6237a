//! Hadamard-product Hamiltonian simulation.
//!
//! The three-register modified swap operator
//! `S' = sum_jk |k><j| (x) |j><k| (x) |k><j|`
//! generates, to first order in `dt`, the elementwise-product Hamiltonian:
//! conjugating `rho_1 (x) rho_2 (x) sigma` by `exp(-i S' dt)` and tracing
//! out the first two registers yields
//! `sigma - i dt [(rho_1^T * rho_2), sigma] + O(dt^2)`,
//! where `*` is the Hadamard (entrywise) product. Concatenating `n` such
//! steps with fresh ancilla copies simulates `exp(-i H t)` with error
//! `O(t^2 / n)`.
//!
//! Feeding in two copies of the overlap-kernel density matrix
//! `K_hat_0 = K_0 / M` gives the generator `K_hat_0^T * K_hat_0 = K / M^2`,
//! one factor of `M` short of the normalized kernel `K_hat = K / M`;
//! [`simulate_exp_k`] therefore scales each internal step time by `M` so
//! that `n` steps realize `exp(-i K_hat t)` exactly in the `n -> inf` limit.
//!
//! `exp(-i S' dt)` is computed by a dense Hermitian eigendecomposition of
//! `S'`, cached per register dimension.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QadError, Result};
use crate::qcore::{partial_trace, tensor_density, DensityMatrix, RegisterLayout, Unitary};

const MODULE: &str = "hamsim";

/// The modified swap operator on the `M^3`-dimensional three-register space.
///
/// Action on basis states: `|j, k, j> -> |k, j, k>`; every `|j, k, l>` with
/// `l != j` is annihilated. Hermitian and at most 1-sparse per column.
#[derive(Debug, Clone)]
pub struct SPrimeOperator {
    m: usize,
    mat: DMatrix<Complex64>,
}

impl SPrimeOperator {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m * self.m * self.m
    }

    pub fn mat(&self) -> &DMatrix<Complex64> {
        &self.mat
    }
}

/// Builds `S'` as a dense `M^3 x M^3` matrix from the defining sum.
pub fn build_sprime(m: usize) -> Result<SPrimeOperator> {
    if m < 2 {
        return Err(QadError::precondition(MODULE, "build_sprime", "M must be >= 2"));
    }
    let dim = m * m * m;
    let mut mat = DMatrix::<Complex64>::zeros(dim, dim);
    for j in 0..m {
        for k in 0..m {
            // |k, j, k> <j, k, j|
            let row = (k * m + j) * m + k;
            let col = (j * m + k) * m + j;
            mat[(row, col)] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(SPrimeOperator { m, mat })
}

struct SPrimeEigen {
    values: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

fn sprime_eigen(m: usize) -> Result<Arc<SPrimeEigen>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SPrimeEigen>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("eigencache poisoned");
    if let Some(e) = guard.get(&m) {
        return Ok(Arc::clone(e));
    }
    let sprime = build_sprime(m)?;
    let eig = nalgebra::SymmetricEigen::new(sprime.mat.clone());
    let entry = Arc::new(SPrimeEigen {
        values: eig.eigenvalues,
        vectors: eig.eigenvectors,
    });
    guard.insert(m, Arc::clone(&entry));
    Ok(entry)
}

/// `exp(-i S' dt)` (negative `dt` gives the inverse evolution).
pub fn sprime_evolution(m: usize, dt: f64) -> Result<Unitary> {
    let eig = sprime_eigen(m)?;
    let phases = DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&l| Complex64::from_polar(1.0, -l * dt)),
    );
    let mut mat = eig.vectors.clone();
    for (j, phase) in phases.iter().enumerate() {
        for i in 0..mat.nrows() {
            mat[(i, j)] *= phase;
        }
    }
    let full = mat * eig.vectors.adjoint();
    Unitary::new(full).map_err(|e| {
        QadError::invariant(MODULE, "sprime_evolution", format!("evolution not unitary: {e}"))
    })
}

/// Hadamard (entrywise) product of the transpose of `a` with `b`.
pub fn hadamard_transpose_product(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[(c, r)] * b[(r, c)])
}

/// One evolution step compared against its first-order prediction.
#[derive(Debug, Clone)]
pub struct EvolutionStepReport {
    pub dt: f64,
    pub output: DensityMatrix,
    /// `sigma - i dt [(rho_1^T * rho_2), sigma]`.
    pub first_order: DMatrix<Complex64>,
    /// Frobenius norm of `output - first_order`.
    pub deviation: f64,
}

fn step_channel(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    sigma: &DensityMatrix,
    dt: f64,
) -> Result<DensityMatrix> {
    let m = sigma.dim();
    let w = sprime_evolution(m, dt)?;
    let total = tensor_density(&tensor_density(rho1, rho2), sigma);
    let evolved = w.mat() * total.mat() * w.mat().adjoint();
    let layout = RegisterLayout::new(vec![m, m, m])?;
    partial_trace(&DensityMatrix::trusted(evolved), &layout, &[2])
}

/// Conjugates `rho_1 (x) rho_2 (x) sigma` by `exp(-i S' dt)`, traces out the
/// ancilla registers, and reports the deviation from the first-order
/// commutator prediction.
pub fn evolution_step(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    sigma: &DensityMatrix,
    dt: f64,
) -> Result<EvolutionStepReport> {
    if rho1.dim() != sigma.dim() || rho2.dim() != sigma.dim() {
        return Err(QadError::dimension(
            MODULE,
            "evolution_step",
            format!("dims {} / {} / {}", rho1.dim(), rho2.dim(), sigma.dim()),
        ));
    }
    if dt <= 0.0 {
        return Err(QadError::precondition(MODULE, "evolution_step", "dt must be positive"));
    }
    let output = step_channel(rho1, rho2, sigma, dt)?;

    let generator = hadamard_transpose_product(rho1.mat(), rho2.mat());
    let commutator = &generator * sigma.mat() - sigma.mat() * &generator;
    let first_order = sigma.mat() - commutator * Complex64::new(0.0, dt);
    let deviation = (output.mat() - &first_order).norm();
    Ok(EvolutionStepReport {
        dt,
        output,
        first_order,
        deviation,
    })
}

/// Simulates `exp(-i K_hat t) sigma exp(i K_hat t)` for the normalized
/// kernel `K_hat = M (K_hat_0^T * K_hat_0)` by `n` concatenated `S'` steps
/// with fresh copies of `k0` per step. Error decreases as `O(t^2 / n)`.
pub fn simulate_exp_k(
    k0: &DensityMatrix,
    sigma: &DensityMatrix,
    t: f64,
    n: usize,
) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(QadError::precondition(MODULE, "simulate_exp_k", "n must be >= 1"));
    }
    if k0.dim() != sigma.dim() {
        return Err(QadError::dimension(
            MODULE,
            "simulate_exp_k",
            format!("kernel dim {} vs sigma dim {}", k0.dim(), sigma.dim()),
        ));
    }
    if t == 0.0 {
        return Ok(sigma.clone());
    }
    let m = sigma.dim() as f64;
    // the per-step generator is K_hat / M; dilate the step time to compensate
    let dt = m * t / n as f64;
    let mut state = sigma.clone();
    for _ in 0..n {
        state = step_channel(k0, k0, &state, dt)?;
    }
    Ok(state)
}

/// The normalized kernel generator `M (k0^T * k0)` realized by
/// [`simulate_exp_k`].
pub fn kernel_generator(k0: &DensityMatrix) -> DMatrix<Complex64> {
    hadamard_transpose_product(k0.mat(), k0.mat()) * Complex64::new(k0.dim() as f64, 0.0)
}

/// Exact conjugation `exp(-i H t) sigma exp(i H t)` for a Hermitian `H`.
pub fn exact_evolution(
    hamiltonian: &DMatrix<Complex64>,
    sigma: &DensityMatrix,
    t: f64,
) -> DensityMatrix {
    let eig = nalgebra::SymmetricEigen::new(hamiltonian.clone());
    let mut u = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -l * t);
        for i in 0..u.nrows() {
            u[(i, j)] *= phase;
        }
    }
    let w = u * eig.eigenvectors.adjoint();
    DensityMatrix::trusted(&w * sigma.mat() * w.adjoint())
}

/// Trace distance `(1/2) || a - b ||_1`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let diff = a.mat() - b.mat();
    let eig = nalgebra::SymmetricEigen::new(diff);
    0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random;
    use approx::assert_abs_diff_eq;

    #[test]
    #[allow(clippy::identity_op, clippy::erasing_op)]
    fn sprime_defining_action_m2() {
        let s = build_sprime(2).unwrap();
        // S'|0,1,0> = |1,0,1>
        let col = 0 * 4 + 1 * 2 + 0;
        let row = 1 * 4 + 0 * 2 + 1;
        assert_abs_diff_eq!(s.mat()[(row, col)].re, 1.0, epsilon = 1e-15);
        // S'|0,1,1> = 0: column 3 empty
        assert!(s.mat().column(3).iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn sprime_column_sparsity_exhaustive_m3() {
        let s = build_sprime(3).unwrap();
        for c in 0..27 {
            let nonzero = s.mat().column(c).iter().filter(|x| x.norm() > 0.0).count();
            assert!(nonzero <= 1, "column {c} has {nonzero} entries");
        }
    }

    #[test]
    fn sprime_hermitian_and_sparse_up_to_m8() {
        for m in 2..=8 {
            let s = build_sprime(m).unwrap();
            assert!(crate::qcore::hermiticity_deviation(s.mat()) < 1e-15);
            for c in 0..s.dim() {
                let nonzero = s.mat().column(c).iter().filter(|x| x.norm() > 0.0).count();
                assert!(nonzero <= 1, "M = {m}, column {c} has {nonzero} entries");
            }
        }
    }

    #[test]
    fn evolution_is_unitary_and_inverse_consistent() {
        let w = sprime_evolution(2, 0.3).unwrap();
        let winv = sprime_evolution(2, -0.3).unwrap();
        let prod = w.mat() * winv.mat();
        let id = DMatrix::<Complex64>::identity(8, 8);
        assert!((prod - id).norm() < 1e-12);
    }

    fn random_density(d: usize, rng: &mut impl rand::Rng) -> DensityMatrix {
        let a = random::haar_state(d, rng).to_density();
        let b = random::haar_state(d, rng).to_density();
        DensityMatrix::new(
            a.mat() * Complex64::new(0.6, 0.0) + b.mat() * Complex64::new(0.4, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn commuting_sigma_has_second_order_deviation() {
        let mut rng = random::seeded_rng(1);
        let m = 3;
        let rho1 = random_density(m, &mut rng);
        let rho2 = random_density(m, &mut rng);
        let sigma = DensityMatrix::maximally_mixed(m);
        let r1 = evolution_step(&rho1, &rho2, &sigma, 1e-2).unwrap();
        let r2 = evolution_step(&rho1, &rho2, &sigma, 5e-3).unwrap();
        // first-order term vanishes; what remains shrinks ~4x per halving
        let ratio = r1.deviation / r2.deviation;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn deviation_halving_ratio_on_random_inputs() {
        let mut rng = random::seeded_rng(2);
        let m = 4;
        let rho1 = random_density(m, &mut rng);
        let rho2 = random_density(m, &mut rng);
        let sigma = random_density(m, &mut rng);
        let r1 = evolution_step(&rho1, &rho2, &sigma, 1e-2).unwrap();
        let r2 = evolution_step(&rho1, &rho2, &sigma, 5e-3).unwrap();
        let ratio = r1.deviation / r2.deviation;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn first_order_generator_from_linear_fit() {
        let mut rng = random::seeded_rng(3);
        let m = 3;
        let rho1 = random_density(m, &mut rng);
        let rho2 = random_density(m, &mut rng);
        let sigma = random_density(m, &mut rng);

        let slope = |dt: f64| {
            let out = evolution_step(&rho1, &rho2, &sigma, dt).unwrap().output;
            (out.mat() - sigma.mat()) / Complex64::new(dt, 0.0)
        };
        // linear fit across {1e-2, 1e-3, 1e-4}: extrapolate the two smallest
        // to dt -> 0 and use the largest as a linearity sanity check
        let d2 = slope(1e-3);
        let d3 = slope(1e-4);
        let extrapolated = &d3 + (&d3 - &d2) * Complex64::new(1e-4 / (1e-3 - 1e-4), 0.0);

        let generator = hadamard_transpose_product(rho1.mat(), rho2.mat());
        let expected = (&generator * sigma.mat() - sigma.mat() * &generator)
            * Complex64::new(0.0, -1.0);
        let dev = (&extrapolated - &expected)
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-6, "entrywise deviation {dev}");

        let d1 = slope(1e-2);
        assert!((&d1 - &expected).norm() < 0.2, "1e-2 point wildly nonlinear");
    }

    #[test]
    fn generator_is_hadamard_product_of_kernel() {
        // rho1 = rho2 = K_hat_0 gives M (K_hat_0^T * K_hat_0) as the realized
        // generator of simulate_exp_k
        let mut rng = random::seeded_rng(4);
        let k0 = random_density(4, &mut rng);
        let gen = kernel_generator(&k0);
        for r in 0..4 {
            for c in 0..4 {
                let expected = k0.mat()[(c, r)] * k0.mat()[(r, c)] * Complex64::new(4.0, 0.0);
                assert_abs_diff_eq!(gen[(r, c)].re, expected.re, epsilon = 1e-14);
                assert_abs_diff_eq!(gen[(r, c)].im, expected.im, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let mut rng = random::seeded_rng(5);
        let k0 = random_density(3, &mut rng);
        let sigma = random_density(3, &mut rng);
        let out = simulate_exp_k(&k0, &sigma, 0.0, 8).unwrap();
        assert!((out.mat() - sigma.mat()).norm() < 1e-15);
    }

    #[test]
    fn diagonal_kernel_evolution_converges() {
        // orthogonal training states: K_hat_0 = 1/M, the generator is a
        // multiple of the identity and the exact evolution leaves sigma fixed
        let m = 2;
        let k0 = DensityMatrix::maximally_mixed(m);
        let mut rng = random::seeded_rng(6);
        let sigma = random_density(m, &mut rng);
        let out = simulate_exp_k(&k0, &sigma, 1.0, 64).unwrap();
        let exact = exact_evolution(&kernel_generator(&k0), &sigma, 1.0);
        assert!((exact.mat() - sigma.mat()).norm() < 1e-12);
        let dist = trace_distance(&out, &exact);
        assert!(dist < 0.02, "trace distance {dist}");
    }

    #[test]
    fn error_halves_when_steps_double() {
        let mut rng = random::seeded_rng(7);
        let k0 = random_density(4, &mut rng);
        let sigma = random_density(4, &mut rng);
        let t = 1.0;
        let exact = exact_evolution(&kernel_generator(&k0), &sigma, t);
        let errs: Vec<f64> = [16usize, 32, 64]
            .iter()
            .map(|&n| trace_distance(&simulate_exp_k(&k0, &sigma, t, n).unwrap(), &exact))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.6..=2.4).contains(&ratio), "ratio {ratio} from errors {errs:?}");
        }
    }
}
