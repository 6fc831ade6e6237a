//! One-class SVM detectors.
//!
//! Pipeline: build an `M x M` kernel over the training states (fidelity
//! `|<psi_i|psi_j>|^2` for pure sets, superfidelity for mixed), solve the
//! restricted least-squares system `(K + P_T M 1) alpha = e` (classically or
//! by simulated HHL), then score the test state either by direct summation
//! of estimated kernel terms or through the `|phi_1>`/`|phi_2>` overlap
//! circuit.
//!
//! Normalization bookkeeping: the quantum solve works with the trace-scaled
//! system `(K/M + P_T 1)|alpha> = |e_hat>`, whose solution is `sqrt(M)`
//! times the classical coefficient vector. [`AlphaSolution`] always stores
//! the classical-normalization coefficients; the overlap circuit rescales
//! its raw overlap by `sqrt(M) ||alpha||` so both routes report the same
//! proximity measure.

mod hhl;

pub use hhl::{solve_alpha_hhl, EvolutionBackend};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QadError, Result};
use crate::qcore::{
    apply_unitary_pure, basis_projector, controlled, gates, min_eigenvalue_hermitian,
    partial_trace_pure, projection_probability_pure, RegisterLayout, Unitary,
};
use crate::registry::{controlled_source, realize, RealizedState, StateKind, TrainingSet};
use crate::stateprep::{prepare_ar_ai, prepare_chi, ArVariant};
use crate::swaptest::{standard_swap_test, ComponentEstimate, EstimatorMode};

const MODULE: &str = "ocsvm";

/// PSD tolerance on kernel eigenvalues.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Fidelity,
    Superfidelity,
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelKind::Fidelity => write!(f, "fidelity"),
            KernelKind::Superfidelity => write!(f, "superfidelity"),
        }
    }
}

/// A real symmetric kernel matrix with unit diagonal.
///
/// Exact-mode kernels are PSD-checked on construction; shot-mode kernels
/// record their minimum eigenvalue (sampling noise can push it slightly
/// negative) and defer judgment to [`verify_kernel_psd`].
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    mat: DMatrix<f64>,
    kind: KernelKind,
    min_eigenvalue: f64,
    exact: bool,
}

impl KernelMatrix {
    pub fn new(mat: DMatrix<f64>, kind: KernelKind, exact: bool) -> Result<Self> {
        let m = mat.nrows();
        if m < 2 || mat.ncols() != m {
            return Err(QadError::dimension(MODULE, "KernelMatrix", "need a square matrix, M >= 2"));
        }
        for i in 0..m {
            if (mat[(i, i)] - 1.0).abs() > 1e-10 {
                return Err(QadError::invariant(
                    MODULE,
                    "KernelMatrix",
                    format!("diagonal entry {i} = {} != 1", mat[(i, i)]),
                ));
            }
            for j in 0..m {
                if (mat[(i, j)] - mat[(j, i)]).abs() > 1e-12 {
                    return Err(QadError::invariant(MODULE, "KernelMatrix", "kernel not symmetric"));
                }
            }
        }
        let min_eigenvalue = nalgebra::SymmetricEigen::new(mat.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if exact && min_eigenvalue < -PSD_TOL {
            return Err(QadError::invariant(
                MODULE,
                "KernelMatrix",
                format!("minimum eigenvalue {min_eigenvalue:.3e} below -{PSD_TOL}"),
            ));
        }
        Ok(Self {
            mat,
            kind,
            min_eigenvalue,
            exact,
        })
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn m(&self) -> usize {
        self.mat.nrows()
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// `tr(K)`; exactly `M` for unit-diagonal kernels.
    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }
}

/// The complex overlap kernel `K_0`, built as `M tr_2(|chi><chi|)`.
///
/// Convention note: the partial trace over the data register gives
/// `K_0[i][j] = <psi_j|psi_i>` (the transpose of the Gram matrix in the
/// bra-first convention); every identity used downstream — the entrywise
/// relation `K = K_0^T * K_0`, Hermiticity, the role of `K_0/M` as a density
/// matrix — is invariant under that transpose.
#[derive(Debug, Clone)]
pub struct OverlapKernel {
    mat: DMatrix<Complex64>,
}

impl OverlapKernel {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if crate::qcore::hermiticity_deviation(&mat) > 1e-12 {
            return Err(QadError::invariant(MODULE, "OverlapKernel", "K_0 must be Hermitian"));
        }
        let min_eig = min_eigenvalue_hermitian(&mat);
        if min_eig < -PSD_TOL {
            return Err(QadError::invariant(
                MODULE,
                "OverlapKernel",
                format!("K_0 minimum eigenvalue {min_eig:.3e} below -{PSD_TOL}"),
            ));
        }
        Ok(Self { mat })
    }

    pub fn mat(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn m(&self) -> usize {
        self.mat.nrows()
    }

    /// `K_hat_0 = K_0 / M`, the density matrix the Hamiltonian-simulation
    /// machinery consumes.
    pub fn to_density(&self) -> Result<crate::qcore::DensityMatrix> {
        crate::qcore::DensityMatrix::new(self.mat.clone() / Complex64::new(self.m() as f64, 0.0))
            .map_err(|e| QadError::invariant(MODULE, "OverlapKernel", e.to_string()))
    }
}

/// Builds the pure-state fidelity kernel (entrywise from swap tests, mode
/// dependent) together with `K_0` from the partial trace of `|chi><chi|`.
///
/// Asserts, on the exact values, both the entrywise cross-check of `K_0`
/// against direct overlaps and the Hadamard-product identity
/// `K = K_0^T * K_0` (within 1e-12).
pub fn build_kernel_pure(ts: &TrainingSet, mode: EstimatorMode) -> Result<(KernelMatrix, OverlapKernel)> {
    if ts.kind() != StateKind::Pure {
        return Err(QadError::unsupported(
            MODULE,
            "build_kernel_pure",
            "mixed sets use build_kernel_superfidelity",
        ));
    }
    let m = ts.len();
    let states = ts.pure_states()?;

    // K_0 = M tr_2(|chi><chi|)
    let chi = prepare_chi(ts)?;
    let layout = RegisterLayout::new(vec![m, ts.dim()])?;
    let reduced = partial_trace_pure(&chi, &layout, &[0])?;
    let k0_mat = reduced.mat() * Complex64::new(m as f64, 0.0);
    for i in 0..m {
        for j in 0..m {
            let direct = states[j].inner(&states[i]);
            if (k0_mat[(i, j)] - direct).norm() > 1e-12 {
                return Err(QadError::invariant(
                    MODULE,
                    "build_kernel_pure",
                    format!("K_0[{i}][{j}] disagrees with the direct overlap"),
                ));
            }
        }
    }
    let k0 = OverlapKernel::new(k0_mat)?;

    // fidelity kernel, estimated per unordered pair
    let mut kernel = DMatrix::<f64>::from_element(m, m, 1.0);
    let mut pair_index = 0u64;
    for i in 0..m {
        for j in (i + 1)..m {
            let est = standard_swap_test(
                &RealizedState::Pure(states[i].clone()),
                &RealizedState::Pure(states[j].clone()),
                mode.derived(pair_index),
            )?;
            pair_index += 1;
            kernel[(i, j)] = est.value;
            kernel[(j, i)] = est.value;
        }
    }

    // Hadamard-product identity against the exact fidelities
    for i in 0..m {
        for j in 0..m {
            let hadamard = (k0.mat()[(j, i)] * k0.mat()[(i, j)]).re;
            let exact_fidelity = states[i].inner(&states[j]).norm_sqr();
            if (hadamard - exact_fidelity).abs() > 1e-12 {
                return Err(QadError::invariant(
                    MODULE,
                    "build_kernel_pure",
                    format!("K != K_0^T * K_0 at ({i}, {j})"),
                ));
            }
        }
    }

    Ok((KernelMatrix::new(kernel, KernelKind::Fidelity, mode.is_exact())?, k0))
}

fn densities_of(ts: &TrainingSet) -> Result<Vec<crate::qcore::DensityMatrix>> {
    ts.sources()
        .iter()
        .map(|s| realize(s).map(|r| r.to_density()))
        .collect()
}

/// Superfidelity kernel
/// `F(rho_i, rho_j) = tr(rho_i rho_j) + sqrt(1 - tr rho_i^2) sqrt(1 - tr rho_j^2)`
/// with overlap and purity terms from swap tests. Pure sets are allowed (the
/// purity terms vanish and the kernel reduces to the fidelity kernel).
pub fn build_kernel_superfidelity(ts: &TrainingSet, mode: EstimatorMode) -> Result<KernelMatrix> {
    let m = ts.len();
    let densities = densities_of(ts)?;

    // purities first (component indices 0..M), cross terms after
    let mut purities = Vec::with_capacity(m);
    for (i, rho) in densities.iter().enumerate() {
        let est = standard_swap_test(
            &RealizedState::Mixed(rho.clone()),
            &RealizedState::Mixed(rho.clone()),
            mode.derived(i as u64),
        )?;
        purities.push(est.value);
    }
    let root = |p: f64| (1.0 - p).clamp(0.0, 1.0).sqrt();

    let mut kernel = DMatrix::<f64>::from_element(m, m, 1.0);
    let mut pair_index = m as u64;
    for i in 0..m {
        for j in (i + 1)..m {
            let est = standard_swap_test(
                &RealizedState::Mixed(densities[i].clone()),
                &RealizedState::Mixed(densities[j].clone()),
                mode.derived(pair_index),
            )?;
            pair_index += 1;
            let value = est.value + root(purities[i]) * root(purities[j]);
            kernel[(i, j)] = value;
            kernel[(j, i)] = value;
        }
    }
    KernelMatrix::new(kernel, KernelKind::Superfidelity, mode.is_exact())
}

/// PSD report for a kernel, with the feature-map Gram check for
/// superfidelity kernels.
#[derive(Debug, Clone)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    /// Largest entrywise deviation between the kernel and the Gram matrix of
    /// the explicit feature map `(vec rho_i, sqrt(1 - tr rho_i^2))`; only
    /// populated for superfidelity kernels given their training set.
    pub feature_gram_deviation: Option<f64>,
}

/// Reports the minimum eigenvalue (hard failure below `-1e-10`) and, for
/// superfidelity kernels with the training set available, verifies the
/// kernel against the explicit feature-map Gram matrix (1e-10 entrywise).
pub fn verify_kernel_psd(kernel: &KernelMatrix, ts: Option<&TrainingSet>) -> Result<PsdReport> {
    let min_eigenvalue = kernel.min_eigenvalue();
    if min_eigenvalue < -PSD_TOL {
        return Err(QadError::invariant(
            MODULE,
            "verify_kernel_psd",
            format!("minimum eigenvalue {min_eigenvalue:.3e} below -{PSD_TOL}"),
        ));
    }
    let mut feature_gram_deviation = None;
    if kernel.kind() == KernelKind::Superfidelity {
        if let Some(ts) = ts {
            let densities = densities_of(ts)?;
            let m = densities.len();
            // phi(rho) = (vec rho, sqrt(1 - tr rho^2)): Gram entries are
            // tr(rho_i rho_j) + sqrt terms, i.e. the superfidelity
            let tails: Vec<f64> =
                densities.iter().map(|r| (1.0 - r.purity()).clamp(0.0, 1.0).sqrt()).collect();
            let mut worst: f64 = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let gram = densities[i].overlap(&densities[j]) + tails[i] * tails[j];
                    worst = worst.max((gram - kernel.mat()[(i, j)]).abs());
                }
            }
            if kernel.is_exact() && worst > 1e-10 {
                return Err(QadError::invariant(
                    MODULE,
                    "verify_kernel_psd",
                    format!("feature-map Gram deviates from the kernel by {worst:.3e}"),
                ));
            }
            feature_gram_deviation = Some(worst);
        }
    }
    Ok(PsdReport {
        min_eigenvalue,
        feature_gram_deviation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Classical,
    Hhl,
}

/// Coefficients of the restricted (`r = 1`) one-class SVM solve, in the
/// classical normalization `(K + P_T M 1) alpha = e`.
#[derive(Debug, Clone)]
pub struct AlphaSolution {
    pub alpha: DVector<f64>,
    /// Bias, fixed at 1.
    pub r: f64,
    pub p_t: f64,
    pub kind: KernelKind,
    pub solver: SolverKind,
    /// Quantum-side residual `||(K/M + P_T 1) sqrt(M) alpha - e_hat||`.
    pub residual: f64,
    /// Spectrum bounds of `K/M + P_T 1`.
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Set when `1/P_T` exceeds `log2 M` (the matrix-inversion conditioning
    /// assumption is strained).
    pub condition_flagged: bool,
    /// Rotation-ancilla post-selection probability (HHL solves only).
    pub post_selection_prob: Option<f64>,
}

impl AlphaSolution {
    /// Normalized coefficient direction.
    pub fn alpha_hat(&self) -> DVector<f64> {
        let n = self.alpha.norm();
        if n == 0.0 {
            self.alpha.clone()
        } else {
            &self.alpha / n
        }
    }

    /// Norm of the quantum-side solution `sqrt(M) ||alpha||`, the scale the
    /// overlap circuit must undo.
    pub fn quantum_norm(&self) -> f64 {
        (self.alpha.len() as f64).sqrt() * self.alpha.norm()
    }
}

pub(crate) fn quantum_residual(kernel: &KernelMatrix, p_t: f64, alpha: &DVector<f64>) -> f64 {
    let m = kernel.m();
    let mf = m as f64;
    let alpha_q = alpha * mf.sqrt();
    let mut lhs = kernel.mat() * &alpha_q / mf;
    lhs += &alpha_q * p_t;
    let e_hat = DVector::from_element(m, 1.0 / mf.sqrt());
    (lhs - e_hat).norm()
}

pub(crate) fn spectrum_diagnostics(kernel: &KernelMatrix, p_t: f64) -> (f64, f64, bool) {
    let m = kernel.m() as f64;
    let eigs = nalgebra::SymmetricEigen::new(kernel.mat() / m).eigenvalues;
    let lambda_min = eigs.iter().copied().fold(f64::INFINITY, f64::min) + p_t;
    let lambda_max = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + p_t;
    let condition_flagged = 1.0 / p_t > (kernel.m() as f64).log2();
    (lambda_min, lambda_max, condition_flagged)
}

fn check_p_t(p_t: f64, operation: &'static str) -> Result<()> {
    if !(p_t > 0.0 && p_t < 1.0) {
        return Err(QadError::precondition(
            MODULE,
            operation,
            format!("P_T = {p_t} outside (0, 1)"),
        ));
    }
    Ok(())
}

/// Solves `(K + P_T M 1) alpha = e` exactly by dense LU. The system is
/// symmetric positive definite, so the solution exists and is unique.
pub fn solve_alpha_classical(kernel: &KernelMatrix, p_t: f64) -> Result<AlphaSolution> {
    check_p_t(p_t, "solve_alpha_classical")?;
    let m = kernel.m();
    if kernel.min_eigenvalue() < -p_t * m as f64 * 0.5 {
        return Err(QadError::precondition(
            MODULE,
            "solve_alpha_classical",
            "kernel too indefinite for the regularized solve",
        ));
    }
    let mut a = kernel.mat().clone();
    for i in 0..m {
        a[(i, i)] += p_t * m as f64;
    }
    let rhs = DVector::from_element(m, 1.0);
    let alpha = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| QadError::degenerate(MODULE, "solve_alpha_classical", "singular system"))?;
    let residual = quantum_residual(kernel, p_t, &alpha);
    if residual > 1e-10 {
        return Err(QadError::invariant(
            MODULE,
            "solve_alpha_classical",
            format!("solve residual {residual:.3e} exceeds 1e-10"),
        ));
    }
    let (lambda_min, lambda_max, condition_flagged) = spectrum_diagnostics(kernel, p_t);
    Ok(AlphaSolution {
        alpha,
        r: 1.0,
        p_t,
        kind: kernel.kind(),
        solver: SolverKind::Classical,
        residual,
        lambda_min,
        lambda_max,
        condition_flagged,
        post_selection_prob: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvmRoute {
    Direct,
    OverlapCircuit,
}

impl std::fmt::Display for SvmRoute {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SvmRoute::Direct => write!(f, "direct"),
            SvmRoute::OverlapCircuit => write!(f, "overlap-circuit"),
        }
    }
}

/// A one-class SVM proximity score.
#[derive(Debug, Clone)]
pub struct SvmScore {
    pub f: f64,
    pub route: SvmRoute,
    pub exact: bool,
    /// Propagated standard error (0 in exact mode).
    pub stderr: f64,
    pub shots_total: u64,
    /// Raw ancilla probabilities of the overlap circuit, when that route ran.
    pub p_r: Option<f64>,
    pub p_i: Option<f64>,
    /// Preparation success probability of the `|A_R>`/`|A_I>` states.
    pub prep_success: Option<f64>,
}

/// Scores the test state by direct summation:
/// `f = |sum_i alpha_i |<psi_i|psi_0>|^2 - 1|` for pure sets, and
/// `f = (sum_i alpha_i F(rho_i, rho_0) - 1)^2` for mixed sets.
pub fn score_svm_direct(
    ts: &TrainingSet,
    alpha: &AlphaSolution,
    mode: EstimatorMode,
) -> Result<SvmScore> {
    let expected_kind = match ts.kind() {
        StateKind::Pure => KernelKind::Fidelity,
        StateKind::Mixed => KernelKind::Superfidelity,
    };
    if alpha.kind != expected_kind {
        return Err(QadError::precondition(
            MODULE,
            "score_svm_direct",
            format!("alpha solved for a {} kernel but the set needs {expected_kind}", alpha.kind),
        ));
    }
    let m = ts.len();
    let test = realize(ts.test())?;
    let mut terms: Vec<ComponentEstimate> = Vec::with_capacity(m);
    match ts.kind() {
        StateKind::Pure => {
            for (i, src) in ts.sources().iter().enumerate() {
                let est = standard_swap_test(
                    &realize(src)?,
                    &test,
                    mode.derived(i as u64),
                )?;
                terms.push(est);
            }
        }
        StateKind::Mixed => {
            let rho0 = test.to_density();
            let p0 = standard_swap_test(
                &RealizedState::Mixed(rho0.clone()),
                &RealizedState::Mixed(rho0.clone()),
                mode.derived(m as u64),
            )?;
            let root = |p: f64| (1.0 - p).clamp(0.0, 1.0).sqrt();
            for (i, src) in ts.sources().iter().enumerate() {
                let rho_i = realize(src)?.to_density();
                let purity_i = standard_swap_test(
                    &RealizedState::Mixed(rho_i.clone()),
                    &RealizedState::Mixed(rho_i.clone()),
                    mode.derived((m + 1 + i) as u64),
                )?;
                let mut cross = standard_swap_test(
                    &RealizedState::Mixed(rho_i),
                    &RealizedState::Mixed(rho0.clone()),
                    mode.derived(i as u64),
                )?;
                cross.value += root(purity_i.value) * root(p0.value);
                // superfidelity tail errors fold into the same budget
                cross.stderr = (cross.stderr.powi(2) + purity_i.stderr.powi(2) + p0.stderr.powi(2))
                    .sqrt();
                terms.push(cross);
            }
        }
    }

    let weighted: f64 = alpha
        .alpha
        .iter()
        .zip(&terms)
        .map(|(a, t)| a * t.value)
        .sum();
    let spread: f64 = alpha
        .alpha
        .iter()
        .zip(&terms)
        .map(|(a, t)| (a * t.value_stderr()).powi(2))
        .sum::<f64>()
        .sqrt();
    let (f, stderr) = match ts.kind() {
        StateKind::Pure => ((weighted - 1.0).abs(), spread),
        StateKind::Mixed => ((weighted - 1.0).powi(2), 2.0 * (weighted - 1.0).abs() * spread),
    };
    Ok(SvmScore {
        f,
        route: SvmRoute::Direct,
        exact: mode.is_exact(),
        stderr,
        shots_total: terms.iter().map(|t| t.shots).sum(),
        p_r: None,
        p_i: None,
        prep_success: None,
    })
}

/// One branch of the overlap circuit: builds `|A~_R>` or `|A~_I>` from the
/// prepared `|A>` state by the branch-controlled `U~_1 (1 (x) H~ (x) 1)` /
/// `U~_2` pipeline and returns the ancilla-1 probability after the final
/// Hadamard.
fn overlap_branch_probability(
    ts: &TrainingSet,
    alpha: &AlphaSolution,
    variant: ArVariant,
) -> Result<(f64, f64)> {
    let m = ts.len();
    let d = ts.dim();
    let prep = prepare_ar_ai(&alpha.alpha, alpha.p_t, d, variant)?;
    // registers: branch (2) | data (d) | coeff/control (M) | data (d)
    let layout = RegisterLayout::new(vec![2, d, m, d])?;
    let mut state = prep.state.clone();

    let u_c = controlled_source(ts)?;
    let u_0 = ts.test().as_pure()?.clone();
    let spread = gates::uniform_superposition_unitary(m);
    let unitaries: Vec<Unitary> = ts
        .sources()
        .iter()
        .map(|s| s.as_pure().cloned())
        .collect::<Result<_>>()?;

    // branch 0: |phi_1> = (1/sqrt(M)) sum_j |psi_j>|j>|psi_0>
    let stage = controlled(&[spread, Unitary::identity(m)])?;
    state = apply_unitary_pure(&state, &layout, &stage, &[0, 2])?;
    let stage = controlled(&[controlled(&unitaries)?, Unitary::identity(m * d)])?;
    // operator registers: (branch, control j, first data)
    state = apply_unitary_pure(&state, &layout, &stage, &[0, 2, 1])?;
    let stage = controlled(&[u_0.clone(), Unitary::identity(d)])?;
    state = apply_unitary_pure(&state, &layout, &stage, &[0, 3])?;

    // branch 1: |phi_2> = |psi_0> sum_i alpha_hat_i |i>|psi_i>
    let stage = controlled(&[Unitary::identity(d), u_0])?;
    state = apply_unitary_pure(&state, &layout, &stage, &[0, 1])?;
    let stage = controlled(&[Unitary::identity(m * d), u_c])?;
    state = apply_unitary_pure(&state, &layout, &stage, &[0, 2, 3])?;

    state = apply_unitary_pure(&state, &layout, &gates::hadamard(), &[0])?;
    let p = projection_probability_pure(&state, &layout, &basis_projector(2, 1), &[0])?;
    Ok((p, prep.success_prob))
}

/// Scores the test state through the `<phi_1|phi_2>` overlap circuit:
/// decodes `Re = 1 - 2 P_R`, `Im = 2 P_I - 1`, rescales by
/// `sqrt(M) ||alpha||` so the overlap equals
/// `sum_i alpha_i |<psi_i|psi_0>|^2`, and returns `f = |rescaled - 1|`.
pub fn score_svm_overlap_circuit(
    ts: &TrainingSet,
    alpha: &AlphaSolution,
    mode: EstimatorMode,
) -> Result<SvmScore> {
    if ts.kind() != StateKind::Pure {
        return Err(QadError::unsupported(
            MODULE,
            "score_svm_overlap_circuit",
            "the overlap-circuit route is defined for pure sets only",
        ));
    }
    if alpha.kind != KernelKind::Fidelity {
        return Err(QadError::precondition(
            MODULE,
            "score_svm_overlap_circuit",
            "alpha must come from a fidelity kernel",
        ));
    }
    let (p_r_exact, prep_r) = overlap_branch_probability(ts, alpha, ArVariant::Real)?;
    let (p_i_exact, prep_i) = overlap_branch_probability(ts, alpha, ArVariant::Imag)?;

    let (p_r, p_i, sigma_r, sigma_i, shots_total) = match mode {
        EstimatorMode::Exact => (p_r_exact, p_i_exact, 0.0, 0.0, 0),
        EstimatorMode::Shots { shots, seed } => {
            let sr = crate::qcore::sample_bernoulli(p_r_exact, shots, crate::qcore::derive_seed(seed, 0))?;
            let si = crate::qcore::sample_bernoulli(p_i_exact, shots, crate::qcore::derive_seed(seed, 1))?;
            (sr.estimate, si.estimate, sr.stderr, si.stderr, 2 * shots)
        }
    };

    let scale = alpha.quantum_norm();
    let re = (1.0 - 2.0 * p_r) * scale;
    let im = (2.0 * p_i - 1.0) * scale;
    let f = Complex64::new(re - 1.0, im).norm();
    // first-order propagation through |scale (Re + i Im) - 1|
    let d_re = 2.0 * scale * sigma_r;
    let d_im = 2.0 * scale * sigma_i;
    let stderr = if f > 1e-12 {
        (((re - 1.0) * d_re).powi(2) + (im * d_im).powi(2)).sqrt() / f
    } else {
        d_re.hypot(d_im)
    };

    Ok(SvmScore {
        f,
        route: SvmRoute::OverlapCircuit,
        exact: mode.is_exact(),
        stderr,
        shots_total,
        p_r: Some(p_r),
        p_i: Some(p_i),
        prep_success: Some(prep_r.min(prep_i)),
    })
}
