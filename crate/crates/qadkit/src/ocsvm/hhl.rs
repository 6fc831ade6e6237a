//! Simulated quantum matrix inversion for the SVM coefficient solve.
//!
//! Solves `(K/M + P_T 1)|alpha> = |e_hat>` by quantum phase estimation plus
//! the conditioned inversion rotation:
//!
//! 1. QPE with `t` clock bits over the evolution `U = exp(+i A t_evo)`,
//!    `t_evo = 2 pi / (1 + P_T + 0.1)` so the spectrum `[P_T, 1 + P_T]`
//!    maps into a single phase period;
//! 2. a rotation ancilla written with amplitude `C_r / lambda(y)` per clock
//!    value, `C_r = P_T` (at most the smallest eigenvalue, so rotation
//!    amplitudes stay physical while post-selection succeeds as often as
//!    possible);
//! 3. QPE uncomputation and post-selection of the ancilla on `|1>`.
//!
//! Two evolution backends: [`EvolutionBackend::Exact`] applies the
//! eigendecomposed unitary and evaluates the circuit statistics in closed
//! form (the clock amplitudes are geometric sums); [`EvolutionBackend::Hamsim`]
//! drives the controlled evolution through the modified-swap machinery of
//! [`crate::hamsim`] — fresh copies of the overlap-kernel density matrix per
//! substep, conjugation by `exp(-i S' dt)`, partial trace — as a full
//! density-matrix simulation, practical only for small `(M, phase_bits)`.
//!
//! The quantum solve determines a direction; the returned coefficients are
//! rescaled to the classical normalization by matching the largest
//! kernel-row equation of `(K + P_T M 1) alpha = e`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QadError, Result};
use crate::hamsim::sprime_evolution;
use crate::ocsvm::{
    quantum_residual, spectrum_diagnostics, AlphaSolution, KernelMatrix, OverlapKernel, SolverKind,
};
use crate::qcore::{
    apply_unitary_density, basis_projector, controlled, gates, measure_projector_density,
    partial_trace, projection_probability_density, tensor_density, DensityMatrix, PureState,
    RegisterLayout, Unitary,
};

const MODULE: &str = "ocsvm";

/// Spectrum margin in the evolution-time choice `2 pi / (1 + P_T + MARGIN)`.
const PHASE_MARGIN: f64 = 0.1;

/// Post-selection probability below which the solve aborts.
const POST_SELECTION_FLOOR: f64 = 1e-12;

/// How the controlled evolution inside phase estimation is generated.
#[derive(Debug, Clone, Copy)]
pub enum EvolutionBackend<'a> {
    /// Eigendecomposition of the kernel; phase-estimation statistics in
    /// closed form.
    Exact,
    /// Evolution from copies of the overlap-kernel density matrix
    /// `K_hat_0 = K_0 / M`, `reps` substeps per elementary evolution.
    Hamsim { k0: &'a OverlapKernel, reps: usize },
}

fn evolution_time(p_t: f64) -> f64 {
    2.0 * std::f64::consts::PI / (1.0 + p_t + PHASE_MARGIN)
}

/// Decoded eigenvalue of clock bin `y`.
fn decoded_lambda(y: usize, t_total: usize, t_evo: f64) -> f64 {
    2.0 * std::f64::consts::PI * y as f64 / (t_total as f64 * t_evo)
}

/// Rotation amplitude `min(1, C_r / lambda(y))`, zero at the unresolvable
/// `y = 0` bin.
fn rotation_amplitude(y: usize, t_total: usize, t_evo: f64, c_r: f64) -> f64 {
    if y == 0 {
        0.0
    } else {
        (c_r / decoded_lambda(y, t_total, t_evo)).min(1.0)
    }
}

/// `|c_y|^2`: the phase-estimation weight of clock bin `y` for eigenvalue
/// `lambda` (squared geometric sum over the clock).
fn qpe_weight(lambda: f64, y: usize, t_total: usize, t_evo: f64) -> f64 {
    let delta = lambda * t_evo - 2.0 * std::f64::consts::PI * y as f64 / t_total as f64;
    let half = 0.5 * delta;
    if half.sin().abs() < 1e-12 {
        return 1.0;
    }
    let t = t_total as f64;
    ((t * half).sin() / (t * half.sin())).powi(2)
}

fn hhl_solution_from_direction(
    kernel: &KernelMatrix,
    p_t: f64,
    direction: DVector<f64>,
    post_selection_prob: f64,
) -> Result<AlphaSolution> {
    let m = kernel.m();
    let mut a = kernel.mat().clone();
    for i in 0..m {
        a[(i, i)] += p_t * m as f64;
    }
    let w = &a * &direction;
    let (row, w_max) = w
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .expect("nonempty");
    if w_max.abs() < 1e-14 {
        return Err(QadError::degenerate(
            MODULE,
            "solve_alpha_hhl",
            format!("cannot rescale: kernel row {row} annihilates the solved direction"),
        ));
    }
    let alpha = direction * (1.0 / w_max);
    let residual = quantum_residual(kernel, p_t, &alpha);
    let (lambda_min, lambda_max, condition_flagged) = spectrum_diagnostics(kernel, p_t);
    Ok(AlphaSolution {
        alpha,
        r: 1.0,
        p_t,
        kind: kernel.kind(),
        solver: SolverKind::Hhl,
        residual,
        lambda_min,
        lambda_max,
        condition_flagged,
        post_selection_prob: Some(post_selection_prob),
    })
}

fn solve_exact_backend(kernel: &KernelMatrix, p_t: f64, phase_bits: usize) -> Result<AlphaSolution> {
    let m = kernel.m();
    let mf = m as f64;
    let t_total = 1usize << phase_bits;
    let t_evo = evolution_time(p_t);
    let c_r = p_t;

    let mut a = kernel.mat() / mf;
    for i in 0..m {
        a[(i, i)] += p_t;
    }
    let eig = nalgebra::SymmetricEigen::new(a);
    let e_hat = DVector::from_element(m, 1.0 / mf.sqrt());
    let beta = eig.eigenvectors.transpose() * &e_hat;

    // first and second moments of the rotation amplitude over the clock
    // distribution, per eigencomponent
    let mut first = vec![0.0f64; m];
    let mut second = vec![0.0f64; m];
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        for y in 0..t_total {
            let w = qpe_weight(lambda, y, t_total, t_evo);
            if w < 1e-18 {
                continue;
            }
            let g = rotation_amplitude(y, t_total, t_evo, c_r);
            first[j] += w * g;
            second[j] += w * g * g;
        }
    }

    let post_selection_prob: f64 = beta.iter().zip(&second).map(|(b, h)| b * b * h).sum();
    if post_selection_prob < POST_SELECTION_FLOOR {
        return Err(QadError::degenerate(
            MODULE,
            "solve_alpha_hhl",
            format!(
                "post-selection probability {post_selection_prob:.3e} below {POST_SELECTION_FLOOR}"
            ),
        ));
    }

    // ancilla-1, clock-uncomputed branch: v = sum_j beta_j (sum_y w_y g_y) u_j
    let mut v = DVector::<f64>::zeros(m);
    for j in 0..m {
        let coeff = beta[j] * first[j];
        for i in 0..m {
            v[i] += coeff * eig.eigenvectors[(i, j)];
        }
    }
    let norm = v.norm();
    if norm < 1e-14 {
        return Err(QadError::degenerate(
            MODULE,
            "solve_alpha_hhl",
            "solved direction vanished after uncomputation",
        ));
    }
    hhl_solution_from_direction(kernel, p_t, v / norm, post_selection_prob)
}

/// The QFT matrix `F[k][y] = exp(2 pi i k y / T) / sqrt(T)`.
fn qft(t_total: usize) -> Unitary {
    let tau = 2.0 * std::f64::consts::PI / t_total as f64;
    let s = 1.0 / (t_total as f64).sqrt();
    Unitary::new(DMatrix::from_fn(t_total, t_total, |k, y| {
        Complex64::from_polar(s, tau * (k * y) as f64)
    }))
    .expect("QFT is unitary")
}

struct HamsimQpe {
    kernel_density: DensityMatrix,
    phase_bits: usize,
    m: usize,
    reps: usize,
    t_evo: f64,
    p_t: f64,
}

impl HamsimQpe {
    /// One controlled substep: attach fresh kernel copies, conjugate by the
    /// clock-conditioned `exp(-i S' dt)`, trace the copies back out.
    /// `dims` describes the current register layout; the system register
    /// sits at index `phase_bits`.
    fn controlled_substep(
        &self,
        rho: &DensityMatrix,
        dims: &[usize],
        qubit: usize,
        dt: f64,
    ) -> Result<DensityMatrix> {
        let m = self.m;
        let copies = tensor_density(&self.kernel_density, &self.kernel_density);
        let big = tensor_density(rho, &copies);
        let mut big_dims = dims.to_vec();
        big_dims.push(m);
        big_dims.push(m);
        let layout = RegisterLayout::new(big_dims)?;
        let v = sprime_evolution(m, dt)?;
        let step = controlled(&[Unitary::identity(m * m * m), v])?;
        // operator registers: (clock qubit, copy 1, copy 2, system)
        let sys = self.phase_bits;
        let copy1 = dims.len();
        let copy2 = dims.len() + 1;
        let evolved = apply_unitary_density(&big, &layout, &step, &[qubit, copy1, copy2, sys])?;
        let keep: Vec<usize> = (0..dims.len()).collect();
        partial_trace(&evolved, &layout, &keep)
    }

    /// Controlled powers `U^(2^(t-1-q))` per clock qubit; `sign = -1` runs
    /// the inverse evolution for uncomputation.
    fn controlled_powers(
        &self,
        mut rho: DensityMatrix,
        dims: &[usize],
        sign: f64,
    ) -> Result<DensityMatrix> {
        let layout = RegisterLayout::new(dims.to_vec())?;
        // forward evolution exp(+i (K/M) tau) needs a negative S' time; the
        // M factor compensates the Hadamard-product generator's 1/M
        let dt = -sign * self.m as f64 * self.t_evo / self.reps as f64;
        for qubit in 0..self.phase_bits {
            let power = 1usize << (self.phase_bits - 1 - qubit);
            for _ in 0..power * self.reps {
                rho = self.controlled_substep(&rho, dims, qubit, dt)?;
            }
            // exp(i P_T t) rides the clock as a relative phase
            let phase = gates::phase(sign * self.p_t * self.t_evo * power as f64);
            rho = apply_unitary_density(&rho, &layout, &phase, &[qubit])?;
        }
        Ok(rho)
    }
}

fn solve_hamsim_backend(
    kernel: &KernelMatrix,
    k0: &OverlapKernel,
    p_t: f64,
    phase_bits: usize,
    reps: usize,
) -> Result<AlphaSolution> {
    if reps == 0 {
        return Err(QadError::precondition(MODULE, "solve_alpha_hhl", "reps must be >= 1"));
    }
    let m = kernel.m();
    if k0.m() != m {
        return Err(QadError::dimension(
            MODULE,
            "solve_alpha_hhl",
            format!("kernel is {m}x{m} but K_0 is {0}x{0}", k0.m()),
        ));
    }
    let t_total = 1usize << phase_bits;
    if t_total * m * m * m > 4096 {
        return Err(QadError::precondition(
            MODULE,
            "solve_alpha_hhl",
            format!(
                "hamsim backend working dimension {} exceeds 4096; \
                 reduce phase_bits or use the exact backend",
                t_total * m * m * m
            ),
        ));
    }
    let t_evo = evolution_time(p_t);
    let c_r = p_t;
    let qpe = HamsimQpe {
        kernel_density: k0.to_density()?,
        phase_bits,
        m,
        reps,
        t_evo,
        p_t,
    };

    // clock |0...0> (x) system |e_hat>
    let mut dims: Vec<usize> = vec![2; phase_bits];
    dims.push(m);
    let layout = RegisterLayout::new(dims.clone())?;
    let clock_targets: Vec<usize> = (0..phase_bits).collect();
    let e_hat = PureState::new(DVector::from_element(m, Complex64::new(1.0 / (m as f64).sqrt(), 0.0)))?;
    let init = crate::qcore::tensor_pure(&PureState::basis(t_total, 0), &e_hat);
    let mut rho = init.to_density();
    for q in &clock_targets {
        rho = apply_unitary_density(&rho, &layout, &gates::hadamard(), &[*q])?;
    }
    rho = qpe.controlled_powers(rho, &dims, 1.0)?;
    let fourier = qft(t_total);
    rho = apply_unitary_density(&rho, &layout, &fourier.adjoint(), &clock_targets)?;

    // rotation ancilla, conditioned on the clock value
    rho = tensor_density(&rho, &PureState::basis(2, 0).to_density());
    let mut dims_anc = dims.clone();
    dims_anc.push(2);
    let layout_anc = RegisterLayout::new(dims_anc.clone())?;
    let rotations: Vec<Unitary> = (0..t_total)
        .map(|y| {
            let g = rotation_amplitude(y, t_total, t_evo, c_r);
            let target = PureState::new(DVector::from_vec(vec![
                Complex64::new((1.0 - g * g).max(0.0).sqrt(), 0.0),
                Complex64::new(g, 0.0),
            ]))
            .expect("unit by construction");
            gates::complete_to_unitary(&target)
        })
        .collect();
    let rotation = controlled(&rotations)?;
    let mut rotation_targets = clock_targets.clone();
    rotation_targets.push(phase_bits + 1);
    rho = apply_unitary_density(&rho, &layout_anc, &rotation, &rotation_targets)?;

    // uncompute phase estimation (the ancilla rides along)
    rho = apply_unitary_density(&rho, &layout_anc, &fourier, &clock_targets)?;
    rho = qpe.controlled_powers(rho, &dims_anc, -1.0)?;
    for q in &clock_targets {
        rho = apply_unitary_density(&rho, &layout_anc, &gates::hadamard(), &[*q])?;
    }

    // post-select the rotation ancilla on |1>, then keep the uncomputed
    // clock-zero branch
    let post_selection_prob =
        projection_probability_density(&rho, &layout_anc, &basis_projector(2, 1), &[phase_bits + 1])?;
    if post_selection_prob < POST_SELECTION_FLOOR {
        return Err(QadError::degenerate(
            MODULE,
            "solve_alpha_hhl",
            format!(
                "post-selection probability {post_selection_prob:.3e} below {POST_SELECTION_FLOOR}"
            ),
        ));
    }
    let rho = measure_projector_density(&rho, &layout_anc, &basis_projector(2, 1), &[phase_bits + 1])?
        .post;
    let rho = measure_projector_density(&rho, &layout_anc, &basis_projector(t_total, 0), &clock_targets)?
        .post;
    let system = partial_trace(&rho, &layout_anc, &[phase_bits])?;

    // principal eigenvector, rotated to the real axis
    let eig = nalgebra::SymmetricEigen::new(system.mat().clone());
    let (best, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let column = eig.eigenvectors.column(best);
    let lead = column
        .iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .copied()
        .expect("nonempty");
    let phase = if lead.norm() > 0.0 { lead / lead.norm() } else { Complex64::new(1.0, 0.0) };
    let direction = DVector::from_iterator(m, column.iter().map(|c| (c / phase).re));
    let norm = direction.norm();
    if norm < 1e-14 {
        return Err(QadError::degenerate(
            MODULE,
            "solve_alpha_hhl",
            "solved direction vanished after uncomputation",
        ));
    }
    hhl_solution_from_direction(kernel, p_t, direction / norm, post_selection_prob)
}

/// Solves `(K/M + P_T 1)|alpha> = |e_hat>` by simulated HHL with
/// `phase_bits` clock bits and the selected evolution backend. Returns the
/// rescaled classical-normalization coefficients, the solved direction's
/// quantum-side residual, and the rotation post-selection probability. The
/// direction converges to the classical solution's as `phase_bits` grows.
pub fn solve_alpha_hhl(
    kernel: &KernelMatrix,
    p_t: f64,
    phase_bits: usize,
    backend: EvolutionBackend<'_>,
) -> Result<AlphaSolution> {
    if !(p_t > 0.0 && p_t < 1.0) {
        return Err(QadError::precondition(
            MODULE,
            "solve_alpha_hhl",
            format!("P_T = {p_t} outside (0, 1)"),
        ));
    }
    if !(1..=16).contains(&phase_bits) {
        return Err(QadError::precondition(
            MODULE,
            "solve_alpha_hhl",
            format!("phase_bits = {phase_bits} outside 1..=16"),
        ));
    }
    match backend {
        EvolutionBackend::Exact => solve_exact_backend(kernel, p_t, phase_bits),
        EvolutionBackend::Hamsim { k0, reps } => {
            solve_hamsim_backend(kernel, k0, p_t, phase_bits, reps)
        }
    }
}
