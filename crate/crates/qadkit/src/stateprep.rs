//! State-preparation subroutines with post-selection bookkeeping.
//!
//! Each routine simulates the actual preparation circuit — controlled source
//! unitaries, label-register superpositions, projective measurements — and
//! records every stage's success probability. Closed-form probabilities are
//! recomputed from the training-state overlaps and asserted against the
//! simulated values to 1e-12, so a disagreement between circuit and formula
//! fails loudly instead of propagating.
//!
//! Register conventions: control registers are most significant, and the
//! "measure the ancilla in `(|0> + |1>)/sqrt(2)`" steps are simulated as a
//! Hadamard followed by projection onto `|0>`. For training sizes that are
//! not powers of two, the label-register Hadamard layer generalizes to the
//! adjoint of the deterministic uniform-superposition unitary (for `M = 2^k`
//! the two coincide on everything that is measured).
//!
//! Normalization constants are computed definitionally — as squared norms of
//! explicitly constructed centered vectors — rather than from closed forms,
//! which keeps the degenerate cases well defined; the closed forms that are
//! consistent with the definitions are asserted as cross-checks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QadError, Result};
use crate::qcore::{
    apply_unitary_pure, basis_projector, controlled, gates, measure_projector_pure,
    projection_probability_pure, tensor_pure, PureState, RegisterLayout, Unitary,
};
use crate::registry::{controlled_source, TrainingSet};

const MODULE: &str = "stateprep";

/// Squared-norm threshold below which a centered vector counts as vanishing.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Tolerance for formula-versus-simulation probability checks.
const PROB_TOL: f64 = 1e-12;

/// A prepared state together with the per-stage post-selection
/// probabilities of its preparation circuit.
#[derive(Debug, Clone)]
pub struct PreparedState {
    pub state: PureState,
    pub success_prob: f64,
    pub stage_probs: Vec<(&'static str, f64)>,
}

impl PreparedState {
    fn new(state: PureState, stage_probs: Vec<(&'static str, f64)>) -> Self {
        let success_prob: f64 = stage_probs.iter().map(|(_, p)| p).product();
        Self {
            state,
            success_prob,
            stage_probs,
        }
    }
}

/// The normalization constants of the centered-data formalism, computed
/// definitionally. `None` marks a vanishing denominator.
#[derive(Debug, Clone)]
pub struct NormalizationLedger {
    /// `|N_c|^2 = 1 / sum_ij <psi_i|psi_j>`.
    pub nc_sq: Option<f64>,
    /// `|N_i|^2 = 1 / ||z_i||^2`, i = 1..M.
    pub ni_sq: Vec<Option<f64>>,
    /// `|N_0|^2 = 1 / ||z_0||^2` for the test state.
    pub n0_sq: Option<f64>,
    /// `|N_chi_c|^2 = 1 / sum_i ||z_i||^2`.
    pub nchi_sq: Option<f64>,
    /// `tr(C) = 1/(M-1) sum_i ||z_i||^2`.
    pub tr_c: f64,
    /// Indices (1-based; 0 = test) whose centered vector vanishes.
    pub flagged: Vec<usize>,
}

/// Realized training states plus centered-vector arithmetic shared by the
/// preparation routines.
struct PureData {
    states: Vec<PureState>,
    test: PureState,
    dim: usize,
    m: usize,
    /// `sum_ij <psi_i|psi_j>` over training states (real up to rounding).
    double_sum: f64,
    /// Unnormalized centroid `sum_i psi_i`.
    centroid: DVector<Complex64>,
}

impl PureData {
    fn build(ts: &TrainingSet) -> Result<Self> {
        let states = ts.pure_states()?;
        let test = ts.pure_test()?;
        let dim = ts.dim();
        let m = ts.len();
        let mut centroid = DVector::<Complex64>::zeros(dim);
        for s in &states {
            centroid += s.amps();
        }
        // sum_ij <psi_i|psi_j> = ||sum_i psi_i||^2, so the double sum is a
        // squared norm and must be real; a complex residue means an index bug.
        let double_sum = centroid.norm_squared();
        Ok(Self {
            states,
            test,
            dim,
            m,
            double_sum,
            centroid,
        })
    }

    /// Unnormalized centered vector; `kappa = 0` is the test state.
    fn centered(&self, kappa: usize) -> DVector<Complex64> {
        let base = if kappa == 0 {
            self.test.amps()
        } else {
            self.states[kappa - 1].amps()
        };
        base - &self.centroid / Complex64::new(self.m as f64, 0.0)
    }

    fn centered_norm_sq(&self, kappa: usize) -> f64 {
        self.centered(kappa).norm_squared()
    }
}

fn assert_prob(
    operation: &'static str,
    label: &str,
    simulated: f64,
    formula: f64,
) -> Result<()> {
    if (simulated - formula).abs() > PROB_TOL {
        return Err(QadError::invariant(
            MODULE,
            operation,
            format!("simulated {label} = {simulated} but the closed form gives {formula}"),
        ));
    }
    Ok(())
}

/// Extracts the data-register state from `|0..0>_rest (x) |phi>` given that
/// every amplitude outside the `rest = 0` block vanishes.
fn extract_block(state: &PureState, block_dim: usize) -> PureState {
    let amps = DVector::from_iterator(block_dim, state.amps().iter().take(block_dim).copied());
    PureState::new(amps).expect("projected block carries all the norm")
}

/// `|chi> = (1/sqrt(M)) sum_i |i>|psi_i>`, via `U_C` on the uniform
/// superposition. Unit success probability.
pub fn prepare_chi(ts: &TrainingSet) -> Result<PureState> {
    let m = ts.len();
    let layout = RegisterLayout::new(vec![m, ts.dim()])?;
    let u_c = controlled_source(ts)?;
    let init = tensor_pure(&PureState::basis(m, 0), &PureState::basis(ts.dim(), 0));
    let spread = apply_unitary_pure(&init, &layout, &gates::uniform_superposition_unitary(m), &[0])?;
    apply_unitary_pure(&spread, &layout, &u_c, &[0, 1])
}

/// Prepares the centroid state `prop_to sum_i |psi_i>` by the
/// Hadamard-then-project circuit on the label register of `|chi>`.
///
/// The recorded success probability is the simulated projection probability;
/// it is asserted against `(1/M^2) sum_ij <psi_i|psi_j>`.
pub fn prepare_centroid(ts: &TrainingSet) -> Result<PreparedState> {
    let data = PureData::build(ts)?;
    let m = data.m;
    let layout = RegisterLayout::new(vec![m, data.dim])?;

    let chi = prepare_chi(ts)?;
    let spread_adj = gates::uniform_superposition_unitary(m).adjoint();
    let rotated = apply_unitary_pure(&chi, &layout, &spread_adj, &[0])?;

    let p_chi_formula = data.double_sum / (m * m) as f64;
    if data.double_sum <= DEGENERACY_TOL {
        return Err(QadError::degenerate(
            MODULE,
            "prepare_centroid",
            format!("centroid undefined: sum_ij <psi_i|psi_j> = {:.3e}", data.double_sum),
        ));
    }
    let measured = measure_projector_pure(&rotated, &layout, &basis_projector(m, 0), &[0])?;
    assert_prob("prepare_centroid", "P_chi", measured.probability, p_chi_formula)?;

    let centroid = extract_block(&measured.post, data.dim);
    Ok(PreparedState::new(
        centroid,
        vec![("label_projection", measured.probability)],
    ))
}

/// Permutation swapping `|0>` and `|index>`; self-inverse, so the same gate
/// computes and uncomputes the label.
fn label_prep(m: usize, index: usize) -> Unitary {
    let mut mat = DMatrix::<Complex64>::identity(m, m);
    if index != 0 {
        mat[(0, 0)] = Complex64::default();
        mat[(index, index)] = Complex64::default();
        mat[(0, index)] = Complex64::new(1.0, 0.0);
        mat[(index, 0)] = Complex64::new(1.0, 0.0);
    }
    Unitary::new(mat).expect("permutations are unitary")
}

/// Prepares the centered state
/// `|z_kappa> prop_to |psi_kappa> - (1/M) sum_j |psi_j>`
/// (`kappa = 0` is the test state) with both post-selection stages simulated
/// and checked against their closed forms.
pub fn prepare_centered(ts: &TrainingSet, kappa: usize) -> Result<PreparedState> {
    let data = PureData::build(ts)?;
    let m = data.m;
    if kappa > m {
        return Err(QadError::precondition(
            MODULE,
            "prepare_centered",
            format!("kappa = {kappa} out of range 0..={m}"),
        ));
    }
    let d = data.dim;
    // registers: ancilla (2) | label (M) | data (d)
    let layout = RegisterLayout::new(vec![2, m, d])?;
    let u_c = controlled_source(ts)?;
    let spread = gates::uniform_superposition_unitary(m);

    // (|0> - |1>)/sqrt(2) on the ancilla
    let mut state = tensor_pure(
        &tensor_pure(&PureState::basis(2, 0), &PureState::basis(m, 0)),
        &PureState::basis(d, 0),
    );
    state = apply_unitary_pure(&state, &layout, &gates::pauli_x(), &[0])?;
    state = apply_unitary_pure(&state, &layout, &gates::hadamard(), &[0])?;

    // ancilla |0>: label |0> -> |kappa-1>; ancilla |1>: uniform superposition
    let prep = if kappa == 0 { Unitary::identity(m) } else { label_prep(m, kappa - 1) };
    let label_stage = controlled(&[prep.clone(), spread.clone()])?;
    state = apply_unitary_pure(&state, &layout, &label_stage, &[0, 1])?;

    // data preparation: the |0> branch prepares the kappa source, the |1>
    // branch runs U_C over the label superposition
    let branch_zero = if kappa == 0 {
        tensor_unitary_id_left(m, ts.test().as_pure()?)
    } else {
        u_c.clone()
    };
    let data_stage = controlled(&[branch_zero, u_c])?;
    state = apply_unitary_pure(&state, &layout, &data_stage, &[0, 1, 2])?;

    // uncompute: |0> branch undoes the label permutation, |1> branch applies
    // the adjoint spreading map so |0...0> picks out the uniform component
    let unlabel_stage = controlled(&[prep, spread.adjoint()])?;
    state = apply_unitary_pure(&state, &layout, &unlabel_stage, &[0, 1])?;

    let label_meas = measure_projector_pure(&state, &layout, &basis_projector(m, 0), &[1])?;
    let p_label_formula = 0.5 * (1.0 + data.double_sum / (m * m) as f64);
    assert_prob("prepare_centered", "P_label", label_meas.probability, p_label_formula)?;

    let norm_sq = data.centered_norm_sq(kappa);
    let p_final_formula = norm_sq / (4.0 * p_label_formula);

    let state = apply_unitary_pure(&label_meas.post, &layout, &gates::hadamard(), &[0])?;
    let p_final_sim = projection_probability_pure(&state, &layout, &basis_projector(2, 0), &[0])?;
    assert_prob("prepare_centered", "P_0", p_final_sim, p_final_formula)?;

    if norm_sq < DEGENERACY_TOL {
        return Err(QadError::degenerate(
            MODULE,
            "prepare_centered",
            format!(
                "zero centered vector for kappa = {kappa}: the state does not exist \
                 (simulated success probability {p_final_sim:.3e})"
            ),
        ));
    }
    let final_meas = measure_projector_pure(&state, &layout, &basis_projector(2, 0), &[0])?;
    let centered = extract_block(&final_meas.post, d);
    Ok(PreparedState::new(
        centered,
        vec![
            ("label_projection", label_meas.probability),
            ("ancilla_projection", final_meas.probability),
        ],
    ))
}

/// `1_M (x) U_0` for the test-state branch of the centered-state circuit.
fn tensor_unitary_id_left(m: usize, u: &Unitary) -> Unitary {
    crate::qcore::tensor_unitary(&Unitary::identity(m), u)
}

/// Prepares `|chi_c> prop_to sum_i |i>(|psi_i> - (1/M) sum_j |psi_j>)`,
/// the superposition of all centered training states, on registers
/// `(control M, data d)`.
pub fn prepare_chi_c(ts: &TrainingSet) -> Result<PreparedState> {
    let data = PureData::build(ts)?;
    let m = data.m;
    let d = data.dim;
    // registers: control-i (M) | ancilla (2) | label (M) | data (d)
    let layout = RegisterLayout::new(vec![m, 2, m, d])?;
    let u_c = controlled_source(ts)?;
    let spread = gates::uniform_superposition_unitary(m);

    let mut state = tensor_pure(
        &tensor_pure(&PureState::basis(m, 0), &PureState::basis(2, 0)),
        &tensor_pure(&PureState::basis(m, 0), &PureState::basis(d, 0)),
    );
    state = apply_unitary_pure(&state, &layout, &spread, &[0])?;
    state = apply_unitary_pure(&state, &layout, &gates::pauli_x(), &[1])?;
    state = apply_unitary_pure(&state, &layout, &gates::hadamard(), &[1])?;

    // ancilla |0>: U_C from control-i onto data (operator registers: anc, ctrl, data)
    let id_md = Unitary::identity(m * d);
    let ctrl_stage = controlled(&[u_c.clone(), id_md.clone()])?;
    state = apply_unitary_pure(&state, &layout, &ctrl_stage, &[1, 0, 3])?;

    // ancilla |1>: spread the label register, U_C from label onto data, then
    // the adjoint spread so the |0...0> label component is the uniform sum
    let spread_stage = controlled(&[Unitary::identity(m), spread.clone()])?;
    state = apply_unitary_pure(&state, &layout, &spread_stage, &[1, 2])?;
    let label_uc_stage = controlled(&[id_md, u_c])?;
    state = apply_unitary_pure(&state, &layout, &label_uc_stage, &[1, 2, 3])?;
    let unspread_stage = controlled(&[Unitary::identity(m), spread.adjoint()])?;
    state = apply_unitary_pure(&state, &layout, &unspread_stage, &[1, 2])?;

    let label_meas = measure_projector_pure(&state, &layout, &basis_projector(m, 0), &[2])?;
    let s_norm = data.double_sum / (m * m) as f64;
    assert_prob("prepare_chi_c", "P_label", label_meas.probability, 0.5 * (1.0 + s_norm))?;

    let state = apply_unitary_pure(&label_meas.post, &layout, &gates::hadamard(), &[1])?;
    let p_final_sim = projection_probability_pure(&state, &layout, &basis_projector(2, 0), &[1])?;
    // sum_i ||z_i||^2 = M(1 - S/M^2), normalized by M + S/M and the 1/2 from
    // the ancilla projection (the same prefactor the centered-state stage has)
    let p_final_formula = (1.0 - s_norm) / (2.0 * (1.0 + s_norm));
    assert_prob("prepare_chi_c", "P_0", p_final_sim, p_final_formula)?;

    let total_centered: f64 = (1..=m).map(|i| data.centered_norm_sq(i)).sum();
    if total_centered < DEGENERACY_TOL {
        return Err(QadError::degenerate(
            MODULE,
            "prepare_chi_c",
            format!(
                "all centered training vectors vanish \
                 (simulated success probability {p_final_sim:.3e})"
            ),
        ));
    }
    let final_meas = measure_projector_pure(&state, &layout, &basis_projector(2, 0), &[1])?;

    // surviving block: ancilla = 0, label = 0 -> state on (control, data)
    let full = final_meas.post.amps();
    let strides = layout.strides();
    let mut amps = DVector::<Complex64>::zeros(m * d);
    for i in 0..m {
        for l in 0..d {
            amps[i * d + l] = full[i * strides[0] + l];
        }
    }
    let chi_c = PureState::new(amps)?;
    Ok(PreparedState::new(
        chi_c,
        vec![
            ("label_projection", label_meas.probability),
            ("ancilla_projection", final_meas.probability),
        ],
    ))
}

/// Computes every normalization constant definitionally and flags vanishing
/// centered vectors by index (0 = test state).
pub fn compute_ledger(ts: &TrainingSet) -> Result<NormalizationLedger> {
    let data = PureData::build(ts)?;
    let m = data.m;
    let nc_sq = (data.double_sum > DEGENERACY_TOL).then(|| 1.0 / data.double_sum);
    let mut flagged = Vec::new();

    let norms: Vec<f64> = (0..=m).map(|k| data.centered_norm_sq(k)).collect();
    let n0_sq = if norms[0] > DEGENERACY_TOL {
        Some(1.0 / norms[0])
    } else {
        flagged.push(0);
        None
    };
    let ni_sq: Vec<Option<f64>> = (1..=m)
        .map(|i| {
            if norms[i] > DEGENERACY_TOL {
                Some(1.0 / norms[i])
            } else {
                flagged.push(i);
                None
            }
        })
        .collect();
    let total: f64 = norms[1..].iter().sum();
    let nchi_sq = (total > DEGENERACY_TOL).then(|| 1.0 / total);
    let tr_c = total / (m as f64 - 1.0);

    // ledger self-consistency (exact by construction, cheap to verify)
    if let Some(nchi) = nchi_sq {
        let recon: f64 = ni_sq.iter().flatten().map(|n| 1.0 / n).sum();
        if ((1.0 / nchi) - recon).abs() > 1e-12 * recon.max(1.0) {
            return Err(QadError::invariant(MODULE, "compute_ledger", "N_chi_c inconsistency"));
        }
        if (tr_c - 1.0 / (nchi * (m as f64 - 1.0))).abs() > 1e-12 * tr_c.max(1.0) {
            return Err(QadError::invariant(MODULE, "compute_ledger", "tr(C) inconsistency"));
        }
    }
    Ok(NormalizationLedger {
        nc_sq,
        ni_sq,
        n0_sq,
        nchi_sq,
        tr_c,
        flagged,
    })
}

/// Which overlap component an `|A_R>`/`|A_I>` state serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArVariant {
    Real,
    Imag,
}

impl ArVariant {
    pub fn zeta(self) -> Complex64 {
        match self {
            ArVariant::Real => Complex64::new(1.0, 0.0),
            ArVariant::Imag => Complex64::new(0.0, 1.0),
        }
    }
}

/// Prepares
/// `(1/sqrt(2)) (|0>|0>|0>|0> + zeta |1>|0>|alpha_hat>|0>)`
/// on registers `(branch 2, data d, coeff M, data d)` through the
/// rotation-ancilla circuit: the coefficient branch carries the uniform
/// state, a rotation stage writes `alpha_hat` with amplitude
/// `gamma = P_T sqrt(M) ||alpha||`, and post-selecting the rotation ancilla
/// on `|1>` leaves the two branches balanced. The recorded success
/// probability is `gamma^2`.
///
/// `alpha` is the unnormalized coefficient vector of the restricted
/// (`r = 1`) solve; `p_t` is the threshold constant it was solved with.
pub fn prepare_ar_ai(
    alpha: &DVector<f64>,
    p_t: f64,
    dim: usize,
    variant: ArVariant,
) -> Result<PreparedState> {
    let m = alpha.len();
    if m < 2 {
        return Err(QadError::precondition(MODULE, "prepare_ar_ai", "need at least 2 coefficients"));
    }
    let norm = alpha.norm();
    if norm < 1e-14 {
        return Err(QadError::degenerate(MODULE, "prepare_ar_ai", "alpha vector is zero"));
    }
    // gamma = C_r ||alpha_quantum|| with C_r = P_T and the quantum-side
    // system (K/M + P_T 1)|alpha> = |e_hat>, whose solution is sqrt(M) alpha
    let gamma = (p_t * (m as f64).sqrt() * norm).min(1.0);

    // registers: branch (2) | data (d) | coeff (M) | data (d) | rot ancilla (2)
    let layout = RegisterLayout::new(vec![2, dim, m, dim, 2])?;
    let mut state = PureState::basis(layout.total_dim(), 0);
    state = apply_unitary_pure(&state, &layout, &gates::superpose_with_phase(variant.zeta())?, &[0])?;

    // branch 0: rotate the ancilla to sqrt(1-g^2)|0> + g|1>
    // branch 1: map |0>_coeff|0>_anc to g|alpha_hat>|1> + sqrt(1-g^2)|e_hat>|0>
    let c = Complex64::new;
    let anc_rotation = {
        let target = PureState::new(DVector::from_vec(vec![
            c((1.0 - gamma * gamma).max(0.0).sqrt(), 0.0),
            c(gamma, 0.0),
        ]))?;
        gates::complete_to_unitary(&target)
    };
    let branch_zero = crate::qcore::tensor_unitary(&Unitary::identity(m), &anc_rotation);
    let branch_one = {
        let e_hat = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
        let mut target = DVector::<Complex64>::zeros(2 * m);
        for i in 0..m {
            // coeff register most significant, ancilla least
            target[2 * i + 1] = c(gamma * alpha[i] / norm, 0.0);
            target[2 * i] = c((1.0 - gamma * gamma).max(0.0).sqrt(), 0.0) * e_hat;
        }
        gates::complete_to_unitary(&PureState::normalized(target)?)
    };
    let rotation_stage = controlled(&[branch_zero, branch_one])?;
    state = apply_unitary_pure(&state, &layout, &rotation_stage, &[0, 2, 4])?;

    let meas = measure_projector_pure(&state, &layout, &basis_projector(2, 1), &[4])?;
    if (meas.probability - gamma * gamma).abs() > PROB_TOL {
        return Err(QadError::invariant(
            MODULE,
            "prepare_ar_ai",
            format!("rotation post-selection probability {} != gamma^2 = {}", meas.probability, gamma * gamma),
        ));
    }

    // drop the measured ancilla (it is |1> in every surviving amplitude)
    let body_dim = 2 * dim * m * dim;
    let amps = DVector::from_iterator(
        body_dim,
        (0..body_dim).map(|k| meas.post.amps()[2 * k + 1]),
    );
    Ok(PreparedState::new(
        PureState::new(amps)?,
        vec![("rotation_ancilla", meas.probability)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{partial_trace_pure, random};
    use crate::reference::{dense_quantum_oracle, OracleReport};
    use crate::registry::{synthesize, AnomalyRecipe, BaseRecipe, DatasetSpec, StateSource};
    use approx::assert_abs_diff_eq;

    fn random_pure_set(m: usize, d: usize, seed: u64) -> TrainingSet {
        let mut rng = random::seeded_rng(seed);
        let sources = (0..m)
            .map(|_| StateSource::Pure(random::haar_unitary(d, &mut rng)))
            .collect();
        TrainingSet::new(sources, StateSource::Pure(random::haar_unitary(d, &mut rng))).unwrap()
    }

    fn identical_set(m: usize, d: usize, seed: u64) -> TrainingSet {
        let mut rng = random::seeded_rng(seed);
        let u = random::haar_unitary(d, &mut rng);
        TrainingSet::new(
            vec![StateSource::Pure(u.clone()); m],
            StateSource::Pure(u),
        )
        .unwrap()
    }

    fn orthogonal_pair() -> TrainingSet {
        TrainingSet::new(
            vec![
                StateSource::Pure(Unitary::identity(2)),
                StateSource::Pure(gates::pauli_x()),
            ],
            StateSource::Pure(Unitary::identity(2)),
        )
        .unwrap()
    }

    #[test]
    fn chi_of_identical_pair_is_product() {
        let ts = identical_set(2, 2, 1);
        let chi = prepare_chi(&ts).unwrap();
        let psi = ts.pure_states().unwrap()[0].clone();
        let plus = PureState::normalized(DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]))
        .unwrap();
        let target = tensor_pure(&plus, &psi);
        assert_abs_diff_eq!(chi.inner(&target).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_of_orthogonal_pair_is_bell() {
        let ts = orthogonal_pair();
        let chi = prepare_chi(&ts).unwrap();
        let mut bell = DVector::<Complex64>::zeros(4);
        bell[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); // |0>|psi_1=0>
        bell[3] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); // |1>|psi_2=1>
        let target = PureState::new(bell).unwrap();
        assert_abs_diff_eq!(chi.inner(&target).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_matches_direct_sum_random() {
        let ts = random_pure_set(4, 3, 7);
        let chi = prepare_chi(&ts).unwrap();
        let states = ts.pure_states().unwrap();
        let mut direct = DVector::<Complex64>::zeros(4 * 3);
        for (i, s) in states.iter().enumerate() {
            for (l, a) in s.amps().iter().enumerate() {
                direct[i * 3 + l] = a / Complex64::new(2.0, 0.0);
            }
        }
        let target = PureState::new(direct).unwrap();
        assert_abs_diff_eq!(chi.inner(&target).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn centroid_identical_states() {
        let ts = identical_set(3, 4, 2);
        let prep = prepare_centroid(&ts).unwrap();
        assert_abs_diff_eq!(prep.success_prob, 1.0, epsilon = 1e-12);
        let psi = ts.pure_states().unwrap()[0].clone();
        assert_abs_diff_eq!(prep.state.inner(&psi).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn centroid_orthogonal_pair() {
        let ts = orthogonal_pair();
        let prep = prepare_centroid(&ts).unwrap();
        assert_abs_diff_eq!(prep.success_prob, 0.5, epsilon = 1e-12);
        let states = ts.pure_states().unwrap();
        let sum = PureState::normalized(states[0].amps() + states[1].amps()).unwrap();
        assert_abs_diff_eq!(prep.state.inner(&sum).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn centroid_cancellation_is_degenerate() {
        // |psi_2> = -|psi_1>
        let mut rng = random::seeded_rng(5);
        let u = random::haar_unitary(2, &mut rng);
        let minus = Unitary::new(u.mat() * Complex64::new(-1.0, 0.0)).unwrap();
        let ts = TrainingSet::new(
            vec![StateSource::Pure(u.clone()), StateSource::Pure(minus)],
            StateSource::Pure(u),
        )
        .unwrap();
        assert_eq!(prepare_centroid(&ts).unwrap_err().kind(), "degenerate");
    }

    #[test]
    fn centroid_probability_matches_oracle_on_random_sets() {
        for seed in 0..5 {
            let ts = random_pure_set(3, 4, 100 + seed);
            let prep = prepare_centroid(&ts).unwrap();
            let report = match dense_quantum_oracle(&ts, 0.1).unwrap() {
                OracleReport::Pure(r) => r,
                _ => unreachable!(),
            };
            assert_abs_diff_eq!(prep.success_prob, report.p_chi, epsilon = 1e-12);
        }
    }

    #[test]
    fn centered_identical_training_errors_with_zero_probability() {
        let ts = identical_set(3, 2, 4);
        let err = prepare_centered(&ts, 1).unwrap_err();
        assert_eq!(err.kind(), "degenerate");
        let report = match dense_quantum_oracle(&ts, 0.1).unwrap() {
            OracleReport::Pure(r) => r,
            _ => unreachable!(),
        };
        assert_abs_diff_eq!(report.p_centered_final[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn centered_orthogonal_pair() {
        let ts = orthogonal_pair();
        let prep = prepare_centered(&ts, 1).unwrap();
        let states = ts.pure_states().unwrap();
        let diff = PureState::normalized(states[0].amps() - states[1].amps()).unwrap();
        assert_abs_diff_eq!(prep.state.inner(&diff).norm(), 1.0, epsilon = 1e-12);
        let report = match dense_quantum_oracle(&ts, 0.1).unwrap() {
            OracleReport::Pure(r) => r,
            _ => unreachable!(),
        };
        assert_abs_diff_eq!(prep.stage_probs[0].1, report.p_label, epsilon = 1e-12);
        assert_abs_diff_eq!(prep.stage_probs[1].1, report.p_centered_final[1], epsilon = 1e-12);
    }

    #[test]
    fn centered_test_state_against_identical_training() {
        let mut rng = random::seeded_rng(6);
        let u = random::haar_unitary(2, &mut rng);
        let psi = u.first_column();
        let perp = {
            let c = gates::complete_to_unitary(&psi);
            PureState::new(DVector::from_iterator(2, c.mat().column(1).iter().copied())).unwrap()
        };
        let ts = TrainingSet::new(
            vec![StateSource::Pure(u.clone()), StateSource::Pure(u)],
            StateSource::Pure(gates::complete_to_unitary(&perp)),
        )
        .unwrap();
        let prep = prepare_centered(&ts, 0).unwrap();
        // |z_0> prop_to |psi_0> - |psi_1> (identical training -> centroid = psi_1)
        let target = PureState::normalized(perp.amps() - psi.amps()).unwrap();
        assert_abs_diff_eq!(prep.state.inner(&target).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_c_identical_training_errors() {
        let ts = identical_set(4, 2, 8);
        assert_eq!(prepare_chi_c(&ts).unwrap_err().kind(), "degenerate");
    }

    #[test]
    fn chi_c_orthogonal_pair_final_probability() {
        let ts = orthogonal_pair();
        let prep = prepare_chi_c(&ts).unwrap();
        // (1 - 1/2) / (2 (1 + 1/2))
        assert_abs_diff_eq!(prep.stage_probs[1].1, 1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_c_partial_trace_is_normalized_covariance() {
        let ts = random_pure_set(4, 3, 11);
        let prep = prepare_chi_c(&ts).unwrap();
        let layout = RegisterLayout::new(vec![4, 3]).unwrap();
        let reduced = partial_trace_pure(&prep.state, &layout, &[1]).unwrap();

        // (M-1) |N_chi_c|^2 C entrywise
        let ledger = compute_ledger(&ts).unwrap();
        let data = PureData::build(&ts).unwrap();
        let mut cov = DMatrix::<Complex64>::zeros(3, 3);
        for i in 1..=4 {
            let z = data.centered(i);
            for r in 0..3 {
                for s in 0..3 {
                    cov[(r, s)] += z[r] * z[s].conj();
                }
            }
        }
        cov /= Complex64::new(3.0, 0.0);
        let scale = Complex64::new(3.0 * ledger.nchi_sq.unwrap(), 0.0);
        let target = cov * scale;
        assert!((reduced.mat() - target).iter().all(|x| x.norm() < 1e-12));
        assert_abs_diff_eq!(reduced.mat().trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ledger_identical_and_orthogonal_closed_forms() {
        let ts = identical_set(4, 3, 12);
        let ledger = compute_ledger(&ts).unwrap();
        assert_abs_diff_eq!(ledger.nc_sq.unwrap(), 1.0 / 16.0, epsilon = 1e-12);
        assert!(ledger.ni_sq.iter().all(Option::is_none));
        assert_eq!(ledger.flagged, vec![0, 1, 2, 3, 4]);

        let ts = orthogonal_pair();
        let ledger = compute_ledger(&ts).unwrap();
        assert_abs_diff_eq!(ledger.nc_sq.unwrap(), 0.5, epsilon = 1e-12);
        for n in ledger.ni_sq.iter().flatten() {
            assert_abs_diff_eq!(*n, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ledger_tr_c_cross_check_on_random_set() {
        let ts = random_pure_set(5, 4, 13);
        let ledger = compute_ledger(&ts).unwrap();
        let data = PureData::build(&ts).unwrap();
        let direct: f64 = (1..=5).map(|i| data.centered_norm_sq(i)).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(ledger.tr_c, direct, epsilon = 1e-12);
        assert_abs_diff_eq!(
            ledger.tr_c,
            1.0 / (ledger.nchi_sq.unwrap() * 4.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn near_identical_sets_have_high_success_probabilities() {
        let spec = DatasetSpec {
            m: 4,
            dim: 8,
            kind: "pure".into(),
            base: BaseRecipe::Haar,
            delta: 0.1,
            anomaly: AnomalyRecipe::Orthogonal,
            seed: 21,
        };
        let ts = synthesize(&spec).unwrap();
        let states = ts.pure_states().unwrap();
        for i in 0..states.len() {
            for j in (i + 1)..states.len() {
                assert!(states[i].fidelity(&states[j]) >= 0.9);
            }
        }
        let centroid = prepare_centroid(&ts).unwrap();
        assert!(centroid.success_prob >= 0.8, "P_chi = {}", centroid.success_prob);
        // label-register projections stay Omega(1) in the clustered regime
        let centered = prepare_centered(&ts, 0).unwrap();
        assert!(centered.stage_probs[0].1 >= 0.5);
        let chi_c = prepare_chi_c(&ts).unwrap();
        assert!(chi_c.stage_probs[0].1 >= 0.5);
    }

    #[test]
    fn ar_single_support_has_two_amplitudes() {
        let alpha = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let prep = prepare_ar_ai(&alpha, 0.25, 2, ArVariant::Real).unwrap();
        let nonzero: Vec<(usize, Complex64)> = prep
            .state
            .amps()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 1e-12)
            .map(|(k, a)| (k, *a))
            .collect();
        assert_eq!(nonzero.len(), 2);
        for (_, a) in &nonzero {
            assert_abs_diff_eq!(a.norm(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        }
    }

    #[test]
    fn ai_variant_carries_quarter_turn() {
        let alpha = DVector::from_vec(vec![0.5, 0.5]);
        let r = prepare_ar_ai(&alpha, 0.25, 2, ArVariant::Real).unwrap();
        let i = prepare_ar_ai(&alpha, 0.25, 2, ArVariant::Imag).unwrap();
        // branch-0 amplitude equal; branch-1 amplitudes differ by phase i
        let half = r.state.dim() / 2;
        for k in half..r.state.dim() {
            let a = r.state.amps()[k];
            let b = i.state.amps()[k];
            if a.norm() > 1e-12 {
                let ratio = b / a;
                assert_abs_diff_eq!(ratio.re, 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(ratio.im, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ar_uniform_alpha_matches_direct_construction() {
        let m = 4;
        let d = 2;
        let alpha = DVector::from_element(m, 0.3);
        let prep = prepare_ar_ai(&alpha, 0.2, d, ArVariant::Real).unwrap();
        let mut direct = DVector::<Complex64>::zeros(2 * d * m * d);
        direct[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let block = d * m * d;
        for i in 0..m {
            // |1>|0>|i>|0>
            direct[block + i * d] = Complex64::new(0.5 * std::f64::consts::FRAC_1_SQRT_2, 0.0);
        }
        let target = PureState::new(direct).unwrap();
        assert_abs_diff_eq!(prep.state.inner(&target).norm(), 1.0, epsilon = 1e-10);
        // success probability gamma^2 = (P_T sqrt(M) ||alpha||)^2
        let gamma = 0.2 * 2.0 * alpha.norm();
        assert_abs_diff_eq!(prep.success_prob, gamma * gamma, epsilon = 1e-12);
    }

    #[test]
    fn ar_rejects_zero_alpha() {
        let alpha = DVector::from_vec(vec![0.0, 0.0]);
        assert_eq!(
            prepare_ar_ai(&alpha, 0.1, 2, ArVariant::Real).unwrap_err().kind(),
            "degenerate"
        );
    }

    #[test]
    fn success_probability_is_product_of_stages() {
        let ts = random_pure_set(3, 3, 19);
        for kappa in 0..=3 {
            let prep = prepare_centered(&ts, kappa).unwrap();
            let product: f64 = prep.stage_probs.iter().map(|(_, p)| p).product();
            assert_abs_diff_eq!(prep.success_prob, product, epsilon = 1e-15);
        }
    }
}
