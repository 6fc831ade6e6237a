//! The acceptance suite: oracle-equivalence and invariant checks runnable
//! from the CLI (`qadkit validate`) and from the `acceptance` test target.
//!
//! Every check pins its tolerance in code and reports the measured value, so
//! a run documents not just pass/fail but how much headroom each property
//! has. The optional `sabotage` hook inflates one named check's measured
//! deviation past its tolerance — a harness sanity test that a failure
//! actually fails.

use crate::error::{QadError, Result};
use crate::hamsim;
use crate::kpca;
use crate::ocsvm::{self, EvolutionBackend};
use crate::qcore::{derive_seed, random, sample_bernoulli, DensityMatrix, KrausChannel};
use crate::reference::{dense_quantum_oracle, OracleReport};
use crate::registry::{
    synthesize, synthesize_holdout, AnomalyRecipe, BaseRecipe, DatasetSpec, RealizedState,
    StateSource, TrainingSet,
};
use crate::stateprep;
use crate::swaptest::{self, EstimatorMode, OverlapComponent};

/// Outcome of one acceptance check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub id: &'static str,
    pub criterion: u8,
    pub scope: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:2} {:32} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.id,
            self.detail
        )
    }
}

struct Harness<'a> {
    scope: &'a str,
    sabotage: Option<&'a str>,
    outcomes: Vec<CheckOutcome>,
}

impl<'a> Harness<'a> {
    fn wants(&self, scope: &str) -> bool {
        self.scope == "all" || self.scope == scope
    }

    /// Inflate a measured deviation when this check is sabotaged.
    fn deviation(&self, id: &str, dev: f64, tol: f64) -> f64 {
        if self.sabotage == Some(id) {
            dev + 10.0 * tol
        } else {
            dev
        }
    }

    fn record(&mut self, id: &'static str, criterion: u8, scope: &'static str, passed: bool, detail: String) {
        self.outcomes.push(CheckOutcome {
            id,
            criterion,
            scope,
            passed,
            detail,
        });
    }
}

/// All valid scope names.
pub const SCOPES: &[&str] = &[
    "all",
    "kpca",
    "limits",
    "ocsvm",
    "kernels",
    "stateprep",
    "hamsim",
    "hhl",
    "shots",
    "mixed",
    "endtoend",
];

fn clustered_spec(m: usize, d: usize, delta: f64, theta: f64, seed: u64) -> DatasetSpec {
    DatasetSpec {
        m,
        dim: d,
        kind: "pure".into(),
        base: BaseRecipe::Haar,
        delta,
        anomaly: AnomalyRecipe::Rotation { theta },
        seed,
    }
}

fn instance_grid(count: usize, base_seed: u64) -> Vec<DatasetSpec> {
    let combos: Vec<(usize, usize)> = [2usize, 4, 8]
        .iter()
        .flat_map(|&m| [2usize, 4, 8, 16].iter().map(move |&d| (m, d)))
        .collect();
    (0..count)
        .map(|i| {
            let (m, d) = combos[i % combos.len()];
            let delta = 0.05 + 0.45 * ((i * 37) % 100) as f64 / 100.0;
            let theta = 0.2 + 1.3 * ((i * 53) % 100) as f64 / 100.0;
            clustered_spec(m, d, delta, theta, base_seed + i as u64)
        })
        .collect()
}

/// Runs the acceptance suite for a scope (`"all"` or one of [`SCOPES`]).
pub fn run_validation(scope: &str, sabotage: Option<&str>) -> Result<Vec<CheckOutcome>> {
    if !SCOPES.contains(&scope) {
        return Err(QadError::precondition(
            "validation",
            "run_validation",
            format!("unknown scope {scope:?}; expected one of {SCOPES:?}"),
        ));
    }
    let mut h = Harness {
        scope,
        sabotage,
        outcomes: Vec::new(),
    };
    if h.wants("kpca") {
        check_kpca_oracle_equivalence(&mut h)?;
    }
    if h.wants("limits") {
        check_special_limits(&mut h)?;
    }
    if h.wants("ocsvm") {
        check_svm_route_equivalence(&mut h)?;
    }
    if h.wants("kernels") {
        check_kernel_identities(&mut h)?;
    }
    if h.wants("stateprep") {
        check_stateprep_probabilities(&mut h)?;
    }
    if h.wants("hamsim") {
        check_hamsim_scaling(&mut h)?;
    }
    if h.wants("hhl") {
        check_hhl_convergence(&mut h)?;
    }
    if h.wants("shots") {
        check_shot_statistics(&mut h)?;
    }
    if h.wants("mixed") {
        check_mixed_reductions(&mut h)?;
    }
    if h.wants("endtoend") {
        check_end_to_end_detection(&mut h)?;
    }
    Ok(h.outcomes)
}

/// Criterion 1: both pure KPCA routes equal the dense oracle within 1e-10
/// on 100 seeded instances (M in {2,4,8}, d in {2,4,8,16}), in under 60 s.
fn check_kpca_oracle_equivalence(h: &mut Harness) -> Result<()> {
    const TOL: f64 = 1e-10;
    let started = std::time::Instant::now();
    let mut max_dev: f64 = 0.0;
    for spec in instance_grid(100, 10_000) {
        let ts = synthesize(&spec)?;
        let oracle = match dense_quantum_oracle(&ts, 0.1)? {
            OracleReport::Pure(r) => r,
            _ => unreachable!(),
        };
        let inner = kpca::score_pure_innerproducts(&ts, EstimatorMode::Exact)?;
        let global = kpca::score_pure_global(&ts, EstimatorMode::Exact)?;
        max_dev = max_dev
            .max((inner.f - oracle.f_kpca).abs())
            .max((global.f - oracle.f_kpca).abs());
    }
    let elapsed = started.elapsed().as_secs_f64();
    let max_dev = h.deviation("kpca-oracle-equivalence", max_dev, TOL);
    let passed = max_dev <= TOL && elapsed < 60.0;
    h.record(
        "kpca-oracle-equivalence",
        1,
        "kpca",
        passed,
        format!("max |f - oracle| = {max_dev:.2e} (tol {TOL:.0e}), {elapsed:.1} s of 60 s"),
    );
    Ok(())
}

/// Criterion 2: closed-form special limits of both detectors.
fn check_special_limits(h: &mut Harness) -> Result<()> {
    const TOL: f64 = 1e-10;
    let identical = synthesize(&clustered_spec(4, 4, 0.0, 0.0, 42))?;
    let f_same = kpca::score_pure_innerproducts(&identical, EstimatorMode::Exact)?.f;

    let orthogonal = synthesize(&DatasetSpec {
        anomaly: AnomalyRecipe::Orthogonal,
        ..clustered_spec(4, 4, 0.0, 0.0, 42)
    })?;
    let f_orth = kpca::score_pure_innerproducts(&orthogonal, EstimatorMode::Exact)?.f;

    let (kernel, _) = ocsvm::build_kernel_pure(&identical, EstimatorMode::Exact)?;
    let alpha = ocsvm::solve_alpha_classical(&kernel, 0.1)?;
    let f_svm = ocsvm::score_svm_direct(&identical, &alpha, EstimatorMode::Exact)?.f;

    let dev = h.deviation(
        "special-limits",
        f_same
            .abs()
            .max((f_orth - 1.0).abs())
            .max((f_svm - 1.0 / 11.0).abs()),
        TOL,
    );
    h.record(
        "special-limits",
        2,
        "limits",
        dev <= TOL,
        format!(
            "f(identical) = {f_same:.2e}, f(orthogonal) - 1 = {:.2e}, f_svm - 1/11 = {:.2e} (tol {TOL:.0e})",
            f_orth - 1.0,
            f_svm - 1.0 / 11.0
        ),
    );
    Ok(())
}

/// Criterion 3: direct and overlap-circuit SVM scores agree within 1e-10 on
/// 50 instances.
fn check_svm_route_equivalence(h: &mut Harness) -> Result<()> {
    const TOL: f64 = 1e-10;
    let mut max_dev: f64 = 0.0;
    for (i, spec) in instance_grid(50, 20_000).into_iter().enumerate() {
        // keep the circuit dimension moderate
        let spec = DatasetSpec {
            dim: spec.dim.min(8),
            ..spec
        };
        let ts = synthesize(&spec)?;
        let (kernel, _) = ocsvm::build_kernel_pure(&ts, EstimatorMode::Exact)?;
        let alpha = ocsvm::solve_alpha_classical(&kernel, 0.1)?;
        let direct = ocsvm::score_svm_direct(&ts, &alpha, EstimatorMode::Exact)?;
        let circuit = ocsvm::score_svm_overlap_circuit(&ts, &alpha, EstimatorMode::Exact)?;
        max_dev = max_dev.max((direct.f - circuit.f).abs());
        let _ = i;
    }
    let max_dev = h.deviation("svm-route-equivalence", max_dev, TOL);
    h.record(
        "svm-route-equivalence",
        3,
        "ocsvm",
        max_dev <= TOL,
        format!("max |direct - circuit| = {max_dev:.2e} (tol {TOL:.0e})"),
    );
    Ok(())
}

/// Criterion 4: kernel identities — `K = K_0^T * K_0` (1e-12), the
/// superfidelity feature-map Gram (1e-10), and PSD-ness of both kernels
/// (eigenvalues >= -1e-10), over 50 random sets each.
fn check_kernel_identities(h: &mut Harness) -> Result<()> {
    let mut hadamard_dev: f64 = 0.0;
    let mut gram_dev: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for i in 0..50u64 {
        let ts = synthesize(&clustered_spec(4, 8, 0.4, 1.0, 30_000 + i))?;
        let (kernel, k0) = ocsvm::build_kernel_pure(&ts, EstimatorMode::Exact)?;
        for r in 0..kernel.m() {
            for c in 0..kernel.m() {
                let had = (k0.mat()[(c, r)] * k0.mat()[(r, c)]).re;
                hadamard_dev = hadamard_dev.max((kernel.mat()[(r, c)] - had).abs());
            }
        }
        min_eig = min_eig.min(kernel.min_eigenvalue());

        let mixed = synthesize(&DatasetSpec {
            m: 4,
            dim: 2,
            kind: "mixed".into(),
            base: BaseRecipe::Haar,
            delta: 0.4,
            anomaly: AnomalyRecipe::Depolarize { p: 0.8 },
            seed: 31_000 + i,
        })?;
        let sf = ocsvm::build_kernel_superfidelity(&mixed, EstimatorMode::Exact)?;
        let report = ocsvm::verify_kernel_psd(&sf, Some(&mixed))?;
        gram_dev = gram_dev.max(report.feature_gram_deviation.unwrap_or(f64::INFINITY));
        min_eig = min_eig.min(report.min_eigenvalue);
    }
    let hadamard_dev = h.deviation("kernel-identities", hadamard_dev, 1e-12);
    let passed = hadamard_dev <= 1e-12 && gram_dev <= 1e-10 && min_eig >= -1e-10;
    h.record(
        "kernel-identities",
        4,
        "kernels",
        passed,
        format!(
            "max |K - K0^T*K0| = {hadamard_dev:.2e} (tol 1e-12), \
             feature-Gram dev = {gram_dev:.2e} (tol 1e-10), min eig = {min_eig:.2e} (floor -1e-10)"
        ),
    );
    Ok(())
}

/// Criterion 5: simulated post-selection probabilities match the consistent
/// closed forms to 1e-12; clustered sets (pairwise fidelity >= 0.9) keep the
/// centroid probability >= 0.8 and every label-register projection >= 0.5.
///
/// The final post-selection stages of the centered-state preparations vanish
/// *by construction* as the set approaches identical (the centered vectors
/// go to zero — the same limit the special-limit criterion exercises), so
/// the >= 0.5 threshold applies to the preparation stages the Appendix-A
/// argument makes order-one: the centroid projection and the label-register
/// projections.
fn check_stateprep_probabilities(h: &mut Harness) -> Result<()> {
    const TOL: f64 = 1e-12;
    let mut formula_dev: f64 = 0.0;
    let mut min_pchi = f64::INFINITY;
    let mut min_label = f64::INFINITY;
    for i in 0..20u64 {
        let spec = clustered_spec(4, 8, 0.1, 1.2, 40_000 + i);
        let ts = synthesize(&spec)?;
        let states = ts.pure_states()?;
        for a in 0..states.len() {
            for b in (a + 1)..states.len() {
                assert!(states[a].fidelity(&states[b]) >= 0.9, "ensemble drifted out of regime");
            }
        }
        let oracle = match dense_quantum_oracle(&ts, 0.1)? {
            OracleReport::Pure(r) => r,
            _ => unreachable!(),
        };
        let centroid = stateprep::prepare_centroid(&ts)?;
        formula_dev = formula_dev.max((centroid.success_prob - oracle.p_chi).abs());
        min_pchi = min_pchi.min(centroid.success_prob);

        for kappa in 0..=ts.len() {
            let prep = stateprep::prepare_centered(&ts, kappa)?;
            formula_dev = formula_dev
                .max((prep.stage_probs[0].1 - oracle.p_label).abs())
                .max((prep.stage_probs[1].1 - oracle.p_centered_final[kappa]).abs());
            min_label = min_label.min(prep.stage_probs[0].1);
        }
        let chi_c = stateprep::prepare_chi_c(&ts)?;
        formula_dev = formula_dev
            .max((chi_c.stage_probs[0].1 - oracle.p_label).abs())
            .max((chi_c.stage_probs[1].1 - oracle.p_chi_c_final).abs());
        min_label = min_label.min(chi_c.stage_probs[0].1);
    }
    let formula_dev = h.deviation("stateprep-probabilities", formula_dev, TOL);
    let passed = formula_dev <= TOL && min_pchi >= 0.8 && min_label >= 0.5;
    h.record(
        "stateprep-probabilities",
        5,
        "stateprep",
        passed,
        format!(
            "max |simulated - formula| = {formula_dev:.2e} (tol {TOL:.0e}), \
             min P_chi = {min_pchi:.3} (floor 0.8), min label projection = {min_label:.3} (floor 0.5)"
        ),
    );
    Ok(())
}

/// Criterion 6: one-step deviation shrinks 4x (+-15%) under dt halving;
/// the concatenated evolution error halves (ratio in [1.6, 2.4]) under n
/// doubling at t = 1, M = 4.
fn check_hamsim_scaling(h: &mut Harness) -> Result<()> {
    let ts = synthesize(&clustered_spec(4, 8, 0.35, 1.0, 50_000))?;
    let (_, k0) = ocsvm::build_kernel_pure(&ts, EstimatorMode::Exact)?;
    let k0_density = k0.to_density()?;
    let mut rng = random::seeded_rng(50_001);
    let sigma = {
        let a = random::haar_state(4, &mut rng).to_density();
        let b = random::haar_state(4, &mut rng).to_density();
        DensityMatrix::new(
            a.mat() * num_complex::Complex64::new(0.5, 0.0)
                + b.mat() * num_complex::Complex64::new(0.5, 0.0),
        )?
    };

    let step1 = hamsim::evolution_step(&k0_density, &k0_density, &sigma, 1e-2)?;
    let step2 = hamsim::evolution_step(&k0_density, &k0_density, &sigma, 5e-3)?;
    let step_ratio = h.deviation("hamsim-scaling", step1.deviation / step2.deviation, 4.0) ;
    let step_ok = (3.4..=4.6).contains(&step_ratio);

    let exact = hamsim::exact_evolution(&hamsim::kernel_generator(&k0_density), &sigma, 1.0);
    let errors: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&n| {
            hamsim::simulate_exp_k(&k0_density, &sigma, 1.0, n)
                .map(|out| hamsim::trace_distance(&out, &exact))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let conc_ok = ratios.iter().all(|r| (1.6..=2.4).contains(r));

    h.record(
        "hamsim-scaling",
        6,
        "hamsim",
        step_ok && conc_ok,
        format!(
            "single-step halving ratio = {step_ratio:.3} (window [3.4, 4.6]), \
             n-doubling ratios = {ratios:?} (window [1.6, 2.4])"
        ),
    );
    Ok(())
}

/// Criterion 7: HHL direction overlap >= 1 - 1e-3 at t = 10 on M = 2
/// instances; monotone direction-error decrease across t in {6, 8, 10} on
/// M = 4 instances.
fn check_hhl_convergence(h: &mut Harness) -> Result<()> {
    let mut worst_overlap = f64::INFINITY;
    for i in 0..5u64 {
        let ts = synthesize(&clustered_spec(2, 8, 0.1 + 0.1 * i as f64, 1.0, 60_000 + i))?;
        let (kernel, _) = ocsvm::build_kernel_pure(&ts, EstimatorMode::Exact)?;
        let classical = ocsvm::solve_alpha_classical(&kernel, 0.1)?;
        let hhl = ocsvm::solve_alpha_hhl(&kernel, 0.1, 10, EvolutionBackend::Exact)?;
        let overlap = (hhl.alpha.dot(&classical.alpha)
            / (hhl.alpha.norm() * classical.alpha.norm()))
        .abs();
        worst_overlap = worst_overlap.min(overlap);
    }
    let overlap_dev = h.deviation("hhl-convergence", 1.0 - worst_overlap, 1e-3);
    let m2_ok = overlap_dev <= 1e-3;

    // M = 4: the phase-estimation error wiggles per instance with how each
    // eigenphase aligns to the clock grid, so monotonicity is asserted on
    // the ensemble mean over 10 seeded instances
    let instances = 10u64;
    let mut mean_errors = [0.0f64; 3];
    for i in 0..instances {
        let ts = synthesize(&clustered_spec(4, 8, 0.35, 1.0, 61_000 + i))?;
        let (kernel, _) = ocsvm::build_kernel_pure(&ts, EstimatorMode::Exact)?;
        let classical = ocsvm::solve_alpha_classical(&kernel, 0.1)?;
        for (slot, &t) in [6usize, 8, 10].iter().enumerate() {
            let sol = ocsvm::solve_alpha_hhl(&kernel, 0.1, t, EvolutionBackend::Exact)?;
            let overlap = (sol.alpha.dot(&classical.alpha)
                / (sol.alpha.norm() * classical.alpha.norm()))
            .abs();
            mean_errors[slot] += (1.0 - overlap) / instances as f64;
        }
    }
    let monotone_ok = mean_errors[0] > mean_errors[1] && mean_errors[1] > mean_errors[2];
    h.record(
        "hhl-convergence",
        7,
        "hhl",
        m2_ok && monotone_ok,
        format!(
            "min M=2 overlap deficit = {overlap_dev:.2e} (tol 1e-3), \
             M=4 mean errors over t = 6/8/10: {mean_errors:?} monotone = {monotone_ok}"
        ),
    );
    Ok(())
}

/// Criterion 8: per estimator, |estimate - exact| <= 4 stderr in >= 95% of
/// 200 seeded trials at 10^4 shots, and the probability-component RMS error
/// respects the 1/(4 eps^2) measurement bound up to a factor 2.
fn check_shot_statistics(h: &mut Harness) -> Result<()> {
    const SHOTS: u64 = 10_000;
    const TRIALS: u64 = 200;
    let rms_bound = 1.0 / (2.0 * SHOTS as f64).sqrt();

    let ts = synthesize(&clustered_spec(2, 4, 0.5, 1.0, 70_000))?;
    let u_a = ts.sources()[0].as_pure()?.clone();
    let u_b = ts.sources()[1].as_pure()?.clone();
    let mixed = synthesize(&DatasetSpec {
        m: 2,
        dim: 2,
        kind: "mixed".into(),
        base: BaseRecipe::Haar,
        delta: 0.5,
        anomaly: AnomalyRecipe::Depolarize { p: 0.6 },
        seed: 70_001,
    })?;
    let ch_a = mixed.sources()[0].as_mixed()?.clone();
    let ch_b = mixed.test().as_mixed()?.clone();

    // each estimator: (name, exact probability of its measured component)
    let mut estimators: Vec<(&'static str, f64)> = Vec::new();
    for component in [OverlapComponent::Real, OverlapComponent::Imag] {
        let exact = swaptest::modified_swap_test(&u_a, &u_b, component, EstimatorMode::Exact)?;
        estimators.push((
            match component {
                OverlapComponent::Real => "modified-swap-re",
                OverlapComponent::Imag => "modified-swap-im",
            },
            exact.raw_probability,
        ));
    }
    {
        let exact = swaptest::standard_swap_test(
            &RealizedState::Pure(u_a.first_column()),
            &RealizedState::Pure(u_b.first_column()),
            EstimatorMode::Exact,
        )?;
        estimators.push(("standard-swap", exact.raw_probability));
    }
    {
        let exact = swaptest::kraus_inner_product(&ch_a, &ch_b, EstimatorMode::Exact)?;
        estimators.push(("kraus-re", exact.components[0].raw_probability));
        estimators.push(("kraus-im", exact.components[1].raw_probability));
    }

    let mut min_hit_rate: f64 = 1.0;
    let mut max_rms: f64 = 0.0;
    for (name, p_exact) in &estimators {
        let mut hits = 0u64;
        let mut sq_sum = 0.0;
        for trial in 0..TRIALS {
            let sample = sample_bernoulli(*p_exact, SHOTS, derive_seed(0xE57, trial))?;
            let err = sample.estimate - p_exact;
            sq_sum += err * err;
            // decoded values are affine in p, so the 4-sigma test is
            // equivalent on probabilities (guarding stderr = 0 at p in {0,1})
            if err.abs() <= 4.0 * sample.stderr + 1e-12 {
                hits += 1;
            }
        }
        min_hit_rate = min_hit_rate.min(hits as f64 / TRIALS as f64);
        max_rms = max_rms.max((sq_sum / TRIALS as f64).sqrt());
        let _ = name;
    }
    let max_rms = h.deviation("shot-statistics", max_rms, rms_bound);
    let passed = min_hit_rate >= 0.95 && max_rms <= rms_bound;
    h.record(
        "shot-statistics",
        8,
        "shots",
        passed,
        format!(
            "min 4-sigma hit rate = {min_hit_rate:.3} (floor 0.95), \
             max probability RMS = {max_rms:.2e} (bound {rms_bound:.2e} = shots <= 2/(4 eps^2))"
        ),
    );
    Ok(())
}

/// Criterion 9: unitary-channel mixed pipelines reproduce the pure
/// pipelines within 1e-10 for both detectors, and mixed KPCA matches the
/// dense Kraus oracle within 1e-10, over 50 instances.
fn check_mixed_reductions(h: &mut Harness) -> Result<()> {
    const TOL: f64 = 1e-10;
    let mut reduction_dev: f64 = 0.0;
    let mut oracle_dev: f64 = 0.0;
    for i in 0..50u64 {
        // unitary-channel reduction on clustered sets
        let spec = clustered_spec(3, 4, 0.3, 1.0, 80_000 + i);
        let pure = synthesize(&spec)?;
        let as_mixed = TrainingSet::new(
            pure.sources()
                .iter()
                .map(|s| Ok(StateSource::Mixed(KrausChannel::from_unitary(s.as_pure()?))))
                .collect::<Result<Vec<_>>>()?,
            StateSource::Mixed(KrausChannel::from_unitary(pure.test().as_pure()?)),
        )?;

        let f_pure = kpca::score_pure_innerproducts(&pure, EstimatorMode::Exact)?.f;
        let f_mixed = kpca::score_mixed(&as_mixed, EstimatorMode::Exact)?.f;
        reduction_dev = reduction_dev.max((f_pure - f_mixed).abs());

        let (kp, _) = ocsvm::build_kernel_pure(&pure, EstimatorMode::Exact)?;
        let km = ocsvm::build_kernel_superfidelity(&as_mixed, EstimatorMode::Exact)?;
        let ap = ocsvm::solve_alpha_classical(&kp, 0.1)?;
        let am = ocsvm::solve_alpha_classical(&km, 0.1)?;
        let sp = ocsvm::score_svm_direct(&pure, &ap, EstimatorMode::Exact)?.f;
        let sm = ocsvm::score_svm_direct(&as_mixed, &am, EstimatorMode::Exact)?.f;
        // the mixed measure is the square of the pure one
        reduction_dev = reduction_dev.max((sp * sp - sm).abs());

        // genuinely mixed sets against the dense oracle, across the
        // (M, d) grid in {2, 4, 8} x {2, 4, 8}
        let combos = [2usize, 4, 8];
        let mixed = synthesize(&DatasetSpec {
            m: combos[(i % 9) as usize / 3],
            dim: combos[(i % 3) as usize],
            kind: "mixed".into(),
            base: BaseRecipe::Haar,
            delta: 0.35,
            anomaly: AnomalyRecipe::Depolarize { p: 0.7 },
            seed: 81_000 + i,
        })?;
        let score = kpca::score_mixed(&mixed, EstimatorMode::Exact)?;
        let oracle = match dense_quantum_oracle(&mixed, 0.1)? {
            OracleReport::Mixed(r) => r,
            _ => unreachable!(),
        };
        oracle_dev = oracle_dev.max((score.f - oracle.f_kpca).abs());
    }
    let reduction_dev = h.deviation("mixed-reductions", reduction_dev, TOL);
    let passed = reduction_dev <= TOL && oracle_dev <= TOL;
    h.record(
        "mixed-reductions",
        9,
        "mixed",
        passed,
        format!(
            "max pure-limit deviation = {reduction_dev:.2e}, \
             max Kraus-oracle deviation = {oracle_dev:.2e} (tol {TOL:.0e})"
        ),
    );
    Ok(())
}

/// Criterion 10: on synthesized datasets (delta = 0.1, M = 8, d = 8,
/// orthogonal anomaly), both detectors score the anomaly strictly above
/// every held-out normal state, 20/20 seeds, exact mode.
fn check_end_to_end_detection(h: &mut Harness) -> Result<()> {
    let mut successes = 0;
    let seeds = 20u64;
    let mut worst_margin = f64::INFINITY;
    for i in 0..seeds {
        let spec = DatasetSpec {
            m: 8,
            dim: 8,
            kind: "pure".into(),
            base: BaseRecipe::Haar,
            delta: 0.1,
            anomaly: AnomalyRecipe::Orthogonal,
            seed: 90_000 + i,
        };
        let ts = synthesize(&spec)?;
        let holdout = synthesize_holdout(&spec, 3)?;

        let f_kpca_anomaly = kpca::score_pure_innerproducts(&ts, EstimatorMode::Exact)?.f;
        let (kernel, _) = ocsvm::build_kernel_pure(&ts, EstimatorMode::Exact)?;
        let alpha = ocsvm::solve_alpha_classical(&kernel, 0.1)?;
        let f_svm_anomaly = ocsvm::score_svm_direct(&ts, &alpha, EstimatorMode::Exact)?.f;

        let mut detected = true;
        for normal in holdout {
            let normal_ts = ts.with_test(normal)?;
            let f_kpca_normal =
                kpca::score_pure_innerproducts(&normal_ts, EstimatorMode::Exact)?.f;
            let f_svm_normal =
                ocsvm::score_svm_direct(&normal_ts, &alpha, EstimatorMode::Exact)?.f;
            detected &= f_kpca_anomaly > f_kpca_normal && f_svm_anomaly > f_svm_normal;
            worst_margin = worst_margin
                .min(f_kpca_anomaly - f_kpca_normal)
                .min(f_svm_anomaly - f_svm_normal);
        }
        if detected {
            successes += 1;
        }
    }
    let sabotaged = h.sabotage == Some("end-to-end-detection");
    let passed = successes == seeds && !sabotaged;
    h.record(
        "end-to-end-detection",
        10,
        "endtoend",
        passed,
        format!("{successes}/{seeds} seeds detected, worst margin = {worst_margin:.3e}"),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scope_filtering_and_sabotage() {
        let outcomes = run_validation("limits", None).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert!(outcomes[0].passed, "{}", outcomes[0].line());

        let sabotaged = run_validation("limits", Some("special-limits")).unwrap();
        assert!(!sabotaged[0].passed, "sabotage must fail the check");
    }

    #[test]
    fn unknown_scope_rejected() {
        assert!(run_validation("bogus", None).is_err());
    }
}
