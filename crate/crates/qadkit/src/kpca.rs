//! Kernel-PCA anomaly detectors.
//!
//! Three routes to the proximity measure `f`:
//!
//! - [`score_pure_innerproducts`] estimates every pairwise overlap
//!   `<psi_i|psi_kappa>` with the modified swap test and evaluates
//!   `f = 1 - (1/((M-1) ||z_0||^2)) sum_i |<z_i|z_0>|^2` on the estimated
//!   Gram matrix (centered vectors left unnormalized, which keeps the
//!   degenerate cases finite);
//! - [`score_pure_global`] prepares the centered superposition, reduces it
//!   to the covariance density matrix, and measures
//!   `f = 1 - tr(C) tr(C_hat |z_0><z_0|)` with a single standard swap test;
//! - [`score_mixed`] replaces overlaps with the Kraus pairing
//!   `<rho_i, rho_kappa>` and evaluates the same centered formula.
//!
//! `f` ranges over `[0, 1]` whenever the training set is clustered (all
//! pairwise overlaps with nonnegative real part); exact-mode scores outside
//! that range by more than 1e-10 are rejected as a clustering-assumption
//! violation. Shot-mode scores clamp at 0 (the estimate cannot exceed 1 by
//! construction) and carry a first-order propagated standard error,
//! evaluated by perturbing each estimated component by one standard error
//! and taking the worst per-component deviation, so the reported band also
//! absorbs local curvature. Special limits: a vanishing centered test state
//! scores 0; an all-identical training set with a distinct test state has an
//! undefined covariance direction and scores 1.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QadError, Result};
use crate::qcore::RegisterLayout;
use crate::registry::{StateKind, TrainingSet};
use crate::stateprep::{compute_ledger, prepare_centered, prepare_chi_c, NormalizationLedger};
use crate::swaptest::{complex_overlap, kraus_inner_product, EstimatorMode, OverlapEstimate};

const MODULE: &str = "kpca";

/// Squared-norm threshold below which the centered test state counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Tolerance on the exact-mode range check `0 <= f <= 1`.
const RANGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpcaRoute {
    InnerProducts,
    Global,
    Mixed,
}

impl std::fmt::Display for KpcaRoute {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KpcaRoute::InnerProducts => write!(f, "inner-products"),
            KpcaRoute::Global => write!(f, "global"),
            KpcaRoute::Mixed => write!(f, "mixed"),
        }
    }
}

/// A kernel-PCA proximity score with its estimation metadata.
#[derive(Debug, Clone)]
pub struct KpcaScore {
    pub f: f64,
    pub route: KpcaRoute,
    pub exact: bool,
    /// Propagated standard error (0 in exact mode).
    pub stderr: f64,
    pub shots_total: u64,
    /// All training states identical: the covariance direction is undefined
    /// and the detector fixes `f = 1`.
    pub degenerate_covariance: bool,
    /// The centered test state vanished: `f = 0` by the no-anomaly limit.
    pub zero_centered_test: bool,
    /// Post-selection success probabilities of any state preparations the
    /// route ran (the global route's `|chi_c>` and `|z_0>` circuits).
    pub prep_stages: Vec<(&'static str, f64)>,
    pub ledger: Option<NormalizationLedger>,
}

fn validate_score(route: KpcaRoute, exact: bool, f: f64) -> Result<f64> {
    if exact {
        if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&f) {
            return Err(QadError::invariant(
                MODULE,
                "score",
                format!(
                    "exact-mode f = {f} outside [0, 1] on route {route}; \
                     the training set violates the clustering assumption \
                     (some pairwise overlaps have negative real part)"
                ),
            ));
        }
        Ok(f.clamp(0.0, 1.0))
    } else {
        // the subtracted term is a sum of squares, so f <= 1 holds by
        // construction; only the lower side can fluctuate past the boundary
        Ok(f.max(0.0))
    }
}

/// One estimated Gram entry and the standard errors of its components.
struct GramEntry {
    a: usize,
    b: usize,
    /// Standard errors of the decoded re/im component values.
    stderr: [f64; 2],
}

/// The centered-formula evaluation on a Gram matrix.
fn measure_from_gram(gram: &DMatrix<Complex64>, m: usize) -> (f64, f64, f64) {
    let mf = m as f64;
    let s: Complex64 = (1..=m)
        .flat_map(|i| (1..=m).map(move |j| (i, j)))
        .map(|(i, j)| gram[(i, j)])
        .sum();
    let norm0 = gram[(0, 0)].re - 2.0 / mf * (1..=m).map(|j| gram[(0, j)].re).sum::<f64>()
        + s.re / (mf * mf);
    let train_norm_total: f64 = (1..=m)
        .map(|k| {
            gram[(k, k)].re - 2.0 / mf * (1..=m).map(|j| gram[(k, j)].re).sum::<f64>()
                + s.re / (mf * mf)
        })
        .sum();
    let quad: f64 = (1..=m)
        .map(|i| {
            let row_i: Complex64 = (1..=m).map(|j| gram[(i, j)]).sum();
            let col_0: Complex64 = (1..=m).map(|j| gram[(j, 0)]).sum();
            let w = gram[(i, 0)] - (row_i + col_0) / Complex64::new(mf, 0.0)
                + s / Complex64::new(mf * mf, 0.0);
            w.norm_sqr()
        })
        .sum();
    (norm0, train_norm_total, quad)
}

fn f_from_gram(gram: &DMatrix<Complex64>, m: usize) -> (f64, bool, bool) {
    let (norm0, train_total, quad) = measure_from_gram(gram, m);
    let degenerate_cov = train_total < DEGENERACY_TOL;
    if norm0 < DEGENERACY_TOL {
        return (0.0, degenerate_cov, true);
    }
    let f = 1.0 - quad / ((m as f64 - 1.0) * norm0);
    (f, degenerate_cov, false)
}

/// First-order error propagation: perturb each estimated component by its
/// standard error (both signs), re-evaluate `f`, and root-sum-square the
/// worst deviations.
fn propagate_stderr(gram: &DMatrix<Complex64>, entries: &[GramEntry], m: usize) -> f64 {
    let (f0, _, zero0) = f_from_gram(gram, m);
    if zero0 {
        return 0.0;
    }
    let mut var = 0.0;
    let mut work = gram.clone();
    for entry in entries {
        for (c, &sigma) in entry.stderr.iter().enumerate() {
            if sigma == 0.0 {
                continue;
            }
            let delta = if c == 0 {
                Complex64::new(sigma, 0.0)
            } else {
                Complex64::new(0.0, sigma)
            };
            let mut worst: f64 = 0.0;
            for sign in [1.0, -1.0] {
                let d = delta * sign;
                work[(entry.a, entry.b)] = gram[(entry.a, entry.b)] + d;
                if entry.a != entry.b {
                    work[(entry.b, entry.a)] = gram[(entry.b, entry.a)] + d.conj();
                }
                let (fp, _, _) = f_from_gram(&work, m);
                worst = worst.max((fp - f0).abs());
            }
            work[(entry.a, entry.b)] = gram[(entry.a, entry.b)];
            work[(entry.b, entry.a)] = gram[(entry.b, entry.a)];
            var += worst * worst;
        }
    }
    var.sqrt()
}

/// Kernel-PCA score from pairwise modified swap tests (the inner-product
/// route). Shot budgets apply per component of each estimated overlap.
pub fn score_pure_innerproducts(ts: &TrainingSet, mode: EstimatorMode) -> Result<KpcaScore> {
    if ts.kind() != StateKind::Pure {
        return Err(QadError::unsupported(
            MODULE,
            "score_pure_innerproducts",
            "pure training set required; use score_mixed for Kraus sources",
        ));
    }
    let m = ts.len();
    let mut gram = DMatrix::from_element(m + 1, m + 1, Complex64::new(1.0, 0.0));
    let mut entries = Vec::new();
    let mut shots_total = 0;
    let mut pair_index = 0u64;
    for a in 0..=m {
        for b in (a + 1)..=m {
            let est = complex_overlap(
                ts.source(a).as_pure()?,
                ts.source(b).as_pure()?,
                mode.derived(pair_index),
            )?;
            pair_index += 1;
            shots_total += est.shots_total();
            gram[(a, b)] = est.value;
            gram[(b, a)] = est.value.conj();
            entries.push(GramEntry {
                a,
                b,
                stderr: [
                    est.components[0].value_stderr(),
                    est.components[1].value_stderr(),
                ],
            });
        }
    }

    let (f_raw, degenerate_covariance, zero_centered_test) = f_from_gram(&gram, m);
    let stderr = if mode.is_exact() { 0.0 } else { propagate_stderr(&gram, &entries, m) };
    let f = validate_score(KpcaRoute::InnerProducts, mode.is_exact(), f_raw)?;
    Ok(KpcaScore {
        f,
        route: KpcaRoute::InnerProducts,
        exact: mode.is_exact(),
        stderr,
        shots_total,
        degenerate_covariance,
        zero_centered_test,
        prep_stages: Vec::new(),
        ledger: Some(compute_ledger(ts)?),
    })
}

/// Kernel-PCA score via the global route: prepare `|chi_c>`, reduce to the
/// covariance density matrix, and swap-test it against `|z_0>`.
pub fn score_pure_global(ts: &TrainingSet, mode: EstimatorMode) -> Result<KpcaScore> {
    if ts.kind() != StateKind::Pure {
        return Err(QadError::unsupported(
            MODULE,
            "score_pure_global",
            "pure training set required; the mixed measure has no global route",
        ));
    }
    let m = ts.len();
    let ledger = compute_ledger(ts)?;

    let chi_c = prepare_chi_c(ts).map_err(|e| match e {
        QadError::Degenerate { .. } => QadError::degenerate(
            MODULE,
            "score_pure_global",
            "covariance undefined: all training states identical",
        ),
        other => other,
    })?;

    let z0 = match prepare_centered(ts, 0) {
        Ok(prep) => prep,
        Err(QadError::Degenerate { .. }) => {
            // vanishing centered test state: no anomaly by definition
            return Ok(KpcaScore {
                f: 0.0,
                route: KpcaRoute::Global,
                exact: mode.is_exact(),
                stderr: 0.0,
                shots_total: 0,
                degenerate_covariance: false,
                zero_centered_test: true,
                prep_stages: Vec::new(),
                ledger: Some(ledger),
            });
        }
        Err(other) => return Err(other),
    };

    // Swap test between the covariance density matrix and |z_0>, run on the
    // purification: the ancilla statistics of the controlled-SWAP depend
    // only on the reduced state of |chi_c>'s data register, which is
    // exactly C_hat = tr_1(|chi_c><chi_c|), so swapping against that
    // register measures tr(C_hat |z_0><z_0|) without ever forming the
    // mixed state.
    let d = ts.dim();
    let layout = RegisterLayout::new(vec![2, m, d, d])?;
    let mut state = crate::qcore::tensor_pure(
        &crate::qcore::tensor_pure(&crate::qcore::PureState::basis(2, 0), &chi_c.state),
        &z0.state,
    );
    state = crate::qcore::apply_unitary_pure(&state, &layout, &crate::qcore::gates::hadamard(), &[0])?;
    let cswap = crate::qcore::controlled(&[
        crate::qcore::Unitary::identity(d * d),
        crate::qcore::gates::swap(d),
    ])?;
    state = crate::qcore::apply_unitary_pure(&state, &layout, &cswap, &[0, 2, 3])?;
    state = crate::qcore::apply_unitary_pure(&state, &layout, &crate::qcore::gates::hadamard(), &[0])?;
    let p_pass = crate::qcore::projection_probability_pure(
        &state,
        &layout,
        &crate::qcore::basis_projector(2, 0),
        &[0],
    )?;

    let (overlap, sigma_p, shots_total) = match mode {
        EstimatorMode::Exact => (2.0 * p_pass - 1.0, 0.0, 0),
        EstimatorMode::Shots { shots, seed } => {
            let sample = crate::qcore::sample_bernoulli(p_pass, shots, seed)?;
            (2.0 * sample.estimate - 1.0, sample.stderr, shots)
        }
    };
    let f_raw = 1.0 - ledger.tr_c * overlap;
    let stderr = ledger.tr_c * 2.0 * sigma_p;
    let f = validate_score(KpcaRoute::Global, mode.is_exact(), f_raw)?;
    Ok(KpcaScore {
        f,
        route: KpcaRoute::Global,
        exact: mode.is_exact(),
        stderr,
        shots_total,
        degenerate_covariance: false,
        zero_centered_test: false,
        prep_stages: vec![
            ("chi_c_preparation", chi_c.success_prob),
            ("z0_preparation", z0.success_prob),
        ],
        ledger: Some(ledger),
    })
}

/// Mixed-state kernel-PCA score over the Kraus pairing
/// `<rho_i, rho_kappa>`. All `M(M+1)/2 + M + 1` distinct pairings are
/// estimated; the remainder follow by Hermitian symmetry.
pub fn score_mixed(ts: &TrainingSet, mode: EstimatorMode) -> Result<KpcaScore> {
    if ts.kind() != StateKind::Mixed {
        return Err(QadError::unsupported(
            MODULE,
            "score_mixed",
            "mixed training set required; use the pure routes for unitary sources",
        ));
    }
    let m = ts.len();
    let mut gram = DMatrix::from_element(m + 1, m + 1, Complex64::default());
    let mut entries = Vec::new();
    let mut shots_total = 0;
    let mut pair_index = 0u64;
    for a in 0..=m {
        for b in a..=m {
            let est: OverlapEstimate = kraus_inner_product(
                ts.source(a).as_mixed()?,
                ts.source(b).as_mixed()?,
                mode.derived(pair_index),
            )?;
            pair_index += 1;
            shots_total += est.shots_total();
            gram[(a, b)] = est.value;
            if a != b {
                gram[(b, a)] = est.value.conj();
            }
            entries.push(GramEntry {
                a,
                b,
                stderr: [
                    est.components[0].value_stderr(),
                    est.components[1].value_stderr(),
                ],
            });
        }
    }

    let (f_raw, degenerate_covariance, zero_centered_test) = f_from_gram(&gram, m);
    let stderr = if mode.is_exact() { 0.0 } else { propagate_stderr(&gram, &entries, m) };
    let f = validate_score(KpcaRoute::Mixed, mode.is_exact(), f_raw)?;
    Ok(KpcaScore {
        f,
        route: KpcaRoute::Mixed,
        exact: mode.is_exact(),
        stderr,
        shots_total,
        degenerate_covariance,
        zero_centered_test,
        prep_stages: Vec::new(),
        ledger: None,
    })
}
