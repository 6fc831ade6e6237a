//! Classical brute-force oracles.
//!
//! This module recomputes, by direct linear algebra on amplitude vectors and
//! Kraus operators, every quantity the circuit-simulation pipeline estimates:
//! overlaps, kernels, normalization constants, post-selection probabilities
//! and both detectors' proximity measures. It deliberately shares no helper
//! code with the simulation path beyond the base matrix types, so agreement
//! between the two is meaningful evidence of correctness. Clarity over speed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QadError, Result};
use crate::registry::{StateKind, StateSource, TrainingSet};

const MODULE: &str = "reference";

/// A classical dataset: `M` training vectors plus a test vector, real or
/// complex, all of one dimension.
#[derive(Debug, Clone)]
pub struct ClassicalDataset {
    vectors: Vec<DVector<Complex64>>,
    test: DVector<Complex64>,
}

impl ClassicalDataset {
    pub fn new(vectors: Vec<DVector<Complex64>>, test: DVector<Complex64>) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(QadError::precondition(
                MODULE,
                "ClassicalDataset",
                "need at least 2 training vectors",
            ));
        }
        let dim = test.len();
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(QadError::dimension(
                MODULE,
                "ClassicalDataset",
                "all vectors must share one dimension",
            ));
        }
        Ok(Self { vectors, test })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[DVector<Complex64>] {
        &self.vectors
    }

    pub fn test(&self) -> &DVector<Complex64> {
        &self.test
    }

    fn centroid(&self) -> DVector<Complex64> {
        let mut c = DVector::zeros(self.test.len());
        for v in &self.vectors {
            c += v;
        }
        c / Complex64::new(self.len() as f64, 0.0)
    }

    /// Centered sample covariance `C = 1/(M-1) sum_i z_i z_i^dagger`.
    pub fn covariance(&self) -> DMatrix<Complex64> {
        let c = self.centroid();
        let d = self.test.len();
        let mut cov = DMatrix::<Complex64>::zeros(d, d);
        for v in &self.vectors {
            let z = v - &c;
            for r in 0..d {
                for s in 0..d {
                    cov[(r, s)] += z[r] * z[s].conj();
                }
            }
        }
        cov / Complex64::new((self.len() - 1) as f64, 0.0)
    }
}

/// Proximity measure `f(x_0) = |z_0|^2 - z_0^dagger C z_0` with centered
/// data `z_i = x_i - x_c`.
pub fn kpca_score_classical(ds: &ClassicalDataset) -> f64 {
    let c = ds.centroid();
    let z0 = ds.test() - &c;
    let cov = ds.covariance();
    let quad = (z0.adjoint() * &cov * &z0)[(0, 0)];
    z0.norm_squared() - quad.re
}

/// Solution of the full bordered one-class LS-SVM system.
#[derive(Debug, Clone)]
pub struct FullSvmSolution {
    pub r: f64,
    pub alpha: DVector<f64>,
    pub residual: f64,
}

/// Solves the `(M+1)`-dimensional bordered system
/// `[[0, e^T], [e, K + P_T M 1]] (-r, alpha) = (1, 0)`.
pub fn svm_solve_full(kernel: &DMatrix<f64>, p_t: f64) -> Result<FullSvmSolution> {
    let m = kernel.nrows();
    let mut bordered = DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 0..m {
        bordered[(0, i + 1)] = 1.0;
        bordered[(i + 1, 0)] = 1.0;
        for j in 0..m {
            bordered[(i + 1, j + 1)] = kernel[(i, j)];
        }
        bordered[(i + 1, i + 1)] += p_t * m as f64;
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    rhs[0] = 1.0;
    let lu = bordered.clone().lu();
    let sol = lu.solve(&rhs).ok_or_else(|| {
        QadError::degenerate(MODULE, "svm_solve_full", "bordered system is singular")
    })?;
    let residual = (&bordered * &sol - &rhs).norm();
    Ok(FullSvmSolution {
        r: -sol[0],
        alpha: DVector::from_iterator(m, sol.iter().skip(1).copied()),
        residual,
    })
}

/// Restricted solve with the bias fixed at `r = 1`:
/// `(K + P_T M 1) alpha = e`.
pub fn svm_solve_restricted(kernel: &DMatrix<f64>, p_t: f64) -> Result<(DVector<f64>, f64)> {
    let m = kernel.nrows();
    let mut a = kernel.clone();
    for i in 0..m {
        a[(i, i)] += p_t * m as f64;
    }
    let rhs = DVector::from_element(m, 1.0);
    let lu = a.clone().lu();
    let alpha = lu.solve(&rhs).ok_or_else(|| {
        QadError::degenerate(MODULE, "svm_solve_restricted", "system is singular")
    })?;
    let residual = (&a * &alpha - &rhs).norm();
    Ok((alpha, residual))
}

/// Proximity measure `f(x_0) = |w^dagger x_0 - r|` with `w = sum_i alpha_i x_i`.
pub fn svm_score_classical(ds: &ClassicalDataset, alpha: &DVector<f64>, r: f64) -> f64 {
    let d = ds.test().len();
    let mut w = DVector::<Complex64>::zeros(d);
    for (a, x) in alpha.iter().zip(ds.vectors()) {
        w += x * Complex64::new(*a, 0.0);
    }
    let proj = w.dotc(ds.test());
    (proj - Complex64::new(r, 0.0)).norm()
}

/// Everything the pure-state pipelines estimate, recomputed densely.
/// State index 0 is the test state; 1..=M are training states.
#[derive(Debug, Clone)]
pub struct PureOracleReport {
    pub m: usize,
    /// `(M+1) x (M+1)` Gram matrix `G[a][b] = <psi_a|psi_b>`.
    pub overlaps: DMatrix<Complex64>,
    /// Entrywise `|G|^2`.
    pub fidelities: DMatrix<f64>,
    /// `|N_c|^2 = 1 / sum_ij <psi_i|psi_j>`; `None` when the centroid vanishes.
    pub nc_sq: Option<f64>,
    /// Squared norms of the unnormalized centered vectors, index 0 = test.
    pub centered_norm_sq: Vec<f64>,
    /// `|N_kappa|^2 = 1 / ||z_kappa||^2` per state, `None` where the
    /// centered vector vanishes.
    pub n_sq: Vec<Option<f64>>,
    /// `|N_chi_c|^2 = 1 / sum_i ||z_i||^2` over training states.
    pub nchi_sq: Option<f64>,
    /// `tr(C) = 1/(M-1) sum_i ||z_i||^2`.
    pub tr_c: f64,
    /// Centroid-preparation success probability (Eq. A2 value).
    pub p_chi: f64,
    /// Label-register projection probability shared by the centered-state
    /// and chi_c preparations.
    pub p_label: f64,
    /// Final-ancilla probability of the centered-state preparation, per state.
    pub p_centered_final: Vec<f64>,
    /// Final-ancilla probability of the chi_c preparation.
    pub p_chi_c_final: f64,
    /// Kernel-PCA proximity measure; `degenerate_covariance` marks the
    /// all-training-identical case where it is fixed at 1.
    pub f_kpca: f64,
    pub degenerate_covariance: bool,
    /// Training-state overlap kernel `K0` and fidelity kernel `K`.
    pub k0: DMatrix<Complex64>,
    pub kernel: DMatrix<f64>,
    /// Restricted (`r = 1`) SVM coefficients at the given `P_T`.
    pub alpha: DVector<f64>,
    /// One-class SVM proximity measure `|sum_i alpha_i |<psi_i|psi_0>|^2 - 1|`.
    pub f_svm: f64,
}

/// Mixed-state analogue of [`PureOracleReport`].
#[derive(Debug, Clone)]
pub struct MixedOracleReport {
    pub m: usize,
    /// `(M+1) x (M+1)` Kraus pairing matrix `R[a][b] = <rho_a, rho_b>`.
    pub pairings: DMatrix<Complex64>,
    pub ntilde_c_sq: Option<f64>,
    pub centered_norm_sq: Vec<f64>,
    pub ntilde_0_sq: Option<f64>,
    pub f_kpca: f64,
    pub degenerate_covariance: bool,
    /// `(M+1) x (M+1)` superfidelity matrix.
    pub superfidelity: DMatrix<f64>,
    /// Purities `tr(rho_kappa^2)`, index 0 = test.
    pub purities: Vec<f64>,
    pub alpha: DVector<f64>,
    /// `|sum_i alpha_i F(rho_i, rho_0) - 1|^2`.
    pub f_svm: f64,
}

#[derive(Debug, Clone)]
pub enum OracleReport {
    Pure(PureOracleReport),
    Mixed(MixedOracleReport),
}

/// Threshold below which a squared norm counts as vanishing.
pub const DEGENERACY_TOL: f64 = 1e-10;

fn source_amplitudes(src: &StateSource) -> DVector<Complex64> {
    match src {
        StateSource::Pure(u) => DVector::from_iterator(u.dim(), u.mat().column(0).iter().copied()),
        StateSource::Mixed(_) => unreachable!("checked by caller"),
    }
}

/// Recomputes every pipeline quantity for a training set by direct linear
/// algebra. This is the single source of truth the simulation path is
/// validated against.
pub fn dense_quantum_oracle(ts: &TrainingSet, p_t: f64) -> Result<OracleReport> {
    match ts.kind() {
        StateKind::Pure => pure_oracle(ts, p_t).map(OracleReport::Pure),
        StateKind::Mixed => mixed_oracle(ts, p_t).map(OracleReport::Mixed),
    }
}

fn centered_scores(
    gram: &DMatrix<Complex64>,
    m: usize,
) -> (Vec<f64>, Vec<Complex64>, f64) {
    // gram is (M+1)x(M+1) with index 0 = test.
    let s_train: Complex64 = (1..=m).flat_map(|i| (1..=m).map(move |j| (i, j)))
        .map(|(i, j)| gram[(i, j)])
        .sum();
    assert!(
        s_train.im.abs() < 1e-10,
        "training double sum must be real (it is a squared norm)"
    );
    let s = s_train.re;

    // ||z_kappa||^2 = G[k][k] - (2/M) Re sum_j G[k][j] + S/M^2
    let mf = m as f64;
    let norms: Vec<f64> = (0..=m)
        .map(|k| {
            let row: Complex64 = (1..=m).map(|j| gram[(k, j)]).sum();
            (gram[(k, k)].re - 2.0 / mf * row.re + s / (mf * mf)).max(0.0)
        })
        .collect();

    // w_i = <z_i | z_0> = G[i][0] - (1/M) sum_j (G[i][j] + G[j][0]) + S/M^2
    let cross: Vec<Complex64> = (1..=m)
        .map(|i| {
            let row_i: Complex64 = (1..=m).map(|j| gram[(i, j)]).sum();
            let col_0: Complex64 = (1..=m).map(|j| gram[(j, 0)]).sum();
            gram[(i, 0)] - (row_i + col_0) / Complex64::new(mf, 0.0)
                + Complex64::new(s / (mf * mf), 0.0)
        })
        .collect();

    (norms, cross, s)
}

/// `f = 1 - (1/((M-1) ||z_0||^2)) sum_i |<z_i|z_0>|^2`, with the special
/// limits: `z_0 = 0` gives 0, an all-identical training set gives 1.
fn kpca_measure(norms: &[f64], cross: &[Complex64], m: usize) -> (f64, bool) {
    let degenerate_cov = norms[1..].iter().sum::<f64>() < DEGENERACY_TOL;
    if norms[0] < DEGENERACY_TOL {
        return (0.0, degenerate_cov);
    }
    let quad: f64 = cross.iter().map(|w| w.norm_sqr()).sum::<f64>()
        / ((m as f64 - 1.0) * norms[0]);
    (1.0 - quad, degenerate_cov)
}

fn pure_oracle(ts: &TrainingSet, p_t: f64) -> Result<PureOracleReport> {
    let m = ts.len();
    let mf = m as f64;
    let states: Vec<DVector<Complex64>> = std::iter::once(ts.test())
        .chain(ts.sources().iter())
        .map(source_amplitudes)
        .collect();

    let gram = DMatrix::from_fn(m + 1, m + 1, |a, b| states[a].dotc(&states[b]));
    let fidelities = DMatrix::from_fn(m + 1, m + 1, |a, b| gram[(a, b)].norm_sqr());

    let (norms, cross, s) = centered_scores(&gram, m);
    let nc_sq = (s > DEGENERACY_TOL).then(|| 1.0 / s);
    let n_sq: Vec<Option<f64>> = norms
        .iter()
        .map(|&n| (n > DEGENERACY_TOL).then(|| 1.0 / n))
        .collect();
    let sum_norms: f64 = norms[1..].iter().sum();
    let nchi_sq = (sum_norms > DEGENERACY_TOL).then(|| 1.0 / sum_norms);
    let tr_c = sum_norms / (mf - 1.0);

    let p_chi = s / (mf * mf);
    let p_label = 0.5 * (1.0 + p_chi);
    let p_centered_final: Vec<f64> = norms.iter().map(|&n| n / (4.0 * p_label)).collect();
    let p_chi_c_final = (1.0 - p_chi) / (2.0 * (1.0 + p_chi));

    let (f_kpca, degenerate_covariance) = kpca_measure(&norms, &cross, m);

    let k0 = DMatrix::from_fn(m, m, |i, j| gram[(i + 1, j + 1)]);
    let kernel = DMatrix::from_fn(m, m, |i, j| fidelities[(i + 1, j + 1)]);
    let (alpha, _) = svm_solve_restricted(&kernel, p_t)?;
    let f_svm = (alpha
        .iter()
        .enumerate()
        .map(|(i, a)| a * fidelities[(i + 1, 0)])
        .sum::<f64>()
        - 1.0)
        .abs();

    Ok(PureOracleReport {
        m,
        overlaps: gram,
        fidelities,
        nc_sq,
        centered_norm_sq: norms,
        n_sq,
        nchi_sq,
        tr_c,
        p_chi,
        p_label,
        p_centered_final,
        p_chi_c_final,
        f_kpca,
        degenerate_covariance,
        k0,
        kernel,
        alpha,
        f_svm,
    })
}

fn channel_first_columns(src: &StateSource) -> Vec<DVector<Complex64>> {
    match src {
        StateSource::Mixed(ch) => ch
            .operators()
            .iter()
            .map(|op| DVector::from_iterator(op.nrows(), op.column(0).iter().copied()))
            .collect(),
        StateSource::Pure(_) => unreachable!("checked by caller"),
    }
}

fn density_of(src: &StateSource) -> DMatrix<Complex64> {
    let cols = channel_first_columns(src);
    let d = cols[0].len();
    let mut rho = DMatrix::<Complex64>::zeros(d, d);
    for col in &cols {
        for r in 0..d {
            for c in 0..d {
                rho[(r, c)] += col[r] * col[c].conj();
            }
        }
    }
    rho
}

fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let mut acc = Complex64::default();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.re
}

/// Superfidelity `tr(rho_a rho_b) + sqrt(1 - tr rho_a^2) sqrt(1 - tr rho_b^2)`
/// with the square-root arguments clamped to `[0, 1]`.
pub fn superfidelity(rho_a: &DMatrix<Complex64>, rho_b: &DMatrix<Complex64>) -> f64 {
    let overlap = trace_product(rho_a, rho_b);
    let pa = (1.0 - trace_product(rho_a, rho_a)).clamp(0.0, 1.0);
    let pb = (1.0 - trace_product(rho_b, rho_b)).clamp(0.0, 1.0);
    overlap + pa.sqrt() * pb.sqrt()
}

fn mixed_oracle(ts: &TrainingSet, p_t: f64) -> Result<MixedOracleReport> {
    let m = ts.len();
    let columns: Vec<Vec<DVector<Complex64>>> = std::iter::once(ts.test())
        .chain(ts.sources().iter())
        .map(channel_first_columns)
        .collect();

    // <rho_a, rho_b> = sum_l <0| E_l^(a)dagger E_l^(b) |0>
    let pairings = DMatrix::from_fn(m + 1, m + 1, |a, b| {
        columns[a]
            .iter()
            .zip(&columns[b])
            .map(|(ca, cb)| ca.dotc(cb))
            .sum()
    });

    let (norms, cross, s) = centered_scores(&pairings, m);
    let ntilde_c_sq = (s > DEGENERACY_TOL).then(|| 1.0 / s);
    let ntilde_0_sq = (norms[0] > DEGENERACY_TOL).then(|| 1.0 / norms[0]);
    let (f_kpca, degenerate_covariance) = kpca_measure(&norms, &cross, m);

    let densities: Vec<DMatrix<Complex64>> = std::iter::once(ts.test())
        .chain(ts.sources().iter())
        .map(density_of)
        .collect();
    let purities: Vec<f64> = densities.iter().map(|rho| trace_product(rho, rho)).collect();
    let sf = DMatrix::from_fn(m + 1, m + 1, |a, b| superfidelity(&densities[a], &densities[b]));

    let kernel = DMatrix::from_fn(m, m, |i, j| sf[(i + 1, j + 1)]);
    let (alpha, _) = svm_solve_restricted(&kernel, p_t)?;
    let f_svm = (alpha
        .iter()
        .enumerate()
        .map(|(i, a)| a * sf[(i + 1, 0)])
        .sum::<f64>()
        - 1.0)
        .powi(2);

    Ok(MixedOracleReport {
        m,
        pairings,
        ntilde_c_sq,
        centered_norm_sq: norms,
        ntilde_0_sq,
        f_kpca,
        degenerate_covariance,
        superfidelity: sf,
        purities,
        alpha,
        f_svm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{gates, random, KrausChannel, Unitary};
    use crate::registry::{AnomalyRecipe, BaseRecipe, DatasetSpec};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_dataset(m: usize, d: usize, seed: u64) -> ClassicalDataset {
        let mut rng = random::seeded_rng(seed);
        let vectors = (0..m)
            .map(|_| random::haar_state(d, &mut rng).amps().clone())
            .collect();
        let test = random::haar_state(d, &mut rng).amps().clone();
        ClassicalDataset::new(vectors, test).unwrap()
    }

    /// Naive double-loop evaluation of Eq-3-style scoring, kept deliberately
    /// different in structure from the production path.
    fn kpca_naive(ds: &ClassicalDataset) -> f64 {
        let m = ds.len();
        let d = ds.test().len();
        let mut centroid = vec![c(0.0, 0.0); d];
        for v in ds.vectors() {
            for (k, x) in v.iter().enumerate() {
                centroid[k] += x / c(m as f64, 0.0);
            }
        }
        let z0: Vec<Complex64> = ds
            .test()
            .iter()
            .zip(&centroid)
            .map(|(x, c0)| x - c0)
            .collect();
        let norm_sq: f64 = z0.iter().map(|z| z.norm_sqr()).sum();
        let mut quad = 0.0;
        for v in ds.vectors() {
            let zi: Vec<Complex64> = v.iter().zip(&centroid).map(|(x, c0)| x - c0).collect();
            let dot: Complex64 = zi.iter().zip(&z0).map(|(a, b)| a.conj() * b).sum();
            quad += dot.norm_sqr() / (m as f64 - 1.0);
        }
        norm_sq - quad
    }

    #[test]
    fn kpca_classical_centroid_test_point_scores_zero() {
        let ds = random_dataset(4, 3, 1);
        let centroid = ds.centroid();
        let ds0 = ClassicalDataset::new(ds.vectors().to_vec(), centroid).unwrap();
        assert_abs_diff_eq!(kpca_score_classical(&ds0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn kpca_classical_identical_training() {
        let mut rng = random::seeded_rng(2);
        let v = random::haar_state(3, &mut rng).amps().clone();
        let x0 = random::haar_state(3, &mut rng).amps().clone();
        let ds = ClassicalDataset::new(vec![v.clone(), v.clone(), v], x0.clone()).unwrap();
        let c = ds.centroid();
        let z0 = &x0 - &c;
        assert_abs_diff_eq!(kpca_score_classical(&ds), z0.norm_squared(), epsilon = 1e-12);
    }

    #[test]
    fn kpca_classical_matches_naive_double_loop() {
        for seed in 0..5 {
            let ds = random_dataset(5, 3, seed);
            assert_abs_diff_eq!(kpca_score_classical(&ds), kpca_naive(&ds), epsilon = 1e-12);
        }
    }

    #[test]
    fn svm_full_bordered_residual() {
        let kernel = DMatrix::<f64>::identity(2, 2);
        let sol = svm_solve_full(&kernel, 0.1).unwrap();
        assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn svm_restricted_closed_forms() {
        // identical states: K all-ones, alpha_i = 1/(M(1+P_T))
        let m = 5;
        let p_t = 0.1;
        let ones = DMatrix::from_element(m, m, 1.0);
        let (alpha, residual) = svm_solve_restricted(&ones, p_t).unwrap();
        assert!(residual <= 1e-10);
        for a in alpha.iter() {
            assert_abs_diff_eq!(*a, 1.0 / (m as f64 * 1.1), epsilon = 1e-12);
        }
        // orthogonal states: K = 1, alpha_i = 1/(1 + P_T M)
        let id = DMatrix::<f64>::identity(m, m);
        let (alpha, _) = svm_solve_restricted(&id, p_t).unwrap();
        for a in alpha.iter() {
            assert_abs_diff_eq!(*a, 1.0 / (1.0 + p_t * m as f64), epsilon = 1e-12);
        }
    }

    #[test]
    fn svm_two_by_two_closed_form() {
        // M=2, fidelity k: (K + P_T M 1) alpha = e solves to
        // alpha_i = 1 / (1 + k + 2 P_T) by symmetry
        let k = 0.5;
        let p_t = 0.1;
        let kernel = DMatrix::from_row_slice(2, 2, &[1.0, k, k, 1.0]);
        let (alpha, _) = svm_solve_restricted(&kernel, p_t).unwrap();
        for a in alpha.iter() {
            assert_abs_diff_eq!(*a, 1.0 / (1.0 + k + 2.0 * p_t), epsilon = 1e-12);
        }
    }

    #[test]
    fn svm_score_kernel_primal_equivalence() {
        let ds = random_dataset(5, 4, 9);
        let gram = DMatrix::from_fn(5, 5, |i, j| ds.vectors()[i].dotc(&ds.vectors()[j]).re);
        let sol = svm_solve_full(&gram, 0.2).unwrap();
        let f_primal = svm_score_classical(&ds, &sol.alpha, sol.r);
        let kernel_form: f64 = sol
            .alpha
            .iter()
            .zip(ds.vectors())
            .map(|(a, x)| a * x.dotc(ds.test()).re)
            .sum();
        // complex data: the primal projection carries an imaginary part the
        // real kernel form cannot see, so compare on the real-projected value
        let mut w = DVector::<Complex64>::zeros(4);
        for (a, x) in sol.alpha.iter().zip(ds.vectors()) {
            w += x * c(*a, 0.0);
        }
        assert_abs_diff_eq!(w.dotc(ds.test()).re, kernel_form, epsilon = 1e-12);
        // hyperplane point scores zero
        assert_abs_diff_eq!(
            svm_score_classical(&ds, &sol.alpha, w.dotc(ds.test()).re),
            w.dotc(ds.test()).im.abs(),
            epsilon = 1e-12
        );
        let _ = f_primal;
    }

    #[test]
    fn svm_score_zero_alpha() {
        let ds = random_dataset(3, 3, 4);
        let f = svm_score_classical(&ds, &DVector::zeros(3), 1.0);
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn oracle_identical_pure_set_closed_forms() {
        let spec = DatasetSpec {
            m: 4,
            dim: 4,
            kind: "pure".into(),
            base: BaseRecipe::Haar,
            delta: 0.0,
            anomaly: AnomalyRecipe::Rotation { theta: 0.0 },
            seed: 3,
        };
        let ts = crate::registry::synthesize(&spec).unwrap();
        let report = match dense_quantum_oracle(&ts, 0.1).unwrap() {
            OracleReport::Pure(r) => r,
            _ => panic!(),
        };
        assert_abs_diff_eq!(report.f_kpca, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(report.f_svm, 0.1 / 1.1, epsilon = 1e-10);
        assert_abs_diff_eq!(report.p_chi, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(report.nc_sq.unwrap(), 1.0 / 16.0, epsilon = 1e-12);
        assert!(report.n_sq[1].is_none(), "centered norms must be flagged undefined");
    }

    #[test]
    fn oracle_orthogonal_pair_probabilities() {
        let ts = TrainingSet::new(
            vec![
                StateSource::Pure(Unitary::identity(2)),
                StateSource::Pure(gates::pauli_x()),
            ],
            StateSource::Pure(Unitary::identity(2)),
        )
        .unwrap();
        let report = match dense_quantum_oracle(&ts, 0.1).unwrap() {
            OracleReport::Pure(r) => r,
            _ => panic!(),
        };
        assert_abs_diff_eq!(report.p_chi, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(report.nc_sq.unwrap(), 0.5, epsilon = 1e-14);
        // ||z_i||^2 = 1/2 for both training states
        assert_abs_diff_eq!(report.centered_norm_sq[1], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(report.centered_norm_sq[2], 0.5, epsilon = 1e-14);
        // chi_c final-stage probability (1 - 1/2)/(2 (1 + 1/2)) = 1/6
        assert_abs_diff_eq!(report.p_chi_c_final, 1.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn oracle_measure_is_normalized_classical_score() {
        // the quantum measure equals the classical Eq.-3-style score divided
        // by the squared centered-test norm, instance by instance
        for seed in 0..10 {
            let spec = DatasetSpec {
                m: 4,
                dim: 8,
                kind: "pure".into(),
                base: BaseRecipe::Haar,
                delta: 0.3,
                anomaly: AnomalyRecipe::Rotation { theta: 1.0 },
                seed,
            };
            let ts = crate::registry::synthesize(&spec).unwrap();
            let report = match dense_quantum_oracle(&ts, 0.1).unwrap() {
                OracleReport::Pure(r) => r,
                _ => unreachable!(),
            };
            let vectors = ts
                .pure_states()
                .unwrap()
                .iter()
                .map(|s| s.amps().clone())
                .collect();
            let ds = ClassicalDataset::new(vectors, ts.pure_test().unwrap().amps().clone()).unwrap();
            let classical = kpca_score_classical(&ds);
            assert_abs_diff_eq!(
                report.f_kpca,
                classical / report.centered_norm_sq[0],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn oracle_unitary_channels_reduce_to_pure() {
        let mut rng = random::seeded_rng(8);
        let us: Vec<Unitary> = (0..3).map(|_| random::haar_unitary(2, &mut rng)).collect();
        let u0 = random::haar_unitary(2, &mut rng);
        let pure = TrainingSet::new(
            us.iter().map(|u| StateSource::Pure(u.clone())).collect(),
            StateSource::Pure(u0.clone()),
        )
        .unwrap();
        let mixed = TrainingSet::new(
            us.iter()
                .map(|u| StateSource::Mixed(KrausChannel::from_unitary(u)))
                .collect(),
            StateSource::Mixed(KrausChannel::from_unitary(&u0)),
        )
        .unwrap();
        let rp = match dense_quantum_oracle(&pure, 0.1).unwrap() {
            OracleReport::Pure(r) => r,
            _ => panic!(),
        };
        let rm = match dense_quantum_oracle(&mixed, 0.1).unwrap() {
            OracleReport::Mixed(r) => r,
            _ => panic!(),
        };
        assert_abs_diff_eq!(rp.f_kpca, rm.f_kpca, epsilon = 1e-12);
        assert_abs_diff_eq!(rp.f_svm.powi(2), rm.f_svm, epsilon = 1e-12);
        for a in 0..4 {
            for b in 0..4 {
                assert_abs_diff_eq!(
                    rp.overlaps[(a, b)].re,
                    rm.pairings[(a, b)].re,
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(
                    rp.overlaps[(a, b)].im,
                    rm.pairings[(a, b)].im,
                    epsilon = 1e-12
                );
            }
        }
    }
}
