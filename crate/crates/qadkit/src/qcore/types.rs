//! Domain types: pure states, density matrices, unitaries, Kraus channels
//! and register layouts.
//!
//! All types validate their defining invariant on construction and are
//! immutable afterwards. Tolerances follow a two-tier scheme: `TOL_EXACT`
//! (1e-12) for identities that hold in exact arithmetic and `TOL_EIG`
//! (1e-10) for eigenvalue-based checks, which accumulate more rounding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QadError, Result};

/// Tolerance for exact-arithmetic identities (norms, traces, unitarity).
pub const TOL_EXACT: f64 = 1e-12;
/// Tolerance for eigenvalue and positive-semidefiniteness checks.
pub const TOL_EIG: f64 = 1e-10;

const MODULE: &str = "qcore";

/// A unit-norm complex amplitude vector of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: DVector<Complex64>,
}

impl PureState {
    /// Validates unit norm (within [`TOL_EXACT`]) and a positive dimension.
    pub fn new(amps: DVector<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(QadError::precondition(MODULE, "PureState", "dim must be >= 1"));
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > TOL_EXACT {
            return Err(QadError::invariant(
                MODULE,
                "PureState",
                format!("norm^2 = {norm_sq}, expected 1 within {TOL_EXACT}"),
            ));
        }
        Ok(Self { amps })
    }

    /// Normalizes `amps` and wraps it; errors on a (near-)zero vector.
    pub fn normalized(amps: DVector<Complex64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Err(QadError::degenerate(
                MODULE,
                "PureState",
                "cannot normalize a zero vector",
            ));
        }
        Self::new(amps.map(|a| a / norm))
    }

    /// The computational basis state `|index>` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = DVector::zeros(dim);
        amps[index] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &DVector<Complex64> {
        &self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    /// `|self><self|` as a density matrix.
    pub fn to_density(&self) -> DensityMatrix {
        let mat = &self.amps * self.amps.adjoint();
        DensityMatrix { mat }
    }

    /// |<self|other>|^2 — the pure-state fidelity.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// A `d x d` Hermitian, positive-semidefinite, unit-trace complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates hermiticity and unit trace within [`TOL_EXACT`] and a
    /// minimum eigenvalue of at least `-TOL_EIG`.
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() == 0 || mat.nrows() != mat.ncols() {
            return Err(QadError::dimension(
                MODULE,
                "DensityMatrix",
                format!("expected a square nonempty matrix, got {}x{}", mat.nrows(), mat.ncols()),
            ));
        }
        let herm_dev = hermiticity_deviation(&mat);
        if herm_dev > TOL_EXACT {
            return Err(QadError::invariant(
                MODULE,
                "DensityMatrix",
                format!("hermiticity deviation {herm_dev:.3e} exceeds {TOL_EXACT}"),
            ));
        }
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > TOL_EXACT || trace.im.abs() > TOL_EXACT {
            return Err(QadError::invariant(
                MODULE,
                "DensityMatrix",
                format!("trace = {trace}, expected 1 within {TOL_EXACT}"),
            ));
        }
        let min_eig = min_eigenvalue_hermitian(&mat);
        if min_eig < -TOL_EIG {
            return Err(QadError::invariant(
                MODULE,
                "DensityMatrix",
                format!("minimum eigenvalue {min_eig:.3e} below -{TOL_EIG}"),
            ));
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix that is valid by construction (used internally after
    /// trace-preserving maps). Debug builds still verify.
    pub(crate) fn trusted(mat: DMatrix<Complex64>) -> Self {
        debug_assert!(hermiticity_deviation(&mat) <= 1e-9, "trusted density matrix not Hermitian");
        debug_assert!((mat.trace().re - 1.0).abs() <= 1e-9, "trusted density matrix trace != 1");
        Self { mat }
    }

    /// The maximally mixed state `1/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mat = DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0));
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    /// `tr(self * other)` — real for Hermitian operands.
    pub fn overlap(&self, other: &DensityMatrix) -> f64 {
        hs_inner(&self.mat, &other.mat)
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        hs_inner(&self.mat, &self.mat)
    }
}

/// `tr(a b)` for Hermitian `a`, `b` (returns the real part, which is exact
/// up to rounding).
pub(crate) fn hs_inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let mut acc = Complex64::default();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.re
}

/// A square matrix with `U^dagger U = 1` within [`TOL_EXACT`].
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    mat: DMatrix<Complex64>,
}

impl Unitary {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() == 0 || mat.nrows() != mat.ncols() {
            return Err(QadError::dimension(
                MODULE,
                "Unitary",
                format!("expected a square nonempty matrix, got {}x{}", mat.nrows(), mat.ncols()),
            ));
        }
        let dev = unitarity_deviation(&mat);
        if dev > TOL_EXACT {
            return Err(QadError::invariant(
                MODULE,
                "Unitary",
                format!("U^dagger U deviates from identity by {dev:.3e} (tolerance {TOL_EXACT})"),
            ));
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary {
            mat: self.mat.adjoint(),
        }
    }

    /// `U |0>` — the state this unitary prepares from the reference ket.
    pub fn first_column(&self) -> PureState {
        PureState::new(DVector::from_iterator(
            self.dim(),
            self.mat.column(0).iter().copied(),
        ))
        .expect("columns of a unitary are unit vectors")
    }
}

/// An ordered list of Kraus operators `E_l` with `sum_l E_l^dagger E_l = 1`
/// within 1e-10.
///
/// Zero operators are allowed as padding so that channels in one training
/// set can share a common operator count; they contribute nothing to the
/// completeness sum or to the channel action.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<DMatrix<Complex64>>,
}

/// Completeness tolerance for Kraus channels.
pub const TOL_COMPLETENESS: f64 = 1e-10;

impl KrausChannel {
    pub fn new(operators: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if operators.is_empty() {
            return Err(QadError::precondition(
                MODULE,
                "KrausChannel",
                "at least one Kraus operator required",
            ));
        }
        let dim = operators[0].nrows();
        for (l, op) in operators.iter().enumerate() {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(QadError::dimension(
                    MODULE,
                    "KrausChannel",
                    format!("operator {l} is {}x{}, expected {dim}x{dim}", op.nrows(), op.ncols()),
                ));
            }
        }
        let dev = completeness_deviation(&operators);
        if dev > TOL_COMPLETENESS {
            return Err(QadError::invariant(
                MODULE,
                "KrausChannel",
                format!("completeness deviation {dev:.3e} exceeds {TOL_COMPLETENESS}"),
            ));
        }
        Ok(Self { operators })
    }

    /// A channel consisting of the single operator `U`.
    pub fn from_unitary(u: &Unitary) -> Self {
        Self {
            operators: vec![u.mat().clone()],
        }
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn operators(&self) -> &[DMatrix<Complex64>] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Returns a copy extended with zero operators up to `n` entries.
    pub fn padded_to(&self, n: usize) -> Result<Self> {
        if n < self.operators.len() {
            return Err(QadError::precondition(
                MODULE,
                "padded_to",
                format!("cannot pad {} operators down to {n}", self.operators.len()),
            ));
        }
        let dim = self.dim();
        let mut operators = self.operators.clone();
        operators.resize(n, DMatrix::zeros(dim, dim));
        Ok(Self { operators })
    }

    /// `sum_l E_l |0><0| E_l^dagger` — the state this channel prepares.
    pub fn realize(&self) -> DensityMatrix {
        let dim = self.dim();
        let mut mat = DMatrix::<Complex64>::zeros(dim, dim);
        for op in &self.operators {
            let col = op.column(0);
            for i in 0..dim {
                for j in 0..dim {
                    mat[(i, j)] += col[i] * col[j].conj();
                }
            }
        }
        DensityMatrix::trusted(mat)
    }
}

/// Ordered subsystem dimensions; the first entry is the most significant
/// index (matching the Kronecker-product convention of [`super::ops::tensor`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    dims: Vec<usize>,
}

impl RegisterLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(QadError::precondition(
                MODULE,
                "RegisterLayout",
                "subsystem dimensions must be nonempty and positive",
            ));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Strides of each subsystem in the flat index (most significant first).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Flat index of the multi-index `idx`.
    pub fn flatten(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let strides = self.strides();
        idx.iter().zip(&strides).map(|(&i, &s)| i * s).sum()
    }

    /// Multi-index of the flat index `flat`.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let strides = self.strides();
        strides
            .iter()
            .map(|&s| {
                let q = flat / s;
                flat %= s;
                q
            })
            .collect()
    }
}

/// `max_ij |M_ij - conj(M_ji)|`.
pub fn hermiticity_deviation(mat: &DMatrix<Complex64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..mat.nrows() {
        for j in 0..mat.ncols() {
            dev = dev.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `max_ij |(U^dagger U - 1)_ij|`.
pub fn unitarity_deviation(mat: &DMatrix<Complex64>) -> f64 {
    let gram = mat.adjoint() * mat;
    let id = DMatrix::<Complex64>::identity(mat.nrows(), mat.ncols());
    (gram - id).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `max_ij |(sum_l E_l^dagger E_l - 1)_ij|`.
pub fn completeness_deviation(operators: &[DMatrix<Complex64>]) -> f64 {
    let dim = operators[0].nrows();
    let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
    for op in operators {
        sum += op.adjoint() * op;
    }
    let id = DMatrix::<Complex64>::identity(dim, dim);
    (sum - id).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue_hermitian(mat: &DMatrix<Complex64>) -> f64 {
    nalgebra::SymmetricEigen::new(mat.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pure_state_rejects_unnormalized() {
        let v = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(PureState::new(v.clone()).is_err());
        assert!(PureState::normalized(v).is_ok());
    }

    #[test]
    fn density_matrix_rejects_negative_eigenvalue() {
        let mat = DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        let err = DensityMatrix::new(mat).unwrap_err();
        assert_eq!(err.kind(), "invariant");
    }

    #[test]
    fn kraus_channel_requires_completeness() {
        let half = DMatrix::from_diagonal_element(2, 2, c(0.5, 0.0));
        assert!(KrausChannel::new(vec![half]).is_err());
        let id = DMatrix::identity(2, 2);
        assert!(KrausChannel::new(vec![id]).is_ok());
    }

    #[test]
    fn padding_preserves_realization() {
        let u = Unitary::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.6, 0.0), c(0.8, 0.0), c(0.8, 0.0), c(-0.6, 0.0)],
        ))
        .unwrap();
        let ch = KrausChannel::from_unitary(&u);
        let padded = ch.padded_to(3).unwrap();
        assert_eq!(padded.len(), 3);
        let a = ch.realize();
        let b = padded.realize();
        assert!((a.mat() - b.mat()).iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    #[allow(clippy::identity_op)]
    fn layout_index_arithmetic_is_bijective() {
        let layout = RegisterLayout::new(vec![2, 3, 4]).unwrap();
        for flat in 0..layout.total_dim() {
            let idx = layout.unflatten(flat);
            assert_eq!(layout.flatten(&idx), flat);
        }
        assert_eq!(layout.flatten(&[1, 2, 3]), 1 * 12 + 2 * 4 + 3);
    }

    #[test]
    fn maximally_mixed_purity() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert_abs_diff_eq!(rho.purity(), 0.25, epsilon = 1e-14);
    }
}
