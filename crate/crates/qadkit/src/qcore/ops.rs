//! Circuit-simulation primitives: Kronecker products, embeddings, partial
//! traces, controlled unitaries, channel application and projective
//! measurements.
//!
//! Unitaries act on arbitrary (ordered) subsets of a register layout. Pure
//! states use a gather/scatter kernel so no full-space operator is ever
//! materialized; density matrices go through an explicit embedding, which is
//! fine at the dimensions this crate targets.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QadError, Result};
use crate::qcore::types::{
    hermiticity_deviation, DensityMatrix, KrausChannel, PureState, RegisterLayout, Unitary,
    TOL_EXACT,
};

const MODULE: &str = "qcore";

/// Kronecker product of two vectors, `a`'s indices most significant.
pub fn kron_vec(a: &DVector<Complex64>, b: &DVector<Complex64>) -> DVector<Complex64> {
    let mut out = DVector::zeros(a.len() * b.len());
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Tensor product of pure states.
pub fn tensor_pure(a: &PureState, b: &PureState) -> PureState {
    PureState::new(kron_vec(a.amps(), b.amps())).expect("product of unit vectors is unit")
}

/// Tensor product of unitaries.
pub fn tensor_unitary(a: &Unitary, b: &Unitary) -> Unitary {
    Unitary::new(a.mat().kronecker(b.mat())).expect("product of unitaries is unitary")
}

/// Tensor product of density matrices.
pub fn tensor_density(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::trusted(a.mat().kronecker(b.mat()))
}

fn check_targets(layout: &RegisterLayout, targets: &[usize], op_dim: usize, op: &'static str) -> Result<()> {
    let mut seen = vec![false; layout.num_subsystems()];
    for &t in targets {
        if t >= layout.num_subsystems() {
            return Err(QadError::dimension(
                MODULE,
                op,
                format!("target {t} out of range for {} subsystems", layout.num_subsystems()),
            ));
        }
        if seen[t] {
            return Err(QadError::dimension(MODULE, op, format!("duplicate target {t}")));
        }
        seen[t] = true;
    }
    let t_dim: usize = targets.iter().map(|&t| layout.dims()[t]).product();
    if t_dim != op_dim {
        return Err(QadError::dimension(
            MODULE,
            op,
            format!("operator dim {op_dim} does not match target dims (product {t_dim})"),
        ));
    }
    Ok(())
}

/// Flat indices of the full space touched by one configuration of the
/// non-target subsystems, enumerated over all target configurations in
/// operator order.
struct TargetIndexer {
    /// stride of each target subsystem in the flat index, operator order
    target_strides: Vec<usize>,
    target_dims: Vec<usize>,
    /// flat contributions of the non-target subsystems
    rest_offsets: Vec<usize>,
}

impl TargetIndexer {
    fn new(layout: &RegisterLayout, targets: &[usize]) -> Self {
        let strides = layout.strides();
        let target_strides: Vec<usize> = targets.iter().map(|&t| strides[t]).collect();
        let target_dims: Vec<usize> = targets.iter().map(|&t| layout.dims()[t]).collect();
        let rest: Vec<usize> = (0..layout.num_subsystems())
            .filter(|s| !targets.contains(s))
            .collect();

        let mut rest_offsets = vec![0usize];
        for &s in rest.iter().rev() {
            let mut next = Vec::with_capacity(rest_offsets.len() * layout.dims()[s]);
            for v in 0..layout.dims()[s] {
                for &base in &rest_offsets {
                    next.push(base + v * strides[s]);
                }
            }
            rest_offsets = next;
        }
        Self {
            target_strides,
            target_dims,
            rest_offsets,
        }
    }

    fn target_space(&self) -> usize {
        self.target_dims.iter().product()
    }

    /// Flat offset of target configuration `a` (operator-order flat index).
    fn target_offset(&self, mut a: usize) -> usize {
        let mut offset = 0;
        for k in (0..self.target_dims.len()).rev() {
            let v = a % self.target_dims[k];
            a /= self.target_dims[k];
            offset += v * self.target_strides[k];
        }
        offset
    }
}

/// Applies `u` to the given subsystems of a pure state.
///
/// `targets` is ordered: the operator's own registers map onto the listed
/// subsystems in order, so permuted applications are expressed directly.
pub fn apply_unitary_pure(
    state: &PureState,
    layout: &RegisterLayout,
    u: &Unitary,
    targets: &[usize],
) -> Result<PureState> {
    if state.dim() != layout.total_dim() {
        return Err(QadError::dimension(
            MODULE,
            "apply_unitary",
            format!("state dim {} != layout dim {}", state.dim(), layout.total_dim()),
        ));
    }
    check_targets(layout, targets, u.dim(), "apply_unitary")?;
    let indexer = TargetIndexer::new(layout, targets);
    let t = indexer.target_space();
    let offsets: Vec<usize> = (0..t).map(|a| indexer.target_offset(a)).collect();

    let mut out = state.amps().clone();
    let mut buf = DVector::<Complex64>::zeros(t);
    for &base in &indexer.rest_offsets {
        for a in 0..t {
            buf[a] = state.amps()[base + offsets[a]];
        }
        let transformed = u.mat() * &buf;
        for a in 0..t {
            out[base + offsets[a]] = transformed[a];
        }
    }
    PureState::new(out)
}

/// Dense embedding of `op` acting on `targets` within `layout`.
pub fn embed_operator(
    op: &DMatrix<Complex64>,
    layout: &RegisterLayout,
    targets: &[usize],
) -> Result<DMatrix<Complex64>> {
    check_targets(layout, targets, op.nrows(), "embed_operator")?;
    let indexer = TargetIndexer::new(layout, targets);
    let t = indexer.target_space();
    let offsets: Vec<usize> = (0..t).map(|a| indexer.target_offset(a)).collect();
    let full = layout.total_dim();
    let mut out = DMatrix::<Complex64>::zeros(full, full);
    for &base in &indexer.rest_offsets {
        for a in 0..t {
            for b in 0..t {
                out[(base + offsets[a], base + offsets[b])] = op[(a, b)];
            }
        }
    }
    Ok(out)
}

/// Applies `u` to the given subsystems of a density matrix.
///
/// Computed as `(U (U rho)^dagger)^dagger` with gather/scatter kernels, so
/// the cost scales with the target dimension rather than the cube of the
/// full dimension.
pub fn apply_unitary_density(
    state: &DensityMatrix,
    layout: &RegisterLayout,
    u: &Unitary,
    targets: &[usize],
) -> Result<DensityMatrix> {
    if state.dim() != layout.total_dim() {
        return Err(QadError::dimension(
            MODULE,
            "apply_unitary",
            format!("state dim {} != layout dim {}", state.dim(), layout.total_dim()),
        ));
    }
    check_targets(layout, targets, u.dim(), "apply_unitary")?;
    let half = apply_operator_columns(state.mat(), layout, u.mat(), targets)?.adjoint();
    let full = apply_operator_columns(&half, layout, u.mat(), targets)?.adjoint();
    Ok(DensityMatrix::trusted(full))
}

/// Applies `op` to every column of `mat` on the given subsystems.
fn apply_operator_columns(
    mat: &DMatrix<Complex64>,
    layout: &RegisterLayout,
    op: &DMatrix<Complex64>,
    targets: &[usize],
) -> Result<DMatrix<Complex64>> {
    let indexer = TargetIndexer::new(layout, targets);
    let t = indexer.target_space();
    let offsets: Vec<usize> = (0..t).map(|a| indexer.target_offset(a)).collect();
    let mut out = mat.clone();
    let mut buf = DVector::<Complex64>::zeros(t);
    for col in 0..mat.ncols() {
        for &base in &indexer.rest_offsets {
            for a in 0..t {
                buf[a] = mat[(base + offsets[a], col)];
            }
            let transformed = op * &buf;
            for a in 0..t {
                out[(base + offsets[a], col)] = transformed[a];
            }
        }
    }
    Ok(out)
}

/// Reduced density matrix on the `keep` subsystems (in the order listed).
pub fn partial_trace(
    state: &DensityMatrix,
    layout: &RegisterLayout,
    keep: &[usize],
) -> Result<DensityMatrix> {
    if state.dim() != layout.total_dim() {
        return Err(QadError::dimension(
            MODULE,
            "partial_trace",
            format!("state dim {} != layout dim {}", state.dim(), layout.total_dim()),
        ));
    }
    let keep_dim: usize = keep.iter().map(|&k| layout.dims()[k]).product();
    check_targets(layout, keep, keep_dim, "partial_trace")?;

    let indexer = TargetIndexer::new(layout, keep);
    let t = indexer.target_space();
    let offsets: Vec<usize> = (0..t).map(|a| indexer.target_offset(a)).collect();
    let mut out = DMatrix::<Complex64>::zeros(t, t);
    for &base in &indexer.rest_offsets {
        for a in 0..t {
            for b in 0..t {
                out[(a, b)] += state.mat()[(base + offsets[a], base + offsets[b])];
            }
        }
    }
    Ok(DensityMatrix::trusted(out))
}

/// Partial trace of `|psi><psi|` without forming the full projector.
pub fn partial_trace_pure(
    state: &PureState,
    layout: &RegisterLayout,
    keep: &[usize],
) -> Result<DensityMatrix> {
    if state.dim() != layout.total_dim() {
        return Err(QadError::dimension(
            MODULE,
            "partial_trace",
            format!("state dim {} != layout dim {}", state.dim(), layout.total_dim()),
        ));
    }
    let keep_dim: usize = keep.iter().map(|&k| layout.dims()[k]).product();
    check_targets(layout, keep, keep_dim, "partial_trace")?;
    let indexer = TargetIndexer::new(layout, keep);
    let t = indexer.target_space();
    let offsets: Vec<usize> = (0..t).map(|a| indexer.target_offset(a)).collect();
    let mut out = DMatrix::<Complex64>::zeros(t, t);
    for &base in &indexer.rest_offsets {
        for a in 0..t {
            let va = state.amps()[base + offsets[a]];
            if va.norm_sqr() == 0.0 {
                continue;
            }
            for b in 0..t {
                out[(a, b)] += va * state.amps()[base + offsets[b]].conj();
            }
        }
    }
    Ok(DensityMatrix::trusted(out))
}

/// Block-diagonal control unitary `sum_i |i><i| (x) u_i`.
///
/// The control register (dimension = list length) is most significant.
pub fn controlled(unitaries: &[Unitary]) -> Result<Unitary> {
    if unitaries.is_empty() {
        return Err(QadError::precondition(MODULE, "controlled", "empty unitary list"));
    }
    let d = unitaries[0].dim();
    if unitaries.iter().any(|u| u.dim() != d) {
        return Err(QadError::dimension(
            MODULE,
            "controlled",
            "all controlled unitaries must share one dimension",
        ));
    }
    let m = unitaries.len();
    let mut mat = DMatrix::<Complex64>::zeros(m * d, m * d);
    for (i, u) in unitaries.iter().enumerate() {
        for r in 0..d {
            for c in 0..d {
                mat[(i * d + r, i * d + c)] = u.mat()[(r, c)];
            }
        }
    }
    Unitary::new(mat)
}

/// Applies a Kraus channel to the given subsystems of a density matrix.
pub fn apply_channel(
    state: &DensityMatrix,
    layout: &RegisterLayout,
    channel: &KrausChannel,
    targets: &[usize],
) -> Result<DensityMatrix> {
    if state.dim() != layout.total_dim() {
        return Err(QadError::dimension(
            MODULE,
            "apply_channel",
            format!("state dim {} != layout dim {}", state.dim(), layout.total_dim()),
        ));
    }
    let mut out = DMatrix::<Complex64>::zeros(state.dim(), state.dim());
    for op in channel.operators() {
        let full = embed_operator(op, layout, targets)?;
        out += &full * state.mat() * full.adjoint();
    }
    DensityMatrix::new(out).map_err(|e| {
        QadError::invariant(MODULE, "apply_channel", format!("channel output invalid: {e}"))
    })
}

/// Raw Kraus application `sum_l K_l rho K_l^dagger` for operators given on
/// the full space; used for interferometric operator sets that are complete
/// jointly but not individually.
pub fn apply_kraus_full(
    state: &DensityMatrix,
    operators: &[DMatrix<Complex64>],
) -> Result<DensityMatrix> {
    let dim = state.dim();
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for op in operators {
        if op.nrows() != dim || op.ncols() != dim {
            return Err(QadError::dimension(
                MODULE,
                "apply_kraus_full",
                format!("operator is {}x{}, state dim {dim}", op.nrows(), op.ncols()),
            ));
        }
        out += op * state.mat() * op.adjoint();
    }
    Ok(DensityMatrix::trusted(out))
}

/// Outcome of a projective measurement: the outcome probability and the
/// renormalized post-measurement state.
#[derive(Debug, Clone)]
pub struct Measurement<S> {
    pub probability: f64,
    pub post: S,
}

/// Probability below which the post-measurement state is undefined.
pub const MEASUREMENT_FLOOR: f64 = 1e-14;

fn check_projector(proj: &DMatrix<Complex64>) -> Result<()> {
    if hermiticity_deviation(proj) > TOL_EXACT {
        return Err(QadError::precondition(
            MODULE,
            "measure_projector",
            "projector must be Hermitian within 1e-12",
        ));
    }
    let idem_dev = (proj * proj - proj).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if idem_dev > TOL_EXACT {
        return Err(QadError::precondition(
            MODULE,
            "measure_projector",
            format!("projector not idempotent (deviation {idem_dev:.3e})"),
        ));
    }
    Ok(())
}

/// `<psi|P|psi>` for a projector acting on the given subsystems.
pub fn projection_probability_pure(
    state: &PureState,
    layout: &RegisterLayout,
    proj: &DMatrix<Complex64>,
    targets: &[usize],
) -> Result<f64> {
    check_projector(proj)?;
    let projected = apply_operator_pure_raw(state.amps(), layout, proj, targets)?;
    Ok(projected.iter().map(|a| a.norm_sqr()).sum())
}

/// Projective measurement on a pure state; errors with "measurement
/// impossible" when the outcome probability is below [`MEASUREMENT_FLOOR`].
pub fn measure_projector_pure(
    state: &PureState,
    layout: &RegisterLayout,
    proj: &DMatrix<Complex64>,
    targets: &[usize],
) -> Result<Measurement<PureState>> {
    check_projector(proj)?;
    let projected = apply_operator_pure_raw(state.amps(), layout, proj, targets)?;
    let probability: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
    if probability < MEASUREMENT_FLOOR {
        return Err(QadError::degenerate(
            MODULE,
            "measure_projector",
            format!("measurement impossible: outcome probability {probability:.3e}"),
        ));
    }
    let post = PureState::new(projected.map(|a| a / probability.sqrt()))?;
    Ok(Measurement { probability, post })
}

/// `tr(P rho)` for a projector acting on the given subsystems.
pub fn projection_probability_density(
    state: &DensityMatrix,
    layout: &RegisterLayout,
    proj: &DMatrix<Complex64>,
    targets: &[usize],
) -> Result<f64> {
    check_projector(proj)?;
    let full = embed_operator(proj, layout, targets)?;
    let mut acc = Complex64::default();
    for i in 0..full.nrows() {
        for j in 0..full.ncols() {
            acc += full[(i, j)] * state.mat()[(j, i)];
        }
    }
    Ok(acc.re)
}

/// Projective measurement on a density matrix.
pub fn measure_projector_density(
    state: &DensityMatrix,
    layout: &RegisterLayout,
    proj: &DMatrix<Complex64>,
    targets: &[usize],
) -> Result<Measurement<DensityMatrix>> {
    check_projector(proj)?;
    let full = embed_operator(proj, layout, targets)?;
    let projected = &full * state.mat() * &full;
    let probability = projected.trace().re;
    if probability < MEASUREMENT_FLOOR {
        return Err(QadError::degenerate(
            MODULE,
            "measure_projector",
            format!("measurement impossible: outcome probability {probability:.3e}"),
        ));
    }
    let post = DensityMatrix::trusted(projected / Complex64::new(probability, 0.0));
    Ok(Measurement { probability, post })
}

/// Applies an arbitrary (not necessarily unitary) operator to subsystems of
/// an amplitude vector.
fn apply_operator_pure_raw(
    amps: &DVector<Complex64>,
    layout: &RegisterLayout,
    op: &DMatrix<Complex64>,
    targets: &[usize],
) -> Result<DVector<Complex64>> {
    if amps.len() != layout.total_dim() {
        return Err(QadError::dimension(
            MODULE,
            "apply_operator",
            format!("state dim {} != layout dim {}", amps.len(), layout.total_dim()),
        ));
    }
    check_targets(layout, targets, op.nrows(), "apply_operator")?;
    let indexer = TargetIndexer::new(layout, targets);
    let t = indexer.target_space();
    let offsets: Vec<usize> = (0..t).map(|a| indexer.target_offset(a)).collect();
    let mut out = amps.clone();
    let mut buf = DVector::<Complex64>::zeros(t);
    for &base in &indexer.rest_offsets {
        for a in 0..t {
            buf[a] = amps[base + offsets[a]];
        }
        let transformed = op * &buf;
        for a in 0..t {
            out[base + offsets[a]] = transformed[a];
        }
    }
    Ok(out)
}

/// Projector `|index><index|` on a single subsystem of dimension `dim`.
pub fn basis_projector(dim: usize, index: usize) -> DMatrix<Complex64> {
    let mut p = DMatrix::<Complex64>::zeros(dim, dim);
    p[(index, index)] = Complex64::new(1.0, 0.0);
    p
}
