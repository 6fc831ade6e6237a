//! Dense complex linear-algebra and circuit-simulation primitives.
//!
//! Everything downstream (state preparation, swap tests, the detectors)
//! builds on the types and operations here. Representations are dense
//! throughout; states and operators are immutable after construction, and
//! all operations are pure functions, so concurrent reads are safe.
//!
//! Global phase is never compared: states are checked against targets via
//! overlap magnitudes only.

pub mod gates;
pub mod ops;
pub mod random;
pub mod sampling;
pub mod types;

pub use ops::{
    apply_channel, apply_kraus_full, apply_unitary_density, apply_unitary_pure, basis_projector,
    controlled, embed_operator, kron_vec, measure_projector_density, measure_projector_pure,
    partial_trace, partial_trace_pure, projection_probability_density,
    projection_probability_pure, tensor_density, tensor_pure,
    tensor_unitary, Measurement, MEASUREMENT_FLOOR,
};
pub use sampling::{derive_seed, sample_bernoulli, BernoulliSample, PARTITION_SHOTS};
pub use types::{
    completeness_deviation, hermiticity_deviation, min_eigenvalue_hermitian, unitarity_deviation,
    DensityMatrix, KrausChannel, PureState, RegisterLayout, Unitary, TOL_COMPLETENESS, TOL_EIG,
    TOL_EXACT,
};
