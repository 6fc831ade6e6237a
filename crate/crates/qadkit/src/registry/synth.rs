//! Seeded dataset synthesis: clustered training states around a base state
//! plus an anomalous test state.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QadError, Result};
use crate::qcore::sampling::derive_seed;
use crate::qcore::{gates, random, KrausChannel, PureState};
use crate::registry::{StateKind, StateSource, TrainingSet};

const MODULE: &str = "registry";

/// How the cluster's base state is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "kebab-case")]
pub enum BaseRecipe {
    /// Computational basis state `|index>`.
    Basis { index: usize },
    /// Haar-random state drawn from the spec seed.
    Haar,
    /// Explicit amplitudes, given as `[re, im]` pairs; must be unit norm.
    Amplitudes { amps: Vec<[f64; 2]> },
}

/// How the anomalous test state deviates from the base state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "kebab-case")]
pub enum AnomalyRecipe {
    /// Planar rotation by `theta` from the base state towards a fixed
    /// orthogonal direction.
    Rotation { theta: f64 },
    /// A state orthogonal to the base state.
    Orthogonal,
    /// The base state mixed with the maximally mixed state at strength `p`
    /// (mixed-kind sets only).
    Depolarize { p: f64 },
}

/// Deterministic recipe for a synthesized dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Number of training states, `M >= 2`.
    pub m: usize,
    /// Hilbert-space dimension.
    pub dim: usize,
    /// Pure (unitary) or mixed (Kraus) sources.
    pub kind: String,
    pub base: BaseRecipe,
    /// Cluster spread; pairwise training fidelities stay `>= 1 - O(delta^2)`.
    pub delta: f64,
    pub anomaly: AnomalyRecipe,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn state_kind(&self) -> Result<StateKind> {
        match self.kind.as_str() {
            "pure" => Ok(StateKind::Pure),
            "mixed" => Ok(StateKind::Mixed),
            other => Err(QadError::precondition(
                MODULE,
                "synthesize",
                format!("kind must be \"pure\" or \"mixed\", got {other:?}"),
            )),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(QadError::precondition(MODULE, "synthesize", "m must be >= 2"));
        }
        if self.dim < 1 {
            return Err(QadError::precondition(MODULE, "synthesize", "dim must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(QadError::precondition(
                MODULE,
                "synthesize",
                format!("delta = {} outside [0, 1]", self.delta),
            ));
        }
        if let AnomalyRecipe::Depolarize { p } = self.anomaly {
            if !(0.0..=1.0).contains(&p) {
                return Err(QadError::precondition(
                    MODULE,
                    "synthesize",
                    format!("depolarize p = {p} outside [0, 1]"),
                ));
            }
        }
        Ok(())
    }
}

fn base_state(spec: &DatasetSpec, rng: &mut impl Rng) -> Result<PureState> {
    match &spec.base {
        BaseRecipe::Basis { index } => {
            if *index >= spec.dim {
                return Err(QadError::precondition(
                    MODULE,
                    "synthesize",
                    format!("basis index {index} out of range for dim {}", spec.dim),
                ));
            }
            Ok(PureState::basis(spec.dim, *index))
        }
        BaseRecipe::Haar => Ok(random::haar_state(spec.dim, rng)),
        BaseRecipe::Amplitudes { amps } => {
            if amps.len() != spec.dim {
                return Err(QadError::dimension(
                    MODULE,
                    "synthesize",
                    format!("{} amplitudes for dim {}", amps.len(), spec.dim),
                ));
            }
            let v = DVector::from_iterator(
                spec.dim,
                amps.iter().map(|[re, im]| Complex64::new(*re, *im)),
            );
            PureState::new(v)
                .map_err(|e| QadError::precondition(MODULE, "synthesize", e.to_string()))
        }
    }
}

/// Number of cluster-spread directions: a few, so the training covariance
/// is genuinely low rank and fresh cluster members fall inside its span —
/// the regime the detectors assume. Direction 1 of the base completion is
/// reserved for the anomaly recipes, so the cluster never spreads towards
/// the anomaly.
fn spread_rank(dim: usize) -> usize {
    dim.saturating_sub(2).min(3)
}

fn perturbed(base: &PureState, delta: f64, rng: &mut impl Rng) -> PureState {
    if delta == 0.0 {
        return base.clone();
    }
    let dim = base.dim();
    let k = spread_rank(dim);
    let noise = if k == 0 {
        // too small for a reserved anomaly direction; spread isotropically
        random::haar_state(dim, rng).amps().clone()
    } else {
        let completion = gates::complete_to_unitary(base);
        let coeffs = random::haar_state(k, rng);
        let mut v = DVector::<Complex64>::zeros(dim);
        for (j, c) in coeffs.amps().iter().enumerate() {
            v += completion.mat().column(2 + j) * *c;
        }
        v
    };
    let v = base.amps() + noise * Complex64::new(delta, 0.0);
    PureState::normalized(v).expect("perturbation of a unit vector cannot vanish for delta <= 1")
}

/// A fixed direction orthogonal to `base` (the second completion column),
/// kept out of the cluster-spread subspace.
fn orthogonal_direction(base: &PureState) -> Result<PureState> {
    if base.dim() < 2 {
        return Err(QadError::precondition(
            MODULE,
            "synthesize",
            "orthogonal anomaly is infeasible for dim 1",
        ));
    }
    let u = gates::complete_to_unitary(base);
    let col = u.mat().column(1);
    Ok(PureState::new(DVector::from_iterator(base.dim(), col.iter().copied()))
        .expect("completion columns are unit vectors"))
}

fn anomaly_state(spec: &DatasetSpec, base: &PureState) -> Result<PureState> {
    match &spec.anomaly {
        AnomalyRecipe::Rotation { theta } => {
            let perp = orthogonal_direction(base)?;
            let v = base.amps() * Complex64::new(theta.cos(), 0.0)
                + perp.amps() * Complex64::new(theta.sin(), 0.0);
            PureState::new(v).map_err(|e| QadError::precondition(MODULE, "synthesize", e.to_string()))
        }
        AnomalyRecipe::Orthogonal => orthogonal_direction(base),
        AnomalyRecipe::Depolarize { .. } => Err(QadError::precondition(
            MODULE,
            "synthesize",
            "depolarization anomaly requires a mixed-kind dataset",
        )),
    }
}

fn pure_source(state: &PureState) -> StateSource {
    StateSource::Pure(gates::complete_to_unitary(state))
}

/// Mixing strength applied to every synthesized mixed source; tied to the
/// cluster spread so pairwise similarity stays `1 - O(delta^2)`.
fn cluster_mix(delta: f64) -> f64 {
    delta * delta
}

fn mixed_source(state: &PureState, p: f64) -> StateSource {
    let u = gates::complete_to_unitary(state);
    if p == 0.0 {
        StateSource::Mixed(KrausChannel::from_unitary(&u))
    } else {
        let ops = gates::depolarized_unitary_kraus(&u, p);
        StateSource::Mixed(KrausChannel::new(ops).expect("depolarized unitary channel is complete"))
    }
}

/// Synthesizes a training set from a deterministic spec.
///
/// Training states cluster around the base state with spread `delta`; the
/// test state follows the anomaly recipe. Equal specs produce byte-identical
/// sets.
pub fn synthesize(spec: &DatasetSpec) -> Result<TrainingSet> {
    spec.validate()?;
    let kind = spec.state_kind()?;
    let mut rng = random::seeded_rng(spec.seed);
    let base = base_state(spec, &mut rng)?;
    let training: Vec<PureState> = (0..spec.m).map(|_| perturbed(&base, spec.delta, &mut rng)).collect();

    match kind {
        StateKind::Pure => {
            let test = anomaly_state(spec, &base)?;
            TrainingSet::new(training.iter().map(pure_source).collect(), pure_source(&test))
        }
        StateKind::Mixed => {
            let p_mix = cluster_mix(spec.delta);
            let sources = training.iter().map(|s| mixed_source(s, p_mix)).collect();
            let test = match &spec.anomaly {
                AnomalyRecipe::Depolarize { p } => mixed_source(&base, *p),
                _ => mixed_source(&anomaly_state(spec, &base)?, p_mix),
            };
            TrainingSet::new(sources, test)
        }
    }
}

/// Additional cluster members not used for training ("held-out normals"),
/// drawn deterministically from the spec seed.
pub fn synthesize_holdout(spec: &DatasetSpec, count: usize) -> Result<Vec<StateSource>> {
    spec.validate()?;
    let kind = spec.state_kind()?;
    let mut rng = random::seeded_rng(spec.seed);
    let base = base_state(spec, &mut rng)?;
    (0..count)
        .map(|i| {
            let mut hrng = random::seeded_rng(derive_seed(spec.seed, 0x484f_4c44 + i as u64));
            let state = perturbed(&base, spec.delta, &mut hrng);
            Ok(match kind {
                StateKind::Pure => pure_source(&state),
                StateKind::Mixed => mixed_source(&state, cluster_mix(spec.delta)),
            })
        })
        .collect()
}
