//! Quantum data model: state sources, training sets, dataset synthesis and
//! file ingestion.
//!
//! A state source is the access model the detectors assume: a unitary `U`
//! with `U|0> = |psi>` for pure data, or a Kraus channel whose action on
//! `|0><0|` defines a mixed state. Mixed sources carry their Kraus lists
//! explicitly because the mixed-state inner product is defined on the
//! operators, not on the density matrices alone — two representations of
//! the same state can score differently, and the Kraus list is treated as
//! part of the data.

mod io;
mod synth;

pub use io::{load, load_str, save, to_json_string};
pub use synth::{synthesize, synthesize_holdout, AnomalyRecipe, BaseRecipe, DatasetSpec};

use crate::error::{QadError, Result};
use crate::qcore::{controlled, DensityMatrix, KrausChannel, PureState, Unitary};

const MODULE: &str = "registry";

/// Pure or mixed; training sets are uniform in kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Pure,
    Mixed,
}

impl std::fmt::Display for StateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateKind::Pure => write!(f, "pure"),
            StateKind::Mixed => write!(f, "mixed"),
        }
    }
}

/// One quantum data source.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSource {
    /// Unitary access: `U |0> = |psi>`.
    Pure(Unitary),
    /// Kraus access: `rho = sum_l E_l |0><0| E_l^dagger`.
    Mixed(KrausChannel),
}

impl StateSource {
    pub fn dim(&self) -> usize {
        match self {
            StateSource::Pure(u) => u.dim(),
            StateSource::Mixed(ch) => ch.dim(),
        }
    }

    pub fn kind(&self) -> StateKind {
        match self {
            StateSource::Pure(_) => StateKind::Pure,
            StateSource::Mixed(_) => StateKind::Mixed,
        }
    }

    pub fn as_pure(&self) -> Result<&Unitary> {
        match self {
            StateSource::Pure(u) => Ok(u),
            StateSource::Mixed(_) => Err(QadError::unsupported(
                MODULE,
                "as_pure",
                "operation requires a pure (unitary) source",
            )),
        }
    }

    pub fn as_mixed(&self) -> Result<&KrausChannel> {
        match self {
            StateSource::Mixed(ch) => Ok(ch),
            StateSource::Pure(_) => Err(QadError::unsupported(
                MODULE,
                "as_mixed",
                "operation requires a mixed (Kraus) source; use the pure-state estimators instead",
            )),
        }
    }
}

/// The state a source prepares.
#[derive(Debug, Clone, PartialEq)]
pub enum RealizedState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl RealizedState {
    pub fn to_density(&self) -> DensityMatrix {
        match self {
            RealizedState::Pure(psi) => psi.to_density(),
            RealizedState::Mixed(rho) => rho.clone(),
        }
    }
}

/// Prepares the state a source describes and re-validates the qcore
/// invariants on the result.
pub fn realize(src: &StateSource) -> Result<RealizedState> {
    match src {
        StateSource::Pure(u) => Ok(RealizedState::Pure(u.first_column())),
        StateSource::Mixed(ch) => {
            let rho = DensityMatrix::new(ch.realize().mat().clone())
                .map_err(|e| QadError::invariant(MODULE, "realize", e.to_string()))?;
            Ok(RealizedState::Mixed(rho))
        }
    }
}

/// `M >= 2` training sources plus the test source (`kappa = 0`), all of one
/// kind and dimension. Mixed sets are padded to a common Kraus count on
/// construction so the interferometric estimator can align operator lists;
/// zero padding operators change nothing physically.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    sources: Vec<StateSource>,
    test: StateSource,
}

impl TrainingSet {
    pub fn new(sources: Vec<StateSource>, test: StateSource) -> Result<Self> {
        if sources.len() < 2 {
            return Err(QadError::precondition(
                MODULE,
                "TrainingSet",
                format!("need at least 2 training sources, got {}", sources.len()),
            ));
        }
        let dim = test.dim();
        let kind = test.kind();
        for (i, s) in sources.iter().enumerate() {
            if s.dim() != dim {
                return Err(QadError::dimension(
                    MODULE,
                    "TrainingSet",
                    format!("source {i} has dim {}, expected {dim}", s.dim()),
                ));
            }
            if s.kind() != kind {
                return Err(QadError::precondition(
                    MODULE,
                    "TrainingSet",
                    format!("source {i} is {} but the set is {kind}", s.kind()),
                ));
            }
        }
        let mut ts = Self { sources, test };
        if kind == StateKind::Mixed {
            ts.pad_kraus()?;
        }
        Ok(ts)
    }

    fn pad_kraus(&mut self) -> Result<()> {
        let max_n = self
            .sources
            .iter()
            .chain(std::iter::once(&self.test))
            .map(|s| match s {
                StateSource::Mixed(ch) => ch.len(),
                StateSource::Pure(_) => 0,
            })
            .max()
            .unwrap_or(0);
        for s in self.sources.iter_mut().chain(std::iter::once(&mut self.test)) {
            if let StateSource::Mixed(ch) = s {
                *ch = ch.padded_to(max_n)?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.test.dim()
    }

    pub fn kind(&self) -> StateKind {
        self.test.kind()
    }

    pub fn sources(&self) -> &[StateSource] {
        &self.sources
    }

    pub fn test(&self) -> &StateSource {
        &self.test
    }

    /// Training source by 1-based paper index, or the test source for
    /// `kappa = 0`.
    pub fn source(&self, kappa: usize) -> &StateSource {
        if kappa == 0 {
            &self.test
        } else {
            &self.sources[kappa - 1]
        }
    }

    /// The same training set with a different test source.
    pub fn with_test(&self, test: StateSource) -> Result<Self> {
        Self::new(self.sources.clone(), test)
    }

    /// Realized training states (pure sets only).
    pub fn pure_states(&self) -> Result<Vec<PureState>> {
        self.sources
            .iter()
            .map(|s| s.as_pure().map(|u| u.first_column()))
            .collect()
    }

    /// Realized test state (pure sets only).
    pub fn pure_test(&self) -> Result<PureState> {
        self.test.as_pure().map(|u| u.first_column())
    }
}

/// The control unitary `U_C = sum_i |i><i| (x) U_i` over the training
/// sources, control register (dimension `M`) most significant.
///
/// Only defined for pure sets: conditional access to a Kraus channel is not
/// part of the mixed-state access model.
pub fn controlled_source(ts: &TrainingSet) -> Result<Unitary> {
    if ts.kind() != StateKind::Pure {
        return Err(QadError::unsupported(
            MODULE,
            "controlled_source",
            "U_C is a pure-state-only resource; mixed sets provide Kraus access instead",
        ));
    }
    let unitaries: Vec<Unitary> = ts
        .sources()
        .iter()
        .map(|s| s.as_pure().cloned())
        .collect::<Result<_>>()?;
    controlled(&unitaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::gates;
    use crate::qcore::{random, tensor_pure, RegisterLayout};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use num_complex::Complex64;

    #[test]
    fn realize_identity_and_hadamard() {
        let id = StateSource::Pure(Unitary::identity(2));
        match realize(&id).unwrap() {
            RealizedState::Pure(psi) => assert_eq!(psi, PureState::basis(2, 0)),
            _ => panic!("expected pure"),
        }
        let h = StateSource::Pure(gates::hadamard());
        match realize(&h).unwrap() {
            RealizedState::Pure(psi) => {
                assert_abs_diff_eq!(psi.amps()[0].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
            }
            _ => panic!("expected pure"),
        }
    }

    #[test]
    fn realize_depolarizing_recipe_matches_direct_sum() {
        let ops = gates::depolarizing_kraus(2, 0.4);
        let ch = KrausChannel::new(ops.clone()).unwrap();
        match realize(&StateSource::Mixed(ch)).unwrap() {
            RealizedState::Mixed(rho) => {
                let mut direct = nalgebra::DMatrix::<Complex64>::zeros(2, 2);
                for op in &ops {
                    let col = op.column(0);
                    for i in 0..2 {
                        for j in 0..2 {
                            direct[(i, j)] += col[i] * col[j].conj();
                        }
                    }
                }
                assert!((rho.mat() - direct).iter().all(|x| x.norm() < 1e-14));
                // (1-p)|0><0| + p/2 1 has eigenvalues {1-p/2, p/2}
                let eigs = nalgebra::SymmetricEigen::new(rho.mat().clone()).eigenvalues;
                let mut eigs: Vec<f64> = eigs.iter().copied().collect();
                eigs.sort_by(f64::total_cmp);
                assert_abs_diff_eq!(eigs[0], 0.2, epsilon = 1e-12);
                assert_abs_diff_eq!(eigs[1], 0.8, epsilon = 1e-12);
            }
            _ => panic!("expected mixed"),
        }
    }

    #[test]
    fn controlled_source_identity_pair() {
        let ts = TrainingSet::new(
            vec![
                StateSource::Pure(Unitary::identity(2)),
                StateSource::Pure(Unitary::identity(2)),
            ],
            StateSource::Pure(Unitary::identity(2)),
        )
        .unwrap();
        let uc = controlled_source(&ts).unwrap();
        assert_eq!(uc.mat(), Unitary::identity(4).mat());
    }

    #[test]
    fn controlled_source_cnot_structure() {
        let ts = TrainingSet::new(
            vec![
                StateSource::Pure(Unitary::identity(2)),
                StateSource::Pure(gates::pauli_x()),
            ],
            StateSource::Pure(Unitary::identity(2)),
        )
        .unwrap();
        let uc = controlled_source(&ts).unwrap();
        let got = crate::qcore::controlled(&[Unitary::identity(2), gates::pauli_x()]).unwrap();
        assert_eq!(uc.mat(), got.mat());
    }

    #[test]
    fn controlled_source_blockwise_action() {
        // <i|<psi_i| U_C (|i>|0>) = 1 for each i
        let mut rng = random::seeded_rng(31);
        let m = 4;
        let d = 3;
        let sources: Vec<StateSource> = (0..m)
            .map(|_| StateSource::Pure(random::haar_unitary(d, &mut rng)))
            .collect();
        let test = StateSource::Pure(random::haar_unitary(d, &mut rng));
        let ts = TrainingSet::new(sources, test).unwrap();
        let uc = controlled_source(&ts).unwrap();
        let layout = RegisterLayout::new(vec![m, d]).unwrap();
        for i in 0..m {
            let input = tensor_pure(&PureState::basis(m, i), &PureState::basis(d, 0));
            let out = crate::qcore::apply_unitary_pure(&input, &layout, &uc, &[0, 1]).unwrap();
            let psi_i = ts.sources()[i].as_pure().unwrap().first_column();
            let target = tensor_pure(&PureState::basis(m, i), &psi_i);
            assert_abs_diff_eq!(target.inner(&out).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixed_controlled_source_rejected() {
        let ch = KrausChannel::new(gates::depolarizing_kraus(2, 0.1)).unwrap();
        let ts = TrainingSet::new(
            vec![StateSource::Mixed(ch.clone()), StateSource::Mixed(ch.clone())],
            StateSource::Mixed(ch),
        )
        .unwrap();
        assert_eq!(controlled_source(&ts).unwrap_err().kind(), "unsupported");
    }

    #[test]
    fn kraus_counts_padded_on_construction() {
        let u = Unitary::identity(2);
        let ch1 = KrausChannel::from_unitary(&u); // 1 operator
        let ch4 = KrausChannel::new(gates::depolarizing_kraus(2, 0.2)).unwrap(); // 4 operators
        let ts = TrainingSet::new(
            vec![StateSource::Mixed(ch1), StateSource::Mixed(ch4)],
            StateSource::Mixed(KrausChannel::from_unitary(&u)),
        )
        .unwrap();
        for s in ts.sources().iter().chain(std::iter::once(ts.test())) {
            assert_eq!(s.as_mixed().unwrap().len(), 4);
        }
    }

    #[test]
    fn training_set_rejects_mixed_kinds_and_small_m() {
        let pure = StateSource::Pure(Unitary::identity(2));
        let mixed = StateSource::Mixed(KrausChannel::from_unitary(&Unitary::identity(2)));
        assert!(TrainingSet::new(vec![pure.clone()], pure.clone()).is_err());
        assert!(TrainingSet::new(vec![pure.clone(), mixed], pure.clone()).is_err());
        let d3 = StateSource::Pure(Unitary::identity(3));
        assert!(TrainingSet::new(vec![pure.clone(), d3], pure).is_err());
    }

    #[test]
    fn realize_rejects_invalid_amplitudes_via_unitary_gate() {
        let bad = DVector::from_vec(vec![Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)]);
        assert!(PureState::new(bad).is_err());
    }
}
