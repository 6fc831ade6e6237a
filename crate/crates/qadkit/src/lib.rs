//! Anomaly detection for quantum states.
//!
//! `qadkit` scores how anomalous a test state is relative to a training set
//! of `M` quantum states, using two detectors:
//!
//! - **kernel PCA** — distance of the centered test state from the training
//!   covariance, computed from pairwise state overlaps;
//! - **one-class SVM** — a least-squares hyperplane fit over a fidelity (or
//!   superfidelity) kernel, scored directly or through an overlap circuit.
//!
//! Both detectors run over *pure* states (unitary sources) and *mixed*
//! states (Kraus-channel sources), in exact mode (analytic measurement
//! probabilities) or shot mode (seeded Bernoulli sampling of every circuit
//! output). Every estimator is a faithful simulation of the corresponding
//! measurement circuit, and everything is cross-checked against dense
//! classical oracles in [`reference`].
//!
//! The mdbook under `book/` walks through the concepts chapter by chapter;
//! its code snippets compile and run as part of `cargo test --doc`.

pub mod error;
pub mod hamsim;
pub mod kpca;
pub mod ocsvm;
pub mod qcore;
pub mod reference;
pub mod registry;
pub mod stateprep;
pub mod swaptest;
pub mod validation;

pub use error::{QadError, Result};

#[cfg(doctest)]
pub mod book;
