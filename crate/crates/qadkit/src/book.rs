//! Doctest bridge for the guide under `book/`: every Rust code block in the
//! chapters compiles and runs via `cargo test --doc`, so the book cannot
//! drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/states-and-circuits.md")]
pub mod states_and_circuits {}

#[doc = include_str!("../../../book/src/datasets.md")]
pub mod datasets {}

#[doc = include_str!("../../../book/src/estimators.md")]
pub mod estimators {}

#[doc = include_str!("../../../book/src/state-preparation.md")]
pub mod state_preparation {}

#[doc = include_str!("../../../book/src/kernel-pca.md")]
pub mod kernel_pca {}

#[doc = include_str!("../../../book/src/one-class-svm.md")]
pub mod one_class_svm {}

#[doc = include_str!("../../../book/src/hamiltonian-simulation.md")]
pub mod hamiltonian_simulation {}

#[doc = include_str!("../../../book/src/cli-and-validation.md")]
pub mod cli_and_validation {}
