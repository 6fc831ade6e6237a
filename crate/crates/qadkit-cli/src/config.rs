//! Run configuration: JSON file fields plus command-line overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qadkit::registry::DatasetSpec;
use qadkit::{QadError, Result};

/// The `score` configuration as stored in a JSON file. Every field is also
/// a command-line option; flags override file values. Unknown fields are
/// rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    /// Dataset file to load.
    pub dataset: Option<PathBuf>,
    /// Inline dataset recipe (alternative to `dataset`).
    pub spec: Option<DatasetSpec>,
    /// `kpca` or `ocsvm`.
    pub detector: Option<String>,
    /// `inner-products`, `global`, `mixed`, `direct`, `overlap-circuit` or `both`.
    pub route: Option<String>,
    /// `fidelity` or `superfidelity` (ocsvm).
    pub kernel: Option<String>,
    /// `exact` or `shots`.
    pub mode: Option<String>,
    pub shots: Option<u64>,
    /// Threshold acceptance probability.
    pub p_t: Option<f64>,
    /// `classical`, `hhl` or `hhl-hamsim` (ocsvm).
    pub solver: Option<String>,
    pub phase_bits: Option<usize>,
    /// Substeps per elementary evolution for the hamsim-backed solver.
    pub evolution_reps: Option<usize>,
    pub seed: Option<u64>,
    /// Score file (JSON array of records).
    pub out: Option<PathBuf>,
    /// Optional CSV mirror of the score records.
    pub csv: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &PathBuf) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| QadError::precondition("cli", "config", format!("{}: {e}", path.display())))
    }

    /// File values overridden by any flag values.
    pub fn merged_with(mut self, flags: FileConfig) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if flags.$field.is_some() { self.$field = flags.$field; })*
            };
        }
        take!(dataset, spec, detector, route, kernel, mode, shots, p_t, solver, phase_bits, evolution_reps, seed, out, csv);
        self
    }
}

/// Seed resolution: flag/file value, else the `QADKIT_SEED` environment
/// variable, else 0.
pub fn resolve_seed(explicit: Option<u64>) -> Result<u64> {
    if let Some(seed) = explicit {
        return Ok(seed);
    }
    match std::env::var("QADKIT_SEED") {
        Ok(text) => text.parse().map_err(|_| {
            QadError::precondition("cli", "config", format!("QADKIT_SEED = {text:?} is not a u64"))
        }),
        Err(_) => Ok(0),
    }
}
