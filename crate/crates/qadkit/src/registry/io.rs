//! Dataset files.
//!
//! JSON schema (version 1):
//!
//! ```json
//! {
//!   "version": 1,
//!   "kind": "pure",
//!   "dim": 2,
//!   "training": [ {"amps": [[re, im], ...]}, ... ],
//!   "test": {"amps": [[re, im], ...]}
//! }
//! ```
//!
//! Mixed records replace `"amps"` with `"kraus"`, a list of row-major
//! `dim x dim` complex matrices. Numbers are written with 17 significant
//! digits, which round-trips every f64 exactly; re-serializing a loaded set
//! therefore reproduces the file byte for byte.
//!
//! Pure records store the realized state `U|0>` (one column of the source
//! unitary); on load the unitary is reconstructed by the deterministic
//! basis completion in [`crate::qcore::gates::complete_to_unitary`].

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{QadError, Result};
use crate::qcore::{gates, KrausChannel, PureState};
use crate::registry::{realize, RealizedState, StateKind, StateSource, TrainingSet};

/// Current dataset schema version.
pub const SCHEMA_VERSION: u64 = 1;

fn fmt_f64(x: f64) -> String {
    // 17 significant digits: exact f64 round-trip
    format!("{x:.16e}")
}

fn write_complex(out: &mut String, z: Complex64) {
    let _ = write!(out, "[{},{}]", fmt_f64(z.re), fmt_f64(z.im));
}

fn write_pure_record(out: &mut String, state: &PureState) {
    out.push_str("{\"amps\":[");
    for (i, a) in state.amps().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_complex(out, *a);
    }
    out.push_str("]}");
}

fn write_mixed_record(out: &mut String, ch: &KrausChannel) {
    out.push_str("{\"kraus\":[");
    for (l, op) in ch.operators().iter().enumerate() {
        if l > 0 {
            out.push(',');
        }
        out.push('[');
        for r in 0..op.nrows() {
            if r > 0 {
                out.push(',');
            }
            out.push('[');
            for c in 0..op.ncols() {
                if c > 0 {
                    out.push(',');
                }
                write_complex(out, op[(r, c)]);
            }
            out.push(']');
        }
        out.push(']');
    }
    out.push_str("]}");
}

fn write_source(out: &mut String, src: &StateSource) -> Result<()> {
    match src {
        StateSource::Pure(_) => {
            let state = match realize(src)? {
                RealizedState::Pure(s) => s,
                RealizedState::Mixed(_) => unreachable!(),
            };
            write_pure_record(out, &state);
        }
        StateSource::Mixed(ch) => write_mixed_record(out, ch),
    }
    Ok(())
}

/// Serializes a training set to the dataset schema.
pub fn to_json_string(ts: &TrainingSet) -> Result<String> {
    let mut out = String::new();
    let _ = write!(
        out,
        "{{\n  \"version\": {SCHEMA_VERSION},\n  \"kind\": \"{}\",\n  \"dim\": {},\n  \"training\": [\n",
        ts.kind(),
        ts.dim()
    );
    for (i, src) in ts.sources().iter().enumerate() {
        out.push_str("    ");
        write_source(&mut out, src)?;
        out.push_str(if i + 1 < ts.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ],\n  \"test\": ");
    write_source(&mut out, ts.test())?;
    out.push_str("\n}\n");
    Ok(out)
}

/// Writes a training set to `path`.
pub fn save(ts: &TrainingSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json_string(ts)?)?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDoc {
    version: u64,
    kind: String,
    dim: usize,
    training: Vec<StateRecord>,
    test: StateRecord,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRecord {
    #[serde(default)]
    amps: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    kraus: Option<Vec<Vec<Vec<[f64; 2]>>>>,
}

fn parse_source(record: &StateRecord, kind: StateKind, dim: usize, which: &str) -> Result<StateSource> {
    match kind {
        StateKind::Pure => {
            let amps = record.amps.as_ref().ok_or_else(|| {
                QadError::Schema(format!("{which}: pure record must carry \"amps\""))
            })?;
            if record.kraus.is_some() {
                return Err(QadError::Schema(format!(
                    "{which}: pure record must not carry \"kraus\""
                )));
            }
            if amps.len() != dim {
                return Err(QadError::Schema(format!(
                    "{which}: {} amplitudes, expected {dim}",
                    amps.len()
                )));
            }
            let v = DVector::from_iterator(dim, amps.iter().map(|[re, im]| Complex64::new(*re, *im)));
            let state = PureState::new(v)
                .map_err(|e| QadError::Schema(format!("{which}: {e}")))?;
            Ok(StateSource::Pure(gates::complete_to_unitary(&state)))
        }
        StateKind::Mixed => {
            let kraus = record.kraus.as_ref().ok_or_else(|| {
                QadError::Schema(format!("{which}: mixed record must carry \"kraus\""))
            })?;
            if record.amps.is_some() {
                return Err(QadError::Schema(format!(
                    "{which}: mixed record must not carry \"amps\""
                )));
            }
            let mut operators = Vec::with_capacity(kraus.len());
            for (l, rows) in kraus.iter().enumerate() {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(QadError::Schema(format!(
                        "{which}: kraus operator {l} is not {dim}x{dim}"
                    )));
                }
                let mat = DMatrix::from_fn(dim, dim, |r, c| {
                    let [re, im] = rows[r][c];
                    Complex64::new(re, im)
                });
                operators.push(mat);
            }
            let ch = KrausChannel::new(operators)
                .map_err(|e| QadError::Schema(format!("{which}: {e}")))?;
            Ok(StateSource::Mixed(ch))
        }
    }
}

/// Loads a training set, re-verifying every state invariant; failures name
/// the offending record.
pub fn load(path: impl AsRef<Path>) -> Result<TrainingSet> {
    let text = std::fs::read_to_string(path)?;
    load_str(&text)
}

/// Parses a dataset document from a string.
pub fn load_str(text: &str) -> Result<TrainingSet> {
    let doc: FileDoc = serde_json::from_str(text)?;
    if doc.version != SCHEMA_VERSION {
        return Err(QadError::Schema(format!(
            "unsupported version {} (expected {SCHEMA_VERSION})",
            doc.version
        )));
    }
    let kind = match doc.kind.as_str() {
        "pure" => StateKind::Pure,
        "mixed" => StateKind::Mixed,
        other => return Err(QadError::Schema(format!("unknown kind {other:?}"))),
    };
    let sources = doc
        .training
        .iter()
        .enumerate()
        .map(|(i, rec)| parse_source(rec, kind, doc.dim, &format!("training[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let test = parse_source(&doc.test, kind, doc.dim, "test")?;
    TrainingSet::new(sources, test)
}
