//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use serde::{Deserialize, Serialize};

use qadkit::kpca;
use qadkit::ocsvm::{self, EvolutionBackend};
use qadkit::qcore::{derive_seed, sample_bernoulli};
use qadkit::registry::{self, AnomalyRecipe, BaseRecipe, DatasetSpec, StateKind, TrainingSet};
use qadkit::swaptest::{self, EstimatorMode, OverlapComponent};
use qadkit::validation;
use qadkit::{hamsim, QadError, Result};

use crate::config::{resolve_seed, FileConfig};

const MODULE: &str = "cli";

fn config_err(detail: impl Into<String>) -> QadError {
    QadError::precondition(MODULE, "config", detail)
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct GenerateArgs {
    /// Number of training states.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Hilbert-space dimension.
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    /// `pure` or `mixed`.
    #[arg(long, default_value = "pure")]
    pub kind: String,
    /// Base-state recipe: `haar`, or `basis:<index>`.
    #[arg(long, default_value = "haar")]
    pub base: String,
    /// Cluster spread in [0, 1].
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Anomaly recipe: `orthogonal`, `rotation:<theta>`, or `depolarize:<p>`.
    #[arg(long, default_value = "orthogonal")]
    pub anomaly: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output dataset path.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_base(text: &str) -> Result<BaseRecipe> {
    if text == "haar" {
        return Ok(BaseRecipe::Haar);
    }
    if let Some(index) = text.strip_prefix("basis:") {
        let index = index
            .parse()
            .map_err(|_| config_err(format!("bad basis index in {text:?}")))?;
        return Ok(BaseRecipe::Basis { index });
    }
    Err(config_err(format!("unknown base recipe {text:?} (haar | basis:<index>)")))
}

fn parse_anomaly(text: &str) -> Result<AnomalyRecipe> {
    if text == "orthogonal" {
        return Ok(AnomalyRecipe::Orthogonal);
    }
    if let Some(theta) = text.strip_prefix("rotation:") {
        let theta = theta
            .parse()
            .map_err(|_| config_err(format!("bad rotation angle in {text:?}")))?;
        return Ok(AnomalyRecipe::Rotation { theta });
    }
    if let Some(p) = text.strip_prefix("depolarize:") {
        let p = p
            .parse()
            .map_err(|_| config_err(format!("bad depolarization strength in {text:?}")))?;
        return Ok(AnomalyRecipe::Depolarize { p });
    }
    Err(config_err(format!(
        "unknown anomaly recipe {text:?} (orthogonal | rotation:<theta> | depolarize:<p>)"
    )))
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let spec = DatasetSpec {
        m: args.m,
        dim: args.dim,
        kind: args.kind,
        base: parse_base(&args.base)?,
        delta: args.delta,
        anomaly: parse_anomaly(&args.anomaly)?,
        seed: resolve_seed(args.seed)?,
    };
    let ts = registry::synthesize(&spec)?;
    registry::save(&ts, &args.out)?;
    eprintln!(
        "wrote {} ({} kind, M = {}, d = {})",
        args.out.display(),
        ts.kind(),
        ts.len(),
        ts.dim()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct ScoreArgs {
    /// JSON config with any of the score fields; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// `kpca` or `ocsvm`.
    #[arg(long)]
    pub detector: Option<String>,
    /// kpca: `inner-products`, `global`, `mixed`, `both`;
    /// ocsvm: `direct`, `overlap-circuit`, `both`.
    #[arg(long)]
    pub route: Option<String>,
    /// ocsvm kernel: `fidelity` or `superfidelity`.
    #[arg(long)]
    pub kernel: Option<String>,
    /// `exact` or `shots`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Threshold acceptance probability P_T.
    #[arg(long)]
    pub pt: Option<f64>,
    /// ocsvm solver: `classical`, `hhl`, or `hhl-hamsim`.
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub phase_bits: Option<usize>,
    #[arg(long)]
    pub evolution_reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Score file (JSON array of records).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional CSV mirror.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// One detector result. Serialized records round-trip losslessly; per-record
/// wall time goes to stderr so reruns stay byte-identical.
#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub state_id: String,
    pub detector: String,
    pub route: String,
    pub mode: String,
    pub f: f64,
    pub stderr: f64,
    pub shots: u64,
    pub success_probs: BTreeMap<String, f64>,
}

fn estimator_mode(mode: &str, shots: Option<u64>, seed: u64) -> Result<EstimatorMode> {
    match mode {
        "exact" => Ok(EstimatorMode::Exact),
        "shots" => {
            let shots = shots.ok_or_else(|| config_err("mode \"shots\" requires --shots"))?;
            if shots == 0 {
                return Err(config_err("--shots must be >= 1"));
            }
            Ok(EstimatorMode::Shots { shots, seed })
        }
        other => Err(config_err(format!("unknown mode {other:?} (exact | shots)"))),
    }
}

fn load_training_set(cfg: &FileConfig) -> Result<TrainingSet> {
    match (&cfg.dataset, &cfg.spec) {
        (Some(path), None) => registry::load(path),
        (None, Some(spec)) => registry::synthesize(spec),
        (Some(_), Some(_)) => Err(config_err("give either a dataset path or an inline spec, not both")),
        (None, None) => Err(config_err("a dataset path or an inline spec is required")),
    }
}

fn kpca_records(
    ts: &TrainingSet,
    route: &str,
    mode: EstimatorMode,
    mode_name: &str,
) -> Result<Vec<ScoreRecord>> {
    let routes: Vec<&str> = match (ts.kind(), route) {
        (StateKind::Mixed, "mixed" | "default") => vec!["mixed"],
        (StateKind::Mixed, other) => {
            return Err(config_err(format!("route {other:?} is undefined for mixed sets")))
        }
        (StateKind::Pure, "inner-products" | "default") => vec!["inner-products"],
        (StateKind::Pure, "global") => vec!["global"],
        (StateKind::Pure, "both") => vec!["inner-products", "global"],
        (StateKind::Pure, other) => {
            return Err(config_err(format!(
                "unknown kpca route {other:?} (inner-products | global | both)"
            )))
        }
    };
    let mut records = Vec::new();
    for route in routes {
        let started = std::time::Instant::now();
        let score = match route {
            "inner-products" => kpca::score_pure_innerproducts(ts, mode)?,
            "global" => kpca::score_pure_global(ts, mode)?,
            "mixed" => kpca::score_mixed(ts, mode)?,
            _ => unreachable!(),
        };
        let mut success_probs = BTreeMap::new();
        for (name, p) in &score.prep_stages {
            success_probs.insert((*name).to_string(), *p);
        }
        eprintln!("kpca/{route}: {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
        records.push(ScoreRecord {
            state_id: "test".into(),
            detector: "kpca".into(),
            route: route.into(),
            mode: mode_name.into(),
            f: score.f,
            stderr: score.stderr,
            shots: score.shots_total,
            success_probs,
        });
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn ocsvm_records(
    ts: &TrainingSet,
    route: &str,
    kernel_kind: &str,
    solver: &str,
    p_t: f64,
    phase_bits: usize,
    evolution_reps: usize,
    mode: EstimatorMode,
    mode_name: &str,
) -> Result<Vec<ScoreRecord>> {
    let (kernel, k0) = match (ts.kind(), kernel_kind) {
        (StateKind::Pure, "fidelity" | "default") => {
            let (k, k0) = ocsvm::build_kernel_pure(ts, mode)?;
            (k, Some(k0))
        }
        (_, "superfidelity") | (StateKind::Mixed, "default") => {
            (ocsvm::build_kernel_superfidelity(ts, mode)?, None)
        }
        (StateKind::Mixed, "fidelity") => {
            return Err(config_err("the fidelity kernel is undefined for mixed sets"))
        }
        (_, other) => {
            return Err(config_err(format!(
                "unknown kernel {other:?} (fidelity | superfidelity)"
            )))
        }
    };

    let alpha = match solver {
        "classical" | "default" => ocsvm::solve_alpha_classical(&kernel, p_t)?,
        "hhl" => ocsvm::solve_alpha_hhl(&kernel, p_t, phase_bits, EvolutionBackend::Exact)?,
        "hhl-hamsim" => {
            let k0 = k0.as_ref().ok_or_else(|| {
                config_err("the hamsim-backed solver needs the pure-state overlap kernel")
            })?;
            ocsvm::solve_alpha_hhl(
                &kernel,
                p_t,
                phase_bits,
                EvolutionBackend::Hamsim { k0, reps: evolution_reps },
            )?
        }
        other => {
            return Err(config_err(format!(
                "unknown solver {other:?} (classical | hhl | hhl-hamsim)"
            )))
        }
    };

    let routes: Vec<&str> = match (ts.kind(), route) {
        (StateKind::Mixed, "direct" | "default") => vec!["direct"],
        (StateKind::Mixed, other) => {
            return Err(config_err(format!(
                "route {other:?} is undefined for mixed sets (direct only)"
            )))
        }
        (StateKind::Pure, "direct" | "default") => vec!["direct"],
        (StateKind::Pure, "overlap-circuit") => vec!["overlap-circuit"],
        (StateKind::Pure, "both") => vec!["direct", "overlap-circuit"],
        (StateKind::Pure, other) => {
            return Err(config_err(format!(
                "unknown ocsvm route {other:?} (direct | overlap-circuit | both)"
            )))
        }
    };

    let mut records = Vec::new();
    for route in routes {
        let started = std::time::Instant::now();
        let score = match route {
            "direct" => ocsvm::score_svm_direct(ts, &alpha, mode)?,
            "overlap-circuit" => ocsvm::score_svm_overlap_circuit(ts, &alpha, mode)?,
            _ => unreachable!(),
        };
        let mut success_probs = BTreeMap::new();
        if let Some(p) = alpha.post_selection_prob {
            success_probs.insert("hhl_post_selection".into(), p);
        }
        if let Some(p) = score.prep_success {
            success_probs.insert("state_preparation".into(), p);
        }
        if let Some(p) = score.p_r {
            success_probs.insert("p_r".into(), p);
        }
        if let Some(p) = score.p_i {
            success_probs.insert("p_i".into(), p);
        }
        eprintln!("ocsvm/{route}: {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
        records.push(ScoreRecord {
            state_id: "test".into(),
            detector: "ocsvm".into(),
            route: route.into(),
            mode: mode_name.into(),
            f: score.f,
            stderr: score.stderr,
            shots: score.shots_total,
            success_probs,
        });
    }
    Ok(records)
}

fn records_to_csv(records: &[ScoreRecord]) -> String {
    let mut out = String::from("state_id,detector,route,mode,f,stderr,shots\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.state_id, r.detector, r.route, r.mode, r.f, r.stderr, r.shots
        );
    }
    out
}

pub fn score(args: ScoreArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let flags = FileConfig {
        dataset: args.dataset,
        spec: None,
        detector: args.detector,
        route: args.route,
        kernel: args.kernel,
        mode: args.mode,
        shots: args.shots,
        p_t: args.pt,
        solver: args.solver,
        phase_bits: args.phase_bits,
        evolution_reps: args.evolution_reps,
        seed: args.seed,
        out: args.out,
        csv: args.csv,
    };
    let cfg = file.merged_with(flags);

    let seed = resolve_seed(cfg.seed)?;
    let ts = load_training_set(&cfg)?;
    let mode_name = cfg.mode.clone().unwrap_or_else(|| "exact".into());
    let mode = estimator_mode(&mode_name, cfg.shots, seed)?;
    let detector = cfg.detector.clone().unwrap_or_else(|| "kpca".into());
    let route = cfg.route.clone().unwrap_or_else(|| "default".into());
    let p_t = cfg.p_t.unwrap_or(0.1);

    let records = match detector.as_str() {
        "kpca" => kpca_records(&ts, &route, mode, &mode_name)?,
        "ocsvm" => ocsvm_records(
            &ts,
            &route,
            cfg.kernel.as_deref().unwrap_or("default"),
            cfg.solver.as_deref().unwrap_or("default"),
            p_t,
            cfg.phase_bits.unwrap_or(8),
            cfg.evolution_reps.unwrap_or(1),
            mode,
            &mode_name,
        )?,
        other => return Err(config_err(format!("unknown detector {other:?} (kpca | ocsvm)"))),
    };

    let json = serde_json::to_string_pretty(&records).expect("records serialize");
    match &cfg.out {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    if let Some(path) = &cfg.csv {
        std::fs::write(path, records_to_csv(&records))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct ValidateArgs {
    /// Which suite to run (`all` or one of the check scopes).
    #[arg(long, default_value = "all")]
    pub scope: String,
    /// Test hook: force the named check to fail (harness sanity).
    #[arg(long, hide = true)]
    pub inject_failure: Option<String>,
}

pub fn validate(args: ValidateArgs) -> ExitCode {
    match validation::run_validation(&args.scope, args.inject_failure.as_deref()) {
        Ok(outcomes) => {
            let mut all_passed = true;
            for outcome in &outcomes {
                println!("{}", outcome.line());
                all_passed &= outcome.passed;
            }
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            super::emit_error(&err);
            ExitCode::from(super::exit_code_for(&err))
        }
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct SweepArgs {
    /// `shots` (estimator error vs budget), `theta` (score vs anomaly
    /// angle), or `n` (evolution error vs step count).
    #[arg(long)]
    pub kind: String,
    /// Comma-separated grid; defaults per kind.
    #[arg(long)]
    pub grid: Option<String>,
    /// Seeded repetitions per grid point (shots sweep).
    #[arg(long, default_value_t = 50)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_grid<T: std::str::FromStr>(text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|_| config_err(format!("bad grid entry {part:?}")))
        })
        .collect()
}

/// `param,value,metric,bound` rows in grid order.
fn write_sweep_csv(path: &PathBuf, param: &str, rows: &[(String, f64, Option<f64>)]) -> Result<()> {
    let mut out = String::from("param,value,metric,bound\n");
    for (value, metric, bound) in rows {
        let bound = bound.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{param},{value},{metric},{bound}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Median estimator error against the `1/(4 eps^2)` shot-budget curve.
fn sweep_shots(grid: Vec<u64>, trials: u64, seed: u64, out: &PathBuf) -> Result<()> {
    // a fixed synthesized pair; the estimator is one modified-swap-test
    // component, so the bound applies to its Bernoulli probability
    let ts = registry::synthesize(&DatasetSpec {
        m: 2,
        dim: 4,
        kind: "pure".into(),
        base: BaseRecipe::Haar,
        delta: 0.5,
        anomaly: AnomalyRecipe::Orthogonal,
        seed,
    })?;
    let u_a = ts.sources()[0].as_pure()?;
    let u_b = ts.sources()[1].as_pure()?;
    let exact = swaptest::modified_swap_test(u_a, u_b, OverlapComponent::Real, EstimatorMode::Exact)?;

    let mut rows = Vec::new();
    for (gi, &shots) in grid.iter().enumerate() {
        let mut errors: Vec<f64> = (0..trials)
            .map(|trial| {
                sample_bernoulli(
                    exact.raw_probability,
                    shots,
                    derive_seed(seed, (gi as u64) << 32 | trial),
                )
                .map(|s| (s.estimate - exact.raw_probability).abs())
            })
            .collect::<Result<_>>()?;
        errors.sort_by(f64::total_cmp);
        let median = errors[errors.len() / 2];
        // N = 1/(4 eps^2)  =>  eps = 1/(2 sqrt(N))
        let bound = 1.0 / (2.0 * (shots as f64).sqrt());
        rows.push((shots.to_string(), median, Some(bound)));
    }
    write_sweep_csv(out, "shots", &rows)
}

/// Exact kernel-PCA score against the anomaly rotation angle.
fn sweep_theta(grid: Vec<f64>, seed: u64, out: &PathBuf) -> Result<()> {
    let mut rows = Vec::new();
    for &theta in &grid {
        let ts = registry::synthesize(&DatasetSpec {
            m: 4,
            dim: 4,
            kind: "pure".into(),
            base: BaseRecipe::Haar,
            delta: 0.0,
            anomaly: AnomalyRecipe::Rotation { theta },
            seed,
        })?;
        let f = kpca::score_pure_innerproducts(&ts, EstimatorMode::Exact)?.f;
        rows.push((theta.to_string(), f, None));
    }
    write_sweep_csv(out, "theta", &rows)
}

/// Concatenated-evolution error against the step count, with the `1/n`
/// reference curve anchored at the first grid point.
fn sweep_steps(grid: Vec<usize>, seed: u64, out: &PathBuf) -> Result<()> {
    let ts = registry::synthesize(&DatasetSpec {
        m: 4,
        dim: 8,
        kind: "pure".into(),
        base: BaseRecipe::Haar,
        delta: 0.35,
        anomaly: AnomalyRecipe::Orthogonal,
        seed,
    })?;
    let (_, k0) = ocsvm::build_kernel_pure(&ts, EstimatorMode::Exact)?;
    let k0 = k0.to_density()?;
    // a generic non-commuting sigma
    let mut rng = qadkit::qcore::random::seeded_rng(derive_seed(seed, 1));
    let sigma = qadkit::qcore::random::haar_state(4, &mut rng).to_density();
    let exact = hamsim::exact_evolution(&hamsim::kernel_generator(&k0), &sigma, 1.0);
    let mut rows = Vec::new();
    let mut anchor: Option<(usize, f64)> = None;
    for &n in &grid {
        let evolved = hamsim::simulate_exp_k(&k0, &sigma, 1.0, n)?;
        let err = hamsim::trace_distance(&evolved, &exact);
        let bound = match anchor {
            None => {
                anchor = Some((n, err));
                err
            }
            Some((n0, e0)) => e0 * n0 as f64 / n as f64,
        };
        rows.push((n.to_string(), err, Some(bound)));
    }
    write_sweep_csv(out, "n", &rows)
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    match args.kind.as_str() {
        "shots" => {
            let grid = match &args.grid {
                Some(text) => parse_grid(text)?,
                None => vec![100, 1_000, 10_000],
            };
            sweep_shots(grid, args.trials, seed, &args.out)
        }
        "theta" => {
            let grid = match &args.grid {
                Some(text) => parse_grid(text)?,
                None => (1..=10)
                    .map(|k| k as f64 * std::f64::consts::FRAC_PI_2 / 10.0)
                    .collect(),
            };
            sweep_theta(grid, seed, &args.out)
        }
        "n" => {
            let grid = match &args.grid {
                Some(text) => parse_grid(text)?,
                None => vec![16, 32, 64],
            };
            sweep_steps(grid, seed, &args.out)
        }
        other => Err(config_err(format!("unknown sweep kind {other:?} (shots | theta | n)"))),
    }
}
