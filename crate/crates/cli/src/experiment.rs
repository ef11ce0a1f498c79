//! Replicated experiment execution and CSV emission.
//!
//! Every replicate owns its seed (`base_seed + replicate_index`) and its
//! own output file, so replicates can run on any number of threads without
//! changing a single output byte. All floats are serialized with 17
//! significant digits so traces can be compared bit-for-bit.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use turbo_core::benchmarks::{noisy, random_search, ObjectiveSpec};
use turbo_core::trace::RunTrace;
use turbo_core::{Turbo64, TurboConfig};

use crate::config::{Algorithm, ExperimentConfig};

/// Harness failures, split by exit-code class.
#[derive(Debug)]
pub enum HarnessError {
    /// Configuration or I/O problems (exit code 2).
    Startup(String),
    /// Numerical failures inside a run (exit code 3).
    Numerical(String),
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Startup(m) => write!(f, "{m}"),
            HarnessError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for HarnessError {}

fn classify(err: turbo_core::Error) -> HarnessError {
    match err {
        turbo_core::Error::CholeskyFailed { .. } => HarnessError::Numerical(err.to_string()),
        other => HarnessError::Numerical(other.to_string()),
    }
}

/// Mean and standard error of the best-so-far curve at every evaluation
/// index.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mean_best: Vec<f64>,
    pub stderr_best: Vec<f64>,
}

/// Aggregates replicate best-so-far curves; standard error is the sample
/// standard deviation divided by sqrt(replications).
pub fn summarize(curves: &[Vec<f64>]) -> Summary {
    assert!(!curves.is_empty());
    let len = curves[0].len();
    assert!(curves.iter().all(|c| c.len() == len));
    let r = curves.len() as f64;
    let mut mean_best = Vec::with_capacity(len);
    let mut stderr_best = Vec::with_capacity(len);
    for k in 0..len {
        let mean = curves.iter().map(|c| c[k]).sum::<f64>() / r;
        let stderr = if curves.len() > 1 {
            let var = curves.iter().map(|c| (c[k] - mean).powi(2)).sum::<f64>() / (r - 1.0);
            var.sqrt() / r.sqrt()
        } else {
            0.0
        };
        mean_best.push(mean);
        stderr_best.push(stderr);
    }
    Summary {
        mean_best,
        stderr_best,
    }
}

/// Runs one replicate and returns its trace (unit-cube coordinates).
pub fn run_replicate(
    config: &ExperimentConfig,
    replicate: usize,
) -> Result<RunTrace<f64>, HarnessError> {
    let spec = ObjectiveSpec::<f64>::by_name(&config.objective, config.dimension)
        .map_err(|e| HarnessError::Startup(e.to_string()))?;
    let seed = config.replicate_seed(replicate);
    let noise_seed = seed ^ 0x9e37_79b9_7f4a_7c15;
    let base = spec.unit_objective();
    let mut objective = noisy(base, config.noise_sigma, noise_seed);

    match config.algorithm {
        Algorithm::Turbo => {
            let turbo_config = TurboConfig::new(
                config.num_regions,
                config.batch_size,
                config.max_evaluations,
                config.init_points,
                config.dimension,
                seed,
            )
            .with_noisy(config.noise_sigma > 0.0);
            let mut turbo = Turbo64::new(turbo_config).map_err(classify)?;
            turbo.run(&mut objective).map_err(classify)
        }
        Algorithm::RandomSearch => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_search(
                &mut objective,
                config.dimension,
                config.max_evaluations,
                &mut rng,
            )
            .map_err(classify)
        }
    }
}

/// Runs all replicates (in parallel), writes one trace file per replicate
/// plus `summary.csv`, and returns the summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Summary, HarnessError> {
    fs::create_dir_all(&config.output_dir).map_err(|e| {
        HarnessError::Startup(format!(
            "cannot create output dir {}: {e}",
            config.output_dir.display()
        ))
    })?;
    // Fail fast on unknown objectives before any replicate starts.
    ObjectiveSpec::<f64>::by_name(&config.objective, config.dimension)
        .map_err(|e| HarnessError::Startup(e.to_string()))?;

    let traces: Vec<Result<RunTrace<f64>, HarnessError>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_replicate(config, rep))
        .collect();

    let mut curves = Vec::with_capacity(config.replications);
    for (rep, result) in traces.into_iter().enumerate() {
        let trace = result?;
        write_trace_csv(config, rep, &trace)?;
        curves.push(trace.best_curve());
    }

    let summary = summarize(&curves);
    write_summary_csv(&config.output_dir.join("summary.csv"), &summary)?;
    Ok(summary)
}

/// Runs the batch-efficiency study: the same experiment at each batch size
/// `q`, with budget `max(200 q, floor_budget)`, writing per-q results and a
/// combined summary carrying both the evaluation and the batch axis.
pub fn batch_study(
    config: &ExperimentConfig,
    q_list: &[usize],
    floor_budget: usize,
) -> Result<(), HarnessError> {
    if q_list.is_empty() {
        return Err(HarnessError::Startup("q list must not be empty".into()));
    }
    let mut combined = String::from("q,eval_index,batch_index,mean_best,stderr_best\n");
    for &q in q_list {
        let mut sub = config.clone();
        sub.batch_size = q;
        sub.max_evaluations = (200 * q).max(floor_budget);
        sub.output_dir = config.output_dir.join(format!("q{q:03}"));
        let summary = run_experiment(&sub)?;
        let init = sub.num_regions * sub.init_points;
        for (k, (mean, stderr)) in summary
            .mean_best
            .iter()
            .zip(&summary.stderr_best)
            .enumerate()
        {
            let batch_index = if k < init { 0 } else { (k - init) / q + 1 };
            combined.push_str(&format!(
                "{q},{k},{batch_index},{},{}\n",
                fmt_f64(*mean),
                fmt_f64(*stderr)
            ));
        }
    }
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| HarnessError::Startup(format!("cannot create output dir: {e}")))?;
    fs::write(config.output_dir.join("study_summary.csv"), combined)
        .map_err(|e| HarnessError::Startup(format!("cannot write study summary: {e}")))?;
    Ok(())
}

/// 17 significant digits; round-trips f64 exactly.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_path(config: &ExperimentConfig, replicate: usize) -> PathBuf {
    config
        .output_dir
        .join(format!("trace_rep{replicate:03}.csv"))
}

fn write_trace_csv(
    config: &ExperimentConfig,
    replicate: usize,
    trace: &RunTrace<f64>,
) -> Result<(), HarnessError> {
    let spec = ObjectiveSpec::<f64>::by_name(&config.objective, config.dimension)
        .map_err(|e| HarnessError::Startup(e.to_string()))?;
    let path = trace_path(config, replicate);
    let file = fs::File::create(&path)
        .map_err(|e| HarnessError::Startup(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let io_err =
        |e: std::io::Error| HarnessError::Startup(format!("cannot write {}: {e}", path.display()));

    write!(w, "eval_index").map_err(io_err)?;
    for j in 0..config.dimension {
        write!(w, ",x{j}").map_err(io_err)?;
    }
    writeln!(w, ",value,best_so_far,tr_id,base_length,restart_gen").map_err(io_err)?;

    for rec in trace.records() {
        let unit: Vec<f64> = rec.point.iter().copied().collect();
        let raw = spec.to_raw(&unit);
        write!(w, "{}", rec.eval_index).map_err(io_err)?;
        for v in raw {
            write!(w, ",{}", fmt_f64(v)).map_err(io_err)?;
        }
        writeln!(
            w,
            ",{},{},{},{},{}",
            fmt_f64(rec.value),
            fmt_f64(rec.best_so_far),
            rec.tr_id,
            fmt_f64(rec.base_length),
            rec.restart_gen
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn write_summary_csv(path: &Path, summary: &Summary) -> Result<(), HarnessError> {
    let mut out = String::from("eval_index,mean_best,stderr_best\n");
    for (k, (mean, stderr)) in summary
        .mean_best
        .iter()
        .zip(&summary.stderr_best)
        .enumerate()
    {
        out.push_str(&format!("{k},{},{}\n", fmt_f64(*mean), fmt_f64(*stderr)));
    }
    fs::write(path, out)
        .map_err(|e| HarnessError::Startup(format!("cannot write {}: {e}", path.display())))
}
