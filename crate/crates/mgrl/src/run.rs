//! Single training runs and their on-disk artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use mgrl_core::approx::{train_deep, Mlp};
use mgrl_core::envs::FreezeSpec;
use mgrl_core::metrics::MetricRow;
use mgrl_core::tabular::{train, LearnerState};
use serde::Serialize;

use crate::checkpoint;
use crate::config::{Environment, ExperimentConfig};
use crate::error::{CliError, CliResult};

pub const CSV_HEADER: &str = "step,episode,metric,value,seed";
pub const VERSION: &str = concat!("mgrl ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug)]
pub struct RunResult {
    pub seed: u64,
    pub rows: Vec<MetricRow>,
    /// Last logged value of every metric, keyed by name.
    pub final_metrics: BTreeMap<String, f64>,
    pub model: Option<Mlp>,
}

#[derive(Serialize)]
struct CsvRecord<'a> {
    step: u64,
    episode: u64,
    metric: &'a str,
    value: f64,
    seed: u64,
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'a str,
    seed: u64,
    final_metrics: &'a BTreeMap<String, f64>,
    config: &'a ExperimentConfig,
}

/// Share of unfrozen `(s, g)` pairs whose greedy action is the freeze action.
fn freeze_fraction(spec: &FreezeSpec, state: &LearnerState) -> Option<f64> {
    let n = spec.base_states();
    let na = spec.mdp().n_actions();
    let ng = spec.mdp().n_goals();
    let greedy = |s: usize, g: usize| -> Option<usize> {
        if let Some(q) = state.q() {
            return Some(q.greedy_action(s, g));
        }
        let logits = state.logits()?;
        let row = &logits[(s * ng + g) * na..][..na];
        Some((0..na).fold(0, |best, a| if row[a] > row[best] { a } else { best }))
    };
    let mut hits = 0;
    for s in 0..n {
        for g in 0..ng {
            if greedy(s, g)? == spec.freeze_action() {
                hits += 1;
            }
        }
    }
    Some(hits as f64 / (n * ng) as f64)
}

/// Runs `cfg` in memory.
pub fn execute(cfg: &ExperimentConfig) -> CliResult<RunResult> {
    let seed = cfg.seed;
    let (rows, model) = match cfg.build_env()? {
        Environment::Finite { mdp, freeze } => {
            let algo = cfg
                .algo
                .tabular(cfg.tabular.n)
                .ok_or_else(|| CliError::Usage("deep algo on a finite env".into()))?;
            let out = train(algo, &mdp, &cfg.tabular.train_config(), seed)?;
            let mut rows = out.rows;
            if let (Some(spec), true) = (freeze, out.updates > 0) {
                if let Some(f) = freeze_fraction(&spec, &out.state) {
                    rows.push(MetricRow::new(
                        out.updates,
                        out.episodes,
                        "freeze_action_fraction",
                        f,
                        seed,
                    ));
                }
            }
            (rows, None)
        }
        Environment::Torus(env) => {
            let algo = cfg
                .algo
                .deep()
                .ok_or_else(|| CliError::Usage("tabular algo on a torus env".into()))?;
            let out = train_deep(algo, &env, &cfg.deep.deep_config(algo), seed)?;
            (out.rows, Some(out.agent.online))
        }
    };
    let final_metrics = rows.iter().map(|r| (r.metric.clone(), r.value)).collect();
    Ok(RunResult {
        seed,
        rows,
        final_metrics,
        model,
    })
}

pub fn csv_bytes(rows: &[MetricRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    for r in rows {
        w.serialize(CsvRecord {
            step: r.step,
            episode: r.episode,
            metric: &r.metric,
            value: r.value,
            seed: r.seed,
        })
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Usage(e.to_string()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Usage(format!("csv: {e}"))
}

/// Writes `metrics.csv`, `summary.json` and, for deep runs, `model.ckpt`.
pub fn write_outputs(cfg: &ExperimentConfig, result: &RunResult, dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let csv_path = dir.join("metrics.csv");
    std::fs::write(&csv_path, csv_bytes(&result.rows)?).map_err(|e| CliError::io(&csv_path, e))?;
    let summary = Summary {
        version: VERSION,
        seed: result.seed,
        final_metrics: &result.final_metrics,
        config: cfg,
    };
    let json_path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&json_path, text + "\n").map_err(|e| CliError::io(&json_path, e))?;
    if let Some(model) = &result.model {
        checkpoint::save(model, &dir.join("model.ckpt"))?;
    }
    Ok(())
}

/// `mgrl run`: load, apply `MGRL_SEED`, train, write.
pub fn cmd_run(config: &Path, out: &Path) -> CliResult<RunResult> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.apply_env_seed()?;
    let result = execute(&cfg)?;
    write_outputs(&cfg, &result, out)?;
    Ok(result)
}
