//! Seed sweeps: one run per seed, then mean and population std of final metrics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::run::{execute, write_outputs, RunResult, VERSION};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricAggregate {
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub version: String,
    pub seeds: Vec<u64>,
    pub metrics: Vec<MetricAggregate>,
}

pub fn parse_seeds(raw: &str) -> CliResult<Vec<u64>> {
    let seeds: Vec<u64> = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad seed '{s}' in --seeds")))
        })
        .collect::<CliResult<_>>()?;
    if seeds.is_empty() {
        return Err(CliError::Usage("--seeds is empty".into()));
    }
    Ok(seeds)
}

pub fn run_dir(out: &Path, index: usize, seed: u64) -> PathBuf {
    out.join(format!("run_{index}_seed_{seed}"))
}

/// Results are sorted by seed before reduction, so the listing order of seeds
/// does not change the aggregate.
pub fn aggregate(results: &[RunResult]) -> Aggregate {
    let mut sorted: Vec<&RunResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.seed);
    let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &sorted {
        for (name, &v) in &r.final_metrics {
            values.entry(name).or_default().push(v);
        }
    }
    let metrics = values
        .into_iter()
        .map(|(metric, vs)| {
            let n = vs.len() as f64;
            let mean = vs.iter().sum::<f64>() / n;
            let var = vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            MetricAggregate {
                metric: metric.to_string(),
                mean,
                std: var.sqrt(),
                runs: vs.len(),
            }
        })
        .collect();
    Aggregate {
        version: VERSION.to_string(),
        seeds: sorted.iter().map(|r| r.seed).collect(),
        metrics,
    }
}

/// `mgrl sweep`: every seed runs on its own thread.
pub fn cmd_sweep(config: &Path, seeds: &[u64], out: &Path) -> CliResult<Aggregate> {
    let base = ExperimentConfig::load(config)?;
    let configs: Vec<ExperimentConfig> = seeds
        .iter()
        .map(|&seed| ExperimentConfig { seed, ..base.clone() })
        .collect();
    let results: Vec<CliResult<RunResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|cfg| scope.spawn(move || execute(cfg))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut done = Vec::with_capacity(results.len());
    for (index, (cfg, result)) in configs.iter().zip(results).enumerate() {
        let result = result?;
        write_outputs(cfg, &result, &run_dir(out, index, cfg.seed))?;
        done.push(result);
    }
    let agg = aggregate(&done);
    let path = out.join("aggregate.json");
    let text = serde_json::to_string_pretty(&agg).expect("aggregate serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(agg)
}
