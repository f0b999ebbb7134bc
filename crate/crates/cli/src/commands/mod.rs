pub mod compare;
pub mod fig3;
pub mod resume;
pub mod run;
pub mod top;

use std::path::{Path, PathBuf};
use std::time::Instant;

use obsdesign::optim::RunResult;
use obsdesign::SeedSequence;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::dispatch::{build_model, RunAlgorithm};
use crate::error::{CliError, CliResult};

pub(crate) fn load(path: &Path, seed: Option<u64>, workers: Option<usize>) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(w) = workers {
        cfg.workers = Some(w);
    }
    Ok(cfg)
}

pub(crate) fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))
}

pub(crate) fn out_dir(flag: &Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

/// Stream seed of repetition `rep` of the `index`-th algorithm.
pub fn run_seed(master: u64, index: usize, rep: usize) -> u64 {
    SeedSequence::new(master).run_seed(((index as u64) << 32) | rep as u64)
}

pub(crate) struct Outcome {
    pub label: String,
    pub rep: usize,
    pub seed: u64,
    pub result: RunResult,
    pub seconds: f64,
}

/// Every (algorithm, repetition) pair of the experiment, in order.
pub(crate) fn run_all(exp: &Experiment, limit: Option<u64>) -> CliResult<Vec<Outcome>> {
    let model = build_model(&exp.model)?;
    let jobs: Vec<(usize, usize)> = (0..exp.algorithms.len())
        .flat_map(|a| (0..exp.repetitions).map(move |r| (a, r)))
        .collect();
    let pool = pool(exp.workers)?;
    let results: Vec<CliResult<Outcome>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(a, rep)| {
                let (label, algorithm) = &exp.algorithms[a];
                let seed = run_seed(exp.seed, a, rep);
                let start = Instant::now();
                let result = model
                    .accept(RunAlgorithm {
                        grid: exp.grid,
                        algorithm,
                        seed,
                        limit,
                    })
                    .map_err(|e| match CliError::from(e) {
                        CliError::Config(m) => CliError::Config(format!("{label} rep {rep}: {m}")),
                        CliError::Runtime(m) => CliError::Runtime(format!("{label} rep {rep}: {m}")),
                    })?;
                Ok(Outcome {
                    label: label.clone(),
                    rep,
                    seed,
                    result,
                    seconds: start.elapsed().as_secs_f64(),
                })
            })
            .collect()
    });
    results.into_iter().collect()
}

pub(crate) fn describe(o: &Outcome) -> String {
    let b = &o.result.best;
    let ci = match b.interval {
        Some((lo, hi)) => format!("[{lo:.6}, {hi:.6}]"),
        None => "unbounded".into(),
    };
    format!(
        "{} rep {}: best design {:?}, estimated expected utility {:.6} (95% CI {ci}, n = {}), {} evaluations",
        o.label, o.rep, b.design, b.mean, b.n, o.result.total_evaluations
    )
}

/// Summary, tables, timing and (for the new algorithm) checkpoints.
pub(crate) fn write_outputs(
    dir: &Path,
    command: &str,
    exp: &Experiment,
    outcomes: &[Outcome],
) -> CliResult<()> {
    use crate::output::{
        checkpoint_path, ensure_dir, write_json, write_timing, CheckpointFile, RunRecord, StepTable, Summary,
        TopTable,
    };
    ensure_dir(dir)?;
    let summary = Summary {
        command: command.to_string(),
        config: exp.config.clone(),
        runs: outcomes
            .iter()
            .map(|o| RunRecord::new(&o.label, o.rep, o.seed, &o.result))
            .collect(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    std::fs::write(dir.join("resolved_config.toml"), exp.config.to_toml())?;

    let k = exp.grid.k;
    let mut top = TopTable::create(&dir.join("top_designs.csv"), k)?;
    let mut steps = StepTable::create(&dir.join("steps.csv"), k)?;
    for o in outcomes {
        top.write(&o.label, o.rep, &o.result.top_designs(exp.top))?;
        steps.write(&o.label, o.rep, &o.result)?;
        if o.result.algorithm == "new" {
            let file = CheckpointFile {
                config: exp.config.clone(),
                label: o.label.clone(),
                rep: o.rep,
                seed: o.seed,
                particles: o.result.system.to_checkpoint(),
            };
            write_json(&checkpoint_path(dir, &o.label, o.rep), &file)?;
        }
    }
    top.finish()?;
    steps.finish()?;
    let timing: Vec<(String, usize, f64)> = outcomes.iter().map(|o| (o.label.clone(), o.rep, o.seconds)).collect();
    write_timing(&dir.join("timing.csv"), &timing)
}
