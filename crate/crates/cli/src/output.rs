//! Output documents: JSON summaries and checkpoints, CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use obsdesign::optim::RunResult;
use obsdesign::{Checkpoint, TopDesign};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub indices: Vec<u32>,
    pub design: Vec<f64>,
    pub mean: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n: u64,
}

impl From<&TopDesign> for DesignRecord {
    fn from(t: &TopDesign) -> Self {
        DesignRecord {
            indices: t.location.indices().to_vec(),
            design: t.design.clone(),
            mean: t.mean,
            ci_low: t.interval.map(|i| i.0),
            ci_high: t.interval.map(|i| i.1),
            n: t.n,
        }
    }
}

/// One repetition of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub algorithm: String,
    pub rep: usize,
    pub seed: u64,
    pub best: DesignRecord,
    pub evaluations: u64,
    pub failures: u64,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub acceptance_rate: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

impl RunRecord {
    pub fn new(label: &str, rep: usize, seed: u64, r: &RunResult) -> Self {
        RunRecord {
            label: label.to_string(),
            algorithm: r.algorithm.clone(),
            rep,
            seed,
            best: DesignRecord::from(&r.best),
            evaluations: r.total_evaluations,
            failures: r.failures,
            complete: r.complete,
            acceptance_rate: r.acceptance_rate,
            warnings: r.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
}

/// Checkpoint file: particle statistics plus what is needed to continue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointFile {
    pub config: ExperimentConfig,
    pub label: String,
    pub rep: usize,
    /// Seed of this repetition's random streams.
    pub seed: u64,
    pub particles: Checkpoint,
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create output directory {}: {e}", dir.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn read_checkpoint(path: &Path) -> CliResult<CheckpointFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read checkpoint {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!(
            "malformed checkpoint {} at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

pub fn checkpoint_path(dir: &Path, label: &str, rep: usize) -> PathBuf {
    dir.join(format!("checkpoint_{label}_{rep}.json"))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn design_header(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("t{i}")).collect()
}

/// `label, rep, rank, t1..tk, mean, ci_low, ci_high, n`.
pub struct TopTable {
    writer: csv::Writer<fs::File>,
}

impl TopTable {
    pub fn create(path: &Path, k: usize) -> CliResult<Self> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["label".to_string(), "rep".into(), "rank".into()];
        header.extend(design_header(k));
        header.extend(["mean", "ci_low", "ci_high", "n"].map(String::from));
        writer.write_record(&header)?;
        Ok(TopTable { writer })
    }

    pub fn write(&mut self, label: &str, rep: usize, rows: &[TopDesign]) -> CliResult<()> {
        for (rank, t) in rows.iter().enumerate() {
            let mut rec = vec![label.to_string(), rep.to_string(), (rank + 1).to_string()];
            rec.extend(t.design.iter().map(|x| x.to_string()));
            rec.push(t.mean.to_string());
            rec.push(fmt_opt(t.interval.map(|i| i.0)));
            rec.push(fmt_opt(t.interval.map(|i| i.1)));
            rec.push(t.n.to_string());
            self.writer.write_record(&rec)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Per-step snapshots of the leading designs.
pub struct StepTable {
    writer: csv::Writer<fs::File>,
}

impl StepTable {
    pub fn create(path: &Path, k: usize) -> CliResult<Self> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = ["label", "rep", "step", "alpha", "lambda", "evaluations", "visited", "rank"]
            .map(String::from)
            .to_vec();
        header.extend(design_header(k));
        header.extend(["mean", "ci_low", "ci_high", "ci_width", "n"].map(String::from));
        writer.write_record(&header)?;
        Ok(StepTable { writer })
    }

    pub fn write(&mut self, label: &str, rep: usize, result: &RunResult) -> CliResult<()> {
        for s in &result.steps {
            for (rank, t) in s.top.iter().enumerate() {
                let mut rec = vec![
                    label.to_string(),
                    rep.to_string(),
                    s.step.to_string(),
                    fmt_opt(s.alpha),
                    s.lambda.to_string(),
                    s.evaluations.to_string(),
                    s.visited.to_string(),
                    (rank + 1).to_string(),
                ];
                rec.extend(t.design.iter().map(|x| x.to_string()));
                rec.push(t.mean.to_string());
                rec.push(fmt_opt(t.interval.map(|i| i.0)));
                rec.push(fmt_opt(t.interval.map(|i| i.1)));
                rec.push(fmt_opt(t.interval.map(|i| i.1 - i.0)));
                rec.push(t.n.to_string());
                self.writer.write_record(&rec)?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Wall-clock times, kept apart from the deterministic outputs.
pub fn write_timing(path: &Path, rows: &[(String, usize, f64)]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["label", "rep", "seconds"])?;
    for (label, rep, secs) in rows {
        w.write_record([label.clone(), rep.to_string(), format!("{secs:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Type-7 sample quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(1/k) Σ (d_i - ref_i)²` for one returned design.
pub fn squared_error(design: &[f64], reference: &[f64]) -> f64 {
    design.iter().zip(reference).map(|(d, r)| (d - r).powi(2)).sum::<f64>() / design.len() as f64
}

/// Root mean over runs of the per-run squared error.
pub fn rmse(designs: &[Vec<f64>], reference: &[f64]) -> f64 {
    let total: f64 = designs.iter().map(|d| squared_error(d, reference)).sum();
    (total / designs.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&x, 0.0), 1.0);
        assert_eq!(quantile(&x, 1.0), 4.0);
        assert_eq!(quantile(&x, 0.5), 2.5);
        assert!((quantile(&x, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn rmse_per_coordinate() {
        let designs = vec![vec![1.0, 2.0], vec![1.0, 4.0]];
        // squared errors 0 and 2, mean 1
        assert_eq!(rmse(&designs, &[1.0, 2.0]), 1.0);
    }
}
