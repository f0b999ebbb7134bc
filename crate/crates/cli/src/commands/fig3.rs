use obsdesign::models::{DeathModel, DeathModelSpec};
use obsdesign::optim::powering_correspondence;
use rayon::prelude::*;

use crate::config::ModelConfig;
use crate::error::{CliError, CliResult};
use crate::output::ensure_dir;
use crate::Fig3Args;

use super::{load, out_dir, pool};

pub const ALPHAS: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];

pub fn fig3(args: &Fig3Args) -> CliResult<()> {
    let (spec, grid_cfg, workers, cfg) = match &args.config {
        Some(path) => {
            let cfg = load(path, args.seed, args.workers)?;
            let ModelConfig::Death(spec) = cfg.model else {
                return Err(CliError::Config(format!(
                    "model.kind: fig3 needs the death model, not {}",
                    cfg.model.name()
                )));
            };
            let grid = cfg.grid.unwrap_or_else(|| cfg.model.default_grid());
            (spec, grid, cfg.workers.or(args.workers), Some(cfg))
        }
        None => {
            let spec = DeathModelSpec::default();
            (spec, ModelConfig::Death(spec).default_grid(), args.workers, None)
        }
    };
    if grid_cfg.k != 1 {
        return Err(CliError::Config("grid.k: fig3 tabulates single-time designs; set k = 1".into()));
    }
    if args.max_power == 0 {
        return Err(CliError::Config("--max-power must be at least 1".into()));
    }
    let grid = grid_cfg.build()?;
    let model = DeathModel::new(spec).map_err(|e| CliError::Config(format!("model: {e}")))?;

    let times: Vec<f64> = (0..grid.points() as u32).map(|i| grid.time(i)).collect();
    let pool = pool(workers.unwrap_or(1).max(1))?;
    let utilities: Vec<f64> = pool.install(|| {
        times
            .par_iter()
            .map(|&t| model.exact_expected_utility(&[t]))
            .collect::<obsdesign::Result<Vec<f64>>>()
    })?;

    let dir = match &cfg {
        Some(c) => out_dir(&args.out, c),
        None => args.out.clone().unwrap_or_else(|| "results".into()),
    };
    ensure_dir(&dir)?;
    let mut w = csv::Writer::from_path(dir.join("expected_utility.csv"))?;
    w.write_record(["index", "t", "expected_utility"])?;
    for (i, (t, u)) in times.iter().zip(&utilities).enumerate() {
        w.write_record([i.to_string(), t.to_string(), u.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("fig3.csv"))?;
    let mut header = vec!["J".to_string()];
    header.extend(ALPHAS.iter().map(|a| format!("k_alpha_{a}")));
    w.write_record(&header)?;
    for j in 1..=args.max_power {
        let mut rec = vec![j.to_string()];
        for &a in &ALPHAS {
            rec.push(powering_correspondence(&utilities, j, a)?.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;

    let (best, umax) = utilities
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &u)| if u > acc.1 { (i, u) } else { acc });
    println!("argmax t = {} (expected utility {umax:.9})", times[best]);
    println!(
        "designs retained at alpha = 0.5, J = 1: {}",
        powering_correspondence(&utilities, 1, 0.5)?
    );
    Ok(())
}
