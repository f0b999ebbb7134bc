use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::output::{quantile, rmse, squared_error};
use crate::CommonArgs;

use super::{load, out_dir, run_all, write_outputs};

pub fn compare(args: &CommonArgs) -> CliResult<()> {
    let cfg = load(&args.config, args.seed, args.workers)?;
    let exp = cfg.resolve()?;
    let Some(reference) = exp.reference.clone() else {
        return Err(CliError::Config("reference: compare needs the reference optimum".into()));
    };
    if exp.algorithms.len() < 2 {
        return Err(CliError::Config("algorithms: compare needs at least two".into()));
    }
    let outcomes = run_all(&exp, None)?;
    let dir = out_dir(&args.out, &cfg);
    write_outputs(&dir, "compare", &exp, &outcomes)?;

    let mut runs = csv::Writer::from_path(dir.join("compare_runs.csv"))?;
    let mut header = vec!["label".to_string(), "rep".into(), "seed".into()];
    header.extend((1..=exp.grid.k).map(|i| format!("t{i}")));
    header.extend(["mean", "squared_error", "evaluations"].map(String::from));
    runs.write_record(&header)?;
    for o in &outcomes {
        let b = &o.result.best;
        let mut rec = vec![o.label.clone(), o.rep.to_string(), o.seed.to_string()];
        rec.extend(b.design.iter().map(|x| x.to_string()));
        rec.push(b.mean.to_string());
        rec.push(squared_error(&b.design, &reference).to_string());
        rec.push(o.result.total_evaluations.to_string());
        runs.write_record(&rec)?;
    }
    runs.flush()?;

    let mut table = csv::Writer::from_path(dir.join("comparison.csv"))?;
    table.write_record(["label", "runs", "rmse", "err_q05", "err_q25", "err_q50", "err_q75", "err_q95"])?;
    for (label, _) in &exp.algorithms {
        let designs: Vec<Vec<f64>> = outcomes
            .iter()
            .filter(|o| &o.label == label)
            .map(|o| o.result.best.design.clone())
            .collect();
        let mut errors: Vec<f64> = designs.par_iter().map(|d| squared_error(d, &reference).sqrt()).collect();
        errors.sort_by(f64::total_cmp);
        let r = rmse(&designs, &reference);
        let mut rec = vec![label.clone(), designs.len().to_string(), r.to_string()];
        rec.extend([0.05, 0.25, 0.5, 0.75, 0.95].map(|p| quantile(&errors, p).to_string()));
        table.write_record(&rec)?;
        println!("{label}: {} runs, RMSE {r:.6}", designs.len());
    }
    table.flush()?;
    Ok(())
}
