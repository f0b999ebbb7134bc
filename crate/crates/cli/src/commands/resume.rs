use obsdesign::ParticleSystem;

use crate::config::{LabelledAlgorithm, ResolvedAlgorithm};
use crate::dispatch::{build_model, Resume};
use crate::error::{CliError, CliResult};
use crate::output::read_checkpoint;
use crate::ResumeArgs;

use super::{describe, load, out_dir, write_outputs, Outcome};

pub fn resume(args: &ResumeArgs) -> CliResult<()> {
    let cp = read_checkpoint(&args.checkpoint)?;
    let mut cfg = match &args.config {
        Some(path) => load(path, None, None)?,
        None => cp.config.clone(),
    };
    if let Some(w) = args.workers {
        cfg.workers = Some(w);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let exp = cfg.resolve()?;
    if exp.grid != cp.particles.grid {
        return Err(CliError::Config(format!(
            "grid: the checkpoint was written on {:?}, the config describes {:?}",
            cp.particles.grid, exp.grid
        )));
    }
    let Some((index, (label, alg))) = exp.algorithms.iter().enumerate().find(|(_, (l, _))| *l == cp.label) else {
        return Err(CliError::Config(format!("algorithms: no algorithm labelled {:?}", cp.label)));
    };
    let ResolvedAlgorithm::New(base) = alg else {
        return Err(CliError::Config(format!(
            "resume continues the new algorithm only; {label:?} is {}",
            alg.kind()
        )));
    };
    let mut new_cfg = base.clone();
    if args.extra_steps > 0 {
        let per_step = args.per_step.unwrap_or_else(|| *base.budgets.last().expect("nonempty schedule"));
        new_cfg = new_cfg.extended(args.extra_steps, per_step);
    } else if args.per_step.is_some() {
        return Err(CliError::Config("--per-step needs --extra-steps".into()));
    }
    let seed = match args.seed {
        Some(_) => super::run_seed(exp.seed, index, cp.rep),
        None => cp.seed,
    };

    let system = ParticleSystem::from_checkpoint(cp.particles.clone())?;
    let model = build_model(&exp.model)?;
    let start = std::time::Instant::now();
    let result = model.accept(Resume {
        system,
        config: &new_cfg,
        seed,
    })?;
    let seconds = start.elapsed().as_secs_f64();

    // the written config describes the schedule actually completed
    let mut exp = exp.clone();
    let updated = ResolvedAlgorithm::New(new_cfg).to_config();
    if exp.config.algorithm.is_some() {
        exp.config.algorithm = Some(updated);
    } else {
        exp.config.algorithms = vec![LabelledAlgorithm {
            label: cp.label.clone(),
            algorithm: updated,
        }];
    }
    if args.extra_steps > 0 {
        exp.config.budget = None;
    }

    let outcome = Outcome {
        label: cp.label.clone(),
        rep: cp.rep,
        seed,
        result,
        seconds,
    };
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => match args.checkpoint.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => out_dir(&None, &cfg),
        },
    };
    write_outputs(&dir, "resume", &exp, std::slice::from_ref(&outcome))?;
    println!("{}", describe(&outcome));
    Ok(())
}
