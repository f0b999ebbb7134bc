use crate::error::{CliError, CliResult};
use crate::RunArgs;

use super::{describe, load, out_dir, run_all, write_outputs};

pub fn run(args: &RunArgs) -> CliResult<()> {
    let c = &args.common;
    let cfg = load(&c.config, c.seed, c.workers)?;
    let exp = cfg.resolve()?;
    if exp.algorithms.len() != 1 {
        return Err(CliError::Config(
            "algorithms: run takes a single algorithm; use compare for several".into(),
        ));
    }
    if args.stop_after.is_some() && exp.algorithms[0].1.kind() != "new" {
        return Err(CliError::Config("--stop-after applies to the new algorithm only".into()));
    }
    let outcomes = run_all(&exp, args.stop_after)?;
    let dir = out_dir(&c.out, &cfg);
    write_outputs(&dir, "run", &exp, &outcomes)?;
    for o in &outcomes {
        for w in &o.result.warnings {
            log::warn!("{} rep {}: {w}", o.label, o.rep);
        }
        println!("{}", describe(o));
        if !o.result.complete {
            println!("{} rep {}: stopped early; resume from the checkpoint in {}", o.label, o.rep, dir.display());
        }
    }
    Ok(())
}
