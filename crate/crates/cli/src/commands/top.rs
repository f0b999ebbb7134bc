use obsdesign::ParticleSystem;

use crate::error::CliResult;
use crate::output::read_checkpoint;
use crate::TopArgs;

pub fn top(args: &TopArgs) -> CliResult<()> {
    let cp = read_checkpoint(&args.checkpoint)?;
    let system = ParticleSystem::from_checkpoint(cp.particles)?;
    let k = system.grid().k;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    let mut header = vec!["rank".to_string()];
    header.extend((1..=k).map(|i| format!("t{i}")));
    header.extend(["mean", "ci_low", "ci_high", "n"].map(String::from));
    w.write_record(&header)?;
    for (rank, t) in system.top_designs(args.count).iter().enumerate() {
        let mut rec = vec![(rank + 1).to_string()];
        rec.extend(t.design.iter().map(|x| x.to_string()));
        rec.push(t.mean.to_string());
        rec.push(t.interval.map(|i| i.0.to_string()).unwrap_or_default());
        rec.push(t.interval.map(|i| i.1.to_string()).unwrap_or_default());
        rec.push(t.n.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
