use anyhow::{Context, Result};
use lambdatune::backend::build_rd_curve;
use lambdatune::config::RunConfig;
use lambdatune::curves::CurveFile;
use lambdatune::format::sig6;
use lambdatune::optimizer::{
    optimize_clip, EncodeCache, LambdaMultipliers, Memoized, OptimizationRecord,
};

use crate::manifest::Run;
use crate::table::{ensure_dir, to_csv_string, write_csv};
use crate::Globals;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Clip ids to optimise; all configured clips when omitted.
    pub clips: Vec<String>,
}

/// Returns true when any clip stopped at the iteration cap.
pub fn run(g: &Globals, args: &Args, run: &mut Run) -> Result<bool> {
    let config_path = g.config.as_ref().context("optimize needs --config")?;
    let cfg = RunConfig::load(config_path)?;
    run.input(config_path);
    run.config(&cfg);
    let backend = cfg.build_backend()?;
    let clips = cfg.select_clips(&args.clips)?;
    let cache = match &cfg.cache {
        Some(p) => EncodeCache::load(p)?,
        None => EncodeCache::new(),
    };
    let native = cfg.native_settings();
    let proxy = cfg.proxy_settings();
    ensure_dir(&g.out)?;

    let header: Vec<String> = [
        "clip",
        "k1",
        "k2",
        "cost_bdrate_pct",
        "iterations",
        "evaluations",
        "converged",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    let mut flagged = false;
    for clip in &clips {
        log::info!("optimising clip `{}`", clip.id);
        let result = optimize_clip(
            &*backend,
            clip,
            &cfg.optimizer,
            &native,
            proxy.as_ref(),
            &cache,
        )
        .with_context(|| format!("clip `{}`", clip.id))?;
        flagged |= result.trace.hit_max_iters;
        let record = OptimizationRecord::from(&result);

        let path = g.out.join(format!("{}.result.json", clip.id));
        record.write(&path)?;
        run.output(path);
        let path = g.out.join(format!("{}.trace.csv", clip.id));
        result.trace.write_csv(&path)?;
        run.output(path);

        if cfg.native_pass {
            let memo = Memoized::new(&*backend, &cache);
            for (variant, ks) in [("baseline", LambdaMultipliers::UNIT), ("tuned", result.ks)] {
                let curve = build_rd_curve(
                    &memo,
                    clip,
                    ks,
                    &cfg.optimizer.qps,
                    &native,
                    &cfg.optimizer.metric,
                )?;
                let mut file = CurveFile::from_curve(&curve);
                file.clip = Some(clip.id.clone());
                file.variant = Some(variant.to_string());
                let path = g.out.join(format!("{}.{variant}.json", clip.id));
                file.write(&path)?;
                run.output(path);
            }
        }

        rows.push(vec![
            record.clip.clone(),
            sig6(record.k1),
            sig6(record.k2),
            sig6(record.cost_bdrate_pct),
            record.iterations.to_string(),
            record.evaluations.to_string(),
            record.converged.to_string(),
        ]);
    }
    if let Some(p) = &cfg.cache {
        cache.save(p)?;
    }
    run.output(write_csv(g.out.join("optimize.csv"), &header, &rows)?);
    print!("{}", to_csv_string(&header, &rows)?);
    Ok(flagged)
}
