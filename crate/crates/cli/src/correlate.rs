use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use lambdatune::correlation::correlate;
use lambdatune::format::sig6;
use lambdatune::mapping::fit_logistic5;
use serde::Serialize;

use crate::manifest::Run;
use crate::table::{ensure_dir, to_csv_string, write_csv, KeyedTable};
use crate::Globals;

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    /// Objective scores: pvs_id plus one column per metric.
    pub metrics: PathBuf,
    /// Subjective scores keyed by pvs_id (e.g. a MOS or DMOS table).
    pub subjective: PathBuf,
    /// Fit a logistic mapping before PLCC and RMSE (default).
    #[arg(long, overrides_with = "no_map")]
    pub map: bool,
    #[arg(long, overrides_with = "map")]
    pub no_map: bool,
    /// Subjective column; defaults to the first of mos, dmos, psi.
    #[arg(long)]
    pub column: Option<String>,
}

pub fn run(g: &Globals, args: &Args, run: &mut Run) -> Result<bool> {
    run.config(args);
    let metrics = KeyedTable::read(&args.metrics)?;
    run.input(&args.metrics);
    let subjective = KeyedTable::read(&args.subjective)?;
    run.input(&args.subjective);

    let column = match &args.column {
        Some(c) => subjective
            .column(c)
            .with_context(|| format!("{}: no column `{c}`", args.subjective.display()))?,
        None => ["mos", "dmos", "psi"]
            .iter()
            .find_map(|c| subjective.column(c))
            .with_context(|| {
                format!("{}: no mos, dmos or psi column", args.subjective.display())
            })?,
    };

    let header: Vec<String> = ["metric", "plcc", "srocc", "krcc", "rmse", "n"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::new();
    for (m, name) in metrics.columns.iter().enumerate() {
        let (obj, subj): (Vec<f64>, Vec<f64>) = metrics
            .rows
            .iter()
            .filter_map(|(id, values)| {
                let o = values[m]?;
                let s = subjective.rows.get(id)?[column]?;
                Some((o, s))
            })
            .unzip();
        if obj.len() < 3 {
            bail!(
                "metric `{name}`: only {} rows join on pvs_id, need at least 3",
                obj.len()
            );
        }
        let params = if args.no_map {
            None
        } else {
            Some(fit_logistic5(&obj, &subj).with_context(|| format!("mapping metric `{name}`"))?)
        };
        let r =
            correlate(&obj, &subj, params.as_ref()).with_context(|| format!("metric `{name}`"))?;
        rows.push(vec![
            name.clone(),
            sig6(r.plcc),
            sig6(r.srocc),
            sig6(r.krcc),
            sig6(r.rmse),
            r.n.to_string(),
        ]);
    }

    ensure_dir(&g.out)?;
    run.output(write_csv(g.out.join("correlation.csv"), &header, &rows)?);
    print!("{}", to_csv_string(&header, &rows)?);
    Ok(false)
}
