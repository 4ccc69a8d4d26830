use std::path::PathBuf;

use anyhow::{Context, Result};
use lambdatune::bd::{anchors_at_qps, bd_quality, bd_rate, bitrate_savings, DEFAULT_ANCHOR_QPS};
use lambdatune::curves::CurveFile;
use lambdatune::format::sig6;
use serde::Serialize;

use crate::manifest::Run;
use crate::table::{ensure_dir, to_csv_string, write_csv};
use crate::Globals;

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    /// Reference curve (JSON).
    pub reference: PathBuf,
    /// Test curve (JSON).
    pub test: PathBuf,
    /// Drop non-monotone points before BD-rate (default).
    #[arg(long, overrides_with = "no_clean")]
    pub clean: bool,
    #[arg(long, overrides_with = "clean")]
    pub no_clean: bool,
    /// Qps of the reference points used as savings anchors.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ANCHOR_QPS)]
    pub anchors: Vec<u8>,
}

pub fn run(g: &Globals, args: &Args, run: &mut Run) -> Result<bool> {
    run.config(args);
    let ref_file = CurveFile::read(&args.reference)?;
    run.input(&args.reference);
    let test_file = CurveFile::read(&args.test)?;
    run.input(&args.test);
    let reference = ref_file
        .to_curve()
        .with_context(|| args.reference.display().to_string())?;
    let test = test_file
        .to_curve()
        .with_context(|| args.test.display().to_string())?;

    let rate = bd_rate(&reference, &test, !args.no_clean).context("BD-rate")?;
    let quality = bd_quality(&reference, &test).context("BD-quality")?;
    let anchors = anchors_at_qps(&reference, &args.anchors);
    if anchors.len() < args.anchors.len() {
        log::warn!("reference curve lacks some anchor qps; those columns stay empty");
    }
    let savings = if anchors.is_empty() {
        None
    } else {
        Some(bitrate_savings(&reference, &test, &anchors).context("bitrate savings")?)
    };

    let clip = ref_file.clip.clone().unwrap_or_else(|| {
        args.reference
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let mut header: Vec<String> = [
        "clip",
        "metric",
        "bd_rate_pct",
        "bd_quality",
        "savings_mean_pct",
    ]
    .map(String::from)
    .to_vec();
    let mut row = vec![
        clip,
        reference.metric().to_string(),
        sig6(rate.value),
        sig6(quality.value),
        savings.as_ref().map(|s| sig6(s.mean)).unwrap_or_default(),
    ];
    for qp in &args.anchors {
        let label = format!("QP{qp}");
        let value = savings
            .as_ref()
            .and_then(|s| s.per_anchor.iter().find(|(l, _)| *l == label))
            .map(|(_, v)| sig6(*v))
            .unwrap_or_default();
        header.push(format!("savings_{label}_pct"));
        row.push(value);
    }

    ensure_dir(&g.out)?;
    let rows = [row];
    run.output(write_csv(g.out.join("bd.csv"), &header, &rows)?);
    print!("{}", to_csv_string(&header, &rows)?);
    Ok(false)
}
