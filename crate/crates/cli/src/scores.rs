use std::path::PathBuf;

use anyhow::{bail, Result};
use lambdatune::subjective::{
    bt500_screen, compute_dmos, compute_mos, read_pairing, read_scores, recover_mle, write_model,
    write_mos_table, write_screening, RecoveryMethod, ScoreMatrix,
};
use serde::Serialize;

use crate::manifest::Run;
use crate::table::ensure_dir;
use crate::Globals;

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    /// Raw scores: subject_id,pvs_id,score[,clip,qp,variant,role,...].
    pub scores: PathBuf,
    /// Distorted-to-source pairing: dist_pvs_id,src_pvs_id.
    #[arg(long)]
    pub pairing: Option<PathBuf>,
    /// Run observer screening and drop rejected subjects.
    #[arg(long)]
    pub screen: bool,
    /// Recover per-subject bias and inconsistency (p910 or p913).
    #[arg(long)]
    pub recover: Option<String>,
    /// Subject attribute column to split cohorts on.
    #[arg(long)]
    pub cohort: Option<String>,
}

pub fn run(g: &Globals, args: &Args, run: &mut Run) -> Result<bool> {
    run.config(args);
    let method = args
        .recover
        .as_deref()
        .map(|m| m.parse::<RecoveryMethod>())
        .transpose()?;
    let mut matrix = read_scores(&args.scores)?;
    run.input(&args.scores);
    let pairing = match &args.pairing {
        Some(p) => {
            let pairing = read_pairing(p)?;
            run.input(p);
            pairing.check_covers(&matrix)?;
            Some(pairing)
        }
        None => None,
    };
    ensure_dir(&g.out)?;

    if args.screen {
        let report = bt500_screen(&matrix)?;
        let path = g.out.join("screening.csv");
        write_screening(&path, &report)?;
        run.output(path);
        let rejected = report.rejected();
        if rejected.is_empty() {
            println!("rejected: none");
        } else {
            println!("rejected: {}", rejected.join(", "));
            let rejected: Vec<String> = rejected.iter().map(|s| s.to_string()).collect();
            matrix = matrix.retain_subjects(|_, id| !rejected.iter().any(|r| r == id))?;
        }
    }

    let mut groups: Vec<(String, ScoreMatrix)> = Vec::new();
    if let Some(key) = &args.cohort {
        let values = matrix.cohorts(key);
        if values.is_empty() {
            bail!("no subject has a `{key}` attribute");
        }
        for value in values {
            let subset = matrix
                .retain_subjects(|s, _| matrix.subject_attribute(s, key) == Some(value.as_str()))?;
            groups.push((format!("_{value}"), subset));
        }
    }
    groups.insert(0, (String::new(), matrix));

    for (suffix, m) in &groups {
        let mos = compute_mos(m)?;
        let path = g.out.join(format!("mos{suffix}.csv"));
        write_mos_table(&path, &mos, "mos")?;
        run.output(path);
        if let Some(pairing) = &pairing {
            let path = g.out.join(format!("dmos{suffix}.csv"));
            write_mos_table(&path, &compute_dmos(&mos, pairing)?, "dmos")?;
            run.output(path);
        }
        if let Some(method) = method {
            let model = recover_mle(m, method)?;
            let psi = g.out.join(format!("psi{suffix}.csv"));
            let subjects = g.out.join(format!("subjects{suffix}.csv"));
            write_model(&psi, &subjects, m, &model)?;
            run.output(psi);
            run.output(subjects);
            if let Some(pairing) = &pairing {
                let path = g.out.join(format!("dmos_psi{suffix}.csv"));
                write_mos_table(
                    &path,
                    &compute_dmos(&model.as_mos_table(m), pairing)?,
                    "dmos",
                )?;
                run.output(path);
            }
        }
    }
    Ok(false)
}
