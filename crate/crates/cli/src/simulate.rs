use std::fmt::Write as _;

use anyhow::{Context, Result};
use lambdatune::backend::SyntheticModel;
use lambdatune::curves::{CurveFile, CurvePointRecord};
use lambdatune::format::sig6;
use lambdatune::optimizer::LambdaMultipliers;
use lambdatune::simulate::{simulate_study, StudyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::manifest::Run;
use crate::table::{ensure_dir, write_csv};
use crate::Globals;

const CLIPS: [&str; 4] = ["aurora", "harbor", "market", "forest"];
const QPS: [u8; 5] = [27, 39, 49, 59, 63];
const N_SUBJECTS: usize = 42;
const N_EXPERTS: usize = 14;

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {}

/// Opinion-scale quality of a stimulus with metric value `q`.
fn perceived(q: f64) -> f64 {
    10.0 + 80.0 / (1.0 + (-(q - 12.0) / 1.2).exp())
}

fn strings<const N: usize>(xs: [&str; N]) -> Vec<String> {
    xs.map(String::from).to_vec()
}

pub fn run(g: &Globals, _args: &Args, run: &mut Run) -> Result<bool> {
    run.config(serde_json::json!({ "seed": g.seed }));
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let out = &g.out;
    ensure_dir(&out.join("curves"))?;
    ensure_dir(&out.join("bias"))?;

    // Per-clip synthetic encoders with their own optimum.
    let models: Vec<SyntheticModel> = CLIPS
        .iter()
        .map(|_| SyntheticModel {
            k_star: (rng.random_range(1.0..1.6), rng.random_range(0.6..1.2)),
            ..SyntheticModel::default()
        })
        .collect();

    let mut config = String::from(
        "native_pass = true\n\n[optimizer]\nqps = [27, 39, 49, 59, 63]\nmetric = \"ms_ssim\"\n\n\
         [backend]\nkind = \"synthetic\"\n",
    );
    for (clip, m) in CLIPS.iter().zip(&models) {
        let _ = write!(
            config,
            "\n[backend.clips.{clip}]\nk_star = [{}, {}]\n",
            sig6(m.k_star.0),
            sig6(m.k_star.1)
        );
    }
    config.push_str("\n[settings.native]\npreset = \"2\"\n\n[settings.proxy]\npreset = \"6\"\nscale = \"1920x1080\"\n");
    for clip in CLIPS {
        let _ = write!(
            config,
            "\n[[clip]]\nid = \"{clip}\"\nduration_seconds = 5.0\n"
        );
    }
    let path = out.join("config.toml");
    std::fs::write(&path, config).with_context(|| format!("writing {}", path.display()))?;
    run.output(path);

    // Stimuli: one source per clip plus every (variant, qp) encode.
    struct Stimulus {
        id: String,
        clip: &'static str,
        qp: Option<u8>,
        variant: Option<&'static str>,
        psi: f64,
    }
    let mut stimuli = Vec::new();
    let mut metric_rows = Vec::new();
    let mut pairing_rows = Vec::new();
    let psnr_noise = Normal::new(0.0, 0.6).unwrap();
    for (clip, model) in CLIPS.iter().zip(&models) {
        let src = format!("{clip}_src");
        stimuli.push(Stimulus {
            id: src.clone(),
            clip,
            qp: None,
            variant: None,
            psi: rng.random_range(88.0..94.0),
        });
        let tuned = LambdaMultipliers::new(model.k_star.0, model.k_star.1);
        for (variant, ks) in [("baseline", LambdaMultipliers::UNIT), ("tuned", tuned)] {
            let mut points = Vec::new();
            for qp in QPS {
                let r = model.encode(qp, ks);
                let id = format!("{clip}_{variant}_qp{qp}");
                stimuli.push(Stimulus {
                    id: id.clone(),
                    clip,
                    qp: Some(qp),
                    variant: Some(variant),
                    psi: perceived(r.quality),
                });
                let psnr = 2.1 * r.quality + 3.0 + psnr_noise.sample(&mut rng);
                metric_rows.push(vec![id.clone(), sig6(r.quality), sig6(psnr)]);
                pairing_rows.push(vec![id.clone(), src.clone()]);
                points.push(CurvePointRecord {
                    rate_kbps: r.rate,
                    quality: r.quality,
                    qp: Some(qp),
                    tag: Some(id),
                    ci95: None,
                });
            }
            let file = CurveFile {
                clip: Some(clip.to_string()),
                variant: Some(variant.to_string()),
                metric: "ms_ssim".into(),
                points,
            };
            let path = out.join("curves").join(format!("{clip}.{variant}.json"));
            file.write(&path)?;
            run.output(path);
        }
    }

    let mut score_rows = Vec::new();
    for s in 0..N_SUBJECTS {
        let subject = format!("s{s:02}");
        let cohort = if s < N_EXPERTS {
            "expert"
        } else {
            "non-expert"
        };
        let bias: f64 = rng.random_range(-6.0..6.0);
        let noise = Normal::new(0.0, rng.random_range(2.0..6.0)).unwrap();
        for st in &stimuli {
            let score = (st.psi + bias + noise.sample(&mut rng)).clamp(0.0, 100.0);
            score_rows.push(vec![
                subject.clone(),
                st.id.clone(),
                format!("{score:.1}"),
                st.clip.to_string(),
                st.qp.map(|q| q.to_string()).unwrap_or_default(),
                st.variant.unwrap_or_default().to_string(),
                if st.qp.is_some() { "dist" } else { "src" }.to_string(),
                cohort.to_string(),
            ]);
        }
    }
    let header = strings([
        "subject_id",
        "pvs_id",
        "score",
        "clip",
        "qp",
        "variant",
        "role",
        "cohort",
    ]);
    run.output(write_csv(out.join("scores.csv"), &header, &score_rows)?);
    run.output(write_csv(
        out.join("pairing.csv"),
        &strings(["dist_pvs_id", "src_pvs_id"]),
        &pairing_rows,
    )?);
    run.output(write_csv(
        out.join("metrics.csv"),
        &strings(["pvs_id", "ms_ssim", "psnr"]),
        &metric_rows,
    )?);

    // Low-noise panel whose biases a recovery should reproduce closely.
    let bias = simulate_study(
        &mut rng,
        &StudyParams {
            n_subjects: 24,
            n_stimuli: 80,
            psi_range: (30.0, 70.0),
            bias_range: (-10.0, 10.0),
            nu_range: (0.1, 0.3),
        },
    )?;
    let m = &bias.matrix;
    let mut rows = Vec::new();
    for (s, subject) in m.subjects().iter().enumerate() {
        for (e, pvs) in m.stimuli().iter().enumerate() {
            if let Some(v) = m.score(s, e) {
                rows.push(vec![subject.clone(), pvs.clone(), sig6(v)]);
            }
        }
    }
    run.output(write_csv(
        out.join("bias").join("scores.csv"),
        &strings(["subject_id", "pvs_id", "score"]),
        &rows,
    )?);
    let mean_delta = bias.delta.iter().sum::<f64>() / bias.delta.len() as f64;
    let truth: Vec<Vec<String>> = m
        .subjects()
        .iter()
        .enumerate()
        .map(|(s, id)| {
            vec![
                id.clone(),
                sig6(bias.delta[s] - mean_delta),
                sig6(bias.nu[s]),
            ]
        })
        .collect();
    run.output(write_csv(
        out.join("bias").join("truth_subjects.csv"),
        &strings(["subject_id", "delta", "nu"]),
        &truth,
    )?);
    Ok(false)
}
