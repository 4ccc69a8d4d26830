use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lambdatune::bd::bd_rate;
use lambdatune::curves::{CurveFile, RdCurve, RdPoint};
use lambdatune::format::sig6;
use serde::Serialize;

use crate::manifest::Run;
use crate::table::{ensure_dir, write_csv, KeyedTable};
use crate::Globals;

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    /// Curve files (JSON); files sharing a clip are drawn together.
    pub curves: Vec<PathBuf>,
    /// MOS table; points whose tag names a pvs_id take its score and interval.
    #[arg(long)]
    pub mos: Option<PathBuf>,
}

struct Series {
    variant: String,
    metric: String,
    /// (rate, value, ci95), ascending rate.
    points: Vec<(f64, f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 55.0); // left, right, top, bottom
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn stem(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
        .split('.')
        .next()
        .unwrap_or_default()
        .to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn run(g: &Globals, args: &Args, run: &mut Run) -> Result<bool> {
    run.config(args);
    if args.curves.is_empty() {
        bail!("report needs at least one curve file");
    }
    let mos = match &args.mos {
        Some(p) => {
            let t = KeyedTable::read(p)?;
            run.input(p);
            Some(t)
        }
        None => None,
    };
    let mos_cols = mos
        .as_ref()
        .map(|t| -> Result<(usize, Option<usize>)> {
            let value = ["mos", "dmos", "psi"]
                .iter()
                .find_map(|c| t.column(c))
                .context("MOS table has no mos, dmos or psi column")?;
            Ok((value, t.column("ci95")))
        })
        .transpose()?;

    let mut clips: BTreeMap<String, Vec<Series>> = BTreeMap::new();
    for path in &args.curves {
        let file = CurveFile::read(path)?;
        run.input(path);
        let clip = file.clip.clone().unwrap_or_else(|| stem(path));
        let variant = file.variant.clone().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        });
        let mut points = Vec::with_capacity(file.points.len());
        let mut from_mos = false;
        for p in &file.points {
            let scored = match (&mos, mos_cols, &p.tag) {
                (Some(t), Some((v, ci)), Some(tag)) => t.rows.get(tag).and_then(|row| {
                    let value = row[v]?;
                    Some((value, ci.and_then(|c| row[c]).unwrap_or(0.0)))
                }),
                _ => None,
            };
            match scored {
                Some((value, ci)) => {
                    from_mos = true;
                    points.push((p.rate_kbps, value, ci));
                }
                None => points.push((p.rate_kbps, p.quality, p.ci95.unwrap_or(0.0))),
            }
        }
        if points.len() < 2
            || points
                .iter()
                .any(|p| !(p.0 > 0.0 && p.1.is_finite() && p.2.is_finite()))
        {
            bail!(
                "{}: need at least 2 points with positive rate and finite values",
                path.display()
            );
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let metric = if from_mos {
            "MOS".to_string()
        } else {
            file.metric.clone()
        };
        clips.entry(clip).or_default().push(Series {
            variant,
            metric,
            points,
        });
    }

    ensure_dir(&g.out)?;
    let header: Vec<String> = [
        "clip",
        "variant",
        "n",
        "rate_min_kbps",
        "rate_max_kbps",
        "quality_min",
        "quality_max",
        "bd_rate_pct",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    for (clip, series) in &clips {
        let path = g.out.join(format!("{clip}.svg"));
        std::fs::write(&path, render(clip, series))
            .with_context(|| format!("writing {}", path.display()))?;
        run.output(path);

        let curve = |s: &Series| {
            RdCurve::new(
                s.points
                    .iter()
                    .map(|&(r, q, _)| RdPoint::new(r, q))
                    .collect(),
                s.metric.clone(),
            )
        };
        let reference = curve(&series[0]).ok();
        for (i, s) in series.iter().enumerate() {
            let bd = match (&reference, i) {
                (Some(r), 1..) => curve(s)
                    .ok()
                    .and_then(|c| bd_rate(r, &c, true).ok())
                    .map(|b| sig6(b.value)),
                _ => None,
            };
            let (rlo, rhi) = bounds(s.points.iter().map(|p| p.0));
            let (qlo, qhi) = bounds(s.points.iter().map(|p| p.1));
            rows.push(vec![
                clip.clone(),
                s.variant.clone(),
                s.points.len().to_string(),
                sig6(rlo),
                sig6(rhi),
                sig6(qlo),
                sig6(qhi),
                bd.unwrap_or_default(),
            ]);
        }
    }
    run.output(write_csv(g.out.join("summary.csv"), &header, &rows)?);
    Ok(false)
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Rate on a log10 axis, quality linear, with 95% interval bars.
fn render(clip: &str, series: &[Series]) -> String {
    let (xlo, xhi) = bounds(
        series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0.log10())),
    );
    let (ylo, yhi) = bounds(
        series
            .iter()
            .flat_map(|s| s.points.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2])),
    );
    let pad = |lo: f64, hi: f64| {
        let d = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
        (lo - d, hi + d)
    };
    let (xlo, xhi) = pad(xlo, xhi);
    let (ylo, yhi) = pad(ylo, yhi);
    let (ml, mr, mt, mb) = MARGIN;
    let pw = WIDTH - ml - mr;
    let ph = HEIGHT - mt - mb;
    let sx = |rate: f64| ml + (rate.log10() - xlo) / (xhi - xlo) * pw;
    let sy = |q: f64| mt + (yhi - q) / (yhi - ylo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(clip));
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{ml}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        mt + ph,
        ml + pw,
        mt + ph
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{ml}" y1="{mt}" x2="{ml}" y2="{:.2}" stroke="black"/>"#,
        mt + ph
    );

    // Rate ticks at 1, 2 and 5 times each decade.
    for decade in (xlo.floor() as i32)..=(xhi.ceil() as i32) {
        for m in [1.0, 2.0, 5.0] {
            let rate = m * 10f64.powi(decade);
            let lr = rate.log10();
            if lr < xlo || lr > xhi {
                continue;
            }
            let x = sx(rate);
            let _ = writeln!(
                s,
                r#"<line class="tick" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                mt + ph,
                mt + ph + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                mt + ph + 18.0,
                sig6(rate)
            );
        }
    }
    for i in 0..=5 {
        let q = ylo + (yhi - ylo) * i as f64 / 5.0;
        let y = sy(q);
        let _ = writeln!(
            s,
            r#"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{ml}" y2="{y:.2}" stroke="black"/>"#,
            ml - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.2}</text>"#,
            ml - 8.0,
            y + 4.0,
            q
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">bitrate (kbps, log scale)</text>"#,
        ml + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(&series[0].metric)
    );

    for (i, series) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .map(|&(r, q, _)| format!("{:.2},{:.2}", sx(r), sy(q)))
            .collect();
        let _ = writeln!(
            s,
            r#"<g class="series" data-variant="{}">"#,
            escape(&series.variant)
        );
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for &(r, q, ci) in &series.points {
            let (x, y1, y2) = (sx(r), sy(q + ci), sy(q - ci));
            let _ = writeln!(
                s,
                r#"<path class="errorbar" d="M{x:.2},{y1:.2}V{y2:.2}M{:.2},{y1:.2}H{:.2}M{:.2},{y2:.2}H{:.2}" stroke="{color}" fill="none"/>"#,
                x - 4.0,
                x + 4.0,
                x - 4.0,
                x + 4.0
            );
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sy(q)
            );
        }
        let ly = mt + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{color}">{}</text>"#,
            ml + 10.0,
            escape(&series.variant)
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}
