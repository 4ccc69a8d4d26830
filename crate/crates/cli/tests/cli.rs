use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

fn lambdatune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lambdatune"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn curve(dir: &Path, name: &str, points: &[(f64, f64, u8)]) -> PathBuf {
    let pts: Vec<String> = points
        .iter()
        .map(|(r, q, qp)| format!(r#"{{"rate_kbps": {r}, "quality": {q}, "qp": {qp}}}"#))
        .collect();
    let path = dir.join(name);
    std::fs::write(
        &path,
        format!(r#"{{"metric": "m", "points": [{}]}}"#, pts.join(",")),
    )
    .unwrap();
    path
}

const BASE: [(f64, f64, u8); 4] = [
    (4000.0, 40.0, 27),
    (2000.0, 37.0, 39),
    (1000.0, 33.5, 49),
    (500.0, 30.0, 59),
];

#[test]
fn optimize_single_clip_reports_negative_cost() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = data().join("config.toml");
    let o = lambdatune(&[
        "optimize",
        "aurora",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("aurora.result.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["cost_bdrate_pct"].as_f64().unwrap() < 0.0);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["exit_code"], 0);
    for out in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(out.as_str().unwrap()).exists());
    }
}

#[test]
fn optimize_flags_iteration_cap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[optimizer]\nmax_iters = 1\n[backend]\nkind = \"synthetic\"\n[[clip]]\nid = \"a\"\n",
    )
    .unwrap();
    let o = lambdatune(&["optimize", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn optimize_config_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = lambdatune(&[
        "optimize",
        "--config",
        "/no/such/config.toml",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));

    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[backend]\nkind = \"process\"\nencode = [\"no-such-encoder-xyz\", \"{input}\"]\n\
         metric = [\"true\"]\n[[clip]]\nid = \"a\"\n",
    )
    .unwrap();
    let o = lambdatune(&["optimize", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no-such-encoder-xyz"), "{}", stderr(&o));
}

#[test]
fn bd_identical_and_scaled() {
    let dir = tempfile::tempdir().unwrap();
    let a = curve(dir.path(), "a.json", &BASE);
    let scaled: Vec<_> = BASE.iter().map(|&(r, q, qp)| (r * 0.9, q, qp)).collect();
    let b = curve(dir.path(), "b.json", &scaled);
    let out = dir.path().join("o");

    let o = lambdatune(&["bd", s(&a), s(&a), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let row = String::from_utf8(o.stdout).unwrap();
    let values: Vec<&str> = row.lines().nth(1).unwrap().split(',').skip(2).collect();
    assert!(values.iter().all(|v| *v == "0"), "{row}");

    let o = lambdatune(&["bd", s(&a), s(&b), "--out", s(&out)]);
    let row = String::from_utf8(o.stdout).unwrap();
    let fields: Vec<&str> = row.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[2], "-10");
    assert!(fields[4..].iter().all(|v| *v == "-10"), "{row}");
}

#[test]
fn bd_disjoint_fails() {
    let dir = tempfile::tempdir().unwrap();
    let a = curve(dir.path(), "a.json", &BASE);
    let far: Vec<_> = BASE.iter().map(|&(r, q, qp)| (r, q + 50.0, qp)).collect();
    let b = curve(dir.path(), "b.json", &far);
    let o = lambdatune(&["bd", s(&a), s(&b), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("overlap"));
}

#[test]
fn scores_screen_and_recover() {
    let dir = tempfile::tempdir().unwrap();
    let d = data();
    let o = lambdatune(&[
        "scores",
        s(&d.join("scores.csv")),
        "--pairing",
        s(&d.join("pairing.csv")),
        "--screen",
        "--cohort",
        "cohort",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("rejected: none"));
    for f in [
        "mos.csv",
        "dmos.csv",
        "mos_expert.csv",
        "dmos_non-expert.csv",
        "screening.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    let o = lambdatune(&[
        "scores",
        s(&d.join("bias/scores.csv")),
        "--recover",
        "p913",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let read = |p: PathBuf| -> Vec<f64> {
        let mut r = csv::Reader::from_path(p).unwrap();
        r.records()
            .map(|rec| rec.unwrap()[1].parse().unwrap())
            .collect()
    };
    let got = read(dir.path().join("subjects.csv"));
    let truth = read(d.join("bias/truth_subjects.csv"));
    for (g, t) in got.iter().zip(&truth) {
        assert!((g - t).abs() < 0.1, "{g} vs {t}");
    }
}

#[test]
fn scores_input_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = data();
    let pairing = std::fs::read_to_string(d.join("pairing.csv")).unwrap();
    let partial: String = pairing
        .lines()
        .filter(|l| !l.starts_with("aurora_tuned_qp39"))
        .map(|l| format!("{l}\n"))
        .collect();
    let p = dir.path().join("pairing.csv");
    std::fs::write(&p, partial).unwrap();
    let o = lambdatune(&[
        "scores",
        s(&d.join("scores.csv")),
        "--pairing",
        s(&p),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("aurora_tuned_qp39"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "subject_id,pvs_id,score\na,x,50\na,y,fifty\n").unwrap();
    let o = lambdatune(&["scores", s(&bad), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(":3:"), "{}", stderr(&o));
}

#[test]
fn correlate_mapping_and_joins() {
    let dir = tempfile::tempdir().unwrap();
    let metrics = dir.path().join("metrics.csv");
    let subj = dir.path().join("mos.csv");
    let mut m = String::from("pvs_id,metric\n");
    let mut y = String::from("pvs_id,mos\n");
    for i in 0..30 {
        let x = i as f64 / 3.0;
        let v = 10.0 + 80.0 / (1.0 + (-(x - 5.0)).exp()) + if i % 2 == 0 { 0.7 } else { -0.7 };
        m.push_str(&format!("p{i},{x}\n"));
        y.push_str(&format!("p{i},{v}\n"));
    }
    std::fs::write(&metrics, m).unwrap();
    std::fs::write(&subj, y).unwrap();
    let plcc = |flag: &str| -> f64 {
        let o = lambdatune(&[
            "correlate",
            s(&metrics),
            s(&subj),
            flag,
            "--out",
            s(dir.path()),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = String::from_utf8(o.stdout).unwrap();
        text.lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(plcc("--map") >= plcc("--no-map"));

    let other = dir.path().join("other.csv");
    std::fs::write(&other, "pvs_id,mos\nq1,1\nq2,2\nq3,3\n").unwrap();
    let o = lambdatune(&["correlate", s(&metrics), s(&other), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_input_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = lambdatune(&["report", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let a = curve(dir.path(), "a.json", &BASE);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = lambdatune(&["report", s(&a), "--out", s(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(1));
}
