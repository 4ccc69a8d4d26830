//! CSV ingestion of raw scores and pairing manifests, and table writers.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::{
    MosEntry, MosTable, Pairing, Role, ScoreMatrix, ScreeningReport, StimulusInfo, SubjectModel,
};
use crate::error::{Error, Result};
use crate::format::sig6;

const STIMULUS_COLUMNS: [&str; 4] = ["clip", "qp", "variant", "role"];

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::parse(path, 1, format!("missing column `{name}`")))
}

/// Reads `subject_id,pvs_id,score[,clip,qp,variant,role,...]`.
///
/// Columns beyond the recognised ones become per-subject attributes (for
/// cohort splitting). An empty score cell is a missing rating.
pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoreMatrix> {
    let path = path.as_ref();
    let mut rdr = open_reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let subject_col = column(&headers, "subject_id", path)?;
    let pvs_col = column(&headers, "pvs_id", path)?;
    let score_col = column(&headers, "score", path)?;
    let optional: HashMap<&str, usize> = STIMULUS_COLUMNS
        .iter()
        .filter_map(|&c| headers.iter().position(|h| h == c).map(|i| (c, i)))
        .collect();
    let attr_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, h)| {
            ![subject_col, pvs_col, score_col].contains(i) && !STIMULUS_COLUMNS.contains(h)
        })
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut subjects: Vec<String> = Vec::new();
    let mut subject_idx: HashMap<String, usize> = HashMap::new();
    let mut attrs: Vec<BTreeMap<String, String>> = Vec::new();
    let mut stimuli: Vec<String> = Vec::new();
    let mut stimulus_idx: HashMap<String, usize> = HashMap::new();
    let mut info: Vec<StimulusInfo> = Vec::new();
    let mut cells: HashMap<(usize, usize), f64> = HashMap::new();

    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let subject = field(subject_col);
        let pvs = field(pvs_col);
        if subject.is_empty() || pvs.is_empty() {
            return Err(Error::parse(path, line, "empty subject_id or pvs_id"));
        }
        let s = *subject_idx.entry(subject.to_string()).or_insert_with(|| {
            subjects.push(subject.to_string());
            attrs.push(BTreeMap::new());
            subjects.len() - 1
        });
        for (i, name) in &attr_cols {
            let v = field(*i);
            if !v.is_empty() {
                attrs[s]
                    .entry(name.clone())
                    .or_insert_with(|| v.to_string());
            }
        }
        let e = *stimulus_idx.entry(pvs.to_string()).or_insert_with(|| {
            stimuli.push(pvs.to_string());
            info.push(StimulusInfo::default());
            stimuli.len() - 1
        });
        let meta = &mut info[e];
        if let Some(&i) = optional.get("clip") {
            set_once(&mut meta.clip, field(i), path, line)?;
        }
        if let Some(&i) = optional.get("variant") {
            set_once(&mut meta.variant, field(i), path, line)?;
        }
        if let Some(&i) = optional.get("qp") {
            let v = field(i);
            if !v.is_empty() {
                let qp: u8 = v
                    .parse()
                    .map_err(|_| Error::parse(path, line, format!("bad qp `{v}`")))?;
                meta.qp.get_or_insert(qp);
            }
        }
        if let Some(&i) = optional.get("role") {
            match field(i) {
                "" => {}
                "src" => {
                    meta.role.get_or_insert(Role::Source);
                }
                "dist" => {
                    meta.role.get_or_insert(Role::Distorted);
                }
                other => {
                    return Err(Error::parse(
                        path,
                        line,
                        format!("role `{other}` is not src/dist"),
                    ))
                }
            }
        }

        let raw = field(score_col);
        if raw.is_empty() {
            continue;
        }
        let score: f64 = raw
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad score `{raw}`")))?;
        if !(0.0..=100.0).contains(&score) {
            return Err(Error::parse(
                path,
                line,
                format!("score {score} outside [0, 100]"),
            ));
        }
        if cells.insert((s, e), score).is_some() {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate score for subject `{subject}` on `{pvs}`"),
            ));
        }
    }

    let scores = (0..subjects.len())
        .map(|s| {
            (0..stimuli.len())
                .map(|e| cells.get(&(s, e)).copied())
                .collect()
        })
        .collect();
    ScoreMatrix::with_metadata(subjects, stimuli, scores, info, attrs)
}

fn set_once(slot: &mut Option<String>, value: &str, path: &Path, line: u64) -> Result<()> {
    if value.is_empty() {
        return Ok(());
    }
    match slot {
        Some(prev) if prev != value => Err(Error::parse(
            path,
            line,
            format!("conflicting stimulus metadata `{prev}` vs `{value}`"),
        )),
        Some(_) => Ok(()),
        None => {
            *slot = Some(value.to_string());
            Ok(())
        }
    }
}

/// Reads `dist_pvs_id,src_pvs_id`.
pub fn read_pairing(path: impl AsRef<Path>) -> Result<Pairing> {
    let path = path.as_ref();
    let mut rdr = open_reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let dist_col = column(&headers, "dist_pvs_id", path)?;
    let src_col = column(&headers, "src_pvs_id", path)?;
    let mut pairing = Pairing::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let (dist, src) = (
            record.get(dist_col).unwrap_or(""),
            record.get(src_col).unwrap_or(""),
        );
        if dist.is_empty() || src.is_empty() {
            return Err(Error::parse(path, line, "empty pairing field"));
        }
        if pairing.source_of(dist).is_some() {
            return Err(Error::parse(path, line, format!("`{dist}` paired twice")));
        }
        pairing.insert(dist, src);
    }
    Ok(pairing)
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn finish(path: &Path, mut w: csv::Writer<std::fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// `pvs_id,mos,ci95,n`; `value_column` renames the second column.
pub fn write_mos_table(path: impl AsRef<Path>, table: &MosTable, value_column: &str) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let io = |e| csv_error(path, e);
    w.write_record(["pvs_id", value_column, "ci95", "n"])
        .map_err(io)?;
    for e in &table.entries {
        w.write_record([e.pvs_id.clone(), sig6(e.mos), sig6(e.ci95), e.n.to_string()])
            .map_err(io)?;
    }
    finish(path, w)
}

/// Writes `pvs_id,psi,ci95` and `subject_id,delta,nu`.
pub fn write_model(
    psi_path: impl AsRef<Path>,
    subjects_path: impl AsRef<Path>,
    matrix: &ScoreMatrix,
    model: &SubjectModel,
) -> Result<()> {
    let path = psi_path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["pvs_id", "psi", "ci95"])
        .map_err(|e| csv_error(path, e))?;
    for (e, id) in matrix.stimuli().iter().enumerate() {
        w.write_record([id.clone(), sig6(model.psi[e]), sig6(model.ci95[e])])
            .map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)?;

    let path = subjects_path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["subject_id", "delta", "nu"])
        .map_err(|e| csv_error(path, e))?;
    for (s, id) in matrix.subjects().iter().enumerate() {
        w.write_record([id.clone(), sig6(model.delta[s]), sig6(model.nu[s])])
            .map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

pub fn write_screening(path: impl AsRef<Path>, report: &ScreeningReport) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let io = |e| csv_error(path, e);
    w.write_record([
        "subject_id",
        "p",
        "q",
        "n",
        "outlier_ratio",
        "asymmetry",
        "rejected",
    ])
    .map_err(io)?;
    for s in &report.subjects {
        w.write_record([
            s.subject.clone(),
            s.p.to_string(),
            s.q.to_string(),
            s.n_scored.to_string(),
            sig6(s.outlier_ratio),
            sig6(s.asymmetry),
            s.rejected.to_string(),
        ])
        .map_err(io)?;
    }
    finish(path, w)
}

impl SubjectModel {
    /// Recovered qualities as a table, so DMOS can be taken after recovery.
    pub fn as_mos_table(&self, matrix: &ScoreMatrix) -> MosTable {
        MosTable {
            entries: matrix
                .stimuli()
                .iter()
                .enumerate()
                .map(|(e, id)| MosEntry {
                    pvs_id: id.clone(),
                    mos: self.psi[e],
                    ci95: self.ci95[e],
                    n: matrix.column(e).count(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_scores_with_metadata_and_attributes() {
        let f = file(
            "subject_id,pvs_id,score,clip,qp,variant,role,cohort\n\
             a,src1,90,c1,,,src,expert\n\
             a,d1,70,c1,27,opt,dist,expert\n\
             b,src1,88,c1,,,src,naive\n\
             b,d1,,c1,27,opt,dist,naive\n\
             c,src1,91,c1,,,src,naive\n\
             c,d1,72,c1,27,opt,dist,naive\n",
        );
        let m = read_scores(f.path()).unwrap();
        assert_eq!(m.subjects(), ["a", "b", "c"]);
        assert_eq!(m.stimuli(), ["src1", "d1"]);
        assert_eq!(m.score(1, 1), None);
        assert_eq!(m.stimulus_info()[1].qp, Some(27));
        assert_eq!(m.stimulus_info()[1].role, Some(Role::Distorted));
        assert_eq!(m.subject_attribute(0, "cohort"), Some("expert"));
        assert_eq!(m.cohorts("cohort"), ["expert", "naive"]);
    }

    #[test]
    fn malformed_score_reports_line() {
        let f = file("subject_id,pvs_id,score\na,x,50\nb,x,abc\n");
        match read_scores(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let f = file("subject_id,pvs_id\na,x\n");
        assert!(matches!(
            read_scores(f.path()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn reads_pairing() {
        let f = file("dist_pvs_id,src_pvs_id\nd1,s1\nd2,s1\n");
        let p = read_pairing(f.path()).unwrap();
        assert_eq!(p.source_of("d2"), Some("s1"));
        let f = file("dist_pvs_id,src_pvs_id\nd1,s1\nd1,s2\n");
        assert!(matches!(
            read_pairing(f.path()),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
