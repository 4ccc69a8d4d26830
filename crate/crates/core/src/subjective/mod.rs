//! Opinion-score statistics: MOS/DMOS with confidence intervals, observer
//! screening and recovery of subject bias/inconsistency.

mod io;
mod mle;
mod screen;

use std::collections::{BTreeMap, HashMap};

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub use io::{read_pairing, read_scores, write_model, write_mos_table, write_screening};
pub use mle::{
    recover_mle, recover_mle_with, RecoveryMethod, RecoveryOptions, SubjectModel, MAX_SWEEPS,
    NU_FLOOR,
};
pub use screen::{bt500_screen, ScreeningReport, SubjectScreening};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Source,
    Distorted,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StimulusInfo {
    pub clip: Option<String>,
    pub qp: Option<u8>,
    pub variant: Option<String>,
    pub role: Option<Role>,
}

/// Subject x stimulus opinion scores on [0, 100]; `None` marks a missing
/// rating.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    subjects: Vec<String>,
    stimuli: Vec<String>,
    /// Indexed `[subject][stimulus]`.
    scores: Vec<Vec<Option<f64>>>,
    info: Vec<StimulusInfo>,
    subject_attributes: Vec<BTreeMap<String, String>>,
}

impl ScoreMatrix {
    pub fn new(
        subjects: Vec<String>,
        stimuli: Vec<String>,
        scores: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        let info = vec![StimulusInfo::default(); stimuli.len()];
        let attrs = vec![BTreeMap::new(); subjects.len()];
        Self::with_metadata(subjects, stimuli, scores, info, attrs)
    }

    pub fn with_metadata(
        subjects: Vec<String>,
        stimuli: Vec<String>,
        scores: Vec<Vec<Option<f64>>>,
        info: Vec<StimulusInfo>,
        subject_attributes: Vec<BTreeMap<String, String>>,
    ) -> Result<Self> {
        if scores.len() != subjects.len() || subject_attributes.len() != subjects.len() {
            return Err(Error::invalid("score rows do not match subject list"));
        }
        if info.len() != stimuli.len() || scores.iter().any(|row| row.len() != stimuli.len()) {
            return Err(Error::invalid("score columns do not match stimulus list"));
        }
        for (s, row) in scores.iter().enumerate() {
            for v in row.iter().flatten() {
                if !v.is_finite() || !(0.0..=100.0).contains(v) {
                    return Err(Error::invalid(format!(
                        "score {v} from subject `{}` outside [0, 100]",
                        subjects[s]
                    )));
                }
            }
            if row.iter().all(Option::is_none) {
                return Err(Error::invalid(format!(
                    "subject `{}` has no scores",
                    subjects[s]
                )));
            }
        }
        for (e, id) in stimuli.iter().enumerate() {
            if scores.iter().filter(|row| row[e].is_some()).count() < 2 {
                return Err(Error::TooFewRaters(id.clone()));
            }
        }
        Ok(ScoreMatrix {
            subjects,
            stimuli,
            scores,
            info,
            subject_attributes,
        })
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn stimuli(&self) -> &[String] {
        &self.stimuli
    }

    pub fn stimulus_info(&self) -> &[StimulusInfo] {
        &self.info
    }

    pub fn subject_attribute(&self, subject: usize, key: &str) -> Option<&str> {
        self.subject_attributes[subject]
            .get(key)
            .map(String::as_str)
    }

    pub fn score(&self, subject: usize, stimulus: usize) -> Option<f64> {
        self.scores[subject][stimulus]
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_stimuli(&self) -> usize {
        self.stimuli.len()
    }

    /// Present scores for one stimulus as `(subject index, score)`.
    pub fn column(&self, stimulus: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.scores
            .iter()
            .enumerate()
            .filter_map(move |(s, row)| row[stimulus].map(|v| (s, v)))
    }

    /// Present scores for one subject as `(stimulus index, score)`.
    pub fn row(&self, subject: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.scores[subject]
            .iter()
            .enumerate()
            .filter_map(|(e, v)| v.map(|v| (e, v)))
    }

    /// Sub-matrix of the subjects for which `keep` holds.
    pub fn retain_subjects(&self, mut keep: impl FnMut(usize, &str) -> bool) -> Result<Self> {
        let idx: Vec<usize> = (0..self.subjects.len())
            .filter(|&s| keep(s, &self.subjects[s]))
            .collect();
        Self::with_metadata(
            idx.iter().map(|&s| self.subjects[s].clone()).collect(),
            self.stimuli.clone(),
            idx.iter().map(|&s| self.scores[s].clone()).collect(),
            self.info.clone(),
            idx.iter()
                .map(|&s| self.subject_attributes[s].clone())
                .collect(),
        )
    }

    /// Distinct values of a subject attribute, in first-seen order.
    pub fn cohorts(&self, key: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for attrs in &self.subject_attributes {
            if let Some(v) = attrs.get(key) {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MosEntry {
    pub pvs_id: String,
    pub mos: f64,
    /// Half-width of the 95% confidence interval.
    pub ci95: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MosTable {
    pub entries: Vec<MosEntry>,
}

impl MosTable {
    pub fn get(&self, pvs_id: &str) -> Option<&MosEntry> {
        self.entries.iter().find(|e| e.pvs_id == pvs_id)
    }
}

/// Two-sided 95% Student-t critical value.
pub fn t_critical_95(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("df >= 1")
        .inverse_cdf(0.975)
}

/// Per-stimulus mean over present scores, with a Student-t 95% interval.
pub fn compute_mos(matrix: &ScoreMatrix) -> Result<MosTable> {
    let mut entries = Vec::with_capacity(matrix.n_stimuli());
    for (e, id) in matrix.stimuli().iter().enumerate() {
        let vals: Vec<f64> = matrix.column(e).map(|(_, v)| v).collect();
        let n = vals.len();
        if n < 2 {
            return Err(Error::TooFewRaters(id.clone()));
        }
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let ci95 = t_critical_95(n - 1) * var.sqrt() / (n as f64).sqrt();
        entries.push(MosEntry {
            pvs_id: id.clone(),
            mos: mean,
            ci95,
            n,
        });
    }
    Ok(MosTable { entries })
}

/// Map from distorted stimulus to its source stimulus.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Pairing {
    map: BTreeMap<String, String>,
}

impl Pairing {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, dist: impl Into<String>, src: impl Into<String>) {
        self.map.insert(dist.into(), src.into());
    }

    pub fn source_of(&self, dist: &str) -> Option<&str> {
        self.map.get(dist).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Every stimulus marked distorted must have a pairing row.
    pub fn check_covers(&self, matrix: &ScoreMatrix) -> Result<()> {
        for (id, info) in matrix.stimuli().iter().zip(matrix.stimulus_info()) {
            if info.role == Some(Role::Distorted) && !self.map.contains_key(id) {
                return Err(Error::MissingPair(id.clone()));
            }
        }
        Ok(())
    }
}

/// `DMOS = 100 - (MOS_src - MOS_dist)` for every paired distorted stimulus,
/// in table order. Interval half-widths add in quadrature.
pub fn compute_dmos(mos: &MosTable, pairing: &Pairing) -> Result<MosTable> {
    let by_id: HashMap<&str, &MosEntry> =
        mos.entries.iter().map(|e| (e.pvs_id.as_str(), e)).collect();
    for dist in pairing.map.keys() {
        if !by_id.contains_key(dist.as_str()) {
            return Err(Error::invalid(format!(
                "pairing names unknown stimulus `{dist}`"
            )));
        }
    }
    let mut entries = Vec::with_capacity(pairing.len());
    for dist in &mos.entries {
        let Some(src_id) = pairing.source_of(&dist.pvs_id) else {
            continue;
        };
        let src = by_id
            .get(src_id)
            .ok_or_else(|| Error::MissingPair(dist.pvs_id.clone()))?;
        entries.push(MosEntry {
            pvs_id: dist.pvs_id.clone(),
            mos: 100.0 - (src.mos - dist.mos),
            ci95: src.ci95.hypot(dist.ci95),
            n: src.n.min(dist.n),
        });
    }
    Ok(MosTable { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn unanimous_raters_have_zero_ci() {
        let m = ScoreMatrix::new(ids("s", 4), ids("e", 2), vec![vec![Some(70.0); 2]; 4]).unwrap();
        let t = compute_mos(&m).unwrap();
        assert_eq!(t.entries[0].mos, 70.0);
        assert_eq!(t.entries[0].ci95, 0.0);
    }

    #[test]
    fn two_raters_use_t_with_one_df() {
        // Published t-table: t(0.975, 1) = 12.706.
        assert!((t_critical_95(1) - 12.706).abs() < 5e-4);
        let m = ScoreMatrix::new(
            ids("s", 2),
            ids("e", 1),
            vec![vec![Some(60.0)], vec![Some(80.0)]],
        )
        .unwrap();
        let t = compute_mos(&m).unwrap();
        assert_eq!(t.entries[0].mos, 70.0);
        let expected = t_critical_95(1) * (200f64).sqrt() / 2f64.sqrt();
        assert!((t.entries[0].ci95 - expected).abs() < 1e-9);
        assert!((t.entries[0].ci95 - 127.06).abs() < 0.01);
    }

    #[test]
    fn missing_entry_only_affects_its_stimulus() {
        let m = ScoreMatrix::new(
            ids("s", 3),
            ids("e", 2),
            vec![
                vec![Some(50.0), Some(40.0)],
                vec![Some(60.0), None],
                vec![Some(70.0), Some(44.0)],
            ],
        )
        .unwrap();
        let t = compute_mos(&m).unwrap();
        assert_eq!(t.entries[0].n, 3);
        assert_eq!(t.entries[1].n, 2);
        assert_eq!(t.entries[1].mos, 42.0);
    }

    #[test]
    fn matrix_validation() {
        assert!(ScoreMatrix::new(
            ids("s", 2),
            ids("e", 1),
            vec![vec![Some(101.0)], vec![Some(1.0)]]
        )
        .is_err());
        assert!(matches!(
            ScoreMatrix::new(ids("s", 2), ids("e", 1), vec![vec![Some(1.0)], vec![None]]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            ScoreMatrix::new(
                ids("s", 2),
                ids("e", 2),
                vec![vec![Some(1.0), Some(3.0)], vec![None, Some(2.0)]]
            ),
            Err(Error::TooFewRaters(_))
        ));
    }

    fn table(rows: &[(&str, f64, f64)]) -> MosTable {
        MosTable {
            entries: rows
                .iter()
                .map(|&(id, mos, ci95)| MosEntry {
                    pvs_id: id.into(),
                    mos,
                    ci95,
                    n: 10,
                })
                .collect(),
        }
    }

    #[test]
    fn dmos_formula() {
        let t = table(&[
            ("src", 90.0, 3.0),
            ("a", 70.0, 4.0),
            ("b", 90.0, 0.0),
            ("c", 95.0, 1.0),
        ]);
        let mut p = Pairing::new();
        for d in ["a", "b", "c"] {
            p.insert(d, "src");
        }
        let d = compute_dmos(&t, &p).unwrap();
        assert_eq!(d.get("a").unwrap().mos, 80.0);
        assert_eq!(d.get("a").unwrap().ci95, 5.0);
        assert_eq!(d.get("b").unwrap().mos, 100.0);
        assert_eq!(d.get("c").unwrap().mos, 105.0);
        assert!(d.get("src").is_none());

        let t2 = table(&[("src", 80.0, 1.0), ("x", 95.0, 1.0)]);
        let mut p2 = Pairing::new();
        p2.insert("x", "src");
        assert_eq!(compute_dmos(&t2, &p2).unwrap().entries[0].mos, 115.0);
    }

    #[test]
    fn dmos_missing_source() {
        let t = table(&[("a", 70.0, 4.0)]);
        let mut p = Pairing::new();
        p.insert("a", "gone");
        assert!(matches!(compute_dmos(&t, &p), Err(Error::MissingPair(id)) if id == "a"));
    }
}
