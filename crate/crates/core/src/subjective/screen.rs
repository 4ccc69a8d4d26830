use super::ScoreMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SubjectScreening {
    pub subject: String,
    /// Scores above the upper threshold.
    pub p: usize,
    /// Scores below the lower threshold.
    pub q: usize,
    pub n_scored: usize,
    /// (P + Q) / N.
    pub outlier_ratio: f64,
    /// |P - Q| / (P + Q), zero when P + Q = 0.
    pub asymmetry: f64,
    pub rejected: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScreeningReport {
    pub subjects: Vec<SubjectScreening>,
}

impl ScreeningReport {
    pub fn rejected(&self) -> Vec<&str> {
        self.subjects
            .iter()
            .filter(|s| s.rejected)
            .map(|s| s.subject.as_str())
            .collect()
    }
}

const OUTLIER_FRACTION: f64 = 0.05;
const ASYMMETRY_LIMIT: f64 = 0.3;

/// Kurtosis-gated observer screening.
///
/// Per stimulus the threshold is 2s when the score distribution is roughly
/// normal (2 <= beta2 <= 4) and sqrt(20)s otherwise. A subject is rejected
/// when more than 5% of their scores fall outside the thresholds and the
/// excursions are roughly symmetric, i.e. noise rather than a steady bias.
pub fn bt500_screen(matrix: &ScoreMatrix) -> Result<ScreeningReport> {
    if matrix.n_subjects() < 3 {
        return Err(Error::invalid("screening needs at least 3 subjects"));
    }
    let mut p = vec![0usize; matrix.n_subjects()];
    let mut q = vec![0usize; matrix.n_subjects()];
    let mut n_scored = vec![0usize; matrix.n_subjects()];

    for e in 0..matrix.n_stimuli() {
        let col: Vec<(usize, f64)> = matrix.column(e).collect();
        let n = col.len() as f64;
        let mean = col.iter().map(|(_, v)| v).sum::<f64>() / n;
        let m2 = col.iter().map(|(_, v)| (v - mean).powi(2)).sum::<f64>() / n;
        let m4 = col.iter().map(|(_, v)| (v - mean).powi(4)).sum::<f64>() / n;
        let sd = (col.iter().map(|(_, v)| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        // Zero spread: every rater agrees, nobody is an outlier.
        let beta2 = if m2 > 0.0 { m4 / (m2 * m2) } else { 3.0 };
        let threshold = if (2.0..=4.0).contains(&beta2) {
            2.0 * sd
        } else {
            20f64.sqrt() * sd
        };
        for &(s, v) in &col {
            n_scored[s] += 1;
            if v > mean + threshold {
                p[s] += 1;
            } else if v < mean - threshold {
                q[s] += 1;
            }
        }
    }

    let subjects = matrix
        .subjects()
        .iter()
        .enumerate()
        .map(|(s, id)| {
            let pq = p[s] + q[s];
            let outlier_ratio = pq as f64 / n_scored[s] as f64;
            let asymmetry = if pq == 0 {
                0.0
            } else {
                p[s].abs_diff(q[s]) as f64 / pq as f64
            };
            SubjectScreening {
                subject: id.clone(),
                p: p[s],
                q: q[s],
                n_scored: n_scored[s],
                outlier_ratio,
                asymmetry,
                rejected: outlier_ratio > OUTLIER_FRACTION && asymmetry < ASYMMETRY_LIMIT,
            }
        })
        .collect();
    Ok(ScreeningReport { subjects })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> ScoreMatrix {
        let ns = rows.len();
        let ne = rows[0].len();
        ScoreMatrix::new(
            (0..ns).map(|i| format!("s{i}")).collect(),
            (0..ne).map(|i| format!("e{i}")).collect(),
            rows.into_iter()
                .map(|r| r.into_iter().map(Some).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_scorers_pass() {
        let row: Vec<f64> = (0..20).map(|e| 20.0 + 3.0 * e as f64).collect();
        let r = bt500_screen(&matrix(vec![row; 10])).unwrap();
        assert!(r.rejected().is_empty());
    }

    #[test]
    fn steady_offset_is_not_rejected() {
        let row: Vec<f64> = (0..48).map(|e| 20.0 + e as f64).collect();
        let mut rows = vec![row.clone(); 41];
        rows.push(row.iter().map(|v| v + 5.0).collect());
        let r = bt500_screen(&matrix(rows)).unwrap();
        let biased = &r.subjects[41];
        assert_eq!(biased.p, 48);
        assert_eq!(biased.asymmetry, 1.0);
        assert!(!biased.rejected);
        assert!(r.rejected().is_empty());
    }

    #[test]
    fn alternating_outlier_is_rejected() {
        // 41 raters with bounded jitter plus one rater swinging +-10.
        let mut rows: Vec<Vec<f64>> = (0..41)
            .map(|s| {
                (0..20)
                    .map(|e| 30.0 + 2.0 * e as f64 + ((s * 7 + e * 13) % 9) as f64 - 4.0)
                    .collect()
            })
            .collect();
        rows.push(
            (0..20)
                .map(|e| 30.0 + 2.0 * e as f64 + if e % 2 == 0 { 10.0 } else { -10.0 })
                .collect(),
        );
        let r = bt500_screen(&matrix(rows)).unwrap();
        assert_eq!(r.rejected(), vec!["s41"]);
    }

    #[test]
    fn needs_three_subjects() {
        assert!(bt500_screen(&matrix(vec![vec![1.0, 2.0]; 2])).is_err());
    }
}
