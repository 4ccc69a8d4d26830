//! Seeded synthetic opinion-score studies.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::subjective::ScoreMatrix;

#[derive(Clone, Debug)]
pub struct StudyParams {
    pub n_subjects: usize,
    pub n_stimuli: usize,
    /// Stimulus qualities are drawn uniformly from this range.
    pub psi_range: (f64, f64),
    pub bias_range: (f64, f64),
    pub nu_range: (f64, f64),
}

impl Default for StudyParams {
    fn default() -> Self {
        StudyParams {
            n_subjects: 42,
            n_stimuli: 48,
            psi_range: (25.0, 75.0),
            bias_range: (-10.0, 10.0),
            nu_range: (2.0, 8.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimulatedStudy {
    pub matrix: ScoreMatrix,
    pub psi: Vec<f64>,
    pub delta: Vec<f64>,
    pub nu: Vec<f64>,
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Draws `u = psi + delta + nu * Z`, clamped to [0, 100].
pub fn simulate_study<R: Rng>(rng: &mut R, p: &StudyParams) -> Result<SimulatedStudy> {
    let psi: Vec<f64> = (0..p.n_stimuli)
        .map(|_| uniform(rng, p.psi_range))
        .collect();
    let delta: Vec<f64> = (0..p.n_subjects)
        .map(|_| uniform(rng, p.bias_range))
        .collect();
    let nu: Vec<f64> = (0..p.n_subjects)
        .map(|_| uniform(rng, p.nu_range))
        .collect();
    let scores = (0..p.n_subjects)
        .map(|s| {
            (0..p.n_stimuli)
                .map(|e| {
                    let z: f64 = Normal::new(0.0, 1.0).unwrap().sample(rng);
                    Some((psi[e] + delta[s] + nu[s] * z).clamp(0.0, 100.0))
                })
                .collect()
        })
        .collect();
    let matrix = ScoreMatrix::new(
        (0..p.n_subjects).map(|s| format!("s{s:02}")).collect(),
        (0..p.n_stimuli).map(|e| format!("pvs{e:02}")).collect(),
        scores,
    )?;
    Ok(SimulatedStudy {
        matrix,
        psi,
        delta,
        nu,
    })
}

/// `n_consistent` raters with Gaussian noise of `noise` around a shared
/// consensus, plus one rater scoring uniformly at random. The random rater is
/// the last subject.
pub fn simulate_with_random_rater<R: Rng>(
    rng: &mut R,
    n_consistent: usize,
    n_stimuli: usize,
    noise: f64,
) -> Result<ScoreMatrix> {
    let consensus: Vec<f64> = (0..n_stimuli)
        .map(|_| rng.random_range(20.0..80.0))
        .collect();
    let normal = Normal::new(0.0, noise).unwrap();
    let mut scores: Vec<Vec<Option<f64>>> = (0..n_consistent)
        .map(|_| {
            consensus
                .iter()
                .map(|c| Some((c + normal.sample(rng)).clamp(0.0, 100.0)))
                .collect()
        })
        .collect();
    scores.push(
        (0..n_stimuli)
            .map(|_| Some(rng.random_range(0.0..=100.0)))
            .collect(),
    );
    ScoreMatrix::new(
        (0..=n_consistent).map(|s| format!("s{s:02}")).collect(),
        (0..n_stimuli).map(|e| format!("pvs{e:02}")).collect(),
        scores,
    )
}
