use lambdatune::simulate::{simulate_study, simulate_with_random_rater, StudyParams};
use lambdatune::subjective::{
    bt500_screen, compute_dmos, compute_mos, recover_mle, recover_mle_with, Pairing,
    RecoveryMethod, RecoveryOptions, ScoreMatrix,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn study(seed: u64) -> lambdatune::simulate::SimulatedStudy {
    simulate_study(
        &mut ChaCha8Rng::seed_from_u64(seed),
        &StudyParams::default(),
    )
    .unwrap()
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn rebuild(m: &ScoreMatrix, subjects: &[usize], f: impl Fn(f64) -> f64) -> ScoreMatrix {
    ScoreMatrix::new(
        subjects.iter().map(|&s| m.subjects()[s].clone()).collect(),
        m.stimuli().to_vec(),
        subjects
            .iter()
            .map(|&s| (0..m.n_stimuli()).map(|e| m.score(s, e).map(&f)).collect())
            .collect(),
    )
    .unwrap()
}

#[test]
fn mos_ignores_subject_order() {
    let m = study(1).matrix;
    let mut order: Vec<usize> = (0..m.n_subjects()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(2));
    let a = compute_mos(&m).unwrap();
    let b = compute_mos(&rebuild(&m, &order, |v| v)).unwrap();
    for (x, y) in a.entries.iter().zip(&b.entries) {
        assert!((x.mos - y.mos).abs() < 1e-9);
        assert!((x.ci95 - y.ci95).abs() < 1e-9);
    }
}

#[test]
fn recovery_shifts_with_scores() {
    let m = study(3).matrix;
    let all: Vec<usize> = (0..m.n_subjects()).collect();
    let a = recover_mle(&m, RecoveryMethod::P913).unwrap();
    let b = recover_mle(&rebuild(&m, &all, |v| v + 7.0), RecoveryMethod::P913).unwrap();
    for (x, y) in a.psi.iter().zip(&b.psi) {
        assert!((y - x - 7.0).abs() < 1e-6);
    }
    for (x, y) in a.delta.iter().zip(&b.delta) {
        assert!((x - y).abs() < 1e-6);
    }
}

#[test]
fn loglik_never_decreases() {
    for seed in 0..10 {
        let model = recover_mle(&study(seed).matrix, RecoveryMethod::P910).unwrap();
        for w in model.loglik_trace.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0),
                "seed {seed}: {w:?}"
            );
        }
        let sum: f64 = model.delta.iter().sum();
        assert!(sum.abs() < 1e-9);
    }
}

#[test]
fn shared_inconsistency_on_complete_data_is_mos() {
    let m = study(4).matrix;
    let opts = RecoveryOptions {
        shared_nu: true,
        ..RecoveryOptions::new(RecoveryMethod::P913)
    };
    let model = recover_mle_with(&m, &opts).unwrap();
    let mos = compute_mos(&m).unwrap();
    for (p, e) in model.psi.iter().zip(&mos.entries) {
        assert!((p - e.mos).abs() < 1e-9);
    }
}

#[test]
fn recovery_beats_plain_mos() {
    let mut wins = 0;
    for seed in 0..20 {
        let s = study(100 + seed);
        let model = recover_mle(&s.matrix, RecoveryMethod::P913).unwrap();
        let mos: Vec<f64> = compute_mos(&s.matrix)
            .unwrap()
            .entries
            .iter()
            .map(|e| e.mos)
            .collect();
        if rmse(&model.psi, &s.psi) < rmse(&mos, &s.psi) {
            wins += 1;
        }
    }
    assert!(wins >= 18, "recovery won {wins}/20");
}

#[test]
fn dmos_interval_covers_both_parts() {
    let m = study(5).matrix;
    let mos = compute_mos(&m).unwrap();
    let mut pairing = Pairing::new();
    for i in 1..m.n_stimuli() {
        pairing.insert(m.stimuli()[i].clone(), m.stimuli()[0].clone());
    }
    let dmos = compute_dmos(&mos, &pairing).unwrap();
    assert_eq!(dmos.entries.len(), m.n_stimuli() - 1);
    let src = &mos.entries[0];
    for d in &dmos.entries {
        let dist = mos.get(&d.pvs_id).unwrap();
        assert!((d.mos - (100.0 - (src.mos - dist.mos))).abs() < 1e-12);
        assert!(d.ci95 >= src.ci95.max(dist.ci95));
        assert!(d.ci95 <= src.ci95 + dist.ci95 + 1e-12);
    }
}

#[test]
fn screening_catches_random_rater() {
    let mut caught = 0;
    for seed in 0..50 {
        let m =
            simulate_with_random_rater(&mut ChaCha8Rng::seed_from_u64(seed), 41, 96, 4.0).unwrap();
        if bt500_screen(&m)
            .unwrap()
            .rejected()
            .contains(&m.subjects()[41].as_str())
        {
            caught += 1;
        }
    }
    assert!(caught >= 47, "caught {caught}/50");
}

// The 2s rule flags a Gaussian rater now and then, so only require rarity.
#[test]
fn screening_rarely_flags_gaussian_raters() {
    let flagged: usize = (0..40)
        .map(|seed| bt500_screen(&study(seed).matrix).unwrap().rejected().len())
        .sum();
    assert!(flagged <= 6, "{flagged} rejections over 40 clean studies");
}
