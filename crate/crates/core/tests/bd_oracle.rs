mod common;

use common::*;
use lambdatune::bd::{bd_quality, bd_rate, bitrate_savings, default_anchors};
use lambdatune::curves::{RdCurve, RdPoint};
use lambdatune::pchip::Pchip;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn bd_matches_dense_trapezoid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let (a, b) = random_pair(&mut rng);
        let r = bd_rate(&a, &b, true).unwrap().value;
        assert!((r - dense_bd_rate(&a, &b)).abs() < 1e-6, "bd_rate {r}");
        let q = bd_quality(&a, &b).unwrap().value;
        assert!(
            (q - dense_bd_quality(&a, &b)).abs() < 1e-6,
            "bd_quality {q}"
        );
    }
}

#[test]
fn reciprocity_and_antisymmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let (a, b) = random_pair(&mut rng);
        let ab = bd_rate(&a, &b, true).unwrap().value;
        let ba = bd_rate(&b, &a, true).unwrap().value;
        assert!(((1.0 + ab / 100.0) * (1.0 + ba / 100.0) - 1.0).abs() < 1e-9);
        let qab = bd_quality(&a, &b).unwrap().value;
        let qba = bd_quality(&b, &a).unwrap().value;
        assert!((qab + qba).abs() < 1e-9);
    }
}

#[test]
fn point_order_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let (a, b) = random_pair(&mut rng);
        let mut pts = b.points().to_vec();
        pts.shuffle(&mut rng);
        let shuffled = RdCurve::new(pts, "q").unwrap();
        assert_eq!(
            bd_rate(&a, &b, true).unwrap().value,
            bd_rate(&a, &shuffled, true).unwrap().value
        );
    }
}

#[test]
fn common_rate_scale_cancels() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let (a, b) = random_pair(&mut rng);
        let before = bd_rate(&a, &b, true).unwrap().value;
        let after = bd_rate(
            &a.scale_rates(3.7).unwrap(),
            &b.scale_rates(3.7).unwrap(),
            true,
        )
        .unwrap()
        .value;
        assert!((before - after).abs() < 1e-9);
    }
}

#[test]
fn constant_ratio_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..50 {
        let base = random_monotone_curve(&mut rng, 5);
        let pts = base
            .points()
            .iter()
            .zip([27u8, 39, 49, 59, 63].iter().rev())
            .map(|(p, &qp)| RdPoint::new(p.rate, p.quality).with_qp(qp))
            .collect();
        let a = RdCurve::new(pts, "q").unwrap();
        let b = a.scale_rates(0.9).unwrap();
        assert!((bd_rate(&a, &b, true).unwrap().value + 10.0).abs() < 1e-9);
        let s = bitrate_savings(&a, &b, &default_anchors(&a)).unwrap();
        assert_eq!(s.per_anchor.len(), 3);
        for (_, v) in &s.per_anchor {
            assert!((v + 10.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #[test]
    fn pchip_hits_knots_and_stays_monotone(
        steps in prop::collection::vec((0.1f64..3.0, 0.0f64..5.0), 2..9)
    ) {
        let mut xs = vec![0.0];
        let mut ys = vec![0.0];
        for (dx, dy) in &steps {
            xs.push(xs.last().unwrap() + dx);
            ys.push(ys.last().unwrap() + dy);
        }
        let f = Pchip::fit(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            prop_assert!((f.eval(*x).unwrap() - y).abs() < 1e-12);
        }
        let (lo, hi) = f.domain();
        let mut prev = f.eval(lo).unwrap();
        for i in 1..=1000 {
            let v = f.eval((lo + (hi - lo) * i as f64 / 1000.0).min(hi)).unwrap();
            prop_assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn cleanup_keeps_a_largest_monotone_subset(
        qualities in prop::collection::vec(0.0f64..10.0, 2..=10)
    ) {
        let n = qualities.len();
        let pts = qualities
            .iter()
            .enumerate()
            .map(|(i, &q)| RdPoint::new(100.0 * (i + 1) as f64, q))
            .collect();
        let curve = RdCurve::new(pts, "q").unwrap();
        let best = brute_force_max_monotone(&qualities);
        if best < 2 {
            prop_assert!(curve.enforce_monotone().is_err());
            return Ok(());
        }
        let clean = curve.enforce_monotone().unwrap();
        prop_assert!(clean.is_monotone());
        prop_assert_eq!(clean.len(), best);
        prop_assert!(clean.len() <= n);
        prop_assert_eq!(clean.enforce_monotone().unwrap(), clean);
    }
}
