mod common;

use common::enumerate_segmentation;
use tsrecon::segmentation::{mdl_score, segment};
use tsrecon::synthetic::piecewise_ar;

#[test]
fn dynamic_program_equals_enumeration() {
    let cases: [(usize, u64); 4] = [(120, 1), (160, 2), (200, 3), (90, 4)];
    for (n, seed) in cases {
        let cut = n * 3 / 5;
        let s = piecewise_ar(&[(cut, vec![0.7], 1.0), (n - cut, vec![-0.4], 2.5)], seed).unwrap();
        let dp = segment(&s, 2, 2, 10).unwrap();
        let (bps, orders, score) = enumerate_segmentation(&s, 2, 2, 10);
        assert_eq!(dp.breakpoints, bps, "n={n} seed={seed}");
        assert_eq!(dp.orders(), orders, "n={n} seed={seed}");
        assert!((dp.mdl - score).abs() < 1e-8 * score.abs().max(1.0));
    }
}

#[test]
fn dynamic_program_equals_enumeration_on_stationary_noise() {
    let s = piecewise_ar(&[(140, vec![0.3], 1.0)], 77).unwrap();
    let dp = segment(&s, 2, 1, 12).unwrap();
    let (bps, orders, _) = enumerate_segmentation(&s, 2, 1, 12);
    assert_eq!(dp.breakpoints, bps);
    assert_eq!(dp.orders(), orders);
}

#[test]
fn recovers_a_single_break() {
    let mut hits = 0;
    for seed in 0..20 {
        let s = piecewise_ar(&[(512, vec![0.9], 1.0), (512, vec![-0.5], 1.0)], 5000 + seed).unwrap();
        let seg = segment(&s, 3, 2, 20).unwrap();
        if seg.m == 1 && (seg.breakpoints[0] as i64 - 512).abs() <= 10 {
            hits += 1;
        }
        let again = mdl_score(&s, &seg.breakpoints, &seg.orders()).unwrap();
        assert!((again - seg.mdl).abs() < 1e-8);
    }
    assert!(hits >= 18, "{hits}/20");
}

#[test]
fn segmentation_is_deterministic() {
    let s = piecewise_ar(&[(100, vec![0.5], 1.0), (80, vec![], 4.0)], 9).unwrap();
    let a = segment(&s, 3, 2, 10).unwrap();
    let b = segment(&s, 3, 2, 10).unwrap();
    assert_eq!(a, b);
}
