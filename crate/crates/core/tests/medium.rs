use std::sync::Arc;

use pinlab_core::{Direction, PeriodicMedium};
use proptest::prelude::*;

fn media() -> Vec<PeriodicMedium> {
    let d11 = Direction::from_lattice([1, 1]).unwrap();
    let d21 = Direction::from_lattice([2, -1]).unwrap();
    vec![
        PeriodicMedium::constant(1.3).unwrap(),
        PeriodicMedium::laminar_sine(0.5, Direction::e1()).unwrap(),
        PeriodicMedium::laminar_sine(0.3, d11).unwrap(),
        PeriodicMedium::laminar(Arc::new(|s: f64| 2.0 + (4.0 * std::f64::consts::PI * s).cos()), d21).unwrap(),
        PeriodicMedium::bump_lattice(10.0, 0.1).unwrap(),
        PeriodicMedium::bump_lattice(3.0, 0.5).unwrap(),
        PeriodicMedium::custom(3, vec![1.0, 2.0, 1.5, 0.7, 1.1, 3.0, 2.2, 1.0, 0.9]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn periodic(x in -3.0f64..3.0, y in -3.0f64..3.0, k0 in -2i64..=2, k1 in -2i64..=2) {
        for m in media() {
            let a = m.eval([x, y]);
            let b = m.eval([x + k0 as f64, y + k1 as f64]);
            prop_assert!((a - b).abs() <= 1e-12, "{m:?}: {a} vs {b}");
        }
    }

    #[test]
    fn lipschitz_on_pairs(x in 0.0f64..1.0, y in 0.0f64..1.0, dx in -0.05f64..0.05, dy in -0.05f64..0.05) {
        for m in media() {
            let d = (dx * dx + dy * dy).sqrt();
            let diff = (m.eval([x, y]) - m.eval([x + dx, y + dy])).abs();
            prop_assert!(diff <= m.lipschitz() * d * (1.0 + 1e-3) + 1e-12, "{m:?}: {diff} over {d}");
        }
    }

    #[test]
    fn ball_extrema_nest(x in 0.0f64..1.0, y in 0.0f64..1.0, d1 in 0.01f64..0.5, f in 1.0f64..2.0) {
        for m in media() {
            let d2 = (d1 * f).min(1.0);
            let (lo1, hi1) = m.ball_extrema([x, y], d1);
            let (lo2, hi2) = m.ball_extrema([x, y], d2);
            prop_assert!(lo2 <= lo1 + 1e-12 && lo1 <= hi1 && hi1 <= hi2 + 1e-12);
            prop_assert!(lo1 <= m.eval([x, y]) && m.eval([x, y]) <= hi1);
        }
    }
}

#[test]
fn bounds_hold_on_dense_probe() {
    let n = 512;
    for m in media() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            for j in 0..n {
                let q = m.eval([i as f64 / n as f64, j as f64 / n as f64]);
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        assert!(lo >= m.qmin() - 1e-9 && hi <= m.qmax() + 1e-9, "{m:?}: [{lo}, {hi}]");
        let rms = m.rms_mean(1e-9).unwrap();
        assert!(m.qmin() <= rms && rms <= m.qmax());
    }
}

#[test]
fn rms_grows_with_bump_amplitude() {
    let mut prev = 0.0;
    for a in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
        let r = PeriodicMedium::bump_lattice(a, 0.2).unwrap().rms_mean(1e-9).unwrap();
        assert!(r >= prev - 1e-9, "A = {a}: {r} < {prev}");
        prev = r;
    }
    // ∫ρ² = 1 with the bump scaled by δ gives ⟨Q²⟩ ≥ 1 + A²δ².
    let r = PeriodicMedium::bump_lattice(10.0, 0.1).unwrap().rms_mean(1e-9).unwrap();
    assert!(r >= 2f64.sqrt() - 1e-9);
}

#[test]
fn laminar_statistics_are_axis_independent() {
    let s = 1.125f64.sqrt();
    for xi in [[1, 0], [0, 1], [1, 1], [2, 1], [1, -3]] {
        let m = PeriodicMedium::laminar_sine(0.5, Direction::from_lattice(xi).unwrap()).unwrap();
        assert!((m.qmin() - 0.5).abs() < 1e-9 && (m.qmax() - 1.5).abs() < 1e-9);
        assert!((m.rms_mean(1e-10).unwrap() - s).abs() < 1e-8, "{xi:?}");
    }
}

#[test]
fn constant_profile_is_constant() {
    let m = PeriodicMedium::laminar(Arc::new(|_| 1.0), Direction::e1()).unwrap();
    assert_eq!((m.qmin(), m.qmax()), (1.0, 1.0));
    assert_eq!(m.rms_mean(1e-12).unwrap(), 1.0);
    assert_eq!(m.ball_extrema([0.3, 0.7], 0.4), (1.0, 1.0));
}

#[test]
fn rejects_bad_media() {
    assert!(PeriodicMedium::laminar(Arc::new(|s: f64| (2.0 * std::f64::consts::PI * s).sin()), Direction::e1()).is_err());
    assert!(PeriodicMedium::laminar_sine(0.5, Direction::from_angle(0.3)).is_err());
    assert!(PeriodicMedium::constant(0.0).is_err());
    assert!(PeriodicMedium::bump_lattice(1.0, 0.0).is_err());
    assert!(PeriodicMedium::custom(2, vec![1.0, 1.0, 1.0]).is_err());
}

#[test]
fn medium_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("pinlab-medium-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.txt");
    std::fs::write(&path, "ac-medium v1\nn 2\n1 2\n3 4\n").unwrap();
    let m = PeriodicMedium::from_file(&path).unwrap();
    assert_eq!((m.qmin(), m.qmax()), (1.0, 4.0));
    assert!(PeriodicMedium::from_file(&dir.join("missing.txt")).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}
