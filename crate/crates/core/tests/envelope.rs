use pinlab_core::envelope::{build_qm, inf_convolve_direct, inf_convolve_dir, sup_convolve_dir, DirectionFunction, Metric};
use proptest::prelude::*;
use std::f64::consts::PI;

fn chord(a: f64, b: f64) -> f64 {
    2.0 * ((a - b) / 2.0).sin().abs()
}

fn dirfn(n: usize) -> impl Strategy<Value = DirectionFunction> {
    prop::collection::vec(-2.0f64..2.0, n).prop_map(|v| DirectionFunction::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pruned_scan_is_exact(f in dirfn(90), lip in 0.1f64..10.0) {
        let a = inf_convolve_dir(&f, lip, Metric::Chord).unwrap();
        let b = inf_convolve_direct(&f, lip, Metric::Chord);
        prop_assert_eq!(a.values, b.values);
    }

    #[test]
    fn output_is_lipschitz_in_chord(f in dirfn(72), lip in 0.1f64..5.0) {
        let g = inf_convolve_dir(&f, lip, Metric::Chord).unwrap();
        for i in 0..g.n() {
            for j in 0..g.n() {
                prop_assert!(g.values[i] - g.values[j] <= lip * chord(g.theta(i), g.theta(j)) + 1e-12);
            }
        }
    }

    #[test]
    fn idempotent(f in dirfn(72), lip in 0.1f64..5.0, arc in any::<bool>()) {
        let m = if arc { Metric::Arc } else { Metric::Chord };
        let g = inf_convolve_dir(&f, lip, m).unwrap();
        let gg = inf_convolve_dir(&g, lip, m).unwrap();
        for (x, y) in g.values.iter().zip(&gg.values) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn monotone_in_lipschitz_constant(f in dirfn(72), a in 0.1f64..5.0, b in 0.1f64..5.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let g_lo = inf_convolve_dir(&f, lo, Metric::Chord).unwrap();
        let g_hi = inf_convolve_dir(&f, hi, Metric::Chord).unwrap();
        for ((x, y), z) in g_lo.values.iter().zip(&g_hi.values).zip(&f.values) {
            prop_assert!(x <= y && y <= z);
        }
    }

    #[test]
    fn sup_is_mirror_of_inf(f in dirfn(60), lip in 0.1f64..5.0) {
        let s = sup_convolve_dir(&f, lip, Metric::Chord).unwrap();
        for i in 0..f.n() {
            let direct = (0..f.n()).map(|j| f.values[j] - lip * chord(f.theta(i), f.theta(j))).fold(f64::MIN, f64::max);
            prop_assert!((s.values[i] - direct).abs() <= 1e-12);
            prop_assert!(s.values[i] >= f.values[i]);
        }
    }
}

#[test]
fn exact_against_quadratic_scan_on_360() {
    let f = DirectionFunction::from_fn(360, |t| (5.0 * t).sin().abs() + 0.2 * (31.0 * t).cos()).unwrap();
    for lip in [0.5, 2.0, 20.0] {
        let a = inf_convolve_dir(&f, lip, Metric::Chord).unwrap();
        let b = inf_convolve_direct(&f, lip, Metric::Chord);
        assert_eq!(a.values, b.values);
    }
}

#[test]
fn qm_keeps_rational_values() {
    let n = 360;
    let q_cont = DirectionFunction::from_fn(n, |_| 1.0).unwrap();
    let q_star = DirectionFunction::from_fn(n, |_| 1.5).unwrap();
    let rational = [0.0, PI / 4.0, PI / 2.0];
    let q = build_qm(&q_star, &q_cont, &rational, 3.0).unwrap();
    for a in rational {
        let (i, _) = q.snap(a);
        assert_eq!(q.values[i], 1.5);
    }
    assert_eq!(q.values[1], 1.0);
}

#[test]
fn rejects_bad_input() {
    assert!(DirectionFunction::new(vec![]).is_err());
    assert!(DirectionFunction::new(vec![f64::NAN]).is_err());
    let f = DirectionFunction::new(vec![0.0; 4]).unwrap();
    assert!(inf_convolve_dir(&f, 0.0, Metric::Chord).is_err());
    assert!(DirectionFunction::read_csv("theta,value\n0,1\n0.3,2\n".as_bytes()).is_err());
}
