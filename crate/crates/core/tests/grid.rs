use std::f64::consts::PI;

use pinlab_core::grid::{boundary_gradient, harmonic_solve, inf_convolve, sup_convolve, GridField, HeightFunction, SlabGrid};
use pinlab_core::Direction;
use proptest::prelude::*;

fn slab(period: f64, height: f64, h: f64) -> SlabGrid {
    SlabGrid::new(Direction::e1(), period, height, h).unwrap()
}

fn wavy(grid: &SlabGrid) -> HeightFunction {
    HeightFunction {
        g: (0..grid.n_tan).map(|i| 1.0 + 0.2 * (2.0 * PI * i as f64 * grid.h).sin()).collect(),
    }
}

#[test]
fn sinusoidal_boundary_converges_at_second_order() {
    let fine_h = 0.1 / 16.0;
    let fine_grid = slab(1.0, 2.0, fine_h);
    let fine = harmonic_solve(&fine_grid, &wavy(&fine_grid), 1.0).unwrap();
    let mut errs = Vec::new();
    for k in [2usize, 4, 8] {
        let h = 0.1 / k as f64;
        let g = slab(1.0, 2.0, h);
        let u = harmonic_solve(&g, &wavy(&g), 1.0).unwrap();
        let ratio = 16 / k;
        let mut err: f64 = 0.0;
        for j in 0..u.rows() {
            for i in 0..g.n_tan {
                err = err.max((u.get(i, j) - fine.get(i * ratio, j * ratio)).abs());
            }
        }
        errs.push(err);
    }
    assert!(errs[0] / errs[1] >= 3.5 && errs[1] / errs[2] >= 3.5, "errors {errs:?}");
    assert!(errs[0] <= 0.05 * 0.05, "errors {errs:?}");
}

#[test]
fn solution_obeys_maximum_principle_and_residual() {
    let g = slab(1.0, 2.0, 0.05);
    let region = HeightFunction {
        g: (0..g.n_tan).map(|i| 1.0 + 0.3 * (2.0 * PI * i as f64 / g.n_tan as f64).cos() + 0.013 * (i % 3) as f64).collect(),
    };
    let t = 2.5;
    let u = harmonic_solve(&g, &region, t).unwrap();
    let nt = g.n_tan;
    for i in 0..nt {
        for j in 1..u.rows() - 1 {
            let v = u.get(i, j);
            assert!((-1e-9..=t + 1e-9).contains(&v));
            let nb = [u.get((i + 1) % nt, j), u.get((i + nt - 1) % nt, j), u.get(i, j + 1), u.get(i, j - 1)];
            let lo = nb.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = nb.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "({i},{j})");
            // Nodes with all four neighbors above the boundary satisfy the 5-point equation.
            let deep = (j + 1) as f64 * g.h < region.g[i].min(region.g[(i + 1) % nt]).min(region.g[(i + nt - 1) % nt]);
            if deep {
                let lap = nb.iter().sum::<f64>() - 4.0 * v;
                assert!(lap.abs() <= 1e-10 * t, "({i},{j}): {lap}");
            }
        }
    }
}

#[test]
fn tangential_shift_commutes_with_solve() {
    let g = slab(1.0, 2.0, 0.05);
    let region = wavy(&g);
    let mut rolled = region.clone();
    rolled.g.rotate_left(3);
    let a = harmonic_solve(&g, &region, 1.0).unwrap();
    let b = harmonic_solve(&g, &rolled, 1.0).unwrap();
    for j in 0..a.rows() {
        for i in 0..g.n_tan {
            assert!((a.get((i + 3) % g.n_tan, j) - b.get(i, j)).abs() <= 1e-12);
        }
    }
}

#[test]
fn flat_gradient_is_t_over_r() {
    let g = slab(0.5, 4.0, 0.05);
    for (r, t) in [(1.0, 1.0), (2.33, 1.7), (3.111, 5.0)] {
        let region = HeightFunction::flat(g.n_tan, r);
        let u = harmonic_solve(&g, &region, t).unwrap();
        for v in boundary_gradient(&u, &region) {
            assert!((v.unwrap() - t / r).abs() <= 1e-9);
        }
    }
}

#[test]
fn tilted_plane_gradient() {
    let h = 0.05;
    let g = slab(2.0, 4.0, h);
    let (alpha, phi, c) = (1.7, 0.3f64, 2.0);
    let u = GridField::from_fn(g, |i, j| {
        let (tau, s) = (i as f64 * h, j as f64 * h);
        (alpha * (c - s * phi.cos() - tau * phi.sin())).max(0.0)
    });
    let region = HeightFunction {
        g: (0..g.n_tan).map(|i| (c - i as f64 * h * phi.sin()) / phi.cos()).collect(),
    };
    let grad = boundary_gradient(&u, &region);
    for v in &grad[1..g.n_tan - 1] {
        assert!((v.unwrap() - alpha).abs() <= alpha * h, "{v:?}");
    }
}

#[test]
fn shallow_columns_are_unavailable() {
    let g = slab(0.5, 2.0, 0.05);
    let mut region = HeightFunction::flat(g.n_tan, 1.0);
    region.g[2] = 0.04;
    let u = harmonic_solve(&g, &region, 1.0).unwrap();
    let grad = boundary_gradient(&u, &region);
    assert!(grad[2].is_none());
    assert!(grad[5].is_some());
}

#[test]
fn grid_rejects_bad_sizes() {
    assert!(SlabGrid::new(Direction::e1(), 1.0, 1.0, 0.2).is_err());
    assert!(SlabGrid::new(Direction::e1(), 1.03, 1.0, 0.05).is_err());
    let g = slab(1.0, 1.0, 0.1);
    let f = GridField::zeros(g);
    assert!(sup_convolve(&f, 0.05).is_err());
    assert!(sup_convolve(&f, 0.6).is_err());
}

#[test]
fn constant_is_fixed_by_convolution() {
    let g = slab(1.6, 1.5, 0.1);
    let f = GridField::from_fn(g, |_, _| 0.7);
    assert_eq!(sup_convolve(&f, 0.3).unwrap().field, f);
    assert_eq!(inf_convolve(&f, 0.3).unwrap().field, f);
}

fn field16() -> impl Strategy<Value = GridField> {
    prop::collection::vec(0.0f64..1.0, 16 * 16).prop_map(|v| {
        let g = slab(1.6, 1.5, 0.1);
        let mut f = GridField::zeros(g);
        f.values = v;
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn opening_and_closing_bracket(f in field16(), k in 1usize..=7) {
        let d = k as f64 * 0.1;
        let open = sup_convolve(&inf_convolve(&f, d).unwrap().field, d).unwrap().field;
        let close = inf_convolve(&sup_convolve(&f, d).unwrap().field, d).unwrap().field;
        for n in 0..f.values.len() {
            prop_assert!(open.values[n] <= f.values[n] && f.values[n] <= close.values[n]);
        }
    }

    #[test]
    fn sup_convolution_is_monotone_and_extensive(f in field16(), bump in prop::collection::vec(0.0f64..0.5, 256), k in 1usize..=7) {
        let d = k as f64 * 0.1;
        let mut g = f.clone();
        for (v, b) in g.values.iter_mut().zip(&bump) {
            *v += b;
        }
        let a = sup_convolve(&f, d).unwrap();
        let b = sup_convolve(&g, d).unwrap();
        for n in 0..f.values.len() {
            prop_assert!(a.field.values[n] <= b.field.values[n]);
            prop_assert!(a.field.values[n] >= f.values[n]);
        }
    }
}
