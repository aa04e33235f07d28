//! Adaptive Simpson quadrature, used for the medium statistics.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 40;

/// Integrates `f` over `[a, b]` with absolute error target `tol`.
///
/// The interval is first split into `panels` pieces so narrow features
/// are not missed by the initial Simpson samples.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, panels: usize) -> Result<f64> {
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    let mut comp = 0.0;
    for k in 0..panels {
        let lo = a + w * k as f64;
        let hi = if k + 1 == panels { b } else { lo + w };
        let fa = f(lo);
        let fm = f(0.5 * (lo + hi));
        let fb = f(hi);
        let whole = simpson(lo, hi, fa, fm, fb);
        let part = adapt(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 0)?;
        // Kahan summation keeps the panel sum order-independent to rounding.
        let y = part - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = f(0.5 * (a + m));
    let rm = f(0.5 * (m + b));
    let left = simpson(a, m, fa, lm, fm);
    let right = simpson(m, b, fm, rm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureNonConvergence {
            last: left + right,
            previous: whole,
        });
    }
    Ok(adapt(f, a, m, fa, lm, fm, left, 0.5 * tol, depth + 1)?
        + adapt(f, m, b, fm, rm, fb, right, 0.5 * tol, depth + 1)?)
}

/// Nested 2-D integral over `[0,1]²`.
pub fn integrate_unit_square<F: Fn(f64, f64) -> f64>(f: &F, tol: f64, panels: usize) -> Result<f64> {
    let inner_tol = 0.5 * tol;
    let outer = |x: f64| -> f64 {
        integrate(&|y| f(x, y), 0.0, 1.0, inner_tol, panels).unwrap_or(f64::NAN)
    };
    let v = integrate(&outer, 0.0, 1.0, 0.5 * tol, panels)?;
    if v.is_nan() {
        return Err(Error::QuadratureNonConvergence {
            last: f64::NAN,
            previous: f64::NAN,
        });
    }
    Ok(v)
}
