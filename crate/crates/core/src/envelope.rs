//! Functions on the circle of directions and their inf/sup convolutions
//! with the cone n·|e' − e|.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// |e' − e| = 2 sin(Δθ/2).
    #[default]
    Chord,
    /// Arc length Δθ.
    Arc,
}

/// Samples on θ_i = 2πi/n.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionFunction {
    pub values: Vec<f64>,
}

impl DirectionFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("direction function needs at least one sample");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("direction function values must be finite");
        }
        Ok(DirectionFunction { values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<Self> {
        Self::new((0..n).map(|i| f(2.0 * PI * i as f64 / n as f64)).collect())
    }

    /// Periodic piecewise-linear interpolation of scattered (angle, value) samples.
    pub fn from_samples(samples: &[(f64, f64)], n: usize) -> Result<Self> {
        if samples.is_empty() {
            return invalid("no samples");
        }
        let mut s: Vec<(f64, f64)> = samples.iter().map(|&(a, v)| (a.rem_euclid(2.0 * PI), v)).collect();
        s.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let m = s.len();
        Self::from_fn(n, |th| {
            if m == 1 {
                return s[0].1;
            }
            let k = s.partition_point(|p| p.0 <= th);
            let (a, b) = if k == 0 || k == m {
                (s[m - 1], (s[0].0 + 2.0 * PI, s[0].1))
            } else {
                (s[k - 1], s[k])
            };
            let th = if k == 0 { th + 2.0 * PI } else { th };
            if b.0 - a.0 <= 0.0 {
                return a.1;
            }
            a.1 + (b.1 - a.1) * (th - a.0) / (b.0 - a.0)
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn theta(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.n() as f64
    }

    pub fn get(&self, i: i64) -> f64 {
        self.values[i.rem_euclid(self.n() as i64) as usize]
    }

    /// Index of the grid angle nearest to θ and its distance.
    pub fn snap(&self, theta: f64) -> (usize, f64) {
        let n = self.n() as f64;
        let x = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * n;
        let i = x.round() as usize % self.n();
        let off = (x - x.round()).abs() * 2.0 * PI / n;
        (i, off)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theta,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.theta(i), v)?;
        }
        Ok(())
    }

    /// Reads `theta,value` rows; the angles must form the uniform grid.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut values = Vec::new();
        let mut angles = Vec::new();
        for (k, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || (k == 0 && line.starts_with("theta")) {
                continue;
            }
            let mut it = line.split(',');
            let (Some(a), Some(v)) = (it.next(), it.next()) else {
                return Err(Error::Parse(format!("line {}: expected theta,value", k + 1)));
            };
            let a: f64 = a.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad angle", k + 1)))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad value", k + 1)))?;
            angles.push(a);
            values.push(v);
        }
        let n = values.len();
        for (i, a) in angles.iter().enumerate() {
            if (a - 2.0 * PI * i as f64 / n as f64).abs() > 1e-9 {
                return Err(Error::Parse(format!("row {i}: angle {a} off the uniform grid")));
            }
        }
        Self::new(values)
    }
}

fn kernel_table(n: usize, n_lip: f64, metric: Metric) -> Vec<f64> {
    (0..=n / 2)
        .map(|d| match metric {
            Metric::Chord => 2.0 * n_lip * (PI * d as f64 / n as f64).sin(),
            Metric::Arc => n_lip * (2.0 * PI * d as f64 / n as f64),
        })
        .collect()
}

/// □_{*,n} f(e) = min over e' of f(e') + n·|e' − e|.
pub fn inf_convolve_dir(f: &DirectionFunction, n_lip: f64, metric: Metric) -> Result<DirectionFunction> {
    if !(n_lip > 0.0) {
        return invalid("Lipschitz constant must be positive");
    }
    let n = f.n();
    let out = match metric {
        Metric::Arc => arc_sweep(&f.values, n_lip),
        Metric::Chord => {
            let k = kernel_table(n, n_lip, metric);
            let fmin = f.values.iter().cloned().fold(f64::INFINITY, f64::min);
            (0..n)
                .map(|i| {
                    let mut best = f.values[i];
                    // The kernel grows with index distance, so stop once it alone exceeds the gap to min f.
                    for d in 1..=n / 2 {
                        if k[d] + fmin >= best {
                            break;
                        }
                        let a = f.values[(i + d) % n] + k[d];
                        let b = f.values[(i + n - d) % n] + k[d];
                        best = best.min(a).min(b);
                    }
                    best
                })
                .collect()
        }
    };
    DirectionFunction::new(out)
}

/// □*_n f(e) = max over e' of f(e') − n·|e' − e|.
pub fn sup_convolve_dir(f: &DirectionFunction, n_lip: f64, metric: Metric) -> Result<DirectionFunction> {
    let neg = DirectionFunction::new(f.values.iter().map(|v| -v).collect())?;
    let out = inf_convolve_dir(&neg, n_lip, metric)?;
    DirectionFunction::new(out.values.iter().map(|v| -v).collect())
}

/// Forward and backward relaxation around the circle; two laps each reach the fixed point.
fn arc_sweep(f: &[f64], n_lip: f64) -> Vec<f64> {
    let n = f.len();
    let step = n_lip * 2.0 * PI / n as f64;
    let mut out = f.to_vec();
    for _ in 0..2 {
        for k in 1..=n {
            let (i, prev) = (k % n, k - 1);
            out[i] = out[i].min(out[prev] + step);
        }
        for k in (0..n).rev() {
            let next = (k + 1) % n;
            out[k] = out[k].min(out[next] + step);
        }
    }
    out
}

/// O(n²) reference for either metric.
pub fn inf_convolve_direct(f: &DirectionFunction, n_lip: f64, metric: Metric) -> DirectionFunction {
    let n = f.n();
    let k = kernel_table(n, n_lip, metric);
    let values = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = (i as i64 - j as i64).unsigned_abs() as usize;
                    f.values[j] + k[d.min(n - d)]
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    DirectionFunction { values }
}

/// □_{*,m} applied to `q_cont`, with the samples at the listed rational
/// angles replaced by those of `q_star`.
pub fn build_qm(q_star: &DirectionFunction, q_cont: &DirectionFunction, rational_angles: &[f64], m: f64) -> Result<DirectionFunction> {
    if q_star.n() != q_cont.n() {
        return invalid("q_star and q_cont live on different grids");
    }
    let mut out = inf_convolve_dir(q_cont, m, Metric::Chord)?;
    for &a in rational_angles {
        let (i, off) = out.snap(a);
        if off > 1e-9 {
            log::warn!("rational angle {a} snapped to grid angle {} (offset {off:.2e})", out.theta(i));
        }
        out.values[i] = q_star.values[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_well_gives_cone() {
        let n = 360;
        let f = DirectionFunction::from_fn(n, |t| if t == 0.0 { 0.0 } else { 1.0 }).unwrap();
        let g = inf_convolve_dir(&f, 2.0, Metric::Chord).unwrap();
        for i in 0..n {
            let t = f.theta(i);
            let expect = (2.0 * (2.0 * (t / 2.0).sin()).abs()).min(1.0);
            assert!((g.values[i] - expect).abs() < 1e-12, "{i}: {} vs {expect}", g.values[i]);
        }
    }

    #[test]
    fn arc_sweep_matches_direct() {
        let f = DirectionFunction::from_fn(360, |t| (3.0 * t).sin() + 0.3 * (17.0 * t).cos()).unwrap();
        let a = inf_convolve_dir(&f, 1.5, Metric::Arc).unwrap();
        let b = inf_convolve_direct(&f, 1.5, Metric::Arc);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let f = DirectionFunction::from_fn(12, |t| t.cos()).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = DirectionFunction::read_csv(&buf[..]).unwrap();
        for (x, y) in f.values.iter().zip(&g.values) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn scattered_samples_interpolate() {
        let f = DirectionFunction::from_samples(&[(0.0, 1.0), (PI, 3.0)], 4).unwrap();
        assert_eq!(f.values, vec![1.0, 2.0, 3.0, 2.0]);
    }
}
