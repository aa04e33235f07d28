//! Z²-periodic coefficient fields.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use crate::direction::Direction;
use crate::error::{invalid, Error, Result};
use crate::quad;

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const RMS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MediumKind {
    Constant,
    Laminar,
    BumpLattice,
    Custom,
}

#[derive(Clone)]
enum Field {
    Constant(f64),
    Laminar { profile: Profile, xi: [i64; 2] },
    Bump { amp: f64, delta: f64, norm: f64 },
    Custom { n: usize, data: Arc<Vec<f64>> },
}

/// A positive Z²-periodic coefficient Q with cached bounds.
#[derive(Clone)]
pub struct PeriodicMedium {
    field: Field,
    qmin: f64,
    qmax: f64,
    lipschitz: f64,
    rms: Arc<OnceLock<Result<f64>>>,
}

impl fmt::Debug for PeriodicMedium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicMedium")
            .field("kind", &self.kind())
            .field("qmin", &self.qmin)
            .field("qmax", &self.qmax)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

/// Unnormalized mollifier exp(−1/(1−4|y|²)) on |y| < 1/2.
fn mollifier(r2: f64) -> f64 {
    let s = 1.0 - 4.0 * r2;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn mollifier_norm() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        // ∫ρ² over the plane in polar form.
        let f = |r: f64| {
            let m = mollifier(r * r);
            m * m * r
        };
        let i = quad::integrate(&f, 0.0, 0.5, 1e-15, 64).expect("mollifier quadrature");
        1.0 / (2.0 * PI * i).sqrt()
    })
}

/// The normalized radial bump ρ used by the bump lattice, with ∫ρ² = 1.
pub fn bump_profile(y: [f64; 2]) -> f64 {
    mollifier_norm() * mollifier(y[0] * y[0] + y[1] * y[1])
}

fn wrap(x: f64) -> f64 {
    x - x.floor()
}

impl PeriodicMedium {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::MediumRejected {
                reason: format!("constant {c} is not positive"),
                x: 0.0,
                y: 0.0,
            });
        }
        Ok(PeriodicMedium {
            field: Field::Constant(c),
            qmin: c,
            qmax: c,
            lipschitz: 0.0,
            rms: Arc::new(OnceLock::new()),
        })
    }

    /// Q(x) = profile(x·ξ) for the lattice vector ξ of `axis`.
    ///
    /// The profile must be 1-periodic; `axis` must be rational so that the
    /// field is Z²-periodic.
    pub fn laminar(profile: Profile, axis: Direction) -> Result<Self> {
        let Some(xi) = axis.rational() else {
            return invalid("laminar axis must be a rational direction");
        };
        const N: usize = 8192;
        let ds = 1.0 / N as f64;
        let samples: Vec<f64> = (0..N).map(|i| profile(i as f64 * ds)).collect();
        for (i, &v) in samples.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                let s = i as f64 * ds;
                let u = axis.unit();
                let n = axis.lattice_norm().unwrap();
                return Err(Error::MediumRejected {
                    reason: format!("profile value {v} is not positive"),
                    x: s * u[0] / n,
                    y: s * u[1] / n,
                });
            }
        }
        let refine = |sign: f64| -> f64 {
            let (mut best_i, mut best) = (0usize, f64::NEG_INFINITY);
            for (i, &v) in samples.iter().enumerate() {
                if sign * v > best {
                    best = sign * v;
                    best_i = i;
                }
            }
            let g = |s: f64| sign * profile(s);
            let mut a = (best_i as f64 - 1.0) * ds;
            let mut b = (best_i as f64 + 1.0) * ds;
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let c = b - phi * (b - a);
                let d = a + phi * (b - a);
                if g(c) > g(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            sign * best.max(g(0.5 * (a + b)))
        };
        let pmax = refine(1.0);
        let pmin = refine(-1.0);
        let mut slope: f64 = 0.0;
        for i in 0..N {
            let d = (samples[(i + 1) % N] - samples[i]).abs() / ds;
            slope = slope.max(d);
        }
        let norm = axis.lattice_norm().unwrap();
        Ok(PeriodicMedium {
            field: Field::Laminar { profile, xi },
            qmin: pmin,
            qmax: pmax,
            // Finite-difference slopes underestimate the derivative by O(ds²).
            lipschitz: slope * norm * (1.0 + 1e-3),
            rms: Arc::new(OnceLock::new()),
        })
    }

    /// 1 + a·sin(2π s) along the lattice vector of `axis`.
    pub fn laminar_sine(a: f64, axis: Direction) -> Result<Self> {
        Self::laminar(Arc::new(move |s: f64| 1.0 + a * (2.0 * PI * s).sin()), axis)
    }

    /// Q(x) = 1 + Σ_k A·ρ((x − k)/δ).
    pub fn bump_lattice(amp: f64, delta: f64) -> Result<Self> {
        if !(amp >= 0.0 && amp.is_finite()) {
            return invalid(format!("bump amplitude {amp} must be nonnegative"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return invalid(format!("bump radius {delta} must lie in (0, 1)"));
        }
        let norm = mollifier_norm();
        let qmax = 1.0 + amp * norm * mollifier(0.0);
        // Radial profile derivative of the mollifier, maximized on a fine grid.
        let mut dmax: f64 = 0.0;
        let n = 20000;
        for i in 0..n {
            let r = 0.5 * (i as f64 + 0.5) / n as f64;
            let s = 1.0 - 4.0 * r * r;
            let d = mollifier(r * r) * 8.0 * r / (s * s);
            dmax = dmax.max(d);
        }
        Ok(PeriodicMedium {
            field: Field::Bump { amp, delta, norm },
            qmin: 1.0,
            qmax,
            lipschitz: amp * norm * dmax * (1.0 + 1e-3) / delta,
            rms: Arc::new(OnceLock::new()),
        })
    }

    /// Bilinear interpolation of an n×n periodic sample grid over [0,1)².
    /// Rows run along x₂, so `data[j*n + i]` is the sample at (i/n, j/n).
    pub fn custom(n: usize, data: Vec<f64>) -> Result<Self> {
        if n < 2 || data.len() != n * n {
            return invalid(format!("custom medium needs n ≥ 2 and n² samples, got n = {n}, {} samples", data.len()));
        }
        for (k, &v) in data.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::MediumRejected {
                    reason: format!("sample {v} is not positive"),
                    x: (k % n) as f64 / n as f64,
                    y: (k / n) as f64 / n as f64,
                });
            }
        }
        let qmin = data.iter().cloned().fold(f64::INFINITY, f64::min);
        let qmax = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut dmax: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let v = data[j * n + i];
                dmax = dmax.max((data[j * n + (i + 1) % n] - v).abs());
                dmax = dmax.max((data[((j + 1) % n) * n + i] - v).abs());
            }
        }
        Ok(PeriodicMedium {
            field: Field::Custom { n, data: Arc::new(data) },
            qmin,
            qmax,
            // An estimate, not a certificate.
            lipschitz: dmax * n as f64 * 2f64.sqrt(),
            rms: Arc::new(OnceLock::new()),
        })
    }

    /// Reads the `ac-medium v1` text format.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some("ac-medium v1") => {}
            other => return Err(Error::Parse(format!("bad header {other:?}"))),
        }
        let n: usize = match lines.next().map(|l| l.split_whitespace().collect::<Vec<_>>()) {
            Some(parts) if parts.len() == 2 && parts[0] == "n" => parts[1]
                .parse()
                .map_err(|e| Error::Parse(format!("grid size: {e}")))?,
            other => return Err(Error::Parse(format!("expected `n <gridsize>`, got {other:?}"))),
        };
        let mut data = Vec::with_capacity(n * n);
        for line in lines {
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|e| Error::Parse(format!("{tok}: {e}")))?);
            }
        }
        Self::custom(n, data)
    }

    pub fn kind(&self) -> MediumKind {
        match self.field {
            Field::Constant(_) => MediumKind::Constant,
            Field::Laminar { .. } => MediumKind::Laminar,
            Field::Bump { .. } => MediumKind::BumpLattice,
            Field::Custom { .. } => MediumKind::Custom,
        }
    }

    pub fn qmin(&self) -> f64 {
        self.qmin
    }

    pub fn qmax(&self) -> f64 {
        self.qmax
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Q(x).
    #[inline]
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match &self.field {
            Field::Constant(c) => *c,
            Field::Laminar { profile, xi } => {
                let s = x[0] * xi[0] as f64 + x[1] * xi[1] as f64;
                profile(wrap(s))
            }
            Field::Bump { amp, delta, norm } => {
                let dx = x[0] - x[0].round();
                let dy = x[1] - x[1].round();
                let r2 = (dx * dx + dy * dy) / (delta * delta);
                1.0 + amp * norm * mollifier(r2)
            }
            Field::Custom { n, data } => {
                let n = *n;
                let fx = wrap(x[0]) * n as f64;
                let fy = wrap(x[1]) * n as f64;
                let i0 = (fx.floor() as usize).min(n - 1);
                let j0 = (fy.floor() as usize).min(n - 1);
                let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
                let i1 = (i0 + 1) % n;
                let j1 = (j0 + 1) % n;
                let a = data[j0 * n + i0] * (1.0 - tx) + data[j0 * n + i1] * tx;
                let b = data[j1 * n + i0] * (1.0 - tx) + data[j1 * n + i1] * tx;
                a * (1.0 - ty) + b * ty
            }
        }
    }

    /// ⟨Q²⟩^{1/2} with absolute error at most `tol`.
    ///
    /// The default-accuracy value is computed once and shared by clones.
    pub fn rms_mean(&self, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return invalid("tolerance must be positive");
        }
        if tol >= RMS_TOL {
            return self.rms.get_or_init(|| self.compute_rms(RMS_TOL)).clone();
        }
        self.compute_rms(tol)
    }

    fn compute_rms(&self, tol: f64) -> Result<f64> {
        let ms = match &self.field {
            Field::Constant(c) => c * c,
            Field::Laminar { profile, .. } => {
                // x ↦ x·ξ pushes Lebesgue measure on the torus to Lebesgue on [0,1).
                quad::integrate(&|s| profile(s).powi(2), 0.0, 1.0, tol * 0.5, 64)?
            }
            _ => {
                // Center the cell on a lattice point so bumps are not split.
                let f = |x: f64, y: f64| self.eval([x - 0.5, y - 0.5]).powi(2);
                quad::integrate_unit_square(&f, tol * 0.5, 64)?
            }
        };
        let v = ms.sqrt();
        Ok(v.clamp(self.qmin, self.qmax))
    }

    /// Conservative (inf, sup) of Q over the closed ball B_δ(x).
    pub fn ball_extrema(&self, x: [f64; 2], delta: f64) -> (f64, f64) {
        if let Field::Constant(c) = self.field {
            return (c, c);
        }
        // Samples on the absolute dyadic lattice of step ≤ δ/16 within δ + step/√2.
        // The padding 2.2·L·step keeps the bounds nested in δ across lattice changes.
        let step = 2f64.powi((delta / 16.0).log2().floor() as i32);
        let reach = delta + step * std::f64::consts::FRAC_1_SQRT_2;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let i0 = ((x[0] - reach) / step).floor() as i64;
        let i1 = ((x[0] + reach) / step).ceil() as i64;
        let j0 = ((x[1] - reach) / step).floor() as i64;
        let j1 = ((x[1] + reach) / step).ceil() as i64;
        for a in i0..=i1 {
            for b in j0..=j1 {
                let y = [a as f64 * step, b as f64 * step];
                let (dx, dy) = (y[0] - x[0], y[1] - x[1]);
                if dx * dx + dy * dy <= reach * reach {
                    let q = self.eval(y);
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
            }
        }
        let pad = 2.2 * self.lipschitz * step;
        ((lo - pad).max(self.qmin), (hi + pad).min(self.qmax))
    }

    /// Q evaluated at x/ε.
    #[inline]
    pub fn eval_scaled(&self, x: [f64; 2], eps: f64) -> f64 {
        self.eval([x[0] / eps, x[1] / eps])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_statistics() {
        let m = PeriodicMedium::laminar_sine(0.5, Direction::e1()).unwrap();
        assert!((m.qmin() - 0.5).abs() < 1e-12);
        assert!((m.qmax() - 1.5).abs() < 1e-12);
        assert!((m.rms_mean(1e-10).unwrap() - 1.125f64.sqrt()).abs() < 1e-10);
        assert!((m.lipschitz() - PI).abs() < 1e-2);
    }

    #[test]
    fn diagonal_lamination_is_constant_along_perp() {
        let d = Direction::from_lattice([1, 1]).unwrap();
        let m = PeriodicMedium::laminar_sine(0.5, d).unwrap();
        let q0 = m.eval([0.13, 0.4]);
        let q1 = m.eval([0.13 + 0.37, 0.4 - 0.37]);
        assert!((q0 - q1).abs() < 1e-12);
        assert!((m.rms_mean(1e-9).unwrap() - 1.125f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn bump_values() {
        let m = PeriodicMedium::bump_lattice(10.0, 0.1).unwrap();
        assert_eq!(m.eval([0.5, 0.5]), 1.0);
        assert!((m.eval([3.0, -2.0]) - m.qmax()).abs() < 1e-12);
        let rms = m.rms_mean(1e-8).unwrap();
        assert!(rms >= 2f64.sqrt() - 1e-8, "rms {rms}");
        let z = PeriodicMedium::bump_lattice(0.0, 0.1).unwrap();
        assert_eq!(z.eval([0.0, 0.0]), 1.0);
        assert!(PeriodicMedium::bump_lattice(-1.0, 0.1).is_err());
        assert!(PeriodicMedium::bump_lattice(1.0, 1.0).is_err());
    }

    #[test]
    fn ball_extrema_examples() {
        let m = PeriodicMedium::laminar_sine(0.5, Direction::e1()).unwrap();
        let (_, hi) = m.ball_extrema([0.25, 0.0], 0.25);
        assert!((hi - 1.5).abs() < 1e-12);
        let b = PeriodicMedium::bump_lattice(10.0, 0.1).unwrap();
        let (lo, hi) = b.ball_extrema([0.0, 0.0], 0.05);
        assert_eq!(lo, 1.0);
        assert!((hi - b.qmax()).abs() < 1e-12);
    }

    #[test]
    fn parse_custom() {
        let text = "ac-medium v1\nn 2\n1 2\n3 4\n";
        let m = PeriodicMedium::parse(text).unwrap();
        assert_eq!(m.eval([0.0, 0.0]), 1.0);
        assert_eq!(m.eval([0.5, 0.0]), 2.0);
        assert_eq!(m.eval([0.0, 0.5]), 3.0);
        assert!((m.eval([0.25, 0.0]) - 1.5).abs() < 1e-12);
        assert!(PeriodicMedium::parse("ac-medium v2\nn 1\n1").is_err());
        assert!(PeriodicMedium::parse("ac-medium v1\nn 2\n1 2 3 -4").is_err());
    }
}
