//! Rotated, tangentially periodic slab grids and the discrete Dirichlet solver.
//!
//! Node (i, j) sits at x = i·h·p⊥ + (σ − j·h)·p. Row j = 0 is the data line,
//! j increases away from it into {x·p < σ}.

use std::io::{BufRead, Write};

use crate::direction::Direction;
use crate::error::{invalid, Error, Result};
use crate::linalg::BandedLu;

const THETA_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabGrid {
    pub direction: Direction,
    pub period_len: f64,
    pub height: f64,
    pub h: f64,
    pub n_tan: usize,
    pub n_nrm: usize,
    /// Position of the data line along p.
    pub shift: f64,
}

impl SlabGrid {
    pub fn new(direction: Direction, period_len: f64, height: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 0.1) {
            return invalid(format!("grid spacing {h} must lie in (0, 0.1]"));
        }
        let n_tan = (period_len / h).round() as usize;
        let n_nrm = (height / h).round() as usize;
        if n_tan == 0 || n_nrm < 2 {
            return invalid("slab has too few cells");
        }
        let tol = 1e-12 * period_len.max(height).max(1.0);
        if (n_tan as f64 * h - period_len).abs() > tol || (n_nrm as f64 * h - height).abs() > tol {
            return invalid(format!(
                "period {period_len} and height {height} are not multiples of h = {h}"
            ));
        }
        Ok(SlabGrid {
            direction,
            period_len,
            height,
            h,
            n_tan,
            n_nrm,
            shift: 0.0,
        })
    }

    /// Grid for a rational direction with spacing h = 1/(m|ξ|) ≤ `h_target`,
    /// so that lattice translations map nodes onto nodes. Height is rounded
    /// up to a multiple of h.
    pub fn for_direction(direction: Direction, min_height: f64, h_target: f64) -> Result<Self> {
        let Some(norm) = direction.lattice_norm() else {
            return invalid("for_direction needs a rational direction");
        };
        if !(h_target > 0.0) {
            return invalid("grid spacing must be positive");
        }
        let m = (1.0 / (norm * h_target) - 1e-9).ceil().max(1.0);
        let h = 1.0 / (m * norm);
        let xi = direction.rational().unwrap();
        let n_tan = (m as i64 * (xi[0] * xi[0] + xi[1] * xi[1])) as usize;
        let n_nrm = (min_height / h - 1e-9).ceil().max(2.0) as usize;
        if h > 0.1 {
            return invalid(format!("grid spacing {h} exceeds 0.1"));
        }
        Ok(SlabGrid {
            direction,
            period_len: n_tan as f64 * h,
            height: n_nrm as f64 * h,
            h,
            n_tan,
            n_nrm,
            shift: 0.0,
        })
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_rows(mut self, n_nrm: usize) -> Self {
        self.n_nrm = n_nrm;
        self.height = n_nrm as f64 * self.h;
        self
    }

    /// Physical point at tangential coordinate `tau` and depth `s`.
    #[inline]
    pub fn point(&self, tau: f64, s: f64) -> [f64; 2] {
        let p = self.direction.unit();
        let q = self.direction.perp();
        let n = self.shift - s;
        [tau * q[0] + n * p[0], tau * q[1] + n * p[1]]
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        self.point(i as f64 * self.h, j as f64 * self.h)
    }

    /// Node offset (di, dj) realizing x ↦ x + k, if k maps nodes to nodes.
    pub fn lattice_shift(&self, k: [i64; 2]) -> Option<(i64, i64)> {
        let kf = [k[0] as f64, k[1] as f64];
        let p = self.direction.unit();
        let q = self.direction.perp();
        let a = (kf[0] * q[0] + kf[1] * q[1]) / self.h;
        let b = -(kf[0] * p[0] + kf[1] * p[1]) / self.h;
        let (ar, br) = (a.round(), b.round());
        if (a - ar).abs() > 1e-6 || (b - br).abs() > 1e-6 {
            return None;
        }
        Some((ar as i64, br as i64))
    }
}

/// Node samples indexed (tangential, normal) with rows j = 0..=n_nrm.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: SlabGrid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: SlabGrid) -> Self {
        GridField {
            values: vec![0.0; grid.n_tan * (grid.n_nrm + 1)],
            grid,
        }
    }

    pub fn from_fn<F: Fn(usize, usize) -> f64>(grid: SlabGrid, f: F) -> Self {
        let mut out = Self::zeros(grid);
        for j in 0..=grid.n_nrm {
            for i in 0..grid.n_tan {
                out.values[j * grid.n_tan + i] = f(i, j);
            }
        }
        out
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.n_tan + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.grid.n_tan + i] = v;
    }

    pub fn rows(&self) -> usize {
        self.grid.n_nrm + 1
    }

    /// Writes the `ac-field v1` text dump, one normal row per line.
    pub fn dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "ac-field v1 {} {} {}", self.grid.n_tan, self.grid.n_nrm, self.grid.h)?;
        for row in self.values.chunks(self.grid.n_tan) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Reads a dump back as (n_tan, n_nrm, h, values).
    pub fn read_dump<R: BufRead>(r: R) -> Result<(usize, usize, f64, Vec<f64>)> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field dump".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "ac-field" || parts[1] != "v1" {
            return Err(Error::Parse(format!("bad header {header:?}")));
        }
        let perr = |e: std::num::ParseIntError| Error::Parse(e.to_string());
        let n_tan: usize = parts[2].parse().map_err(perr)?;
        let n_nrm: usize = parts[3].parse().map_err(perr)?;
        let h: f64 = parts[4].parse().map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
        let mut values = Vec::with_capacity(n_tan * (n_nrm + 1));
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
            }
        }
        if values.len() != n_tan * (n_nrm + 1) {
            return Err(Error::Parse(format!("expected {} values, found {}", n_tan * (n_nrm + 1), values.len())));
        }
        Ok((n_tan, n_nrm, h, values))
    }
}

/// Free-boundary depth below the data line, one entry per tangential column.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightFunction {
    pub g: Vec<f64>,
}

impl HeightFunction {
    pub fn flat(n: usize, depth: f64) -> Self {
        HeightFunction { g: vec![depth; n] }
    }

    pub fn min(&self) -> f64 {
        self.g.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.g.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }
}

/// How the zero set enters the stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryModel {
    /// Boundary crossings located by linear interpolation of the height function.
    CutCell,
    /// Boundary on grid nodes: every non-positive neighbor is at distance h.
    Staircase,
}

/// Dirichlet solver on slabs that keeps its factorization between calls.
///
/// Successive height functions that only differ deep in the slab reuse the
/// factored rows above the first changed one.
#[derive(Debug, Clone)]
pub struct SlabSolver {
    grid: SlabGrid,
    model: BoundaryModel,
    band: BandedLu,
    row: Vec<f64>,
}

impl SlabSolver {
    pub fn new(grid: SlabGrid, model: BoundaryModel) -> Self {
        let n = grid.n_tan * grid.n_nrm;
        let bw = grid.n_tan.max(1);
        SlabSolver {
            grid,
            model,
            band: BandedLu::new(n, bw),
            row: vec![0.0; 2 * bw + 1],
        }
    }

    pub fn grid(&self) -> &SlabGrid {
        &self.grid
    }

    /// Number of nodes strictly above the boundary in column i (excluding the data line).
    fn interior_rows(&self, g: f64) -> usize {
        (rows_above(g, self.grid.h) - 1).min(self.grid.n_nrm - 1)
    }

    pub fn solve(&mut self, region: &HeightFunction, top: f64) -> Result<GridField> {
        let grid = self.grid;
        let (nt, h) = (grid.n_tan, grid.h);
        if region.g.len() != nt {
            return invalid(format!("height function has {} columns, grid has {nt}", region.g.len()));
        }
        for (i, &g) in region.g.iter().enumerate() {
            if !(g > 0.0 && g <= grid.height + 1e-12) {
                return invalid(format!("column {i}: depth {g} outside (0, {}]", grid.height));
            }
        }
        if !(top > 0.0) {
            return invalid("top value must be positive");
        }
        let g = &region.g;
        let last: Vec<usize> = g.iter().map(|&gi| self.interior_rows(gi)).collect();
        let jmax = *last.iter().max().unwrap();
        let n = jmax * nt;
        self.band.set_active(n);
        let bw = self.band.bandwidth();
        let mut rhs = vec![0.0; n];
        // Shortley-Weller stencil: an arm of fractional length θ gets weight
        // 2 / (θ (θ + θ')) with θ' the opposite arm on the same axis.
        for j in 1..=jmax {
            for i in 0..nt {
                let r = (j - 1) * nt + i;
                self.row.iter_mut().for_each(|v| *v = 0.0);
                if j > last[i] {
                    self.row[bw] = 1.0;
                    self.band.set_row(r, &self.row);
                    continue;
                }
                let jh = j as f64 * h;
                // (θ, neighbor row) for up, down, left, right.
                let mut arms: [(f64, Option<usize>); 4] = [(1.0, None); 4];
                arms[0] = (1.0, (j > 1).then(|| r - nt));
                arms[1] = if j + 1 <= last[i] {
                    (1.0, Some(r + nt))
                } else {
                    let theta = match self.model {
                        BoundaryModel::CutCell => (g[i] - jh) / h,
                        BoundaryModel::Staircase => 1.0,
                    };
                    (theta.clamp(THETA_MIN, 1.0), None)
                };
                let axes = if nt == 1 { 1 } else { 2 };
                if nt > 1 {
                    for side in [0usize, 1] {
                        let nb = if side == 0 { (i + nt - 1) % nt } else { (i + 1) % nt };
                        arms[2 + side] = if j <= last[nb] {
                            (1.0, Some((j - 1) * nt + nb))
                        } else {
                            let theta = match self.model {
                                BoundaryModel::CutCell => row_crossing(g, i, side == 1, jh),
                                BoundaryModel::Staircase => 1.0,
                            };
                            (theta.clamp(THETA_MIN, 1.0), None)
                        };
                    }
                }
                let mut diag = 0.0;
                for axis in 0..axes {
                    let (a, b) = (arms[2 * axis], arms[2 * axis + 1]);
                    let span = 0.5 * (a.0 + b.0);
                    for (theta, node) in [a, b] {
                        let c = 1.0 / (theta * span);
                        diag += c;
                        if let Some(m) = node {
                            self.row[bw + m - r] -= c;
                        }
                    }
                }
                if j == 1 {
                    rhs[r] += top / (0.5 * (1.0 + arms[1].0));
                }
                self.row[bw] = diag;
                self.band.set_row(r, &self.row);
            }
        }
        self.band.factor()?;
        let x = self.band.solve(&rhs);
        let ax = self.band.mul(&x);
        let res = (0..n).map(|k| ((rhs[k] - ax[k]) / self.band.diag(k)).abs()).fold(0.0, f64::max);
        if !(res <= 1e-10 * top) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverStagnation { residual: res });
        }
        let mut out = GridField::zeros(grid);
        for i in 0..nt {
            out.set(i, 0, top);
            for j in 1..=last[i] {
                out.set(i, j, x[(j - 1) * nt + i].max(0.0));
            }
        }
        Ok(out)
    }
}

/// Fraction of the way from column `i` toward its neighbor at which the
/// boundary graph reaches depth `level`, using the cubic through four
/// consecutive columns. Requires g[i] > level ≥ g[neighbor].
fn row_crossing(g: &[f64], i: usize, forward: bool, level: f64) -> f64 {
    let n = g.len();
    let at = |k: isize| {
        let k = if forward { i as isize + k } else { i as isize - k };
        g[k.rem_euclid(n as isize) as usize]
    };
    let (a, b) = (at(0), at(1));
    if n < 4 {
        return (a - level) / (a - b);
    }
    let (p0, p3) = (at(-1), at(2));
    let cubic = |x: f64| {
        -p0 * x * (x - 1.0) * (x - 2.0) / 6.0 + a * (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0
            - b * (x + 1.0) * x * (x - 2.0) / 2.0
            + p3 * (x + 1.0) * x * (x - 1.0) / 6.0
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let m = 0.5 * (lo + hi);
        if cubic(m) > level {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Discrete harmonic function equal to `top` on the data line and vanishing
/// at and below the boundary graph.
pub fn harmonic_solve(grid: &SlabGrid, region: &HeightFunction, top: f64) -> Result<GridField> {
    SlabSolver::new(*grid, BoundaryModel::CutCell).solve(region, top)
}

/// Rows j ≥ 0 with j·h above the boundary depth g. Nodes closer than
/// 1e-9·h to the boundary count as on it.
#[inline]
pub(crate) fn rows_above(g: f64, h: f64) -> usize {
    ((g / h - 1e-9).ceil() as usize).max(1)
}

/// Quadratic through (0, 0), (d1, u1), (d2, u2); returns its slope at 0.
#[inline]
pub(crate) fn trace_slope(d1: f64, u1: f64, d2: f64, u2: f64) -> f64 {
    (u1 * d2 * d2 - u2 * d1 * d1) / (d1 * d2 * (d2 - d1))
}

/// Per-column |∇u| at the boundary crossing; `None` where fewer than two
/// nodes lie above the boundary.
///
/// The fit through the two nearest nodes is blended with the fit through the
/// next pair, weighted by the distance of the nearest node, so that the
/// estimate varies continuously as the boundary crosses grid rows.
pub fn boundary_gradient(field: &GridField, region: &HeightFunction) -> Vec<Option<f64>> {
    let grid = &field.grid;
    let (nt, h) = (grid.n_tan, grid.h);
    (0..nt)
        .map(|i| {
            let g = region.g[i];
            let jstar = rows_above(g, h) - 1;
            if jstar == 0 || jstar > grid.n_nrm {
                return None;
            }
            let d1 = g - jstar as f64 * h;
            let near = trace_slope(d1, field.get(i, jstar), d1 + h, field.get(i, jstar - 1));
            let ds = if jstar >= 2 {
                let far = trace_slope(d1 + h, field.get(i, jstar - 1), d1 + 2.0 * h, field.get(i, jstar - 2));
                let w = d1 / h;
                w * near + (1.0 - w) * far
            } else {
                near
            };
            let slope = if nt > 1 {
                (region.g[(i + 1) % nt] - region.g[(i + nt - 1) % nt]) / (2.0 * h)
            } else {
                0.0
            };
            Some(ds.abs() * (1.0 + slope * slope).sqrt())
        })
        .collect()
}

/// Result of a morphological convolution; rows outside `valid_rows` are
/// computed over truncated balls.
#[derive(Debug, Clone)]
pub struct Convolved {
    pub field: GridField,
    pub valid_rows: std::ops::RangeInclusive<usize>,
}

fn ball_offsets(r: f64, h: f64) -> Vec<(i64, i64)> {
    let k = (r / h + 1e-9).floor() as i64;
    let mut out = Vec::new();
    for a in -k..=k {
        for b in -k..=k {
            let d2 = ((a * a + b * b) as f64) * h * h;
            if d2 <= r * r * (1.0 + 1e-12) {
                out.push((a, b));
            }
        }
    }
    out
}

fn convolve(field: &GridField, delta: f64, take_max: bool) -> Result<Convolved> {
    let grid = &field.grid;
    if delta < grid.h * (1.0 - 1e-12) {
        return invalid(format!("radius {delta} below grid spacing {}", grid.h));
    }
    if delta > 0.5 * grid.height {
        return invalid(format!("radius {delta} exceeds half the slab height"));
    }
    let offs = ball_offsets(delta, grid.h);
    let (nt, rows) = (grid.n_tan as i64, field.rows() as i64);
    let mut out = field.clone();
    for j in 0..rows {
        for i in 0..nt {
            let mut acc = if take_max { f64::NEG_INFINITY } else { f64::INFINITY };
            for &(a, b) in &offs {
                let jj = j + b;
                if jj < 0 || jj >= rows {
                    continue;
                }
                let ii = (i + a).rem_euclid(nt);
                let v = field.get(ii as usize, jj as usize);
                acc = if take_max { acc.max(v) } else { acc.min(v) };
            }
            out.set(i as usize, j as usize, acc);
        }
    }
    let k = (delta / grid.h + 1e-9).floor() as usize;
    Ok(Convolved {
        field: out,
        valid_rows: k..=(grid.n_nrm - k),
    })
}

/// u^δ(x) = max of u over nodes within distance δ.
pub fn sup_convolve(field: &GridField, delta: f64) -> Result<Convolved> {
    convolve(field, delta, true)
}

/// u_δ(x) = min of u over nodes within distance δ.
pub fn inf_convolve(field: &GridField, delta: f64) -> Result<Convolved> {
    convolve(field, delta, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n_tan: usize, n_nrm: usize, h: f64) -> SlabGrid {
        SlabGrid::new(Direction::e1(), n_tan as f64 * h, n_nrm as f64 * h, h).unwrap()
    }

    #[test]
    fn flat_boundary_is_linear() {
        let g = grid(8, 100, 0.05);
        let r = 2.37;
        let u = harmonic_solve(&g, &HeightFunction::flat(8, r), 3.0).unwrap();
        for j in 0..=100 {
            let s = j as f64 * 0.05;
            let exact = (3.0 * (1.0 - s / r)).max(0.0);
            for i in 0..8 {
                assert!((u.get(i, j) - exact).abs() < 1e-11, "({i},{j})");
            }
        }
        let grad = boundary_gradient(&u, &HeightFunction::flat(8, r));
        for v in grad {
            assert!((v.unwrap() - 3.0 / r).abs() < 1e-10);
        }
    }

    #[test]
    fn lattice_shift_e1() {
        let d = Direction::from_lattice([1, 1]).unwrap();
        let g = SlabGrid::for_direction(d, 5.0, 0.05).unwrap();
        assert_eq!(g.n_tan as f64 * g.h, g.period_len);
        let (di, dj) = g.lattice_shift([1, 0]).unwrap();
        let x0 = g.node(3, 40);
        let x1 = g.point((3 + di) as f64 * g.h, (40 + dj) as f64 * g.h);
        assert!((x1[0] - x0[0] - 1.0).abs() < 1e-12 && (x1[1] - x0[1]).abs() < 1e-12);
    }

    #[test]
    fn dump_roundtrip() {
        let g = grid(3, 4, 0.1);
        let f = GridField::from_fn(g, |i, j| i as f64 + 0.25 * j as f64);
        let mut buf = Vec::new();
        f.dump(&mut buf).unwrap();
        let (nt, nn, h, v) = GridField::read_dump(&buf[..]).unwrap();
        assert_eq!((nt, nn, h), (3, 4, 0.1));
        assert_eq!(v, f.values);
    }

    #[test]
    fn ramp_sup_convolution() {
        let g = grid(10, 40, 0.05);
        // Ramp increasing toward the data line, zero below depth 1.
        let ramp = GridField::from_fn(g, |_, j| 2.0 * (1.0 - j as f64 * 0.05).max(0.0));
        let c = sup_convolve(&ramp, 0.2).unwrap();
        for j in c.valid_rows.clone() {
            let exact = 2.0 * (1.0 + 0.2 - j as f64 * 0.05).max(0.0);
            assert!((c.field.get(4, j) - exact).abs() <= 0.05 * 2.0 + 1e-12);
        }
    }
}
