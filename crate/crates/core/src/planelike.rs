//! Plane-like solutions built from slab fronts: boundary-layer offsets,
//! one-period families of fronts at a fixed slope, and the variable-radius
//! bending perturbation.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::cell::{sample_field, solve_prescribed_slope, CellSolution, Mode, SlabProblem, SolveOptions};
use crate::direction::Direction;
use crate::error::{invalid, Error, Result};
use crate::grid::{rows_above, GridField, HeightFunction, SlabGrid};
use crate::linalg::{pcg, Csr};
use crate::medium::PeriodicMedium;

/// Exponential fit of |v − (a·z + s)⁺| over unit bands of height z above
/// the nearest boundary point.
#[derive(Debug, Clone)]
pub struct BoundaryLayerFit {
    /// Mean normal slope a, read off the exactly linear column means.
    pub slope: f64,
    pub offset: f64,
    pub rate: f64,
    pub amplitude: f64,
    /// (band centre, sup residual) pairs.
    pub bands: Vec<(f64, f64)>,
    pub final_residual: f64,
    /// Largest deviation of ln(residual) from the fitted line.
    pub fit_residual: f64,
}

pub fn fit_boundary_layer(solution: &CellSolution) -> Result<BoundaryLayerFit> {
    let field = &solution.field;
    let grid = field.grid;
    let (nt, h) = (grid.n_tan, grid.h);
    let col_mean = |j: usize| (0..nt).map(|i| field.get(i, j)).sum::<f64>() / nt as f64;
    let g = &solution.boundary.g;
    let g_min = solution.boundary.min();
    let g_max = solution.boundary.max();
    // Rows strictly above every boundary point.
    let j_lin = rows_above(g_min, h) - 1;
    if j_lin < 1 {
        return invalid("front within one row of the data line");
    }
    let slope = (col_mean(0) - col_mean(j_lin)) / (j_lin as f64 * h);
    let r = g_min;
    let offset = solution.t - slope * r;

    let z_lo = (r - g_max).floor();
    let n_bands = (r - z_lo).ceil() as usize;
    let mut sup = vec![0.0f64; n_bands.max(1)];
    let j_end = (rows_above(g_max, h) + 1).min(field.rows() - 1);
    for j in 0..=j_end {
        let d = j as f64 * h;
        let z = r - d;
        let k = (((z - z_lo).floor()) as usize).min(sup.len() - 1);
        for i in 0..nt {
            if d > g[i] + h {
                continue;
            }
            let dev = (field.get(i, j) - (slope * z + offset).max(0.0)).abs();
            sup[k] = sup[k].max(dev);
        }
    }
    let bands: Vec<(f64, f64)> = sup
        .iter()
        .enumerate()
        .map(|(k, &s)| ((z_lo + k as f64 + 0.5).min(r), s))
        .collect();
    let final_residual = bands.last().map(|b| b.1).unwrap_or(0.0);
    let floor = 1e-12 * solution.t.max(1.0);
    let pts: Vec<(f64, f64)> = bands.iter().filter(|b| b.1 > floor).map(|&(z, s)| (z, s.ln())).collect();
    let (rate, amplitude, fit_residual) = if pts.len() < 2 {
        (f64::INFINITY, pts.first().map(|p| p.1.exp()).unwrap_or(0.0), 0.0)
    } else {
        let n = pts.len() as f64;
        let mz = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let szz: f64 = pts.iter().map(|p| (p.0 - mz).powi(2)).sum();
        let szy: f64 = pts.iter().map(|p| (p.0 - mz) * (p.1 - my)).sum();
        let b = szy / szz;
        let a = my - b * mz;
        let dev = pts.iter().map(|p| (p.1 - a - b * p.0).abs()).fold(0.0, f64::max);
        (-b, a.exp(), dev)
    };
    if !(rate > 0.0) {
        return Err(Error::NoBoundaryLayer { rate });
    }
    Ok(BoundaryLayerFit {
        slope,
        offset,
        rate,
        amplitude,
        bands,
        final_residual,
        fit_residual,
    })
}

/// Boundary-layer constant s of v ≈ (a·z + s)⁺, z the height above the
/// nearest boundary point, with the residual in the band farthest from the front.
pub fn extract_offset(solution: &CellSolution, direction: &Direction) -> Result<(f64, f64)> {
    if direction.rational().is_none() {
        return invalid("offset extraction needs a rational direction");
    }
    if direction.rational() != solution.field.grid.direction.rational() {
        return invalid("direction differs from the solution's slab");
    }
    let fit = fit_boundary_layer(solution)?;
    Ok((fit.offset, fit.final_residual))
}

#[derive(Debug, Clone)]
pub struct PlaneLikeSolution {
    pub cell_solution: CellSolution,
    pub slope: f64,
    pub offset: f64,
    pub offset_residual: f64,
}

impl PlaneLikeSolution {
    pub fn from_cell(cell_solution: CellSolution) -> Result<Self> {
        let fit = fit_boundary_layer(&cell_solution)?;
        Ok(PlaneLikeSolution {
            slope: fit.slope,
            offset: fit.offset,
            offset_residual: fit.final_residual,
            cell_solution,
        })
    }

    /// The exact plane slope·(depth − d)⁺ on `grid`.
    pub fn exact_plane(grid: SlabGrid, slope: f64, depth: f64) -> Self {
        let field = GridField::from_fn(grid, |_, j| slope * (depth - j as f64 * grid.h).max(0.0));
        let cell_solution = CellSolution {
            field,
            boundary: HeightFunction::flat(grid.n_tan, depth),
            t: slope * depth,
            mode: Mode::MinSupersolution,
            r: depth,
            alpha: slope,
            width_osc: 0.0,
            fb_residual: 0.0,
            iterations: 0,
            monotonicity_slack: 0.0,
            omega: 0.0,
            history: Vec::new(),
        };
        PlaneLikeSolution {
            cell_solution,
            slope,
            offset: 0.0,
            offset_residual: 0.0,
        }
    }

    /// σ with v ≈ slope·(x·p + σ)⁺ in absolute coordinates.
    pub fn plane_shift(&self) -> f64 {
        let c = &self.cell_solution;
        c.r + self.offset / self.slope - c.field.grid.shift
    }
}

#[derive(Debug, Clone)]
pub struct SweepFamily {
    pub direction: Direction,
    pub slope: f64,
    /// Plane shifts reduced to one period [0, 1/|ξ|), increasing.
    pub offsets: Vec<f64>,
    pub solutions: Vec<PlaneLikeSolution>,
    /// Adjacent pairs further apart than the gap tolerance; the last pair may wrap past the period.
    pub gaps: Vec<(f64, f64)>,
}

/// Fronts at a fixed mean slope started from `n_translates` depths spread
/// over one period along the normal; each settles on an equilibrium.
pub fn build_sweep_family(
    medium: &PeriodicMedium,
    xi: [i64; 2],
    slope: f64,
    n_translates: usize,
    gap_tol: f64,
    h: f64,
) -> Result<SweepFamily> {
    let direction = Direction::from_lattice(xi)?;
    if n_translates == 0 {
        return invalid("need at least one start");
    }
    if !(slope > 0.0) {
        return invalid("slope must be positive");
    }
    let period = 1.0 / direction.lattice_norm().unwrap();
    let margin = 4.0;
    let t_nominal = slope * margin;
    let height = (margin + period + 6.0).max(2.0 * t_nominal / medium.qmin());
    let grid = SlabGrid::for_direction(direction, height, h)?;
    let problem = SlabProblem::on_grid(medium, grid, t_nominal, Mode::MinSupersolution)?;
    let opts = SolveOptions::default();
    let members: Vec<Result<PlaneLikeSolution>> = (0..n_translates)
        .into_par_iter()
        .map(|k| {
            let d0 = margin + period * k as f64 / n_translates as f64;
            let sol = solve_prescribed_slope(&problem, &opts, slope, vec![d0; grid.n_tan])?;
            PlaneLikeSolution::from_cell(sol)
        })
        .collect();
    let mut members: Vec<PlaneLikeSolution> = members.into_iter().collect::<Result<_>>()?;
    // Fronts pushed to the slab walls found no equilibrium.
    members.retain(|m| {
        let b = &m.cell_solution.boundary;
        b.min() > 1.5 * grid.h && b.max() < grid.height - 1.5 * grid.h
    });
    if members.is_empty() {
        return invalid("no start settled inside the slab; slope outside the pinning interval?");
    }
    members.sort_by(|a, b| a.plane_shift().partial_cmp(&b.plane_shift()).unwrap());

    let slack = 2.0 * grid.h * medium.qmax();
    let mut violation: f64 = 0.0;
    for w in members.windows(2) {
        let (lo, hi) = (&w[0].cell_solution.field, &w[1].cell_solution.field);
        for (a, b) in lo.values.iter().zip(&hi.values) {
            violation = violation.max(a - b);
        }
    }
    if violation > slack {
        return Err(Error::FamilyNotMonotone { violation });
    }

    let mut reduced: Vec<(f64, PlaneLikeSolution)> = members.into_iter().map(|m| (m.plane_shift().rem_euclid(period), m)).collect();
    reduced.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut kept: Vec<(f64, PlaneLikeSolution)> = Vec::new();
    for (s, m) in reduced {
        match kept.last() {
            Some((last, _)) if s - last < grid.h => {}
            _ => kept.push((s, m)),
        }
    }
    if kept.len() > 1 && kept[0].0 + period - kept.last().unwrap().0 < grid.h {
        kept.pop();
    }
    let offsets: Vec<f64> = kept.iter().map(|k| k.0).collect();
    let mut gaps = Vec::new();
    for k in 0..offsets.len() {
        let s1 = offsets[k];
        let s2 = if k + 1 < offsets.len() { offsets[k + 1] } else { offsets[0] + period };
        if s2 - s1 > gap_tol {
            gaps.push((s1, s2));
        }
    }
    Ok(SweepFamily {
        direction,
        slope,
        offsets,
        solutions: kept.into_iter().map(|k| k.1).collect(),
        gaps,
    })
}

/// Plateau h: M on |t| ≤ 1/3, 1 on |t| ≥ 2/3, smooth in between.
pub fn plateau(t: f64, m: f64) -> f64 {
    let s = ((t.abs() - 1.0 / 3.0) * 3.0).clamp(0.0, 1.0);
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let w = f(1.0 - s) / (f(1.0 - s) + f(s));
    1.0 + (m - 1.0) * w
}

#[derive(Debug, Clone)]
pub struct BendingProfile {
    pub direction: Direction,
    pub m: f64,
    pub r: f64,
    pub eps_amp: f64,
    /// Depth of the line carrying the plateau data.
    pub base_depth: f64,
    pub phi: GridField,
    /// Nodes where φ carries the harmonic extension (at or above the base line).
    pub valid: Vec<bool>,
    pub convexity_defect: f64,
    /// max |Δ_h ψ| over valid interior nodes.
    pub psi_residual: f64,
    pub max_grad_phi: f64,
}

impl BendingProfile {
    /// Ratio φ/(ε·h) along the base line, min and max over columns.
    pub fn boundary_bracket(&self) -> (f64, f64) {
        let g = self.phi.grid;
        let j = (self.base_depth / g.h).round() as usize;
        let center = 0.5 * g.period_len;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..g.n_tan {
            let tau = (i as f64 * g.h - center) / self.r;
            let ratio = self.phi.get(i, j) / (self.eps_amp * plateau(tau, self.m));
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        (lo, hi)
    }
}

/// Discrete harmonic function of the five-point operator on the periodic
/// strip above a base row, equal to `data` on it and to zero `top` rows up.
/// Each tangential mode solves its row recurrence exactly.
struct StripHarmonic {
    n: usize,
    top: usize,
    /// (cos, sin) coefficients per mode, and the mode's decay ratio.
    modes: Vec<(f64, f64, f64)>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl StripHarmonic {
    fn new(data: &[f64], top: usize) -> Self {
        let n = data.len();
        let cos: Vec<f64> = (0..n).map(|l| (2.0 * PI * l as f64 / n as f64).cos()).collect();
        let sin: Vec<f64> = (0..n).map(|l| (2.0 * PI * l as f64 / n as f64).sin()).collect();
        let modes = (0..=n / 2)
            .into_par_iter()
            .map(|k| {
                let (mut a, mut b) = (0.0, 0.0);
                for (i, d) in data.iter().enumerate() {
                    let l = k * i % n;
                    a += d * cos[l];
                    b += d * sin[l];
                }
                let w = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
                let mu = 2.0 - cos[k % n];
                let rho = mu - (mu * mu - 1.0).sqrt();
                (w * a / n as f64, w * b / n as f64, rho)
            })
            .collect();
        StripHarmonic { n, top, modes, cos, sin }
    }

    /// Mode profile at `m` rows above the base, 1 at m = 0 and 0 at m = top.
    fn decay(&self, rho: f64, m: usize) -> f64 {
        if m >= self.top {
            return 0.0;
        }
        if rho >= 1.0 {
            return 1.0 - m as f64 / self.top as f64;
        }
        let far = rho.powi((2 * self.top - m) as i32);
        (rho.powi(m as i32) - far) / (1.0 - rho.powi(2 * self.top as i32))
    }

    fn row(&self, m: usize) -> Vec<f64> {
        let dec: Vec<f64> = self.modes.iter().map(|md| self.decay(md.2, m)).collect();
        (0..self.n)
            .map(|i| {
                let mut acc = 0.0;
                for (k, (md, d)) in self.modes.iter().zip(&dec).enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    let l = k * i % self.n;
                    acc += (md.0 * self.cos[l] + md.1 * self.sin[l]) * d;
                }
                acc
            })
            .collect()
    }
}

/// φ = ε·exp(ψ(·/r)) on `grid`, with ψ harmonic above the line at depth
/// `base_depth` and carrying log h on it, h the plateau of height M centred
/// at mid-period. Below the base line ψ is continued by point reflection.
pub fn make_bending_profile(
    direction: Direction,
    m: f64,
    r: f64,
    eps_amp: f64,
    grid: &SlabGrid,
    base_depth: f64,
) -> Result<BendingProfile> {
    if !(m >= 1.0) {
        return invalid("plateau height M must be at least 1");
    }
    if !(eps_amp > 0.0) {
        return invalid("amplitude must be positive");
    }
    if !(r >= 10.0 * m) {
        return invalid(format!("dilation r = {r} below 10·M = {}", 10.0 * m));
    }
    if direction.unit() != grid.direction.unit() {
        return invalid("direction differs from the grid's");
    }
    if !(base_depth > 0.0 && base_depth <= grid.height) {
        return invalid("base line outside the slab");
    }
    let (nt, h) = (grid.n_tan, grid.h);
    let rows = grid.n_nrm + 1;
    let j_base = (base_depth / h).round() as usize;
    if ((j_base as f64) * h - base_depth).abs() > 1e-9 {
        return invalid("base line must lie on a grid row");
    }
    let center = 0.5 * grid.period_len;
    let data: Vec<f64> = (0..nt).map(|i| plateau((i as f64 * h - center) / r, m).ln()).collect();
    let top_rows = (4.0 * r / h).round() as usize;
    let strip = StripHarmonic::new(&data, top_rows);
    let above: Vec<Vec<f64>> = (0..=j_base.max(rows - 1 - j_base))
        .into_par_iter()
        .map(|m| strip.row(m))
        .collect();
    // Point reflection through the base line below it keeps ψ continuously differentiable.
    let psi: Vec<Vec<f64>> = (0..rows)
        .map(|j| {
            if j <= j_base {
                above[j_base - j].clone()
            } else {
                above[0].iter().zip(&above[j - j_base]).map(|(b, v)| 2.0 * b - v).collect()
            }
        })
        .collect();
    let mut phi = GridField::zeros(*grid);
    let mut valid = vec![false; nt * rows];
    for j in 0..rows {
        for i in 0..nt {
            phi.set(i, j, eps_amp * psi[j][i].exp());
            valid[j * nt + i] = j as f64 * h <= base_depth + 1e-9;
        }
    }
    let mut defect = f64::NEG_INFINITY;
    let mut worst = (0, 0);
    let mut psi_res: f64 = 0.0;
    let mut max_grad: f64 = 0.0;
    for j in 1..rows - 1 {
        if (j + 1) as f64 * h > base_depth + 1e-9 {
            break;
        }
        for i in 0..nt {
            let (ip, im) = ((i + 1) % nt, (i + nt - 1) % nt);
            let p = phi.get(i, j);
            let gx = (phi.get(ip, j) - phi.get(im, j)) / (2.0 * h);
            let gz = (phi.get(i, j - 1) - phi.get(i, j + 1)) / (2.0 * h);
            let lap = (phi.get(ip, j) + phi.get(im, j) + phi.get(i, j - 1) + phi.get(i, j + 1) - 4.0 * p) / (h * h);
            let d = gx * gx + gz * gz - p * lap;
            if d > defect {
                defect = d;
                worst = (i, j);
            }
            max_grad = max_grad.max((gx * gx + gz * gz).sqrt());
            let lp = (psi[j][ip] + psi[j][im] + psi[j - 1][i] + psi[j + 1][i] - 4.0 * psi[j][i]) / (h * h);
            psi_res = psi_res.max(lp.abs());
        }
    }
    let defect = defect.max(0.0);
    let slack = 10.0 * h * eps_amp / (r * r);
    if defect > slack {
        return Err(Error::ConvexityDefect {
            defect,
            slack,
            i: worst.0,
            j: worst.1,
        });
    }
    Ok(BendingProfile {
        direction,
        m,
        r,
        eps_amp,
        base_depth,
        phi,
        valid,
        convexity_defect: defect,
        psi_residual: psi_res,
        max_grad_phi: max_grad,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SlopeRow {
    pub column: usize,
    /// Depth where the bent field vanishes.
    pub depth: f64,
    pub measured: f64,
    pub grad_phi: f64,
    pub ball_inf: f64,
}

#[derive(Debug, Clone)]
pub struct BendResult {
    /// v^φ(x) = max of v over the closed disc of radius φ(x).
    pub bent: GridField,
    /// Harmonic lift of v^φ below the cut line.
    pub lifted: GridField,
    /// Nodes whose disc lies inside the slab.
    pub valid: Vec<bool>,
    pub slope_report: Vec<SlopeRow>,
    /// min and max of (v̄^φ − v)/φ near the original front.
    pub ratio_band: (f64, f64),
    /// max of (−Δ_h v^φ)⁺ over interior nodes of {v^φ > 0}.
    pub subharmonic_defect: f64,
}

/// Max of the bilinear interpolant over the disc of radius `rho` around
/// index position (a, b): the centre, 48 boundary angles, then a golden
/// section refinement around the best angle.
fn disc_max(field: &GridField, a: f64, b: f64, rho_idx: f64) -> f64 {
    let at = |th: f64| sample_field(field, a + rho_idx * th.cos(), b + rho_idx * th.sin());
    let k = 48;
    let mut best = field.get(a as usize, b as usize);
    let mut best_th = 0.0;
    let mut best_edge = f64::NEG_INFINITY;
    for l in 0..k {
        let th = 2.0 * PI * l as f64 / k as f64;
        let v = at(th);
        if v > best_edge {
            best_edge = v;
            best_th = th;
        }
    }
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best_th - 2.0 * PI / k as f64, best_th + 2.0 * PI / k as f64);
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let (mut f1, mut f2) = (at(x1), at(x2));
    for _ in 0..40 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = at(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = at(x1);
        }
    }
    best = best.max(best_edge).max(f1).max(f2);
    best
}

/// Variable-radius sup-convolution of a plane-like solution by the profile,
/// its harmonic lift below the line `r0` above the nearest original boundary
/// point, and the free-boundary slope report.
pub fn bend(solution: &PlaneLikeSolution, profile: &BendingProfile, medium: &PeriodicMedium, r0: f64) -> Result<BendResult> {
    let v = &solution.cell_solution.field;
    let grid = v.grid;
    if profile.phi.grid.n_tan != grid.n_tan || profile.phi.grid.n_nrm != grid.n_nrm || profile.phi.grid.h != grid.h {
        return invalid("profile grid differs from the solution grid");
    }
    let (nt, h) = (grid.n_tan, grid.h);
    let rows = grid.n_nrm + 1;
    let phi_max = profile.phi.values.iter().cloned().fold(0.0, f64::max);
    if phi_max > 0.5 * grid.height {
        return invalid("profile exceeds half the slab height");
    }

    let bent_rows: Vec<Vec<(f64, bool)>> = (0..rows)
        .into_par_iter()
        .map(|j| {
            (0..nt)
                .map(|i| {
                    let rho = profile.phi.get(i, j);
                    let d = j as f64 * h;
                    if d - rho < 0.0 || d + rho > grid.height {
                        (v.get(i, j), false)
                    } else {
                        (disc_max(v, i as f64, j as f64, rho / h).max(v.get(i, j)), true)
                    }
                })
                .collect()
        })
        .collect();
    let mut bent = GridField::zeros(grid);
    let mut valid = vec![false; nt * rows];
    for (j, row) in bent_rows.iter().enumerate() {
        for (i, &(x, ok)) in row.iter().enumerate() {
            bent.set(i, j, x);
            valid[j * nt + i] = ok;
        }
    }
    if !bent.values.iter().zip(&valid).any(|(x, ok)| *ok && *x > 0.0) {
        return Err(Error::EmptyPositivity);
    }

    // Harmonic lift on {v^φ > 0} below the cut row.
    let r_min = solution.cell_solution.r;
    let j_cut = (((r_min - r0) / h).floor().max(1.0)) as usize;
    let mut index = vec![usize::MAX; nt * rows];
    let mut unknowns = Vec::new();
    for j in j_cut..rows - 1 {
        for i in 0..nt {
            let k = j * nt + i;
            if valid[k] && bent.get(i, j) > 0.0 {
                index[k] = unknowns.len();
                unknowns.push((i, j));
            }
        }
    }
    let mut csr_rows = Vec::with_capacity(unknowns.len());
    let mut rhs = vec![0.0; unknowns.len()];
    for (row, &(i, j)) in unknowns.iter().enumerate() {
        let mut entries = vec![(row, 4.0)];
        for (ii, jj) in [((i + 1) % nt, j), ((i + nt - 1) % nt, j), (i, j - 1), (i, j + 1)] {
            let k = jj * nt + ii;
            if index[k] != usize::MAX {
                entries.push((index[k], -1.0));
            } else {
                rhs[row] += bent.get(ii, jj);
            }
        }
        csr_rows.push(entries);
    }
    let mut lifted = bent.clone();
    if !unknowns.is_empty() {
        let a = Csr::from_rows(csr_rows);
        let mut x: Vec<f64> = unknowns.iter().map(|&(i, j)| bent.get(i, j)).collect();
        let scale = bent.values.iter().cloned().fold(0.0, f64::max).max(1.0);
        pcg(&a, &rhs, &mut x, 1e-12 * scale, 50_000)?;
        for (&(i, j), val) in unknowns.iter().zip(&x) {
            lifted.set(i, j, *val);
        }
    }

    // Free-boundary slope of v^φ per column.
    let mut crossings = Vec::with_capacity(nt);
    for i in 0..nt {
        let mut jl = None;
        for j in 1..rows {
            if valid[j * nt + i] && bent.get(i, j) <= 0.0 {
                jl = Some(j - 1);
                break;
            }
        }
        let Some(jl) = jl else {
            crossings.push(None);
            continue;
        };
        if jl == 0 {
            crossings.push(None);
            continue;
        }
        let s = (bent.get(i, jl - 1) - bent.get(i, jl)) / h;
        if !(s > 0.0) {
            crossings.push(None);
            continue;
        }
        crossings.push(Some((jl as f64 * h + bent.get(i, jl) / s, s)));
    }
    let mut slope_report = Vec::new();
    for i in 0..nt {
        let Some((depth, s)) = crossings[i] else { continue };
        let (ip, im) = ((i + 1) % nt, (i + nt - 1) % nt);
        let gp = match (crossings[ip], crossings[im]) {
            (Some(a), Some(b)) => (a.0 - b.0) / (2.0 * h),
            _ => 0.0,
        };
        let measured = s * (1.0 + gp * gp).sqrt();
        let j = ((depth / h).round() as usize).min(rows - 1);
        let jj = j.clamp(1, rows - 2);
        let gx = (profile.phi.get(ip, jj) - profile.phi.get(im, jj)) / (2.0 * h);
        let gz = (profile.phi.get(i, jj - 1) - profile.phi.get(i, jj + 1)) / (2.0 * h);
        let rho = profile.phi.get(i, j);
        let (ball_inf, _) = medium.ball_extrema(grid.point(i as f64 * h, depth), rho);
        slope_report.push(SlopeRow {
            column: i,
            depth,
            measured,
            grad_phi: (gx * gx + gz * gz).sqrt(),
            ball_inf,
        });
    }

    // Lift bracket near the original front.
    let g = &solution.cell_solution.boundary.g;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..nt {
        for j in 0..rows {
            let d = j as f64 * h;
            let phi = profile.phi.get(i, j);
            if v.get(i, j) <= 0.0 || !valid[j * nt + i] || g[i] - d > (0.5 * phi).max(h) {
                continue;
            }
            let ratio = (lifted.get(i, j) - v.get(i, j)) / phi;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }

    let mut sub: f64 = 0.0;
    for j in 1..rows - 1 {
        for i in 0..nt {
            let (ip, im) = ((i + 1) % nt, (i + nt - 1) % nt);
            let nbrs = [(i, j), (ip, j), (im, j), (i, j - 1), (i, j + 1)];
            if nbrs.iter().any(|&(a, b)| !valid[b * nt + a] || bent.get(a, b) <= 0.0) {
                continue;
            }
            let lap = (bent.get(ip, j) + bent.get(im, j) + bent.get(i, j - 1) + bent.get(i, j + 1) - 4.0 * bent.get(i, j)) / (h * h);
            if -lap > sub {
                log::trace!("subharmonic defect {} at ({i}, {j})", -lap);
            }
            sub = sub.max(-lap);
        }
    }

    Ok(BendResult {
        bent,
        lifted,
        valid,
        slope_report,
        ratio_band: (lo, hi),
        subharmonic_defect: sub,
    })
}
