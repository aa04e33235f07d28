//! Approximate corrector problem on a slab, the t → ∞ extrapolation of its
//! slope, and diagnostics of its structure.

use rayon::prelude::*;

use crate::direction::{irreducible_directions, Direction};
use crate::error::{invalid, Error, Result};
use crate::grid::{boundary_gradient, BoundaryModel, GridField, HeightFunction, SlabGrid, SlabSolver};
use crate::linalg::DenseLu;
use crate::medium::PeriodicMedium;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Front grown from the data line; its slope tends to the upper endpoint.
    MinSupersolution,
    /// Front retracted from the far wall; its slope tends to the lower endpoint.
    MaxSubsolution,
}

impl Mode {
    fn sign(self) -> f64 {
        match self {
            Mode::MinSupersolution => 1.0,
            Mode::MaxSubsolution => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SlabProblem {
    pub medium: PeriodicMedium,
    pub t: f64,
    pub grid: SlabGrid,
    pub mode: Mode,
}

impl SlabProblem {
    /// Builds the slab for a rational direction at spacing ≤ `h`.
    pub fn new(medium: &PeriodicMedium, direction: Direction, t: f64, h: f64, mode: Mode) -> Result<Self> {
        if !(t > 0.0) {
            return invalid("datum t must be positive");
        }
        let grid = SlabGrid::for_direction(direction, 2.0 * t / medium.qmin(), h)?;
        Self::on_grid(medium, grid, t, mode)
    }

    pub fn on_grid(medium: &PeriodicMedium, grid: SlabGrid, t: f64, mode: Mode) -> Result<Self> {
        if grid.height < 2.0 * t / medium.qmin() - 1e-9 {
            return invalid(format!(
                "slab height {} below 2t/qmin = {}",
                grid.height,
                2.0 * t / medium.qmin()
            ));
        }
        if grid.h > t / (20.0 * medium.qmax()) {
            log::debug!(
                "grid spacing {} coarser than t/(20 qmax) = {:.4}",
                grid.h,
                t / (20.0 * medium.qmax())
            );
        }
        Ok(SlabProblem {
            medium: medium.clone(),
            t,
            grid,
            mode,
        })
    }

    pub fn direction(&self) -> Direction {
        self.grid.direction
    }

    #[inline]
    fn q_at(&self, i: usize, depth: f64) -> f64 {
        self.medium.eval(self.grid.point(i as f64 * self.grid.h, depth))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub omega: f64,
    pub max_iter: usize,
    /// Largest advance of a column per iteration, in grid spacings.
    pub max_jump: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-3,
            omega: 0.5,
            max_iter: 4000,
            max_jump: 4.0,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolveOptions { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct CellSolution {
    pub field: GridField,
    pub boundary: HeightFunction,
    pub t: f64,
    pub mode: Mode,
    pub r: f64,
    pub alpha: f64,
    pub width_osc: f64,
    pub fb_residual: f64,
    pub iterations: usize,
    /// Largest backward move of the column-extreme front position in one iteration.
    pub monotonicity_slack: f64,
    pub omega: f64,
    pub history: Vec<f64>,
}

/// Circulant approximation of the linearized map g ↦ |∇u| around a flat front.
fn dtn_circulant(n: usize, h: f64, g_mean: f64, grad_mean: f64) -> Vec<f64> {
    let period = n as f64 * h;
    let sigma: Vec<f64> = (0..n)
        .map(|m| {
            let mm = m.min(n - m) as f64;
            if mm == 0.0 {
                grad_mean / g_mean
            } else {
                let k = 2.0 * std::f64::consts::PI * mm / period;
                let kappa = 2.0 / h * (k * h / 2.0).sin();
                grad_mean * kappa / (kappa * g_mean).tanh()
            }
        })
        .collect();
    (0..n)
        .map(|l| {
            let mut c = 0.0;
            for (m, s) in sigma.iter().enumerate() {
                c += s * (2.0 * std::f64::consts::PI * (m * l % n) as f64 / n as f64).cos();
            }
            c / n as f64
        })
        .collect()
}

/// Solves the corrector problem with default options.
pub fn solve_corrector(problem: &SlabProblem, tol: f64) -> Result<CellSolution> {
    solve_corrector_with(problem, &SolveOptions::with_tol(tol))
}

pub fn solve_corrector_with(problem: &SlabProblem, opts: &SolveOptions) -> Result<CellSolution> {
    let grid = problem.grid;
    // Flat fronts at t/qmax and t/qmin already bracket both extremal
    // solutions, so the iteration starts there rather than at the slab ends.
    let (t, h) = (problem.t, grid.h);
    let start = match problem.mode {
        Mode::MinSupersolution => (t / problem.medium.qmax() - 2.0 * h).max(2.0 * h),
        Mode::MaxSubsolution => (t / problem.medium.qmin() + 2.0 * h).min(grid.height - h),
    };
    let start = vec![start; grid.n_tan];
    front_iteration(problem, opts, start, None)
}

/// Solves for a front whose field has mean normal slope `slope`, starting
/// from `start`. The datum on the data line is rescaled every iteration.
pub fn solve_prescribed_slope(problem: &SlabProblem, opts: &SolveOptions, slope: f64, start: Vec<f64>) -> Result<CellSolution> {
    if !(slope > 0.0) {
        return invalid("slope must be positive");
    }
    if start.len() != problem.grid.n_tan {
        return invalid("start front has the wrong number of columns");
    }
    front_iteration(problem, opts, start, Some(slope))
}

/// Field for the front `region`, with the datum fixed or chosen so the mean slope is `slope`.
fn solve_top(solver: &mut SlabSolver, region: &HeightFunction, t: f64, slope: Option<f64>) -> Result<(GridField, f64)> {
    match slope {
        None => Ok((solver.solve(region, t)?, t)),
        Some(a) => {
            let mut field = solver.solve(region, 1.0)?;
            let grid = field.grid;
            let nt = grid.n_tan;
            let mean_drop = (0..nt).map(|i| field.get(i, 0) - field.get(i, 1)).sum::<f64>() / nt as f64;
            let scale = a * grid.h / mean_drop;
            for v in field.values.iter_mut() {
                *v *= scale;
            }
            Ok((field, scale))
        }
    }
}

fn front_iteration(problem: &SlabProblem, opts: &SolveOptions, mut g: Vec<f64>, slope: Option<f64>) -> Result<CellSolution> {
    let grid = problem.grid;
    let (nt, h) = (grid.n_tan, grid.h);
    let mut t = problem.t;
    let sign = match slope {
        None => problem.mode.sign(),
        Some(_) => 1.0,
    };
    let g_lo = h;
    let g_hi = grid.height;
    for v in g.iter_mut() {
        *v = v.clamp(g_lo, g_hi);
    }
    let mut solver = SlabSolver::new(grid, BoundaryModel::CutCell);
    let mut omega = opts.omega;
    let mut history = Vec::new();
    let mut prev_step: Vec<f64> = vec![0.0; nt];
    let mut stalls = 0usize;
    let mut front_extreme = match problem.mode {
        Mode::MinSupersolution => g.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        Mode::MaxSubsolution => g.iter().cloned().fold(f64::INFINITY, f64::min),
    };
    let mut monotonicity_slack: f64 = 0.0;
    let stop = opts.tol * h;

    for iter in 1..=opts.max_iter {
        let region = HeightFunction { g: g.clone() };
        let (field, top) = solve_top(&mut solver, &region, t, slope)?;
        t = top;
        let grad = boundary_gradient(&field, &region);
        let gv: Vec<f64> = grad
            .iter()
            .zip(&g)
            .map(|(v, &gi)| v.unwrap_or(t / gi))
            .collect();
        let qv: Vec<f64> = (0..nt).map(|i| problem.q_at(i, g[i])).collect();
        let resid: Vec<f64> = gv.iter().zip(&qv).map(|(a, b)| a - b).collect();

        // Preconditioned step (C + D) Δ = ω R.
        let g_mean = g.iter().sum::<f64>() / nt as f64;
        let grad_mean = gv.iter().sum::<f64>() / nt as f64;
        let c = dtn_circulant(nt, h, g_mean, grad_mean);
        let dq: Vec<f64> = (0..nt)
            .map(|a| {
                let eta = 0.25 * h;
                (problem.q_at(a, g[a] + eta) - problem.q_at(a, g[a] - eta)) / (2.0 * eta)
            })
            .collect();
        let rhs: Vec<f64> = resid.iter().map(|r| omega * r).collect();
        let precond_step = |clamp: bool| -> Result<Vec<f64>> {
            let mut mat = vec![0.0; nt * nt];
            for a in 0..nt {
                for b in 0..nt {
                    mat[a * nt + b] = c[(a + nt - b) % nt];
                }
                mat[a * nt + a] += if clamp { dq[a].max(0.0) } else { dq[a] };
            }
            Ok(DenseLu::new(nt, mat)?.solve(&rhs))
        };
        let mut step = precond_step(true)?;
        if step.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverStagnation { residual: f64::NAN });
        }
        // Advances stop at the first place the one-dimensional model would
        // stick and at max_jump, retreats at ω·h. The caps scale the whole
        // step; clipping single columns grows grid-scale zigzags.
        let mut scale: f64 = 1.0;
        for i in 0..nt {
            let adv = sign * step[i];
            let cap = if adv > 0.0 {
                let limit = adv.min(opts.max_jump * h);
                let mut cap = limit;
                let mut k = 1;
                loop {
                    let d = 0.25 * h * k as f64;
                    if d >= limit {
                        break;
                    }
                    let gp = g[i] + sign * d;
                    if gp <= g_lo || gp >= g_hi {
                        cap = d;
                        break;
                    }
                    let model = if slope.is_some() { gv[i] } else { gv[i] * g[i] / gp };
                    if sign * (model - problem.q_at(i, gp)) <= 0.0 {
                        cap = d;
                        break;
                    }
                    k += 1;
                }
                cap
            } else {
                omega * h
            };
            if adv.abs() > cap {
                scale = scale.min(cap / adv.abs());
            }
        }
        for i in 0..nt {
            let new = (g[i] + scale * step[i]).clamp(g_lo, g_hi);
            step[i] = new - g[i];
        }

        let max_step = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        history.push(max_step);
        if log::log_enabled!(log::Level::Trace) {
            let worst = (0..nt).max_by(|&a, &b| step[a].abs().partial_cmp(&step[b].abs()).unwrap()).unwrap_or(0);
            log::trace!(
                "iteration {iter}: front [{:.4}, {:.4}], max step {max_step:.2e} at column {worst} (g {:.4}, residual {:.2e}), omega {omega}",
                g.iter().cloned().fold(f64::INFINITY, f64::min),
                g.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                g[worst],
                resid[worst]
            );
        }
        let flips = step
            .iter()
            .zip(&prev_step)
            .filter(|(a, b)| a.abs() > 10.0 * stop && (**a) * (**b) < 0.0)
            .count();
        let prev_max = if history.len() >= 2 { history[history.len() - 2] } else { f64::INFINITY };
        if flips > 0 && max_step >= 0.9 * prev_max {
            stalls += 1;
        } else {
            stalls = 0;
        }
        if stalls >= 3 {
            omega *= 0.5;
            stalls = 0;
            log::debug!("oscillation at iteration {iter}; damping reduced to {omega}");
            if omega < 1.0 / 64.0 {
                let column = step
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                return Err(Error::GraphAssumptionViolated { column });
            }
        }
        prev_step.clone_from(&step);
        for i in 0..nt {
            g[i] += step[i];
        }
        let extreme = match problem.mode {
            Mode::MinSupersolution => g.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            Mode::MaxSubsolution => g.iter().cloned().fold(f64::INFINITY, f64::min),
        };
        monotonicity_slack = monotonicity_slack.max(sign * (front_extreme - extreme));
        front_extreme = extreme;

        if max_step < stop {
            let region = HeightFunction { g };
            let (field, t) = solve_top(&mut solver, &region, t, slope)?;
            let grad = boundary_gradient(&field, &region);
            let mut fb: f64 = 0.0;
            for (i, v) in grad.iter().enumerate() {
                if let Some(v) = v {
                    fb = fb.max((v - problem.q_at(i, region.g[i])).abs());
                }
            }
            let r = region.min();
            return Ok(CellSolution {
                width_osc: region.oscillation(),
                boundary: region,
                field,
                t,
                mode: problem.mode,
                r,
                alpha: t / r,
                fb_residual: fb,
                iterations: iter,
                monotonicity_slack,
                omega,
                history,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        last_update: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// One (t, r, α) sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub t: f64,
    pub r: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct EndpointEstimate {
    pub value: f64,
    /// Fit deviation plus grid error plus fit shift.
    pub err: f64,
    /// Richardson estimate of the O(h²) error of α at the smallest t.
    pub grid_err: f64,
    /// Change of the endpoint when the fit window moves one t earlier.
    pub fit_shift: f64,
    pub slope_c: f64,
    pub series: Vec<SeriesPoint>,
    /// (t_i, t_j, r(t_i + t_j) − r(t_i) − r(t_j)) for sums present in the list.
    pub defects: Vec<(f64, f64, f64)>,
    pub width_osc: Vec<f64>,
    pub fb_residual: Vec<f64>,
}

/// Least-squares fit α = a + c/t; returns (a, c, max |residual|).
pub fn fit_inverse_t(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, a) in points {
        let x = 1.0 / t;
        sx += x;
        sy += a;
        sxx += x * x;
        sxy += x * a;
    }
    let det = n * sxx - sx * sx;
    let (a, c) = if det.abs() < 1e-300 {
        (sy / n, 0.0)
    } else {
        ((sxx * sy - sx * sxy) / det, (n * sxy - sx * sy) / det)
    };
    let dev = points
        .iter()
        .map(|&(t, y)| (a + c / t - y).abs())
        .fold(0.0, f64::max);
    (a, c, dev)
}

pub fn subadditivity_defects(series: &[SeriesPoint]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    let find = |t: f64| series.iter().find(|p| (p.t - t).abs() <= 1e-9 * t.max(1.0));
    for (a, p) in series.iter().enumerate() {
        for q in &series[a..] {
            if let Some(s) = find(p.t + q.t) {
                out.push((p.t, q.t, s.r - p.r - q.r));
            }
        }
    }
    out
}

/// Slope endpoint from the series over `t_list`: α = a + c/t fitted on the
/// last three points. One extra solve at the smallest t with half the
/// spacing supplies the grid part of the error bar, and refitting on the
/// three points before the last supplies the extrapolation part.
pub fn estimate_endpoint(
    medium: &PeriodicMedium,
    direction: Direction,
    t_list: &[f64],
    mode: Mode,
    h: f64,
    opts: &SolveOptions,
) -> Result<EndpointEstimate> {
    if t_list.len() < 4 {
        return invalid("t_list needs at least 4 entries");
    }
    if t_list.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("t_list must be increasing");
    }
    let mut series = Vec::new();
    let mut width = Vec::new();
    let mut fbr = Vec::new();
    let mut h_used = h;
    for &t in t_list {
        let sol = SlabProblem::new(medium, direction, t, h, mode).and_then(|p| solve_corrector_with(&p, opts));
        match sol {
            Ok(s) => {
                h_used = s.field.grid.h;
                series.push(SeriesPoint { t, r: s.r, alpha: s.alpha });
                width.push(s.width_osc);
                fbr.push(s.fb_residual);
            }
            Err(e) => {
                return Err(Error::PartialSeries {
                    t,
                    series: series.iter().map(|p| (p.t, p.r, p.alpha)).collect(),
                    source: Box::new(e),
                })
            }
        }
    }
    let partial = |e: Error, series: &[SeriesPoint]| Error::PartialSeries {
        t: t_list[0],
        series: series.iter().map(|p| (p.t, p.r, p.alpha)).collect(),
        source: Box::new(e),
    };
    let fine = SlabProblem::new(medium, direction, t_list[0], 0.5 * h, mode)
        .and_then(|p| solve_corrector_with(&p, opts))
        .map_err(|e| partial(e, &series))?;
    let h_fine = fine.field.grid.h;
    let grid_err = (series[0].alpha - fine.alpha).abs() * h_used * h_used / (h_used * h_used - h_fine * h_fine);
    let window = |end: usize| -> Vec<(f64, f64)> { series[end - 3..end].iter().map(|p| (p.t, p.alpha)).collect() };
    let n = series.len();
    let (value, slope_c, dev) = fit_inverse_t(&window(n));
    let fit_shift = (value - fit_inverse_t(&window(n - 1)).0).abs();
    Ok(EndpointEstimate {
        value,
        err: dev + grid_err + fit_shift,
        grid_err,
        fit_shift,
        slope_c,
        defects: subadditivity_defects(&series),
        series,
        width_osc: width,
        fb_residual: fbr,
    })
}

#[derive(Debug, Clone)]
pub struct PinningInterval {
    pub direction: Direction,
    pub q_lower: f64,
    pub q_lower_err: f64,
    pub q_upper: f64,
    pub q_upper_err: f64,
    pub lower_series: Vec<SeriesPoint>,
    pub upper_series: Vec<SeriesPoint>,
    /// `None` on success, otherwise the failure reason.
    pub failure: Option<String>,
}

impl PinningInterval {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

pub fn pinning_interval(
    medium: &PeriodicMedium,
    direction: Direction,
    t_list: &[f64],
    h: f64,
    opts: &SolveOptions,
) -> PinningInterval {
    let run = |mode| estimate_endpoint(medium, direction, t_list, mode, h, opts);
    let (up, lo) = rayon::join(|| run(Mode::MinSupersolution), || run(Mode::MaxSubsolution));
    match (up, lo) {
        (Ok(u), Ok(l)) => PinningInterval {
            direction,
            q_lower: l.value,
            q_lower_err: l.err,
            q_upper: u.value,
            q_upper_err: u.err,
            lower_series: l.series,
            upper_series: u.series,
            failure: None,
        },
        (u, l) => {
            let msg = [u.err(), l.err()]
                .into_iter()
                .flatten()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            PinningInterval {
                direction,
                q_lower: f64::NAN,
                q_lower_err: f64::NAN,
                q_upper: f64::NAN,
                q_upper_err: f64::NAN,
                lower_series: Vec::new(),
                upper_series: Vec::new(),
                failure: Some(msg),
            }
        }
    }
}

/// Pinning intervals for every irreducible ξ with |ξ|∞ ≤ `xi_max`, sorted by angle.
pub fn sweep_directions(
    medium: &PeriodicMedium,
    xi_max: i64,
    t_list: &[f64],
    h: f64,
    opts: &SolveOptions,
) -> Result<Vec<PinningInterval>> {
    if xi_max < 1 {
        return invalid("xi_max must be at least 1");
    }
    let dirs = irreducible_directions(xi_max);
    Ok(sweep_list(medium, &dirs, t_list, h, opts))
}

pub fn sweep_list(
    medium: &PeriodicMedium,
    dirs: &[Direction],
    t_list: &[f64],
    h: f64,
    opts: &SolveOptions,
) -> Vec<PinningInterval> {
    let mut out: Vec<PinningInterval> = dirs
        .par_iter()
        .map(|&d| pinning_interval(medium, d, t_list, h, opts))
        .collect();
    out.sort_by(|a, b| a.direction.angle().partial_cmp(&b.direction.angle()).unwrap());
    out
}

/// Bilinear sample of a slab field at fractional node coordinates; zero
/// outside the normal range, periodic tangentially.
pub fn sample_field(field: &GridField, a: f64, b: f64) -> f64 {
    let nt = field.grid.n_tan as i64;
    let rows = field.rows() as i64;
    let (a0, b0) = (a.floor(), b.floor());
    let (fa, fb) = (a - a0, b - b0);
    let mut acc = 0.0;
    for (da, wa) in [(0i64, 1.0 - fa), (1, fa)] {
        for (db, wb) in [(0i64, 1.0 - fb), (1, fb)] {
            let w = wa * wb;
            if w == 0.0 {
                continue;
            }
            let jj = b0 as i64 + db;
            if jj < 0 || jj >= rows {
                continue;
            }
            let ii = (a0 as i64 + da).rem_euclid(nt);
            acc += w * field.get(ii as usize, jj as usize);
        }
    }
    acc
}

/// max over nodes of (u(x + k) − u(x))⁺ on the overlap of the slab and its translate.
pub fn birkhoff_check(solution: &CellSolution, k: [i64; 2]) -> f64 {
    let field = &solution.field;
    let grid = field.grid;
    let p = grid.direction.unit();
    let q = grid.direction.perp();
    let kf = [k[0] as f64, k[1] as f64];
    let da = (kf[0] * q[0] + kf[1] * q[1]) / grid.h;
    let db = -(kf[0] * p[0] + kf[1] * p[1]) / grid.h;
    let mut defect: f64 = 0.0;
    for j in 0..field.rows() {
        let jj = j as f64 + db;
        if jj < 0.0 || jj > grid.n_nrm as f64 {
            continue;
        }
        for i in 0..grid.n_tan {
            let v = sample_field(field, i as f64 + da, jj) - field.get(i, j);
            defect = defect.max(v);
        }
    }
    defect
}

/// |∇u| along the data line from one-sided second-order differences.
pub fn data_line_gradient(field: &GridField) -> Vec<f64> {
    let h = field.grid.h;
    (0..field.grid.n_tan)
        .map(|i| (3.0 * field.get(i, 0) - 4.0 * field.get(i, 1) + field.get(i, 2)).abs() / (2.0 * h))
        .collect()
}

#[derive(Debug, Clone)]
pub struct NormalBoundReport {
    /// (t, max |∇u_t| − α(t) deviation on the data line).
    pub table: Vec<(f64, f64)>,
    pub exponent: Option<f64>,
    /// Every deviation is at rounding level; the fit is skipped.
    pub exact: bool,
}

pub fn verify_normal_bound(
    medium: &PeriodicMedium,
    direction: Direction,
    t_list: &[f64],
    h: f64,
    opts: &SolveOptions,
) -> Result<NormalBoundReport> {
    let mut table = Vec::new();
    let mut scale: f64 = 0.0;
    for &t in t_list {
        let p = SlabProblem::new(medium, direction, t, h, Mode::MinSupersolution)?;
        let s = solve_corrector_with(&p, opts)?;
        let dev = data_line_gradient(&s.field)
            .iter()
            .map(|gr| (gr - s.alpha).abs())
            .fold(0.0, f64::max);
        scale = scale.max(s.alpha);
        table.push((t, dev));
    }
    let exact = table.iter().all(|&(_, d)| d <= 1e-6 * scale);
    let exponent = if exact || table.len() < 2 {
        None
    } else {
        let pts: Vec<(f64, f64)> = table
            .iter()
            .filter(|(_, d)| *d > 0.0)
            .map(|&(t, d)| (t.ln(), d.ln()))
            .collect();
        Some(loglog_slope(&pts))
    };
    Ok(NormalBoundReport { table, exponent, exact })
}

/// Least-squares slope of y against x.
pub fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
