//! Discrete Alt-Caffarelli energy on the slab and its minimization over
//! staircase configurations.
//!
//! Fields are read as continuous piecewise-linear functions on the
//! right-triangle mesh of the grid (each cell split along its anti-diagonal),
//! with Q² frozen per triangle at the centroid. A configuration is the vector
//! of first-zero rows `k_i`; its field is the discrete harmonic extension.

use std::collections::HashSet;

use crate::error::{invalid, Error, Result};
use crate::grid::{BoundaryModel, GridField, HeightFunction, SlabGrid, SlabSolver};
use crate::medium::PeriodicMedium;

#[derive(Debug, Clone)]
pub struct EnergyProblem {
    pub grid: SlabGrid,
    pub medium: PeriodicMedium,
    pub top_value: f64,
    pub lower_barrier: Option<GridField>,
    pub upper_barrier: Option<GridField>,
    pub epsilon: f64,
    /// Inclusive range of admissible first-zero rows.
    pub level_range: Option<(usize, usize)>,
}

impl EnergyProblem {
    pub fn new(grid: SlabGrid, medium: PeriodicMedium, top_value: f64, epsilon: f64) -> Result<Self> {
        if !(top_value > 0.0) {
            return invalid("top value must be positive");
        }
        if !(epsilon > 0.0) || grid.h > epsilon / 10.0 + 1e-12 {
            return invalid(format!("grid spacing {} must be at most epsilon/10 = {}", grid.h, epsilon / 10.0));
        }
        Ok(EnergyProblem {
            grid,
            medium,
            top_value,
            lower_barrier: None,
            upper_barrier: None,
            epsilon,
            level_range: None,
        })
    }

    pub fn with_levels(mut self, lo: usize, hi: usize) -> Self {
        self.level_range = Some((lo, hi));
        self
    }

    pub fn with_barriers(mut self, lower: GridField, upper: GridField) -> Self {
        self.lower_barrier = Some(lower);
        self.upper_barrier = Some(upper);
        self
    }

    fn levels(&self) -> (usize, usize) {
        self.level_range.unwrap_or((1, self.grid.n_nrm))
    }
}

/// Per-triangle Q² table for a grid.
struct Weights {
    nt: usize,
    q2: Vec<f64>,
}

impl Weights {
    fn new(problem: &EnergyProblem) -> Self {
        let g = &problem.grid;
        let nt = g.n_tan;
        let mut q2 = Vec::with_capacity(2 * nt * g.n_nrm);
        for j in 0..g.n_nrm {
            for i in 0..nt {
                for c in [1.0 / 3.0, 2.0 / 3.0] {
                    let x = g.point((i as f64 + c) * g.h, (j as f64 + c) * g.h);
                    q2.push(problem.medium.eval_scaled(x, problem.epsilon).powi(2));
                }
            }
        }
        Weights { nt, q2 }
    }

    #[inline]
    fn get(&self, i: usize, j: usize, upper: bool) -> f64 {
        self.q2[2 * (j * self.nt + i) + upper as usize]
    }
}

/// Triangle vertex triples for cell (i, j): lower-left and upper-right halves.
#[inline]
fn cell_triangles(nt: usize, i: usize, j: usize) -> [[(usize, usize); 3]; 2] {
    let ip = (i + 1) % nt;
    [
        [(i, j), (ip, j), (i, j + 1)],
        [(ip, j + 1), (i, j + 1), (ip, j)],
    ]
}

/// |∇w|² on a mesh triangle whose first vertex is the right-angle corner.
#[inline]
fn grad2(w: [f64; 3], h: f64) -> f64 {
    ((w[1] - w[0]).powi(2) + (w[2] - w[0]).powi(2)) / (h * h)
}

fn energy_rows(field: &GridField, w: &Weights, rows: usize) -> f64 {
    let g = &field.grid;
    let (nt, h) = (g.n_tan, g.h);
    let area = 0.5 * h * h;
    let mut total = 0.0;
    let mut comp = 0.0;
    for j in 0..rows.min(g.n_nrm) {
        for i in 0..nt {
            for (t, tri) in cell_triangles(nt, i, j).iter().enumerate() {
                let v = [field.get(tri[0].0, tri[0].1), field.get(tri[1].0, tri[1].1), field.get(tri[2].0, tri[2].1)];
                let mut e = area * grad2(v, h);
                if v[0] > 0.0 || v[1] > 0.0 || v[2] > 0.0 {
                    e += area * w.get(i, j, t == 1);
                }
                let y = e - comp;
                let s = total + y;
                comp = (s - total) - y;
                total = s;
            }
        }
    }
    total
}

/// Energy of the piecewise-linear interpolant of `field`.
pub fn energy(field: &GridField, problem: &EnergyProblem) -> f64 {
    let w = Weights::new(problem);
    energy_rows(field, &w, problem.grid.n_nrm)
}

/// Contribution of one triangle to E(u∧v) and E(u∨v), with the triangle
/// split along the zero line of u − v so both are exact.
fn split_triangle(u: [f64; 3], v: [f64; 3], h: f64, q2: f64) -> (f64, f64) {
    let area = 0.5 * h * h;
    let (gu, gv) = (grad2(u, h), grad2(v, h));
    let piece = |f: &[f64], a: f64, g2: f64| -> f64 {
        let pos = f.iter().any(|&x| x > 0.0);
        a * g2 + if pos { a * q2 } else { 0.0 }
    };
    let d = [u[0] - v[0], u[1] - v[1], u[2] - v[2]];
    let npos = d.iter().filter(|&&x| x > 0.0).count();
    let nneg = d.iter().filter(|&&x| x < 0.0).count();
    if npos == 0 {
        // u ≤ v
        return (piece(&u, area, gu), piece(&v, area, gv));
    }
    if nneg == 0 {
        return (piece(&v, area, gv), piece(&u, area, gu));
    }
    let m = if npos == 1 {
        d.iter().position(|&x| x > 0.0).unwrap()
    } else {
        d.iter().position(|&x| x < 0.0).unwrap()
    };
    let (k1, k2) = ((m + 1) % 3, (m + 2) % 3);
    let s1 = d[m] / (d[m] - d[k1]);
    let s2 = d[m] / (d[m] - d[k2]);
    let a_small = s1 * s2 * area;
    let a_rest = area - a_small;
    let lerp = |f: [f64; 3], k: usize, s: f64| f[m] + s * (f[k] - f[m]);
    let small = |f: [f64; 3]| [f[m], lerp(f, k1, s1), lerp(f, k2, s2)];
    let rest = |f: [f64; 3]| [lerp(f, k1, s1), lerp(f, k2, s2), f[k1], f[k2]];
    // On the small piece sign(u − v) = sign(d[m]).
    let (lo_small, lo_g, hi_small, hi_g) = if d[m] > 0.0 { (v, gv, u, gu) } else { (u, gu, v, gv) };
    let (lo_rest, lo_rg, hi_rest, hi_rg) = if d[m] > 0.0 { (u, gu, v, gv) } else { (v, gv, u, gu) };
    let meet = piece(&small(lo_small), a_small, lo_g) + piece(&rest(lo_rest), a_rest, lo_rg);
    let join = piece(&small(hi_small), a_small, hi_g) + piece(&rest(hi_rest), a_rest, hi_rg);
    (meet, join)
}

/// (E(u∧v), E(u∨v)) for the exact pointwise min and max of the interpolants.
pub fn lattice_pair_energy(u: &GridField, v: &GridField, problem: &EnergyProblem) -> (f64, f64) {
    let w = Weights::new(problem);
    let g = &problem.grid;
    let (nt, h) = (g.n_tan, g.h);
    let (mut meet, mut join) = (0.0, 0.0);
    for j in 0..g.n_nrm {
        for i in 0..nt {
            for (t, tri) in cell_triangles(nt, i, j).iter().enumerate() {
                let a = [u.get(tri[0].0, tri[0].1), u.get(tri[1].0, tri[1].1), u.get(tri[2].0, tri[2].1)];
                let b = [v.get(tri[0].0, tri[0].1), v.get(tri[1].0, tri[1].1), v.get(tri[2].0, tri[2].1)];
                let (m, x) = split_triangle(a, b, h, w.get(i, j, t == 1));
                meet += m;
                join += x;
            }
        }
    }
    (meet, join)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub energy: f64,
    pub moved_columns: usize,
}

#[derive(Debug, Clone)]
pub struct Minimizer {
    pub field: GridField,
    /// First zero row per column.
    pub levels: Vec<usize>,
    pub energy: f64,
    pub trace: Vec<TraceEntry>,
    pub cycled: bool,
    pub barrier_active: bool,
    pub evaluations: usize,
}

impl Minimizer {
    /// Distance from the data line to the nearest boundary node.
    pub fn r(&self) -> f64 {
        *self.levels.iter().min().unwrap() as f64 * self.field.grid.h
    }

    pub fn alpha(&self, t: f64) -> f64 {
        t / self.r()
    }
}

/// Evaluates staircase configurations, reusing the factorization.
struct Evaluator<'a> {
    problem: &'a EnergyProblem,
    solver: SlabSolver,
    weights: Weights,
    evaluations: usize,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a EnergyProblem) -> Self {
        Evaluator {
            problem,
            solver: SlabSolver::new(problem.grid, BoundaryModel::Staircase),
            weights: Weights::new(problem),
            evaluations: 0,
        }
    }

    fn field(&mut self, k: &[usize]) -> Result<GridField> {
        let h = self.problem.grid.h;
        let region = HeightFunction {
            g: k.iter().map(|&ki| (ki as f64 - 0.5) * h).collect(),
        };
        self.solver.solve(&region, self.problem.top_value)
    }

    fn eval(&mut self, k: &[usize]) -> Result<(f64, GridField)> {
        self.evaluations += 1;
        let f = self.field(k)?;
        let rows = k.iter().max().unwrap() + 1;
        Ok((energy_rows(&f, &self.weights, rows), f))
    }

    fn feasible(&self, f: &GridField) -> bool {
        let slack = 1e-12 * self.problem.top_value;
        if let Some(lo) = &self.problem.lower_barrier {
            if f.values.iter().zip(&lo.values).any(|(a, b)| *a < b - slack) {
                return false;
            }
        }
        if let Some(hi) = &self.problem.upper_barrier {
            if f.values.iter().zip(&hi.values).any(|(a, b)| *a > b + slack) {
                return false;
            }
        }
        true
    }
}

fn energy_tol(e: f64) -> f64 {
    1e-12 * e.abs().max(1.0)
}

/// `a` is preferred over `b`: lower energy, then smaller Σk, then lexicographically smaller.
fn better(ea: f64, a: &[usize], eb: f64, b: &[usize]) -> bool {
    let tol = energy_tol(ea.max(eb));
    if ea < eb - tol {
        return true;
    }
    if ea > eb + tol {
        return false;
    }
    let (sa, sb): (usize, usize) = (a.iter().sum(), b.iter().sum());
    sa < sb || (sa == sb && a < b)
}

/// Candidate moves: single columns, all subsets (n ≤ 10) or cyclic runs, and
/// uniform shifts over one medium period.
fn moves(n: usize, period_levels: usize) -> Vec<(Vec<usize>, i64)> {
    let mut sets: Vec<Vec<usize>> = Vec::new();
    if n <= 10 {
        for mask in 1u32..(1u32 << n) {
            sets.push((0..n).filter(|&i| mask & (1 << i) != 0).collect());
        }
    } else {
        for len in 1..n {
            for start in 0..n {
                sets.push((0..len).map(|o| (start + o) % n).collect());
            }
        }
        sets.push((0..n).collect());
    }
    let mut out = Vec::new();
    for s in sets {
        out.push((s.clone(), 1));
        out.push((s, -1));
    }
    let all: Vec<usize> = (0..n).collect();
    for d in 2..=period_levels.max(1) as i64 {
        out.push((all.clone(), d));
        out.push((all.clone(), -d));
    }
    out
}

fn descend(ev: &mut Evaluator, start: Vec<usize>, lo: usize, hi: usize, constrained: bool) -> Result<(Vec<usize>, f64, GridField, Vec<TraceEntry>, bool, bool)> {
    let n = start.len();
    let period_levels = (ev.problem.epsilon / ev.problem.grid.h).ceil() as usize;
    let mv = moves(n, period_levels);
    let (mut e, mut f) = ev.eval(&start)?;
    let mut k = start;
    let mut trace = vec![TraceEntry { iter: 0, energy: e, moved_columns: 0 }];
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    seen.insert(k.clone());
    let mut blocked;
    let mut iter = 0;
    loop {
        iter += 1;
        let mut best: Option<(Vec<usize>, f64, GridField, usize)> = None;
        blocked = false;
        for (set, d) in &mv {
            let mut cand = k.clone();
            let mut ok = true;
            for &i in set {
                let v = cand[i] as i64 + d;
                if v < lo as i64 || v > hi as i64 {
                    ok = false;
                    break;
                }
                cand[i] = v as usize;
            }
            if !ok {
                continue;
            }
            let (ec, fc) = ev.eval(&cand)?;
            let (eb, kb) = match &best {
                Some((kb, eb, _, _)) => (*eb, kb.clone()),
                None => (e, k.clone()),
            };
            if better(ec, &cand, eb, &kb) {
                if constrained && !ev.feasible(&fc) {
                    blocked = true;
                    continue;
                }
                best = Some((cand, ec, fc, set.len()));
            }
        }
        match best {
            None => return Ok((k, e, f, trace, false, blocked)),
            Some((kb, eb, fb, moved)) => {
                if !seen.insert(kb.clone()) {
                    return Ok((k, e, f, trace, true, blocked));
                }
                k = kb;
                e = eb;
                f = fb;
                trace.push(TraceEntry { iter, energy: e, moved_columns: moved });
            }
        }
    }
}

fn finish(problem: &EnergyProblem, k: Vec<usize>, e: f64, f: GridField, trace: Vec<TraceEntry>, cycled: bool, barrier_active: bool, evaluations: usize) -> Minimizer {
    let _ = problem;
    Minimizer {
        field: f,
        levels: k,
        energy: e,
        trace,
        cycled,
        barrier_active,
        evaluations,
    }
}

/// Descent over staircase configurations.
///
/// Starts from the flat configuration at depth t/⟨Q²⟩^{1/2}; when the level
/// range holds at most 16 levels every flat configuration is also tried.
pub fn minimize(problem: &EnergyProblem) -> Result<Minimizer> {
    let (lo, hi) = problem.levels();
    if lo < 1 || hi > problem.grid.n_nrm || lo > hi {
        return invalid(format!("level range [{lo}, {hi}] outside [1, {}]", problem.grid.n_nrm));
    }
    let n = problem.grid.n_tan;
    let rms = problem.medium.rms_mean(1e-10)?;
    let guess = ((problem.top_value / rms / problem.grid.h).round() as usize).clamp(lo, hi);
    let mut starts = vec![guess];
    if hi - lo < 16 {
        starts.extend((lo..=hi).filter(|&l| l != guess));
    }
    let mut ev = Evaluator::new(problem);
    let mut best: Option<(Vec<usize>, f64, GridField, Vec<TraceEntry>, bool)> = None;
    for s in starts {
        let (k, e, f, trace, cycled, _) = descend(&mut ev, vec![s; n], lo, hi, false)?;
        let replace = match &best {
            None => true,
            Some((kb, eb, ..)) => better(e, &k, *eb, kb),
        };
        if replace {
            best = Some((k, e, f, trace, cycled));
        }
    }
    let (k, e, f, trace, cycled) = best.unwrap();
    Ok(finish(problem, k, e, f, trace, cycled, false, ev.evaluations))
}

/// Descent restricted to fields between the barriers.
pub fn minimize_constrained(problem: &EnergyProblem) -> Result<Minimizer> {
    let (Some(lower), Some(upper)) = (&problem.lower_barrier, &problem.upper_barrier) else {
        return invalid("both barriers are required");
    };
    let grid = &problem.grid;
    for (idx, (a, b)) in lower.values.iter().zip(&upper.values).enumerate() {
        if a > b || (*a > 0.0 && a >= b) {
            let (i, j) = (idx % grid.n_tan, idx / grid.n_tan);
            return Err(Error::InfeasibleBarriers(format!(
                "lower {a:.6} not strictly below upper {b:.6} at node ({i}, {j})"
            )));
        }
    }
    let (lo, hi) = problem.levels();
    let n = grid.n_tan;
    let mut ev = Evaluator::new(problem);
    let rms = problem.medium.rms_mean(1e-10)?;
    let guess = ((problem.top_value / rms / grid.h).round() as usize).clamp(lo, hi);
    // Flat starts ordered by distance from the guess.
    let mut order: Vec<usize> = (lo..=hi).collect();
    order.sort_by_key(|&l| (l as i64 - guess as i64).abs());
    let mut start = None;
    for l in order {
        let f = ev.field(&vec![l; n])?;
        if ev.feasible(&f) {
            start = Some(l);
            break;
        }
    }
    let Some(s) = start else {
        return Err(Error::InfeasibleBarriers("no admissible staircase configuration between the barriers".into()));
    };
    let (k, e, f, trace, cycled, blocked) = descend(&mut ev, vec![s; n], lo, hi, true)?;
    let gap = grid.h * problem.medium.qmin() / 4.0;
    let mut touching = false;
    for (idx, &v) in f.values.iter().enumerate() {
        if v > 0.0 {
            let (l, u) = (lower.values[idx], upper.values[idx]);
            if (l > 0.0 && v - l < gap) || (u > 0.0 && u - v < gap) {
                touching = true;
                break;
            }
        }
    }
    Ok(finish(problem, k, e, f, trace, cycled, touching || blocked, ev.evaluations))
}

/// Default enumeration cap, 6⁸ configurations.
pub const BRUTE_FORCE_CAP: u128 = 1_679_616;

/// Exhaustive minimization over all staircase configurations in the level range.
pub fn brute_force_minimize(problem: &EnergyProblem, cap: u128) -> Result<Minimizer> {
    let (lo, hi) = problem.levels();
    if lo < 1 || hi > problem.grid.n_nrm || lo > hi {
        return invalid(format!("level range [{lo}, {hi}] outside [1, {}]", problem.grid.n_nrm));
    }
    let n = problem.grid.n_tan;
    let base = (hi - lo + 1) as u128;
    let size = base.checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::SearchSpaceTooLarge { size, cap });
    }
    let mut ev = Evaluator::new(problem);
    let mut k = vec![lo; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let (e, _) = ev.eval(&k)?;
        let replace = match &best {
            None => true,
            Some((kb, eb)) => better(e, &k, *eb, kb),
        };
        if replace {
            best = Some((k.clone(), e));
        }
        // Odometer with the last column fastest, so most solves reuse the factorization.
        let mut c = n;
        loop {
            if c == 0 {
                let (kb, eb) = best.unwrap();
                let f = ev.field(&kb)?;
                let trace = vec![TraceEntry { iter: 0, energy: eb, moved_columns: 0 }];
                return Ok(finish(problem, kb, eb, f, trace, false, false, ev.evaluations));
            }
            c -= 1;
            if k[c] < hi {
                k[c] += 1;
                break;
            }
            k[c] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direction::Direction;

    fn slab(n_tan: usize, n_nrm: usize, h: f64) -> SlabGrid {
        SlabGrid::new(Direction::e1(), n_tan as f64 * h, n_nrm as f64 * h, h).unwrap()
    }

    #[test]
    fn zero_field_has_zero_energy() {
        let g = slab(10, 20, 0.05);
        let p = EnergyProblem::new(g, PeriodicMedium::constant(1.0).unwrap(), 1.0, 1.0).unwrap();
        assert_eq!(energy(&GridField::zeros(g), &p), 0.0);
    }

    #[test]
    fn unit_ramp_counts_both_terms() {
        // Slope-1 ramp over depth 1 on a unit-width slab.
        let g = slab(20, 40, 0.05);
        let p = EnergyProblem::new(g, PeriodicMedium::constant(1.0).unwrap(), 1.0, 1.0).unwrap();
        let f = GridField::from_fn(g, |_, j| (1.0 - j as f64 * 0.05).max(0.0));
        let e = energy(&f, &p);
        assert!((e - 2.0).abs() < 2.0 * 0.05, "{e}");
    }

    #[test]
    fn constant_medium_minimizer_depth() {
        let g = slab(4, 80, 0.05);
        let t = 2.0;
        let p = EnergyProblem::new(g, PeriodicMedium::constant(1.0).unwrap(), t, 1.0).unwrap();
        let m = minimize(&p).unwrap();
        assert!((m.r() - t).abs() <= 0.05 + 1e-12, "r = {}", m.r());
        let per_tangent = m.energy / g.period_len;
        assert!((per_tangent - 2.0 * t).abs() <= 0.1);
        assert!(m.levels.iter().all(|&k| k == m.levels[0]));
        assert!(m.trace.windows(2).all(|w| w[1].energy <= w[0].energy));
    }
}
