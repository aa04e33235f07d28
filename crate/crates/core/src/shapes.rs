//! Free boundary around a convex obstacle at finite ε: a radial front over
//! a polar grid, Hausdorff distances between fronts, and facet detection.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::cell::Mode;
use crate::error::{invalid, Error, Result};
use crate::grid::trace_slope;
use crate::linalg::{pcg, Csr};
use crate::medium::PeriodicMedium;

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

#[derive(Debug, Clone)]
pub struct ObstacleProblem {
    /// Convex polygon, counter-clockwise, containing the origin.
    pub obstacle: Vec<[f64; 2]>,
    pub medium: PeriodicMedium,
    pub epsilon: f64,
    pub box_side: f64,
    pub h: f64,
    /// Value of u on the obstacle.
    pub boundary_value: f64,
    pub n_theta: usize,
}

impl ObstacleProblem {
    pub fn new(obstacle: Vec<[f64; 2]>, medium: PeriodicMedium, epsilon: f64, box_side: f64, h: f64) -> Result<Self> {
        let n = obstacle.len();
        if n < 3 {
            return Err(Error::DegeneratePolyline(n));
        }
        for k in 0..n {
            let (a, b, c) = (obstacle[k], obstacle[(k + 1) % n], obstacle[(k + 2) % n]);
            if cross(sub(b, a), sub(c, b)) <= 0.0 {
                return invalid(format!("obstacle not strictly convex and counter-clockwise at vertex {}", (k + 1) % n));
            }
            if cross(sub(b, a), sub([0.0, 0.0], a)) <= 0.0 {
                return invalid("origin not strictly inside the obstacle");
            }
            if a[0].abs() >= 0.5 * box_side || a[1].abs() >= 0.5 * box_side {
                return invalid("obstacle not strictly inside the box");
            }
        }
        if !(epsilon > 0.0) {
            return invalid("epsilon must be positive");
        }
        if !(h > 0.0) || h > epsilon / 10.0 + 1e-12 {
            return invalid(format!("grid spacing {h} must be at most epsilon/10 = {}", epsilon / 10.0));
        }
        Ok(ObstacleProblem {
            obstacle,
            medium,
            epsilon,
            box_side,
            h,
            boundary_value: 1.0,
            n_theta: 720,
        })
    }

    pub fn with_n_theta(mut self, n: usize) -> Self {
        self.n_theta = n;
        self
    }

    pub fn with_boundary_value(mut self, v: f64) -> Self {
        self.boundary_value = v;
        self
    }

    /// Distance from the origin to the obstacle boundary along angle θ.
    pub fn obstacle_radius(&self, theta: f64) -> f64 {
        let d = [theta.cos(), theta.sin()];
        let n = self.obstacle.len();
        let mut best = f64::INFINITY;
        for k in 0..n {
            let (a, b) = (self.obstacle[k], self.obstacle[(k + 1) % n]);
            let e = sub(b, a);
            let den = cross(d, e);
            if den.abs() < 1e-300 {
                continue;
            }
            let t = cross(a, e) / den;
            let s = cross(a, d) / den;
            if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
                best = best.min(t);
            }
        }
        best
    }

    fn q(&self, x: [f64; 2]) -> f64 {
        self.medium.eval_scaled(x, self.epsilon)
    }
}

/// Field on the polar grid r_j = j·h_r, θ_i = 2πi/n_θ; row-major in j.
#[derive(Debug, Clone)]
pub struct PolarField {
    pub n_theta: usize,
    pub h_r: f64,
    pub n_r: usize,
    pub values: Vec<f64>,
}

impl PolarField {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n_theta + i]
    }

    /// Bilinear in (θ, r); zero beyond the outermost ring.
    pub fn sample(&self, x: [f64; 2]) -> f64 {
        let r = norm(x);
        let th = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
        let a = th / (2.0 * PI) * self.n_theta as f64;
        let b = r / self.h_r;
        if b >= self.n_r as f64 {
            return 0.0;
        }
        let (a0, b0) = (a.floor(), b.floor());
        let (fa, fb) = (a - a0, b - b0);
        let i0 = a0 as usize % self.n_theta;
        let i1 = (i0 + 1) % self.n_theta;
        let j0 = b0 as usize;
        let j1 = (j0 + 1).min(self.n_r);
        (1.0 - fa) * ((1.0 - fb) * self.get(i0, j0) + fb * self.get(i0, j1)) + fa * ((1.0 - fb) * self.get(i1, j0) + fb * self.get(i1, j1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    /// Outward normal angle in degrees, in [0, 360).
    pub normal_angle: f64,
    pub length: f64,
    pub mean_grad: f64,
}

#[derive(Debug, Clone)]
pub struct LimitShapeResult {
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
    pub positivity_boundary: Vec<[f64; 2]>,
    /// |∇u| per angular sample.
    pub gradient: Vec<f64>,
    pub hausdorff_to: BTreeMap<String, f64>,
    pub facets: Vec<Facet>,
    pub fb_residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    /// Vertices where the front turns clockwise, and the largest such turn in radians.
    pub convexity_violations: usize,
    pub max_concavity: f64,
}

impl LimitShapeResult {
    pub fn perimeter(&self) -> f64 {
        let p = &self.positivity_boundary;
        (0..p.len()).map(|k| norm(sub(p[(k + 1) % p.len()], p[k]))).sum()
    }
}

struct Assembly {
    unknowns: Vec<usize>,
    matrix: Csr,
    rhs: Vec<f64>,
}

fn assemble(n_theta: usize, h: f64, n_r: usize, rho_k: &[f64], rho: &[f64], value: f64) -> Assembly {
    let h_th = 2.0 * PI / n_theta as f64;
    let inside = |i: usize, j: usize| {
        let r = j as f64 * h;
        r > rho_k[i] && r < rho[i]
    };
    let mut index = vec![usize::MAX; (n_r + 1) * n_theta];
    let mut unknowns = Vec::new();
    for j in 1..n_r {
        for i in 0..n_theta {
            if inside(i, j) {
                index[j * n_theta + i] = unknowns.len();
                unknowns.push(j * n_theta + i);
            }
        }
    }
    let mut rows = Vec::with_capacity(unknowns.len());
    let mut rhs = vec![0.0; unknowns.len()];
    for (row, &node) in unknowns.iter().enumerate() {
        let (i, j) = (node % n_theta, node / n_theta);
        let r = j as f64 * h;
        let mut diag = 0.0;
        let mut entries = Vec::with_capacity(5);
        // Radial arms.
        for (jn, w) in [(j + 1, (r + 0.5 * h) * h_th / h), (j - 1, (r - 0.5 * h) * h_th / h)] {
            let k = index[jn * n_theta + i];
            if k != usize::MAX {
                entries.push((k, -w));
                diag += w;
            } else if jn > j {
                let th = ((rho[i] - r) / h).clamp(1e-6, 1.0);
                diag += w / th;
            } else {
                let th = ((r - rho_k[i]) / h).clamp(1e-6, 1.0);
                diag += w / th;
                rhs[row] += w * value / th;
            }
        }
        // Tangential arms.
        let w = h / (r * h_th);
        for inb in [(i + 1) % n_theta, (i + n_theta - 1) % n_theta] {
            let k = index[j * n_theta + inb];
            if k != usize::MAX {
                entries.push((k, -w));
                diag += w;
            } else if r <= rho_k[inb] {
                let th = ((r - rho_k[i]) / (rho_k[inb] - rho_k[i])).clamp(1e-6, 1.0);
                diag += w / th;
                rhs[row] += w * value / th;
            } else {
                let th = ((rho[i] - r) / (rho[i] - rho[inb])).clamp(1e-6, 1.0);
                diag += w / th;
            }
        }
        entries.push((row, diag));
        rows.push(entries);
    }
    Assembly {
        unknowns,
        matrix: Csr::from_rows(rows),
        rhs,
    }
}

/// Solves c ⊛ x = b for a real symmetric circulant given by its symbol.
fn circulant_solve(symbol: &[f64], b: &[f64], cos: &[f64], sin: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut out = vec![0.0; n];
    for m in 0..n {
        let (mut re, mut im) = (0.0, 0.0);
        for (l, v) in b.iter().enumerate() {
            let k = m * l % n;
            re += v * cos[k];
            im -= v * sin[k];
        }
        let (re, im) = (re / symbol[m], im / symbol[m]);
        for (l, o) in out.iter_mut().enumerate() {
            let k = m * l % n;
            *o += re * cos[k] - im * sin[k];
        }
    }
    for o in out.iter_mut() {
        *o /= n as f64;
    }
    out
}

/// Front iteration for the obstacle problem.
///
/// MinSupersolution grows the positivity set outward from a thin layer
/// around the obstacle; MaxSubsolution retracts it from a far circle.
pub fn solve_obstacle(problem: &ObstacleProblem, mode: Mode, tol: f64) -> Result<(PolarField, LimitShapeResult)> {
    let n = problem.n_theta;
    let h = problem.h;
    let value = problem.boundary_value;
    if !(value > 0.0) {
        return invalid("obstacle value must be positive");
    }
    let n_r = (0.5 * problem.box_side / h).floor() as usize;
    let theta: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    let rho_k: Vec<f64> = theta.iter().map(|&t| problem.obstacle_radius(t)).collect();
    let hi = (n_r - 1) as f64 * h;
    let far = 0.45 * problem.box_side;
    let mut rho: Vec<f64> = match mode {
        Mode::MinSupersolution => rho_k.iter().map(|r| r + 2.0 * h).collect(),
        Mode::MaxSubsolution => vec![far; n],
    };
    if rho.iter().zip(&rho_k).any(|(r, k)| *r <= k + h || *r > hi) {
        return invalid("box too small for the obstacle");
    }
    let sign = match mode {
        Mode::MinSupersolution => 1.0,
        Mode::MaxSubsolution => -1.0,
    };
    let cos: Vec<f64> = (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).cos()).collect();
    let sin: Vec<f64> = (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).sin()).collect();
    let dir = |i: usize| [theta[i].cos(), theta[i].sin()];
    let q_at = |i: usize, r: f64| {
        let e = dir(i);
        problem.q([r * e[0], r * e[1]])
    };

    let opts = crate::cell::SolveOptions::default();
    let mut omega = opts.omega;
    let mut values = vec![0.0; (n_r + 1) * n];
    let mut history = Vec::new();
    let mut prev_step = vec![0.0; n];
    let mut stalls = 0;
    let stop = tol * h;
    let max_iter = opts.max_iter;

    let solve = |rho: &[f64], values: &mut Vec<f64>| -> Result<()> {
        let asm = assemble(n, h, n_r, &rho_k, rho, value);
        let mut x: Vec<f64> = asm.unknowns.iter().map(|&k| values[k]).collect();
        pcg(&asm.matrix, &asm.rhs, &mut x, 1e-9 * value, 20_000)?;
        for j in 0..=n_r {
            for i in 0..n {
                let k = j * n + i;
                values[k] = if (j as f64 * h) <= rho_k[i] { value } else { 0.0 };
            }
        }
        for (&k, v) in asm.unknowns.iter().zip(&x) {
            values[k] = *v;
        }
        Ok(())
    };
    let gradient = |rho: &[f64], values: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut pts: Vec<(f64, f64)> = Vec::with_capacity(3);
                let mut j = crate::grid::rows_above(rho[i], h) - 1;
                while pts.len() < 3 {
                    let r = j as f64 * h;
                    if r <= rho_k[i] || j == 0 {
                        pts.push((rho[i] - rho_k[i], value));
                        break;
                    }
                    pts.push((rho[i] - r, values[j * n + i]));
                    j -= 1;
                }
                let near = if pts.len() >= 2 {
                    trace_slope(pts[0].0, pts[0].1, pts[1].0, pts[1].1)
                } else {
                    pts[0].1 / pts[0].0
                };
                let ds = if pts.len() == 3 {
                    let far = trace_slope(pts[1].0, pts[1].1, pts[2].0, pts[2].1);
                    let w = (pts[0].0 / h).clamp(0.0, 1.0);
                    w * near + (1.0 - w) * far
                } else {
                    near
                };
                let drho = (rho[(i + 1) % n] - rho[(i + n - 1) % n]) / (2.0 * (2.0 * PI / n as f64));
                ds.abs() * (1.0 + (drho / rho[i]).powi(2)).sqrt()
            })
            .collect()
    };

    for iter in 1..=max_iter {
        solve(&rho, &mut values)?;
        let gv = gradient(&rho, &values);
        let resid: Vec<f64> = (0..n).map(|i| gv[i] - q_at(i, rho[i])).collect();
        let lens: Vec<f64> = (0..n)
            .map(|i| {
                let l = (rho[i] / rho_k[i]).ln().max(1e-6);
                rho[i] * l / (1.0 + l)
            })
            .collect();
        let l_mean = lens.iter().sum::<f64>() / n as f64;
        let g_mean = gv.iter().sum::<f64>() / n as f64;
        let rho_mean = rho.iter().sum::<f64>() / n as f64;
        let ds = rho_mean * 2.0 * PI / n as f64;
        let dq_mean = (0..n)
            .map(|i| (q_at(i, rho[i] + 0.25 * h) - q_at(i, rho[i] - 0.25 * h)) / (0.5 * h))
            .map(|d| (sign * d).max(0.0))
            .sum::<f64>()
            / n as f64;
        let symbol: Vec<f64> = (0..n)
            .map(|m| {
                let mm = m.min(n - m) as f64;
                let base = if mm == 0.0 {
                    g_mean / l_mean
                } else {
                    let kappa = 2.0 / ds * (PI * mm / n as f64).sin();
                    g_mean * kappa / (kappa * l_mean).tanh()
                };
                base + dq_mean
            })
            .collect();
        let rhs: Vec<f64> = resid.iter().map(|r| omega * r).collect();
        let mut step = circulant_solve(&symbol, &rhs, &cos, &sin);

        for i in 0..n {
            let adv = sign * step[i];
            let lo_i = rho_k[i] + 0.5 * h;
            if adv > 0.0 {
                let limit = adv.min(opts.max_jump * h);
                let mut cap = limit;
                let base = rho[i] * (rho[i] / rho_k[i]).ln();
                let mut k = 1;
                loop {
                    let d = 0.25 * h * k as f64;
                    if d >= limit {
                        break;
                    }
                    let rp = rho[i] + sign * d;
                    if rp <= lo_i || rp >= hi {
                        cap = d;
                        break;
                    }
                    let model = gv[i] * base / (rp * (rp / rho_k[i]).ln());
                    if sign * (model - q_at(i, rp)) <= 0.0 {
                        cap = d;
                        break;
                    }
                    k += 1;
                }
                step[i] = sign * cap.min(adv);
            } else {
                step[i] = -sign * (-adv).min(omega * h);
            }
            let new = (rho[i] + step[i]).clamp(lo_i, hi);
            if new <= lo_i && step[i] < 0.0 {
                return Err(Error::FrontCollapse { ray: i });
            }
            if new >= hi && step[i] > 0.0 {
                return invalid("front reached the edge of the box");
            }
            step[i] = new - rho[i];
        }

        let max_step = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        history.push(max_step);
        log::trace!("obstacle iteration {iter}: max step {max_step:.2e}, omega {omega}");
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
            log::debug!("obstacle front oscillating at iteration {iter}; damping reduced to {omega}");
            if omega < 1.0 / 64.0 {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    last_update: max_step,
                    history,
                });
            }
        }
        prev_step.clone_from(&step);
        for i in 0..n {
            rho[i] += step[i];
        }

        if max_step < stop {
            solve(&rho, &mut values)?;
            let gv = gradient(&rho, &values);
            let fb = (0..n).map(|i| (gv[i] - q_at(i, rho[i])).abs()).fold(0.0, f64::max);
            let pts: Vec<[f64; 2]> = (0..n).map(|i| [rho[i] * theta[i].cos(), rho[i] * theta[i].sin()]).collect();
            let (violations, concavity) = convexity_report(&pts);
            let grad_at = |x: [f64; 2]| {
                let a = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
                gv[((a / (2.0 * PI) * n as f64).round() as usize) % n]
            };
            let facets = detect_facets(&pts, 2.0, 10.0 * h, Some(&grad_at));
            let field = PolarField {
                n_theta: n,
                h_r: h,
                n_r,
                values,
            };
            return Ok((
                field,
                LimitShapeResult {
                    theta,
                    rho,
                    positivity_boundary: pts,
                    gradient: gv,
                    hausdorff_to: BTreeMap::new(),
                    facets,
                    fb_residual: fb,
                    iterations: iter,
                    history,
                    convexity_violations: violations,
                    max_concavity: concavity,
                },
            ));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_update: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

fn convexity_report(pts: &[[f64; 2]]) -> (usize, f64) {
    let n = pts.len();
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let a = sub(pts[k], pts[(k + n - 1) % n]);
        let b = sub(pts[(k + 1) % n], pts[k]);
        let c = cross(a, b);
        if c < 0.0 {
            count += 1;
            let turn = c.atan2(a[0] * b[0] + a[1] * b[1]);
            worst = worst.max(-turn);
        }
    }
    (count, worst)
}

fn point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm(sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

fn directed(a: &[[f64; 2]], b: &[[f64; 2]], h: f64) -> f64 {
    let (na, nb) = (a.len(), b.len());
    let mut worst: f64 = 0.0;
    for k in 0..na {
        let (p, q) = (a[k], a[(k + 1) % na]);
        let pieces = (norm(sub(q, p)) / (0.5 * h)).ceil().max(1.0) as usize;
        for s in 0..pieces {
            let t = s as f64 / pieces as f64;
            let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            let d = (0..nb).map(|l| point_segment(x, b[l], b[(l + 1) % nb])).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    worst
}

/// Symmetric Hausdorff distance between closed polylines, with each side
/// resampled at spacing at most h/2 and measured exactly against the other.
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]], h: f64) -> Result<f64> {
    if a.len() < 3 {
        return Err(Error::DegeneratePolyline(a.len()));
    }
    if b.len() < 3 {
        return Err(Error::DegeneratePolyline(b.len()));
    }
    if !(h > 0.0) {
        return invalid("resampling spacing must be positive");
    }
    Ok(directed(a, b, h).max(directed(b, a, h)))
}

fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Greedy segmentation of a closed counter-clockwise polyline into maximal
/// runs of edges whose outward normals stay within `angle_tol` degrees of
/// the run's length-weighted mean normal. Runs with chord ≥ `min_len` are facets.
pub fn detect_facets(poly: &[[f64; 2]], angle_tol: f64, min_len: f64, grad: Option<&dyn Fn([f64; 2]) -> f64>) -> Vec<Facet> {
    let n = poly.len();
    if n < 3 {
        return Vec::new();
    }
    let tol = angle_tol.to_radians();
    let edges: Vec<([f64; 2], f64, f64)> = (0..n)
        .map(|k| {
            let e = sub(poly[(k + 1) % n], poly[k]);
            (e, norm(e), (-e[0]).atan2(e[1]))
        })
        .collect();
    let start = (0..n)
        .max_by(|&a, &b| {
            let ta = wrap_angle(edges[a].2 - edges[(a + n - 1) % n].2).abs();
            let tb = wrap_angle(edges[b].2 - edges[(b + n - 1) % n].2).abs();
            ta.partial_cmp(&tb).unwrap()
        })
        .unwrap();
    let mut facets = Vec::new();
    let mut k = 0;
    while k < n {
        let first = (start + k) % n;
        let mut sum = [0.0, 0.0];
        let mut run = vec![first];
        sum[0] += edges[first].1 * edges[first].2.cos();
        sum[1] += edges[first].1 * edges[first].2.sin();
        k += 1;
        while k < n {
            let cand = (start + k) % n;
            let trial = [sum[0] + edges[cand].1 * edges[cand].2.cos(), sum[1] + edges[cand].1 * edges[cand].2.sin()];
            let mean = trial[1].atan2(trial[0]);
            let ok = run.iter().chain(std::iter::once(&cand)).all(|&e| wrap_angle(edges[e].2 - mean).abs() <= tol);
            if !ok {
                break;
            }
            sum = trial;
            run.push(cand);
            k += 1;
        }
        let a = poly[first];
        let b = poly[(run.last().unwrap() + 1) % n];
        let chord = norm(sub(b, a));
        if chord >= min_len {
            let mean_grad = match grad {
                Some(f) => {
                    run.iter()
                        .map(|&e| {
                            let p = poly[e];
                            let q = poly[(e + 1) % n];
                            f([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]) * edges[e].1
                        })
                        .sum::<f64>()
                        / run.iter().map(|&e| edges[e].1).sum::<f64>()
                }
                None => f64::NAN,
            };
            facets.push(Facet {
                normal_angle: sum[1].atan2(sum[0]).to_degrees().rem_euclid(360.0),
                length: chord,
                mean_grad,
            });
        }
    }
    facets
}

/// Square of half-width `a`, counter-clockwise from (a, −a).
pub fn square(a: f64) -> Vec<[f64; 2]> {
    vec![[a, -a], [a, a], [-a, a], [-a, -a]]
}
