//! Invariant and oracle suites behind `pinlab validate`.

use std::f64::consts::PI;
use std::time::Instant;

use anyhow::Result;
use pinlab_core::cell::{birkhoff_check, pinning_interval, solve_corrector, Mode, SlabProblem, SolveOptions};
use pinlab_core::energy::{brute_force_minimize, energy, lattice_pair_energy, minimize, EnergyProblem};
use pinlab_core::envelope::{inf_convolve_dir, inf_convolve_direct, DirectionFunction, Metric};
use pinlab_core::grid::{harmonic_solve, GridField, HeightFunction, SlabGrid};
use pinlab_core::{Direction, PeriodicMedium};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::output::Outputs;
use crate::{Failure, ResultExt};

const H: f64 = 0.05;

struct Suite {
    name: &'static str,
    passed: bool,
    detail: String,
    seconds: f64,
}

fn run(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Suite {
    let st = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e:#}")));
    Suite {
        name,
        passed,
        detail,
        seconds: st.elapsed().as_secs_f64(),
    }
}

fn media(cfg: &RunConfig) -> Result<Vec<PeriodicMedium>> {
    let d11 = Direction::from_lattice([1, 1])?;
    Ok(vec![
        PeriodicMedium::constant(1.0)?,
        PeriodicMedium::laminar_sine(0.5, Direction::e1())?,
        PeriodicMedium::laminar_sine(0.5, d11)?,
        PeriodicMedium::bump_lattice(10.0, 0.1)?,
        cfg.medium.build()?,
    ])
}

fn medium_invariants(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst_period: f64 = 0.0;
    let mut worst_lip: f64 = 0.0;
    let mut bracket = true;
    for m in media(cfg)? {
        for _ in 0..cfg.validate.cases {
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let k = [rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64];
            worst_period = worst_period.max((m.eval(x) - m.eval([x[0] + k[0], x[1] + k[1]])).abs());
            let y = [x[0] + rng.gen_range(-0.05..0.05), x[1] + rng.gen_range(-0.05..0.05)];
            let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
            if d > 0.0 {
                worst_lip = worst_lip.max((m.eval(x) - m.eval(y)).abs() / (m.lipschitz() * d) - 1.0);
            }
            let delta = rng.gen_range(0.01..0.5);
            let (lo, hi) = m.ball_extrema(x, delta);
            bracket &= lo <= m.eval(x) && m.eval(x) <= hi && m.qmin() <= lo + 1e-12 && hi <= m.qmax() + 1e-12;
        }
    }
    Ok((
        worst_period <= 1e-12 && worst_lip <= 1e-3 && bracket,
        format!("periodicity {worst_period:.1e}, Lipschitz excess {worst_lip:.1e}, ball bounds {}", if bracket { "ok" } else { "violated" }),
    ))
}

fn constant_interval() -> Result<(bool, String)> {
    let m = PeriodicMedium::constant(1.0)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for xi in [[1, 0], [1, 1]] {
        let iv = pinning_interval(&m, Direction::from_lattice(xi)?, &[4.0, 8.0, 16.0, 32.0], H, &SolveOptions::default());
        ok &= iv.ok() && (iv.q_lower - 1.0).abs() <= 0.02 && (iv.q_upper - 1.0).abs() <= 0.02;
        parts.push(format!("{xi:?}: [{:.4}, {:.4}]", iv.q_lower, iv.q_upper));
    }
    Ok((ok, parts.join(", ")))
}

/// Super front: first root of r·Q(r) = t below the data line; sub front: the last one.
fn ode_front(q: &dyn Fn(f64) -> f64, t: f64, mode: Mode, r_max: f64) -> f64 {
    let f = |r: f64| r * q(r) - t;
    let step = 1e-3;
    let (mut a, mut b) = match mode {
        Mode::MinSupersolution => {
            let mut r = step;
            while f(r + step) < 0.0 {
                r += step;
            }
            (r, r + step)
        }
        Mode::MaxSubsolution => {
            let mut r = r_max;
            while f(r - step) > 0.0 {
                r -= step;
            }
            (r - step, r)
        }
    };
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if (f(m) >= 0.0) == (f(a) >= 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn ode_oracle() -> Result<(bool, String)> {
    let m = PeriodicMedium::laminar_sine(0.5, Direction::e1())?;
    // Depth s sits at x₁ = −s.
    let q = |s: f64| 1.0 + 0.5 * (-2.0 * PI * s).sin();
    let mut worst: f64 = 0.0;
    for t in [3.0, 5.0] {
        for mode in [Mode::MinSupersolution, Mode::MaxSubsolution] {
            let p = SlabProblem::new(&m, Direction::e1(), t, H, mode)?;
            let s = solve_corrector(&p, 1e-3)?;
            worst = worst.max((s.r - ode_front(&q, t, mode, p.grid.height)).abs());
        }
    }
    Ok((worst <= 2.0 * H, format!("max position error {worst:.4}")))
}

fn birkhoff(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let m = PeriodicMedium::laminar_sine(0.5, Direction::e1())?;
    let d = Direction::from_lattice([1, 1])?;
    let s = solve_corrector(&SlabProblem::new(&m, d, 6.0, H, Mode::MinSupersolution)?, 1e-3)?;
    let p = d.unit();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 10 {
        let k = [rng.gen_range(-4i64..=4), rng.gen_range(-4i64..=4)];
        if k[0] as f64 * p[0] + k[1] as f64 * p[1] > 0.0 {
            continue;
        }
        worst = worst.max(birkhoff_check(&s, k));
        n += 1;
    }
    let limit = 2.0 * H * m.qmax();
    Ok((worst <= limit, format!("worst defect {worst:.2e} (≤ {limit:.3})")))
}

fn lattice_identity(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let grid = SlabGrid::new(Direction::e1(), 1.0, 1.0, 0.1)?;
    let data = (0..25).map(|_| rng.gen_range(0.5..2.0)).collect();
    let p = EnergyProblem::new(grid, PeriodicMedium::custom(5, data)?, 1.0, 1.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.validate.cases {
        let mut field = || {
            let mut f = GridField::zeros(grid);
            for v in f.values.iter_mut() {
                *v = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) };
            }
            f
        };
        let (u, v) = (field(), field());
        let (meet, join) = lattice_pair_energy(&u, &v, &p);
        let rhs = energy(&u, &p) + energy(&v, &p);
        worst = worst.max((meet + join - rhs).abs() / rhs.abs());
    }
    Ok((worst <= 1e-12, format!("worst relative defect {worst:.2e}")))
}

fn brute_force(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for case in 0..cfg.validate.cases {
        let cols = 3 + case % 3;
        let grid = SlabGrid::new(Direction::e1(), cols as f64 * 0.1, 2.0, 0.1)?;
        let data = (0..16).map(|_| rng.gen_range(0.5..2.0)).collect();
        let lo = rng.gen_range(2..6);
        let p = EnergyProblem::new(grid, PeriodicMedium::custom(4, data)?, rng.gen_range(0.4..1.2), 1.0)?.with_levels(lo, lo + 4);
        worst = worst.max(minimize(&p)?.energy - brute_force_minimize(&p, 1 << 24)?.energy);
    }
    Ok((worst <= 1e-8, format!("worst excess {worst:.2e}")))
}

fn envelope(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let n = 360;
    let f = DirectionFunction::new((0..n).map(|_| rng.gen_range(0.0..3.0)).collect())?;
    let lip = 5.0;
    let g = inf_convolve_dir(&f, lip, Metric::Chord)?;
    let mut ok = g == inf_convolve_direct(&f, lip, Metric::Chord);
    ok &= inf_convolve_dir(&g, lip, Metric::Chord)? == g;
    for i in 0..n {
        for j in 0..n {
            let chord = 2.0 * (PI * (i as f64 - j as f64) / n as f64).sin().abs();
            ok &= g.values[i] - g.values[j] <= lip * chord * (1.0 + 1e-12) + 1e-12;
        }
    }
    Ok((ok, "direct equality, idempotence, Lipschitz on n = 360".into()))
}

fn harmonic(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let g = SlabGrid::new(Direction::e1(), 1.0, 2.0, H)?;
    let region = HeightFunction {
        g: (0..g.n_tan).map(|_| rng.gen_range(0.5..1.5)).collect(),
    };
    let t = 2.0;
    let u = harmonic_solve(&g, &region, t)?;
    let ok = u.values.iter().all(|v| (-1e-9..=t + 1e-9).contains(v));
    Ok((ok, "maximum principle on a random region".into()))
}

pub fn validate(cfg: &RunConfig, out: &mut Outputs) -> Result<(), Failure> {
    cfg.check_medium().config()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let suites = vec![
        run("medium invariants", || medium_invariants(cfg, &mut rng)),
        run("constant medium interval", constant_interval),
        run("one-dimensional oracle", ode_oracle),
        run("Birkhoff monotonicity", || birkhoff(&mut rng)),
        run("lattice identity", || lattice_identity(cfg, &mut rng)),
        run("brute-force minimization", || brute_force(cfg, &mut rng)),
        run("envelope operators", || envelope(&mut rng)),
        run("harmonic solve", || harmonic(&mut rng)),
    ];
    let mut rows = Vec::new();
    for s in &suites {
        let status = if s.passed { "pass" } else { "FAIL" };
        println!("{status:4} {}: {}", s.name, s.detail);
        rows.push(vec![s.name.to_string(), status.to_string(), s.detail.clone()]);
        out.seconds(s.name, s.seconds);
    }
    out.write_csv("validate.csv", &["suite", "status", "detail"], &rows).solver()?;
    let failed: Vec<&str> = suites.iter().filter(|s| !s.passed).map(|s| s.name).collect();
    out.note("failed", &failed);
    if !failed.is_empty() {
        return Err(Failure::Validation(format!("{} suite(s) failed: {}", failed.len(), failed.join(", "))));
    }
    Ok(())
}
