use std::time::Instant;

use anyhow::anyhow;
use pinlab_core::cell::{pinning_interval, solve_corrector, sweep_list, CellSolution, Mode, PinningInterval, SlabProblem, SolveOptions};
use pinlab_core::envelope::{inf_convolve_dir, sup_convolve_dir, DirectionFunction, Metric};
use pinlab_core::grid::{GridField, HeightFunction, SlabGrid};
use pinlab_core::planelike::{bend, make_bending_profile, PlaneLikeSolution};
use pinlab_core::shapes::{hausdorff, solve_obstacle, ObstacleProblem};
use pinlab_core::Direction;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::output::{num, Outputs};
use crate::svg;
use crate::{Failure, ResultExt};

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::MinSupersolution => "super",
        Mode::MaxSubsolution => "sub",
    }
}

fn dump(field: &GridField) -> Vec<u8> {
    let mut buf = Vec::new();
    field.dump(&mut buf).expect("writing to memory");
    buf
}

fn interval_row(iv: &PinningInterval, rms: f64) -> Vec<String> {
    let xi = iv.direction.rational().unwrap_or([0, 0]);
    vec![
        xi[0].to_string(),
        xi[1].to_string(),
        num(iv.direction.angle()),
        num(iv.q_lower),
        num(iv.q_lower_err),
        num(iv.q_upper),
        num(iv.q_upper_err),
        num(rms),
        if iv.ok() { "ok".into() } else { "failed".into() },
        iv.failure.clone().unwrap_or_default(),
    ]
}

const INTERVAL_HEADER: [&str; 10] = ["xi0", "xi1", "theta", "q_lower", "q_lower_err", "q_upper", "q_upper_err", "rms_mean", "status", "message"];

pub fn sweep(cfg: &RunConfig, out: &mut Outputs) -> Result<(), Failure> {
    cfg.check_solver().config()?;
    let medium = cfg.check_medium().config()?;
    let dirs = cfg.sweep_directions().config()?;
    let rms = medium.rms_mean(1e-10).solver()?;
    let st = Instant::now();
    let list = sweep_list(&medium, &dirs, &cfg.solver.t_list, cfg.solver.h, &SolveOptions::with_tol(cfg.solver.tol));
    out.time("sweep", st);
    let rows: Vec<Vec<String>> = list.iter().map(|iv| interval_row(iv, rms)).collect();
    out.write_csv("sweep.csv", &INTERVAL_HEADER, &rows).solver()?;
    let pts: Vec<(f64, f64, f64)> = list.iter().map(|iv| (iv.direction.angle(), iv.q_lower, iv.q_upper)).collect();
    out.write("sweep.svg", svg::polar_interval_plot(&pts, rms).as_bytes()).solver()?;
    let ok = list.iter().filter(|iv| iv.ok()).count();
    out.note("directions", list.len());
    out.note("succeeded", ok);
    out.note("rms_mean", rms);
    for iv in list.iter().filter(|iv| !iv.ok()) {
        log::warn!("direction {:?} failed: {}", iv.direction.rational(), iv.failure.as_deref().unwrap_or(""));
    }
    println!("{ok} of {} directions succeeded", list.len());
    if 5 * ok < 4 * list.len() {
        return Err(Failure::Solver(anyhow!("only {ok} of {} directions succeeded", list.len())));
    }
    Ok(())
}

pub fn interval(cfg: &RunConfig, out: &mut Outputs, dump_field: bool) -> Result<(), Failure> {
    cfg.check_solver().config()?;
    let medium = cfg.check_medium().config()?;
    let direction = Direction::from_lattice(cfg.interval.direction).config()?;
    let rms = medium.rms_mean(1e-10).solver()?;
    let opts = SolveOptions::with_tol(cfg.solver.tol);
    let st = Instant::now();
    let iv = pinning_interval(&medium, direction, &cfg.solver.t_list, cfg.solver.h, &opts);
    out.time("interval", st);
    out.write_csv("interval.csv", &INTERVAL_HEADER, &[interval_row(&iv, rms)]).solver()?;
    let mut rows = Vec::new();
    for (mode, series) in [(Mode::MinSupersolution, &iv.upper_series), (Mode::MaxSubsolution, &iv.lower_series)] {
        for p in series {
            rows.push(vec![mode_name(mode).to_string(), num(p.t), num(p.r), num(p.alpha)]);
        }
    }
    out.write_csv("series.csv", &["mode", "t", "r", "alpha"], &rows).solver()?;
    if let Some(msg) = &iv.failure {
        return Err(Failure::Solver(anyhow!("{msg}")));
    }
    println!("[{:.3} ± {:.3}, {:.3} ± {:.3}]", iv.q_lower, iv.q_lower_err, iv.q_upper, iv.q_upper_err);
    out.note("q_lower", iv.q_lower);
    out.note("q_upper", iv.q_upper);
    if dump_field {
        let t = *cfg.solver.t_list.last().unwrap();
        for mode in [Mode::MinSupersolution, Mode::MaxSubsolution] {
            let p = SlabProblem::new(&medium, direction, t, cfg.solver.h, mode).config()?;
            let s = solve_corrector(&p, cfg.solver.tol).solver()?;
            out.write(&format!("field_{}.txt", mode_name(mode)), &dump(&s.field)).solver()?;
        }
    }
    Ok(())
}

pub fn shape(cfg: &RunConfig, out: &mut Outputs) -> Result<(), Failure> {
    cfg.check_shape().config()?;
    let medium = cfg.check_medium().config()?;
    let s = &cfg.shape;
    let polygon = s.polygon();
    let modes: Vec<Mode> = s
        .modes
        .iter()
        .map(|m| if m == "super" { Mode::MinSupersolution } else { Mode::MaxSubsolution })
        .collect();
    let mut eps = s.epsilon.clone();
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let jobs: Vec<(f64, Mode)> = eps.iter().flat_map(|&e| modes.iter().map(move |&m| (e, m))).collect();
    let st = Instant::now();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(e, mode)| {
            let p = ObstacleProblem::new(polygon.clone(), medium.clone(), e, s.box_side, e * s.h_ratio)?
                .with_n_theta(s.n_theta)
                .with_boundary_value(s.boundary_value);
            solve_obstacle(&p, mode, s.tol).map(|r| r.1)
        })
        .collect();
    out.time("solve", st);
    let mut shapes = Vec::new();
    for (&(e, mode), r) in jobs.iter().zip(results) {
        let r = r.map_err(|err| Failure::from_core(err, &format!("epsilon {e}, {}", mode_name(mode))))?;
        shapes.push((e, mode, r));
    }

    let mut facet_rows = Vec::new();
    let mut overlay = Vec::new();
    for (e, mode, r) in &shapes {
        let rows: Vec<Vec<String>> = r
            .theta
            .iter()
            .zip(&r.rho)
            .map(|(&t, &rho)| vec![num(t), num(rho), num(rho * t.cos()), num(rho * t.sin())])
            .collect();
        out.write_csv(&format!("shape_eps{e}_{}.csv", mode_name(*mode)), &["theta", "rho", "x", "y"], &rows).solver()?;
        for f in &r.facets {
            facet_rows.push(vec![mode_name(*mode).to_string(), num(*e), num(f.normal_angle), num(f.length), num(f.mean_grad)]);
        }
        overlay.push((format!("ε = {e} ({})", mode_name(*mode)), r.positivity_boundary.clone()));
    }
    out.write_csv("facets.csv", &["mode", "epsilon", "normal_angle", "length", "mean_grad"], &facet_rows).solver()?;

    let mut table = Vec::new();
    for &mode in &modes {
        let list: Vec<&(f64, Mode, _)> = shapes.iter().filter(|x| x.1 == mode).collect();
        for x in &list {
            let d = hausdorff(&x.2.positivity_boundary, &polygon, x.0 * s.h_ratio).solver()?;
            table.push(vec![mode_name(mode).to_string(), num(x.0), "obstacle".into(), num(d)]);
        }
        for w in list.windows(2) {
            let res = w[1].0 * s.h_ratio;
            let d = hausdorff(&w[0].2.positivity_boundary, &w[1].2.positivity_boundary, res).solver()?;
            table.push(vec![mode_name(mode).to_string(), num(w[0].0), num(w[1].0), num(d)]);
        }
    }
    out.write_csv("hausdorff.csv", &["mode", "epsilon_a", "epsilon_b", "hausdorff"], &table).solver()?;
    out.write("shapes.svg", svg::shape_overlay(&polygon, &overlay).as_bytes()).solver()?;
    out.note("shapes", shapes.len());
    println!("{} fronts written", shapes.len());
    Ok(())
}

/// Repeats a slab solution `copies` times along the tangential direction.
fn tile(s: &CellSolution, copies: usize) -> CellSolution {
    let g = s.field.grid;
    let mut big = g;
    big.n_tan *= copies;
    big.period_len *= copies as f64;
    let field = GridField::from_fn(big, |i, j| s.field.get(i % g.n_tan, j));
    let boundary = HeightFunction {
        g: (0..big.n_tan).map(|i| s.boundary.g[i % g.n_tan]).collect(),
    };
    CellSolution {
        field,
        boundary,
        ..s.clone()
    }
}

pub fn bend_demo(cfg: &RunConfig, out: &mut Outputs) -> Result<(), Failure> {
    cfg.check_bend().config()?;
    let medium = cfg.check_medium().config()?;
    let b = &cfg.bend;
    let h = cfg.solver.h;
    let direction = Direction::from_lattice(b.direction).config()?;
    let st = Instant::now();
    let (plane, base_depth) = if b.source == "plane" {
        let grid = SlabGrid::new(direction, 4.0 * b.r, b.height, h).config()?;
        (PlaneLikeSolution::exact_plane(grid, b.slope, b.depth), b.depth)
    } else {
        let p = SlabProblem::new(&medium, direction, b.t, h, Mode::MinSupersolution).config()?;
        let s = solve_corrector(&p, cfg.solver.tol).solver()?;
        let copies = (4.0 * b.r / s.field.grid.period_len).ceil() as usize;
        let tiled = tile(&s, copies);
        let base = (tiled.boundary.min() / tiled.field.grid.h).floor() * tiled.field.grid.h;
        (PlaneLikeSolution::from_cell(tiled).solver()?, base)
    };
    let grid = plane.cell_solution.field.grid;
    let profile = make_bending_profile(direction, b.m, b.r, b.eps_amp, &grid, base_depth).map_err(|e| Failure::from_core(e, "bending profile"))?;
    let result = bend(&plane, &profile, &medium, b.r0).map_err(|e| Failure::from_core(e, "bend"))?;
    out.time("bend", st);
    out.write("before.txt", &dump(&plane.cell_solution.field)).solver()?;
    out.write("after.txt", &dump(&result.lifted)).solver()?;
    let rows: Vec<Vec<String>> = result
        .slope_report
        .iter()
        .map(|r| vec![r.column.to_string(), num(r.depth), num(r.measured), num(r.grad_phi), num(r.ball_inf)])
        .collect();
    out.write_csv("slope_report.csv", &["column", "depth", "measured", "grad_phi", "ball_inf"], &rows).solver()?;
    out.note("subharmonic_defect", result.subharmonic_defect);
    out.note("ratio_band", [result.ratio_band.0, result.ratio_band.1]);
    out.note("convexity_defect", profile.convexity_defect);
    out.note("max_grad_phi", profile.max_grad_phi);
    println!(
        "subharmonic defect {:.3e}, ratio band [{:.3}, {:.3}], {} boundary columns",
        result.subharmonic_defect,
        result.ratio_band.0,
        result.ratio_band.1,
        rows.len()
    );
    Ok(())
}

pub fn envelope(cfg: &RunConfig, out: &mut Outputs) -> Result<(), Failure> {
    cfg.check_envelope().config()?;
    let e = &cfg.envelope;
    let path = e.input.as_ref().unwrap();
    let metric = if e.metric == "arc" { Metric::Arc } else { Metric::Chord };
    let mut reader = csv::Reader::from_path(path).map_err(|err| Failure::Config(anyhow!("{}: {err}", path.display())))?;
    let headers = reader.headers().config()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::Config(anyhow!("{}: no column {name:?}", path.display())))
    };
    let theta_col = col("theta")?;
    let value_cols: Vec<usize> = e.columns.iter().map(|c| col(c)).collect::<Result<_, _>>()?;
    let mut samples: Vec<Vec<(f64, f64)>> = vec![Vec::new(); value_cols.len()];
    for rec in reader.records() {
        let rec = rec.config()?;
        let Ok(theta) = rec[theta_col].trim().parse::<f64>() else {
            return Err(Failure::Config(anyhow!("{}: bad theta {:?}", path.display(), &rec[theta_col])));
        };
        for (k, &c) in value_cols.iter().enumerate() {
            // Empty cells mark failed directions in sweep output.
            if let Ok(v) = rec[c].trim().parse::<f64>() {
                if v.is_finite() {
                    samples[k].push((theta, v));
                }
            }
        }
    }
    let mut header = vec!["theta".to_string()];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (name, s) in e.columns.iter().zip(&samples) {
        let f = DirectionFunction::from_samples(s, e.n).config()?;
        let lo = inf_convolve_dir(&f, e.n_lip, metric).config()?;
        let hi = sup_convolve_dir(&f, e.n_lip, metric).config()?;
        header.extend([name.clone(), format!("{name}_inf"), format!("{name}_sup")]);
        columns.extend([f.values, lo.values, hi.values]);
    }
    let rows: Vec<Vec<String>> = (0..e.n)
        .map(|i| {
            let mut row = vec![num(2.0 * std::f64::consts::PI * i as f64 / e.n as f64)];
            row.extend(columns.iter().map(|c| num(c[i])));
            row
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv("envelope.csv", &header_refs, &rows).solver()?;
    println!("{} columns transformed on {} directions", e.columns.len(), e.n);
    Ok(())
}
