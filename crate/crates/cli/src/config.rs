//! Run configuration: a TOML file with one table per command, plus
//! `--set section.key=value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use pinlab_core::{Direction, PeriodicMedium};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MediumSpec {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// Q = 1 + a·sin(2π x·ξ).
    Laminar {
        amplitude: f64,
        #[serde(default = "e1")]
        axis: [i64; 2],
    },
    Bump {
        amp: f64,
        delta: f64,
    },
    /// `ac-medium v1` file, relative to the config file.
    File {
        path: PathBuf,
    },
}

impl MediumSpec {
    pub fn build(&self) -> Result<PeriodicMedium> {
        Ok(match self {
            MediumSpec::Constant { value } => PeriodicMedium::constant(*value)?,
            MediumSpec::Laminar { amplitude, axis } => PeriodicMedium::laminar_sine(*amplitude, Direction::from_lattice(*axis)?)?,
            MediumSpec::Bump { amp, delta } => PeriodicMedium::bump_lattice(*amp, *delta)?,
            MediumSpec::File { path } => PeriodicMedium::from_file(path)?,
        })
    }
}

fn one() -> f64 {
    1.0
}

fn e1() -> [i64; 2] {
    [1, 0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub h: f64,
    pub tol: f64,
    pub t_list: Vec<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            h: 0.05,
            tol: 1e-3,
            t_list: vec![4.0, 8.0, 16.0, 32.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub xi_max: i64,
    /// Explicit lattice directions; overrides `xi_max` when present.
    pub directions: Option<Vec<[i64; 2]>>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { xi_max: 2, directions: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalSection {
    pub direction: [i64; 2],
}

impl Default for IntervalSection {
    fn default() -> Self {
        IntervalSection { direction: [1, 0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeSection {
    /// Counter-clockwise convex polygon around the origin.
    pub obstacle: Option<Vec<[f64; 2]>>,
    /// Half-width of a square obstacle, used when `obstacle` is absent.
    pub square: f64,
    pub epsilon: Vec<f64>,
    pub box_side: f64,
    /// Grid spacing as a fraction of ε.
    pub h_ratio: f64,
    pub n_theta: usize,
    pub tol: f64,
    pub boundary_value: f64,
    /// Any of "super", "sub".
    pub modes: Vec<String>,
}

impl Default for ShapeSection {
    fn default() -> Self {
        ShapeSection {
            obstacle: None,
            square: 1.0,
            epsilon: vec![0.25, 0.125],
            box_side: 5.0,
            h_ratio: 0.1,
            n_theta: 720,
            tol: 1e-2,
            boundary_value: 1.0,
            modes: vec!["super".into()],
        }
    }
}

impl ShapeSection {
    pub fn polygon(&self) -> Vec<[f64; 2]> {
        self.obstacle.clone().unwrap_or_else(|| pinlab_core::shapes::square(self.square))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BendSection {
    pub m: f64,
    pub r: f64,
    pub eps_amp: f64,
    pub r0: f64,
    /// "plane" bends the exact plane slope·(depth − d)⁺; "corrector" bends a
    /// min-supersolution corrector at datum `t`, tiled along the slab.
    pub source: String,
    pub direction: [i64; 2],
    pub slope: f64,
    pub depth: f64,
    pub height: f64,
    pub t: f64,
}

impl Default for BendSection {
    fn default() -> Self {
        BendSection {
            m: 4.0,
            r: 64.0,
            eps_amp: 0.05,
            r0: 5.0,
            source: "plane".into(),
            direction: [1, 0],
            slope: 1.0,
            depth: 3.0,
            height: 4.0,
            t: 8.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeSection {
    /// CSV with a `theta` column in radians; relative to the config file.
    pub input: Option<PathBuf>,
    /// Value columns to transform.
    pub columns: Vec<String>,
    /// Angular resolution of the uniform grid the samples are mapped to.
    pub n: usize,
    pub n_lip: f64,
    /// "chord" or "arc".
    pub metric: String,
}

impl Default for EnvelopeSection {
    fn default() -> Self {
        EnvelopeSection {
            input: None,
            columns: vec!["value".into()],
            n: 360,
            n_lip: 20.0,
            metric: "chord".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    /// Random instances per randomized suite.
    pub cases: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection { cases: 20 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_medium")]
    pub medium: MediumSpec,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub interval: IntervalSection,
    #[serde(default)]
    pub shape: ShapeSection,
    #[serde(default)]
    pub bend: BendSection,
    #[serde(default)]
    pub envelope: EnvelopeSection,
    #[serde(default)]
    pub validate: ValidateSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_medium() -> MediumSpec {
    MediumSpec::Constant { value: 1.0 }
}

/// Parses an override value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| anyhow!("override {spec:?} is not key=value"))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| anyhow!("override {key}: {part} is not a table"))?;
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    /// Reads `path` (or starts from defaults), applies the overrides in order
    /// and resolves file references against the config file's directory.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let (mut table, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let table: toml::Table = text.parse().with_context(|| format!("parsing {}", p.display()))?;
                (table, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (toml::Table::new(), PathBuf::new()),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table).try_into().context("invalid configuration")?;
        if let MediumSpec::File { path } = &mut cfg.medium {
            *path = base.join(&*path);
        }
        if let Some(p) = &mut cfg.envelope.input {
            *p = base.join(&*p);
        }
        Ok(cfg)
    }

    pub fn check_solver(&self) -> Result<()> {
        let s = &self.solver;
        if !(s.h > 0.0 && s.h <= 0.1) {
            bail!("solver.h = {} must lie in (0, 0.1]", s.h);
        }
        if !(s.tol > 0.0) {
            bail!("solver.tol must be positive");
        }
        if s.t_list.len() < 4 {
            bail!("solver.t_list needs at least 4 entries");
        }
        if s.t_list.iter().any(|t| !(*t > 0.0)) || s.t_list.windows(2).any(|w| !(w[1] > w[0])) {
            bail!("solver.t_list must be positive and increasing");
        }
        Ok(())
    }

    pub fn check_medium(&self) -> Result<PeriodicMedium> {
        if let MediumSpec::File { path } = &self.medium {
            if !path.exists() {
                bail!("medium file {} does not exist", path.display());
            }
        }
        self.medium.build()
    }

    pub fn sweep_directions(&self) -> Result<Vec<Direction>> {
        match &self.sweep.directions {
            Some(list) => {
                if list.is_empty() {
                    bail!("sweep.directions is empty");
                }
                list.iter().map(|&xi| Direction::from_lattice(xi).map_err(Into::into)).collect()
            }
            None => {
                if self.sweep.xi_max < 1 {
                    bail!("sweep.xi_max must be at least 1");
                }
                Ok(pinlab_core::irreducible_directions(self.sweep.xi_max))
            }
        }
    }

    pub fn check_shape(&self) -> Result<()> {
        let s = &self.shape;
        if s.epsilon.is_empty() || s.epsilon.iter().any(|e| !(*e > 0.0)) {
            bail!("shape.epsilon must be a non-empty list of positive values");
        }
        if !(s.h_ratio > 0.0 && s.h_ratio <= 0.1) {
            bail!("shape.h_ratio must lie in (0, 0.1]");
        }
        if !(s.tol > 0.0) || !(s.boundary_value > 0.0) || s.n_theta < 16 {
            bail!("shape.tol and shape.boundary_value must be positive and shape.n_theta at least 16");
        }
        if s.modes.is_empty() || s.modes.iter().any(|m| m != "super" && m != "sub") {
            bail!("shape.modes must list \"super\" and/or \"sub\"");
        }
        for &eps in &s.epsilon {
            pinlab_core::shapes::ObstacleProblem::new(s.polygon(), PeriodicMedium::constant(1.0)?, eps, s.box_side, eps * s.h_ratio)?;
        }
        Ok(())
    }

    pub fn check_bend(&self) -> Result<()> {
        let b = &self.bend;
        if b.source != "plane" && b.source != "corrector" {
            bail!("bend.source must be \"plane\" or \"corrector\"");
        }
        if !(b.r0 > 0.0) || !(b.slope > 0.0) || !(b.t > 0.0) {
            bail!("bend.r0, bend.slope and bend.t must be positive");
        }
        if !(b.depth > 0.0 && b.depth < b.height) {
            bail!("bend.depth must lie inside (0, bend.height)");
        }
        Ok(())
    }

    pub fn check_envelope(&self) -> Result<()> {
        let e = &self.envelope;
        match &e.input {
            None => bail!("envelope.input is required"),
            Some(p) if !p.exists() => bail!("envelope input {} does not exist", p.display()),
            _ => {}
        }
        if e.n < 3 || !(e.n_lip > 0.0) {
            bail!("envelope.n must be at least 3 and envelope.n_lip positive");
        }
        if e.metric != "chord" && e.metric != "arc" {
            bail!("envelope.metric must be \"chord\" or \"arc\"");
        }
        if e.columns.is_empty() {
            bail!("envelope.columns is empty");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = RunConfig::load(None, &["solver.h=0.025".into(), "medium.kind=\"bump\"".into(), "medium.amp=3".into(), "medium.delta=0.2".into()]).unwrap();
        assert_eq!(cfg.solver.h, 0.025);
        assert!(matches!(cfg.medium, MediumSpec::Bump { amp, delta } if amp == 3.0 && delta == 0.2));
    }

    #[test]
    fn bare_strings_are_accepted() {
        let cfg = RunConfig::load(None, &["bend.source=corrector".into()]).unwrap();
        assert_eq!(cfg.bend.source, "corrector");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::load(None, &["solver.hh=0.1".into()]).is_err());
        assert!(RunConfig::load(None, &["nonsense".into()]).is_err());
    }
}
