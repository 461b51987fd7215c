//! Experiment configuration: one JSON document, either a single experiment or
//! `{"experiments": [...]}`.

use std::path::{Path, PathBuf};

use pbrp_core::driver::{fbm_synthetic, DriverSpec, Grid, ScalarPath};
use pbrp_core::function::FunctionSpec;
use pbrp_core::ito::Theorem;
use pbrp_core::rough_path::CbarVariant;
use pbrp_core::PlanarForest;
use serde::Deserialize;

use crate::bundled;
use crate::failure::Failure;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Document {
    Suite { experiments: Vec<ExperimentConfig> },
    Single(Box<ExperimentConfig>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Optional guard: the subcommand this config was written for.
    #[serde(default)]
    pub command: Option<String>,
    /// Alphabet size; defaults to the number of driver paths (2 without a driver).
    #[serde(default)]
    pub d: Option<usize>,
    pub depth: usize,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub driver: Option<DriverConfig>,
    /// `F`, scalar valued.
    #[serde(default)]
    pub function: Option<FunctionSpec>,
    /// `f_1, …, f_d : ℝⁿ → ℝⁿ`.
    #[serde(default)]
    pub fields: Option<Vec<FunctionSpec>>,
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
    #[serde(default)]
    pub theorems: Vec<Theorem>,
    /// Time interval, endpoints on grid nodes; the whole grid by default.
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    /// Mesh ladder in grid cells.
    #[serde(default = "default_strides")]
    pub strides: Vec<usize>,
    /// Window scales (cells) for Hölder and remainder slopes.
    #[serde(default = "default_scales")]
    pub scales: Vec<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub cbar: CbarVariant,
    #[serde(default)]
    pub letters: Option<Vec<u16>>,
    #[serde(default = "default_bound")]
    pub divergence_bound: f64,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub seed: u64,
    /// Coproduct table (CSV) checked by the Hopf self-test instead of the built-in one.
    #[serde(default)]
    pub coproduct_table: Option<PathBuf>,
    #[serde(default)]
    pub dump: DumpConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub t_end: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            t_end: 1.0,
            cells: default_cells(),
            substeps: default_substeps(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    pub paths: Vec<PathConfig>,
    #[serde(default)]
    pub intensities: Vec<IntensityConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityConfig {
    pub tree: String,
    pub path: PathConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PathConfig {
    Polynomial {
        coefficients: Vec<f64>,
    },
    Trig {
        #[serde(default)]
        offset: f64,
        /// `(amplitude, frequency, phase)`.
        modes: Vec<[f64; 3]>,
    },
    FbmSynthetic {
        hurst: f64,
        #[serde(default = "default_modes")]
        modes: usize,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        seed: u64,
    },
    Sampled {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Itô residual at the finest mesh.
    #[serde(default = "default_ito_tol")]
    pub residual: f64,
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Chen, character and additivity residuals.
    #[serde(default = "default_axiom_tol")]
    pub axioms: f64,
    /// Slack on controlled remainder slopes.
    #[serde(default = "default_rate_slack")]
    pub rate_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: default_ito_tol(),
            slack: default_slack(),
            axioms: default_axiom_tol(),
            rate_slack: default_rate_slack(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpConfig {
    #[serde(default = "yes")]
    pub coproduct: bool,
    #[serde(default = "yes")]
    pub star: bool,
    #[serde(default = "yes")]
    pub rough_path: bool,
    #[serde(default = "yes")]
    pub controlled: bool,
}

impl Default for DumpConfig {
    fn default() -> Self {
        DumpConfig {
            coproduct: true,
            star: true,
            rough_path: true,
            controlled: true,
        }
    }
}

fn default_name() -> String {
    "experiment".into()
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_cells() -> usize {
    1024
}
fn default_substeps() -> usize {
    pbrp_core::rough_path::DEFAULT_SUBSTEPS
}
fn default_modes() -> usize {
    64
}
fn default_strides() -> Vec<usize> {
    vec![16, 8, 4, 2, 1]
}
fn default_scales() -> Vec<usize> {
    vec![1, 2, 4, 8, 16]
}
fn default_bound() -> f64 {
    pbrp_core::calculus::DIVERGENCE_BOUND
}
fn default_probes() -> usize {
    1000
}
fn default_ito_tol() -> f64 {
    1e-5
}
fn default_slack() -> f64 {
    0.3
}
fn default_axiom_tol() -> f64 {
    1e-10
}
fn default_rate_slack() -> f64 {
    0.2
}

/// Reads `PATH` or `bundled:NAME`.
pub fn load(source: &str) -> Result<Vec<ExperimentConfig>, Failure> {
    let (text, base) = match source.strip_prefix("bundled:") {
        Some(name) => (
            bundled::get(name)
                .ok_or_else(|| Failure::Config(format!("no bundled config `{name}` (available: {})", bundled::NAMES.join(", "))))?
                .to_string(),
            None,
        ),
        None => (
            std::fs::read_to_string(source).map_err(|e| Failure::Io(format!("{source}: {e}")))?,
            Path::new(source).parent().map(Path::to_path_buf),
        ),
    };
    parse(&text, base.as_deref())
}

pub fn parse(text: &str, base: Option<&Path>) -> Result<Vec<ExperimentConfig>, Failure> {
    let doc: Document = serde_json::from_str(text).map_err(|e| Failure::Config(e.to_string()))?;
    let mut list = match doc {
        Document::Suite { experiments } => experiments,
        Document::Single(c) => vec![*c],
    };
    if list.is_empty() {
        return Err(Failure::Config("no experiments".into()));
    }
    if let Some(base) = base {
        for c in &mut list {
            if let Some(p) = &c.coproduct_table {
                if p.is_relative() {
                    c.coproduct_table = Some(base.join(p));
                }
            }
        }
    }
    let mut names: Vec<&str> = list.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Failure::Config("experiment names must be unique".into()));
    }
    Ok(list)
}

fn invalid(name: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{name}: {msg}"))
}

impl ExperimentConfig {
    /// Checks everything that does not need the driver to be evaluated.
    pub fn validate(&self, command: &str) -> Result<(), Failure> {
        let err = |m: String| invalid(&self.name, m);
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(err(format!("name `{}` must be non-empty and use [A-Za-z0-9._-]", self.name)));
        }
        if let Some(c) = &self.command {
            if c != command {
                return Err(err(format!("config is for `{c}`, not `{command}`")));
            }
        }
        if !(2..=3).contains(&self.depth) {
            return Err(err(format!("depth N = {} outside {{2, 3}}", self.depth)));
        }
        let alpha = self.alpha();
        let (lo, hi) = if self.depth == 2 { (1.0 / 3.0, 0.5) } else { (0.25, 1.0 / 3.0) };
        if !(alpha > lo && alpha <= hi) {
            return Err(err(format!("α = {alpha} outside ({lo:.4}, {hi:.4}] for N = {}", self.depth)));
        }
        let d = self.d();
        if d == 0 || d > 9 {
            return Err(err(format!("alphabet size d = {d} outside 1..=9")));
        }
        if let (Some(given), Some(drv)) = (self.d, &self.driver) {
            if given != drv.paths.len() {
                return Err(err(format!("d = {given} but {} driver paths", drv.paths.len())));
            }
        }
        if !(self.grid.t_end > 0.0 && self.grid.t_end.is_finite()) {
            return Err(err("grid.t_end must be positive".into()));
        }
        if self.grid.substeps == 0 {
            return Err(err("grid.substeps must be positive".into()));
        }
        if self.probes == 0 {
            return Err(err("probes must be positive".into()));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(err("divergence_bound must be positive".into()));
        }
        if let Some(drv) = &self.driver {
            for it in &drv.intensities {
                let f = PlanarForest::parse(&it.tree).map_err(|e| err(e.to_string()))?;
                if f.as_tree().is_none() {
                    return Err(err(format!("intensity key `{}` is not a single tree", it.tree)));
                }
            }
        }
        if let Some(ls) = &self.letters {
            if ls.iter().any(|&l| l == 0 || l as usize > d) {
                return Err(err(format!("letters must lie in 1..={d}")));
            }
        }
        if let (Some(fields), Some(xi)) = (&self.fields, &self.xi) {
            if fields.len() != d {
                return Err(err(format!("{} vector fields for d = {d}", fields.len())));
            }
            if xi.is_empty() {
                return Err(err("xi must be non-empty".into()));
            }
        }
        match command {
            "hopf-selftest" | "dump" => {}
            _ => {
                self.require_driver()?;
                if self.grid.cells == 0 {
                    return Err(err("grid.cells must be positive".into()));
                }
                self.validate_ladder(&self.scales, "scales", false)?;
            }
        }
        match command {
            "integrate" => self.validate_ladder(&self.strides, "strides", true)?,
            "rde" => {
                self.require_fields()?;
            }
            "ito" => {
                self.validate_ladder(&self.strides, "strides", true)?;
                if self.theorems.is_empty() {
                    return Err(err("no theorems requested".into()));
                }
                if self.function.is_none() {
                    return Err(err("ito needs `function`".into()));
                }
                for t in &self.theorems {
                    if t.depth() != self.depth {
                        return Err(err(format!("theorem {t} needs depth {}, config has {}", t.depth(), self.depth)));
                    }
                    if t.is_general() {
                        self.require_fields()?;
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn require_driver(&self) -> Result<(), Failure> {
        match &self.driver {
            Some(d) if !d.paths.is_empty() => Ok(()),
            _ => Err(invalid(&self.name, "a driver with at least one path is required")),
        }
    }

    fn require_fields(&self) -> Result<(), Failure> {
        if self.fields.is_none() || self.xi.is_none() {
            return Err(invalid(&self.name, "`fields` and `xi` are required"));
        }
        Ok(())
    }

    /// Dyadic ladder with at least 4 rungs whose coarsest rung divides the interval.
    fn validate_ladder(&self, rungs: &[usize], what: &str, divide: bool) -> Result<(), Failure> {
        let err = |m: String| invalid(&self.name, m);
        if rungs.len() < 4 {
            return Err(err(format!("{what}: need at least 4 rungs, got {}", rungs.len())));
        }
        if rungs.iter().any(|s| *s == 0 || !s.is_power_of_two()) {
            return Err(err(format!("{what}: rungs must be powers of two")));
        }
        let mut s = rungs.to_vec();
        s.sort_unstable();
        if s.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(err(format!("{what}: rungs must be consecutive dyadic refinements")));
        }
        let coarsest = *s.last().unwrap();
        if coarsest > self.grid.cells {
            return Err(err(format!("{what}: rung {coarsest} exceeds {} cells", self.grid.cells)));
        }
        if divide {
            let (a, b) = self.interval_nodes()?;
            if (b - a) % coarsest != 0 {
                return Err(err(format!("{what}: rung {coarsest} does not divide the {} cells of the interval", b - a)));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(|| pbrp_core::rough_path::default_alpha(self.depth))
    }

    pub fn d(&self) -> usize {
        self.d.or(self.driver.as_ref().map(|d| d.paths.len())).unwrap_or(2)
    }

    pub fn grid(&self) -> Result<Grid<f64>, Failure> {
        Grid::uniform(self.grid.t_end, self.grid.cells).map_err(|e| invalid(&self.name, e))
    }

    pub fn interval_nodes(&self) -> Result<(usize, usize), Failure> {
        let grid = self.grid()?;
        match self.interval {
            None => Ok((0, grid.cells())),
            Some([s, t]) => {
                let a = grid.locate(s).map_err(|e| invalid(&self.name, e))?;
                let b = grid.locate(t).map_err(|e| invalid(&self.name, e))?;
                if a >= b {
                    return Err(invalid(&self.name, "interval must have s < t"));
                }
                Ok((a, b))
            }
        }
    }

    pub fn driver_spec(&self, grid: &Grid<f64>) -> Result<DriverSpec<f64>, Failure> {
        let cfg = self
            .driver
            .as_ref()
            .ok_or_else(|| invalid(&self.name, "no driver"))?;
        let paths = cfg
            .paths
            .iter()
            .map(|p| p.build(grid))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(&self.name, e))?;
        let mut spec = DriverSpec::from_paths(paths);
        for it in &cfg.intensities {
            let f = PlanarForest::parse(&it.tree).map_err(|e| invalid(&self.name, e))?;
            let tree = f
                .as_tree()
                .ok_or_else(|| invalid(&self.name, format!("`{}` is not a tree", it.tree)))?
                .clone();
            spec = spec.with_intensity(tree, it.path.build(grid).map_err(|e| invalid(&self.name, e))?);
        }
        Ok(spec)
    }
}

impl PathConfig {
    pub fn build(&self, grid: &Grid<f64>) -> pbrp_core::Result<ScalarPath<f64>> {
        Ok(match self {
            PathConfig::Polynomial { coefficients } => ScalarPath::Polynomial(coefficients.clone()),
            PathConfig::Trig { offset, modes } => ScalarPath::Trig {
                offset: *offset,
                modes: modes.iter().map(|m| (m[0], m[1], m[2])).collect(),
            },
            PathConfig::FbmSynthetic { hurst, modes, scale, seed } => fbm_synthetic(grid, *hurst, *modes, *scale, *seed)?,
            PathConfig::Sampled { knots, values } => ScalarPath::sampled(knots.clone(), values.clone())?,
        })
    }
}
