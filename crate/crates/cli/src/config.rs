//! Scenario files.
//!
//! A sweep file is TOML:
//!
//! ```toml
//! [sweep]
//! grid = "0:0.02:1"          # START:STEP:END, or a list of visibilities
//! target = [2, 1]            # (A_x, B_y), 1-based
//! levels = ["tomographic", "one_sided", "device_independent"]
//! functional = "full_statistics"   # or "chsh", "chsh3"
//! hierarchy_level = 2
//! seed = 0
//!
//! [solver]
//! gap_tol = 1e-7
//! max_iterations = 200
//!
//! [output]
//! csv = "werner.csv"
//! svg = "werner.svg"
//! ```
//!
//! A POVM file lists effects as row-major real and optional imaginary parts:
//!
//! ```toml
//! [povm]
//! name = "trine"
//! system_dim = 2
//! [[povm.effect]]
//! re = [[0.6667, 0.0], [0.0, 0.0]]
//! ```

use std::path::PathBuf;

use nalgebra::Complex;
use qrand_core::quantum::{CMatrix, Measurement};
use qrand_core::sdp::SolverOptions;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Tomographic,
    OneSided,
    DeviceIndependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalMode {
    #[default]
    FullStatistics,
    Chsh,
    Chsh3,
}

impl FunctionalMode {
    /// Target pair (0-based) matching each mode's reference curve.
    pub fn default_target(self) -> (usize, usize) {
        match self {
            FunctionalMode::Chsh => (1, 2),
            _ => (1, 0),
        }
    }
}

/// Sorted visibilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(mut values: Vec<f64>) -> Result<Self, ConfigError> {
        if values.is_empty() {
            return Err(invalid("grid is empty"));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("grid value {v} outside [0, 1]")));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self(values))
    }

    /// `START:STEP:END`, inclusive of `END` up to rounding.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, step, end] = parts.as_slice() else {
            return Err(invalid(format!("grid `{text}` is not START:STEP:END")));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| invalid(format!("`{s}` in grid `{text}` is not a number")));
        let (start, step, end) = (num(start)?, num(step)?, num(end)?);
        if !(step > 0.0) || end < start {
            return Err(invalid(format!("grid `{text}` needs STEP > 0 and END >= START")));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        if count > 100_000 {
            return Err(invalid(format!("grid `{text}` has too many points")));
        }
        // Values are rounded to 12 decimals so `0:0.05:1` yields 0.35, not 0.35000000000000003.
        let values = (0..=count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// The default sweep, `0, 0.02, ..., 1`.
    pub fn default_sweep() -> Self {
        Self::parse("0:0.02:1").expect("default grid")
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GridSpec {
    Range(String),
    List(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    grid: Option<GridSpec>,
    target: Option<[usize; 2]>,
    levels: Option<Vec<Level>>,
    #[serde(default)]
    functional: FunctionalMode,
    hierarchy_level: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    gap_tol: Option<f64>,
    feas_tol: Option<f64>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    csv: Option<PathBuf>,
    svg: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub grid: Grid,
    /// `(x, y)`, 0-based.
    pub target: (usize, usize),
    /// Hierarchy level of the moment relaxations.
    pub level: usize,
    pub solver: SolverOptions,
    pub levels: Vec<Level>,
    pub functional: FunctionalMode,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: Grid::default_sweep(),
            target: (1, 0),
            level: 2,
            solver: SolverOptions::default(),
            levels: vec![Level::Tomographic, Level::OneSided, Level::DeviceIndependent],
            functional: FunctionalMode::FullStatistics,
            csv: None,
            svg: None,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let file: SweepFile = toml::from_str(text)?;
        let s = file.sweep;
        let mut cfg = SweepConfig { functional: s.functional, target: s.functional.default_target(), ..Default::default() };
        match s.grid {
            Some(GridSpec::Range(r)) => cfg.grid = Grid::parse(&r)?,
            Some(GridSpec::List(v)) => cfg.grid = Grid::new(v)?,
            None => {}
        }
        if let Some([x, y]) = s.target {
            if x == 0 || y == 0 {
                return Err(invalid("target settings are 1-based"));
            }
            cfg.target = (x - 1, y - 1);
        }
        if let Some(levels) = s.levels {
            cfg.levels = levels;
        }
        if let Some(k) = s.hierarchy_level {
            cfg.level = k;
        }
        if let Some(seed) = s.seed {
            cfg.seed = seed;
        }
        if let Some(v) = file.solver.gap_tol {
            cfg.solver.gap_tol = v;
        }
        if let Some(v) = file.solver.feas_tol {
            cfg.solver.feas_tol = v;
        }
        if let Some(v) = file.solver.max_iterations {
            cfg.solver.max_iterations = v;
        }
        cfg.csv = file.output.csv;
        cfg.svg = file.output.svg;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.levels.is_empty() {
            return Err(invalid("at least one characterization level is required"));
        }
        if !(1..=3).contains(&self.level) {
            return Err(invalid(format!("hierarchy level {} outside 1..=3", self.level)));
        }
        if self.target.0 >= 2 || self.target.1 >= 4 {
            return Err(invalid("target must be (A_x, B_y) with x in 1..=2 and y in 1..=4"));
        }
        if !(self.solver.gap_tol > 0.0) || self.solver.max_iterations == 0 {
            return Err(invalid("solver tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffectSpec {
    re: Vec<Vec<f64>>,
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmSection {
    name: Option<String>,
    system_dim: usize,
    effect: Vec<EffectSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmFile {
    povm: PovmSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PovmConfig {
    pub povm: Measurement,
    pub system_dim: usize,
}

impl PovmConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let file: PovmFile = toml::from_str(text)?;
        let p = file.povm;
        let d = p.system_dim;
        let square = |rows: &Vec<Vec<f64>>, what: &str| -> Result<(), ConfigError> {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(invalid(format!("{what} part of an effect is not {d} x {d}")));
            }
            Ok(())
        };
        let mut effects = Vec::with_capacity(p.effect.len());
        for e in &p.effect {
            square(&e.re, "real")?;
            if let Some(im) = &e.im {
                square(im, "imaginary")?;
            }
            effects.push(CMatrix::from_fn(d, d, |i, j| {
                Complex::new(e.re[i][j], e.im.as_ref().map_or(0.0, |m| m[i][j]))
            }));
        }
        let povm = Measurement::povm(p.name.unwrap_or_else(|| "povm".into()), effects)
            .map_err(|e| invalid(format!("effects do not form a POVM: {e}")))?;
        Ok(Self { povm, system_dim: d })
    }
}

/// Bundled scenario files, by name.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "werner" => Some(include_str!("../presets/werner.cfg")),
        "chsh3" => Some(include_str!("../presets/chsh3.cfg")),
        "sic" => Some(include_str!("../presets/sic.cfg")),
        "trine" => Some(include_str!("../presets/trine.cfg")),
        "projective" => Some(include_str!("../presets/projective.cfg")),
        _ => None,
    }
}

pub fn read(path: &std::path::Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = Grid::parse("0:0.05:1").unwrap();
        assert_eq!(g.values().len(), 21);
        assert_eq!(g.values()[7], 0.35);
        assert_eq!(*g.values().last().unwrap(), 1.0);
        assert_eq!(Grid::default_sweep().values().len(), 51);
        assert!(Grid::parse("0:0:1").is_err());
        assert!(Grid::parse("0:0.1").is_err());
        assert!(Grid::new(vec![1.2]).is_err());
        assert_eq!(Grid::new(vec![0.5, 0.1, 0.5]).unwrap().values(), &[0.1, 0.5]);
    }

    #[test]
    fn sweep_defaults_and_overrides() {
        let c = SweepConfig::from_toml("").unwrap();
        assert_eq!(c, SweepConfig::default());
        let c = SweepConfig::from_toml(
            "[sweep]\ngrid = [0.2, 0.1]\ntarget = [1, 3]\nlevels = [\"device_independent\"]\nhierarchy_level = 1\n[solver]\nmax_iterations = 50\n",
        )
        .unwrap();
        assert_eq!(c.grid.values(), &[0.1, 0.2]);
        assert_eq!(c.target, (0, 2));
        assert_eq!(c.levels, vec![Level::DeviceIndependent]);
        assert_eq!(c.level, 1);
        assert_eq!(c.solver.max_iterations, 50);
        let f = SweepConfig::from_toml("[sweep]\nfunctional = \"chsh\"\n").unwrap();
        assert_eq!(f.target, (1, 2));
    }

    #[test]
    fn sweep_errors() {
        for bad in [
            "[sweep]\nlevels = []\n",
            "[sweep]\ntarget = [0, 1]\n",
            "[sweep]\ntarget = [3, 1]\n",
            "[sweep]\nhierarchy_level = 5\n",
            "[sweep]\ngrid = \"1:0.1:0\"\n",
            "[sweep]\nbogus = 1\n",
            "[sweep\n",
        ] {
            assert!(SweepConfig::from_toml(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn presets_parse() {
        for name in ["werner", "chsh3"] {
            SweepConfig::from_toml(preset(name).unwrap()).unwrap();
        }
        for name in ["sic", "trine", "projective"] {
            let p = PovmConfig::from_toml(preset(name).unwrap()).unwrap();
            assert_eq!(p.system_dim, 2);
        }
        assert!(preset("nope").is_none());
        assert!(PovmConfig::from_toml("[povm]\nsystem_dim = 2\n[[povm.effect]]\nre = [[1.0, 0.0], [0.0, 0.5]]\n").is_err());
    }
}
