//! Run configuration: one TOML file per run, parsed strictly.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_complex::Complex64;
use qtrap::exponent_estimation::FitMode;
use qtrap::matrix_oracle::{TrapComponent, TrapState, TrapSystem};
use qtrap::spectral_measure::{SpectralMeasure, DEFAULT_BERNOULLI_LEVEL, DEFAULT_MESH, MAX_BERNOULLI_LEVEL};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Moments,
    Current,
    JtildeScan,
    Exponent,
    BernoulliTable,
    Entropy,
    OracleCompare,
    Baselines,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.to_possible_value().expect("no skipped variants");
        f.write_str(name.get_name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureSpec {
    Dirac {
        #[serde(default)]
        theta: f64,
    },
    Atomic {
        angles: Vec<f64>,
        weights: Vec<f64>,
    },
    Density {
        values: Option<Vec<f64>>,
        /// One-column CSV of grid values, relative to the config file.
        csv: Option<PathBuf>,
    },
    Lebesgue {
        grid: usize,
    },
    Bernoulli {
        p: f64,
        #[serde(default = "default_level")]
        level: u32,
    },
}

fn default_level() -> u32 {
    DEFAULT_BERNOULLI_LEVEL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Shift,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSpec {
    #[serde(default = "default_p")]
    pub p: f64,
    pub index: Option<usize>,
    /// Real and imaginary parts of an explicit trap vector.
    pub re: Option<Vec<f64>>,
    pub im: Option<Vec<f64>>,
}

fn default_p() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub dim: usize,
    pub seed: Option<u64>,
    pub trap: Vec<TrapSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKind {
    /// `y ∼ x^{-γ}`, for currents in time.
    Gamma,
    /// `y ∼ x^{α}`, for `J̃` against `1 - r`.
    Alpha,
}

impl From<FitKind> for FitMode {
    fn from(k: FitKind) -> Self {
        match k {
            FitKind::Gamma => FitMode::Gamma,
            FitKind::Alpha => FitMode::Alpha,
        }
    }
}

/// Numeric parameters; each command reads the ones it needs and fills in
/// defaults before the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Moment order `S`.
    pub order: Option<usize>,
    /// Last time step `T`.
    pub t_max: Option<usize>,
    /// Mesh size `M` on the circle.
    pub mesh: Option<usize>,
    /// Dyadic ladder `r = 1 - 2^{-k}`, `k = k_min..=k_max`.
    pub k_min: Option<u32>,
    pub k_max: Option<u32>,
    pub kappa: Option<f64>,
    pub p_values: Option<Vec<f64>>,
    pub level: Option<u32>,
    /// Two-column CSV for `exponent`, relative to the config file.
    pub input: Option<PathBuf>,
    pub x_column: Option<String>,
    pub y_column: Option<String>,
    pub fit: Option<FitKind>,
    /// Half-open row range `[start, end)` of the fit.
    pub window: Option<[usize; 2]>,
    pub tolerance: Option<f64>,
    /// Also report entropies in bits on stdout; artifacts stay in nats.
    pub bits: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    /// Output prefix, relative to the config file; artifacts are
    /// `<output>.csv`, `<output>.json` and `<output>.manifest.json`.
    pub output: PathBuf,
    pub measure: Option<MeasureSpec>,
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub params: Params,
}

pub const MAX_DIM: usize = 256;
pub const MAX_ORDER: usize = 1 << 22;
pub const MAX_T: usize = 1 << 16;
pub const MAX_MESH: usize = 1 << 22;
pub const MAX_LADDER_K: u32 = 20;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks the command against the file and fills in every default the
    /// command uses, so the manifest records the complete run.
    pub fn resolve(mut self, command: Command) -> Result<Self, CliError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::Config(format!(
                    "command: config is for `{c}` but `{command}` was requested"
                )));
            }
        }
        self.command = Some(command);
        match command {
            Command::Moments | Command::JtildeScan => self.need_measure()?,
            Command::Current => self.need_measure_or_system()?,
            Command::Entropy | Command::OracleCompare => self.need_system()?,
            Command::Exponent | Command::BernoulliTable | Command::Baselines => {}
        }
        let p = &mut self.params;
        match command {
            Command::Moments => {
                p.order.get_or_insert(64);
            }
            Command::Current => {
                p.t_max.get_or_insert(1024);
            }
            Command::JtildeScan => {
                p.mesh.get_or_insert(DEFAULT_MESH);
                p.k_min.get_or_insert(4);
                p.k_max.get_or_insert(10);
            }
            Command::Exponent => {
                if p.input.is_none() {
                    return Err(CliError::Config("params.input: required by `exponent`".into()));
                }
            }
            Command::BernoulliTable => {
                p.p_values.get_or_insert_with(|| vec![1.0 / 3.0, 0.95]);
                p.level.get_or_insert(DEFAULT_BERNOULLI_LEVEL);
                p.mesh.get_or_insert(DEFAULT_MESH);
                p.k_min.get_or_insert(4);
                p.k_max.get_or_insert(10);
            }
            Command::Entropy => {
                p.kappa.get_or_insert(0.5);
                p.t_max.get_or_insert(31);
                p.bits.get_or_insert(false);
            }
            Command::OracleCompare => {
                p.t_max.get_or_insert(31);
                p.tolerance.get_or_insert(1e-10);
            }
            Command::Baselines => {
                p.t_max.get_or_insert(1024);
            }
        }
        self.validate_params()?;
        Ok(self)
    }

    fn need_measure(&self) -> Result<(), CliError> {
        if self.measure.is_none() {
            return Err(CliError::Config("measure: required by this command".into()));
        }
        Ok(())
    }

    fn need_system(&self) -> Result<(), CliError> {
        if self.system.is_none() {
            return Err(CliError::Config("system: required by this command".into()));
        }
        Ok(())
    }

    fn need_measure_or_system(&self) -> Result<(), CliError> {
        match (&self.measure, &self.system) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(CliError::Config("exactly one of measure or system is required".into())),
        }
    }

    fn validate_params(&self) -> Result<(), CliError> {
        let p = &self.params;
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("params.{field}: {msg}")));
        if let Some(s) = p.order {
            if s == 0 || s > MAX_ORDER {
                return bad("order", format!("{s} outside 1..={MAX_ORDER}"));
            }
        }
        if let Some(t) = p.t_max {
            if t == 0 || t > MAX_T {
                return bad("t_max", format!("{t} outside 1..={MAX_T}"));
            }
        }
        if let Some(m) = p.mesh {
            if !(2..=MAX_MESH).contains(&m) {
                return bad("mesh", format!("{m} outside 2..={MAX_MESH}"));
            }
        }
        if let (Some(lo), Some(hi)) = (p.k_min, p.k_max) {
            if lo == 0 || lo > hi || hi > MAX_LADDER_K {
                return bad("k_min/k_max", format!("need 1 <= k_min <= k_max <= {MAX_LADDER_K}, got {lo}..{hi}"));
            }
            if hi - lo < 2 {
                return bad("k_min/k_max", "a fit needs at least 3 ladder points".into());
            }
        }
        if let Some(k) = p.kappa {
            if !(k > 0.0 && k < 1.0) {
                return bad("kappa", format!("{k} must lie strictly between 0 and 1"));
            }
        }
        if let Some(ps) = &p.p_values {
            if ps.is_empty() {
                return bad("p_values", "empty list".into());
            }
            if let Some(x) = ps.iter().find(|x| !(**x > 0.0 && **x < 1.0) || **x == 0.5) {
                return bad("p_values", format!("{x} must lie in (0, 1) and differ from 1/2"));
            }
        }
        if let Some(l) = p.level {
            if l == 0 || l > MAX_BERNOULLI_LEVEL {
                return bad("level", format!("{l} outside 1..={MAX_BERNOULLI_LEVEL}"));
            }
        }
        if let Some([a, b]) = p.window {
            if a >= b {
                return bad("window", format!("[{a}, {b}) is empty"));
            }
        }
        if let Some(t) = p.tolerance {
            if !(t > 0.0) {
                return bad("tolerance", format!("{t} must be positive"));
            }
        }
        if let Some(sys) = &self.system {
            if sys.dim == 0 || sys.dim > MAX_DIM {
                return Err(CliError::Config(format!("system.dim: {} outside 1..={MAX_DIM}", sys.dim)));
            }
            if sys.kind == SystemKind::Random && sys.seed.is_none() {
                return Err(CliError::Config("system.seed: required for kind = \"random\"".into()));
            }
            if sys.kind == SystemKind::Shift && sys.seed.is_some() {
                return Err(CliError::Config("system.seed: not used by kind = \"shift\"".into()));
            }
        }
        Ok(())
    }
}

/// Resolves `path` against the directory of the config file.
pub fn relative_to(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

impl MeasureSpec {
    pub fn build(&self, base: &Path) -> Result<SpectralMeasure, CliError> {
        let m = match self {
            MeasureSpec::Dirac { theta } => SpectralMeasure::dirac(*theta),
            MeasureSpec::Atomic { angles, weights } => SpectralMeasure::atomic(angles.clone(), weights.clone())?,
            MeasureSpec::Density { values, csv } => match (values, csv) {
                (Some(v), None) => SpectralMeasure::density(v.clone())?,
                (None, Some(path)) => SpectralMeasure::density(read_column(&relative_to(base, path))?)?,
                _ => {
                    return Err(CliError::Config(
                        "measure: density needs exactly one of `values` or `csv`".into(),
                    ))
                }
            },
            MeasureSpec::Lebesgue { grid } => SpectralMeasure::lebesgue(*grid)?,
            MeasureSpec::Bernoulli { p, level } => SpectralMeasure::bernoulli(*p, *level)?,
        };
        Ok(m)
    }
}

/// Reads a one-column CSV of numbers; a non-numeric first row is a header.
fn read_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::csv(path, e))?;
        if record.len() != 1 {
            return Err(CliError::Config(format!(
                "{}: row {} has {} columns, expected 1",
                path.display(),
                i + 1,
                record.len()
            )));
        }
        match record[0].trim().parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(CliError::Config(format!("{}: row {} is not a number", path.display(), i + 1)))
            }
        }
    }
    Ok(out)
}

impl SystemSpec {
    pub fn build(&self) -> Result<TrapSystem, CliError> {
        let comps = self
            .trap
            .iter()
            .enumerate()
            .map(|(j, t)| t.component(j, self.dim))
            .collect::<Result<Vec<_>, _>>()?;
        let sys = match self.kind {
            SystemKind::Shift => TrapSystem::cyclic_shift(self.dim, &comps)?,
            SystemKind::Random => TrapSystem::random(self.dim, self.seed.unwrap_or_default(), &comps)?,
        };
        Ok(sys)
    }
}

impl TrapSpec {
    fn component(&self, j: usize, dim: usize) -> Result<TrapComponent, CliError> {
        let state = match (self.index, &self.re, &self.im) {
            (Some(i), None, None) => TrapState::Basis(i),
            (None, Some(re), im) => {
                let im = im.clone().unwrap_or_else(|| vec![0.0; re.len()]);
                if re.len() != dim || im.len() != dim {
                    return Err(CliError::Config(format!(
                        "system.trap[{j}]: re/im need {dim} entries, got {}/{}",
                        re.len(),
                        im.len()
                    )));
                }
                TrapState::Vector(re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect())
            }
            _ => {
                return Err(CliError::Config(format!(
                    "system.trap[{j}]: give either `index` or `re` (with optional `im`)"
                )))
            }
        };
        Ok(TrapComponent { p: self.p, state })
    }
}
