//! Run configuration: JSON in, validated grid, system, ladder and datum out.

use std::path::{Path, PathBuf};

use hsbmo_core::extension::TLadder;
use hsbmo_core::grid::{generate, BoundaryGrid, Generator, SampledField};
use hsbmo_core::kernels::{named_system, EllipticSystem, SystemSpec};
use hsbmo_core::approx::Mollifier;
use hsbmo_core::C64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};
use crate::format;
use crate::report::sha256_hex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub h: f64,
}

/// A named system with parameters, or an explicit coefficient tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_system_name")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<TensorConfig>,
}

/// Coefficients `a^{αβ}_{rs}` laid out `((α·M+β)·n+r)·n+s`, each `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorConfig {
    pub components: usize,
    pub coefficients: Vec<[f64; 2]>,
}

fn default_system_name() -> String {
    "laplacian".into()
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            name: default_system_name(),
            params: Map::new(),
            tensor: None,
        }
    }
}

/// Geometric height ladder; `t_min` defaults to `h/4` and `top` to `S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<f64>,
}

fn default_ratio() -> f64 {
    1.2
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            t_min: None,
            ratio: default_ratio(),
            top: None,
        }
    }
}

/// Boundary datum: a generator or a field file (`.csv` or binary).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operation {
    Kernel {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        heights: Option<Vec<f64>>,
    },
    Extend {
        #[serde(default = "yes")]
        gradient: bool,
        #[serde(default)]
        trace: bool,
    },
    Norms {
        #[serde(default = "default_ps")]
        p: Vec<f64>,
        #[serde(default = "default_etas")]
        etas: Vec<f64>,
    },
    Approx {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<Vec<f64>>,
        #[serde(default = "default_etas")]
        etas: Vec<f64>,
        #[serde(default = "default_mollifiers")]
        mollifiers: Vec<String>,
    },
    Verify {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        filter: Option<String>,
    },
}

fn yes() -> bool {
    true
}

fn default_ps() -> Vec<f64> {
    vec![1.0, 2.0]
}

fn default_etas() -> Vec<f64> {
    vec![0.5]
}

fn default_mollifiers() -> Vec<String> {
    Mollifier::NAMES.iter().map(|s| s.to_string()).collect()
}

fn default_aperture() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub ladder: LadderConfig,
    #[serde(default = "default_aperture")]
    pub aperture: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum: Option<DatumConfig>,
    #[serde(default)]
    pub operations: Vec<Operation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagator_cache: Option<PathBuf>,
    /// Source text, for line-anchored diagnostics.
    #[serde(skip)]
    source: Option<String>,
}

/// Desk grids of the acceptance suite.
pub fn desk_grid(dim: usize) -> GridConfig {
    if dim == 1 {
        GridConfig {
            dim: 1,
            n: 2048,
            h: 1.0 / 128.0,
        }
    } else {
        GridConfig {
            dim: 2,
            n: 256,
            h: 1.0 / 32.0,
        }
    }
}

/// What a command needs from the configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Kernel,
    Extend,
    Norms,
    Approx,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Extend => "extend",
            Command::Norms => "norms",
            Command::Approx => "approx",
            Command::Verify => "verify",
        }
    }

    fn matches(&self, op: &Operation) -> bool {
        matches!(
            (self, op),
            (Command::Kernel, Operation::Kernel { .. })
                | (Command::Extend, Operation::Extend { .. })
                | (Command::Norms, Operation::Norms { .. })
                | (Command::Approx, Operation::Approx { .. })
                | (Command::Verify, Operation::Verify { .. })
        )
    }

    fn default_operation(&self) -> Operation {
        match self {
            Command::Kernel => Operation::Kernel { heights: None },
            Command::Extend => Operation::Extend {
                gradient: true,
                trace: false,
            },
            Command::Norms => Operation::Norms {
                p: default_ps(),
                etas: default_etas(),
            },
            Command::Approx => Operation::Approx {
                eps: None,
                etas: default_etas(),
                mollifiers: default_mollifiers(),
            },
            Command::Verify => Operation::Verify { filter: None },
        }
    }
}

impl RunConfig {
    /// The d-dimensional desk configuration used when no file is given.
    pub fn desk(dim: usize) -> Self {
        RunConfig {
            grid: desk_grid(dim),
            system: SystemConfig::default(),
            ladder: LadderConfig::default(),
            aperture: default_aperture(),
            datum: None,
            operations: Vec::new(),
            output: None,
            seed: None,
            calibration: None,
            propagator_cache: None,
            source: None,
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("config line {} column {}: {e}", e.line(), e.column()))
        })?;
        cfg.source = Some(text.to_string());
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| e.context(&path.display().to_string()))?;
        // Relative paths inside the file resolve against its directory.
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = cfg.datum.as_mut().and_then(|d| d.file.as_mut()) {
            rebase(d);
        }
        cfg.calibration.as_mut().map(rebase);
        cfg.propagator_cache.as_mut().map(rebase);
        cfg.output.as_mut().map(rebase);
        Ok(cfg)
    }

    /// Builds a configuration error pointing at the first line mentioning `key`.
    pub fn error_at(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        let needle = format!("\"{key}\"");
        let line = self
            .source
            .as_deref()
            .and_then(|s| s.lines().position(|l| l.contains(&needle)))
            .map(|i| format!("config line {}: ", i + 1))
            .unwrap_or_else(|| "config: ".into());
        CliError::Config(format!("{line}{key}: {msg}"))
    }

    pub fn grid(&self) -> CliResult<BoundaryGrid> {
        let g = &self.grid;
        BoundaryGrid::new(g.dim, g.n, g.h).map_err(|e| self.error_at("grid", e))
    }

    fn param(&self, params: &Map<String, Value>, key: &str, at: &str) -> CliResult<Option<f64>> {
        match params.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| self.error_at(at, format!("parameter `{key}` must be a number"))),
        }
    }

    fn reject_unknown(&self, params: &Map<String, Value>, known: &[&str], at: &str) -> CliResult<()> {
        match params.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(self.error_at(at, format!("unknown parameter `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn system_spec(&self) -> CliResult<SystemSpec> {
        let sys = &self.system;
        let spec = SystemSpec::by_name(&sys.name).map_err(|e| self.error_at("system", e))?;
        let p = &sys.params;
        Ok(match spec {
            SystemSpec::Laplacian => {
                self.reject_unknown(p, &[], "params")?;
                spec
            }
            SystemSpec::ScalarDivA { .. } => {
                self.reject_unknown(p, &["matrix"], "params")?;
                let matrix = match p.get("matrix") {
                    None => None,
                    Some(v) => Some(
                        serde_json::from_value::<Vec<f64>>(v.clone())
                            .map_err(|e| self.error_at("matrix", e))?,
                    ),
                };
                SystemSpec::ScalarDivA { matrix }
            }
            SystemSpec::Lame { mu, lambda } => {
                self.reject_unknown(p, &["mu", "lambda"], "params")?;
                SystemSpec::Lame {
                    mu: self.param(p, "mu", "params")?.unwrap_or(mu),
                    lambda: self.param(p, "lambda", "params")?.unwrap_or(lambda),
                }
            }
        })
    }

    pub fn system(&self) -> CliResult<EllipticSystem> {
        let n = self.grid.dim + 1;
        match &self.system.tensor {
            Some(t) => {
                let coeff = t.coefficients.iter().map(|c| C64::new(c[0], c[1])).collect();
                EllipticSystem::new(&self.system.name, n, t.components, coeff).map_err(|e| self.error_at("tensor", e))
            }
            None => named_system(&self.system_spec()?, n).map_err(|e| self.error_at("system", e)),
        }
    }

    pub fn ladder(&self) -> CliResult<TLadder> {
        let g = self.grid()?;
        let l = &self.ladder;
        let t_min = l.t_min.unwrap_or(g.h() / 4.0);
        let top = l.top.unwrap_or(g.half_extent());
        if !(top <= g.half_extent() && top > t_min) {
            return Err(self.error_at("top", format!("must lie in (t_min, S = {}]", g.half_extent())));
        }
        TLadder::covering(t_min, l.ratio, top).map_err(|e| self.error_at("ladder", e))
    }

    pub fn generator(&self) -> CliResult<Option<Generator>> {
        let Some(datum) = &self.datum else { return Ok(None) };
        let Some(name) = &datum.generator else { return Ok(None) };
        let mut gen = Generator::by_name(name).map_err(|e| self.error_at("generator", e))?;
        let p = &datum.params;
        match &mut gen {
            Generator::Constant { value } => {
                self.reject_unknown(p, &["value"], "params")?;
                if let Some(v) = p.get("value") {
                    *value = match serde_json::from_value::<[f64; 2]>(v.clone()) {
                        Ok([re, im]) => C64::new(re, im),
                        Err(_) => C64::new(self.param(p, "value", "params")?.unwrap_or(1.0), 0.0),
                    };
                }
            }
            Generator::PowerEta { eta } => {
                self.reject_unknown(p, &["eta"], "params")?;
                *eta = self.param(p, "eta", "params")?.unwrap_or(*eta);
            }
            Generator::Bump { radius } => {
                self.reject_unknown(p, &["radius"], "params")?;
                *radius = self.param(p, "radius", "params")?;
            }
            Generator::LacunaryBmo { terms } => {
                self.reject_unknown(p, &["terms"], "params")?;
                if let Some(v) = p.get("terms") {
                    *terms = v
                        .as_u64()
                        .ok_or_else(|| self.error_at("terms", "must be a positive integer"))?
                        as usize;
                }
            }
            Generator::LogAbs | Generator::Indicator => self.reject_unknown(p, &[], "params")?,
        }
        gen.validate(&self.grid()?).map_err(|e| self.error_at("datum", e))?;
        Ok(Some(gen))
    }

    /// True when running `cmd` draws random samples.
    pub fn needs_seed(&self, cmd: Command) -> bool {
        let lacunary = self
            .datum
            .as_ref()
            .and_then(|d| d.generator.as_deref())
            .is_some_and(|g| g == "lacunary_bmo");
        let holder = match self.operation(cmd) {
            Operation::Norms { etas, .. } | Operation::Approx { etas, .. } => !etas.is_empty(),
            _ => false,
        };
        cmd == Command::Verify || (cmd != Command::Kernel && lacunary) || holder
    }

    pub fn seed_for(&self, cmd: Command) -> CliResult<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None if self.needs_seed(cmd) => Err(self.error_at(
                "seed",
                format!("`{}` samples randomly; give a seed in the config or with --seed", cmd.name()),
            )),
            None => Ok(0),
        }
    }

    /// The operation entry for `cmd`, or its defaults.
    pub fn operation(&self, cmd: Command) -> Operation {
        self.operations
            .iter()
            .find(|op| cmd.matches(op))
            .cloned()
            .unwrap_or_else(|| cmd.default_operation())
    }

    /// Loads or generates the boundary datum with `components` components
    /// unless the datum itself fixes the count.
    pub fn datum(&self, components: usize, seed: u64) -> CliResult<SampledField> {
        let grid = self.grid()?;
        let Some(datum) = &self.datum else {
            return Err(self.error_at("datum", "this command needs a boundary datum"));
        };
        if let Some(path) = &datum.file {
            if datum.generator.is_some() {
                return Err(self.error_at("datum", "give either `generator` or `file`, not both"));
            }
            let f = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
                format::read_field_csv(std::io::BufReader::new(file)).map_err(|e| e.context(&path.display().to_string()))?
            } else {
                format::load_field(path)?
            };
            if *f.grid() != grid {
                return Err(self.error_at("file", "field grid differs from the configured grid"));
            }
            return Ok(f);
        }
        let gen = self
            .generator()?
            .ok_or_else(|| self.error_at("datum", "needs `generator` or `file`"))?;
        let m = datum.components.unwrap_or(components);
        generate(&gen, &grid, m, seed).map_err(|e| self.error_at("datum", e))
    }

    /// Checks every reference the command will touch.
    pub fn validate(&self, cmd: Command) -> CliResult<()> {
        self.grid()?;
        self.system()?;
        self.ladder()?;
        if !(self.aperture > 0.0 && self.aperture.is_finite()) {
            return Err(self.error_at("aperture", "must be positive"));
        }
        self.generator()?;
        if matches!(cmd, Command::Extend | Command::Norms | Command::Approx) && self.datum.is_none() {
            return Err(self.error_at("datum", format!("`{}` needs a boundary datum", cmd.name())));
        }
        let eta_ok = |e: &f64| *e > 0.0 && *e < 1.0;
        match self.operation(cmd) {
            Operation::Kernel { heights: Some(hs) } if hs.is_empty() || hs.iter().any(|t| !(*t > 0.0)) => {
                return Err(self.error_at("heights", "need positive heights"));
            }
            Operation::Norms { p, etas } => {
                if p.is_empty() || p.iter().any(|p| !(*p >= 1.0 && p.is_finite())) {
                    return Err(self.error_at("p", "exponents must be finite and at least 1"));
                }
                if !etas.iter().all(eta_ok) {
                    return Err(self.error_at("etas", "exponents must lie in (0,1)"));
                }
            }
            Operation::Approx { eps, etas, mollifiers } => {
                if !etas.iter().all(eta_ok) {
                    return Err(self.error_at("etas", "exponents must lie in (0,1)"));
                }
                if let Some(e) = eps {
                    if e.is_empty() || e.iter().any(|v| !(*v > 0.0)) {
                        return Err(self.error_at("eps", "need positive ε values"));
                    }
                }
                for m in &mollifiers {
                    Mollifier::by_name(m).map_err(|e| self.error_at("mollifiers", e))?;
                }
            }
            _ => {}
        }
        self.seed_for(cmd)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON, ignoring where outputs go and where
    /// the calibration file lives (its content hash is reported separately).
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output = None;
        canon.calibration = None;
        sha256_hex(&serde_json::to_vec(&canon).expect("config serializes"))
    }
}
