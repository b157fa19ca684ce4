//! Job configuration, read from a TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use warpsurf_core::hypersurface::{builtin, ImmersionSpec};
use warpsurf_core::pseudolinalg::Signature;
use warpsurf_core::rotational::OrbitForm;

use crate::CliError;

/// Interval used when a warped or rotational section omits `I`.
pub const DEFAULT_INTERVAL: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Classify,
    Reconstruct,
    Verify,
    Generate,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Classify => "classify",
            Mode::Reconstruct => "reconstruct",
            Mode::Verify => "verify",
            Mode::Generate => "generate",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    /// Verification sample count.
    pub samples: Option<usize>,
    /// Grid size on `I` for classification and shape data.
    pub grid: Option<usize>,
    pub warped: Option<WarpedSection>,
    pub immersion: Option<ImmersionSection>,
    pub rotational: Option<RotationalSection>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub mesh: Option<MeshSection>,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpedSection {
    /// Warping function of `t` (and of the sweep parameter in sweep mode).
    pub f: String,
    pub c: f64,
    #[serde(rename = "I", alias = "interval")]
    pub interval: Option<(f64, f64)>,
    /// Hypersurface dimension.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Ambient signature `[dim, index]`; inferred from the subcase when absent.
    pub sig: Option<Signature>,
}

fn default_n() -> usize {
    2
}

impl WarpedSection {
    pub fn interval(&self) -> (f64, f64) {
        self.interval.unwrap_or(DEFAULT_INTERVAL)
    }
}

/// A user immersion: a builtin fixture, explicit components, or a file
/// written by `reconstruct` or `generate`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionSection {
    pub builtin: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub vars: Option<Vec<String>>,
    pub components: Option<Vec<String>>,
    pub sig: Option<Signature>,
    pub domain: Option<Vec<(f64, f64)>>,
    pub path: Option<PathBuf>,
}

impl ImmersionSection {
    pub fn resolve(&self) -> Result<ImmersionSpec, CliError> {
        let cfg = |m: String| CliError::Config(format!("[immersion] {m}"));
        let sources = [self.builtin.is_some(), self.components.is_some(), self.path.is_some()];
        if sources.iter().filter(|&&b| b).count() != 1 {
            return Err(cfg("give exactly one of `builtin`, `components` or `path`".into()));
        }
        if let Some(name) = &self.builtin {
            return builtin(name, &self.params).map_err(|e| cfg(e.to_string()));
        }
        if let Some(path) = &self.path {
            let text = std::fs::read_to_string(path).map_err(|e| cfg(format!("{}: {e}", path.display())))?;
            let spec: ImmersionSpec = toml::from_str(&text).map_err(|e| cfg(format!("{}: {e}", path.display())))?;
            spec.validate().map_err(|e| cfg(e.to_string()))?;
            return Ok(spec);
        }
        let components = self.components.as_ref().expect("checked above");
        let vars = self.vars.as_ref().ok_or_else(|| cfg("`components` needs `vars`".into()))?;
        let sig = self.sig.ok_or_else(|| cfg("`components` needs `sig`".into()))?;
        let domain = self.domain.clone().ok_or_else(|| cfg("`components` needs `domain`".into()))?;
        ImmersionSpec::from_components(sig, vars, components, domain).map_err(|e| cfg(e.to_string()))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationalSection {
    /// 1: spacelike axis, 2: timelike axis, 3: null axis.
    pub case: u8,
    pub f1: String,
    pub f2: String,
    /// Required for cases 1 and 2; case 3 is always parabolic.
    pub orbit: Option<OrbitForm>,
    pub sig: Signature,
    #[serde(rename = "I", alias = "interval")]
    pub interval: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub rows: usize,
    pub cols: usize,
    /// Ambient coordinate removed before writing a 4-dimensional immersion.
    pub drop: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: JobConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(imm) = cfg.immersion.as_mut() {
            if let Some(p) = imm.path.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        if let Some(dir) = cfg.output.dir.as_mut() {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(cfg)
    }

    /// Checks that the sections required by the mode are present.
    pub fn check(&self) -> Result<(), CliError> {
        let need = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::Config(format!("mode `{}` needs a [{section}] section", self.mode.name())))
            }
        };
        match self.mode {
            Mode::Classify | Mode::Reconstruct => need(self.warped.is_some(), "warped"),
            Mode::Verify => need(self.immersion.is_some(), "immersion"),
            Mode::Generate => need(self.rotational.is_some(), "rotational"),
            Mode::Sweep => {
                need(self.warped.is_some(), "warped")?;
                need(self.sweep.is_some(), "sweep")
            }
        }?;
        if let Some(m) = self.mesh {
            if m.rows < 2 || m.cols < 2 {
                return Err(CliError::Config("mesh needs at least 2 rows and 2 columns".into()));
            }
        }
        if self.samples == Some(0) {
            return Err(CliError::Config("`samples` must be positive".into()));
        }
        if self.grid.is_some_and(|g| g < 2) {
            return Err(CliError::Config("`grid` must be at least 2".into()));
        }
        Ok(())
    }
}
