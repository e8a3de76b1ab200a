//! Run and sweep configuration, read from TOML or built from flags.
//!
//! Mode numbers in configs are one-based; element and parameter indices are
//! zero-based.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use modal_sens_core::engines::{Engine, SqmrConfig};
use modal_sens_core::fe::Material;
use modal_sens_core::study::{CharacteristicSpec, ReferenceSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    pub thickness: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        let steel = Material::<f64>::steel();
        Self {
            youngs_modulus: steel.youngs_modulus,
            poisson_ratio: steel.poisson_ratio,
            density: steel.density,
            thickness: steel.thickness,
        }
    }
}

impl From<MaterialConfig> for Material<f64> {
    fn from(m: MaterialConfig) -> Self {
        Material {
            youngs_modulus: m.youngs_modulus,
            poisson_ratio: m.poisson_ratio,
            density: m.density,
            thickness: m.thickness,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub material: MaterialConfig,
}

/// Source of the MAC reference shape.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSource {
    #[default]
    Auto,
    /// One-based baseline mode.
    Mode(usize),
    /// Whitespace-separated values, one per DOF.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum CharacteristicConfig {
    Mac {
        #[serde(default)]
        reference: ReferenceSource,
    },
    Mse {
        /// Defaults to the element with the largest strain energy.
        #[serde(default)]
        element: Option<usize>,
    },
    Mf,
}

impl CharacteristicConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CharacteristicConfig::Mac { .. } => "mac",
            CharacteristicConfig::Mse { .. } => "mse",
            CharacteristicConfig::Mf => "mf",
        }
    }

    pub fn to_spec(&self) -> Result<CharacteristicSpec<f64>> {
        Ok(match self {
            CharacteristicConfig::Mac { reference } => CharacteristicSpec::Mac(match reference {
                ReferenceSource::Auto => ReferenceSpec::Auto,
                ReferenceSource::Mode(j) => {
                    ensure!(*j >= 1, "reference mode numbers start at 1");
                    ReferenceSpec::Mode(j - 1)
                }
                ReferenceSource::File(path) => ReferenceSpec::Vector(read_vector(path)?),
            }),
            CharacteristicConfig::Mse { element } => CharacteristicSpec::Mse(*element),
            CharacteristicConfig::Mf => CharacteristicSpec::Mf,
        })
    }
}

/// Reads whitespace- or comma-separated numbers.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading reference vector {}", path.display()))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .with_context(|| format!("bad number {t:?} in {}", path.display()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqmrSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SqmrSettings {
    fn default() -> Self {
        let d = SqmrConfig::<f64>::default();
        Self {
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
        }
    }
}

impl From<SqmrSettings> for SqmrConfig<f64> {
    fn from(s: SqmrSettings) -> Self {
        SqmrConfig {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            initial_guess: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// Format implied by a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("csv") => Ok(OutputFormat::Csv),
            Some("json") => Ok(OutputFormat::Json),
            _ => bail!(
                "cannot infer output format from {}; use .csv or .json",
                path.display()
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

impl OutputConfig {
    pub fn format(&self) -> Result<OutputFormat> {
        self.format
            .map_or_else(|| OutputFormat::from_path(&self.path), Ok)
    }
}

fn default_reps() -> usize {
    20
}

fn default_mode() -> usize {
    1
}

/// One benchmark: a plate, a mode, a characteristic and the engines to time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// One-based mode number.
    #[serde(default = "default_mode")]
    pub mode: usize,
    pub characteristic: CharacteristicConfig,
    pub engines: Vec<String>,
    #[serde(default)]
    pub sqmr: SqmrSettings,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.engines.is_empty(), "at least one engine is required");
        ensure!(self.reps >= 1, "reps must be at least 1");
        ensure!(self.mode >= 1, "mode numbers start at 1");
        ensure!(
            self.model.nx >= 1 && self.model.ny >= 1,
            "mesh needs at least one element each way"
        );
        ensure!(
            self.sqmr.tolerance > 0.0 && self.sqmr.max_iterations >= 1,
            "SQMR tolerance must be positive and max iterations at least 1"
        );
        self.parsed_engines()?;
        Ok(())
    }

    /// Engines in the order given, duplicates rejected.
    pub fn parsed_engines(&self) -> Result<Vec<Engine>> {
        let mut out: Vec<Engine> = Vec::with_capacity(self.engines.len());
        for name in &self.engines {
            let engine = parse_engine(name)?;
            ensure!(!out.contains(&engine), "engine {engine} listed twice");
            out.push(engine);
        }
        Ok(out)
    }
}

/// Engine by name; `ne` is accepted for forward Nelson.
pub fn parse_engine(name: &str) -> Result<Engine> {
    if name.trim().eq_ignore_ascii_case("ne") {
        return Ok(Engine::ForwardNelson);
    }
    Ok(name.parse::<Engine>()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshEntry {
    pub nx: usize,
    pub ny: usize,
    /// Entries with `enabled = false` are skipped unless forced.
    #[serde(default = "enabled_by_default")]
    pub enabled: bool,
    /// Overrides the sweep-wide repetition count.
    #[serde(default)]
    pub reps: Option<usize>,
}

fn enabled_by_default() -> bool {
    true
}

/// A grid of meshes sharing one mode, characteristic and engine list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_mode")]
    pub mode: usize,
    pub characteristic: CharacteristicConfig,
    pub engines: Vec<String>,
    #[serde(default)]
    pub material: MaterialConfig,
    #[serde(default)]
    pub sqmr: SqmrSettings,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub output: Option<OutputConfig>,
    pub mesh: Vec<MeshEntry>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading sweep config {}", path.display()))?;
        let cfg: SweepConfig = toml::from_str(&text)
            .with_context(|| format!("parsing sweep config {}", path.display()))?;
        ensure!(!cfg.mesh.is_empty(), "sweep config lists no meshes");
        Ok(cfg)
    }

    /// Run configurations for the selected meshes, in file order.
    pub fn runs(&self, include_disabled: bool) -> Vec<RunConfig> {
        self.mesh
            .iter()
            .filter(|m| m.enabled || include_disabled)
            .map(|m| RunConfig {
                model: ModelConfig {
                    nx: m.nx,
                    ny: m.ny,
                    material: self.material,
                },
                mode: self.mode,
                characteristic: self.characteristic.clone(),
                engines: self.engines.clone(),
                sqmr: self.sqmr,
                reps: m.reps.unwrap_or(self.reps),
                output: None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_config() -> RunConfig {
        RunConfig {
            model: ModelConfig {
                nx: 4,
                ny: 2,
                material: MaterialConfig::default(),
            },
            mode: 1,
            characteristic: CharacteristicConfig::Mf,
            engines: vec!["pm".into()],
            sqmr: SqmrSettings::default(),
            reps: 1,
            output: None,
        }
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(run_config().validate().is_ok());
        let mut c = run_config();
        c.engines.clear();
        assert!(c.validate().is_err());
        let mut c = run_config();
        c.reps = 0;
        assert!(c.validate().is_err());
        let mut c = run_config();
        c.engines = vec!["pm".into(), "PM".into()];
        assert!(c.validate().is_err());
        let mut c = run_config();
        c.engines = vec!["newton".into()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn ne_alias_selects_forward_nelson() {
        assert_eq!(parse_engine("ne").unwrap(), Engine::ForwardNelson);
        assert_eq!(parse_engine("adam").unwrap(), Engine::AdjointAlgebraic);
    }

    #[test]
    fn characteristic_tables_parse() {
        let mac: CharacteristicConfig = toml::from_str("name = \"mac\"").unwrap();
        assert_eq!(
            mac,
            CharacteristicConfig::Mac {
                reference: ReferenceSource::Auto
            }
        );
        let mac: CharacteristicConfig =
            toml::from_str("name = \"mac\"\nreference = { mode = 3 }").unwrap();
        assert_eq!(
            mac.to_spec().unwrap(),
            CharacteristicSpec::Mac(ReferenceSpec::Mode(2))
        );
        let mse: CharacteristicConfig = toml::from_str("name = \"mse\"\nelement = 7").unwrap();
        assert_eq!(mse.to_spec().unwrap(), CharacteristicSpec::Mse(Some(7)));
        assert!(toml::from_str::<CharacteristicConfig>("name = \"mse\"\nelemnt = 7").is_err());
    }

    #[test]
    fn zero_reference_mode_is_rejected() {
        let c = CharacteristicConfig::Mac {
            reference: ReferenceSource::Mode(0),
        };
        assert!(c.to_spec().is_err());
    }

    #[test]
    fn format_follows_extension() {
        assert_eq!(
            OutputFormat::from_path(Path::new("a/b.CSV")).unwrap(),
            OutputFormat::Csv
        );
        assert_eq!(
            OutputFormat::from_path(Path::new("r.json")).unwrap(),
            OutputFormat::Json
        );
        assert!(OutputFormat::from_path(Path::new("r.txt")).is_err());
    }

    #[test]
    fn disabled_meshes_are_opt_in() {
        let cfg: SweepConfig = toml::from_str(
            r#"
            engines = ["pm", "fn"]
            reps = 3
            [characteristic]
            name = "mf"
            [[mesh]]
            nx = 20
            ny = 10
            [[mesh]]
            nx = 180
            ny = 140
            enabled = false
            reps = 1
            "#,
        )
        .unwrap();
        assert_eq!(cfg.runs(false).len(), 1);
        let all = cfg.runs(true);
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].reps, 3);
        assert_eq!(all[1].reps, 1);
    }
}
