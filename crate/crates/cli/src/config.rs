//! Run configuration: a TOML key-value file overlaid by global flags.
//!
//! ```toml
//! seed = 7
//! out = "results"
//! spec = "approx"          # "exact", "approx" or a truth-table file
//! codec = "posit4:1"
//! voltage = 0.8
//!
//! [geometry]
//! banks = 32
//!
//! [energy]
//! f_nominal_mhz = 350.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use insitu_core::mapper::MacroGeometry;
use insitu_core::{Codec, CompressorSpec, EnergyParams, Strategy};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub spec: Option<String>,
    pub codec: Option<String>,
    pub voltage: Option<f64>,
    pub sequential: Option<bool>,
    pub geometry: MacroGeometry,
    pub energy: EnergyParams,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }
}

/// Flags that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub spec: Option<String>,
    pub codec: Option<String>,
    pub voltage: Option<f64>,
    pub sequential: bool,
}

/// Fully resolved settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub spec: CompressorSpec,
    pub codec: Codec,
    pub params: EnergyParams,
    pub geometry: MacroGeometry,
    pub strategy: Strategy,
}

pub const DEFAULT_SEED: u64 = 42;

pub fn load_spec(name: &str) -> Result<CompressorSpec> {
    match name {
        "exact" => Ok(CompressorSpec::exact()),
        "approx" | "approximate" | "c22t-approx" => Ok(CompressorSpec::approximate()),
        path => {
            let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("spec {path}: {e}")))?;
            Ok(CompressorSpec::parse(&text)?)
        }
    }
}

impl Context {
    pub fn resolve(config: RunConfig, flags: Overrides) -> Result<Self> {
        let spec = load_spec(flags.spec.or(config.spec).as_deref().unwrap_or("approx"))?;
        let codec = match flags.codec.or(config.codec) {
            Some(c) => c.parse().map_err(CliError::usage)?,
            None => Codec::Fp4,
        };
        let mut params = config.energy;
        params.validate().map_err(CliError::usage)?;
        if let Some(v) = flags.voltage.or(config.voltage) {
            params = params.at_voltage(v).map_err(CliError::usage)?;
        }
        let sequential = flags.sequential || config.sequential.unwrap_or(false);
        Ok(Self {
            seed: flags.seed.or(config.seed).unwrap_or(DEFAULT_SEED),
            out: flags.out.or(config.out).unwrap_or_else(|| PathBuf::from("out")),
            spec,
            codec,
            params,
            geometry: config.geometry,
            strategy: if sequential { Strategy::Sequential } else { Strategy::Parallel },
        })
    }

    /// Path inside the output directory, creating the directory on demand.
    pub fn output(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.output(name)?;
        fs::write(&path, contents)?;
        Ok(path)
    }
}
