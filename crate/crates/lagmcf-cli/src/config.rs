//! JSON configuration for the `simulate` subcommand.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use lagmcf_core::flow::{Scheme, StepControl};
use lagmcf_core::geometry::SymMat;
use lagmcf_core::grid::GridSpec;
use lagmcf_core::initdata::Preset;
use lagmcf_core::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridCfg,
    pub preset: PresetCfg,
    /// Optional heat-kernel smoothing applied to the initial data.
    #[serde(default)]
    pub mollify_tau: Option<f64>,
    pub control: ControlCfg,
    /// Pinching `eps` recorded in the diagnostics margin column.
    #[serde(default)]
    pub eps_pinch: f64,
    #[serde(default)]
    pub output: OutputCfg,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub ndim: usize,
    /// Points per axis (all axes equal).
    pub npts: usize,
    /// Box length per axis; defaults to `2 pi`.
    #[serde(default)]
    pub extent: Option<f64>,
}

impl GridCfg {
    pub fn build(&self) -> Result<GridSpec> {
        let extent = self.extent.unwrap_or(std::f64::consts::TAU);
        let npts = vec![self.npts; self.ndim.max(1)];
        let extents = vec![extent; self.ndim.max(1)];
        GridSpec::torus(&npts, &extents)
    }
}

/// Initial potential. `quadratic` is carried as a constant Hessian
/// background (its periodic part is zero); every other preset is sampled.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "name", rename_all = "snake_case")]
pub enum PresetCfg {
    Quadratic { diag: Vec<f64> },
    Cosine { amplitude: f64 },
    ProductSine { amplitude: f64 },
    SawtoothC11 { level: f64 },
    RandomBandlimited {
        hessian_clamp: f64,
        max_mode: usize,
        seed: u64,
    },
}

/// What a preset turns into: either a sampled periodic field or a constant
/// Hessian offset over a zero field.
pub enum InitialData {
    Periodic(Preset),
    QuadraticBackground(SymMat),
}

impl PresetCfg {
    pub fn initial(&self) -> InitialData {
        match self {
            PresetCfg::Quadratic { diag } => {
                InitialData::QuadraticBackground(SymMat::from_diag(diag))
            }
            PresetCfg::Cosine { amplitude } => InitialData::Periodic(Preset::Cosine {
                amplitude: *amplitude,
            }),
            PresetCfg::ProductSine { amplitude } => InitialData::Periodic(Preset::ProductSine {
                amplitude: *amplitude,
            }),
            PresetCfg::SawtoothC11 { level } => {
                InitialData::Periodic(Preset::SawtoothC11 { level: *level })
            }
            PresetCfg::RandomBandlimited {
                hessian_clamp,
                max_mode,
                seed,
            } => InitialData::Periodic(Preset::RandomBandlimited {
                hessian_clamp: *hessian_clamp,
                max_mode: *max_mode,
                seed: *seed,
            }),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlCfg {
    pub sigma: f64,
    pub scheme: SchemeCfg,
    pub t_end: f64,
    pub sample_every: usize,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
pub enum SchemeCfg {
    Euler,
    Rk2,
}

impl ControlCfg {
    pub fn build(&self) -> StepControl {
        StepControl {
            sigma: self.sigma,
            scheme: match self.scheme {
                SchemeCfg::Euler => Scheme::Euler,
                SchemeCfg::Rk2 => Scheme::Rk2,
            },
            t_end: self.t_end,
            sample_every: self.sample_every,
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputCfg {
    /// Where to write the final periodic potential (LGF1).
    #[serde(default)]
    pub field: Option<PathBuf>,
    /// Where to write the diagnostics series (CSV).
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }
}
