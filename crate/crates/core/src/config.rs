//! Measurement and discretization parameters.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WAVELENGTH: f64 = 0.075;
pub const DEFAULT_DOI_WAVELENGTHS: f64 = 5.6;
pub const DEFAULT_ARRAY_WAVELENGTHS: f64 = 4.5;

/// Physical setup of the imaging experiment. Lengths are in meters.
///
/// `doi_side` and `array_radius` default to multiples of the wavelength, so a
/// JSON file that only overrides `wavelength` scales the whole layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PhysicsConfigFile")]
pub struct PhysicsConfig {
    pub wavelength: f64,
    pub doi_side: f64,
    pub grid_n: usize,
    pub n_tx: usize,
    pub n_rx: usize,
    pub array_radius: f64,
    /// Relative permittivity of the embedding medium. Contrast is measured
    /// against it and the kernels use the background wavenumber.
    pub background_permittivity: f64,
    pub rng_seed: u64,
}

#[derive(Deserialize)]
struct PhysicsConfigFile {
    wavelength: Option<f64>,
    doi_side: Option<f64>,
    grid_n: Option<usize>,
    n_tx: Option<usize>,
    n_rx: Option<usize>,
    array_radius: Option<f64>,
    background_permittivity: Option<f64>,
    rng_seed: Option<u64>,
}

impl From<PhysicsConfigFile> for PhysicsConfig {
    fn from(f: PhysicsConfigFile) -> Self {
        let d = PhysicsConfig::default();
        let wavelength = f.wavelength.unwrap_or(d.wavelength);
        PhysicsConfig {
            wavelength,
            doi_side: f.doi_side.unwrap_or(DEFAULT_DOI_WAVELENGTHS * wavelength),
            grid_n: f.grid_n.unwrap_or(d.grid_n),
            n_tx: f.n_tx.unwrap_or(d.n_tx),
            n_rx: f.n_rx.unwrap_or(d.n_rx),
            array_radius: f
                .array_radius
                .unwrap_or(DEFAULT_ARRAY_WAVELENGTHS * wavelength),
            background_permittivity: f.background_permittivity.unwrap_or(1.0),
            rng_seed: f.rng_seed.unwrap_or(d.rng_seed),
        }
    }
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            wavelength: DEFAULT_WAVELENGTH,
            doi_side: DEFAULT_DOI_WAVELENGTHS * DEFAULT_WAVELENGTH,
            grid_n: 64,
            n_tx: 36,
            n_rx: 36,
            array_radius: DEFAULT_ARRAY_WAVELENGTHS * DEFAULT_WAVELENGTH,
            background_permittivity: 1.0,
            rng_seed: 0,
        }
    }
}

impl PhysicsConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: PhysicsConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Same layout with a different grid resolution.
    pub fn with_grid(mut self, grid_n: usize) -> Self {
        self.grid_n = grid_n;
        self
    }

    /// Free-space wavenumber 2π/λ.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Wavenumber of the background medium.
    pub fn k_background(&self) -> f64 {
        self.k0() * self.background_permittivity.sqrt()
    }

    pub fn cell_side(&self) -> f64 {
        self.doi_side / self.grid_n as f64
    }

    pub fn cell_count(&self) -> usize {
        self.grid_n * self.grid_n
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return bad(format!("wavelength must be positive, got {}", self.wavelength));
        }
        if !(self.doi_side.is_finite() && self.doi_side > 0.0) {
            return bad(format!("doi_side must be positive, got {}", self.doi_side));
        }
        if self.grid_n < 2 {
            return bad(format!("grid_n must be at least 2, got {}", self.grid_n));
        }
        if self.n_tx == 0 || self.n_rx == 0 {
            return bad("antenna counts must be at least 1".into());
        }
        let half_diagonal = self.doi_side * std::f64::consts::SQRT_2 / 2.0;
        if !(self.array_radius.is_finite() && self.array_radius > half_diagonal) {
            return bad(format!(
                "array_radius {} must exceed the DOI half-diagonal {}",
                self.array_radius, half_diagonal
            ));
        }
        if !(self.background_permittivity.is_finite() && self.background_permittivity > 0.0) {
            return bad(format!(
                "background_permittivity must be positive, got {}",
                self.background_permittivity
            ));
        }
        Ok(())
    }
}
