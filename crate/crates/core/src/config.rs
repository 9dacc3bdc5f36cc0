//! Run configuration: one TOML file with full defaults, validated at load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fpm::{led_wavevectors, make_pupil, shift_px, LedGeometry};
use crate::harness::Preset;
use crate::transfer::TransferConfig;
use crate::{Error, Result};

/// Which reconstructed channel feeds the colorization pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelPolicy {
    /// Colorize from every channel and keep the lowest-error one.
    #[default]
    Best,
    R,
    G,
    B,
}

impl ChannelPolicy {
    pub fn pinned(self) -> Option<usize> {
        match self {
            Self::Best => None,
            Self::R => Some(0),
            Self::G => Some(1),
            Self::B => Some(2),
        }
    }
}

/// On-disk encoding of captured frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameFormat {
    /// 32-bit float TIFF.
    #[default]
    Tiff,
    /// 16-bit grayscale PNG.
    Png16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: LedGeometry,
    pub na: f64,
    /// Red, green and blue illumination wavelengths, um.
    pub wavelengths_um: [f64; 3],
    pub hr_size: usize,
    pub lr_size: usize,
    pub upsample: usize,
    /// Camera pixel size referred to the sample plane, um.
    pub lr_pixel_um: f64,
    pub iterations: usize,
    /// Standard deviation of additive intensity noise; 0 disables noise.
    pub noise_sigma: f64,
    pub seeds: Vec<u64>,
    pub preset: Preset,
    pub channel: ChannelPolicy,
    /// Side of the high-resolution donor tile as a fraction of the field.
    pub tile_fraction: f64,
    pub transfer: TransferConfig,
    pub output_dir: PathBuf,
    pub frame_format: FrameFormat,
    /// Samples processed concurrently; 0 uses every core.
    pub jobs: usize,
    /// Replace the objective pupil by an all-pass filter (no resolution
    /// limit, `upsample` must be 1). Used as a sanity ceiling.
    pub all_pass: bool,
    /// Put wall-clock seconds into the metrics records (makes them
    /// non-reproducible byte for byte).
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: LedGeometry::default(),
            na: 0.1,
            wavelengths_um: [0.6301, 0.5150, 0.4626],
            hr_size: 256,
            lr_size: 64,
            upsample: 4,
            lr_pixel_um: 1.625,
            iterations: 10,
            noise_sigma: 0.0,
            seeds: (1..=30).collect(),
            preset: Preset::He,
            channel: ChannelPolicy::Best,
            tile_fraction: 0.25,
            transfer: TransferConfig::default(),
            output_dir: PathBuf::from("out"),
            frame_format: FrameFormat::Tiff,
            jobs: 0,
            all_pass: false,
            record_timing: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    /// High-resolution pixel size, um.
    pub fn hr_pixel_um(&self) -> f64 {
        self.lr_pixel_um / self.upsample as f64
    }

    /// Spectrum sampling of the high-resolution grid, rad/um.
    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.hr_size as f64 * self.hr_pixel_um())
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.transfer.validate()?;
        if !(self.na > 0.0 && self.na < 1.0) {
            return Err(Error::Config(format!("NA must lie in (0, 1), got {}", self.na)));
        }
        if let Some(w) = self.wavelengths_um.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("wavelength must be positive, got {w}")));
        }
        if self.upsample == 0 || self.lr_size == 0 {
            return Err(Error::Config("sizes and upsampling ratio must be positive".into()));
        }
        if self.hr_size != self.lr_size * self.upsample {
            return Err(Error::Config(format!(
                "hr_size {} must equal lr_size {} x upsample {}",
                self.hr_size, self.lr_size, self.upsample
            )));
        }
        if self.hr_size < 64 {
            return Err(Error::Config(format!(
                "hr_size must be at least 64, got {}",
                self.hr_size
            )));
        }
        if self.all_pass && self.upsample != 1 {
            return Err(Error::Config("all_pass requires upsample = 1".into()));
        }
        if !(self.lr_pixel_um > 0.0 && self.lr_pixel_um.is_finite()) {
            return Err(Error::Config(format!(
                "pixel size must be positive, got {}",
                self.lr_pixel_um
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "noise sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("seed list has duplicates".into()));
        }
        let tile = (self.hr_size as f64 * self.tile_fraction).round() as usize;
        if !(self.tile_fraction > 0.0 && self.tile_fraction <= 1.0) || tile < self.transfer.window {
            return Err(Error::Config(format!(
                "tile_fraction must lie in (0, 1] and give a tile of at least {} pixels, got {}",
                self.transfer.window, self.tile_fraction
            )));
        }
        self.check_optics()
    }

    /// Every shifted pupil must fit inside the high-resolution band.
    fn check_optics(&self) -> Result<()> {
        if self.all_pass {
            return Ok(());
        }
        let half = (self.hr_size / 2) as i64;
        for &wavelength in &self.wavelengths_um {
            let pupil =
                make_pupil(self.na, wavelength, self.lr_size, self.dk()).map_err(|e| Error::Config(e.to_string()))?;
            let plan = led_wavevectors(&self.geometry, wavelength)?;
            let r = pupil.radius_px() as i64;
            for e in &plan.entries {
                let (sx, sy) = shift_px(e.k, self.dk());
                if sx.abs() + r > half || sy.abs() + r > half {
                    return Err(Error::Config(format!(
                        "LED ({}, {}) at {wavelength} um shifts the pupil off the {}-px spectrum; \
                         increase upsample or shrink the array",
                        e.row, e.col, self.hr_size
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn committed_defaults_match_builtin() {
        let text = include_str!("../../../config/default.toml");
        assert_eq!(RunConfig::from_toml_str(text).unwrap(), RunConfig::default());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml_str("na = 1.5").is_err());
        assert!(RunConfig::from_toml_str("hr_size = 128").is_err());
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
        assert!(RunConfig::from_toml_str("all_pass = true").is_err());
        assert!(RunConfig::from_toml_str("[transfer]\nwindow = 4").is_err());
        assert!(RunConfig::from_toml_str("seeds = []").is_err());
        assert!(RunConfig::from_toml_str("channel = \"g\"\nupsample = 4").is_ok());
    }
}
