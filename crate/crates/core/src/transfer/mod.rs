//! Chroma transfer from a full-color donor to a grayscale acceptor.
//!
//! Both images are described per pixel by `R = 0.5 P + 0.5 D`, where `P` is
//! the Lab brightness and `D` its dispersion over a small window. Every
//! acceptor pixel keeps its own brightness and takes `(a, b)` from the donor
//! pixel with the closest `R`.

mod histogram;
mod matcher;
mod stats;

use serde::{Deserialize, Serialize};

use crate::color_space::{lab_to_srgb, srgb_to_lab};
use crate::image::{ColorImage, ColorSpace, Image2D};
use crate::{Error, Result};

pub use self::histogram::histogram_match;
pub use self::matcher::{assign_exhaustive, DonorIndex};
pub use self::stats::{neighborhood_stats, Dispersion, PixelStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferConfig {
    /// Side of the square statistics window (odd).
    pub window: usize,
    pub dispersion: Dispersion,
    /// Index every `subsample`-th donor pixel; 1 keeps all of them.
    pub subsample: usize,
    /// Amplitude percentiles (in percent) mapped onto the donor L range.
    pub percentiles: [f64; 2],
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            window: 5,
            dispersion: Dispersion::Std,
            subsample: 1,
            percentiles: [0.1, 99.9],
        }
    }
}

impl TransferConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "neighborhood size must be odd, got {}",
                self.window
            )));
        }
        if self.subsample == 0 {
            return Err(Error::Config("donor subsample stride must be positive".into()));
        }
        let [lo, hi] = self.percentiles;
        if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo >= hi {
            return Err(Error::Config(format!("invalid percentile pair [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Colorization result.
#[derive(Debug, Clone)]
pub struct Colorized {
    pub lab: ColorImage,
    /// Display image after gamut clipping.
    pub srgb: ColorImage,
    /// Pixels with at least one channel clipped.
    pub clipped: usize,
}

/// Assigns donor chroma to each acceptor pixel by nearest matching
/// statistic. The output L channel is `acceptor_l` unchanged.
pub fn transfer(donor: &ColorImage, acceptor_l: &Image2D, cfg: &TransferConfig) -> Result<ColorImage> {
    if donor.is_empty() {
        return Err(Error::EmptyDonor);
    }
    if donor.space() != ColorSpace::Lab {
        return Err(Error::InvalidInput(format!(
            "donor must be Lab, got {:?}",
            donor.space()
        )));
    }
    if acceptor_l.is_empty() {
        return Err(Error::InvalidInput("empty acceptor".into()));
    }
    if let Some(v) = acceptor_l.data().iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite acceptor brightness {v}")));
    }
    let donor_stats = neighborhood_stats(&donor.channel(0), cfg.window, cfg.dispersion)?;
    let acceptor_stats = neighborhood_stats(acceptor_l, cfg.window, cfg.dispersion)?;
    let index = DonorIndex::build(&donor_stats.statistic, cfg.subsample)?;
    let chosen = index.assign(&acceptor_stats.statistic);
    let px = donor.pixels();
    let data = acceptor_l
        .data()
        .iter()
        .zip(chosen)
        .map(|(&l, j)| [l, px[j][1], px[j][2]])
        .collect();
    ColorImage::new(acceptor_l.width(), acceptor_l.height(), ColorSpace::Lab, data)
}

/// Value at percentile `p` (0..=100), linearly interpolated.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Maps an amplitude image onto `[l_min, l_max]` after percentile
/// normalization, so a few hot pixels do not compress the useful range.
pub fn amplitude_to_l(amp: &Image2D, l_range: (f64, f64), percentiles: [f64; 2]) -> Result<Image2D> {
    if amp.is_empty() {
        return Err(Error::InvalidInput("empty acceptor".into()));
    }
    if let Some(v) = amp.data().iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite acceptor amplitude {v}")));
    }
    let mut sorted = amp.data().to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = percentile(&sorted, percentiles[0]);
    let hi = percentile(&sorted, percentiles[1]);
    let span = hi - lo;
    let (l_min, l_max) = l_range;
    Ok(amp.map(|a| {
        let t = if span > 0.0 {
            ((a - lo) / span).clamp(0.0, 1.0)
        } else {
            0.5
        };
        l_min + t * (l_max - l_min)
    }))
}

fn donor_to_lab(donor: &ColorImage) -> Result<ColorImage> {
    match donor.space() {
        ColorSpace::Srgb => Ok(srgb_to_lab(donor)),
        ColorSpace::Lab => Ok(donor.clone()),
        other => Err(Error::InvalidInput(format!("donor must be sRGB or Lab, got {other:?}"))),
    }
}

fn colorize_lab(donor_lab: &ColorImage, acceptor_amp: &Image2D, cfg: &TransferConfig) -> Result<Colorized> {
    cfg.validate()?;
    let donor_l = donor_lab.channel(0);
    let acceptor_l = amplitude_to_l(acceptor_amp, donor_l.min_max(), cfg.percentiles)?;
    let matched = histogram_match(&acceptor_l, &donor_l)?;
    let lab = transfer(donor_lab, &matched, cfg)?;
    let (srgb, clipped) = lab_to_srgb(&lab);
    if clipped > 0 {
        log::debug!("gamut clipping touched {clipped} of {} pixels", lab.len());
    }
    Ok(Colorized { lab, srgb, clipped })
}

/// Colorizes a high-resolution amplitude image from a low-resolution color
/// image of the same field of view.
///
/// The donor (sRGB or Lab) is bicubically upsampled to the acceptor grid.
/// An integer ratio uses sample-aligned interpolation, matching how
/// low-resolution frames sample the high-resolution grid.
pub fn cfpm_colorize(donor: &ColorImage, acceptor_amp: &Image2D, cfg: &TransferConfig) -> Result<Colorized> {
    if donor.is_empty() {
        return Err(Error::EmptyDonor);
    }
    let (dw, dh) = donor.dims();
    let (aw, ah) = acceptor_amp.dims();
    if aw * dh != ah * dw || aw < dw {
        return Err(Error::InvalidInput(format!(
            "donor {dw}x{dh} does not cover the acceptor {aw}x{ah} field of view"
        )));
    }
    let upsampled = if aw % dw == 0 {
        donor.upsample_bicubic(aw / dw)
    } else {
        donor.resize_bicubic(aw, ah)
    };
    colorize_lab(&donor_to_lab(&upsampled)?, acceptor_amp, cfg)
}

/// Colorizes a full field from a small high-resolution color tile. Only the
/// statistics are matched; the tile need not be spatially aligned.
pub fn transfer_from_tile(tile: &ColorImage, acceptor_amp: &Image2D, cfg: &TransferConfig) -> Result<Colorized> {
    if tile.is_empty() {
        return Err(Error::EmptyDonor);
    }
    colorize_lab(&donor_to_lab(tile)?, acceptor_amp, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab_image(w: usize, h: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> ColorImage {
        let data = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        ColorImage::new(w, h, ColorSpace::Lab, data).unwrap()
    }

    #[test]
    fn uniform_donor_chroma_everywhere() {
        let donor = lab_image(6, 6, |x, y| [(x + y) as f64 * 0.1, 0.3, -0.2]);
        let acc = Image2D::from_fn(8, 8, |x, y| (x * y) as f64 * 0.01);
        let out = transfer(&donor, &acc, &TransferConfig::default()).unwrap();
        for (p, &l) in out.pixels().iter().zip(acc.data()) {
            assert_eq!(*p, [l, 0.3, -0.2]);
        }
    }

    #[test]
    fn donor_must_be_lab() {
        let donor = ColorImage::filled(2, 2, ColorSpace::Srgb, [0.5; 3]);
        assert!(transfer(&donor, &Image2D::filled(2, 2, 0.0), &TransferConfig::default()).is_err());
    }

    #[test]
    fn fov_mismatch_rejected() {
        let donor = ColorImage::filled(4, 4, ColorSpace::Srgb, [0.5; 3]);
        let acc = Image2D::filled(16, 8, 0.5);
        assert!(cfpm_colorize(&donor, &acc, &TransferConfig::default()).is_err());
    }

    #[test]
    fn amplitude_mapping_hits_range() {
        let amp = Image2D::from_fn(10, 10, |x, y| (x + 10 * y) as f64);
        let l = amplitude_to_l(&amp, (-2.0, -1.0), [0.0, 100.0]).unwrap();
        assert_eq!(l.min_max(), (-2.0, -1.0));
        let flat = amplitude_to_l(&Image2D::filled(3, 3, 0.7), (0.0, 1.0), [0.1, 99.9]).unwrap();
        assert!(flat.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn config_validation() {
        assert!(TransferConfig::default().validate().is_ok());
        let bad = TransferConfig {
            window: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TransferConfig {
            percentiles: [50.0, 10.0],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
