use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::synthesize_with;
use crate::color_space::FpmDisplay;
use crate::fpm::ComplexField;
use crate::image::{ColorImage, Image2D};
use crate::{Error, Result};

/// Staining protocol imitated by the phantom: a nuclear stain plus a
/// counterstain on a fibrous background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Hematoxylin nuclei, eosin stroma.
    #[default]
    He,
    /// Dark nuclei, aniline-blue collagen.
    Trichrome,
    /// Dark nuclei, red collagen.
    SiriusRed,
    /// One of the above, chosen per seed.
    Mixed,
}

impl Preset {
    /// Absorbance per unit density in the (red, green, blue) channels for
    /// the nuclear stain and the counterstain.
    fn absorbance(self) -> ([f64; 3], [f64; 3]) {
        match self {
            Self::He | Self::Mixed => ([0.9, 1.1, 0.45], [0.15, 1.0, 0.35]),
            Self::Trichrome => ([1.0, 1.1, 0.7], [1.0, 0.6, 0.1]),
            Self::SiriusRed => ([0.8, 0.9, 0.5], [0.1, 1.1, 0.7]),
        }
    }

    fn resolve(self, seed: u64) -> Self {
        match self {
            Self::Mixed => [Self::He, Self::Trichrome, Self::SiriusRed][(seed % 3) as usize],
            other => other,
        }
    }
}

/// Synthetic stained slide.
///
/// Stain densities are turned into per-wavelength transmittance amplitudes
/// by Beer-Lambert attenuation; all three wavelengths share one smooth
/// phase map in `[0, pi/2]`. The ground-truth color image is the three
/// amplitudes shown through the FPM display chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub seed: u64,
    /// Preset actually used (never `Mixed`).
    pub preset: Preset,
    pub ground_truth: ColorImage,
    /// Red, green and blue amplitudes in `(0, 1]`.
    pub amplitudes: [Image2D; 3],
    pub phase: Image2D,
}

impl Phantom {
    pub fn size(&self) -> usize {
        self.phase.width()
    }

    /// Complex transmittance for channel `c` on a grid of `pixel_um`.
    pub fn object(&self, c: usize, pixel_um: f64) -> Result<ComplexField> {
        ComplexField::from_amplitude_phase(&self.amplitudes[c], &self.phase, pixel_um)
    }
}

fn normal_field(rng: &mut ChaCha8Rng, size: usize) -> Image2D {
    let data = (0..size * size).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Image2D::new(size, size, data).expect("square field")
}

/// Generates a deterministic phantom of `size` x `size` pixels.
pub fn generate_phantom(seed: u64, size: usize, preset: Preset) -> Result<Phantom> {
    if size < 64 {
        return Err(Error::InvalidInput(format!(
            "phantom size must be at least 64, got {size}"
        )));
    }
    let preset = preset.resolve(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = size as f64;

    // Nuclei: soft-edged ellipses of roughly constant stain density.
    let count = ((40.0 * (n / 256.0).powi(2)).round() as usize).max(1);
    let mut nuclei = Image2D::filled(size, size, 0.0);
    for _ in 0..count {
        let cx = rng.random_range(0.0..n);
        let cy = rng.random_range(0.0..n);
        let a = rng.random_range(4.0..9.0);
        let b = rng.random_range(4.0..9.0);
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        let density = rng.random_range(1.2..1.6);
        let (s, c) = theta.sin_cos();
        for (i, v) in nuclei.data_mut().iter_mut().enumerate() {
            let dx = (i % size) as f64 - cx;
            let dy = (i / size) as f64 - cy;
            let u = (dx * c + dy * s) / a;
            let w = (-dx * s + dy * c) / b;
            *v += density / (1.0 + ((u * u + w * w - 1.0) * 6.0).exp());
        }
    }

    // Fibrous counterstain: noise stretched along x, kept out of nuclei.
    let fibres = normal_field(&mut rng, size).gaussian_blur(6.0, 1.5);
    let mean = fibres.mean();
    let std = (fibres.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / fibres.len() as f64).sqrt();
    let counter = Image2D::from_fn(size, size, |x, y| {
        let f = (fibres.get(x, y) / std * 0.12 + 0.35).max(0.0);
        f * (0.8 + 0.2 * x as f64 / n) * (1.0 - nuclei.get(x, y).clamp(0.0, 1.0))
    });
    let nuclei = nuclei.gaussian_blur(1.0, 1.0);

    // Smooth height map shared by all wavelengths.
    let height = normal_field(&mut rng, size).gaussian_blur(8.0, 8.0);
    let (lo, hi) = height.min_max();
    let phase = height.map(|v| if hi > lo { (v - lo) / (hi - lo) * FRAC_PI_2 } else { 0.0 });

    let (nuc_abs, counter_abs) = preset.absorbance();
    let amplitudes = [0, 1, 2].map(|c| {
        Image2D::from_fn(size, size, |x, y| {
            (-(nuclei.get(x, y) * nuc_abs[c] + counter.get(x, y) * counter_abs[c])).exp()
        })
    });
    let ground_truth = synthesize_with(
        [&amplitudes[0], &amplitudes[1], &amplitudes[2]],
        &FpmDisplay::fpm_default(),
    )?;
    Ok(Phantom {
        seed,
        preset,
        ground_truth,
        amplitudes,
        phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = generate_phantom(3, 64, Preset::He).unwrap();
        assert_eq!(a, generate_phantom(3, 64, Preset::He).unwrap());
        let b = generate_phantom(4, 64, Preset::He).unwrap();
        let differing = a
            .ground_truth
            .pixels()
            .iter()
            .zip(b.ground_truth.pixels())
            .filter(|(p, q)| p != q)
            .count();
        assert!(differing * 10 > a.ground_truth.len());
    }

    #[test]
    fn ranges() {
        let p = generate_phantom(1, 64, Preset::Mixed).unwrap();
        assert_ne!(p.preset, Preset::Mixed);
        for a in &p.amplitudes {
            let (lo, hi) = a.min_max();
            assert!(lo > 0.0 && hi <= 1.0);
        }
        let (lo, hi) = p.phase.min_max();
        assert!(lo >= 0.0 && hi <= FRAC_PI_2 + 1e-12);
    }

    #[test]
    fn too_small_rejected() {
        assert!(generate_phantom(0, 32, Preset::He).is_err());
    }
}
