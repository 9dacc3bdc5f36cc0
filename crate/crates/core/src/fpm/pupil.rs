use std::f64::consts::PI;

use crate::fft::signed_freq;
use crate::{Error, Result};

/// Binary, aberration-free pupil on an `n`-by-`n` spectrum grid in natural
/// FFT layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Pupil {
    size: usize,
    dk: f64,
    cutoff: f64,
    na: f64,
    mask: Vec<f64>,
    all_pass: bool,
}

impl Pupil {
    /// Pupil passing every frequency of the grid ("perfect optics").
    pub fn all_pass(size: usize, dk: f64) -> Self {
        Self {
            size,
            dk,
            cutoff: f64::INFINITY,
            na: 1.0,
            mask: vec![1.0; size * size],
            all_pass: true,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Spectrum sampling, rad/um per pixel.
    pub fn dk(&self) -> f64 {
        self.dk
    }

    /// `NA * 2 pi / lambda`, rad/um.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn na(&self) -> f64 {
        self.na
    }

    pub fn is_all_pass(&self) -> bool {
        self.all_pass
    }

    pub fn mask(&self) -> &[f64] {
        &self.mask
    }

    /// Bins inside the support, as `(bin index, fx, fy)`.
    pub fn support(&self) -> Vec<(usize, i64, i64)> {
        let n = self.size;
        let mut out = Vec::new();
        for v in 0..n {
            for u in 0..n {
                if self.mask[v * n + u] != 0.0 {
                    out.push((v * n + u, signed_freq(u, n), signed_freq(v, n)));
                }
            }
        }
        out
    }

    /// Radius of the support in pixels, rounded up.
    pub fn radius_px(&self) -> usize {
        if self.all_pass {
            self.size / 2
        } else {
            (self.cutoff / self.dk).ceil() as usize
        }
    }
}

/// Disk pupil of radius `na * 2 pi / wavelength` on a `size`-pixel grid with
/// spacing `dk` rad/um.
pub fn make_pupil(na: f64, wavelength_um: f64, size: usize, dk: f64) -> Result<Pupil> {
    if !(na > 0.0 && na < 1.0) {
        return Err(Error::InvalidInput(format!("NA must lie in (0, 1), got {na}")));
    }
    if !(wavelength_um > 0.0) || !(dk > 0.0) || size == 0 {
        return Err(Error::InvalidInput(
            "pupil needs positive wavelength, spacing and size".into(),
        ));
    }
    let cutoff = na * 2.0 * PI / wavelength_um;
    let nyquist = (size / 2) as f64 * dk;
    if cutoff > nyquist {
        return Err(Error::CutoffExceedsNyquist { cutoff, nyquist });
    }
    let mut mask = vec![0.0; size * size];
    for v in 0..size {
        let ky = signed_freq(v, size) as f64 * dk;
        for u in 0..size {
            let kx = signed_freq(u, size) as f64 * dk;
            if kx.hypot(ky) <= cutoff {
                mask[v * size + u] = 1.0;
            }
        }
    }
    Ok(Pupil {
        size,
        dk,
        cutoff,
        na,
        mask,
        all_pass: false,
    })
}
