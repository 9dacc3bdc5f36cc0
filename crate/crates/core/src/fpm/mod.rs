//! Fourier ptychographic forward model and alternating-projection
//! reconstruction.
//!
//! Spectra are stored in natural FFT layout and transformed with the unitary
//! [`Fft2`](crate::fft::Fft2). A low-resolution frame of size `n` is produced
//! from an `N = n * upsample` high-resolution spectrum by cropping `n` bins
//! around the illumination shift, so the simulator and the reconstructor
//! share the same grid by construction.

mod forward;
mod geometry;
mod pupil;
mod reconstruct;

use num_complex::Complex64;

use crate::fft::Fft2;
use crate::image::Image2D;
use crate::{Error, Result};

pub use self::forward::{shift_px, simulate_capture, simulate_stack, NoiseModel};
pub use self::geometry::{
    disk_overlap_fraction, led_wavevectors, overlap_ratio, IlluminationEntry, IlluminationPlan, LedGeometry,
};
pub use self::pupil::{make_pupil, Pupil};
pub use self::reconstruct::{data_residual, reconstruct, ReconstructOptions, Reconstruction};

/// Which domain a [`ComplexField`] lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    /// Sample plane; `pixel_size` in um.
    Space,
    /// Spectrum in natural FFT layout; `pixel_size` in rad/um.
    Frequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    rows: usize,
    cols: usize,
    plane: Plane,
    pixel_size: f64,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(rows: usize, cols: usize, plane: Plane, pixel_size: f64, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{}x{} field needs {} samples, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numerical("complex field has non-finite samples".into()));
        }
        Ok(Self {
            rows,
            cols,
            plane,
            pixel_size,
            data,
        })
    }

    /// `amplitude * exp(i * phase)` in the sample plane.
    pub fn from_amplitude_phase(amplitude: &Image2D, phase: &Image2D, pixel_um: f64) -> Result<Self> {
        if amplitude.dims() != phase.dims() {
            return Err(Error::ShapeMismatch {
                expected: amplitude.dims(),
                actual: phase.dims(),
            });
        }
        let data = amplitude
            .data()
            .iter()
            .zip(phase.data())
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect();
        Self::new(amplitude.height(), amplitude.width(), Plane::Space, pixel_um, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn plane(&self) -> Plane {
        self.plane
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn amplitude(&self) -> Image2D {
        Image2D::new(self.cols, self.rows, self.data.iter().map(|c| c.norm()).collect())
            .expect("field dimensions are consistent")
    }

    pub fn phase(&self) -> Image2D {
        Image2D::new(self.cols, self.rows, self.data.iter().map(|c| c.arg()).collect())
            .expect("field dimensions are consistent")
    }

    /// Unitary transform to the other plane. Spectrum sampling is
    /// `2 pi / (n * dx)` (square grids assumed for the reverse direction).
    pub fn transformed(&self, fft: &Fft2) -> Self {
        let mut data = self.data.clone();
        let (plane, pixel_size) = match self.plane {
            Plane::Space => {
                fft.forward(&mut data);
                (
                    Plane::Frequency,
                    2.0 * std::f64::consts::PI / (self.cols as f64 * self.pixel_size),
                )
            }
            Plane::Frequency => {
                fft.inverse(&mut data);
                (
                    Plane::Space,
                    2.0 * std::f64::consts::PI / (self.cols as f64 * self.pixel_size),
                )
            }
        };
        Self {
            rows: self.rows,
            cols: self.cols,
            plane,
            pixel_size,
            data,
        }
    }
}

/// Low-resolution intensity frames aligned with an [`IlluminationPlan`].
///
/// Frames are exposure-normalized to `[0, 1]`; the physical intensity is
/// `frame * scale`. `scale` is a power of two so normalization is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureStack {
    pub frames: Vec<Image2D>,
    pub scale: f64,
}

impl CaptureStack {
    pub fn from_intensities(intensities: Vec<Image2D>) -> Result<Self> {
        let mut max = 0.0f64;
        for f in &intensities {
            for &v in f.data() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Numerical(format!("invalid intensity sample {v}")));
                }
                max = max.max(v);
            }
        }
        let scale = if max > 0.0 {
            2f64.powi(max.log2().ceil() as i32)
        } else {
            1.0
        };
        let frames = intensities.into_iter().map(|f| f.map(|v| v / scale)).collect();
        Ok(Self { frames, scale })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Physical intensity of frame `i`.
    pub fn intensity(&self, i: usize) -> Image2D {
        let s = self.scale;
        self.frames[i].map(|v| v * s)
    }
}
