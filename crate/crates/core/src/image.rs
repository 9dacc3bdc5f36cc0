//! Raster containers shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Single-channel row-major raster.
///
/// The meaning of the samples (intensity, amplitude, Lab lightness, ...) is
/// fixed by whoever produced the image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image2D {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{}x{} image needs {} samples, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with coordinates clamped to the border (replicate padding).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::InvalidInput(format!(
                "crop {}x{}+{}+{} outside {}x{} image",
                width, height, x0, y0, self.width, self.height
            )));
        }
        Ok(Self::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y)))
    }

    /// Bicubic (Keys, a = -0.5) resampling with pixel-centre alignment and
    /// replicate borders.
    pub fn resize_bicubic(&self, width: usize, height: usize) -> Self {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let horizontal = resample_rows(self, width, Alignment::Centers);
        let transposed = transpose(&horizontal);
        transpose(&resample_rows(&transposed, height, Alignment::Centers))
    }

    /// Bicubic upsampling by an integer factor with sample-aligned grids:
    /// output pixel `x` samples input coordinate `x / factor`. This is the
    /// geometry of a low-resolution frame obtained by cropping a
    /// high-resolution spectrum.
    pub fn upsample_bicubic(&self, factor: usize) -> Self {
        if factor == 1 {
            return self.clone();
        }
        let horizontal = resample_rows(self, self.width * factor, Alignment::Samples);
        let transposed = transpose(&horizontal);
        transpose(&resample_rows(&transposed, self.height * factor, Alignment::Samples))
    }

    /// Separable Gaussian blur with replicate borders.
    pub fn gaussian_blur(&self, sigma_x: f64, sigma_y: f64) -> Self {
        let rows = blur_rows(self, sigma_x);
        transpose(&blur_rows(&transpose(&rows), sigma_y))
    }
}

fn transpose(img: &Image2D) -> Image2D {
    Image2D::from_fn(img.height, img.width, |x, y| img.get(y, x))
}

fn cubic_weight(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

#[derive(Clone, Copy)]
enum Alignment {
    Centers,
    Samples,
}

fn resample_rows(img: &Image2D, new_width: usize, align: Alignment) -> Image2D {
    let scale = img.width as f64 / new_width as f64;
    // Precompute the 4-tap kernel for each output column.
    let taps: Vec<(isize, [f64; 4])> = (0..new_width)
        .map(|x| {
            let src = match align {
                Alignment::Centers => (x as f64 + 0.5) * scale - 0.5,
                Alignment::Samples => x as f64 * scale,
            };
            let base = src.floor();
            let frac = src - base;
            let w = [
                cubic_weight(1.0 + frac),
                cubic_weight(frac),
                cubic_weight(1.0 - frac),
                cubic_weight(2.0 - frac),
            ];
            (base as isize - 1, w)
        })
        .collect();
    Image2D::from_fn(new_width, img.height, |x, y| {
        let (start, w) = taps[x];
        (0..4)
            .map(|k| w[k] * img.get_clamped(start + k as isize, y as isize))
            .sum()
    })
}

fn blur_rows(img: &Image2D, sigma: f64) -> Image2D {
    if sigma <= 0.0 {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    Image2D::from_fn(img.width, img.height, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, w)| w * img.get_clamped(x as isize + k as isize - radius, y as isize))
            .sum::<f64>()
            / norm
    })
}

/// Tag declaring how the three channels of a [`ColorImage`] are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorSpace {
    /// Display RGB, treated as linear light throughout.
    Srgb,
    /// Per-LED amplitudes in the FPM primaries.
    FpmRgb,
    Lab,
    Xyz,
}

/// Three-channel raster with a declared color space.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    space: ColorSpace,
    data: Vec<[f64; 3]>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, space: ColorSpace, data: Vec<[f64; 3]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{}x{} color image needs {} pixels, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            space,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, space: ColorSpace, value: [f64; 3]) -> Self {
        Self {
            width,
            height,
            space,
            data: vec![value; width * height],
        }
    }

    pub fn from_channels(channels: [&Image2D; 3], space: ColorSpace) -> Result<Self> {
        let dims = channels[0].dims();
        for c in &channels[1..] {
            if c.dims() != dims {
                return Err(Error::ShapeMismatch {
                    expected: dims,
                    actual: c.dims(),
                });
            }
        }
        let data = (0..channels[0].len())
            .map(|i| [channels[0].data()[i], channels[1].data()[i], channels[2].data()[i]])
            .collect();
        Self::new(dims.0, dims.1, space, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    pub fn channel(&self, c: usize) -> Image2D {
        Image2D {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|p| p[c]).collect(),
        }
    }

    pub fn channels(&self) -> [Image2D; 3] {
        [self.channel(0), self.channel(1), self.channel(2)]
    }

    /// Applies `f` to every pixel and retags the result.
    pub fn map_pixels(&self, space: ColorSpace, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        Self {
            width: self.width,
            height: self.height,
            space,
            data: self.data.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        let [a, b, c] = self.channels();
        Self::from_channels(
            [
                &a.crop(x0, y0, width, height)?,
                &b.crop(x0, y0, width, height)?,
                &c.crop(x0, y0, width, height)?,
            ],
            self.space,
        )
    }

    /// Channel-wise [`Image2D::upsample_bicubic`].
    pub fn upsample_bicubic(&self, factor: usize) -> Self {
        let [a, b, c] = self.channels();
        Self::from_channels(
            [
                &a.upsample_bicubic(factor),
                &b.upsample_bicubic(factor),
                &c.upsample_bicubic(factor),
            ],
            self.space,
        )
        .expect("channels share dimensions")
    }

    /// Channel-wise bicubic resampling; the space tag is kept.
    pub fn resize_bicubic(&self, width: usize, height: usize) -> Self {
        let [a, b, c] = self.channels();
        Self::from_channels(
            [
                &a.resize_bicubic(width, height),
                &b.resize_bicubic(width, height),
                &c.resize_bicubic(width, height),
            ],
            self.space,
        )
        .expect("channels share dimensions")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bicubic_identity_and_constant() {
        let img = Image2D::from_fn(7, 5, |x, y| (x * 3 + y) as f64 * 0.1);
        assert_eq!(img.resize_bicubic(7, 5), img);
        let flat = Image2D::filled(8, 8, 0.37);
        let up = flat.resize_bicubic(32, 32);
        for &v in up.data() {
            assert!((v - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn bicubic_reproduces_linear_ramp_in_interior() {
        // Keys' kernel reproduces polynomials up to degree 2 away from the border.
        let img = Image2D::from_fn(16, 4, |x, _| x as f64);
        let up = img.resize_bicubic(64, 4);
        for x in 8..56 {
            let src = (x as f64 + 0.5) / 4.0 - 0.5;
            assert!((up.get(x, 1) - src).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn sample_aligned_upsampling_hits_source_samples() {
        let img = Image2D::from_fn(6, 6, |x, y| ((x * 7 + y * 3) % 5) as f64);
        let up = img.upsample_bicubic(4);
        assert_eq!(up.dims(), (24, 24));
        for y in 0..6 {
            for x in 0..6 {
                assert!((up.get(4 * x, 4 * y) - img.get(x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn blur_preserves_constant_and_mass() {
        let flat = Image2D::filled(10, 10, 2.0);
        for &v in flat.gaussian_blur(1.5, 0.5).data() {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn size_mismatch_is_rejected() {
        assert!(Image2D::new(2, 2, vec![0.0; 3]).is_err());
        let a = Image2D::filled(2, 2, 0.0);
        let b = Image2D::filled(3, 2, 0.0);
        assert!(ColorImage::from_channels([&a, &a, &b], ColorSpace::Srgb).is_err());
    }
}
