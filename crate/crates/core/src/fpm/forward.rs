use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{CaptureStack, ComplexField, IlluminationPlan, Plane, Pupil};
use crate::fft::{freq_bin, Fft2};
use crate::image::Image2D;
use crate::{Error, Result};

/// Additive Gaussian noise on intensity, clipped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

/// Illumination shift rounded to the nearest spectrum bin.
pub fn shift_px(k: [f64; 2], dk: f64) -> (i64, i64) {
    ((k[0] / dk).round() as i64, (k[1] / dk).round() as i64)
}

/// Checks that `spectrum` and `pupil` describe compatible grids and returns
/// the high-resolution size.
pub(super) fn check_grids(spectrum: &ComplexField, pupil: &Pupil) -> Result<usize> {
    if spectrum.plane() != Plane::Frequency {
        return Err(Error::InvalidInput("object must be given as a spectrum".into()));
    }
    let big = spectrum.rows();
    let n = pupil.size();
    if spectrum.cols() != big || big < n || !big.is_multiple_of(n) {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            actual: (spectrum.cols(), spectrum.rows()),
        });
    }
    if ((spectrum.pixel_size() - pupil.dk()) / pupil.dk()).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "spectrum sampling {} differs from pupil sampling {}",
            spectrum.pixel_size(),
            pupil.dk()
        )));
    }
    Ok(big)
}

/// Fails if the pupil support shifted by `(sx, sy)` leaves the
/// high-resolution band. An all-pass pupil wraps, which is an exact tilt.
pub(super) fn check_shift(sx: i64, sy: i64, pupil: &Pupil, big: usize) -> Result<()> {
    if pupil.is_all_pass() {
        return Ok(());
    }
    let r = pupil.radius_px() as i64;
    let half = (big / 2) as i64;
    if sx.abs() + r > half || sy.abs() + r > half {
        return Err(Error::ShiftOffGrid {
            sx,
            sy,
            window: pupil.size(),
            grid: big,
        });
    }
    Ok(())
}

/// HR spectrum bin feeding LR bin `(fx, fy)` under shift `(sx, sy)`:
/// the camera sees `O(k - k_i)`.
#[inline]
pub(super) fn hr_bin(fx: i64, fy: i64, sx: i64, sy: i64, big: usize) -> usize {
    freq_bin(fy - sy, big) * big + freq_bin(fx - sx, big)
}

/// Pupil-filtered low-resolution spectrum for one illumination shift.
pub(super) fn sub_spectrum(
    spectrum: &[Complex64],
    support: &[(usize, i64, i64)],
    n: usize,
    big: usize,
    shift: (i64, i64),
) -> Vec<Complex64> {
    let scale = n as f64 / big as f64;
    let mut sub = vec![Complex64::new(0.0, 0.0); n * n];
    for &(bin, fx, fy) in support {
        sub[bin] = spectrum[hr_bin(fx, fy, shift.0, shift.1, big)] * scale;
    }
    sub
}

/// One low-resolution intensity image: `|IFFT(O(k - k_i) P(k))|^2`.
///
/// `spectrum` is the unitary high-resolution object spectrum; the frame has
/// the pupil's grid size.
pub fn simulate_capture(spectrum: &ComplexField, pupil: &Pupil, k: [f64; 2], fft_lr: &Fft2) -> Result<Image2D> {
    let big = check_grids(spectrum, pupil)?;
    let n = pupil.size();
    let shift = shift_px(k, pupil.dk());
    check_shift(shift.0, shift.1, pupil, big)?;
    let mut sub = sub_spectrum(spectrum.data(), &pupil.support(), n, big, shift);
    fft_lr.inverse(&mut sub);
    Image2D::new(n, n, sub.iter().map(|c| c.norm_sqr()).collect())
}

/// Full capture sequence for one wavelength: one frame per plan entry.
pub fn simulate_stack(
    object: &ComplexField,
    plan: &IlluminationPlan,
    pupil: &Pupil,
    noise: Option<NoiseModel>,
) -> Result<CaptureStack> {
    if object.plane() != Plane::Space {
        return Err(Error::InvalidInput("object must be given in the sample plane".into()));
    }
    let fft_hr = Fft2::new(object.rows(), object.cols());
    let spectrum = object.transformed(&fft_hr);
    let fft_lr = Fft2::square(pupil.size());
    let noise = match noise {
        Some(n) if n.sigma > 0.0 => Some((
            Normal::new(0.0, n.sigma).map_err(|e| Error::InvalidInput(e.to_string()))?,
            n.seed,
        )),
        _ => None,
    };
    let frames = plan
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut frame = simulate_capture(&spectrum, pupil, e.k, &fft_lr)?;
            if let Some((dist, seed)) = &noise {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(i as u64);
                for v in frame.data_mut() {
                    *v = (*v + dist.sample(&mut rng)).max(0.0);
                }
            }
            Ok(frame)
        })
        .collect::<Result<Vec<_>>>()?;
    CaptureStack::from_intensities(frames)
}
