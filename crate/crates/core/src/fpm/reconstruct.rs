use num_complex::Complex64;
use rayon::prelude::*;

use super::forward::{check_grids, check_shift, hr_bin, shift_px, sub_spectrum};
use super::{overlap_ratio, CaptureStack, ComplexField, IlluminationPlan, Plane, Pupil};
use crate::fft::Fft2;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructOptions {
    /// Full sweeps over the plan. Zero returns the initial estimate.
    pub iterations: usize,
    /// Evaluate the data residual after every sweep (one extra forward pass
    /// per sweep).
    pub track_residual: bool,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            iterations: 10,
            track_residual: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// High-resolution complex field in the sample plane.
    pub field: ComplexField,
    /// `sum_i || sqrt(I_i) - |model_i| ||^2`, for the initial estimate and
    /// after each sweep; empty unless tracking was requested.
    pub residuals: Vec<f64>,
}

/// Alternating-projection spectrum stitching.
///
/// The estimate starts from the bicubic-upsampled on-axis amplitude with zero
/// phase, restricted to the union of shifted pupils. Each sweep visits the
/// plan in order, replaces the modulus of the modelled low-resolution field
/// by the measured one and writes the result back inside the pupil support.
pub fn reconstruct(
    stack: &CaptureStack,
    plan: &IlluminationPlan,
    pupil: &Pupil,
    upsample: usize,
    opts: ReconstructOptions,
) -> Result<Reconstruction> {
    let n = pupil.size();
    if stack.len() != plan.len() || stack.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} frames for {} illumination angles",
            stack.len(),
            plan.len()
        )));
    }
    if upsample == 0 {
        return Err(Error::InvalidInput("upsampling ratio must be positive".into()));
    }
    for f in &stack.frames {
        if f.dims() != (n, n) {
            return Err(Error::ShapeMismatch {
                expected: (n, n),
                actual: f.dims(),
            });
        }
    }
    if plan.len() >= 2 && !pupil.is_all_pass() {
        if let Ok(overlap) = overlap_ratio(plan, pupil) {
            if overlap < 0.35 {
                log::warn!("pupil overlap {overlap:.3} is below 0.35; reconstruction may not converge");
            }
        }
    }

    let big = n * upsample;
    let dk = pupil.dk();
    let shifts: Vec<(i64, i64)> = plan.entries.iter().map(|e| shift_px(e.k, dk)).collect();
    for &(sx, sy) in &shifts {
        check_shift(sx, sy, pupil, big)?;
    }
    let support = pupil.support();
    let amplitudes: Vec<Vec<f64>> = (0..stack.len())
        .map(|i| stack.intensity(i).data().iter().map(|v| v.sqrt()).collect())
        .collect();

    let fft_hr = Fft2::square(big);
    let fft_lr = Fft2::square(n);

    // Union of shifted pupils.
    let mut in_support = vec![false; big * big];
    for &(sx, sy) in &shifts {
        for &(_, fx, fy) in &support {
            in_support[hr_bin(fx, fy, sx, sy, big)] = true;
        }
    }

    let on_axis = stack.intensity(0).map(f64::sqrt).upsample_bicubic(upsample);
    let mut spectrum: Vec<Complex64> = on_axis.data().iter().map(|&a| Complex64::new(a, 0.0)).collect();
    fft_hr.forward(&mut spectrum);
    for (s, &keep) in spectrum.iter_mut().zip(&in_support) {
        if !keep {
            *s = Complex64::new(0.0, 0.0);
        }
    }

    let mut residuals = Vec::new();
    let residual_of = |spec: &[Complex64]| {
        shifts
            .par_iter()
            .zip(&amplitudes)
            .map(|(&shift, measured)| {
                let mut sub = sub_spectrum(spec, &support, n, big, shift);
                fft_lr.inverse(&mut sub);
                sub.iter()
                    .zip(measured)
                    .map(|(c, a)| (a - c.norm()).powi(2))
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
    };
    if opts.track_residual {
        residuals.push(residual_of(&spectrum));
    }

    let up = big as f64 / n as f64;
    for _ in 0..opts.iterations {
        for (&shift, measured) in shifts.iter().zip(&amplitudes) {
            let mut psi = sub_spectrum(&spectrum, &support, n, big, shift);
            fft_lr.inverse(&mut psi);
            for (c, &a) in psi.iter_mut().zip(measured) {
                let norm = c.norm();
                *c = if norm > 0.0 {
                    *c * (a / norm)
                } else {
                    Complex64::new(a, 0.0)
                };
            }
            fft_lr.forward(&mut psi);
            for &(bin, fx, fy) in &support {
                spectrum[hr_bin(fx, fy, shift.0, shift.1, big)] = psi[bin] * up;
            }
        }
        if spectrum.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numerical("reconstruction diverged".into()));
        }
        if opts.track_residual {
            residuals.push(residual_of(&spectrum));
        }
    }

    let spec_field = ComplexField::new(big, big, Plane::Frequency, dk, spectrum)?;
    Ok(Reconstruction {
        field: spec_field.transformed(&fft_hr),
        residuals,
    })
}

/// `sum_i || sqrt(I_i) - |model_i| ||^2` for a high-resolution sample-plane
/// field against a capture stack.
pub fn data_residual(
    field: &ComplexField,
    stack: &CaptureStack,
    plan: &IlluminationPlan,
    pupil: &Pupil,
) -> Result<f64> {
    if field.plane() != Plane::Space {
        return Err(Error::InvalidInput("residual needs a sample-plane field".into()));
    }
    let fft_hr = Fft2::new(field.rows(), field.cols());
    let spectrum = field.transformed(&fft_hr);
    let big = check_grids(&spectrum, pupil)?;
    let fft_lr = Fft2::square(pupil.size());
    let support = pupil.support();
    plan.entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let shift = shift_px(e.k, pupil.dk());
            check_shift(shift.0, shift.1, pupil, big)?;
            let mut sub = sub_spectrum(spectrum.data(), &support, pupil.size(), big, shift);
            fft_lr.inverse(&mut sub);
            let measured = stack.intensity(i);
            Ok(sub
                .iter()
                .zip(measured.data())
                .map(|(c, &m)| (m.sqrt() - c.norm()).powi(2))
                .sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()
        .map(|per_frame| per_frame.iter().sum())
}
