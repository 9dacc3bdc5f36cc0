use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::image::Image2D;
use crate::{Error, Result};

/// How brightness dispersion over the window is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    #[default]
    Std,
    Variance,
}

/// Per-pixel brightness `P`, window dispersion `D` and matching statistic
/// `R = 0.5 P + 0.5 D`.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelStats {
    pub width: usize,
    pub height: usize,
    pub brightness: Vec<f64>,
    pub dispersion: Vec<f64>,
    pub statistic: Vec<f64>,
}

/// Brightness statistics over a `window` x `window` neighbourhood with
/// replicate padding. `window` must be odd.
pub fn neighborhood_stats(l: &Image2D, window: usize, mode: Dispersion) -> Result<PixelStats> {
    if window.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "neighbourhood size must be odd, got {window}"
        )));
    }
    if l.is_empty() {
        return Err(Error::InvalidInput("empty image".into()));
    }
    let (w, h) = l.dims();
    let r = (window / 2) as isize;
    let count = (window * window) as f64;
    let rows: Vec<Vec<(f64, f64)>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let center = l.get(x, y);
                    // Moments about the centre value: exact zero on flat patches.
                    let (mut s1, mut s2) = (0.0, 0.0);
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let d = l.get_clamped(x as isize + dx, y as isize + dy) - center;
                            s1 += d;
                            s2 += d * d;
                        }
                    }
                    let mean = s1 / count;
                    let var = (s2 / count - mean * mean).max(0.0);
                    let disp = match mode {
                        Dispersion::Std => var.sqrt(),
                        Dispersion::Variance => var,
                    };
                    (center, disp)
                })
                .collect()
        })
        .collect();
    let n = w * h;
    let mut brightness = Vec::with_capacity(n);
    let mut dispersion = Vec::with_capacity(n);
    for (p, d) in rows.into_iter().flatten() {
        brightness.push(p);
        dispersion.push(d);
    }
    let statistic = brightness
        .iter()
        .zip(&dispersion)
        .map(|(p, d)| 0.5 * p + 0.5 * d)
        .collect();
    Ok(PixelStats {
        width: w,
        height: h,
        brightness,
        dispersion,
        statistic,
    })
}
