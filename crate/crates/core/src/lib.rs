//! Color-transfer Fourier ptychographic microscopy.
//!
//! The crate simulates LED-array Fourier ptychographic capture of a synthetic
//! stained slide, reconstructs high-resolution amplitude images by
//! alternating projections, and colorizes a single-wavelength reconstruction
//! by transferring chroma from a low-resolution full-color capture. The
//! [`harness`] module compares that path against conventional three-channel
//! synthesis.
//!
//! Module map:
//!
//! * [`color_space`] - sRGB / log-LMS Lab conversions, LED chromaticity,
//!   white balance and the display transform.
//! * [`fpm`] - illumination geometry, pupil, forward model and reconstruction.
//! * [`transfer`] - neighborhood statistics, histogram matching and the
//!   nearest-statistic chroma assignment.
//! * [`harness`] - phantoms, RMSE, conventional synthesis and the comparison
//!   runner.
//! * [`config`] and [`io`] - run configuration and on-disk formats.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod color_space;
pub mod config;
mod error;
pub mod fft;
pub mod fpm;
pub mod harness;
pub mod image;
pub mod io;
pub mod transfer;

pub use crate::error::{Error, ErrorKind, Result};
pub use crate::image::{ColorImage, ColorSpace, Image2D};
