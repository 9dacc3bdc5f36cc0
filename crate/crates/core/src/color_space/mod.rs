//! Color mathematics for the FPM display chain and for color transfer.
//!
//! Two independent chains live here:
//!
//! * sRGB <-> Lab through the base-10 log of cone (LMS) responses, used by
//!   the color transfer. Pipeline images are linear light; no sRGB gamma is
//!   applied anywhere.
//! * LED spectrum -> CIE XYZ -> chromaticity, the white-balance solve for the
//!   LED primaries, and the XYZ -> sRGB display matrix used by conventional
//!   three-channel synthesis.

mod cmf;

use std::sync::LazyLock;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::image::{ColorImage, ColorSpace};
use crate::{Error, Result};

pub type Mat3 = Matrix3<f64>;

/// `m * v` on plain arrays.
#[inline]
pub fn apply(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    (m * Vector3::from(v)).into()
}

/// Inverse that rejects matrices whose determinant is negligible relative to
/// the entry scale.
pub fn invert(m: &Mat3) -> Result<Mat3> {
    let d = m.determinant();
    let scale = m.amax();
    if !d.is_finite() || d.abs() <= 1e-12 * scale.powi(3) {
        return Err(Error::SingularMatrix);
    }
    m.try_inverse().ok_or(Error::SingularMatrix)
}

/// Lower clamp applied to LMS responses before the logarithm.
pub const EPS_LOG: f64 = 1e-4;

/// Linear sRGB -> LMS cone responses.
#[rustfmt::skip]
pub const SRGB_TO_LMS: Mat3 = Matrix3::new(
    0.3811, 0.5783, 0.0402,
    0.1967, 0.7244, 0.0782,
    0.0241, 0.1228, 0.8444,
);

/// Unscaled opponent basis applied to log-LMS; rows are normalized in
/// [`LOG_LMS_TO_LAB`].
#[rustfmt::skip]
const OPPONENT_BASIS: Mat3 = Matrix3::new(
    1.0, 1.0, 1.0,
    1.0, 1.0, -2.0,
    1.0, -1.0, 0.0,
);

/// CIE RGB -> XYZ conversion for CIE-RGB-basis matching functions.
#[rustfmt::skip]
pub const CIE_RGB_TO_XYZ: Mat3 = Matrix3::new(
    2.7688, 1.7517, 1.1301,
    1.0000, 4.5906, 0.0601,
    0.0, 0.0565, 5.5942,
);

/// CIE D65 tristimulus values (Y = 1).
pub const D65_XYZ: [f64; 3] = [0.95047, 1.00000, 1.08883];

/// Chromaticities of the red, green and blue LEDs of the FPM illuminator.
pub const FPM_PRIMARIES: [Chromaticity; 3] = [
    Chromaticity::from_raw(0.6625, 0.2901, 0.0474),
    Chromaticity::from_raw(0.2410, 0.4521, 0.3069),
    Chromaticity::from_raw(0.1719, 0.0608, 0.7663),
];

/// sRGB (ITU-R BT.709) primaries.
pub const SRGB_PRIMARIES: [Chromaticity; 3] = [
    Chromaticity::from_raw(0.64, 0.33, 0.03),
    Chromaticity::from_raw(0.30, 0.60, 0.10),
    Chromaticity::from_raw(0.15, 0.06, 0.79),
];

/// Log-LMS -> Lab.
pub static LOG_LMS_TO_LAB: LazyLock<Mat3> = LazyLock::new(|| {
    let scale = [1.0 / 3f64.sqrt(), 1.0 / 6f64.sqrt(), 1.0 / 2f64.sqrt()];
    Mat3::from_diagonal(&Vector3::from(scale)) * OPPONENT_BASIS
});

static LAB_TO_LOG_LMS: LazyLock<Mat3> =
    LazyLock::new(|| invert(&LOG_LMS_TO_LAB).expect("opponent basis is invertible"));

pub static LMS_TO_SRGB: LazyLock<Mat3> = LazyLock::new(|| invert(&SRGB_TO_LMS).expect("cone matrix is invertible"));

static XYZ_TO_SRGB: LazyLock<Mat3> =
    LazyLock::new(|| invert(&srgb_to_xyz_matrix()).expect("sRGB primaries are independent"));

/// Projective color coordinates, `x + y + z = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chromaticity {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Chromaticity {
    const fn from_raw(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Per-primary scale factors that make the primaries sum to the white point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteBalance(pub [f64; 3]);

/// Gaussian LED emission line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedSpectrum {
    center_nm: f64,
    fwhm_nm: f64,
}

impl LedSpectrum {
    pub fn new(center_nm: f64, fwhm_nm: f64) -> Result<Self> {
        if !(380.0..=780.0).contains(&center_nm) {
            return Err(Error::InvalidInput(format!(
                "LED centre {center_nm} nm outside 380-780 nm"
            )));
        }
        if !(fwhm_nm > 0.0 && fwhm_nm.is_finite()) {
            return Err(Error::InvalidInput(format!("FWHM must be positive, got {fwhm_nm}")));
        }
        Ok(Self { center_nm, fwhm_nm })
    }

    pub fn red() -> Self {
        Self::new(630.1, 20.8).unwrap()
    }

    pub fn green() -> Self {
        Self::new(515.0, 38.0).unwrap()
    }

    pub fn blue() -> Self {
        Self::new(462.6, 34.6).unwrap()
    }

    pub fn center_nm(&self) -> f64 {
        self.center_nm
    }

    pub fn fwhm_nm(&self) -> f64 {
        self.fwhm_nm
    }

    fn sigma_nm(&self) -> f64 {
        self.fwhm_nm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
    }

    /// Relative spectral power, peak 1.
    pub fn power(&self, wavelength_nm: f64) -> f64 {
        let t = (wavelength_nm - self.center_nm) / self.sigma_nm();
        (-0.5 * t * t).exp()
    }
}

/// Which primaries the tabulated matching functions are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmfBasis {
    Xyz,
    CieRgb,
}

/// Colour matching functions sampled on a uniform wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CmfTable {
    start_nm: f64,
    step_nm: f64,
    values: Vec<[f64; 3]>,
    basis: CmfBasis,
}

impl CmfTable {
    pub fn new(start_nm: f64, step_nm: f64, values: Vec<[f64; 3]>, basis: CmfBasis) -> Result<Self> {
        if !(step_nm > 0.0) || values.len() < 2 {
            return Err(Error::InvalidInput(
                "CMF table needs a positive step and at least two samples".into(),
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("CMF table has non-finite samples".into()));
        }
        Ok(Self {
            start_nm,
            step_nm,
            values,
            basis,
        })
    }

    /// CIE 1931 2-degree observer, 380-780 nm at 5 nm.
    pub fn cie1931() -> Self {
        Self {
            start_nm: cmf::CIE1931_START_NM,
            step_nm: cmf::CIE1931_STEP_NM,
            values: cmf::CIE1931_XYZ.to_vec(),
            basis: CmfBasis::Xyz,
        }
    }

    pub fn start_nm(&self) -> f64 {
        self.start_nm
    }

    pub fn end_nm(&self) -> f64 {
        self.start_nm + self.step_nm * (self.values.len() - 1) as f64
    }

    pub fn step_nm(&self) -> f64 {
        self.step_nm
    }

    pub fn wavelengths(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.start_nm + self.step_nm * i as f64)
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    /// Tabulated XYZ at a grid wavelength, if present.
    pub fn at(&self, wavelength_nm: f64) -> Option<[f64; 3]> {
        let idx = (wavelength_nm - self.start_nm) / self.step_nm;
        let i = idx.round();
        if (idx - i).abs() > 1e-9 || i < 0.0 || i as usize >= self.values.len() {
            return None;
        }
        let v = self.values[i as usize];
        Some(match self.basis {
            CmfBasis::Xyz => v,
            CmfBasis::CieRgb => apply(&CIE_RGB_TO_XYZ, v),
        })
    }
}

/// Tristimulus values of an LED line: trapezoidal integration of spectrum
/// times matching functions over the table grid.
pub fn spectrum_to_xyz(spec: &LedSpectrum, cmf: &CmfTable) -> Result<[f64; 3]> {
    let h = cmf.step_nm;
    let n = cmf.values.len();
    let mut acc = [0.0; 3];
    let mut weight = 0.0;
    for (i, (lambda, v)) in cmf.wavelengths().zip(&cmf.values).enumerate() {
        let end = i == 0 || i == n - 1;
        let w = spec.power(lambda) * if end { 0.5 * h } else { h };
        weight += w;
        for c in 0..3 {
            acc[c] += w * v[c];
        }
    }
    // Total analytic area of the line is sigma * sqrt(2 pi).
    let area = spec.sigma_nm() * (2.0 * std::f64::consts::PI).sqrt();
    if weight <= 1e-9 * area {
        return Err(Error::SpectrumOutsideGrid {
            center_nm: spec.center_nm,
            start_nm: cmf.start_nm,
            end_nm: cmf.end_nm(),
        });
    }
    Ok(match cmf.basis {
        CmfBasis::Xyz => acc,
        CmfBasis::CieRgb => apply(&CIE_RGB_TO_XYZ, acc),
    })
}

pub fn chromaticity(xyz: [f64; 3]) -> Result<Chromaticity> {
    let sum = xyz[0] + xyz[1] + xyz[2];
    if sum == 0.0 || !sum.is_finite() {
        return Err(Error::ZeroTristimulus);
    }
    Ok(Chromaticity {
        x: xyz[0] / sum,
        y: xyz[1] / sum,
        z: xyz[2] / sum,
    })
}

/// Matrix whose columns are the three primaries' chromaticities.
pub fn primaries_matrix(primaries: &[Chromaticity; 3]) -> Mat3 {
    Mat3::from_columns(&primaries.map(|p| Vector3::from(p.as_array())))
}

/// Solves `primaries_matrix * gamma = white`.
pub fn white_balance_coeffs(primaries: &[Chromaticity; 3], white: [f64; 3]) -> Result<WhiteBalance> {
    let m = primaries_matrix(primaries);
    let inv = invert(&m)?;
    Ok(WhiteBalance(apply(&inv, white)))
}

/// sRGB -> XYZ: sRGB primaries scaled by their D65 white balance.
pub fn srgb_to_xyz_matrix() -> Mat3 {
    let gamma = white_balance_coeffs(&SRGB_PRIMARIES, D65_XYZ).expect("sRGB primaries are independent");
    primaries_matrix(&SRGB_PRIMARIES) * Mat3::from_diagonal(&Vector3::from(gamma.0))
}

/// XYZ -> sRGB display matrix (inverse of [`srgb_to_xyz_matrix`]).
pub fn xyz_to_srgb_matrix() -> Mat3 {
    *XYZ_TO_SRGB
}

pub fn srgb_to_lab_px(rgb: [f64; 3]) -> [f64; 3] {
    let lms = apply(&SRGB_TO_LMS, rgb);
    let log = lms.map(|v| v.max(EPS_LOG).log10());
    apply(&LOG_LMS_TO_LAB, log)
}

/// Inverse of [`srgb_to_lab_px`] without clipping.
pub fn lab_to_srgb_px_unclipped(lab: [f64; 3]) -> [f64; 3] {
    let log = apply(&LAB_TO_LOG_LMS, lab);
    let lms = log.map(|v| 10f64.powf(v));
    apply(&LMS_TO_SRGB, lms)
}

#[inline]
pub fn gamut_clip_px(rgb: [f64; 3]) -> [f64; 3] {
    rgb.map(|v| v.clamp(0.0, 1.0))
}

pub fn srgb_to_lab(img: &ColorImage) -> ColorImage {
    img.map_pixels(ColorSpace::Lab, srgb_to_lab_px)
}

/// Lab -> sRGB with clipping; also returns how many pixels needed clipping.
pub fn lab_to_srgb(img: &ColorImage) -> (ColorImage, usize) {
    let mut clipped = 0;
    let data = img
        .pixels()
        .iter()
        .map(|&p| {
            let rgb = lab_to_srgb_px_unclipped(p);
            let c = gamut_clip_px(rgb);
            if c != rgb {
                clipped += 1;
            }
            c
        })
        .collect();
    let out = ColorImage::new(img.width(), img.height(), ColorSpace::Srgb, data).expect("same dimensions as input");
    (out, clipped)
}

pub fn gamut_clip(img: &ColorImage) -> ColorImage {
    img.map_pixels(ColorSpace::Srgb, gamut_clip_px)
}

/// Display chain of an FPM system: white-balanced primaries to XYZ, then
/// XYZ to sRGB.
#[derive(Debug, Clone, PartialEq)]
pub struct FpmDisplay {
    pub primaries: [Chromaticity; 3],
    pub white_balance: WhiteBalance,
    pub xyz_to_srgb: Mat3,
}

impl FpmDisplay {
    pub fn new(primaries: [Chromaticity; 3], white_balance: WhiteBalance) -> Self {
        Self {
            primaries,
            white_balance,
            xyz_to_srgb: xyz_to_srgb_matrix(),
        }
    }

    /// The LED primaries balanced to D65.
    pub fn fpm_default() -> Self {
        let wb = white_balance_coeffs(&FPM_PRIMARIES, D65_XYZ).expect("FPM primaries are independent");
        Self::new(FPM_PRIMARIES, wb)
    }

    /// Combined channel-amplitude -> linear sRGB matrix (before clipping).
    pub fn to_srgb_matrix(&self) -> Mat3 {
        let to_xyz = primaries_matrix(&self.primaries) * Mat3::from_diagonal(&Vector3::from(self.white_balance.0));
        self.xyz_to_srgb * to_xyz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chromaticity_examples() {
        let c = chromaticity([1.0, 1.0, 1.0]).unwrap();
        for v in c.as_array() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let c = chromaticity([2.0, 1.0, 1.0]).unwrap();
        assert_eq!(c.as_array(), [0.5, 0.25, 0.25]);
        let c = chromaticity(D65_XYZ).unwrap();
        assert!((c.x + c.y + c.z - 1.0).abs() < 1e-15);
        assert!(matches!(chromaticity([0.0; 3]), Err(Error::ZeroTristimulus)));
    }

    #[test]
    fn identity_white_balance() {
        let id = [
            Chromaticity::from_raw(1.0, 0.0, 0.0),
            Chromaticity::from_raw(0.0, 1.0, 0.0),
            Chromaticity::from_raw(0.0, 0.0, 1.0),
        ];
        let wb = white_balance_coeffs(&id, [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(wb.0, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn singular_primaries_rejected() {
        let p = Chromaticity::from_raw(0.3, 0.3, 0.4);
        assert!(matches!(
            white_balance_coeffs(&[p, p, SRGB_PRIMARIES[2]], D65_XYZ),
            Err(Error::SingularMatrix)
        ));
    }

    #[test]
    fn display_matrix_inverse_contract() {
        let t = srgb_to_xyz_matrix();
        let prod = t * xyz_to_srgb_matrix();
        assert!((prod - Mat3::identity()).amax() < 1e-10);
        // T maps sRGB white onto D65.
        let white = apply(&t, [1.0; 3]);
        for (a, b) in white.iter().zip(D65_XYZ) {
            assert!((a - b).abs() < 1e-2);
        }
    }

    #[test]
    fn gamut_clip_rule() {
        assert_eq!(gamut_clip_px([-0.1, 0.5, 1.2]), [0.0, 0.5, 1.0]);
        assert_eq!(gamut_clip_px([0.2, 0.0, 1.0]), [0.2, 0.0, 1.0]);
    }

    #[test]
    fn lab_of_zero_maps_to_unit_lms() {
        let rgb = lab_to_srgb_px_unclipped([0.0; 3]);
        let lms = apply(&SRGB_TO_LMS, rgb);
        for v in lms {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lab_clip_count() {
        let img = ColorImage::new(
            2,
            1,
            ColorSpace::Lab,
            vec![[0.0, 0.0, 0.0], srgb_to_lab_px([0.2, 0.7, 0.4])],
        )
        .unwrap();
        let (rgb, clipped) = lab_to_srgb(&img);
        // Lab origin is LMS (1,1,1), slightly above 1 in sRGB blue.
        assert_eq!(clipped, 1);
        assert_eq!(rgb.get(0, 0)[2], 1.0);
        assert_eq!(rgb.space(), ColorSpace::Srgb);
    }

    #[test]
    fn led_spectrum_validation() {
        assert!(LedSpectrum::new(300.0, 10.0).is_err());
        assert!(LedSpectrum::new(500.0, 0.0).is_err());
        assert!(LedSpectrum::new(500.0, 10.0).is_ok());
    }

    #[test]
    fn spectrum_outside_grid() {
        let cmf = CmfTable::new(380.0, 5.0, vec![[1.0, 1.0, 1.0]; 9], CmfBasis::Xyz).unwrap();
        let far = LedSpectrum::new(700.0, 5.0).unwrap();
        assert!(matches!(
            spectrum_to_xyz(&far, &cmf),
            Err(Error::SpectrumOutsideGrid { .. })
        ));
    }

    #[test]
    fn cie_rgb_basis_applies_conversion() {
        let cmf = CmfTable::new(500.0, 5.0, vec![[1.0, 0.0, 0.0]; 3], CmfBasis::CieRgb).unwrap();
        let xyz = spectrum_to_xyz(&LedSpectrum::new(505.0, 3.0).unwrap(), &cmf).unwrap();
        let r = xyz[0] / CIE_RGB_TO_XYZ[(0, 0)];
        assert!((xyz[1] - r * CIE_RGB_TO_XYZ[(1, 0)]).abs() < 1e-12);
        assert!(xyz[2].abs() < 1e-12);
    }
}
