use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::pupil::Pupil;
use crate::{Error, Result};

/// Planar LED array above the sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedGeometry {
    pub rows: usize,
    pub cols: usize,
    pub pitch_mm: f64,
    pub height_mm: f64,
    /// Lateral offset of the array centre from the optical axis.
    #[serde(default)]
    pub center_offset_mm: [f64; 2],
}

impl Default for LedGeometry {
    fn default() -> Self {
        Self {
            rows: 15,
            cols: 15,
            pitch_mm: 4.0,
            height_mm: 70.0,
            center_offset_mm: [0.0, 0.0],
        }
    }
}

impl LedGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.pitch_mm > 0.0 && self.pitch_mm.is_finite()) {
            return Err(Error::Config(format!(
                "LED pitch must be positive, got {}",
                self.pitch_mm
            )));
        }
        if !(self.height_mm > 0.0 && self.height_mm.is_finite()) {
            return Err(Error::Config(format!(
                "LED height must be positive, got {}",
                self.height_mm
            )));
        }
        if self.rows.is_multiple_of(2) || self.cols.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "LED array must have odd dimensions, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lateral displacement (x, y) of LED `(row, col)` from the optical axis, mm.
    pub fn position_mm(&self, row: usize, col: usize) -> [f64; 2] {
        let cx = (self.cols - 1) as f64 / 2.0;
        let cy = (self.rows - 1) as f64 / 2.0;
        [
            (col as f64 - cx) * self.pitch_mm + self.center_offset_mm[0],
            (row as f64 - cy) * self.pitch_mm + self.center_offset_mm[1],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IlluminationEntry {
    /// Row-major index into the LED array.
    pub led: usize,
    pub row: usize,
    pub col: usize,
    /// Transverse wavevector `(kx, ky)`, rad/um.
    pub k: [f64; 2],
}

impl IlluminationEntry {
    pub fn k_norm(&self) -> f64 {
        self.k[0].hypot(self.k[1])
    }
}

/// Per-LED illumination wavevectors in scan order (centre outward).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlluminationPlan {
    pub wavelength_um: f64,
    pub entries: Vec<IlluminationEntry>,
}

impl IlluminationPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength_um
    }
}

/// Plane-wave transverse wavevectors of every LED, ordered by `|k|` with
/// ties broken by `(row, col)`.
pub fn led_wavevectors(geom: &LedGeometry, wavelength_um: f64) -> Result<IlluminationPlan> {
    geom.validate()?;
    if !(wavelength_um > 0.0 && wavelength_um.is_finite()) {
        return Err(Error::Config(format!(
            "wavelength must be positive, got {wavelength_um}"
        )));
    }
    let k0 = 2.0 * PI / wavelength_um;
    let mut entries = Vec::with_capacity(geom.len());
    for row in 0..geom.rows {
        for col in 0..geom.cols {
            let [dx, dy] = geom.position_mm(row, col);
            let dist = (dx * dx + dy * dy + geom.height_mm * geom.height_mm).sqrt();
            entries.push(IlluminationEntry {
                led: row * geom.cols + col,
                row,
                col,
                k: [k0 * dx / dist, k0 * dy / dist],
            });
        }
    }
    entries.sort_by(|a, b| {
        a.k_norm()
            .total_cmp(&b.k_norm())
            .then(a.row.cmp(&b.row))
            .then(a.col.cmp(&b.col))
    });
    Ok(IlluminationPlan { wavelength_um, entries })
}

/// Area fraction shared by two equal disks of `radius` whose centres are
/// `distance` apart.
pub fn disk_overlap_fraction(distance: f64, radius: f64) -> f64 {
    let d = distance.abs();
    if d >= 2.0 * radius {
        return 0.0;
    }
    let u = d / (2.0 * radius);
    (2.0 / PI) * (u.acos() - u * (1.0 - u * u).sqrt())
}

/// Fourier-domain overlap of pupils for grid-adjacent LEDs, taking the least
/// overlapping pair (the widest adjacent `|dk|`).
pub fn overlap_ratio(plan: &IlluminationPlan, pupil: &Pupil) -> Result<f64> {
    if plan.len() < 2 {
        return Err(Error::InvalidInput(
            "overlap needs at least two illumination angles".into(),
        ));
    }
    let mut by_pos = std::collections::HashMap::with_capacity(plan.len());
    for e in &plan.entries {
        by_pos.insert((e.row, e.col), e.k);
    }
    let mut worst: Option<f64> = None;
    for e in &plan.entries {
        for (nr, nc) in [(e.row + 1, e.col), (e.row, e.col + 1)] {
            if let Some(k) = by_pos.get(&(nr, nc)) {
                let dk = (k[0] - e.k[0]).hypot(k[1] - e.k[1]);
                let f = disk_overlap_fraction(dk, pupil.cutoff());
                worst = Some(worst.map_or(f, |w: f64| w.min(f)));
            }
        }
    }
    worst.ok_or_else(|| Error::InvalidInput("plan has no grid-adjacent LED pair".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_or_degenerate_arrays() {
        let g = LedGeometry {
            rows: 4,
            ..LedGeometry::default()
        };
        assert!(g.validate().is_err());
        let g = LedGeometry {
            pitch_mm: 0.0,
            ..LedGeometry::default()
        };
        assert!(g.validate().is_err());
        let g = LedGeometry {
            height_mm: -1.0,
            ..LedGeometry::default()
        };
        assert!(led_wavevectors(&g, 0.5).is_err());
    }

    #[test]
    fn disk_overlap_limits() {
        assert_eq!(disk_overlap_fraction(0.0, 1.0), 1.0);
        assert_eq!(disk_overlap_fraction(2.0, 1.0), 0.0);
        assert_eq!(disk_overlap_fraction(3.0, 1.0), 0.0);
        let half = disk_overlap_fraction(1.0, 1.0);
        assert!(half > 0.0 && half < 1.0);
    }

    #[test]
    fn plan_tie_break_is_row_major() {
        let plan = led_wavevectors(&LedGeometry::default(), 0.515).unwrap();
        // The four nearest neighbours share |k| exactly; order them by (row, col).
        let ring: Vec<(usize, usize)> = plan.entries[1..5].iter().map(|e| (e.row, e.col)).collect();
        assert_eq!(ring, vec![(6, 7), (7, 6), (7, 8), (8, 7)]);
    }

    #[test]
    fn single_led_plan_has_no_overlap() {
        let g = LedGeometry {
            rows: 1,
            cols: 1,
            ..LedGeometry::default()
        };
        let plan = led_wavevectors(&g, 0.5).unwrap();
        let pupil = crate::fpm::make_pupil(0.1, 0.5, 64, 0.06).unwrap();
        assert!(overlap_ratio(&plan, &pupil).is_err());
    }
}
