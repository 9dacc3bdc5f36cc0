//! Synthetic slides, the RMSE metric, conventional three-channel synthesis
//! and the runner comparing conventional, colorized and tile-donor
//! pipelines.

mod phantom;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color_space::{apply, gamut_clip_px, FpmDisplay, WhiteBalance, FPM_PRIMARIES};
use crate::config::RunConfig;
use crate::fpm::{
    led_wavevectors, make_pupil, reconstruct, simulate_stack, CaptureStack, IlluminationPlan, NoiseModel, Pupil,
    ReconstructOptions,
};
use crate::image::{ColorImage, ColorSpace, Image2D};
use crate::transfer::{cfpm_colorize, transfer_from_tile};
use crate::{Error, Result};

pub use self::phantom::{generate_phantom, Phantom, Preset};

pub const CHANNEL_NAMES: [&str; 3] = ["r", "g", "b"];

/// Root-mean-square difference of two equally sized images.
pub fn rmse(f: &Image2D, g: &Image2D) -> Result<f64> {
    if f.dims() != g.dims() {
        return Err(Error::ShapeMismatch {
            expected: f.dims(),
            actual: g.dims(),
        });
    }
    if f.is_empty() {
        return Err(Error::InvalidInput("RMSE of empty images".into()));
    }
    let sum: f64 = f.data().iter().zip(g.data()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((sum / f.len() as f64).sqrt())
}

/// Per-channel RMSE and their mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorRmse {
    pub mean: f64,
    pub channels: [f64; 3],
}

/// Color RMSE: the mean of the three per-channel RMSEs.
pub fn color_rmse(f: &ColorImage, g: &ColorImage) -> Result<ColorRmse> {
    if f.dims() != g.dims() {
        return Err(Error::ShapeMismatch {
            expected: f.dims(),
            actual: g.dims(),
        });
    }
    let mut channels = [0.0; 3];
    for (c, out) in channels.iter_mut().enumerate() {
        *out = rmse(&f.channel(c), &g.channel(c))?;
    }
    Ok(ColorRmse {
        mean: channels.iter().sum::<f64>() / 3.0,
        channels,
    })
}

/// Combines three amplitude images through an arbitrary display chain and
/// clips to the sRGB gamut.
pub fn synthesize_with(amps: [&Image2D; 3], display: &FpmDisplay) -> Result<ColorImage> {
    let m = display.to_srgb_matrix();
    let stacked = ColorImage::from_channels(amps, ColorSpace::FpmRgb)?;
    Ok(stacked.map_pixels(ColorSpace::Srgb, |p| gamut_clip_px(apply(&m, p))))
}

/// Conventional color synthesis of red, green and blue reconstructions:
/// white balance, LED primaries to XYZ, XYZ to sRGB, gamut clip.
pub fn synthesize_rgb_conventional(amps: [&Image2D; 3], wb: &WhiteBalance) -> Result<ColorImage> {
    synthesize_with(amps, &FpmDisplay::new(FPM_PRIMARIES, *wb))
}

/// Illumination plan and pupil for channel `c`.
pub fn channel_optics(cfg: &RunConfig, c: usize) -> Result<(IlluminationPlan, Pupil)> {
    let wavelength = cfg.wavelengths_um[c];
    let plan = led_wavevectors(&cfg.geometry, wavelength)?;
    let pupil = if cfg.all_pass {
        Pupil::all_pass(cfg.lr_size, cfg.dk())
    } else {
        make_pupil(cfg.na, wavelength, cfg.lr_size, cfg.dk())?
    };
    Ok((plan, pupil))
}

/// Noise seed for channel `c` of sample `seed`.
pub fn noise_seed(seed: u64, c: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ c as u64
}

/// Simulated capture of one phantom channel under the configured optics.
pub fn capture_channel(
    phantom: &Phantom,
    cfg: &RunConfig,
    c: usize,
) -> Result<(CaptureStack, IlluminationPlan, Pupil)> {
    let (plan, pupil) = channel_optics(cfg, c)?;
    let object = phantom.object(c, cfg.hr_pixel_um())?;
    let noise = (cfg.noise_sigma > 0.0).then(|| NoiseModel {
        sigma: cfg.noise_sigma,
        seed: noise_seed(phantom.seed, c),
    });
    let stack = simulate_stack(&object, &plan, &pupil, noise)?;
    Ok((stack, plan, pupil))
}

/// Amplitude of the frame taken under the most central LED.
pub fn on_axis_amplitude(stack: &CaptureStack) -> Image2D {
    stack.intensity(0).map(f64::sqrt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sample_id: u64,
    pub pipeline: String,
    pub rmse: f64,
    pub rmse_r: f64,
    pub rmse_g: f64,
    pub rmse_b: f64,
    /// Acquisition proxy: low-resolution frames captured.
    pub frames: usize,
    pub seconds: Option<f64>,
    /// Reconstructed channel used for colorization.
    pub channel: Option<String>,
}

impl MetricsReport {
    fn new(sample_id: u64, pipeline: &str, err: ColorRmse, frames: usize, channel: Option<usize>) -> Self {
        Self {
            sample_id,
            pipeline: pipeline.to_string(),
            rmse: err.mean,
            rmse_r: err.channels[0],
            rmse_g: err.channels[1],
            rmse_b: err.channels[2],
            frames,
            seconds: None,
            channel: channel.map(|c| CHANNEL_NAMES[c].to_string()),
        }
    }
}

/// Images produced for one sample.
#[derive(Debug, Clone)]
pub struct SampleImages {
    pub ground_truth: ColorImage,
    /// Low-resolution on-axis color composite used as donor.
    pub donor: ColorImage,
    pub conventional: ColorImage,
    pub cfpm: ColorImage,
    pub tile_transfer: ColorImage,
    /// Reconstructed amplitudes, red, green, blue.
    pub reconstructions: [Image2D; 3],
}

#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub seed: u64,
    pub reports: Vec<MetricsReport>,
    /// Wall-clock seconds per pipeline, in report order.
    pub timing: Vec<(String, f64)>,
    pub images: SampleImages,
}

/// Runs the three pipelines on the phantom for `seed`.
pub fn run_sample(seed: u64, cfg: &RunConfig) -> Result<SampleOutcome> {
    let phantom = generate_phantom(seed, cfg.hr_size, cfg.preset)?;
    let gt = &phantom.ground_truth;
    let display = FpmDisplay::fpm_default();
    let n_led = cfg.geometry.len();
    let opts = ReconstructOptions {
        iterations: cfg.iterations,
        track_residual: false,
    };

    let mut recon_seconds = [0.0; 3];
    let mut recs = Vec::with_capacity(3);
    let mut lr = Vec::with_capacity(3);
    for (c, secs) in recon_seconds.iter_mut().enumerate() {
        let (stack, plan, pupil) = capture_channel(&phantom, cfg, c)?;
        let t = Instant::now();
        let rec = reconstruct(&stack, &plan, &pupil, cfg.upsample, opts)?;
        recs.push(rec.field.amplitude());
        *secs = t.elapsed().as_secs_f64();
        lr.push(on_axis_amplitude(&stack));
    }
    let reconstructions: [Image2D; 3] = recs.try_into().expect("three channels");

    let t = Instant::now();
    let conventional = synthesize_with(
        [&reconstructions[0], &reconstructions[1], &reconstructions[2]],
        &display,
    )?;
    let conventional_seconds = recon_seconds.iter().sum::<f64>() + t.elapsed().as_secs_f64();
    let mut reports = vec![MetricsReport::new(
        seed,
        "conventional",
        color_rmse(&conventional, gt)?,
        3 * n_led,
        None,
    )];
    let mut timing = vec![("conventional".to_string(), conventional_seconds)];

    let donor = synthesize_with([&lr[0], &lr[1], &lr[2]], &display)?;
    let mut sweep = Vec::with_capacity(3);
    for (c, rec) in reconstructions.iter().enumerate() {
        let t = Instant::now();
        let out = cfpm_colorize(&donor, rec, &cfg.transfer)?;
        let secs = recon_seconds[c] + t.elapsed().as_secs_f64();
        sweep.push((color_rmse(&out.srgb, gt)?, out.srgb, secs));
    }
    let chosen = cfg
        .channel
        .pinned()
        .unwrap_or_else(|| (1..3).fold(0, |best, c| if sweep[c].0.mean < sweep[best].0.mean { c } else { best }));
    reports.push(MetricsReport::new(
        seed,
        "cfpm",
        sweep[chosen].0,
        n_led + 3,
        Some(chosen),
    ));
    timing.push(("cfpm".to_string(), sweep[chosen].2));
    for (c, (err, _, secs)) in sweep.iter().enumerate() {
        let name = format!("cfpm_{}", CHANNEL_NAMES[c]);
        reports.push(MetricsReport::new(seed, &name, *err, n_led + 3, Some(c)));
        timing.push((name, *secs));
    }

    let side = (cfg.hr_size as f64 * cfg.tile_fraction).round() as usize;
    let origin = (cfg.hr_size - side) / 2;
    let tile = gt.crop(origin, origin, side, side)?;
    let t = Instant::now();
    let tiled = transfer_from_tile(&tile, &reconstructions[chosen], &cfg.transfer)?;
    let tile_seconds = recon_seconds[chosen] + t.elapsed().as_secs_f64();
    reports.push(MetricsReport::new(
        seed,
        "tile_transfer",
        color_rmse(&tiled.srgb, gt)?,
        n_led + 1,
        Some(chosen),
    ));
    timing.push(("tile_transfer".to_string(), tile_seconds));

    if cfg.record_timing {
        for (report, (_, secs)) in reports.iter_mut().zip(&timing) {
            report.seconds = Some(*secs);
        }
    }
    let cfpm = sweep.swap_remove(chosen).1;
    Ok(SampleOutcome {
        seed,
        reports,
        timing,
        images: SampleImages {
            ground_truth: phantom.ground_truth,
            donor,
            conventional,
            cfpm,
            tile_transfer: tiled.srgb,
            reconstructions,
        },
    })
}

/// Aggregate view of a comparison run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub samples: usize,
    /// Mean RMSE per pipeline.
    pub mean_rmse: BTreeMap<String, f64>,
    /// Colorized over conventional frame count.
    pub acquisition_ratio: f64,
    /// How often each channel gave the lowest colorization error.
    pub best_channel_counts: BTreeMap<String, usize>,
    /// Wavelength-multiplexed FPM is not simulated.
    pub wmfpm: String,
}

pub fn summarize(reports: &[MetricsReport]) -> Summary {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in reports {
        let e = sums.entry(r.pipeline.clone()).or_insert((0.0, 0));
        e.0 += r.rmse;
        e.1 += 1;
    }
    let frames = |name: &str| reports.iter().find(|r| r.pipeline == name).map(|r| r.frames as f64);
    let acquisition_ratio = match (frames("cfpm"), frames("conventional")) {
        (Some(a), Some(b)) if b > 0.0 => a / b,
        _ => f64::NAN,
    };
    let mut best_channel_counts: BTreeMap<String, usize> = CHANNEL_NAMES.iter().map(|c| (c.to_string(), 0)).collect();
    let mut samples: Vec<u64> = reports.iter().map(|r| r.sample_id).collect();
    samples.sort_unstable();
    samples.dedup();
    for &id in &samples {
        let best = reports
            .iter()
            .filter(|r| r.sample_id == id && r.pipeline.starts_with("cfpm_"))
            .fold(None::<&MetricsReport>, |best, r| match best {
                Some(b) if b.rmse <= r.rmse => Some(b),
                _ => Some(r),
            });
        if let Some(ch) = best.and_then(|r| r.channel.clone()) {
            *best_channel_counts.entry(ch).or_default() += 1;
        }
    }
    Summary {
        samples: samples.len(),
        mean_rmse: sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
        acquisition_ratio,
        best_channel_counts,
        wmfpm: "not implemented".to_string(),
    }
}

/// Runs every configured seed, calling `sink` on each finished sample.
///
/// Samples run concurrently on `cfg.jobs` workers (all cores when 0); the
/// returned outcomes are ordered like `cfg.seeds` and are independent of the
/// worker count. The images are dropped after `sink` returns.
pub fn run_comparison_with<F>(cfg: &RunConfig, sink: F) -> Result<Vec<SampleOutcome>>
where
    F: Fn(&SampleOutcome) -> Result<()> + Sync,
{
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let outcome = run_sample(seed, cfg)?;
                log::info!(
                    "sample {seed}: conventional {:.4}, cfpm {:.4}, tile {:.4}",
                    outcome.reports[0].rmse,
                    outcome.reports[1].rmse,
                    outcome.reports.last().map_or(f64::NAN, |r| r.rmse)
                );
                sink(&outcome)?;
                Ok(outcome)
            })
            .collect()
    })
}

/// [`run_comparison_with`] without a sink; returns every report in seed
/// order.
pub fn run_comparison(cfg: &RunConfig) -> Result<Vec<MetricsReport>> {
    Ok(run_comparison_with(cfg, |_| Ok(()))?
        .into_iter()
        .flat_map(|o| o.reports)
        .collect())
}
