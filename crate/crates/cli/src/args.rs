use std::path::PathBuf;

use cfpm::config::{ChannelPolicy, FrameFormat, RunConfig};
use cfpm::harness::Preset;
use cfpm::transfer::Dispersion;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "cfpm",
    version,
    about = "Simulate, reconstruct and colorize Fourier ptychographic captures"
)]
pub struct Cli {
    /// Run configuration (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic slide: ground truth, amplitudes and phase.
    Phantom {
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate capture stacks (one directory per channel plus the on-axis
    /// color donor).
    Capture {
        /// Phantom directory written by `phantom`; generated from the seed
        /// when omitted.
        #[arg(long)]
        phantom: Option<PathBuf>,
        /// Channels to capture.
        #[arg(long, value_delimiter = ',', default_values = ["r", "g", "b"])]
        channels: Vec<Channel>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a high-resolution amplitude from one capture stack.
    Reconstruct {
        #[arg(long)]
        stack: PathBuf,
        /// Amplitude output (.tiff or .png).
        #[arg(long)]
        out: PathBuf,
        /// Optional phase output (.tiff).
        #[arg(long)]
        phase_out: Option<PathBuf>,
    },
    /// Colorize an amplitude image from a color donor.
    Colorize {
        /// Low-resolution color image of the same field (PNG).
        #[arg(long)]
        donor: PathBuf,
        /// High-resolution amplitude (.tiff or .png).
        #[arg(long)]
        acceptor: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Treat the donor as an unaligned high-resolution tile.
        #[arg(long)]
        tile: bool,
    },
    /// Combine red, green and blue amplitudes into a color image.
    Synthesize {
        #[arg(long)]
        red: PathBuf,
        #[arg(long)]
        green: PathBuf,
        #[arg(long)]
        blue: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// RMSE between two color images.
    Evaluate {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Also write the metrics as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full comparison over every seed: metrics, summary and images.
    RunAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Channel {
    R,
    G,
    B,
}

impl Channel {
    pub fn index(self) -> usize {
        match self {
            Self::R => 0,
            Self::G => 1,
            Self::B => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    He,
    Trichrome,
    SiriusRed,
    Mixed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChannelArg {
    Best,
    R,
    G,
    B,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DispersionArg {
    Std,
    Variance,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Tiff,
    Png16,
}

/// Flags overriding configuration keys.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// First seed; with --samples the seeds are seed, seed+1, ...
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of samples (consecutive seeds).
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Concurrent samples (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Objective numerical aperture
    #[arg(long, global = true)]
    pub na: Option<f64>,
    /// Reconstruction sweeps
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    /// Gaussian read-noise standard deviation (0 = noiseless)
    #[arg(long, global = true)]
    pub noise_sigma: Option<f64>,
    /// Low-resolution frame size; the high-resolution size follows.
    #[arg(long, global = true)]
    pub lr_size: Option<usize>,
    /// Upsampling ratio; the high-resolution size follows.
    #[arg(long, global = true)]
    pub upsample: Option<usize>,
    /// Low-resolution pixel size at the sample, in micrometres
    #[arg(long, global = true)]
    pub lr_pixel_um: Option<f64>,
    /// Phantom stain preset
    #[arg(long, global = true)]
    pub preset: Option<PresetArg>,
    /// Channel colorized by the cfpm pipeline (best = lowest error)
    #[arg(long, global = true)]
    pub channel: Option<ChannelArg>,
    /// Side of the tile donor as a fraction of the field
    #[arg(long, global = true)]
    pub tile_fraction: Option<f64>,
    /// Odd neighbourhood window for the transfer statistic
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// Neighbourhood dispersion measure
    #[arg(long, global = true)]
    pub dispersion: Option<DispersionArg>,
    /// Donor subsampling stride
    #[arg(long, global = true)]
    pub subsample: Option<usize>,
    /// Output root for run-all
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// File format of captured frames
    #[arg(long, global = true)]
    pub frame_format: Option<FormatArg>,
    /// Ideal all-pass pupil (requires --upsample 1)
    #[arg(long, global = true)]
    pub all_pass: Option<bool>,
    /// Include wall-clock seconds in the metrics
    #[arg(long, global = true)]
    pub record_timing: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        match (self.seed, self.samples) {
            (Some(s), n) => cfg.seeds = (s..s + n.unwrap_or(1)).collect(),
            (None, Some(n)) => cfg.seeds = (1..=n).collect(),
            (None, None) => {}
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if let Some(v) = self.na {
            cfg.na = v;
        }
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = self.noise_sigma {
            cfg.noise_sigma = v;
        }
        if let Some(v) = self.lr_size {
            cfg.lr_size = v;
        }
        if let Some(v) = self.upsample {
            cfg.upsample = v;
        }
        if self.lr_size.is_some() || self.upsample.is_some() {
            cfg.hr_size = cfg.lr_size * cfg.upsample;
        }
        if let Some(v) = self.lr_pixel_um {
            cfg.lr_pixel_um = v;
        }
        if let Some(v) = self.preset {
            cfg.preset = match v {
                PresetArg::He => Preset::He,
                PresetArg::Trichrome => Preset::Trichrome,
                PresetArg::SiriusRed => Preset::SiriusRed,
                PresetArg::Mixed => Preset::Mixed,
            };
        }
        if let Some(v) = self.channel {
            cfg.channel = match v {
                ChannelArg::Best => ChannelPolicy::Best,
                ChannelArg::R => ChannelPolicy::R,
                ChannelArg::G => ChannelPolicy::G,
                ChannelArg::B => ChannelPolicy::B,
            };
        }
        if let Some(v) = self.tile_fraction {
            cfg.tile_fraction = v;
        }
        if let Some(v) = self.window {
            cfg.transfer.window = v;
        }
        if let Some(v) = self.dispersion {
            cfg.transfer.dispersion = match v {
                DispersionArg::Std => Dispersion::Std,
                DispersionArg::Variance => Dispersion::Variance,
            };
        }
        if let Some(v) = self.subsample {
            cfg.transfer.subsample = v;
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.frame_format {
            cfg.frame_format = match v {
                FormatArg::Tiff => FrameFormat::Tiff,
                FormatArg::Png16 => FrameFormat::Png16,
            };
        }
        if let Some(v) = self.all_pass {
            cfg.all_pass = v;
        }
        if let Some(v) = self.record_timing {
            cfg.record_timing = v;
        }
    }
}
