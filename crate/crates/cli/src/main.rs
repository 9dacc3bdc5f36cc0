mod args;

use std::path::Path;
use std::process::ExitCode;

use cfpm::color_space::FpmDisplay;
use cfpm::config::RunConfig;
use cfpm::fpm::{reconstruct, ReconstructOptions};
use cfpm::harness::{
    capture_channel, color_rmse, generate_phantom, noise_seed, on_axis_amplitude, run_comparison_with, summarize,
    synthesize_with, Phantom, Preset, CHANNEL_NAMES,
};
use cfpm::io::{
    read_gray, read_json, read_png_rgb, sample_dir, save_stack, write_gray, write_json, write_metrics_csv,
    write_png_rgb, write_tiff_f32, BitDepth, StackManifest,
};
use cfpm::transfer::{cfpm_colorize, transfer_from_tile};
use cfpm::{Error, ErrorKind, Image2D, Result};
use clap::Parser;
use serde_json::json;

use crate::args::{Channel, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Io => 3,
                ErrorKind::Numerical => 4,
            })
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Phantom { out } => cmd_phantom(&cfg, out),
        Command::Capture { phantom, channels, out } => cmd_capture(&cfg, phantom.as_deref(), channels, out),
        Command::Reconstruct { stack, out, phase_out } => cmd_reconstruct(&cfg, stack, out, phase_out.as_deref()),
        Command::Colorize {
            donor,
            acceptor,
            out,
            tile,
        } => cmd_colorize(&cfg, donor, acceptor, out, *tile),
        Command::Synthesize { red, green, blue, out } => cmd_synthesize(red, green, blue, out),
        Command::Evaluate { image, reference, out } => cmd_evaluate(image, reference, out.as_deref()),
        Command::RunAll => cmd_run_all(&cfg),
    }
}

const PHANTOM_FILE: &str = "phantom.json";

fn cmd_phantom(cfg: &RunConfig, out: &Path) -> Result<()> {
    let seed = cfg.seeds[0];
    let phantom = generate_phantom(seed, cfg.hr_size, cfg.preset)?;
    write_png_rgb(&out.join("ground_truth.png"), &phantom.ground_truth, BitDepth::Sixteen)?;
    for (c, amp) in phantom.amplitudes.iter().enumerate() {
        write_tiff_f32(&out.join(format!("amplitude_{}.tiff", CHANNEL_NAMES[c])), amp)?;
    }
    write_tiff_f32(&out.join("phase.tiff"), &phantom.phase)?;
    write_json(
        &out.join(PHANTOM_FILE),
        &json!({ "seed": seed, "preset": phantom.preset, "size": cfg.hr_size }),
    )?;
    println!("phantom seed {seed} written to {}", out.display());
    Ok(())
}

fn load_phantom(dir: &Path) -> Result<Phantom> {
    let meta: serde_json::Value = read_json(&dir.join(PHANTOM_FILE))?;
    let seed = meta["seed"].as_u64().ok_or_else(|| Error::Format {
        path: dir.join(PHANTOM_FILE),
        message: "missing seed".into(),
    })?;
    let preset: Preset = serde_json::from_value(meta["preset"].clone()).map_err(|e| Error::Format {
        path: dir.join(PHANTOM_FILE),
        message: e.to_string(),
    })?;
    let amplitudes = [0, 1, 2].map(|c| read_gray(&dir.join(format!("amplitude_{}.tiff", CHANNEL_NAMES[c]))));
    let [r, g, b] = amplitudes;
    Ok(Phantom {
        seed,
        preset,
        ground_truth: read_png_rgb(&dir.join("ground_truth.png"))?,
        amplitudes: [r?, g?, b?],
        phase: read_gray(&dir.join("phase.tiff"))?,
    })
}

fn cmd_capture(cfg: &RunConfig, phantom_dir: Option<&Path>, channels: &[Channel], out: &Path) -> Result<()> {
    let phantom = match phantom_dir {
        Some(dir) => load_phantom(dir)?,
        None => generate_phantom(cfg.seeds[0], cfg.hr_size, cfg.preset)?,
    };
    if phantom.size() != cfg.hr_size {
        return Err(Error::Config(format!(
            "phantom is {} px but the configured high-resolution grid is {} px",
            phantom.size(),
            cfg.hr_size
        )));
    }
    let mut on_axis: [Option<Image2D>; 3] = [None, None, None];
    for ch in channels {
        let c = ch.index();
        let (stack, plan, _) = capture_channel(&phantom, cfg, c)?;
        let manifest = StackManifest {
            channel: CHANNEL_NAMES[c].to_string(),
            geometry: cfg.geometry,
            na: cfg.na,
            all_pass: cfg.all_pass,
            lr_size: cfg.lr_size,
            upsample: cfg.upsample,
            lr_pixel_um: cfg.lr_pixel_um,
            dk: cfg.dk(),
            scale: stack.scale,
            format: cfg.frame_format,
            phantom_seed: Some(phantom.seed),
            noise_sigma: cfg.noise_sigma,
            noise_seed: (cfg.noise_sigma > 0.0).then(|| noise_seed(phantom.seed, c)),
            plan,
            frames: Vec::new(),
        };
        let dir = out.join(CHANNEL_NAMES[c]);
        let written = save_stack(&dir, &stack, &manifest)?;
        println!("{} frames written to {}", written.frames.len(), dir.display());
        on_axis[c] = Some(on_axis_amplitude(&stack));
    }
    if let [Some(r), Some(g), Some(b)] = &on_axis {
        let donor = synthesize_with([r, g, b], &FpmDisplay::fpm_default())?;
        write_png_rgb(&out.join("donor.png"), &donor, BitDepth::Sixteen)?;
    }
    Ok(())
}

fn cmd_reconstruct(cfg: &RunConfig, stack_dir: &Path, out: &Path, phase_out: Option<&Path>) -> Result<()> {
    let (stack, manifest) = cfpm::io::load_stack(stack_dir)?;
    let pupil = manifest.pupil()?;
    let opts = ReconstructOptions {
        iterations: cfg.iterations,
        track_residual: false,
    };
    let rec = reconstruct(&stack, &manifest.plan, &pupil, manifest.upsample, opts)?;
    write_gray(out, &rec.field.amplitude())?;
    if let Some(p) = phase_out {
        write_tiff_f32(p, &rec.field.phase())?;
    }
    println!("reconstruction written to {}", out.display());
    Ok(())
}

fn cmd_colorize(cfg: &RunConfig, donor: &Path, acceptor: &Path, out: &Path, tile: bool) -> Result<()> {
    let donor = read_png_rgb(donor)?;
    let acceptor = read_gray(acceptor)?;
    let result = if tile {
        transfer_from_tile(&donor, &acceptor, &cfg.transfer)?
    } else {
        cfpm_colorize(&donor, &acceptor, &cfg.transfer)?
    };
    write_png_rgb(out, &result.srgb, BitDepth::Sixteen)?;
    println!(
        "colorized image written to {} ({} pixels gamut-clipped)",
        out.display(),
        result.clipped
    );
    Ok(())
}

fn cmd_synthesize(red: &Path, green: &Path, blue: &Path, out: &Path) -> Result<()> {
    let (r, g, b) = (read_gray(red)?, read_gray(green)?, read_gray(blue)?);
    let img = synthesize_with([&r, &g, &b], &FpmDisplay::fpm_default())?;
    write_png_rgb(out, &img, BitDepth::Sixteen)?;
    println!("color image written to {}", out.display());
    Ok(())
}

fn cmd_evaluate(image: &Path, reference: &Path, out: Option<&Path>) -> Result<()> {
    let err = color_rmse(&read_png_rgb(image)?, &read_png_rgb(reference)?)?;
    let value = json!({
        "rmse": err.mean,
        "rmse_r": err.channels[0],
        "rmse_g": err.channels[1],
        "rmse_b": err.channels[2],
    });
    if let Some(path) = out {
        write_json(path, &value)?;
    }
    println!("{value}");
    Ok(())
}

fn cmd_run_all(cfg: &RunConfig) -> Result<()> {
    let root = &cfg.output_dir;
    std::fs::create_dir_all(root).map_err(|e| Error::Io {
        path: root.clone(),
        source: e,
    })?;
    cfg.save(&root.join("config.toml"))?;
    let outcomes = run_comparison_with(cfg, |o| {
        let dir = sample_dir(root, o.seed);
        let im = &o.images;
        for (name, img) in [
            ("ground_truth", &im.ground_truth),
            ("donor", &im.donor),
            ("conventional", &im.conventional),
            ("cfpm", &im.cfpm),
            ("tile_transfer", &im.tile_transfer),
        ] {
            write_png_rgb(&dir.join(format!("{name}.png")), img, BitDepth::Sixteen)?;
        }
        Ok(())
    })?;
    let reports: Vec<_> = outcomes.iter().flat_map(|o| o.reports.iter().cloned()).collect();
    let timing: Vec<_> = outcomes
        .iter()
        .flat_map(|o| {
            o.timing
                .iter()
                .map(move |(p, s)| json!({ "sample_id": o.seed, "pipeline": p, "seconds": s }))
        })
        .collect();
    let summary = summarize(&reports);
    write_json(&root.join("metrics.json"), &reports)?;
    write_metrics_csv(&root.join("metrics.csv"), &reports)?;
    write_json(&root.join("summary.json"), &summary)?;
    write_json(&root.join("timing.json"), &timing)?;
    for (pipeline, mean) in &summary.mean_rmse {
        println!("{pipeline:>14}: mean RMSE {:.4}", mean);
    }
    println!(
        "{} samples, acquisition ratio {:.4}; results in {}",
        summary.samples,
        summary.acquisition_ratio,
        root.display()
    );
    Ok(())
}
