use std::path::Path;
use std::process::{Command, Output};

use cfpm::config::RunConfig;

fn cfpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfpm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = cfpm(args);
    assert!(
        out.status.success(),
        "cfpm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn capture_writes_full_stack_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["capture", "--channels", "g", "--out", p(dir.path())]);
    let stack = dir.path().join("g");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(stack.join("manifest.json")).unwrap()).unwrap();
    let frames = manifest["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 225);
    assert_eq!(manifest["plan"]["entries"].as_array().unwrap().len(), 225);
    assert_eq!(manifest["phantom_seed"], 1);
    for f in frames {
        assert!(stack.join(f.as_str().unwrap()).is_file());
    }
    assert!(!dir.path().join("donor.png").exists());
}

#[test]
fn run_all_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&[
            "run-all",
            "--seed",
            "7",
            "--samples",
            "2",
            "--lr-size",
            "16",
            "--output-dir",
            p(out),
        ]);
    }
    for file in ["metrics.json", "metrics.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    assert!(a.join("sample_0008").join("cfpm.png").is_file());
    let effective = RunConfig::load(&a.join("config.toml")).unwrap();
    assert_eq!(effective.seeds, vec![7, 8]);
    assert_eq!(effective.hr_size, 64);
    let rerun = dir.path().join("c");
    ok(&[
        "--config",
        p(&a.join("config.toml")),
        "run-all",
        "--output-dir",
        p(&rerun),
    ]);
    assert_eq!(
        std::fs::read(a.join("metrics.json")).unwrap(),
        std::fs::read(rerun.join("metrics.json")).unwrap()
    );
}

#[test]
fn staged_all_pass_pipeline_reproduces_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let common = [
        "--all-pass",
        "true",
        "--upsample",
        "1",
        "--lr-size",
        "64",
        "--seed",
        "5",
    ];
    let with = |extra: &[&str]| {
        let mut args: Vec<&str> = extra.to_vec();
        args.extend_from_slice(&common);
        ok(&args);
    };
    let phantom = d.join("phantom");
    let stacks = d.join("stacks");
    with(&["phantom", "--out", p(&phantom)]);
    with(&["capture", "--phantom", p(&phantom), "--out", p(&stacks)]);
    for c in ["r", "g", "b"] {
        let out = d.join(format!("rec_{c}.tiff"));
        with(&["reconstruct", "--stack", p(&stacks.join(c)), "--out", p(&out)]);
    }
    let synth = d.join("conventional.png");
    ok(&[
        "synthesize",
        "--red",
        p(&d.join("rec_r.tiff")),
        "--green",
        p(&d.join("rec_g.tiff")),
        "--blue",
        p(&d.join("rec_b.tiff")),
        "--out",
        p(&synth),
    ]);
    let metrics = d.join("eval.json");
    ok(&[
        "evaluate",
        "--image",
        p(&synth),
        "--reference",
        p(&phantom.join("ground_truth.png")),
        "--out",
        p(&metrics),
    ]);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert!(m["rmse"].as_f64().unwrap() < 1e-3, "{m}");

    let colorized = d.join("cfpm.png");
    ok(&[
        "colorize",
        "--donor",
        p(&stacks.join("donor.png")),
        "--acceptor",
        p(&d.join("rec_g.tiff")),
        "--out",
        p(&colorized),
    ]);
    assert!(colorized.is_file());
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let bad = cfpm(&["--na", "1.5", "phantom", "--out", p(d)]);
    assert_eq!(bad.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");

    std::fs::write(d.join("bad.toml"), "iterations = \"many\"").unwrap();
    assert_eq!(
        cfpm(&["--config", p(&d.join("bad.toml")), "run-all"]).status.code(),
        Some(2)
    );

    let missing = cfpm(&[
        "reconstruct",
        "--stack",
        p(&d.join("nope")),
        "--out",
        p(&d.join("x.tiff")),
    ]);
    assert_eq!(missing.status.code(), Some(3));

    // A donor whose aspect ratio differs from the acceptor's cannot share its field of view.
    let phantom = d.join("phantom");
    ok(&["phantom", "--out", p(&phantom), "--lr-size", "16"]);
    let donor = d.join("donor.png");
    std::fs::copy(phantom.join("ground_truth.png"), &donor).unwrap();
    let acceptor = d.join("acc.tiff");
    cfpm::io::write_tiff_f32(&acceptor, &cfpm::Image2D::filled(128, 64, 0.5)).unwrap();
    let mismatch = cfpm(&[
        "colorize",
        "--donor",
        p(&donor),
        "--acceptor",
        p(&acceptor),
        "--out",
        p(&d.join("o.png")),
    ]);
    assert_eq!(mismatch.status.code(), Some(4));
}
