use std::fs;
use std::path::Path;
use std::process::Command;

use shapebias::cli::{grid_from_csv, run, RunConfig};
use shapebias::experiments::{ModelKind, RunSettings};

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shapebias"))
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn args<'a>(cmd: &'a str, config: &'a str, out: &'a Path, extra: &[&'a str]) -> Vec<String> {
    let mut v = vec![
        "shapebias".to_string(),
        cmd.to_string(),
        "--config".into(),
        config.into(),
        "--out".into(),
        out.display().to_string(),
    ];
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

#[test]
fn config_defaults_round_trip_and_flags_override() {
    let cfg = RunConfig::default();
    let text = cfg.to_toml().unwrap();
    let back: RunConfig = toml::from_str(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(cfg.test.threshold, 0.7);
    assert_eq!(cfg.test.orders, vec![1, 2]);

    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "seed = 4\n[data]\nn = 6\n");
    let loaded = RunConfig::load(Path::new(&path)).unwrap();
    assert_eq!((loaded.seed, loaded.data.n, loaded.data.k), (4, 6, 3));
}

#[test]
fn gen_data_writes_manifest_patterns_and_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[data]\nn = 3\nk = 2\n");
    let out = dir.path().join("bits");
    run(args("gen-data", &cfg, &out, &["--seed", "5"])).unwrap();
    let manifest = fs::read_to_string(out.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 1 + 6);
    assert!(fs::read_to_string(out.join("patterns.csv")).unwrap().contains("holdout"));
    let echo = RunConfig::load(&out.join("config.toml")).unwrap();
    assert_eq!(echo.seed, 5);
    assert_eq!(echo.out, out);

    let img = dir.path().join("images");
    let cfg = write_config(dir.path(), "[data]\nmodel = \"cnn\"\nn = 2\nk = 2\n");
    run(args("gen-data", &cfg, &img, &["--resolution", "32", "--label-attribute", "color"])).unwrap();
    let ppm = fs::read(img.join("images/item0003.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n32 32\n255\n"));
    assert!(img.join("images/item0000_texture.pgm").exists());
    let manifest = fs::read_to_string(img.join("manifest.csv")).unwrap();
    let first = manifest.lines().nth(1).unwrap();
    let cols: Vec<&str> = first.split(',').collect();
    assert_eq!(cols[1], cols[3], "color labels follow color ids: {first}");
}

#[test]
fn train_then_eval_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[data]\nn = 4\nk = 3\n[train]\nepochs = 40\naccuracy_every = 10\n[test]\ntrials = 200\n",
    );
    let out = dir.path().join("run");
    run(args("train", &cfg, &out, &["--seed", "3"])).unwrap();
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 3);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 41);
    assert!(trace.lines().nth(10).unwrap().split(',').next_back().unwrap().parse::<f64>().is_ok());
    run(args("eval", &cfg, &out, &["--seed", "3"])).unwrap();
    assert_eq!(fs::read_to_string(out.join("eval.csv")).unwrap(), report);

    run(args("eval", &cfg, &out, &["--seed", "3", "--order", "2"])).unwrap();
    let only2 = fs::read_to_string(out.join("eval.csv")).unwrap();
    assert_eq!(only2.lines().count(), 2);
    assert_eq!(only2.lines().nth(1), report.lines().nth(2));

    let err = run(args("eval", &cfg, &out, &["--seed", "4"])).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn sweep_and_report_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[train]\nepochs = 20\n[test]\ntrials = 100\n[sweep]\nn_values = [2, 3]\nk_values = [1, 5]\nseeds = 2\n",
    );
    let out = dir.path().join("sweep");
    run(args("sweep", &cfg, &out, &["--seed", "1", "--threshold", "0.6"])).unwrap();
    for f in ["sweep.csv", "grid.csv", "summary.txt", "heatmap_order1.svg", "heatmap_order2.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let grid = fs::read_to_string(out.join("grid.csv")).unwrap();
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains(">= 0.6"));
    let rebuilt = grid_from_csv(&out.join("sweep.csv"), &RunSettings::new(ModelKind::Mlp)).unwrap();
    assert_eq!(rebuilt.seeds, 2);
    assert!(!rebuilt.cell(2, 5).unwrap().feasible);

    for f in ["grid.csv", "summary.txt"] {
        fs::remove_file(out.join(f)).unwrap();
    }
    run(args("report", &cfg, &out, &["--threshold", "0.6"])).unwrap();
    let regrid = fs::read_to_string(out.join("grid.csv")).unwrap();
    let parse = |s: &str| -> Vec<Vec<String>> {
        s.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
    };
    let (a, b) = (parse(&grid), parse(&regrid));
    assert_eq!(a.len(), b.len());
    for (ra, rb) in a.iter().zip(&b).skip(1) {
        assert_eq!(ra[..3], rb[..3]);
        for (x, y) in ra[4..].iter().zip(&rb[4..]) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() < 1e-12),
                _ => assert_eq!(x, y),
            }
        }
    }
    assert_eq!(fs::read_to_string(out.join("summary.txt")).unwrap(), summary);
}

#[test]
fn probe_bitflip_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[train]\nepochs = 20\n[probe]\nrepeats = 3\nmax_flips = 6\n");
    let out = dir.path().join("probe");
    run(args("probe", &cfg, &out, &["--kind", "bitflip"])).unwrap();
    let curves = fs::read_to_string(out.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 3 * 7);
    assert!(out.join("bitflip.svg").exists());
    assert!(out.join("checkpoint.bin").exists());
    let err = run(args("probe", &cfg, &out, &["--kind", "filters", "--checkpoint"]));
    assert!(err.is_err());
    let err = run(args(
        "probe",
        &cfg,
        &out,
        &["--kind", "filters", "--checkpoint", &out.join("checkpoint.bin").display().to_string()],
    ))
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let status = exe().args(["frobnicate"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = exe().arg("--help").output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&status.stdout).contains("vocab-accel"));
    let cfg = write_config(dir.path(), "[data]\nn = 2\nk = 6\n");
    let o = exe()
        .args(["gen-data", "--config", &cfg, "--out", &out.display().to_string()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let o = exe().args(["train", "--config", "/nonexistent/run.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(5));
    let o = exe().args(["train", "--order", "3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), "[data]\nn = 2\nk = 6\nallow_repeats = true\n");
    let o = exe()
        .args(["gen-data", "--config", &cfg, "--out", &out.display().to_string()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}
