use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use convnilm_core::data::{read_cache, write_channel_file, ChannelSeries, Manifest};
use convnilm_core::model::{param_count, Checkpoint};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convnilm"))
        .args(args)
        .env("NILM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic dataset: three appliances, `windows` windows of 256.
fn synth(dir: &Path, windows: usize, seed: u64) -> PathBuf {
    let out = dir.join(format!("syn_{windows}_{seed}"));
    ok(&[
        "synth",
        "--T",
        "256",
        "--windows",
        &windows.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        s(&out),
    ]);
    out
}

fn train(dir: &Path, data: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["train", "--data", s(data), "--out", s(&out), "--max-folds", "1", "--log-every", "0"];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

/// REDD-style house: two mains, seven appliance channels at 1/3 Hz.
fn redd_house(root: &Path, n: i64) {
    let dir = root.join("house_1");
    fs::create_dir_all(&dir).unwrap();
    let channels: [(u32, &str, f64); 9] = [
        (1, "mains", 600.0),
        (2, "mains", 500.0),
        (3, "lighting", 40.0),
        (4, "refrigerator", 120.0),
        (5, "dishwaser", 5.0),
        (6, "microwave", 80.0),
        (7, "lighting", 200.0),
        (8, "washer_dryer", 20.0),
        (9, "bathroom_gfi", 60.0),
    ];
    let mut labels = String::new();
    for (num, name, level) in channels {
        labels.push_str(&format!("{num} {name}\n"));
        let samples = (0..n).map(|i| (1_303_132_000 + 3 * i, level + (i % 3) as f64)).collect();
        write_channel_file(dir.join(format!("channel_{num}.dat")), &ChannelSeries::new(name, samples)).unwrap();
    }
    fs::write(dir.join("labels.dat"), labels).unwrap();
}

#[test]
fn prepare_selects_top_five_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    redd_house(tmp.path(), 41);
    let prep = |out: &Path| {
        ok(&[
            "prepare", "--dataset", "redd", "--root", s(tmp.path()), "--house", "1", "--window", "40", "--out", s(out),
        ])
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let stdout = prep(&a);
    prep(&b);
    assert!(stdout.contains("lighting_7, refrigerator, microwave, bathroom_gfi, lighting_3"), "{stdout}");

    let m = Manifest::load(a.join("manifest.toml")).unwrap();
    assert_eq!(
        m.appliances,
        ["lighting_7", "refrigerator", "microwave", "bathroom_gfi", "lighting_3"]
    );
    assert_eq!(m.channels.iter().filter(|c| c.selected).count(), 5);
    assert_eq!(m.channels.iter().filter(|c| c.role == "mains").count(), 2);
    // 41 samples at 1/3 Hz resample to 3 * 40 + 1 = 121 points at 1 Hz.
    assert_eq!(m.sample_period, 1.0);
    assert_eq!(m.window_count, 3);
    assert_eq!(m.dropped_samples, 1);
    let cache = read_cache(a.join("windows.bin")).unwrap();
    assert_eq!(cache.windows[0].mixture.len(), 40);
    assert!((cache.scale.min - 1100.0).abs() < 1e-9);

    for f in ["manifest.toml", "windows.bin", "config.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn prepare_reports_missing_house_as_data_error() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(code(&["prepare", "--dataset", "redd", "--root", s(tmp.path()), "--house", "3", "--out", s(&out)]), 2);
}

#[test]
fn synth_is_deterministic_and_sums_without_noise() {
    let tmp = TempDir::new().unwrap();
    let a = synth(tmp.path(), 2, 7);
    let b = tmp.path().join("again");
    ok(&["synth", "--T", "256", "--windows", "2", "--seed", "7", "--out", s(&b)]);
    assert_eq!(fs::read(a.join("windows.bin")).unwrap(), fs::read(b.join("windows.bin")).unwrap());

    let cache = read_cache(a.join("windows.bin")).unwrap();
    assert_eq!(cache.appliances(), 3);
    assert_eq!(cache.windows.len(), 2);
    for w in &cache.windows {
        let mix = cache.scale.invert(&w.mixture);
        let parts: Vec<Vec<f64>> = w.targets.iter().map(|t| cache.scale.invert(t)).collect();
        for (t, m) in mix.iter().enumerate() {
            let sum: f64 = parts.iter().map(|p| p[t]).sum();
            assert!((sum - m).abs() < 1e-9, "t={t}: {sum} vs {m}");
        }
    }
}

#[test]
fn synth_rejects_bad_spec_file() {
    let tmp = TempDir::new().unwrap();
    let spec = tmp.path().join("spec.toml");
    fs::write(&spec, "[[appliance]]\nname = \"x\"\nnonsense = 1\n").unwrap();
    let out = tmp.path().join("o");
    assert_eq!(code(&["synth", "--spec", s(&spec), "--out", s(&out)]), 2);
}

#[test]
fn train_eval_inspect_for_every_variant() {
    let tmp = TempDir::new().unwrap();
    let data = synth(tmp.path(), 3, 1);
    for variant in ["base", "causal", "causal-glu"] {
        let run_dir = train(tmp.path(), &data, variant, &["--variant", variant, "--epochs", "2"]);
        for f in ["fold_0.ckpt", "last.ckpt", "train_log.txt", "summary.csv", "config.toml"] {
            assert!(run_dir.join(f).exists(), "{variant}: {f}");
        }
        let log = fs::read_to_string(run_dir.join("train_log.txt")).unwrap();
        assert_eq!(log.lines().count(), 2);

        let ckpt_path = run_dir.join("fold_0.ckpt");
        let ckpt = Checkpoint::load(&ckpt_path).unwrap();
        assert_eq!(ckpt.model.config().variant().to_string(), variant);

        let info = ok(&["inspect", "--checkpoint", s(&ckpt_path)]);
        let total: usize = info
            .lines()
            .find_map(|l| l.trim().strip_prefix("total"))
            .and_then(|v| v.trim().parse().ok())
            .expect("total line");
        assert_eq!(total, param_count(ckpt.model.config()));
        assert!(info.contains("receptive field:"));
        assert!(info.contains("(P-1)") && info.contains("(L-1)"), "{info}");

        let ev = tmp.path().join(format!("eval_{variant}"));
        ok(&["eval", "--checkpoint", s(&ckpt_path), "--data", s(&data), "--out", s(&ev), "--all"]);
        let csv = fs::read_to_string(ev.join("metrics.csv")).unwrap();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "appliance,mae_w,est_acc,sae");
        assert_eq!(rows.len(), 1 + 3 + 1);
        assert!(rows[4].starts_with("total,"));
        let trace = fs::read_to_string(ev.join("traces").join("on_off.csv")).unwrap();
        assert_eq!(trace.lines().count(), 1 + 3 * 256);
    }
}

#[test]
fn eval_rejects_appliance_count_mismatch() {
    let tmp = TempDir::new().unwrap();
    let data = synth(tmp.path(), 2, 3);
    let run_dir = train(tmp.path(), &data, "r", &["--epochs", "1"]);
    let spec = tmp.path().join("two.toml");
    fs::write(
        &spec,
        "[[appliance]]\nname = \"a\"\ntype = \"permanent\"\nlevel = 10.0\n\n\
         [[appliance]]\nname = \"b\"\ntype = \"on-off\"\nlevel = 20.0\nduty = 0.5\n",
    )
    .unwrap();
    let other = tmp.path().join("two");
    ok(&["synth", "--spec", s(&spec), "--T", "256", "--windows", "2", "--out", s(&other)]);
    let ev = tmp.path().join("ev");
    let ckpt = run_dir.join("fold_0.ckpt");
    assert_eq!(code(&["eval", "--checkpoint", s(&ckpt), "--data", s(&other), "--out", s(&ev)]), 2);
}

#[test]
fn resume_continues_epoch_numbering() {
    let tmp = TempDir::new().unwrap();
    let data = synth(tmp.path(), 3, 2);
    let run_dir = train(tmp.path(), &data, "r", &["--epochs", "2"]);
    let last = run_dir.join("last.ckpt");
    assert_eq!(Checkpoint::load(&last).unwrap().meta.epoch, 2);
    train(tmp.path(), &data, "r", &["--epochs", "4", "--resume", s(&last)]);
    let log = fs::read_to_string(run_dir.join("train_log.txt")).unwrap();
    let epochs: Vec<&str> = log
        .lines()
        .map(|l| l.split_whitespace().nth(1).unwrap())
        .collect();
    assert_eq!(epochs, ["epoch=1", "epoch=2", "epoch=3", "epoch=4"]);
    assert_eq!(Checkpoint::load(&last).unwrap().meta.epoch, 4);
}

#[test]
fn disaggregate_batch_and_stream() {
    let tmp = TempDir::new().unwrap();
    let data = synth(tmp.path(), 3, 4);
    let input = tmp.path().join("mix.dat");
    // 3 s samples resampled onto the 6 s grid of the training data.
    let samples = (0..1500).map(|i| (1_400_000_000 + 3 * i, 120.0 + (i % 50) as f64)).collect();
    write_channel_file(&input, &ChannelSeries::new("mix", samples)).unwrap();

    let base = train(tmp.path(), &data, "base", &["--epochs", "1"]);
    let ckpt = base.join("fold_0.ckpt");
    let refused = tmp.path().join("refused");
    assert_eq!(
        code(&["disaggregate", "--checkpoint", s(&ckpt), "--input", s(&input), "--out", s(&refused), "--stream"]),
        1
    );
    let out = tmp.path().join("batch");
    ok(&["disaggregate", "--checkpoint", s(&ckpt), "--input", s(&input), "--out", s(&out)]);
    for name in ["on_off", "three_state", "permanent"] {
        let text = fs::read_to_string(out.join(format!("{name}.dat"))).unwrap();
        assert_eq!(text.lines().count(), 750, "{name}");
    }

    let causal = train(tmp.path(), &data, "causal", &["--epochs", "1", "--variant", "causal"]);
    let ckpt = causal.join("fold_0.ckpt");
    let (batch, stream) = (tmp.path().join("cb"), tmp.path().join("cs"));
    ok(&["disaggregate", "--checkpoint", s(&ckpt), "--input", s(&input), "--out", s(&batch)]);
    ok(&["disaggregate", "--checkpoint", s(&ckpt), "--input", s(&input), "--out", s(&stream), "--stream", "--chunk", "100"]);
    for name in ["on_off", "three_state", "permanent"] {
        let f = format!("{name}.dat");
        assert_eq!(fs::read(batch.join(&f)).unwrap(), fs::read(stream.join(&f)).unwrap(), "{name}");
    }
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&["train"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    let missing = tmp.path().join("missing");
    let out = tmp.path().join("o");
    assert_eq!(code(&["train", "--data", s(&missing), "--out", s(&out)]), 2);

    let data = synth(tmp.path(), 3, 5);
    assert_eq!(code(&["train", "--data", s(&data), "--out", s(&out), "--variant", "bogus"]), 1);

    let bad_cfg = tmp.path().join("bad.toml");
    fs::write(&bad_cfg, "[train]\nbatch_size = 0\n").unwrap();
    assert_eq!(code(&["train", "--data", s(&data), "--out", s(&out), "--config", s(&bad_cfg)]), 1);

    let hot = tmp.path().join("hot.toml");
    fs::write(&hot, "[train]\nlr = 1000.0\n").unwrap();
    let diverged = tmp.path().join("d");
    let args = ["train", "--data", s(&data), "--out", s(&diverged), "--config", s(&hot), "--epochs", "20", "--max-folds", "1"];
    assert_eq!(code(&args), 3);
    assert!(diverged.join("fold_0.ckpt").exists());

    let ckpt = tmp.path().join("corrupt.ckpt");
    fs::write(&ckpt, b"XXXX not a checkpoint").unwrap();
    assert_eq!(code(&["inspect", "--checkpoint", s(&ckpt)]), 2);
}
