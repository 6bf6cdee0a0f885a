use std::path::Path;
use std::process::{Command, Output};

fn artgan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_artgan")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = artgan(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn toy(dir: &Path) -> std::path::PathBuf {
    let data = dir.join("toy");
    ok(&["toy-data", "--out", p(&data), "--seed", "5"]);
    data
}

fn train(data: &Path, out: &Path, steps: &str) {
    ok(&[
        "train", "--data", p(data), "--out", p(out), "--steps", steps, "--batch", "1", "--scale", "64", "--seed", "11",
    ]);
}

fn wav_len(path: &Path) -> u32 {
    hound::WavReader::open(path).unwrap().duration()
}

#[test]
fn train_writes_metrics_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy(dir.path());
    assert_eq!(std::fs::read_dir(&data).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some()).count(), 8);
    train(&data, &dir.path().join("a"), "2");
    train(&data, &dir.path().join("b"), "2");
    let a = std::fs::read(dir.path().join("a/metrics.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/metrics.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("step,critic_loss,gen_loss,gp,wasserstein_gap,grad_norm_g,grad_norm_d\n"));
    assert_eq!(text.lines().count(), 3);
    assert_eq!(
        std::fs::read(dir.path().join("a/final.ckpt")).unwrap(),
        std::fs::read(dir.path().join("b/final.ckpt")).unwrap()
    );
}

#[test]
fn train_failure_is_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = artgan(&["train", "--data", p(&dir.path().join("missing")), "--out", p(&dir.path().join("o"))]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "));
}

#[test]
fn resume_continues_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy(dir.path());
    train(&data, &dir.path().join("full"), "3");
    train(&data, &dir.path().join("half"), "2");
    ok(&[
        "train", "--data", p(&data), "--out", p(&dir.path().join("rest")), "--steps", "3", "--batch", "1", "--scale",
        "64", "--seed", "11", "--resume", p(&dir.path().join("half/final.ckpt")),
    ]);
    assert_eq!(
        std::fs::read(dir.path().join("full/final.ckpt")).unwrap(),
        std::fs::read(dir.path().join("rest/final.ckpt")).unwrap()
    );
}

#[test]
fn generate_writes_trajectories_and_audio() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy(dir.path());
    train(&data, &dir.path().join("run"), "1");
    let ck = dir.path().join("run/final.ckpt");
    for name in ["g1", "g2"] {
        ok(&["generate", "--checkpoint", p(&ck), "--num", "3", "--seed", "4", "--out", p(&dir.path().join(name))]);
    }
    for i in 0..3 {
        let csv = format!("gen_{i:04}.csv");
        let text = std::fs::read_to_string(dir.path().join("g1").join(&csv)).unwrap();
        assert_eq!(text.lines().count(), 257);
        assert_eq!(text, std::fs::read_to_string(dir.path().join("g2").join(&csv)).unwrap());
        assert_eq!(wav_len(&dir.path().join(format!("g1/gen_{i:04}.wav"))), 20_480);
    }
    let none = dir.path().join("none");
    ok(&["generate", "--checkpoint", p(&ck), "--num", "0", "--out", p(&none)]);
    assert_eq!(std::fs::read_dir(&none).unwrap().count(), 0);

    let bad = artgan(&["generate", "--checkpoint", p(&data.join("ask.wav")), "--out", p(&none)]);
    assert!(!bad.status.success());
}

#[test]
fn synth_renders_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy(dir.path());
    let ema = data.join("ema/ask.csv");
    for name in ["a.wav", "b.wav"] {
        ok(&["synth", "--ema", p(&ema), "--out", p(&dir.path().join(name)), "--seed", "2"]);
    }
    assert_eq!(wav_len(&dir.path().join("a.wav")), 20_480);
    assert_eq!(std::fs::read(dir.path().join("a.wav")).unwrap(), std::fs::read(dir.path().join("b.wav")).unwrap());

    let broken = dir.path().join("broken.csv");
    std::fs::write(&broken, "x,y\n1,2\n").unwrap();
    let out = artgan(&["synth", "--ema", p(&broken), "--out", p(&dir.path().join("c.wav"))]);
    assert!(!out.status.success());
    assert!(!dir.path().join("c.wav").exists());
}

#[test]
fn dtw_corr_on_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let ema = toy(dir.path()).join("ema/water.csv");
    let text = ok(&["analyze", "dtw-corr", "--gen", p(&ema), "--real", p(&ema)]);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "place,axis,r,dtw_cost");
    assert_eq!(rows.len(), 13);
    for row in &rows[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert!((f[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-12, "{row}");
        assert!(f[3].parse::<f64>().unwrap().abs() < 1e-12, "{row}");
    }
}

#[test]
fn or_test_prints_ratio_and_p_value() {
    let even = ok(&["analyze", "or-test", "10", "10", "10", "10"]);
    let row: Vec<&str> = even.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert!((row[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
    let text = ok(&["analyze", "or-test", "3", "0", "0", "3"]);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "NA");
    assert!((row[1].parse::<f64>().unwrap() - 0.1).abs() < 1e-12);
    assert!(!artgan(&["analyze", "or-test", "1", "2", "3"]).status.success());
}

#[test]
fn smooth_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy(dir.path());
    let ema = data.join("ema/dark.csv");
    let smoothed = dir.path().join("s.csv");
    ok(&["analyze", "smooth", "--in", p(&ema), "--out", p(&smoothed)]);
    assert_eq!(std::fs::read_to_string(&smoothed).unwrap().lines().count(), 257);

    let raw: Vec<Vec<f64>> = std::fs::read_to_string(&ema)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let out = dir.path().join("plots");
    ok(&["analyze", "export-2d", "--gen", p(&ema), "--real", p(&ema), "--out", p(&out)]);
    for (p, place) in ["li", "ul", "ll", "tt", "tb", "td"].iter().enumerate() {
        let text = std::fs::read_to_string(out.join(format!("{place}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "sample,gen_x,gen_y,real_x,real_y");
        for (i, line) in lines.enumerate() {
            let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(f[3], 3.0 * raw[i][2 * p]);
            assert_eq!(f[4], 3.0 * raw[i][2 * p + 1]);
        }
    }
}

#[test]
fn gradcheck_command() {
    let text = ok(&["gradcheck", "--module", "autodiff", "--trials", "3", "--seed", "1"]);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "suite,checks,max_rel_err,tolerance,status");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 10);
    assert!(rows.iter().all(|r| r.ends_with(",pass")), "{text}");
    assert!(artgan(&["gradcheck", "--module", "all", "--trials", "0"]).status.success());
    assert!(!artgan(&["gradcheck", "--module", "nothing"]).status.success());
}
