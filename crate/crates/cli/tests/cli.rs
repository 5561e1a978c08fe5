use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renyigan-lab"))
        .args(args)
        .env_remove("RENYIGAN_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn small_config(dir: &Path, extra: &str) -> String {
    let text = format!(
        r#"
schema_version = 1
loss_family = "dcgan-baseline"
epochs = 2
batch_size = 16
seed = 5
pool_size = 256
eval_samples = 128
hidden = 16
{extra}

[dataset]
kind = "gaussian-mixture-ring"
n_modes = 8
radius = 2.0
mode_std = 0.02
"#
    );
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn train_preset_for_one_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = lab(&[
        "train",
        "dcgan-baseline",
        "--epochs",
        "1",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("runrecord.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(
        csv.starts_with("epoch,alpha_in_effect,disc_loss,gen_loss,penalty_value,fid,fid_clipped,clamp_activations\n")
    );
    for f in ["runrecord.json", "timing.csv", "generator.json", "discriminator.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(stdout(&o).contains("min fid:"));
}

#[test]
fn train_reports_min_fid_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("out");
    let o = lab(&["train", &cfg, "--epochs", "4", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("runrecord.csv")).unwrap();
    let (best_epoch, _) = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[5].parse::<f64>().unwrap())
        })
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .unwrap();
    assert!(
        stdout(&o).contains(&format!("at epoch {best_epoch}\n")),
        "{}",
        stdout(&o)
    );
}

#[test]
fn malformed_config_exits_1_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "learning_rat = 0.1");
    let o = lab(&["train", &cfg, "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("learning_rat"), "{}", stderr(&o));
    assert!(!dir.path().join("o").exists());

    let o = lab(&["train", "not-a-preset"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn divergence_exits_2_and_keeps_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        dir.path(),
        "clamp = false\n[optimizer]\nlearning_rate = 10.0\nbeta1 = 0.5\nbeta2 = 0.999\nepsilon = 1e-7",
    );
    let out = dir.path().join("out");
    let o = lab(&["train", &cfg, "--epochs", "20", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}{}", stdout(&o), stderr(&o));
    let json = fs::read_to_string(out.join("runrecord.json")).unwrap();
    assert!(json.contains("\"divergence\": \"epoch"));
}

#[test]
fn identical_seeds_give_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = lab(&["train", &cfg, "--seed", seed, "--out-dir", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (
            fs::read(out.join("runrecord.csv")).unwrap(),
            fs::read(out.join("runrecord.json")).unwrap(),
        )
    };
    let a = run("a", "123");
    assert_eq!(a, run("b", "123"));
    assert_ne!(a.0, run("c", "124").0);
}

#[test]
fn verify_default_passes_and_writes_stable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("v1.csv"), dir.path().join("v2.csv"));
    let o = lab(&["verify", "--out", p1.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).matches(" pass").count(), 9);
    lab(&["verify", "--out", p2.to_str().unwrap()]);
    assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    assert!(fs::read_to_string(&p1)
        .unwrap()
        .starts_with("check,cases,lhs,rhs,gap,tolerance,passed\n"));
}

#[test]
fn verify_over_tight_tolerance_fails_with_gaps() {
    let o = lab(&["verify", "--tolerance", "1e-15"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("FAIL"));
    assert!(stderr(&o).contains("checks failed"));
}

#[test]
fn verify_only_runs_one_check() {
    let o = lab(&["verify", "--only", "renyi-identity"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<String> = stdout(&o).lines().skip(1).map(String::from).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("renyi-identity"));

    assert_eq!(code(&lab(&["verify", "--only", "no-such-check"])), 1);
}

#[test]
fn measure_examples() {
    let o = lab(&["measure", "renyi-divergence", "N(0,1)", "N(1,1)", "--order", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "1.0");

    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("h.csv");
    fs::write(&h, "lo,hi,mass\n0,1,0.3\n1,2,0.7\n").unwrap();
    let h = h.to_str().unwrap();
    let o = lab(&["measure", "jensen-renyi", h, h, "--order", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).trim().parse::<f64>().unwrap().abs() < 1e-12);

    // Σ (q − p)² / p = 0.0625/0.5 + 0.0625/0.5.
    let o = lab(&["measure", "pearson-vajda", "[0.5,0.5]", "[0.25,0.75]", "--order", "2"]);
    assert_eq!(stdout(&o).trim(), "0.25");
}

#[test]
fn measure_errors_exit_1() {
    let o = lab(&["measure", "kl", "N(0,1", "N(1,1)"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("cannot parse distribution"));
    let o = lab(&["measure", "renyi-divergence", "N(0,1)", "N(1,1)"]);
    assert_eq!(code(&o), 1);
    let o = lab(&["measure", "renyi-divergence", "N(0,1)", "N(1,1)", "--order", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("order"), "{}", stderr(&o));
}

#[test]
fn fid_of_two_sample_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    fs::write(&a, "x,y\n0,0\n2,0\n0,2\n2,2\n").unwrap();
    fs::write(&b, "1,-1\n3,-1\n1,1\n3,1\n").unwrap();
    // Same covariance, means (1,1) and (2,0).
    let o = lab(&["fid", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!((stdout(&o).trim().parse::<f64>().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn sweep_writes_per_seed_artifacts_regardless_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let (o1, o3) = (dir.path().join("j1"), dir.path().join("j3"));
    let o = lab(&[
        "sweep",
        &cfg,
        "--seeds",
        "1,2,3",
        "--jobs",
        "1",
        "--out-dir",
        o1.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_renyigan-lab"))
        .args([
            "sweep",
            &cfg,
            "--seeds",
            "1,2,3",
            "--jobs",
            "3",
            "--out-dir",
            o3.to_str().unwrap(),
        ])
        .env("RENYIGAN_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read(o1.join("summary.csv")).unwrap(),
        fs::read(o3.join("summary.csv")).unwrap()
    );
    for s in [1, 2, 3] {
        let f = format!("seed-{s}/runrecord.csv");
        assert_eq!(fs::read(o1.join(&f)).unwrap(), fs::read(o3.join(&f)).unwrap());
    }
    assert_eq!(fs::read_to_string(o1.join("summary.csv")).unwrap().lines().count(), 4);
}
