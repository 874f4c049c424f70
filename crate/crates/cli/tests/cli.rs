use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rumboost::synth::{nested_steps, step_mnl};

fn rumboost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rumboost"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = rumboost(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    data: PathBuf,
    spec: PathBuf,
}

fn fixture(n: usize) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let syn = step_mnl(n, 5);
    let data = root.join("train.csv");
    syn.ds.save_csv(&data).unwrap();
    let spec = root.join("spec.toml");
    fs::write(&spec, syn.spec.to_toml()).unwrap();
    Fixture {
        _dir: dir,
        root,
        data,
        spec,
    }
}

fn ce_line(stdout: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix("cross_entropy"))
        .expect("cross_entropy line")
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn train_evaluate_smooth_indicators() {
    let f = fixture(1500);
    let out = f.root.join("run");
    ok(&[
        "train", "--data", s(&f.data), "--spec", s(&f.spec), "--out", s(&out), "--rounds", "60", "--lr", "0.2",
        "--early-stop", "0",
    ]);
    let model = out.join("model.json");
    for name in ["model.json", "train_log.csv", "ascs.csv"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let log = fs::read_to_string(out.join("train_log.csv")).unwrap();
    assert!(log.starts_with('#'));
    assert!(log.contains("config "));
    assert_eq!(log.lines().filter(|l| !l.starts_with('#')).count(), 61);

    let ce = ce_line(&ok(&["evaluate", "--model", s(&model), "--data", s(&f.data)]));
    assert!(ce > 0.0 && ce < 3f64.ln());

    let sm = f.root.join("smooth");
    ok(&[
        "smooth", "--model", s(&model), "--data", s(&f.data), "--out", s(&sm), "--smooth-targets",
        "b:time_b,b:cost_b", "--knot-bounds", "3:4", "--searches", "2",
    ]);
    let knots = fs::read_to_string(sm.join("knots.csv")).unwrap();
    assert_eq!(knots.lines().filter(|l| !l.starts_with('#')).count(), 3);
    let sce = ce_line(&ok(&["evaluate", "--model", s(&sm.join("model.json")), "--data", s(&f.data)]));
    assert!(sce.is_finite() && sce < 3f64.ln());

    let ind = f.root.join("ind");
    ok(&[
        "indicators", "--model", s(&sm.join("model.json")), "--out", s(&ind), "--data", s(&f.data), "--vot",
        "b:time_b:cost_b", "--grid", "10", "--bins", "5",
    ]);
    assert!(ind.join("curves/a__time_a.csv").exists());
    assert!(ind.join("splines/b__time_b.csv").exists());
    assert!(!ind.join("splines/a__time_a.csv").exists());
    let surface = fs::read_to_string(ind.join("vot/b_surface.csv")).unwrap();
    assert_eq!(surface.lines().filter(|l| !l.starts_with('#')).count(), 101);
    assert!(ind.join("vot/b_population.csv").exists());
}

#[test]
fn same_seed_gives_identical_model_files() {
    let f = fixture(600);
    let run = |name: &str| {
        let out = f.root.join(name);
        ok(&[
            "train", "--data", s(&f.data), "--spec", s(&f.spec), "--out", s(&out), "--rounds", "15", "--seed", "9",
        ]);
        fs::read(out.join("model.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn cross_validation_writes_folds() {
    let f = fixture(900);
    let out = f.root.join("cv");
    ok(&[
        "train", "--data", s(&f.data), "--spec", s(&f.spec), "--out", s(&out), "--cv", "3", "--rounds", "40",
        "--lr", "0.3", "--early-stop", "5",
    ]);
    let cv = fs::read_to_string(out.join("cv.csv")).unwrap();
    let rows: Vec<&str> = cv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[4].starts_with("mean,"));
    assert!(out.join("model.json").exists());
}

#[test]
fn nest_scale_search() {
    let dir = tempfile::tempdir().unwrap();
    let syn = nested_steps(900, 3, 2.0);
    let data = dir.path().join("d.csv");
    syn.ds.save_csv(&data).unwrap();
    let mut spec = syn.spec.clone();
    spec.nest = None;
    let spec_path = dir.path().join("spec.toml");
    fs::write(&spec_path, spec.to_toml()).unwrap();
    let out = dir.path().join("mu");
    ok(&[
        "train", "--data", s(&data), "--spec", s(&spec_path), "--out", s(&out), "--nested", "walk;cycle;pt,drive",
        "--mu-grid", "1:2:0.5", "--rounds", "30", "--lr", "0.3", "--early-stop", "5",
    ]);
    let table = fs::read_to_string(out.join("mu_search.csv")).unwrap();
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 4);
    let model = fs::read_to_string(out.join("model.json")).unwrap();
    assert!(model.contains("nest"));
}

#[test]
fn bootstrap_writes_bands() {
    let f = fixture(400);
    let out = f.root.join("boot");
    ok(&[
        "bootstrap", "--data", s(&f.data), "--spec", s(&f.spec), "--out", s(&out), "--bootstrap", "3", "--rounds",
        "10",
    ]);
    let band = fs::read_to_string(out.join("bands/c__cost_c.csv")).unwrap();
    assert!(band.contains("x_low,x_high,mean,min,max,std"));
}

#[test]
fn exit_codes_classify_failures() {
    let f = fixture(100);
    let out = f.root.join("x");
    let missing = f.root.join("nope.toml");
    let o = rumboost(&["train", "--data", s(&f.data), "--spec", s(&missing), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let bad = f.root.join("bad.csv");
    fs::write(&bad, "choice,time_a\n0,1\n7,2\n").unwrap();
    let o = rumboost(&["train", "--data", s(&bad), "--spec", s(&f.spec), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let o = rumboost(&[
        "train", "--data", s(&f.data), "--spec", s(&f.spec), "--out", s(&out), "--mu-grid", "0.5:1:0.1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
