use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_star-spectra"));
    c.env_remove("STAR_SPECTRA_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(path: &Path) -> Value {
    let text = std::fs::read(format!("{}.manifest.json", path.display())).unwrap();
    serde_json::from_slice(&text).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn orbit_count_both_methods() {
    let o = run(&["orbits", "q", "--n", "2,2", "--m", "2,2", "--method", "both"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim_end(), "1/2  1/2  OK");

    let o = run(&["orbits", "q", "--n", "3,3,2", "--m", "2,3,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim_end(), "2");
}

#[test]
fn invalid_class_is_a_validation_failure() {
    let o = run(&["orbits", "q", "--n", "1,2", "--m", "2,1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let o = run(&["gen", "--v", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let o = run(&["spectrum", "--v", "3", "--lambda-max", "5", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn thread_count_from_environment() {
    let o = bin().args(["gen", "--v", "2"]).env("STAR_SPECTRA_THREADS", "0").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["gen", "--v", "2"]).env("STAR_SPECTRA_THREADS", "2").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn graph_round_trip_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    assert!(run(&["gen", "--v", "3", "--seed", "7", "--out", p(&graph)]).status.success());
    let g: Value = serde_json::from_slice(&std::fs::read(&graph).unwrap()).unwrap();
    assert_eq!(g["v"], 3);
    assert_eq!(g["seed"], 7);
    assert_eq!(g["lengths"].as_array().unwrap().len(), 3);
    let m = manifest(&graph);
    assert_eq!(m["outputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let from_file = dir.path().join("a.csv");
    let drawn = dir.path().join("b.csv");
    let args = ["--lambda-max", "40"];
    assert!(run(&[&["spectrum", "--graph", p(&graph), "--out", p(&from_file)][..], &args].concat()).status.success());
    assert!(run(&[&["spectrum", "--v", "3", "--seed", "7", "--out", p(&drawn)][..], &args].concat()).status.success());
    let text = std::fs::read_to_string(&from_file).unwrap();
    assert_eq!(text, std::fs::read_to_string(&drawn).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,lambda"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    // 17 significant digits
    assert_eq!(first[1].split('e').next().unwrap().replace('.', "").len(), 17);
}

#[test]
fn trace_check_writes_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("density.csv");
    let o = run(&["trace-check", "--v", "3", "--seed", "7", "--kmax", "12", "--sigma", "0.1", "--out", p(&out)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("lambda,orbit_density,spectral_density\n"));
    let distance = manifest(&out)["config"]["relative_l2_distance"].as_f64().unwrap();
    assert!(distance < 0.05, "{distance}");
}

#[test]
fn analytic_table_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("f1.csv");
    let b = dir.path().join("f2.csv");
    for out in [&a, &b] {
        let o = run(&["analytic", "f", "--tau-max", "0.04", "--step", "0.02", "--j-max", "4", "--out", p(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    assert_eq!(text.lines().next(), Some("tau,tau_p,F1,F2,F3,F4,F,expansion"));
    assert_eq!(text.lines().count(), 10);
    let origin: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(origin[6], 2.0);
    assert_eq!(origin[7], 2.0);

    let trunc: Value = serde_json::from_slice(&std::fs::read(dir.path().join("f1.csv.truncation.json")).unwrap()).unwrap();
    assert_eq!(trunc["j_max"], 4);
    let m = manifest(&a);
    assert_eq!(m["config"]["truncation"]["j_max"], 4);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn analytic_points() {
    let o = run(&["analytic", "k", "--tau", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse::<f64>().unwrap(), 1.0);

    let o = run(&["analytic", "r3", "--x", "0.3", "--y", "0.7"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("x,y,R3,R3_connected"));

    assert_eq!(run(&["analytic", "k", "--tau", "0.9"]).status.code(), Some(1));
    assert_eq!(run(&["analytic", "k", "--tau", "0.1", "--tau-cutoff", "1"]).status.code(), Some(1));
}

#[test]
fn expansion_table_near_origin() {
    let o = run(&["expansion-table", "--tau-max", "0.06", "--step", "0.02"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("tau,tau_p,F,expansion,difference"));
    assert_eq!(text.lines().count(), 17);
    for line in text.lines().skip(1) {
        let row: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row[4], row[2] - row[3], "{line}");
    }
    assert_eq!(text.lines().nth(1), Some("0.0000000000000000e0,0.0000000000000000e0,2.0000000000000000e0,2.0000000000000000e0,0.0000000000000000e0"));
}

#[test]
fn empirical_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let r2 = dir.path().join("r2.csv");
    let ensemble = [
        "--v", "10", "--realizations", "6", "--lambda-min", "200", "--lambda-max", "240", "--seed", "3",
    ];
    let args = [&["empirical", "r2"][..], &ensemble, &["--x-grid", "0.5:1:0.5", "--out", p(&r2)]].concat();
    assert!(run(&args).status.success());
    let first = std::fs::read(&r2).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(first, std::fs::read(&r2).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().next(), Some("x,estimate,stderr,pairs"));
    assert_eq!(text.lines().count(), 3);
    assert_eq!(manifest(&r2)["config"]["ensemble"]["v"], 10);

    let r3 = dir.path().join("r3.csv");
    let args = [&["empirical", "r3"][..], &ensemble, &["--x-grid", "0.5", "--y-grid", "1,2", "--out", p(&r3)]].concat();
    assert!(run(&args).status.success());
    assert!(std::fs::read_to_string(&r3).unwrap().starts_with("x,y,estimate,stderr,pairs\n"));

    let analytic = dir.path().join("k.csv");
    assert!(run(&["analytic", "k", "--tau", "0.1", "--out", p(&analytic)]).status.success());
    let trunc = dir.path().join("k.csv.truncation.json");

    let out = dir.path().join("cmp.csv");
    let o = run(&["compare", "--empirical", p(&r2), "--truncation", p(&trunc), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("x,empirical,stderr,analytic,z"));
    assert_eq!(text.lines().count(), 3);

    let out3 = dir.path().join("cmp3.csv");
    let o = run(&["compare", "--empirical", p(&r3), "--truncation", p(&trunc), "--out", p(&out3)]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(&out3).unwrap().starts_with("x,y,empirical,stderr,analytic,z\n"));

    // refuses to clobber its inputs
    let before = std::fs::read(&r2).unwrap();
    let o = run(&["compare", "--empirical", p(&r2), "--truncation", p(&trunc), "--out", p(&r2)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(before, std::fs::read(&r2).unwrap());
    let o = run(&["compare", "--empirical", p(&r2), "--truncation", p(&trunc), "--out", p(&trunc)]);
    assert_eq!(o.status.code(), Some(1));

    // refuses without metadata
    let missing = dir.path().join("nope.json");
    let o = run(&["compare", "--empirical", p(&r2), "--truncation", p(&missing), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let bare = dir.path().join("bare.csv");
    std::fs::copy(&r2, &bare).unwrap();
    let o = run(&["compare", "--empirical", p(&bare), "--truncation", p(&trunc), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::write(dir.path().join("bare.csv.manifest.json"), "{\"config\": {}}").unwrap();
    let o = run(&["compare", "--empirical", p(&bare), "--truncation", p(&trunc), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("r2_{threads}.csv"));
        let o = run(&[
            "--threads", threads, "empirical", "r2", "--v", "8", "--realizations", "5", "--lambda-min", "100",
            "--lambda-max", "140", "--x-grid", "0.5,1", "--out", p(&out),
        ]);
        assert!(o.status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
