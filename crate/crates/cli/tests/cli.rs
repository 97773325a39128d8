use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cech_betti::pointproc::PointCloud;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cech-betti"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

const SAMPLE: &str = r#"{"sample": {"density": {"kind": "uniform-cube", "d": 2}, "n": 200, "scale": 0.05, "seed": 11}}"#;

#[test]
fn sample_is_reproducible_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SAMPLE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("sample", &cfg, &a, &[]).status.success());
    assert!(run("sample", &cfg, &b, &[]).status.success());
    let text = read(a.join("cloud.csv"));
    assert_eq!(text, read(b.join("cloud.csv")));

    let cloud = PointCloud::read_csv(text.as_bytes()).unwrap();
    assert_eq!(cloud.dim(), 2);
    assert_eq!(cloud.scale, 0.05);
    assert_eq!(cloud.seed, Some(11));
    let mut again = Vec::new();
    cloud.write_csv(&mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), text);

    let manifest: serde_json::Value = serde_json::from_str(&read(a.join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "sample");
    assert_eq!(manifest["config"]["sample"]["seed"], 11);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SAMPLE);
    let out = dir.path().join("o");
    assert!(run("sample", &cfg, &out, &["--seed", "99"]).status.success());
    assert!(read(out.join("cloud.csv")).starts_with("# d=2 n=200 scale=0.05 seed=99"));
    let echoed: serde_json::Value = serde_json::from_str(&read(out.join("config.json"))).unwrap();
    assert_eq!(echoed["sample"]["seed"], 99);
}

#[test]
fn tiny_intensity_gives_a_valid_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"sample": {"density": {"kind": "uniform-cube", "d": 3}, "n": 0.001, "seed": 1}}"#,
    );
    let out = dir.path().join("o");
    assert!(run("sample", &cfg, &out, &[]).status.success());
    let cloud = PointCloud::read_csv(read(out.join("cloud.csv")).as_bytes()).unwrap();
    assert_eq!(cloud.dim(), 3);
}

#[test]
fn triangle_fixture_has_one_loop() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tri.csv", "# d=2 n=3 scale=1 seed=none\n0,0\n1,0\n0.5,0.8660254037844386\n");
    let cfg = write(
        dir.path(),
        "b.json",
        &format!(
            r#"{{"betti": {{"input": "{}", "k": 1, "t_max": 2.0, "grid": [0.5, 1.0, 1.1, 1.2]}}}}"#,
            dir.path().join("tri.csv").display()
        ),
    );
    let out = dir.path().join("o");
    let o = run("betti", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let barcode = read(out.join("barcode.csv"));
    let rows: Vec<&str> = barcode.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let fields: Vec<f64> = rows[0].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(fields[0], 1.0);
    assert!((fields[1] - 1.0).abs() < 1e-12);
    assert!((fields[2] - 2.0 / 3f64.sqrt()).abs() < 1e-12);

    // census rows are t,i,j,count; Σ j·count per t against the curve
    let census = read(out.join("census.csv"));
    let mut beta = std::collections::BTreeMap::<String, u64>::new();
    for line in census.lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        *beta.entry(f[0].to_string()).or_default() += f[2].parse::<u64>().unwrap() * f[3].parse::<u64>().unwrap();
    }
    assert_eq!(beta.get("0.5").copied().unwrap_or(0), 0);
    assert_eq!(beta["1"], 1);
    assert_eq!(beta["1.1"], 1);
    assert_eq!(beta["1.2"], 0);

    let lifetime = read(out.join("lifetime.csv"));
    let last: f64 = lifetime.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((last - (2.0 / 3f64.sqrt() - 1.0)).abs() < 1e-12);
}

#[test]
fn scaled_triangle_barcode_is_in_t_units() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tri.csv", "# d=2 n=3 scale=0.5 seed=none\n0,0\n0.5,0\n0.25,0.4330127018922193\n");
    let cfg = write(
        dir.path(),
        "b.json",
        &format!(r#"{{"betti": {{"input": "{}", "k": 1, "t_max": 2.0}}}}"#, dir.path().join("tri.csv").display()),
    );
    let out = dir.path().join("o");
    assert!(run("betti", &cfg, &out, &[]).status.success());
    let barcode = read(out.join("barcode.csv"));
    let f: Vec<f64> = barcode.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((f[1] - 1.0).abs() < 1e-12);
    assert!((f[2] - 2.0 / 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn empty_input_gives_header_only_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "empty.csv", "# d=2 n=0 scale=1 seed=none\n");
    let cfg = write(
        dir.path(),
        "b.json",
        &format!(r#"{{"betti": {{"input": "{}", "k": 1, "t_max": 1.0}}}}"#, dir.path().join("empty.csv").display()),
    );
    let out = dir.path().join("o");
    let o = run("betti", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(out.join("barcode.csv")), "q,birth,death\n");
    let census = read(out.join("census.csv"));
    assert_eq!(census.lines().count(), 2, "{census}");
}

#[test]
fn simplex_budget_overflow_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "b.json",
        r#"{"betti": {"generate": {"density": {"kind": "uniform-cube", "d": 2}, "n": 300, "scale": 0.2, "seed": 4},
             "k": 1, "t_max": 1.0, "simplex_budget": 100}}"#,
    );
    let o = run("betti", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

const CONSTANTS: &str = r#"{"constants": {"seed": 5, "requests": [
    {"name": "c_f_k", "density": {"kind": "uniform-cube", "d": 2}, "k": 1},
    {"name": "d1_volume", "k": 1, "d": 2, "sign": "-", "samples": 20000},
    {"name": "d1_volume", "k": 1, "d": 2, "sign": "+", "samples": 20000},
    {"name": "union_ball_volume", "centers": [[0.0, 0.0], [0.5, 0.0]], "r": 0.5, "samples": 20000}
]}}"#;

#[test]
fn constants_are_reproducible_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", CONSTANTS);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("constants", &cfg, &a, &["--threads", "1"]).status.success());
    assert!(run("constants", &cfg, &b, &["--threads", "3"]).status.success());
    let text = read(a.join("constants.json"));
    assert_eq!(text, read(b.join("constants.json")));

    let records: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(records.len(), 4);
    for r in &records {
        for key in ["name", "params", "value", "std_error", "samples", "seed"] {
            assert!(r.get(key).is_some(), "{key} missing from {r}");
        }
    }
    assert_eq!(records[0]["name"], "c_f_k");
    assert!((records[0]["value"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    assert!(records[1]["value"].as_f64().unwrap() <= records[2]["value"].as_f64().unwrap());
}

#[test]
fn unknown_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    for text in [
        r#"{"sample": {"density": {"kind": "uniform-cube", "d": 2}, "n": 10, "colour": 1}}"#,
        r#"{"sampel": {}}"#,
        r#"{"sample": {"density": {"kind": "uniform-cube", "d": 2, "sides": 1}, "n": 10}}"#,
        r#"{"constants": {"requests": [{"name": "c_f_k", "density": {"kind": "uniform-cube", "d": 2}, "k": 1, "x": 0}]}}"#,
    ] {
        let cfg = write(dir.path(), "bad.json", text);
        let sub = if text.contains("constants") { "constants" } else { "sample" };
        let o = run(sub, &cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn missing_block_and_missing_file_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SAMPLE);
    assert_eq!(run("betti", &cfg, &dir.path().join("o"), &[]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(run("sample", &missing, &dir.path().join("o"), &[]).status.code(), Some(2));
}

const POISSON_SMOKE: &str = r#"{"experiment": {
    "regime": "poisson", "d": 2, "k": 1,
    "density": {"kind": "uniform-cube", "d": 2},
    "n_list": [500], "grid": [0.8, 1.0, 1.2], "replicates": 200, "seed": 77,
    "budgets": {"dvolume_samples": 100000}
}}"#;

#[test]
fn experiment_report_is_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.json", POISSON_SMOKE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let start = std::time::Instant::now();
    let oa = run("experiment", &cfg, &a, &["--threads", "1"]);
    assert!(start.elapsed().as_secs() < 120);
    let ob = run("experiment", &cfg, &b, &["--threads", "4"]);
    for o in [&oa, &ob] {
        assert!(matches!(o.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(oa.status.code(), ob.status.code());
    let report = read(a.join("report.json"));
    assert_eq!(report, read(b.join("report.json")));
    assert_eq!(read(a.join("summary.csv")), read(b.join("summary.csv")));

    let parsed: serde_json::Value = serde_json::from_str(&report).unwrap();
    let echoed: serde_json::Value = serde_json::from_str(&read(a.join("config.json"))).unwrap();
    assert_eq!(parsed["config"], echoed["experiment"]);
    assert_eq!(parsed["passed"].as_bool().unwrap(), oa.status.success());
}
