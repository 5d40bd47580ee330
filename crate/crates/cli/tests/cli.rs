use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn andreev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_andreev"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit status")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn make(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut full = vec!["table", "make"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path_str(&path)]);
    let o = andreev(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn json_lines(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(
        header,
        [
            "event_index",
            "side",
            "hit_x",
            "hit_y",
            "r",
            "phi",
            "tau",
            "kind",
            "parity_after"
        ]
    );
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

#[test]
fn square_file_is_canonical() {
    let a = andreev(&["table", "make", "square"]);
    let b = andreev(&["table", "make", "square"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["vertices"].as_array().unwrap().len(), 4);
    assert_eq!(v["andreev_sides"], serde_json::json!([]));
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["mode"], "float64");
    let text = stdout(&a);
    let pos: Vec<_> = ["andreev_sides", "format_version", "mode", "vertices"]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn tfractal_level_one_has_twelve_vertices() {
    for mode in ["float64", "rational"] {
        let o = andreev(&["table", "make", "tfractal", "1", "--mode", mode]);
        assert_eq!(code(&o), 0);
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["vertices"].as_array().unwrap().len(), 12);
    }
    let o = andreev(&["table", "make", "tfractal", "1", "--mode", "rational"]);
    assert!(stdout(&o).contains("\"3/4\""));
}

#[test]
fn invalid_shapes_exit_two() {
    for args in [
        &["table", "make", "notch", "10", "1", "top", "9.5", "1", "1/2"][..],
        &["table", "make", "notch", "10", "1", "top", "0", "1", "1/2"][..],
        &["table", "make", "rect", "0", "1"][..],
        &["table", "make", "rect", "x", "1"][..],
        &["table", "make", "square", "--andreev-sides", "0"][..],
        &["table", "make", "tfractal", "7"][..],
        &["table", "make", "hexagon"][..],
    ] {
        let o = andreev(args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn notch_table_builds_with_andreev_side() {
    let dir = TempDir::new().unwrap();
    let p = make(
        &dir,
        "notch.json",
        &["notch", "10", "1", "top", "4", "1", "1/2", "--mode", "rational"],
    );
    let v: Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
    assert_eq!(v["vertices"].as_array().unwrap().len(), 8);
}

#[test]
fn square_andreev_orbit_has_four_events() {
    let dir = TempDir::new().unwrap();
    let table = make(&dir, "sq.json", &["square", "--andreev-sides", "1"]);
    let o = andreev(&[
        "simulate",
        "--table",
        path_str(&table),
        "--position",
        "0.5,0.5",
        "--direction",
        "0",
    ]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 4);
    let parities: Vec<&str> = rows.iter().map(|r| r[8].as_str()).collect();
    assert_eq!(parities, ["-1", "-1", "1", "1"]);
    let kinds: Vec<&str> = rows.iter().map(|r| r[7].as_str()).collect();
    assert_eq!(kinds, ["andreev", "specular", "andreev", "specular"]);
    assert_eq!(rows[0][2], "1.0000000000000000e0");
    assert_eq!(rows[0][3], "5.0000000000000000e-1");
}

#[test]
fn vertical_orbit_has_two_specular_rows() {
    let dir = TempDir::new().unwrap();
    for mode in ["float64", "rational"] {
        let table = make(&dir, "sq.json", &["square", "--mode", mode]);
        let o = andreev(&[
            "simulate",
            "--table",
            path_str(&table),
            "--position",
            "1/3,1/2",
            "--slope",
            "1/0",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let rows = csv_rows(&stdout(&o));
        assert_eq!(rows.len(), 2, "{mode}");
        assert!(rows.iter().all(|r| r[7] == "specular" && r[8] == "1"));
    }
}

#[test]
fn corner_hit_exits_three_with_termination_row() {
    let dir = TempDir::new().unwrap();
    let table = make(&dir, "sq.json", &["square", "--andreev-sides", "1"]);
    let csv_path = dir.path().join("events.csv");
    let o = andreev(&[
        "simulate",
        "--table",
        path_str(&table),
        "--position",
        "0.5,0.5",
        "--slope",
        "1/1",
        "--csv",
        path_str(&csv_path),
    ]);
    assert_eq!(code(&o), 3);
    let rows = csv_rows(&fs::read_to_string(&csv_path).unwrap());
    let last = rows.last().unwrap();
    assert_eq!(last[7], "singularity");
    assert_eq!(last[0], (rows.len() - 1).to_string());
    let summary = json_lines(&stdout(&o));
    assert!(summary[0]["termination"]["singularity"].is_object());
}

#[test]
fn simulation_outputs_are_deterministic_and_svg_is_well_formed() {
    let dir = TempDir::new().unwrap();
    let table = make(&dir, "rect.json", &["rect", "2", "1"]);
    let mut outputs = Vec::new();
    for k in 0..2 {
        let csv_path = dir.path().join(format!("o{k}.csv"));
        let svg_path = dir.path().join(format!("o{k}.svg"));
        let o = andreev(&[
            "simulate",
            "--table",
            path_str(&table),
            "--seed",
            "17",
            "--max-events",
            "200",
            "--csv",
            path_str(&csv_path),
            "--svg",
            path_str(&svg_path),
        ]);
        assert_eq!(code(&o), 0);
        outputs.push((fs::read(&csv_path).unwrap(), fs::read_to_string(&svg_path).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let (csv_bytes, svg) = &outputs[0];
    assert_eq!(csv_rows(std::str::from_utf8(csv_bytes).unwrap()).len(), 200);
    let doc = roxmltree::Document::parse(svg).unwrap();
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.attribute("version"), Some("1.1"));
    assert_eq!(root.attribute("viewBox"), Some("-0.1 -1.05 2.2 1.1"));
    let count = |tag: &str| root.descendants().filter(|n| n.has_tag_name(tag)).count();
    assert_eq!(count("path"), 1);
    assert_eq!(count("polygon"), 1);
    assert_eq!(count("line"), 0);
    let d = root
        .descendants()
        .find(|n| n.has_tag_name("path"))
        .unwrap()
        .attribute("d")
        .unwrap();
    assert_eq!(d.matches(" L ").count(), 200);
}

#[test]
fn svg_marks_andreev_sides() {
    let dir = TempDir::new().unwrap();
    let table = make(&dir, "sq.json", &["square", "--andreev-sides", "1"]);
    let svg_path = dir.path().join("o.svg");
    let o = andreev(&[
        "simulate",
        "--table",
        path_str(&table),
        "--position",
        "0.5,0.5",
        "--direction",
        "0",
        "--svg",
        path_str(&svg_path),
    ]);
    assert_eq!(code(&o), 0);
    let svg = fs::read_to_string(&svg_path).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("line")).collect();
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0].attribute("x1"), Some("1"));
    let outline = doc.descendants().find(|n| n.has_tag_name("polygon")).unwrap();
    assert_ne!(lines[0].attribute("stroke"), outline.attribute("stroke"));
    let path = doc.descendants().find(|n| n.has_tag_name("path")).unwrap();
    assert_eq!(
        path.attribute("d"),
        Some("M 0.5 -0.5 L 1 -0.5 L 0 -0.5 L 1 -0.5 L 0 -0.5 L 0.5 -0.5")
    );
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = TempDir::new().unwrap();
    let table = make(
        &dir,
        "sq.json",
        &["square", "--andreev-sides", "1", "--mode", "rational"],
    );
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"initial":{"position":["1/2","1/2"],"direction":"0/1","parity":-1},"max_events":10,"tolerance":1e-9,"seed":3}"#,
    )
    .unwrap();
    let o = andreev(&["simulate", "--table", path_str(&table), "--config", path_str(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    let parities: Vec<&str> = rows.iter().map(|r| r[8].as_str()).collect();
    assert_eq!(parities, ["1", "1", "-1", "-1"]);

    let o = andreev(&[
        "simulate",
        "--table",
        path_str(&table),
        "--config",
        path_str(&cfg),
        "--slope",
        "1/0",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv_rows(&stdout(&o)).len(), 2);
}

#[test]
fn simulate_configuration_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let exact = make(
        &dir,
        "exact.json",
        &["square", "--andreev-sides", "1", "--mode", "rational"],
    );
    let float = make(&dir, "float.json", &["square", "--andreev-sides", "1"]);
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"format_version":1,"mode":"float64","andreev_sides":[],"vertices":[[0,0],[1,1]]}"#,
    )
    .unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"tolerance":-1}"#).unwrap();
    let missing = dir.path().join("missing.json");
    for args in [
        vec![
            "simulate",
            "--table",
            path_str(&exact),
            "--position",
            "1/2,1/2",
            "--direction",
            "0",
        ],
        vec![
            "simulate",
            "--table",
            path_str(&float),
            "--position",
            "2,2",
            "--direction",
            "0",
        ],
        vec![
            "simulate",
            "--table",
            path_str(&float),
            "--position",
            "0.5",
            "--direction",
            "0",
        ],
        vec![
            "simulate",
            "--table",
            path_str(&float),
            "--position",
            "0.5,0.5",
            "--slope",
            "0/0",
        ],
        vec![
            "simulate",
            "--table",
            path_str(&float),
            "--position",
            "0.5,0.5",
            "--parity",
            "2",
        ],
        vec!["simulate", "--table", path_str(&float), "--config", path_str(&cfg)],
        vec!["simulate", "--table", path_str(&bad)],
        vec!["simulate", "--table", path_str(&missing)],
        vec![
            "simulate",
            "--table",
            path_str(&float),
            "--direction",
            "0",
            "--slope",
            "1/2",
        ],
    ] {
        assert_eq!(code(&andreev(&args)), 2, "{args:?}");
    }
}

#[test]
fn verify_jacobian_hundred_pass_lines() {
    let dir = TempDir::new().unwrap();
    let table = make(&dir, "sq.json", &["square", "--andreev-sides", "1"]);
    let o = andreev(&[
        "verify",
        "jacobian",
        "--table",
        path_str(&table),
        "--samples",
        "100",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&o), 0);
    let lines = json_lines(&stdout(&o));
    assert_eq!(lines.len(), 100);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["check"], "jacobian");
        assert_eq!(l["pass"], true);
        assert_eq!(l["index"], i);
        assert_eq!(l["seed"], 5);
        assert!(l["max_rel_entry_error"].as_f64().unwrap() < 1e-5);
    }
}

#[test]
fn verify_closed_flow_square() {
    let dir = TempDir::new().unwrap();
    let table = make(&dir, "sq.json", &["square", "--andreev-sides", "1"]);
    let o = andreev(&[
        "verify",
        "closed-flow",
        "--table",
        path_str(&table),
        "--samples",
        "100",
        "--seed",
        "9",
    ]);
    let lines = json_lines(&stdout(&o));
    assert_eq!(lines.len(), 100);
    let passed = lines.iter().filter(|l| l["pass"] == true).count();
    assert!(passed >= 99, "{passed}");
    assert_eq!(code(&o), if passed == 100 { 0 } else { 1 });
}

#[test]
fn verify_measure_guards_and_runs() {
    let dir = TempDir::new().unwrap();
    let table = make(&dir, "sq.json", &["square", "--andreev-sides", "1"]);
    let o = andreev(&["verify", "measure", "--table", path_str(&table), "--samples", "999"]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
    let o = andreev(&[
        "verify",
        "measure",
        "--table",
        path_str(&table),
        "--samples",
        "20000",
        "--regions",
        "3",
    ]);
    let lines = json_lines(&stdout(&o));
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[3]["check"], "total_measure");
    assert!((lines[3]["after"].as_f64().unwrap() - 8.0).abs() < 5e-2);
    for l in &lines[..3] {
        assert!(l["relative_error"].as_f64().unwrap() < 5e-2);
    }
}

#[test]
fn verify_volume_sign_all_kinds() {
    let dir = TempDir::new().unwrap();
    let table = make(&dir, "sq.json", &["square", "--andreev-sides", "1"]);
    let o = andreev(&["verify", "volume-sign", "--table", path_str(&table), "--samples", "10"]);
    assert_eq!(code(&o), 0);
    let lines = json_lines(&stdout(&o));
    assert_eq!(lines.len(), 30);
    for (kind, sign) in [("free", 1), ("specular", 1), ("andreev", -1)] {
        let of_kind: Vec<_> = lines.iter().filter(|l| l["segment_kind"] == kind).collect();
        assert_eq!(of_kind.len(), 10);
        assert!(of_kind.iter().all(|l| l["expected_sign"] == sign && l["pass"] == true));
    }
}

#[test]
fn verify_tfractal_defaults_and_dyadic_rejection() {
    let o = andreev(&["verify", "tfractal"]);
    assert_eq!(code(&o), 0);
    let lines = json_lines(&stdout(&o));
    assert_eq!(lines.len(), 12);
    assert!(lines
        .iter()
        .all(|l| l["periodic"] == true && l["anti_parallel_exit"] == true));
    assert_eq!(code(&andreev(&["verify", "tfractal", "--x0", "1/4"])), 2);
    assert_eq!(code(&andreev(&["verify", "tfractal", "--p", "4"])), 2);
}

#[test]
fn verify_output_is_identical_across_execution_modes() {
    let dir = TempDir::new().unwrap();
    let table = make(&dir, "sq.json", &["square", "--andreev-sides", "1"]);
    for suite in ["jacobian", "closed-flow", "volume-sign"] {
        let t = path_str(&table);
        let par = andreev(&["verify", suite, "--table", t, "--samples", "40", "--seed", "2"]);
        let seq = andreev(&[
            "verify",
            suite,
            "--table",
            t,
            "--samples",
            "40",
            "--seed",
            "2",
            "--sequential",
        ]);
        let again = andreev(&["verify", suite, "--table", t, "--samples", "40", "--seed", "2"]);
        assert_eq!(par.stdout, seq.stdout, "{suite}");
        assert_eq!(par.stdout, again.stdout, "{suite}");
    }
}

#[test]
fn verify_configuration_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let plain = make(&dir, "plain.json", &["square"]);
    assert_eq!(code(&andreev(&["verify", "jacobian"])), 2);
    assert_eq!(code(&andreev(&["verify", "jacobian", "--table", path_str(&plain)])), 2);
    assert_eq!(code(&andreev(&["verify", "nonsense"])), 2);
}
