use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const K33_ECONOMY: &str = r#"{"countries":["a","b","c","d","e","f"],"labor":[1,1,1,1,1,1],"epsilon":40,"t":0.75,
    "metric":{"kind":"bipartite","n":3,"m":3}}"#;

fn tradegeom(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradegeom"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

/// Temp dir holding the standard metric documents.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in [
        ("k33.json", &["bipartite", "--n", "3", "--m", "3"][..]),
        ("k42.json", &["bipartite", "--n", "4", "--m", "2"]),
        ("k32.json", &["bipartite", "--n", "3", "--m", "2"]),
        ("c51.json", &["cut", "--n", "6", "--set", "5"]),
        ("d6.json", &["discrete", "--n", "6"]),
        ("d4.json", &["discrete", "--n", "4"]),
        ("d1.json", &["discrete", "--n", "1"]),
    ] {
        let mut full = vec!["generate"];
        full.extend_from_slice(args);
        full.extend(["--out", name]);
        let o = tradegeom(dir.path(), &full);
        assert_eq!(code(&o), 0, "generate {name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    dir
}

fn distances(path: &Path) -> Vec<Vec<f64>> {
    let doc: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(doc["kind"], "explicit");
    serde_json::from_value(doc["distances"].clone()).unwrap()
}

#[test]
fn generate_writes_standard_families() {
    let dir = workspace();
    let k32 = distances(&dir.path().join("k32.json"));
    for i in 0..5 {
        for j in 0..5 {
            let expected = if i == j {
                0.0
            } else if (i < 3) == (j < 3) {
                2.0
            } else {
                1.0
            };
            assert_eq!(k32[i][j], expected, "({i},{j})");
        }
    }
    let d6 = distances(&dir.path().join("d6.json"));
    assert!(d6.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, &x)| x == f64::from(u8::from(i != j)))));
    let c51 = distances(&dir.path().join("c51.json"));
    for i in 0..6 {
        for j in 0..6 {
            let expected = f64::from(u8::from((i == 5) != (j == 5)));
            assert_eq!(c51[i][j], expected, "({i},{j})");
        }
    }
}

#[test]
fn generate_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["generate", "cut", "--n", "3", "--set", "7"][..],
        &["generate", "bipartite", "--n", "3"],
        &["generate", "graph", "--n", "3", "--edges", "0:1"],
        &["generate", "graph", "--n", "3", "--edges", "0:1:1"],
        &["generate", "discrete", "--n", "0"],
        &["generate", "simplex", "--n", "3"],
    ] {
        let o = tradegeom(dir.path(), args);
        assert_eq!(code(&o), 2, "{args:?}");
    }
}

#[test]
fn stability_reports_documented_lines() {
    let dir = workspace();
    let line = |f: &str| stdout(&tradegeom(dir.path(), &["stability", f]));
    assert!(line("k33.json").starts_with("stable=false index=0.500000000 witness_t="));
    assert_eq!(line("d6.json"), "stable=true index=1.0\n");
    assert_eq!(line("c51.json"), "stable=true index=1.0\n");
    assert!(line("k42.json").contains("index=0.577350269 "));
    assert!(line("k32.json").contains("index=0.707106781 "));
}

#[test]
fn stability_json_is_machine_readable() {
    let dir = workspace();
    let o = tradegeom(dir.path(), &["stability", "k33.json", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["stable"], false);
    assert!((v["index"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!(v["witness_t"].as_f64().unwrap() > 0.5);
}

#[test]
fn spectrum_matches_bipartite_closed_form() {
    let dir = workspace();
    let o = tradegeom(dir.path(), &["spectrum", "k33.json", "--t", "0.5", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let eig: Vec<f64> = serde_json::from_value(v["eigenvalues"].clone()).unwrap();
    // Φ = (1 - t²) I + t² J on each bloc, t between blocs
    let expected = [0.0, 0.75, 0.75, 0.75, 0.75, 3.0];
    for (a, b) in eig.iter().zip(expected) {
        assert!((a - b).abs() < 1e-10, "{eig:?}");
    }
    assert_eq!(v["psd"], true);
}

#[test]
fn malformed_input_exits_2() {
    let dir = workspace();
    fs::write(dir.path().join("broken.json"), "{\"kind\": \"explicit\", \"distances\": [[0,").unwrap();
    for args in [
        &["stability", "broken.json"][..],
        &["stability", "missing.json"],
        &["validate", "broken.json"],
        &["stability", "d6.json", "--grid-points", "0"],
        &["scan", "d6.json", "d6.json", "d6.json", "--r", "0"],
        &["spectrum", "d6.json", "--t", "1.5"],
    ] {
        assert_eq!(code(&tradegeom(dir.path(), args)), 2, "{args:?}");
    }
}

#[test]
fn invalid_metrics_exit_3() {
    let dir = workspace();
    let p = dir.path();
    fs::write(p.join("tri.json"), r#"{"kind":"explicit","distances":[[0,1,5],[1,0,1],[5,1,0]]}"#).unwrap();
    fs::write(p.join("asym.json"), r#"{"kind":"explicit","distances":[[0,1],[2,0]]}"#).unwrap();
    fs::write(p.join("neg.json"), r#"{"kind":"explicit","distances":[[0,-1],[-1,0]]}"#).unwrap();
    for f in ["tri.json", "asym.json", "neg.json"] {
        assert_eq!(code(&tradegeom(p, &["validate", f])), 3, "{f}");
        assert_eq!(code(&tradegeom(p, &["stability", f])), 3, "{f}");
    }
    assert_eq!(code(&tradegeom(p, &["scan", "d6.json", "d4.json", "d6.json", "--r", "2"])), 3);
}

#[test]
fn scenario_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let cases = [
        // both parameterisations
        (r#"{"countries":["a","b"],"labor":[1,1],"epsilon":5,"sigma":3,"t":0.5,"metric":{"kind":"discrete","n":2}}"#, 2),
        // neither
        (r#"{"countries":["a","b"],"labor":[1,1],"t":0.5,"metric":{"kind":"discrete","n":2}}"#, 2),
        (r#"{"countries":["a","b"],"labor":[1,1],"epsilon":5,"t":0.5,"metric":{"kind":"discrete","n":3}}"#, 3),
        (r#"{"countries":["a","b"],"labor":[1],"epsilon":5,"t":0.5,"metric":{"kind":"discrete","n":2}}"#, 3),
        (r#"{"countries":["a","a"],"labor":[1,1],"epsilon":5,"t":0.5,"metric":{"kind":"discrete","n":2}}"#, 3),
        (r#"{"countries":["a","b"],"labor":[1,1],"epsilon":0.5,"t":0.5,"metric":{"kind":"discrete","n":2}}"#, 3),
        (r#"{"countries":["a","b"],"labor":[1,1],"epsilon":5,"t":1.5,"metric":{"kind":"discrete","n":2}}"#, 3),
    ];
    for (k, (doc, expected)) in cases.iter().enumerate() {
        let name = format!("s{k}.json");
        fs::write(p.join(&name), doc).unwrap();
        assert_eq!(code(&tradegeom(p, &["validate", &name])), *expected, "{doc}");
        assert_eq!(code(&tradegeom(p, &["equilibrium", &name])), *expected, "{doc}");
    }
}

#[test]
fn embed_outputs_and_failures() {
    let dir = workspace();
    let p = dir.path();

    let o = tradegeom(p, &["embed", "d4.json", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let pts: Vec<Vec<f64>> = serde_json::from_value(v["points"].clone()).unwrap();
    assert_eq!(pts.len(), 4);
    for i in 0..4 {
        for j in 0..4 {
            let d2: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!((d2 - f64::from(u8::from(i != j))).abs() < 1e-10);
        }
    }

    let o = tradegeom(p, &["embed", "d1.json"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<f64> = stdout(&o).trim().split(',').map(|x| x.parse().unwrap()).collect();
    assert!(rows.iter().all(|&x| x == 0.0));

    let o = tradegeom(p, &["embed", "k33.json"]);
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("negative type"));
}

#[test]
fn perverse_economy_has_three_equilibria() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("econ.json"), K33_ECONOMY).unwrap();
    fs::write(p.join("econ30.json"), K33_ECONOMY.replace("\"epsilon\":40", "\"epsilon\":30")).unwrap();

    let count = |args: &[&str]| -> u64 {
        let o = tradegeom(p, args);
        assert_eq!(code(&o), 0, "{args:?}");
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        v["count"].as_u64().unwrap()
    };
    assert_eq!(count(&["equilibrium", "econ.json", "--json"]), 3);
    assert_eq!(count(&["equilibrium", "econ.json", "--json", "--analytic"]), 3);
    assert_eq!(count(&["equilibrium", "econ30.json", "--json"]), 1);
    assert_eq!(count(&["equilibrium", "econ30.json", "--json", "--analytic"]), 1);
}

#[test]
fn single_country_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("one.json"),
        r#"{"countries":["solo"],"labor":[1],"sigma":5,"t":0.5,"metric":{"kind":"discrete","n":1}}"#,
    )
    .unwrap();
    let o = tradegeom(p, &["equilibrium", "one.json", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["count"], 1);
    assert!((v["equilibria"][0]["v"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn unreachable_tolerance_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("econ.json"), K33_ECONOMY).unwrap();
    let o = tradegeom(p, &["equilibrium", "econ.json", "--tol", "1e-300", "--starts", "3"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).is_empty());
}

#[test]
fn scan_writes_csv_and_svg() {
    let dir = workspace();
    let p = dir.path();
    let o = tradegeom(p, &["scan", "c51.json", "k42.json", "k33.json", "--r", "10", "--svg", "fig.svg", "--out", "fig.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(p.join("fig.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "alpha,beta,gamma,stable,index");
    assert_eq!(lines.len(), 1 + 11 * 12 / 2);
    // first row is the pure m3 vertex (K33), last row the pure m1 vertex (C51)
    assert!(lines[1].starts_with("0.00000000,0.00000000,1.00000000,0,"));
    assert!(lines.last().unwrap().starts_with("1.00000000,0.00000000,0.00000000,1,"));

    let svg = fs::read_to_string(p.join("fig.svg")).unwrap();
    assert!(svg.contains(">c51<") && svg.contains(">k42<") && svg.contains(">k33<"));
    assert!(svg.contains("blue") && svg.contains("red"));
}

#[test]
fn identical_stable_vertices_give_all_blue() {
    let dir = workspace();
    let o = tradegeom(dir.path(), &["scan", "d6.json", "d6.json", "d6.json", "--r", "6"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.lines().skip(1).all(|l| l.split(',').nth(3) == Some("1")));
}

#[test]
fn failed_runs_leave_no_output_file() {
    let dir = workspace();
    let p = dir.path();
    fs::write(p.join("econ.json"), K33_ECONOMY).unwrap();
    let runs = [
        &["generate", "cut", "--n", "3", "--set", "9", "--out", "bad.json"][..],
        &["embed", "k33.json", "--out", "bad.json"],
        &["equilibrium", "econ.json", "--tol", "1e-300", "--starts", "2", "--out", "bad.json"],
        &["scan", "d6.json", "d4.json", "d6.json", "--out", "bad.json"],
    ];
    for args in runs {
        assert_ne!(code(&tradegeom(p, args)), 0, "{args:?}");
        assert!(!p.join("bad.json").exists(), "{args:?}");
    }
    let leftovers: Vec<_> = fs::read_dir(p)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| !n.ends_with(".json"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = workspace();
    let p = dir.path();
    fs::write(p.join("econ.json"), K33_ECONOMY).unwrap();
    for args in [
        &["equilibrium", "econ.json", "--seed", "11", "--json"][..],
        &["equilibrium", "econ.json", "--seed", "11", "--starts", "20"],
        &["scan", "k42.json", "c51.json", "d6.json", "--r", "12"],
        &["embed", "c51.json"],
        &["spectrum", "k42.json", "--t", "0.3"],
    ] {
        let a = tradegeom(p, args);
        let b = tradegeom(p, args);
        assert_eq!(code(&a), 0, "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn out_flag_matches_stdout() {
    let dir = workspace();
    let p = dir.path();
    let printed = stdout(&tradegeom(p, &["stability", "k42.json"]));
    assert_eq!(code(&tradegeom(p, &["stability", "k42.json", "--out", "report.txt"])), 0);
    assert_eq!(fs::read_to_string(p.join("report.txt")).unwrap(), printed);
}
