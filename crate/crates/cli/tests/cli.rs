mod common;

use std::collections::BTreeSet;
use std::fs::File;

use common::{float, json, pbrp, run_config, snapshot, write_config};
use pbrp_core::driver::{DriverSpec, Grid, ScalarPath};
use pbrp_core::forest::enumerate_forests;
use pbrp_core::hopf::coproduct_mkw;
use pbrp_core::io::{read_rough_path, COPRODUCT_HEADER, ROUGH_PATH_HEADER};
use pbrp_core::rough_path::RoughPath;
use pbrp_core::PlanarForest;
use serde_json::json;
use tempfile::tempdir;

fn base_ito() -> serde_json::Value {
    json!({
        "name": "t",
        "depth": 2,
        "grid": { "cells": 256, "substeps": 4 },
        "driver": { "paths": [{ "kind": "polynomial", "coefficients": [0.0, 1.0] }] },
        "function": { "kind": "builtin", "name": "square" },
        "theorems": ["simple-N2"],
        "strides": [8, 4, 2, 1]
    })
}

fn code_for(command: &str, cfg: serde_json::Value) -> i32 {
    let dir = tempdir().unwrap();
    let p = write_config(dir.path(), "c.json", &cfg);
    run_config(command, p.to_str().unwrap(), &dir.path().join("out")).code
}

#[test]
fn hopf_selftest_default_and_minimal() {
    let dir = tempdir().unwrap();
    let r = pbrp(&["hopf-selftest", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let s = json(dir.path().join("hopf-d2-n3/hopf_selftest.json"));
    assert_eq!(s["displayed_vectors"]["matched"], 5);
    assert_eq!(s["displayed_vectors"]["checked"], 5);
    assert_eq!(s["pass"], true);
    assert!(!dir.path().join("hopf-d2-n3/hopf_selftest_failure.csv").exists());
    let r = run_config("hopf-selftest", "bundled:hopf-minimal", dir.path());
    assert_eq!(r.code, 0);
    assert_eq!(json(dir.path().join("hopf-d1-n2/hopf_selftest.json"))["alphabet"].as_array().unwrap().len(), 2);
}

#[test]
fn corrupted_coproduct_table_fails() {
    let dir = tempdir().unwrap();
    assert_eq!(pbrp(&["dump", "--out", dir.path().to_str().unwrap()]).code, 0);
    let table = dir.path().join("dump-d2-n3/coproduct.csv");
    let good = write_config(dir.path(), "good.json", &json!({"name": "good", "depth": 3, "coproduct_table": table}));
    assert_eq!(run_config("hopf-selftest", good.to_str().unwrap(), &dir.path().join("o")).code, 0);

    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let target = lines
        .iter()
        .position(|l| l.starts_with("[•2]1,•2,•1,"))
        .expect("cut row present");
    lines[target] = "[•2]1,•2,•1,2".into();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let cfg = write_config(dir.path(), "bad.json", &json!({"name": "bad", "depth": 3, "coproduct_table": "bad.csv"}));
    let r = run_config("hopf-selftest", cfg.to_str().unwrap(), &dir.path().join("o"));
    assert_eq!(r.code, 1);
    let fail = std::fs::read_to_string(dir.path().join("o/bad/hopf_selftest_failure.csv")).unwrap();
    assert!(fail.starts_with("identity,subject,left,right,expected,actual\n"));
    assert_eq!(fail.lines().count(), 2);
    assert_eq!(json(dir.path().join("o/bad/hopf_selftest.json"))["pass"], false);
}

#[test]
fn coproduct_dump_covers_51_forests() {
    let dir = tempdir().unwrap();
    assert_eq!(pbrp(&["dump", "--out", dir.path().to_str().unwrap()]).code, 0);
    let mut r = csv::Reader::from_path(dir.path().join("dump-d2-n3/coproduct.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), COPRODUCT_HEADER);
    let mut keys = BTreeSet::new();
    let mut rows = 0;
    for rec in r.records() {
        keys.insert(rec.unwrap()[0].to_string());
        rows += 1;
    }
    let forests = enumerate_forests(2, 3).unwrap();
    assert_eq!(keys.len(), 51);
    assert_eq!(rows, forests.iter().map(|f| coproduct_mkw::<i64>(f).len()).sum::<usize>());
    let summary = json(dir.path().join("dump-d2-n3/dump.json"));
    assert_eq!(summary["format_version"], 1);
    assert_eq!(summary["files"][0]["rows"], rows);
}

#[test]
fn empty_grid_dump_is_header_only() {
    let dir = tempdir().unwrap();
    assert_eq!(run_config("dump", "bundled:dump-empty", dir.path()).code, 0);
    let text = std::fs::read_to_string(dir.path().join("dump-empty-grid/rough_path.csv")).unwrap();
    assert_eq!(text, format!("{}\n", ROUGH_PATH_HEADER.join(",")));
}

#[test]
fn rough_path_round_trip() {
    let dir = tempdir().unwrap();
    assert_eq!(pbrp(&["dump", "--out", dir.path().to_str().unwrap()]).code, 0);
    let back: RoughPath<f64> = read_rough_path(File::open(dir.path().join("dump-d2-n3/rough_path.csv")).unwrap()).unwrap();
    let spec = DriverSpec::from_paths(vec![
        ScalarPath::Trig { offset: 0.0, modes: vec![(1.0, 3.0, 0.0)] },
        ScalarPath::Polynomial(vec![0.0, 0.5, 1.0]),
    ])
    .with_intensity(PlanarForest::parse("[•2]1").unwrap().as_tree().unwrap().clone(), ScalarPath::linear(0.3));
    let x = RoughPath::lift(&spec, 3, &Grid::uniform(1.0, 16).unwrap(), 16).unwrap();
    assert_eq!(back.cells(), 16);
    for f in enumerate_forests(2, 3).unwrap() {
        for (a, b) in [(0, 16), (3, 11), (7, 8)] {
            assert!((back.eval(a, b, &f).unwrap() - x.eval(a, b, &f).unwrap()).abs() < 1e-15, "{f}");
        }
    }
}

#[test]
fn bundled_ito_examples() {
    let dir = tempdir().unwrap();
    let r = run_config("ito", "bundled:simple-n2-analytic", dir.path());
    assert_eq!(r.code, 0, "{}", r.stdout);
    let rep = json(dir.path().join("simple-n2-analytic/ito_simple-N2.json"));
    assert!(rep["residuals"].as_array().unwrap().last().unwrap().as_f64().unwrap() < 1e-6);
    let table = std::fs::read_to_string(dir.path().join("simple-n2-analytic/ito_simple-N2.csv")).unwrap();
    assert!(table.starts_with("mesh,residual,order\n"));
    assert_eq!(table.lines().count(), 8);
    let r = run_config("ito", "bundled:general-n3-smooth", dir.path());
    assert_eq!(r.code, 0);
    assert_eq!(json(dir.path().join("general-n3-smooth/ito.json"))[0]["verdict"], true);
}

#[test]
fn config_rejections_exit_64() {
    let mut c = base_ito();
    assert_eq!(code_for("ito", c.clone()), 0);
    c["depth"] = json!(4);
    assert_eq!(code_for("ito", c.clone()), 64);
    let mut c = base_ito();
    c["depth"] = json!(3);
    c["theorems"] = json!(["simple-N3"]);
    c["alpha"] = json!(0.4);
    assert_eq!(code_for("ito", c.clone()), 64);
    c["alpha"] = json!(0.25);
    assert_eq!(code_for("ito", c.clone()), 64);
    c["alpha"] = json!(0.3);
    assert_eq!(code_for("ito", c.clone()), 0);
    let mut c = base_ito();
    c["alpha"] = json!(1.0 / 3.0);
    assert_eq!(code_for("ito", c), 64);
    let mut c = base_ito();
    c["theorems"] = json!(["simple-N3"]);
    assert_eq!(code_for("ito", c), 64);
    let mut c = base_ito();
    c["strides"] = json!([4, 2, 1]);
    assert_eq!(code_for("ito", c), 64);
    let mut c = base_ito();
    c["strides"] = json!([12, 6, 3, 1]);
    assert_eq!(code_for("ito", c), 64);
    let mut c = base_ito();
    c["strides"] = json!([16, 4, 2, 1]);
    assert_eq!(code_for("ito", c), 64);
    let mut c = base_ito();
    c["grid"]["cells"] = json!(100);
    assert_eq!(code_for("ito", c), 64);
    let mut c = base_ito();
    c["typo"] = json!(1);
    assert_eq!(code_for("ito", c), 64);
    let mut c = base_ito();
    c["command"] = json!("rde");
    assert_eq!(code_for("ito", c), 64);
    let mut c = base_ito();
    c["driver"]["intensities"] = json!([{ "tree": "•1•1", "path": { "kind": "polynomial", "coefficients": [0.0, 1.0] } }]);
    assert_eq!(code_for("ito", c), 64);
    let mut c = base_ito();
    c["theorems"] = json!(["general-N2"]);
    assert_eq!(code_for("ito", c), 64);
    assert_eq!(code_for("ito", json!({ "experiments": [] })), 64);
    assert_eq!(code_for("ito", json!("not an object")), 64);
    assert_eq!(pbrp(&["ito"]).code, 64);
    assert_eq!(pbrp(&["ito", "--jobs", "0", "--config", "bundled:simple-n2-analytic"]).code, 64);
    assert_eq!(pbrp(&["nonsense"]).code, 64);
    assert_eq!(pbrp(&["ito", "--config", "bundled:nope"]).code, 64);
}

#[test]
fn io_errors_exit_3() {
    let dir = tempdir().unwrap();
    assert_eq!(pbrp(&["ito", "--config", dir.path().join("missing.json").to_str().unwrap()]).code, 3);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert_eq!(run_config("hopf-selftest", "bundled:hopf-minimal", &blocker).code, 3);
    let cfg = write_config(dir.path(), "c.json", &json!({"name": "m", "depth": 2, "coproduct_table": "absent.csv"}));
    assert_eq!(run_config("hopf-selftest", cfg.to_str().unwrap(), &dir.path().join("o")).code, 3);
}

#[test]
fn divergence_exits_2() {
    let cfg = json!({
        "name": "blowup",
        "depth": 2,
        "grid": { "cells": 64 },
        "driver": { "paths": [{ "kind": "polynomial", "coefficients": [0.0, 1.0] }] },
        "fields": [{ "kind": "builtin", "name": "cube" }],
        "xi": [5.0],
        "function": { "kind": "builtin", "name": "square" },
        "theorems": ["general-N2"]
    });
    assert_eq!(code_for("rde", cfg.clone()), 2);
    assert_eq!(code_for("ito", cfg), 2);
}

#[test]
fn verdict_failure_exits_1() {
    let cfg = json!({
        "name": "literal",
        "depth": 3,
        "grid": { "cells": 512, "substeps": 4 },
        "driver": {
            "paths": [
                { "kind": "trig", "modes": [[1.0, 3.0, 0.0]] },
                { "kind": "polynomial", "coefficients": [0.0, 0.5, 1.0] }
            ],
            "intensities": [{ "tree": "[•1•2]1", "path": { "kind": "polynomial", "coefficients": [0.0, 0.2] } }]
        },
        "fields": [
            { "kind": "expr", "components": [{ "sin": { "var": 1 } }, { "const": 0.5 }] },
            { "kind": "expr", "components": [{ "var": 0 }, { "cos": { "var": 0 } }] }
        ],
        "xi": [0.2, 0.2],
        "function": { "kind": "builtin", "name": "product" },
        "theorems": ["general-N3"],
        "cbar": "literal"
    });
    assert_eq!(code_for("ito", cfg), 1);
}

#[test]
fn suite_outcomes_and_parallel_determinism() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    let ra = pbrp(&["rde", "--config", "bundled:rde-suite", "--jobs", "1", "--out", a.path().to_str().unwrap()]);
    let rb = pbrp(&["rde", "--config", "bundled:rde-suite", "--jobs", "4", "--out", b.path().to_str().unwrap()]);
    assert_eq!((ra.code, rb.code), (0, 0));
    assert_eq!(ra.stdout, rb.stdout);
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
    let s = json(a.path().join("summary.json"));
    assert_eq!(s["experiments"].as_array().unwrap().len(), 4);
    assert!(s["experiments"].as_array().unwrap().iter().all(|e| e["status"] == "pass"));
    let rde = json(a.path().join("exp-n2/rde.json"));
    assert!((float(&rde["terminal"][0]) - 1f64.exp()).abs() < 1e-4);
}

#[test]
fn lift_and_integrate_reports() {
    let dir = tempdir().unwrap();
    assert_eq!(run_config("lift", "bundled:lift-suite", dir.path()).code, 0);
    let l = json(dir.path().join("poly-n3/lift.json"));
    assert_eq!(l["basis"], 51);
    assert!(float(&l["chen_max"]) < 1e-10);
    let holder = l["holder"].as_array().unwrap();
    assert_eq!(holder.len(), 50);
    assert!(dir.path().join("poly-n3/rough_path.csv").exists());
    assert_eq!(run_config("integrate", "bundled:integrate-suite", dir.path()).code, 0);
    let i = json(dir.path().join("n2-trig-sin/integrate.json"));
    assert_eq!(i["integrals"].as_array().unwrap().len(), 2);
}
