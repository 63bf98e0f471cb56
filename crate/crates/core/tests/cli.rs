use std::collections::HashMap;
use std::fs;
use std::process::{Command, Output};

use dce_core::cli::{format_number, read_csv, sidecar_path};
use proptest::prelude::*;

fn dce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dce"))
        .args(args)
        .env_remove("DCE_TOL")
        .output()
        .expect("binary runs")
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    fn num(&self, row: &[String], name: &str) -> f64 {
        row[self.col(name)].parse().unwrap()
    }

    fn text<'a>(&self, row: &'a [String], name: &str) -> &'a str {
        &row[self.col(name)]
    }
}

fn run_ok(args: &[&str]) -> Table {
    let out = dce(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&String::from_utf8(out.stdout).unwrap());
    Table { header, rows }
}

#[test]
fn spectrum_map_properties() {
    let t = run_ok(&["spectrum", "--ratio", "1.01:6:12", "--l-max", "2", "--s-max", "3"]);
    assert_eq!(t.rows.len(), 12 * 3 * 3);
    for r in &t.rows {
        let (l, s) = (t.num(r, "l"), t.num(r, "s"));
        let v = t.num(r, "normalized");
        if l == 0.0 {
            assert!((v - s).abs() < 1e-12 * s, "{r:?}");
        } else {
            assert!(v > s, "{r:?}");
            if t.num(r, "ratio") == 1.01 {
                assert!(v / s - 1.0 < 1e-2, "{r:?}");
            }
        }
    }
}

#[test]
fn l1_ground_mode_tends_to_one() {
    let t = run_ok(&["spectrum", "--ratio", "1.001:1.5:6", "--l-max", "1", "--s-max", "1"]);
    let vals: Vec<f64> = t
        .rows
        .iter()
        .filter(|r| t.text(r, "l") == "1")
        .map(|r| t.num(r, "normalized"))
        .collect();
    assert!(vals.iter().all(|&v| v > 1.0));
    assert!(vals.windows(2).all(|w| w[1] > w[0]));
    assert!(vals[0] - 1.0 < 1e-4);
}

#[test]
fn empty_mode_range_is_empty_dataset() {
    for args in [
        &["spectrum", "--s-max", "0"][..],
        &["spectrum", "--ratio", "2:3:0"][..],
        &["coefficients", "--s-max", "0"][..],
        &["scan", "--s-max", "0"][..],
    ] {
        let t = run_ok(args);
        assert!(!t.header.is_empty());
        assert!(t.rows.is_empty(), "{args:?}");
    }
}

#[test]
fn coefficient_curves() {
    let t = run_ok(&["coefficients", "--ratio", "1.2:8:9", "--l-max", "1", "--s-max", "3"]);
    let mut by_key: HashMap<(String, String, String, String), f64> = HashMap::new();
    for r in &t.rows {
        let key = (
            t.text(r, "ratio").to_string(),
            t.text(r, "l").to_string(),
            t.text(r, "s_prime").to_string(),
            t.text(r, "alpha").to_string(),
        );
        by_key.insert(key, t.num(r, "scaled"));
        if t.text(r, "l") == "0" && t.text(r, "s_prime") == "1" {
            assert!((t.num(r, "scaled") - 0.5).abs() < 1e-8, "{r:?}");
        }
    }
    let mut l1_differs = false;
    for ((ratio, l, sp, alpha), v) in &by_key {
        if alpha != "i" {
            continue;
        }
        let o = by_key[&(ratio.clone(), l.clone(), sp.clone(), "o".to_string())];
        if l == "0" {
            assert!((v - o).abs() < 1e-8 * v.max(1e-12), "ratio {ratio} s' {sp}");
        } else if (v - o).abs() > 1e-3 * v {
            l1_differs = true;
        }
    }
    assert!(l1_differs);
}

#[test]
fn static_motion_creates_nothing() {
    let t = run_ok(&[
        "simulate", "--scenario", "b", "--eps", "0", "--t-final", "5", "--steps", "10", "--method", "both",
        "--l-max", "1", "--s-max", "2",
    ]);
    assert_eq!(t.rows.len(), 2 * 2 * 2 * 11);
    for r in &t.rows {
        assert_eq!(t.num(r, "n"), 0.0);
    }
}

fn fitted_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn resonant_outer_breathing_grows_quadratically() {
    let t = run_ok(&["simulate", "--scenario", "b", "--eps", "1e-4", "--l-max", "0", "--s-max", "1"]);
    let pts: Vec<(f64, f64)> = t.rows.iter().map(|r| (t.num(r, "t"), t.num(r, "n"))).collect();
    let tf = pts.last().unwrap().0;
    let decade: Vec<(f64, f64)> = pts.into_iter().filter(|p| p.0 >= tf / 10.0 * (1.0 - 1e-12)).collect();
    assert!(decade.len() > 50);
    let slope = fitted_slope(&decade);
    assert!((slope - 2.0).abs() <= 0.02, "slope {slope}");
}

#[test]
fn full_method_reports_unitarity() {
    let t = run_ok(&[
        "simulate", "--scenario", "b", "--eps", "1e-3", "--l-max", "0", "--s-max", "2", "--method", "both",
        "--steps", "5", "--truncation", "4",
    ]);
    for r in &t.rows {
        match t.text(r, "method") {
            "full" => assert!(t.num(r, "unitarity") <= 1e-6),
            "perturbative" => assert_eq!(t.text(r, "unitarity"), ""),
            m => panic!("method {m}"),
        }
    }
}

#[test]
fn numerical_budget_failure_exits_3() {
    let out = Command::new(env!("CARGO_BIN_EXE_dce"))
        .args(["simulate", "--scenario", "b", "--l-max", "0", "--s-max", "1", "--method", "full", "--steps", "2"])
        .env("DCE_TOL", "unitarity=1e-30,points_per_period=4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unitarity") && err.contains("dt"), "{err}");
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    for (args, field) in [
        (&["spectrum", "--r-inner=-1"][..], "--r-inner"),
        (&["spectrum", "--ratio", "0.5"][..], "--ratio"),
        (&["simulate", "--scenario", "a", "--eps", "0.5"][..], "--eps"),
        (&["simulate", "--scenario", "a", "--steps", "0"][..], "--steps"),
        (&["simulate", "--scenario", "a", "--truncation", "2", "--s-max", "3"][..], "--truncation"),
        (&["scan", "--eps", "0"][..], "--eps"),
    ] {
        let out = dce(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(field), "{args:?}");
    }
    assert_eq!(dce(&["spectrum", "--bogus"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_dce"))
        .args(["spectrum"])
        .env("DCE_TOL", "nonsense=1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DCE_TOL"));
}

#[test]
fn trajectory_velocity_mismatch_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.txt");
    let (eps, w) = (1e-3, 2.0 * std::f64::consts::PI);
    let mut text = String::from("# t r_i r_o v_i v_o\n");
    for k in 0..=200 {
        let t = k as f64 * 0.01;
        let ro = 2.0 * (1.0 + eps * (w * t).sin());
        let mut vo = 2.0 * eps * w * (w * t).cos();
        if k == 57 {
            vo *= -3.0;
        }
        text.push_str(&format!("{t} 1 {ro} 0 {vo}\n"));
    }
    fs::write(&path, &text).unwrap();
    let out = dce(&["simulate", "--trajectory", path.to_str().unwrap(), "--l-max", "0", "--s-max", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--trajectory") && err.contains("row 58"), "{err}");

    let fixed: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 58 {
                let t = 0.57f64;
                format!("{t} 1 {} 0 {}\n", 2.0 * (1.0 + eps * (w * t).sin()), 2.0 * eps * w * (w * t).cos())
            } else {
                format!("{l}\n")
            }
        })
        .collect();
    fs::write(&path, fixed).unwrap();
    let t = run_ok(&["simulate", "--trajectory", path.to_str().unwrap(), "--l-max", "0", "--s-max", "1", "--steps", "4"]);
    assert_eq!(t.rows.len(), 5);
    assert_eq!(t.text(&t.rows[0], "scenario"), "trajectory");
    assert!((t.num(&t.rows[4], "t") - 2.0).abs() < 1e-12);
    assert!(t.num(&t.rows[4], "n") > 0.0);
}

#[test]
fn scan_rows_follow_scenario_semantics() {
    let t = run_ok(&["scan", "--l-max", "0", "--s-max", "3"]);
    assert_eq!(t.rows.len(), 4 * 9);
    let keys: Vec<(String, u32, u32, u32)> = t
        .rows
        .iter()
        .map(|r| {
            (
                t.text(r, "scenario").to_string(),
                t.num(r, "l") as u32,
                t.num(r, "s") as u32,
                t.num(r, "s_prime") as u32,
            )
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let mut coef: HashMap<(u32, u32), HashMap<String, f64>> = HashMap::new();
    for (r, k) in t.rows.iter().zip(&keys) {
        coef.entry((k.2, k.3)).or_default().insert(k.0.clone(), t.num(r, "coefficient"));
    }
    for ((s, sp), m) in &coef {
        let (c, d) = (m["c"], m["d"]);
        let others = |x: &str| m.iter().filter(|(k, _)| k.as_str() != x).map(|(_, v)| *v).collect::<Vec<_>>();
        if (s + sp) % 2 == 0 {
            assert!(others("c").iter().all(|&v| c <= v * (1.0 + 1e-9)), "({s},{sp}) {m:?}");
            assert!(others("d").iter().all(|&v| d > v), "({s},{sp}) {m:?}");
        } else {
            assert!(others("d").iter().all(|&v| d <= v * (1.0 + 1e-9)), "({s},{sp}) {m:?}");
            assert!(others("c").iter().all(|&v| c > v), "({s},{sp}) {m:?}");
        }
    }
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("run{k}.csv"));
        let out = dce(&[
            "simulate", "--scenario", "d", "--l-max", "1", "--s-max", "2", "--steps", "20", "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let data = fs::read(&path).unwrap();
        let meta = fs::read_to_string(sidecar_path(&path)).unwrap();
        outputs.push((data, meta));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    assert_ne!(outputs[0].1, outputs[1].1, "sidecar echoes the output path");
    let meta: serde_json::Value = serde_json::from_str(&outputs[0].1).unwrap();
    assert_eq!(meta["config"]["command"], "simulate");
    assert_eq!(meta["resonance_prefactor_applied"], false);
    assert!(meta["config"]["tolerances"]["unitarity"].is_number());

    let a = dce(&["spectrum", "--ratio", "1.5:4:7", "--format", "json"]);
    let b = dce(&["spectrum", "--ratio", "1.5:4:7", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 7 * 3 * 3);
}

#[test]
fn rows_echo_inputs_for_rerun() {
    let t = run_ok(&["simulate", "--scenario", "c", "--eps", "2e-3", "--l-max", "1", "--s-max", "2", "--steps", "3"]);
    let r = &t.rows[t.rows.len() - 1];
    let rerun = run_ok(&[
        "simulate",
        "--scenario",
        t.text(r, "scenario"),
        "--eps",
        t.text(r, "eps_inner"),
        "--varpi",
        t.text(r, "varpi"),
        "--r-inner",
        t.text(r, "r_inner"),
        "--r-outer",
        t.text(r, "r_outer"),
        "--c",
        t.text(r, "c"),
        "--truncation",
        t.text(r, "truncation"),
        "--l-max",
        t.text(r, "l"),
        "--s-max",
        t.text(r, "s"),
        "--t-final",
        t.text(r, "t"),
        "--steps",
        "1",
    ]);
    let last = rerun.rows.last().unwrap();
    let (a, b) = (t.num(r, "n"), rerun.num(last, "n"));
    assert!((a - b).abs() <= 1e-9 * a, "{a} vs {b}");
}

proptest! {
    #[test]
    fn numbers_round_trip(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let back: f64 = format_number(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn csv_round_trip(values in proptest::collection::vec(-1e300f64..1e300, 1..20)) {
        use dce_core::cli::{Cell, Dataset};
        let mut d = Dataset::new(vec!["k", "x"]);
        for (i, v) in values.iter().enumerate() {
            d.rows.push(vec![Cell::Int(i as i64), Cell::Num(*v)]);
        }
        let (h, rows) = read_csv(&d.to_csv());
        prop_assert_eq!(h, vec!["k".to_string(), "x".to_string()]);
        for (row, v) in rows.iter().zip(&values) {
            prop_assert_eq!(row[1].parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
