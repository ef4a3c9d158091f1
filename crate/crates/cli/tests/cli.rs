use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lcf_core::constructions::thm1_crn;
use lcf_core::crn::format::{parse_json, parse_text};

fn lcf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcf"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .env_remove("LCF_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn synthesize_prints_counts() {
    let d = tempfile::tempdir().unwrap();
    let o = lcf(d.path(), &["synthesize", "--theorem", "1", "--K", "4", "--eps", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "species=6 reactions=116 max_order=7");

    let o = lcf(d.path(), &["synthesize", "--theorem", "2", "--K", "1", "--eps", "1", "--delta", "0.01"]);
    assert_eq!(stdout(&o).trim(), "species=21 reactions=66 max_order=2");

    let o = lcf(d.path(), &["synthesize", "--theorem", "3", "--K", "2"]);
    assert!(stdout(&o).contains("degree=10"), "{}", stdout(&o));
    assert!(d.path().join("thm3_K2.json").exists());
}

#[test]
fn synthesized_files_reparse_to_the_same_network() {
    let d = tempfile::tempdir().unwrap();
    assert!(lcf(d.path(), &["synthesize", "--theorem", "1", "--K", "2"]).status.success());
    let text = parse_text(&fs::read_to_string(d.path().join("thm1_K2.crn")).unwrap()).unwrap();
    let json = parse_json(&fs::read_to_string(d.path().join("thm1_K2.json")).unwrap()).unwrap();
    let direct = thm1_crn(2, 1.0).unwrap();
    assert_eq!(text, direct);
    assert_eq!(json, direct);
}

#[test]
fn synthesize_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(lcf(d.path(), &["synthesize", "--theorem", "2", "--K", "2"]).status.success());
    }
    for f in ["thm2_K2.crn", "thm2_K2.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn merge_policy_changes_reaction_count() {
    let d = tempfile::tempdir().unwrap();
    let o = lcf(d.path(), &["synthesize", "--theorem", "1", "--K", "1", "--merge-policy", "per-term"]);
    assert_eq!(stdout(&o).trim(), "species=3 reactions=30 max_order=7");
}

#[test]
fn strict_rejects_inexact_rates() {
    let d = tempfile::tempdir().unwrap();
    assert!(lcf(d.path(), &["synthesize", "--theorem", "1", "--K", "8"]).status.success());
    assert_eq!(lcf(d.path(), &["synthesize", "--theorem", "1", "--K", "8", "--strict"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_1() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["synthesize", "--theorem", "5", "--K", "1"][..],
        &["synthesize", "--theorem", "1"],
        &["synthesize", "--theorem", "1", "--K", "1", "--eps", "-1"],
        &["synthesize", "--theorem", "1", "--K", "3", "--centers", "1,1"],
        &["replicate-figure", "4c"],
        &["frobnicate"],
    ] {
        assert_eq!(lcf(d.path(), args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn verify_planar_passes_with_analytic_period() {
    let d = tempfile::tempdir().unwrap();
    let o = lcf(d.path(), &["verify", "--kind", "planar", "--K", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("verify_planar_K1.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["K"], 1);
    let period = report["cycles"][0]["period"].as_f64().unwrap();
    assert!((period - 13.0 * std::f64::consts::PI / 4.0).abs() < 1e-3);
    for key in ["index", "outer_flux", "inner_flux", "min_field_mag", "pass"] {
        assert!(report["annuli"][0].get(key).is_some(), "{key}");
    }
}

#[test]
fn verify_close_centers_fails_with_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let o = lcf(d.path(), &["verify", "--kind", "factored", "--K", "4", "--centers", "2,2,2,4,4,2,4,4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("verdict=fail"));
}

#[test]
fn env_var_overrides_output_dir() {
    let (flag, env) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o = Command::new(env!("CARGO_BIN_EXE_lcf"))
        .args(["synthesize", "--theorem", "1", "--K", "1", "--output-dir"])
        .arg(flag.path())
        .env("LCF_OUTPUT_DIR", env.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env.path().join("thm1_K1.crn").exists());
    assert!(!flag.path().join("thm1_K1.crn").exists());
}

#[test]
fn simulate_zero_horizon_writes_one_row() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("seeds.txt"), "9,8\n").unwrap();
    let seeds = d.path().join("seeds.txt");
    let o = lcf(d.path(), &["simulate", "--system", "planar", "--K", "1", "--t-end", "0", "--seeds", seeds.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.path().join("seed_000.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "t,X,Y");
}

#[test]
fn simulate_naive_with_c_2_marks_diverged_seeds() {
    let d = tempfile::tempdir().unwrap();
    let o = lcf(d.path(), &["simulate", "--system", "naive", "--K", "1", "--init-scale", "2"]);
    assert!(o.status.success());
    let index: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("index.json")).unwrap()).unwrap();
    let statuses: Vec<&str> = index["seeds"].as_array().unwrap().iter().map(|s| s["status"].as_str().unwrap()).collect();
    assert!(statuses.contains(&"Diverged"), "{statuses:?}");
}

#[test]
fn simulate_figure_3a_writes_20_trajectories() {
    let d = tempfile::tempdir().unwrap();
    let o = lcf(d.path(), &["simulate", "--figure", "3a"]);
    assert!(o.status.success());
    let csvs = fs::read_dir(d.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv")).count();
    assert_eq!(csvs, 20);
    let index: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("index.json")).unwrap()).unwrap();
    let centers = [(2.0, 2.0), (2.0, 6.0), (6.0, 2.0), (6.0, 6.0)];
    for s in index["seeds"].as_array().unwrap() {
        assert_eq!(s["status"], "ok");
        let f = s["final_state"].as_array().unwrap();
        let (x, y) = (f[0].as_f64().unwrap(), f[1].as_f64().unwrap());
        let near = centers.iter().map(|(a, b)| (x - a).hypot(y - b)).fold(f64::INFINITY, f64::min);
        assert!(near < 2.0, "final point ({x}, {y})");
    }
}

#[test]
fn replicate_figures_1a_and_1b() {
    let d = tempfile::tempdir().unwrap();
    let o = lcf(d.path(), &["replicate-figure", "1a"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("cycle_count=4"), "{}", stdout(&o));
    assert!(d.path().join("figure_1a/summary.json").exists());
    assert!(d.path().join("figure_1a/cycle_00.csv").exists());

    let o = lcf(d.path(), &["replicate-figure", "1b", "--summary-only"]);
    let out = stdout(&o);
    assert!(out.contains("cycle_count=1") && out.contains("fixed_point=(3.000000,3.000000)"), "{out}");
}
