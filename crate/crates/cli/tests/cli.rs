//! Exit codes, diagnostics and output shapes of the `fgrow` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn data(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel).display().to_string()
}

fn fgrow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgrow")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn growth_json_for_fibonacci() {
    let o = fgrow(&["growth", "--map", &data("maps/fib.map")]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["budgets"]["iterations"], 40);
    assert_eq!(v["input_sha256"].as_str().unwrap().len(), 64);
    let r = &v["report"];
    for key in ["kind", "certified", "rate", "degree", "lengths", "evidence"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["kind"], "Exponential");
    assert_eq!(r["certified"], true);
    assert!((r["rate"].as_f64().unwrap() - 1.6180).abs() < 1e-3);
}

#[test]
fn inline_map_matches_file() {
    let a = fgrow(&["growth", "--map", "a->ab;b->a"]);
    let b = fgrow(&["growth", "--map", &data("maps/fib.map")]);
    let ra: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let rb: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(ra["report"], rb["report"]);
}

#[test]
fn capped_growth_exits_two() {
    let o = fgrow(&["growth", "--map", &data("maps/noncert.map"), "--cap", "20"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["kind"], "Inconclusive");
}

#[test]
fn identity_presentation() {
    let o = fgrow(&["torus", "--map", &data("maps/id.map"), "--emit", "presentation"]);
    assert_eq!(stdout(&o), "⟨a,b,t | tat⁻¹=a, tbt⁻¹=b⟩\n");
}

#[test]
fn parse_errors_name_the_line() {
    let dir = std::env::temp_dir().join(format!("fgrow-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.map");
    std::fs::write(&bad, "a -> a b\nb => a\n").unwrap();
    let o = fgrow(&["growth", "--map", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bad.map:2:"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn non_automorphism_is_a_domain_error() {
    let o = fgrow(&["growth", "--map", "a->ab;b->b'a"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("not surjective"));
}

#[test]
fn unfixed_splitting_is_rejected() {
    let o = fgrow(&["split", "--map", &data("maps/fib.map"), "--gog", &data("splittings/free_ab.gog")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn induced_swap_splitting() {
    let o = fgrow(&["split", "--map", &data("maps/swap.map"), "--gog", &data("splittings/swap.gog"), "--induce", "--emit", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let e = &v["report"]["induced"]["edges"][0];
    assert_eq!(e["period"], 2);
    assert_eq!(e["stable"], "t^2");
    assert_eq!(v["report"]["induced"]["vertices"].as_array().unwrap().len(), 1);
}

#[test]
fn fold_reports_rank_and_index() {
    let o = fgrow(&["fold", "--gens", "a a, b, a b a'"]);
    let s = stdout(&o);
    assert!(s.contains("rank: 3\nindex: 2\n"), "{s}");
    let dot = stdout(&fgrow(&["fold", "--gens", "a a, b", "--emit", "dot"]));
    assert!(dot.contains("digraph stallings"));
}

#[test]
fn torus_budget_exhaustion_exits_two() {
    let o = fgrow(&["torus", "--map", &data("maps/fib.map"), "--gens", "a b' a'; t^2", "--rounds", "4", "--emit", "json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ball_cap_exits_two() {
    let o = fgrow(&["divergence", "--map", &data("maps/id.map"), "--radii", "6", "--cap", "1000"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_csv_and_svg() {
    let csv = stdout(&fgrow(&["divergence", "--map", &data("maps/id.map"), "--radii", "2,4", "--samples", "8", "--seed", "5"]));
    assert!(csv.contains("radius,sampled,reachable,mean_detour,low_confidence\n2,8,8,"), "{csv}");
    assert!(csv.contains("input-sha256"));
    let svg = stdout(&fgrow(&["divergence", "--map", &data("maps/id.map"), "--radii", "4,6", "--samples", "8", "--emit", "svg"]));
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["growth", "--map", &data("maps/noncert.map")];
    let one = Command::new(env!("CARGO_BIN_EXE_fgrow")).args(args).env("FGROW_THREADS", "1").output().unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_fgrow")).args(args).env("FGROW_THREADS", "8").output().unwrap();
    assert_eq!(one.stdout, many.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_fgrow")).args(args).env("FGROW_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
