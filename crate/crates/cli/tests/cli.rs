use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use multioracle::catalog::example_game;
use multioracle::gamefile::parse_game;
use multioracle::oracle::OracleConfig;
use multioracle::space::DEDUP_RADIUS;
use multioracle::{certify_epsilon, MixedStrategy, Profile, PureStrategy};
use serde_json::Value;

fn moa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moa")).args(args).output().expect("moa runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn schema(v: &Value, path: &str, out: &mut BTreeSet<String>) {
    let kind = match v {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    };
    out.insert(format!("{path}: {kind}"));
    match v {
        Value::Array(items) => items.iter().for_each(|x| schema(x, &format!("{path}[]"), out)),
        Value::Object(map) => map.iter().for_each(|(k, x)| schema(x, &format!("{path}.{k}"), out)),
        _ => {}
    }
}

const BAD_GAME: &str = r#"players = 2
zero_sum = true

[[spaces]]
type = "box"
lower = [-1.0]
upper = [1.0]

[[spaces]]
type = "box"
lower = [-1.0]
upper = [1.0]

[[utilities]]
type = "polynomial"

[[utilities.terms]]
coef = -1.0
powers = [[0], [1]]

[[utilities.terms]]
coef = 2.0
powers = [[1, 0], [2]]

[[utilities]]
type = "polynomial"

[[utilities.terms]]
coef = -2.0
powers = [[1], [2]]
"#;

#[test]
fn example_one_converges() {
    let out = moa(&["solve", "--example", "1", "--epsilon", "1e-3", "--seed", "7", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let pay = floats(&v["payoffs"]);
    assert!((pay[0] + 0.47).abs() < 0.02 && (pay[1] - 0.47).abs() < 0.02, "{pay:?}");
    assert_eq!(v["terminated"], "Converged");
}

#[test]
fn text_summary_names_every_player() {
    let out = moa(&["solve", "--example", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Converged"));
    for p in 1..=3 {
        assert!(text.contains(&format!("player {p}: payoff")));
    }
}

#[test]
fn malformed_game_file_is_rejected_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, BAD_GAME).unwrap();
    let out = moa(&["solve", "--game", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 21"), "{err}");
    assert!(err.contains("term 2"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_game_file_and_bad_example_fail() {
    assert_eq!(moa(&["solve", "--game", "/nonexistent/game.toml"]).status.code(), Some(1));
    assert_eq!(moa(&["solve", "--example", "9"]).status.code(), Some(1));
    assert_eq!(moa(&["solve", "--example", "1", "--epsilon", "-1"]).status.code(), Some(1));
}

#[test]
fn one_iteration_is_not_enough() {
    let out = moa(&["solve", "--example", "1", "--max-iter", "1", "--json"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json_of(&out);
    assert_eq!(v["terminated"], "MaxIterations");
    assert!(v["epsilon_certified"].as_f64().unwrap() > 1e-3);
}

#[test]
fn summary_schema_matches_golden_file() {
    let out = moa(&["solve", "--example", "2", "--wasserstein", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let mut found = BTreeSet::new();
    schema(&json_of(&out), "$", &mut found);
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/summary_schema.txt");
    let golden: BTreeSet<String> =
        std::fs::read_to_string(golden_path).unwrap().lines().map(String::from).collect();
    let actual: Vec<&String> = found.iter().collect();
    assert_eq!(found, golden, "actual schema:\n{actual:#?}");
}

#[test]
fn trace_has_one_row_per_iteration_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = moa(&["solve", "--example", "2", "--wasserstein", "--json", "--trace", trace.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let text = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let width = lines[0].split(',').count();
    assert!(lines.iter().all(|l| l.split(',').count() == width));
    let rows = lines.iter().filter(|l| l.starts_with("iteration,")).count();
    assert_eq!(rows as u64, v["iterations"].as_u64().unwrap());
    let summary: Vec<&str> = lines.last().unwrap().split(',').collect();
    assert_eq!(summary[0], "summary");
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| *h == "max_instability").unwrap();
    let cert: f64 = summary[col].parse().unwrap();
    assert_eq!(cert, v["epsilon_certified"].as_f64().unwrap());
    let mantissa = summary[col].split('e').next().unwrap().replace(['.', '-'], "");
    assert!(mantissa.len() >= 12);
}

#[test]
fn reported_epsilon_matches_independent_certification() {
    for id in [1usize, 2, 5] {
        let out = moa(&["solve", "--example", &id.to_string(), "--json"]);
        let v = json_of(&out);
        let game = example_game(id).unwrap();
        let strategies: Vec<MixedStrategy> = v["players"]
            .as_array()
            .unwrap()
            .iter()
            .zip(game.spaces())
            .map(|(p, space)| {
                let support = p["support"].as_array().unwrap();
                let atoms = support.iter().map(|a| PureStrategy(floats(&a["atom"]))).collect();
                let weights = support.iter().map(|a| a["weight"].as_f64().unwrap()).collect();
                MixedStrategy::canonicalize(atoms, weights, space, DEDUP_RADIUS).unwrap()
            })
            .collect();
        let profile = Profile::new(strategies);
        let check = certify_epsilon(&game, &profile, &OracleConfig::default(), 0).unwrap();
        let reported = v["epsilon_certified"].as_f64().unwrap();
        assert!((check - reported).abs() <= 1e-9, "example {id}: {check} vs {reported}");
    }
}

#[test]
fn solves_are_reproducible() {
    let run = || {
        let mut v = json_of(&moa(&["solve", "--example", "3", "--seed", "11", "--wasserstein", "--json"]));
        v.as_object_mut().unwrap().remove("runtime_ms");
        v
    };
    let sequential = {
        let mut v =
            json_of(&moa(&["solve", "--example", "3", "--seed", "11", "--wasserstein", "--json", "--sequential"]));
        v.as_object_mut().unwrap().remove("runtime_ms");
        v
    };
    let first = run();
    assert_eq!(first, run());
    assert_eq!(first, sequential);
}

#[test]
fn metric_between_point_masses() {
    let out = moa(&["metric", "--space", "box:-1:1", "--p", "0.2:1", "--q", "-0.3:1", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!((v["wasserstein"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["total_variation"].as_f64().unwrap(), 1.0);
    assert!((v["lower_bound"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["upper_bound"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn metric_of_identical_measures_is_zero() {
    let out = moa(&["metric", "--space", "box:0:1", "--p", "0:0.3;1:0.7", "--q", "1:0.7;0:0.3", "--json"]);
    let v = json_of(&out);
    for key in ["wasserstein", "total_variation", "lower_bound", "upper_bound"] {
        assert!(v[key].as_f64().unwrap().abs() < 1e-12, "{key}");
    }
}

#[test]
fn metric_with_plan() {
    let out = moa(&["metric", "--space", "box:0:1", "--p", "0:0.6;1:0.4", "--q", "0:0.4;1:0.6", "--plan", "--json"]);
    let v = json_of(&out);
    assert!((v["wasserstein"].as_f64().unwrap() - 0.2).abs() < 1e-9);
    let mass: f64 = v["plan"].as_array().unwrap().iter().map(|e| e["mass"].as_f64().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-9);
    let text = String::from_utf8(moa(&["metric", "--space", "box:0:1", "--p", "0:0.6;1:0.4", "--q", "0:0.4;1:0.6"]).stdout)
        .unwrap();
    assert!(text.starts_with("wasserstein"));
}

#[test]
fn metric_reads_measures_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.txt");
    std::fs::write(&p, "# two atoms\n-3:0.5\n3:0.5\n").unwrap();
    let arg = format!("@{}", p.display());
    let out = moa(&["metric", "--space", "circle", "--p", &arg, "--q", "3:1", "--json"]);
    let v = json_of(&out);
    let expect = 0.5 * (2.0 * std::f64::consts::PI - 6.0);
    assert!((v["wasserstein"].as_f64().unwrap() - expect).abs() < 1e-9);
}

#[test]
fn malformed_measures_fail() {
    for bad in ["0.2", "0.2:x", "5:1", ""] {
        let out = moa(&["metric", "--space", "box:-1:1", "--p", bad, "--q", "0:1"]);
        assert_eq!(out.status.code(), Some(1), "{bad}");
    }
    assert_eq!(moa(&["metric", "--space", "torus", "--p", "0:1", "--q", "0:1"]).status.code(), Some(1));
}

#[test]
fn reproduce_examples() {
    let out = moa(&["reproduce", "--suite", "examples", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 5);
    assert!(runs.iter().all(|r| r["terminated"] == "Converged"));
    assert_eq!(v["aggregate"]["converged"], 5);
}

#[test]
fn reproduce_polymatrix_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = moa(&["reproduce", "--suite", "polymatrix", "--samples", "4", "--seed", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    for (k, r) in runs.iter().enumerate() {
        assert_eq!(r["seed"].as_u64().unwrap(), 1 + k as u64);
        assert!(r["certified_check"].as_f64().unwrap() <= 0.01);
    }
    assert!(v["aggregate"]["mean_iterations"].as_f64().unwrap() > 0.0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("mean iterations"));
}

#[test]
fn reproduce_polynomial_reports_runtime() {
    let out = moa(&["reproduce", "--suite", "polynomial", "--samples", "3", "--json", "--sequential"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!(v["runs"].as_array().unwrap().iter().all(|r| r["runtime_ms"].as_f64().unwrap() >= 0.0));
}

#[test]
fn exported_examples_parse_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    for id in 1..=5usize {
        let out = moa(&["export", "--example", &id.to_string()]);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(parse_game(&text).unwrap(), example_game(id).unwrap());
        let path = dir.path().join(format!("example{id}.toml"));
        std::fs::write(&path, &text).unwrap();
        let from_file = json_of(&moa(&["solve", "--game", path.to_str().unwrap(), "--json"]));
        let built_in = json_of(&moa(&["solve", "--example", &id.to_string(), "--json"]));
        assert_eq!(from_file["payoffs"], built_in["payoffs"]);
    }
}
