use std::path::Path;
use std::process::{Command, Output};

fn morevis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morevis"))
        .args(args)
        .env_remove("MOREVIS_JOBS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = morevis(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_layout_metrics_on_orbits() {
    let dir = tempfile::tempdir().unwrap();
    let (data, layout) = (dir.path().join("orbits.json"), dir.path().join("layout.json"));
    ok(&["synth", "--objects", "4", "--timesteps", "50", "--seed", "0", "--output", s(&data)]);
    ok(&["layout", "--input", s(&data), "--output", s(&layout)]);
    let out = ok(&["metrics", "--layout", s(&layout), "--dataset", s(&data)]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["spurious_intersection_error"], serde_json::json!(0.0));
    assert!(report["intersection_area_ratio_error"].as_f64().unwrap() >= 1.0 - 1e-9);

    // the document embeds the same report and follows the published schema
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&layout).unwrap()).unwrap();
    assert_eq!(doc["metrics"], report);
    let schema: serde_json::Value = serde_json::from_str(morevis_core::export::LAYOUT_SCHEMA).unwrap();
    assert!(jsonschema::validator_for(&schema).unwrap().is_valid(&doc));
}

#[test]
fn missing_input_names_the_path() {
    let out = morevis(&["layout", "--input", "/no/such/file.json", "--output", "/tmp/never.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/file.json"));
}

#[test]
fn render_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&["synth", "--timesteps", "20", "--output", s(&p("d.json"))]);
    ok(&["layout", "--input", s(&p("d.json")), "--output", s(&p("l.json"))]);
    for name in ["a.svg", "b.svg"] {
        ok(&["render", "--layout", s(&p("l.json")), "--dataset", s(&p("d.json")), "--svg", s(&p(name))]);
    }
    let (a, b) = (std::fs::read(p("a.svg")).unwrap(), std::fs::read(p("b.svg")).unwrap());
    assert!(a.starts_with(b"<svg"));
    assert_eq!(a, b);

    ok(&["render", "--layout", s(&p("l.json")), "--dataset", s(&p("d.json")), "--svg", s(&p("c.svg")), "--color", "attribute", "--attribute", "radius"]);
    let out = morevis(&["render", "--layout", s(&p("l.json")), "--dataset", s(&p("d.json")), "--svg", s(&p("c.svg")), "--color", "attribute"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn argument_errors_exit_with_one() {
    assert_eq!(morevis(&["layout", "--input", "x.json"]).status.code(), Some(1));
    assert_eq!(morevis(&["layout", "--input", "x", "--output", "y", "--wat"]).status.code(), Some(1));
    assert_eq!(morevis(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(morevis(&["--help"]).status.code(), Some(0));
    let out = morevis(&["layout", "--input", "x.json", "--output", "y.json", "--curve-order", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--curve-order"));
    assert_eq!(morevis(&["synth", "--scenario", "storms", "--objects", "3", "--output", "x.csv"]).status.code(), Some(1));
}

#[test]
fn jobs_fall_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (data, layout) = (dir.path().join("d.json"), dir.path().join("l.json"));
    ok(&["synth", "--timesteps", "5", "--output", s(&data)]);
    let run = |jobs: &str| {
        Command::new(env!("CARGO_BIN_EXE_morevis"))
            .args(["layout", "--input", s(&data), "--output", s(&layout)])
            .env("MOREVIS_JOBS", jobs)
            .output()
            .unwrap()
    };
    assert_eq!(run("0").status.code(), Some(1));
    assert!(run("2").status.success());
}

#[test]
fn csv_formats_are_detected() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&["synth", "--scenario", "storms", "--seed", "4", "--output", s(&p("storms.csv"))]);
    ok(&["layout", "--input", s(&p("storms.csv")), "--output", s(&p("storms.json")), "--no-metrics"]);
    ok(&["synth", "--scenario", "pedestrians", "--output", s(&p("peds.csv"))]);
    ok(&["layout", "--input", s(&p("peds.csv")), "--projection", "hilbert", "--output", s(&p("peds.json"))]);
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(p("peds.json")).unwrap()).unwrap();
    assert_eq!(doc["layout"]["config"]["projection"]["method"], "hilbert");
    let storms: serde_json::Value = serde_json::from_slice(&std::fs::read(p("storms.json")).unwrap()).unwrap();
    assert!(storms.get("metrics").is_none());
}

#[test]
fn timings_only_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&["synth", "--timesteps", "6", "--output", s(&p("d.json"))]);
    ok(&["layout", "--input", s(&p("d.json")), "--output", s(&p("plain.json"))]);
    ok(&["layout", "--input", s(&p("d.json")), "--output", s(&p("timed.json")), "--record-timings"]);
    let read = |n: &str| -> serde_json::Value { serde_json::from_slice(&std::fs::read(p(n)).unwrap()).unwrap() };
    assert!(read("plain.json")["layout"].get("runtimes").is_none());
    assert_eq!(read("timed.json")["layout"]["runtimes"].as_array().unwrap().len(), 6);
}
