use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn snowglyph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snowglyph"))
        .args(args)
        .env_remove("SNOWGLYPH_DATA")
        .env_remove("SNOWGLYPH_CONFIG")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth_into(dir: &Path) -> std::path::PathBuf {
    let out = snowglyph(&["synth", "--seed", "42", "--out", s(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("datasets/synth-42")
}

#[test]
fn validate_clean_files() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = synth_into(tmp.path());
    let out = snowglyph(&[
        "validate",
        s(&ds.join("reports.jsonl")),
        s(&ds.join("tenures.geojson")),
        s(&ds.join("weather.csv")),
    ]);
    assert!(out.status.success());
    assert!(out.stderr.is_empty(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_one_bad_record() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = synth_into(tmp.path());
    let text = fs::read_to_string(ds.join("reports.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[3] = lines[3].replace("\"size\":", "\"size\":7.5,\"x\":");
    let bad = tmp.path().join("bad.jsonl");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();

    let out = snowglyph(&["validate", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.contains("record 4"), "{stderr}");
}

#[test]
fn validate_unknown_file_type_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("notes.txt");
    fs::write(&p, "hello").unwrap();
    assert_eq!(snowglyph(&["validate", s(&p)]).status.code(), Some(1));
    assert_eq!(snowglyph(&["validate", "/nonexistent/reports.jsonl"]).status.code(), Some(1));
}

#[test]
fn synth_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = synth_into(&tmp.path().join("a"));
    let b = synth_into(&tmp.path().join("b"));
    for f in ["reports.jsonl", "tenures.geojson", "weather.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = tmp.path().join("c");
    let out = snowglyph(&["synth", "--seed", "43", "--out", s(&c)]);
    assert!(out.status.success());
    assert_ne!(
        fs::read(a.join("reports.jsonl")).unwrap(),
        fs::read(c.join("datasets/synth-43/reports.jsonl")).unwrap()
    );
}

#[test]
fn ingest_then_render() {
    let tmp = tempfile::tempdir().unwrap();
    let src = synth_into(&tmp.path().join("src"));
    let data = tmp.path().join("data");
    let out = snowglyph(&[
        "ingest",
        s(&src.join("reports.jsonl")),
        s(&src.join("tenures.geojson")),
        "--dataset",
        "field",
        "--data",
        s(&data),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(src.join("reports.jsonl")).unwrap(),
        fs::read(data.join("datasets/field/reports.jsonl")).unwrap()
    );

    // ingesting the same reports again is rejected record by record
    let again = snowglyph(&["ingest", s(&src.join("reports.jsonl")), "--dataset", "field", "--data", s(&data)]);
    assert_eq!(again.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&again.stderr).contains("DUPLICATE_REPORT_ID"));

    let n_reports = fs::read_to_string(src.join("reports.jsonl")).unwrap().lines().count();
    let svg = tmp.path().join("map.svg");
    let out = Command::new(env!("CARGO_BIN_EXE_snowglyph"))
        .args(["render-svg", "--dataset", "field", "--view", "map", "--out", s(&svg)])
        .env("SNOWGLYPH_DATA", &data)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<circle class=\"member").count(), n_reports);
    assert_eq!(text.matches("<path class=\"tenure\"").count(), 6);
}

#[test]
fn render_rejects_unknown_view_and_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(tmp.path());
    let out_file = tmp.path().join("x.svg");
    let bad_view = snowglyph(&["render-svg", "--data", s(tmp.path()), "--dataset", "synth-42", "--view", "radar", "--out", s(&out_file)]);
    assert!(!bad_view.status.success());
    assert!(String::from_utf8_lossy(&bad_view.stderr).contains("radar"));
    let bad_ds = snowglyph(&["render-svg", "--data", s(tmp.path()), "--dataset", "nope", "--view", "map", "--out", s(&out_file)]);
    assert!(!bad_ds.status.success());
    assert!(!out_file.exists());
}

#[test]
fn render_timeline_empty_dataset_has_axis() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let empty = tmp.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = snowglyph(&["ingest", s(&empty), "--dataset", "blank", "--data", s(&data)]);
    assert!(out.status.success());
    let svg = tmp.path().join("t.svg");
    let out = snowglyph(&["render-svg", "--data", s(&data), "--dataset", "blank", "--view", "timeline", "--out", s(&svg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.contains("class=\"axis\""));
    assert!(!text.contains("class=\"member"));
}

#[test]
fn bad_config_fails_fast() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    fs::write(&cfg, "darkness_cap = lots\n").unwrap();
    let out = snowglyph(&["--config", s(&cfg), "synth", "--out", s(tmp.path())]);
    assert!(!out.status.success());
    assert!(!tmp.path().join("datasets").exists());
}

#[test]
fn shipped_config_is_accepted() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/snowglyph.conf");
    let tmp = tempfile::tempdir().unwrap();
    let out = snowglyph(&["--config", s(&cfg), "synth", "--out", s(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
