//! Runs the `facebench` binary against the bundled assets.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use facebench_core::blazeface::{blazeface_spec, BlazeKind};
use facebench_core::detectors::BLAZEFACE_FRONT_MODEL;

fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/assets")
}

fn facebench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facebench"))
        .args(args)
        .env_remove("FD_MODELS_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Failure contract: the given exit code and exactly one `error:` line.
fn assert_fails(o: &Output, code: i32) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", stderr(o));
    let errors: Vec<_> = stderr(o).lines().filter(|l| l.starts_with("error:")).map(str::to_owned).collect();
    assert_eq!(errors.len(), 1, "{}", stderr(o));
}

/// Suite file with absolute scene paths and the given settings.
fn suite(dir: &Path, algorithms: &[&str], extra: serde_json::Value) -> PathBuf {
    let scenes = assets().join("scenes");
    let mut v = serde_json::json!({
        "algorithms": algorithms,
        "resolution": "160x120",
        "iterations": 1,
        "warmup_iterations": 0,
        "scenes": [
            {"id": "empty", "path": scenes.join("empty.png"), "label": "empty"},
            {"id": "one_large", "path": scenes.join("one_large.png"), "label": "one_large",
             "ground_truth": [{"x": 221, "y": 83, "w": 119, "h": 119}]},
            {"id": "two_small", "path": scenes.join("two_small.png"), "label": "two_small",
             "ground_truth": [{"x": 143, "y": 173, "w": 96, "h": 96}, {"x": 423, "y": 213, "w": 96, "h": 96}]}
        ]
    });
    for (k, val) in extra.as_object().unwrap() {
        v[k] = val.clone();
    }
    let path = dir.join("suite.json");
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn detect_on_a_face_free_scene_prints_an_empty_array() {
    let scene = assets().join("scenes/empty.png");
    let o = facebench(&["detect", "--algo", "haar", "--input", s(&scene)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dets: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(dets, serde_json::json!([]));
}

#[test]
fn detect_writes_json_with_boxes_in_input_pixels() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("dets.json");
    let scene = assets().join("scenes/one_large.png");
    let o = facebench(&["detect", "--algo", "haar", "--input", s(&scene), "--size", "256x256", "--json", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("1 face(s)"));
    let dets: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let b = &dets[0];
    // the 256x256 detection mapped back onto the 640x480 scene
    let x = b["x"].as_f64().unwrap();
    let w = b["w"].as_f64().unwrap();
    assert!((x - 86.12068965517241 * 2.5).abs() < 1e-6 && (w - 52.55172413793103 * 2.5).abs() < 1e-6, "{b}");
}

#[test]
fn argument_errors_exit_2() {
    assert_fails(&facebench(&["detect", "--algo", "viola", "--input", "x.png"]), 2);
    assert_fails(&facebench(&["detect", "--algo", "haar"]), 2);
    let tmp = tempfile::tempdir().unwrap();
    assert_fails(&facebench(&["bench", "--config", s(&tmp.path().join("none.json"))]), 2);
    let cfg = suite(tmp.path(), &["haar"], serde_json::json!({}));
    assert_fails(&facebench(&["bench", "--config", s(&cfg), "--iterations", "2", "--duration-ms", "5"]), 2);
}

#[test]
fn missing_model_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = assets().join("scenes/empty.png");
    let o = facebench(&["detect", "--algo", "lbp", "--input", s(&scene), "--models", s(tmp.path())]);
    assert_fails(&o, 3);
    let o = facebench(&["info", "--algo", "mtcnn"]);
    assert_fails(&o, 3);
}

#[test]
fn unreadable_image_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = facebench(&["detect", "--algo", "haar", "--input", s(&tmp.path().join("missing.png"))]);
    assert_fails(&o, 4);
    let junk = tmp.path().join("junk.png");
    std::fs::write(&junk, b"not an image").unwrap();
    assert_fails(&facebench(&["detect", "--algo", "haar", "--input", s(&junk)]), 4);
}

#[test]
fn empty_mean_table_exits_5() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.csv");
    std::fs::write(&empty, "algorithm,mean_ms\n").unwrap();
    let o = facebench(&["compare", s(&empty), s(&empty), "--out", s(&tmp.path().join("sp.csv"))]);
    assert_fails(&o, 5);
}

#[test]
fn compare_reproduces_reference_speedups() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("speedup.csv");
    let r = assets().join("reference");
    let o = facebench(&["compare", s(&r.join("paper_sd845.csv")), s(&r.join("paper_sd800.csv")), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["algorithm", "mean_a_ms", "mean_b_ms", "speedup"]);
    let want = [("MTCNN", 2.13), ("BlazeFace", 3.05), ("LBP", 5.02), ("HAAR", 5.64), ("HOG", 3.60)];
    assert_eq!(rows.len(), want.len() + 1);
    for (row, (algo, speedup)) in rows[1..].iter().zip(want) {
        assert_eq!(row[0], algo);
        assert!((row[3].parse::<f64>().unwrap() - speedup).abs() <= 0.005, "{row:?}");
    }
}

#[test]
fn bench_with_one_iteration_has_a_row_per_algorithm_and_scene() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = suite(tmp.path(), &["haar", "lbp", "hog"], serde_json::json!({}));
    let out = tmp.path().join("out");
    let o = facebench(&["bench", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let samples = csv_rows(&out.join("samples.csv"));
    assert_eq!(samples.len(), 1 + 3 * 3);
    for f in ["stats.csv", "boxplot.csv", "detections.json"] {
        assert!(std::fs::metadata(out.join(f)).unwrap().len() > 0, "{f}");
    }
}

#[test]
fn sweep_of_a_fixed_size_model_skips_other_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let models = tmp.path().join("models");
    std::fs::create_dir(&models).unwrap();
    let weights = blazeface_spec(BlazeKind::Front).zero_weights();
    std::fs::write(models.join(BLAZEFACE_FRONT_MODEL), weights.to_bytes()).unwrap();
    let cfg = suite(tmp.path(), &["blazeface-front"], serde_json::json!({}));
    let out = tmp.path().join("out");
    let o = facebench(&[
        "sweep",
        "--config",
        s(&cfg),
        "--resolutions",
        "64x64,128x128,256x256",
        "--models",
        s(&models),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).lines().any(|l| l.starts_with("warning:")), "{}", stderr(&o));
    let samples = csv_rows(&out.join("samples.csv"));
    let col = samples[0].iter().position(|c| c == "resolution").unwrap();
    assert_eq!(samples.len(), 1 + 3);
    assert!(samples[1..].iter().all(|r| r[col] == "128x128"), "{samples:?}");

    // a size request on the same model falls back to the native size
    let scene = assets().join("scenes/one_large.png");
    let o = facebench(&["detect", "--algo", "blazeface-front", "--input", s(&scene), "--size", "64x64", "--models", s(&models)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning:") && stderr(&o).contains("128x128"), "{}", stderr(&o));
}

#[test]
fn score_reports_points_per_resolution() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = suite(tmp.path(), &["haar"], serde_json::json!({}));
    let out = tmp.path().join("out");
    let o = facebench(&["score", "--config", s(&cfg), "--resolutions", "32x32,256x256", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&out.join("scores.csv"));
    let points = rows[0].iter().position(|c| c == "points").unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][points], "1");
    assert_eq!(rows[2][points], "3");
}

#[test]
fn info_lists_cascade_metadata() {
    let o = facebench(&["info", "--algo", "haar"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("window 24x24, 25 stages"), "{text}");
}

/// Drops the named columns from every row.
fn without(rows: Vec<Vec<String>>, names: &[&str]) -> Vec<Vec<String>> {
    let keep: Vec<usize> = (0..rows[0].len()).filter(|&i| !names.contains(&rows[0][i].as_str())).collect();
    rows.into_iter().map(|r| keep.iter().map(|&i| r[i].clone()).collect()).collect()
}

#[test]
fn repeated_bench_runs_match_except_timings() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = suite(tmp.path(), &["haar", "lbp", "hog"], serde_json::json!({"iterations": 2}));
    let outs: Vec<PathBuf> = (0..2).map(|i| tmp.path().join(format!("run{i}"))).collect();
    for out in &outs {
        let o = facebench(&["bench", "--config", s(&cfg), "--out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let timing = ["elapsed_ms", "mean_ms", "sd_ms", "min_ms", "q1_ms", "median_ms", "q3_ms", "max_ms", "whisker_lo_ms", "whisker_hi_ms"];
    for f in ["samples.csv", "stats.csv", "boxplot.csv"] {
        let rows: Vec<_> = outs.iter().map(|o| without(csv_rows(&o.join(f)), &timing)).collect();
        assert_eq!(rows[0], rows[1], "{f}");
    }
    let dets: Vec<_> = outs.iter().map(|o| std::fs::read(o.join("detections.json")).unwrap()).collect();
    assert_eq!(dets[0], dets[1]);
}
