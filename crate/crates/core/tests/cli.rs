use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use snakelp::imagecore::{load_pfm, load_pgm};
use snakelp::ipsolve::oracle_solve;
use snakelp::lp::LpDump;

fn snakelp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snakelp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workdir(TempDir);

impl Workdir {
    fn new() -> Self {
        Self(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    /// Small clean rectangle and its truth mask.
    fn rectangle(&self) -> (PathBuf, PathBuf) {
        let (img, truth) = (self.file("rect.pgm"), self.file("rect_truth.pgm"));
        let out = snakelp(&[
            "synth",
            "--shape",
            "rectangle",
            "--width",
            "96",
            "--height",
            "80",
            "-o",
            path_str(&img),
            "--truth",
            path_str(&truth),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (img, truth)
    }
}

#[test]
fn synth_writes_requested_size_deterministically() {
    let dir = Workdir::new();
    let (a, b) = (dir.file("a.pgm"), dir.file("b.pgm"));
    for p in [&a, &b] {
        let out = snakelp(&[
            "synth",
            "--shape",
            "star",
            "--width",
            "120",
            "--height",
            "90",
            "--noise-sigma",
            "25",
            "--seed",
            "3",
            "-o",
            path_str(p),
        ]);
        assert_eq!(code(&out), 0);
    }
    let img = load_pgm(&a).unwrap();
    assert_eq!((img.width(), img.height()), (120, 90));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn synth_rejects_unknown_shape() {
    let dir = Workdir::new();
    let out = snakelp(&["synth", "--shape", "blob", "-o", path_str(&dir.file("x.pgm"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn edgemap_writes_both_maps() {
    let dir = Workdir::new();
    let (img, _) = dir.rectangle();
    let (cont, bin) = (dir.file("cont.pfm"), dir.file("bin.pgm"));
    let out = snakelp(&[
        "edgemap",
        "--in",
        path_str(&img),
        "--cont-out",
        path_str(&cont),
        "--bin-out",
        path_str(&bin),
    ]);
    assert_eq!(code(&out), 0);
    let field = load_pfm(&cont).unwrap();
    assert_eq!((field.width(), field.height()), (96, 80));
    let binary = load_pgm(&bin).unwrap();
    assert!(binary.count_nonzero() > 0);
    assert!(binary.data().iter().all(|&v| v == 0 || v == 255));

    let out = snakelp(&["edgemap", "--in", path_str(&img), "--theta", "1.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn segment_writes_mask_and_json() {
    let dir = Workdir::new();
    let (img, _) = dir.rectangle();
    let (mask, json_out, overlay) = (dir.file("mask.pgm"), dir.file("out.json"), dir.file("ov.pgm"));
    let out = snakelp(&[
        "segment",
        "--in",
        path_str(&img),
        "--k",
        "8",
        "--t-budget",
        "600",
        "--mask-out",
        path_str(&mask),
        "--out-json",
        path_str(&json_out),
        "--overlay-out",
        path_str(&overlay),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = load_pgm(&mask).unwrap();
    assert_eq!((m.width(), m.height()), (96, 80));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    for key in ["config", "contour", "objective_trace", "tiles", "timings"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["contour"].as_array().unwrap().len() <= 8);
    let trace: Vec<f64> = serde_json::from_value(v["objective_trace"].clone()).unwrap();
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    assert!(overlay.exists());
}

#[test]
fn segment_tiled_lists_tiles_and_dumps_lp() {
    let dir = Workdir::new();
    let (img, _) = dir.rectangle();
    let out = snakelp(&["segment", "--in", path_str(&img), "--tile", "32"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["tiles"].as_array().unwrap().len(), 9);

    let dump = dir.file("lp.json");
    let out = snakelp(&[
        "segment",
        "--in",
        path_str(&img),
        "--k",
        "4",
        "--t-budget",
        "200",
        "--roi",
        "0,0,40,40",
        "--lp-dump",
        path_str(&dump),
        "--mask-out",
        path_str(&dir.file("m.pgm")),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let lp: LpDump = serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!((lp.m, lp.n), (4 * 200 + 200, 2 * 4 * 200 + 4 + 200));
    assert!(lp.x0.is_some());

    let solved = dir.file("solved.json");
    let out = snakelp(&["solve-lp", "--lp-json", path_str(&dump), "--out", path_str(&solved)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&solved).unwrap()).unwrap();
    assert!(v["objective"].as_f64().is_some());

    let out = snakelp(&[
        "segment",
        "--in",
        path_str(&img),
        "--tile",
        "--lp-dump",
        path_str(&dump),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn segment_error_codes() {
    let dir = Workdir::new();
    let missing = snakelp(&["segment", "--in", path_str(&dir.file("none.pgm"))]);
    assert_eq!(code(&missing), 1);
    let (img, _) = dir.rectangle();
    assert_eq!(code(&snakelp(&["segment", "--in", path_str(&img), "--k", "0"])), 2);
    assert_eq!(code(&snakelp(&["segment", "--in", path_str(&img), "--tile", "8"])), 2);
    assert_eq!(
        code(&snakelp(&["segment", "--in", path_str(&img), "--roi", "1,2,3"])),
        2
    );
}

#[test]
fn evaluate_reports_csv_and_json() {
    let dir = Workdir::new();
    let (_, truth) = dir.rectangle();
    let csv = dir.file("report.csv");
    let out = snakelp(&[
        "evaluate",
        "--pred",
        path_str(&truth),
        "--truth",
        path_str(&truth),
        "--out",
        path_str(&csv),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,dsi,pred_area,truth_area,overlap"));
    assert!(lines.next().unwrap().starts_with("rect_truth,1.000000,"));

    let out = snakelp(&["evaluate", "--pred", path_str(&truth), "--truth", path_str(&truth)]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["entries"][0]["dsi"], 1.0);

    let other = dir.file("small.pgm");
    snakelp(&[
        "synth",
        "--shape",
        "heart",
        "--width",
        "64",
        "--height",
        "64",
        "-o",
        path_str(&other),
    ]);
    let out = snakelp(&["evaluate", "--pred", path_str(&other), "--truth", path_str(&truth)]);
    assert_eq!(code(&out), 2);
}

fn write_json(dir: &Workdir, name: &str, v: &Value) -> PathBuf {
    let p = dir.file(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

#[test]
fn solve_lp_tiny_problem() {
    let dir = Workdir::new();
    let lp = json!({
        "m": 1, "n": 2,
        "triplets": [[0, 0, 1.0], [0, 1, 1.0]],
        "b": [1.0], "c": [0.0, 1.0],
        "x0": [0.5, 0.5]
    });
    let out = snakelp(&["solve-lp", "--lp-json", path_str(&write_json(&dir, "lp.json", &lp))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["objective"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["status"], "converged");
}

#[test]
fn solve_lp_without_start_matches_oracle() {
    let dir = Workdir::new();
    let lp = json!({
        "m": 2, "n": 4,
        "triplets": [[0, 0, 1.0], [0, 1, 2.0], [0, 2, 1.0], [1, 0, 3.0], [1, 1, 1.0], [1, 3, 1.0]],
        "b": [4.0, 5.0], "c": [-1.0, -1.0, 0.0, 0.0],
        "constants": null
    });
    let dump: LpDump = serde_json::from_value(lp.clone()).unwrap();
    let expected = oracle_solve(&dump.to_lp().unwrap()).unwrap().objective;
    let out = snakelp(&["solve-lp", "--lp-json", path_str(&write_json(&dir, "lp.json", &lp))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let got = v["objective"].as_f64().unwrap();
    assert!(
        (got - expected).abs() <= 1e-5 * (1.0 + expected.abs()),
        "{got} vs {expected}"
    );
}

#[test]
fn solve_lp_rejects_bad_input() {
    let dir = Workdir::new();
    let bad = dir.file("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&snakelp(&["solve-lp", "--lp-json", path_str(&bad)])), 2);
    assert_eq!(
        code(&snakelp(&["solve-lp", "--lp-json", path_str(&dir.file("none.json"))])),
        1
    );
    let infeasible_start = json!({
        "m": 1, "n": 2, "triplets": [[0, 0, 1.0], [0, 1, 1.0]],
        "b": [1.0], "c": [0.0, 1.0], "x0": [2.0, 2.0]
    });
    let out = snakelp(&[
        "solve-lp",
        "--lp-json",
        path_str(&write_json(&dir, "s.json", &infeasible_start)),
    ]);
    assert_eq!(code(&out), 1);
}
