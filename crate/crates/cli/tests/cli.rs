use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(rel)
}

fn simdive(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simdive")).args(args).output().unwrap()
}

fn report(args: &[&str]) -> Value {
    let out = simdive(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_table_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let r = report(&["gen-table", "--out", path_str(&out)]);
    assert_eq!(r["command"], "gen-table");
    assert_eq!(r["parameters"]["region_bits"], 3);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 65);
    assert!(text.starts_with("mode,region_bits,i,j,coefficient,scale_bits"));

    report(&["gen-table", "--mode", "div", "--region-bits", "4", "--out", path_str(&out)]);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 257);
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    for args in [
        vec!["gen-table", "--coeff-bits", "0", "--out", path_str(&out)],
        vec!["gen-table", "--region-bits", "5", "--out", path_str(&out)],
        vec!["characterize", "--op", "approx-mul"],
        vec!["characterize", "--op", "mitchell-mul", "--width", "12"],
        vec!["frobnicate"],
    ] {
        let o = simdive(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn domain_errors_exit_with_1() {
    let o = simdive(&["characterize", "--op", "mitchell-mul", "--width", "16"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2^24"));
    let o = simdive(&["blend", "--a", "/nonexistent.pgm", "--b", "/nonexistent.pgm"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn characterize_mitchell_8bit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let r = report(&["characterize", "--op", "mitchell-mul", "--width", "8", "--csv", path_str(&csv)]);
    let pre = r["results"]["all"]["pre"].as_f64().unwrap();
    assert!((pre - 11.11).abs() < 0.05, "{pre}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("op,width,divisor_width,sampling,seed,"));
    assert!(text.lines().nth(1).unwrap().starts_with("mitchell-mul,8,8,exhaustive,"));
}

#[test]
fn characterize_corrected_16_8_divider() {
    let args = [
        "characterize", "--op", "corrected-div", "--width", "16", "--divisor-width", "8",
        "--samples", "1000000", "--seed", "5",
    ];
    let r = report(&args);
    let are = r["results"]["all"]["are"].as_f64().unwrap();
    assert!(are < 0.9, "{are}");
    assert_eq!(r["parameters"]["spec"]["sampling"]["seed"], 5);
    assert!(r["results"]["dividend_ge_divisor"]["are"].is_number());
    let mut threaded = vec!["--threads", "2"];
    threaded.extend(args);
    assert_eq!(report(&threaded)["results"], r["results"]);
}

#[test]
fn heatmap_writes_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let r = report(&["heatmap", "--op", "mitchell-mul", "--grid", "32", "--k1", "3", "--out", path_str(&out)]);
    assert!(r["results"]["max_abs"].as_f64().unwrap() < 0.1112);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 32);
    report(&["heatmap", "--op", "corrected-div", "--bits", "16", "--k1", "12", "--k2", "9", "--grid", "16", "--out", path_str(&out)]);
    let o = simdive(&["heatmap", "--op", "mitchell-mul", "--grid", "8", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn blend_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (fixture("images/rings.pgm"), fixture("images/waves.pgm"));
    let run = |name: &str| {
        let out = dir.path().join(name);
        let r = report(&["blend", "--a", path_str(&a), "--b", path_str(&b), "--mul", "corrected", "--out", path_str(&out)]);
        (r["results"].clone(), std::fs::read(out).unwrap())
    };
    let (r1, img1) = run("1.pgm");
    let (r2, img2) = run("2.pgm");
    assert_eq!(r1, r2);
    assert_eq!(img1, img2);
    assert!(r1["psnr_vs_exact_db"].as_f64().unwrap() >= 40.0);
}

#[test]
fn smooth_reports_three_psnr_rows() {
    let r = report(&["smooth", "--input", path_str(&fixture("images/discs.pgm")), "--arith", "hybrid", "--kernel", "gauss5"]);
    let rows = r["results"].as_array().unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r["image"].as_str().unwrap()).collect();
    assert_eq!(names, ["noisy", "exact", "approx"]);
    let noisy = rows[0]["psnr_db"].as_f64().unwrap();
    let exact = rows[1]["psnr_db"].as_f64().unwrap();
    assert!(exact > noisy);
}

#[test]
fn ann_accuracy_row() {
    let r = report(&[
        "ann",
        "--model", path_str(&fixture("ann/mlp-784-100-10.json")),
        "--images", path_str(&fixture("mnist/t10k-images-idx3-ubyte")),
        "--labels", path_str(&fixture("mnist/t10k-labels-idx1-ubyte")),
        "--mul", "corrected",
        "--limit", "1000",
    ]);
    assert_eq!(r["results"]["total"], 1000);
    assert!(r["results"]["accuracy"].as_f64().unwrap() > 0.9);
}
