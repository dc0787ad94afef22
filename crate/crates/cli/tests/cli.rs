use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{ImageBuffer, Rgb};
use serde_json::Value;
use tempfile::TempDir;

fn icd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icd"))
        .args(args)
        .current_dir(cwd)
        .env("ICD_THREADS", "2")
        .output()
        .expect("run icd")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write_png(path: &Path, w: u32, h: u32, f: impl Fn(u32, u32) -> [u8; 3]) -> PathBuf {
    ImageBuffer::<Rgb<u8>, _>::from_fn(w, h, |x, y| Rgb(f(x, y))).save(path).unwrap();
    path.to_path_buf()
}

fn gradient(x: u32, y: u32) -> [u8; 3] {
    [(x * 9 + 10) as u8, (y * 11 + 5) as u8, ((x + y) * 5 + 30) as u8]
}

fn dark(x: u32, y: u32) -> [u8; 3] {
    gradient(x, y).map(|v| v / 2)
}

fn read_rgb(path: &Path) -> Vec<u8> {
    image::open(path).unwrap().to_rgb8().into_raw()
}

#[test]
fn decompose_then_reconstruct_recovers_png() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_png(&d.join("g.png"), 20, 16, gradient);

    let out = icd(&["decompose", "g.png", "--out", "dec"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    assert_eq!(rep["results"][0]["status"], "ok");
    for f in ["g.intensity.pfm", "g.chroma.pfm", "g.icd.json"] {
        assert!(d.join("dec").join(f).is_file(), "{f} missing");
    }
    let side: Value = serde_json::from_str(&fs::read_to_string(d.join("dec/g.icd.json")).unwrap()).unwrap();
    assert_eq!(side["baseline"], "max");
    assert_eq!(side["width"], 20);
    assert_eq!(side["source_sha256"].as_str().unwrap().len(), 64);

    let out = icd(&["reconstruct", "dec", "--out", "rec"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_rgb(&d.join("rec/g.png")), read_rgb(&d.join("g.png")));
}

#[test]
fn reconstruct_reports_missing_sidecar_path() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_png(&d.join("g.png"), 4, 4, gradient);
    assert!(icd(&["decompose", "g.png"], d).status.success());
    fs::remove_file(d.join("g.icd.json")).unwrap();

    let out = icd(&["reconstruct", "g.chroma.pfm", "--out", "rec"], d);
    assert_eq!(out.status.code(), Some(1));
    let err = json(&out)["results"][0]["error"].as_str().unwrap().to_string();
    assert!(err.contains("g.icd.json"), "{err}");
}

#[test]
fn reconstruct_override_is_recorded_as_warning() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_png(&d.join("g.png"), 4, 4, gradient);
    assert!(icd(&["decompose", "g.png"], d).status.success());
    let out = icd(&["reconstruct", "g.icd.json", "--out", "rec", "--eps", "0.001"], d);
    assert!(out.status.success());
    let r = &json(&out)["results"][0];
    assert_eq!(r["eps"], 0.001);
    assert!(r["warnings"][0].as_str().unwrap().contains("overrides"));
}

#[test]
fn corrupt_pfm_fails_with_byte_offset() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_png(&d.join("g.png"), 4, 4, gradient);
    assert!(icd(&["decompose", "g.png"], d).status.success());
    fs::write(d.join("g.intensity.pfm"), b"Pf\n4 x\n-1.0\n").unwrap();
    let out = icd(&["reconstruct", "g.icd.json", "--out", "rec"], d);
    assert_eq!(out.status.code(), Some(1));
    let err = json(&out)["results"][0]["error"].as_str().unwrap().to_string();
    assert!(err.contains("byte 5"), "{err}");
}

#[test]
fn enhance_fit_recovers_division_scale() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::create_dir_all(d.join("low")).unwrap();
    fs::create_dir_all(d.join("ref")).unwrap();
    write_png(&d.join("low/a.png"), 24, 24, dark);
    write_png(&d.join("ref/a.png"), 24, 24, gradient);

    let out = icd(
        &[
            "enhance", "low", "--variant", "intensity-division", "--fit", "--grid", "0.1:1:0.05",
            "--reference", "ref", "--out", "enh",
        ],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &json(&out)["results"][0];
    let l = r["fitted_param"].as_f64().unwrap();
    assert!((l - 0.5).abs() <= 0.05, "L = {l}");
    assert!(r["metrics"]["psnr_db"].as_f64().unwrap() > 35.0);
    assert!(d.join("enh/a.png").is_file());
}

#[test]
fn enhance_usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_png(&d.join("a.png"), 4, 4, gradient);

    let out = icd(&["enhance", "a.png", "--variant", "nope", "--out", "o"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("intensity-division"));

    let out = icd(&["enhance", "a.png", "--variant", "intensity-division", "--fit", "--out", "o"], d);
    assert_eq!(out.status.code(), Some(2));

    let out = icd(&["enhance", "a.png", "--variant", "intensity-division", "--L", "-1", "--out", "o"], d);
    assert_eq!(out.status.code(), Some(2));

    let out = icd(&["enhance", "a.png", "--variant", "chroma-gamma", "--out", "o"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn enhance_residual_identity_keeps_pixels() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_png(&d.join("a.png"), 8, 6, gradient);
    let out = icd(&["enhance", "a.png", "--out", "o", "--delta-i", "0", "--delta-c", "0,0,0"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_rgb(&d.join("o/a.png")), read_rgb(&d.join("a.png")));
}

#[test]
fn enhance_map_size_mismatch_is_reported() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_png(&d.join("a.png"), 8, 6, gradient);
    let mut bytes = b"Pf\n2 2\n-1.0\n".to_vec();
    for _ in 0..4 {
        bytes.extend_from_slice(&0.1f32.to_le_bytes());
    }
    fs::write(d.join("di.pfm"), bytes).unwrap();
    let out = icd(&["enhance", "a.png", "--out", "o", "--delta-i-map", "di.pfm"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["results"][0]["error"].as_str().unwrap().contains("2x2"));
}

#[test]
fn metrics_keeps_pair_order_and_flags_mismatch() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_png(&d.join("a.png"), 16, 16, gradient);
    write_png(&d.join("b.png"), 16, 16, dark);
    write_png(&d.join("small.png"), 12, 12, gradient);

    let out = icd(
        &["metrics", "--pair", "a.png,a.png", "--pair", "b.png,small.png", "--pair", "b.png,a.png"],
        d,
    );
    assert_eq!(out.status.code(), Some(1));
    let rep = json(&out);
    let rs = rep["results"].as_array().unwrap();
    assert_eq!(rs.len(), 3);
    assert_eq!(rs[0]["psnr_db"], 100.0);
    assert_eq!(rs[0]["ssim"], 1.0);
    assert_eq!(rs[1]["status"], "error");
    assert_eq!(rs[2]["output"], "b.png");
    assert!(rs[2]["l_total"].as_f64().unwrap() > 0.0);
}

#[test]
fn metrics_report_has_six_significant_digits() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_png(&d.join("a.png"), 16, 16, gradient);
    write_png(&d.join("b.png"), 16, 16, dark);
    let out = icd(&["metrics", "a.png", "--reference", "b.png", "--report", "r/m.json"], d);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let rep: Value = serde_json::from_str(&fs::read_to_string(d.join("r/m.json")).unwrap()).unwrap();
    let p = rep["results"][0]["psnr_db"].as_f64().unwrap();
    assert_eq!(format!("{p:.5e}").parse::<f64>().unwrap(), p);
}

#[test]
fn noise_sim_is_deterministic_and_validates_trials() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let args = ["noise-sim", "--trials", "50", "--seed", "5"];
    let (a, b) = (icd(&args, d), icd(&args, d));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = icd(&["noise-sim", "--trials", "50", "--seed", "6"], d);
    assert_ne!(a.stdout, other.stdout);

    assert_eq!(icd(&["noise-sim", "--trials", "0"], d).status.code(), Some(2));
    assert_eq!(icd(&["noise-sim", "--synthetic", "3"], d).status.code(), Some(2));
}

#[test]
fn noise_sim_reads_config_file() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("icd.toml"), "sigma = 0.02\ntrials = 20\nseed = 9\n").unwrap();
    let out = icd(&["noise-sim", "--config", "icd.toml", "--trials", "30"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &json(&out)["results"][0];
    assert_eq!(r["trials"], 30);
    assert_eq!(r["seed"], 9);
    assert_eq!(r["sigma"][0], 0.02);

    fs::write(d.join("bad.toml"), "sigmaa = 1\n").unwrap();
    assert_eq!(icd(&["noise-sim", "--config", "bad.toml"], d).status.code(), Some(2));
}

#[test]
fn roundtrip_check_and_empty_inputs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_png(&d.join("a.png"), 9, 7, gradient);
    let out = icd(&["roundtrip-check", ".", "--baseline", "min"], d);
    assert!(out.status.success());
    assert!(json(&out)["results"][0]["max_abs_error"].as_f64().unwrap() <= 1e-6);

    assert_eq!(icd(&["decompose"], d).status.code(), Some(2));
    assert_eq!(icd(&["roundtrip-check"], d).status.code(), Some(2));
}

#[test]
fn batch_results_follow_input_order() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let names = ["c.png", "a.png", "b.png"];
    for n in names {
        write_png(&d.join(n), 5, 5, gradient);
    }
    let out = icd(&["roundtrip-check", "c.png", "a.png", "missing.png", "b.png"], d);
    assert_eq!(out.status.code(), Some(1));
    let rep = json(&out);
    let order: Vec<&str> = rep["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["input"].as_str().unwrap())
        .collect();
    assert_eq!(order, ["c.png", "a.png", "missing.png", "b.png"]);
}
