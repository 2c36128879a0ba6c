use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

use ispforge::container::MANIFEST_FILE;
use ispforge::quality::{category_histogram, SampleRecord};
use ispforge::{read_container, write_container, ContrastMap, Dataset, PhysicsConfig, RealGrid};
use ispforge_cli::{pgm_bytes, quantize, Histogram};

fn ispforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ispforge"))
        .args(args)
        .env_remove("ISPFORGE_WORKERS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = ispforge(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("physics.json");
    fs::write(&path, r#"{"grid_n": 16}"#).unwrap();
    path
}

fn manifest_hash(dir: &Path) -> Vec<u8> {
    Sha256::digest(fs::read(dir.join(MANIFEST_FILE)).unwrap()).to_vec()
}

/// A container of contrast-only records with the given Q_BP values.
fn scored_population(dir: &Path, qs: impl Iterator<Item = f64>) {
    let samples = qs
        .enumerate()
        .map(|(i, q)| SampleRecord {
            q_bp: q,
            ..SampleRecord::contrast_only(format!("s{i:06}"), ContrastMap::zeros(2))
        })
        .collect();
    write_container(&Dataset::new(PhysicsConfig::default().with_grid(2), samples), dir).unwrap();
}

#[test]
fn generate_single_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("one");
    ok(&["generate", "--config", s(&cfg), "--seed", "3", "--n", "1", "--out", s(&out)]);
    let d = read_container(&out).unwrap();
    assert_eq!(d.samples.len(), 1);
    assert_eq!(d.physics.grid_n, 16);
    let r = &d.samples[0];
    assert!(r.bp.is_some() && r.scatter_noisy.is_some());
    assert!(r.q_bp > 0.0);
}

#[test]
fn generate_is_deterministic_across_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let run = |name: &str, workers: &str| {
        let out = tmp.path().join(name);
        ok(&[
            "generate", "--config", s(&cfg), "--seed", "11", "--n", "6", "--snr-db", "10", "--generator", "polygon",
            "--workers", workers, "--out", s(&out),
        ]);
        manifest_hash(&out)
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));
}

#[test]
fn workers_default_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("env");
    let status = Command::new(env!("CARGO_BIN_EXE_ispforge"))
        .args(["generate", "--config", s(&cfg), "--n", "2", "--out", s(&out)])
        .env("ISPFORGE_WORKERS", "2")
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_ispforge"))
        .args(["generate", "--config", s(&cfg), "--n", "2", "--out", s(&out)])
        .env("ISPFORGE_WORKERS", "many")
        .output()
        .unwrap()
        .status;
    assert_eq!(bad.code(), Some(2));
}

#[test]
fn curate_qbp_proportions() {
    let tmp = tempfile::tempdir().unwrap();
    let pop = tmp.path().join("pop");
    scored_population(&pop, (0..2000).map(|i| ((i * 7919) % 2000) as f64 / 100.0));
    let out = tmp.path().join("cur");
    ok(&["curate", "--input", s(&pop), "--mode", "qbp", "--n", "1000", "--seed", "5", "--out", s(&out)]);
    let d = read_container(&out).unwrap();
    assert_eq!(&category_histogram(&d.samples)[..4], &[100, 200, 300, 400]);
    let again = tmp.path().join("cur2");
    ok(&["curate", "--input", s(&pop), "--mode", "qbp", "--n", "1000", "--seed", "5", "--out", s(&again)]);
    assert_eq!(manifest_hash(&out), manifest_hash(&again));
}

#[test]
fn curate_uniform_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let pop = tmp.path().join("pop");
    scored_population(&pop, (0..400).map(|i| i as f64));
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        ok(&["curate", "--input", s(&pop), "--mode", "uniform", "--n", "100", "--seed", seed, "--out", s(&out)]);
        assert_eq!(read_container(&out).unwrap().samples.len(), 100);
        manifest_hash(&out)
    };
    assert_eq!(run("a", "9"), run("b", "9"));
    assert_ne!(run("a", "9"), run("c", "10"));
}

#[test]
fn curate_insufficient_category_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let pop = tmp.path().join("pop");
    scored_population(&pop, (0..400).map(|i| i as f64));
    let out = ispforge(&["curate", "--input", s(&pop), "--n", "1000", "--out", s(&tmp.path().join("x"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn evaluate_identical_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let data = tmp.path().join("data");
    ok(&["generate", "--config", s(&cfg), "--seed", "1", "--n", "4", "--out", s(&data)]);
    let eval = tmp.path().join("eval");
    ok(&["evaluate", "--truth", s(&data), "--pred", s(&data), "--out", s(&eval)]);
    let (header, rows) = read_csv(&eval.join("metrics.csv"));
    assert_eq!(header, ["id", "rmse", "ssim", "q_bp"]);
    assert_eq!(rows.len(), 4);
    let sm = summary(&eval);
    assert_eq!(sm["mean_rmse"].as_f64(), Some(0.0));
    assert!((sm["mean_ssim"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(sm["ssim_histogram"]["counts"].as_array().unwrap().len(), 1);
}

#[test]
fn evaluate_bp_tracks_contrast() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let mean_ssim = |name: &str, lo: &str, hi: &str| {
        let data = tmp.path().join(name);
        ok(&[
            "generate", "--config", s(&cfg), "--seed", "2", "--n", "12", "--eps-min", lo, "--eps-max", hi, "--out",
            s(&data),
        ]);
        let eval = tmp.path().join(format!("{name}-eval"));
        ok(&["evaluate", "--input", s(&data), "--out", s(&eval)]);
        let sm = summary(&eval);
        assert_eq!(sm["prediction"], "bp");
        sm["mean_ssim"].as_f64().unwrap()
    };
    let low = mean_ssim("low", "1", "1.5");
    let high = mean_ssim("high", "4", "5");
    assert!(low > high, "low {low} high {high}");
}

#[test]
fn evaluate_losses_need_total_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let plain = tmp.path().join("plain");
    ok(&["generate", "--config", s(&cfg), "--n", "2", "--out", s(&plain)]);
    let out = ispforge(&["evaluate", "--truth", s(&plain), "--beta", "0.2", "--out", s(&tmp.path().join("e1"))]);
    assert_eq!(out.status.code(), Some(8));

    let fields = tmp.path().join("fields");
    ok(&["generate", "--config", s(&cfg), "--n", "2", "--export-fields", "--out", s(&fields)]);
    let eval = tmp.path().join("e2");
    ok(&["evaluate", "--truth", s(&fields), "--pred", s(&fields), "--beta", "0.2", "--out", s(&eval)]);
    let loss = &summary(&eval)["loss"];
    // At the truth only the TV term survives.
    assert_eq!(loss["contrast"].as_f64(), Some(0.0));
    let mix = loss["mix_total"].as_f64().unwrap();
    assert!((mix - 0.2 * loss["tv"].as_f64().unwrap()).abs() < 1e-12);
    assert_eq!(read_csv(&eval.join("losses.csv")).1.len(), 2);

    let out = ispforge(&["evaluate", "--truth", s(&fields), "--beta", "1.5", "--out", s(&eval)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupt_container_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    scored_population(&data, (0..4).map(f64::from));
    let blob = data.join("tensors/s000000.contrast.ispt");
    let bytes = fs::read(&blob).unwrap();
    let eval = tmp.path().join("eval");

    fs::write(&blob, [b"XXXX", &bytes[4..]].concat()).unwrap();
    let code = ispforge(&["evaluate", "--truth", s(&data), "--pred", s(&data), "--out", s(&eval)]).status.code();
    assert_eq!(code, Some(4));

    fs::write(&blob, &bytes[..bytes.len() - 3]).unwrap();
    let code = ispforge(&["render", "--input", s(&data), "--out", s(&eval)]).status.code();
    assert_eq!(code, Some(6));
}

/// Independent P5 reader.
fn parse_pgm(bytes: &[u8]) -> (usize, usize, u32, Vec<u8>) {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).unwrap().to_string());
    }
    assert_eq!(fields[0], "P5");
    // Exactly one whitespace byte before the raster.
    (fields[1].parse().unwrap(), fields[2].parse().unwrap(), fields[3].parse().unwrap(), bytes[pos + 1..].to_vec())
}

#[test]
fn pgm_pixels() {
    let (w, h, maxval, px) = parse_pgm(&pgm_bytes(&RealGrid::zeros(8), 4.0));
    assert_eq!((w, h, maxval), (8, 8, 255));
    assert!(px.iter().all(|&p| p == 0));

    let bright = RealGrid::from_fn(4, |i, j| 4.0 + (i * 4 + j) as f64);
    assert!(parse_pgm(&pgm_bytes(&bright, 4.0)).3.iter().all(|&p| p == 255));
    assert_eq!(quantize(-1.0, 4.0), 0);
    assert_eq!(quantize(f64::NAN, 4.0), 0);
}

#[test]
fn render_round_trips_quantized_values() {
    let tmp = tempfile::tempdir().unwrap();
    let n = 8;
    let map = RealGrid::from_fn(n, |i, j| 0.0625 * (i * n + j) as f64);
    let mut record = SampleRecord::contrast_only("known", ContrastMap::new(map.clone()).unwrap());
    record.q_bp = 1.0;
    let data = tmp.path().join("data");
    write_container(&Dataset::new(PhysicsConfig::default().with_grid(n), vec![record]), &data).unwrap();
    let out = tmp.path().join("img");
    ok(&["render", "--input", s(&data), "--ids", "known", "--max", "4", "--out", s(&out)]);

    let (w, h, _, px) = parse_pgm(&fs::read(out.join("known.contrast.pgm")).unwrap());
    assert_eq!((w, h, px.len()), (n, n, n * n));
    for (k, &p) in px.iter().enumerate() {
        // The map is stored as f32, so recover the value the same way.
        let v = (0.0625 * k as f64) as f32 as f64;
        let expected = (v / 4.0 * 255.0).round().min(255.0);
        assert_eq!(p as f64, expected, "pixel {k}");
        // Dequantized pixel is within half a level of the value.
        assert!((p as f64 * 4.0 / 255.0 - v.min(4.0)).abs() <= 0.5 * 4.0 / 255.0 + 1e-12);
    }
    assert!(!out.join("known.bp.pgm").exists());
    let missing = ispforge(&["render", "--input", s(&data), "--ids", "nope", "--out", s(&out)]);
    assert_eq!(missing.status.code(), Some(7));
}

#[test]
fn render_writes_bp_magnitudes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let data = tmp.path().join("data");
    ok(&["generate", "--config", s(&cfg), "--n", "2", "--out", s(&data)]);
    let out = tmp.path().join("img");
    ok(&["render", "--input", s(&data), "--max", "0.05", "--out", s(&out)]);
    let d = read_container(&data).unwrap();
    for r in &d.samples {
        let (_, _, _, px) = parse_pgm(&fs::read(out.join(format!("{}.bp.pgm", r.id))).unwrap());
        let mag = r.bp.as_ref().unwrap().image.magnitude();
        let expected: Vec<u8> = mag.values().iter().map(|&v| quantize(v, 0.05)).collect();
        assert_eq!(px, expected);
    }
}

#[test]
fn histogram_bins() {
    let h = Histogram::new(&[0.0, 0.01, 0.049, 0.05, 0.12, f64::INFINITY], 0.05);
    assert_eq!(h.start, 0.0);
    assert_eq!(h.counts, vec![3, 1, 1]);
    let neg = Histogram::new(&[-0.07, 0.96, 1.0], 0.05);
    assert!((neg.start + 0.1).abs() < 1e-12);
    assert_eq!(neg.counts.iter().sum::<usize>(), 3);
    assert_eq!(neg.counts.len(), 23);
    assert!(Histogram::new(&[], 0.05).counts.is_empty());
}
