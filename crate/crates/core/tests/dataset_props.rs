use std::collections::HashSet;
use std::path::Path;

use num_complex::Complex;
use proptest::prelude::*;

use ispforge::bp::backpropagate;
use ispforge::container::{read_container, read_manifest, write_container, Dataset, Tensor, TensorData, MANIFEST_FILE};
use ispforge::metrics::{ssim, SsimParams};
use ispforge::noise::add_noise;
use ispforge::pipeline::Simulator;
use ispforge::quality::{categorize, category_histogram, compose, compose_uniform, Category, SampleRecord, QBP_PROPORTIONS};
use ispforge::{solve_forward, ContrastMap, Error, PhysicsConfig, RealGrid};

fn population(qs: &[f64]) -> Vec<SampleRecord> {
    qs.iter()
        .enumerate()
        .map(|(i, &q)| SampleRecord {
            q_bp: q,
            ..SampleRecord::contrast_only(format!("s{i:06}"), ContrastMap::zeros(2))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn categories_partition_by_rank(qs in prop::collection::vec(0.0f64..10.0, 1..40usize).prop_map(|mut v| { v.truncate(v.len() / 4 * 4); v })) {
        let mut s = population(&qs);
        categorize(&mut s).unwrap();
        let h = category_histogram(&s);
        let quarter = qs.len() / 4;
        prop_assert_eq!(&h[..4], &[quarter; 4][..]);
        for w in Category::RANKED.windows(2) {
            let lo = s.iter().filter(|r| r.category == w[0]).map(|r| r.q_bp).fold(f64::INFINITY, f64::min);
            let hi = s.iter().filter(|r| r.category == w[1]).map(|r| r.q_bp).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo >= hi);
        }
    }

    #[test]
    fn composed_sets_are_exact_and_unique(seed in any::<u64>()) {
        let qs: Vec<f64> = (0..400).map(|i| ((i * 7919) % 400) as f64).collect();
        let mut s = population(&qs);
        categorize(&mut s).unwrap();
        let picked = compose(&s, 100, QBP_PROPORTIONS, seed).unwrap();
        let unique: HashSet<usize> = picked.iter().copied().collect();
        prop_assert_eq!(unique.len(), 100);
        let sub: Vec<SampleRecord> = picked.iter().map(|&i| s[i].clone()).collect();
        prop_assert_eq!(&category_histogram(&sub)[..4], &[10, 20, 30, 40][..]);
        prop_assert_eq!(picked, compose(&s, 100, QBP_PROPORTIONS, seed).unwrap());
    }
}

#[test]
fn uniform_composition_follows_population() {
    let qs: Vec<f64> = (0..2000).map(|i| ((i * 104_729) % 2000) as f64).collect();
    let mut s = population(&qs);
    categorize(&mut s).unwrap();
    for seed in 0..5 {
        let picked = compose_uniform(&s, 1000, seed).unwrap();
        let sub: Vec<SampleRecord> = picked.iter().map(|&i| s[i].clone()).collect();
        let h = category_histogram(&sub);
        // Multinomial standard deviation for p = 1/4.
        let sigma = (1000.0f64 * 0.25 * 0.75).sqrt();
        for &count in &h[..4] {
            assert!((count as f64 - 250.0).abs() <= 3.0 * sigma, "{h:?}");
        }
    }
}

#[test]
fn noise_components_are_independent_and_balanced() {
    let sim = Simulator::new(PhysicsConfig::default().with_grid(16)).unwrap();
    let chi = ContrastMap::uniform(16, 0.5).unwrap();
    let (_, clean) = solve_forward(&chi, &sim.ops, &sim.incident).unwrap();
    let (mut re, mut im, mut cross) = (0.0, 0.0, 0.0);
    for seed in 0..100 {
        let d = add_noise(&clean, 5.0, seed).unwrap().sub(&clean);
        for q in 0..d.n_rx() {
            for p in 0..d.n_tx() {
                let v = d.values[(q, p)];
                re += v.re * v.re;
                im += v.im * v.im;
                cross += v.re * v.im;
            }
        }
    }
    assert!((re / im - 1.0).abs() < 0.02);
    assert!(cross.abs() / (re + im) < 0.01);
}

#[test]
fn bp_beats_an_empty_image() {
    let sim = Simulator::new(PhysicsConfig::default().with_grid(32)).unwrap();
    let r = sim.cfg.wavelength;
    let values = sim.geom.cell_centers.iter().map(|c| if c.norm() < r { 0.5 } else { 0.0 }).collect();
    let truth = ContrastMap::from_values(32, values).unwrap();
    let (_, clean) = solve_forward(&truth, &sim.ops, &sim.incident).unwrap();
    let bp = backpropagate(&clean, &sim.ops, &sim.incident).unwrap();
    let p = SsimParams::default();
    let scored = ssim(&bp.scored(), &truth, &p).unwrap();
    let empty = ssim(&RealGrid::zeros(32), &truth, &p).unwrap();
    assert!(scored > empty, "bp {scored} vs empty {empty}");
    let zero = RealGrid::zeros(32);
    assert!(ispforge::rmse(&bp.scored(), &truth).unwrap() < ispforge::rmse(&zero, &truth).unwrap());
    assert!(bp.image.values().iter().all(|v| v.re.is_finite() && v.im.is_finite()));
}

fn tensor_strategy() -> impl Strategy<Value = Tensor> {
    let dims = prop::collection::vec(0u64..5, 0..4);
    (dims, any::<bool>()).prop_flat_map(|(dims, complex)| {
        let count = dims.iter().product::<u64>() as usize;
        let values = prop::collection::vec(any::<u32>().prop_map(f32::from_bits), 2 * count);
        values.prop_map(move |v| Tensor {
            dims: dims.clone(),
            data: if complex {
                TensorData::C64(v.chunks_exact(2).map(|c| Complex::new(c[0], c[1])).collect())
            } else {
                TensorData::F32(v[..count].to_vec())
            },
        })
    })
}

fn bits(t: &Tensor) -> Vec<u32> {
    match &t.data {
        TensorData::F32(v) => v.iter().map(|x| x.to_bits()).collect(),
        TensorData::C64(v) => v.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect(),
    }
}

proptest! {
    #[test]
    fn tensor_blobs_round_trip_bit_exact(t in tensor_strategy()) {
        let back = Tensor::decode(&t.encode(), Path::new("t")).unwrap();
        prop_assert_eq!(&back.dims, &t.dims);
        prop_assert_eq!(bits(&back), bits(&t));
        prop_assert_eq!(back.dtype_code(), t.dtype_code());
    }
}

#[test]
fn manifest_errors_map_to_exit_codes() {
    let sim_cfg = PhysicsConfig::default().with_grid(4);
    let mut record = SampleRecord::contrast_only("a", ContrastMap::uniform(4, 1.0).unwrap());
    record.q_bp = f64::INFINITY;
    let dir = tempfile::tempdir().unwrap();
    write_container(&Dataset::new(sim_cfg, vec![record]), dir.path()).unwrap();
    assert_eq!(read_container(dir.path()).unwrap().samples[0].q_bp, f64::INFINITY);

    let manifest = dir.path().join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest).unwrap();
    std::fs::write(&manifest, text.replace("ispds-1", "ispds-9")).unwrap();
    let err = read_manifest(dir.path()).unwrap_err();
    assert!(matches!(err, Error::VersionMismatch { .. }));
    assert_eq!(err.exit_code(), 5);
    std::fs::write(&manifest, &text).unwrap();

    let blob = dir.path().join("tensors/a.contrast.ispt");
    let mut bytes = std::fs::read(&blob).unwrap();
    bytes[4] = 7;
    std::fs::write(&blob, &bytes).unwrap();
    let err = read_container(dir.path()).unwrap_err();
    assert!(matches!(err, Error::UnsupportedDtype { code: 7, .. }));
    assert_eq!(err.exit_code(), 7);

    std::fs::remove_file(&manifest).unwrap();
    assert_eq!(read_container(dir.path()).unwrap_err().exit_code(), 9);
}
