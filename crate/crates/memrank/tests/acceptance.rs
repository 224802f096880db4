//! Acceptance suite: one test per release criterion, each printing a
//! PASS line when it holds. Run with `cargo test --test acceptance`
//! (add `-- --nocapture` to see the lines on success).

mod common;

use std::path::{Path, PathBuf};
use std::time::Instant;

use memrank::audio::{compute_mfcc, delta, AudioClip, MfccParams};
use memrank::dataset::Target;
use memrank::features::{Aggregation, Modality};
use memrank::harness::{
    generate_synthetic, render_table, run_experiment, write_synthetic, DataSource,
    ExperimentConfig, Protocol, ReportFormat, ReportRow, ReportTable, SplitMix64, SyntheticSpec,
    TrainSplit,
};
use memrank::metrics::spearman;
use memrank::ridge::{ridge_closed_form, BayesianRidge, BayesianRidgeConfig};
use nalgebra::{DMatrix, DVector};

fn gaussian_matrix(rng: &mut SplitMix64, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.next_gaussian())
}

/// Criterion 1: with frozen alpha = 1 and lambda = k, the evidence-
/// maximization fit reproduces the closed-form ridge solution to 1e-8
/// relative L2 error on 100 random instances, in under 10 seconds.
#[test]
fn criterion_1_ridge_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0xC1);
    for case in 0..100 {
        let n = 10 + (rng.next_u64() % 191) as usize; // 10..=200
        let d = 1 + (rng.next_u64() % 50) as usize; // 1..=50
        let x = gaussian_matrix(&mut rng, n, d);
        let y = DVector::from_fn(n, |_, _| rng.next_gaussian());
        let k = 10f64.powf(rng.next_f64() * 6.0 - 3.0); // 1e-3..1e3

        let config = BayesianRidgeConfig {
            alpha_init: Some(1.0),
            lambda_init: k,
            standardize_inputs: false,
            fit_intercept: false,
            update_hyperparams: false,
            ..Default::default()
        };
        let model = BayesianRidge::fit(&x, &y, &config).unwrap();
        let oracle = ridge_closed_form(&x, &y, k).unwrap();
        let diff = (model.weights() - &oracle).norm();
        let scale = oracle.norm().max(1e-300);
        assert!(
            diff / scale <= 1e-8,
            "case {case} (n={n}, d={d}, k={k:.3e}): relative error {:.3e}",
            diff / scale
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("criterion 1 (ridge oracle equivalence, 100 instances, {elapsed:?}): PASS");
}

/// Criterion 2: on a seeded linear generator (N=200, D=5, sigma=0.1) the
/// default fit ranks noiseless targets at Spearman >= 0.95 and estimates the
/// noise precision within a factor of two, in under a second.
#[test]
fn criterion_2_synthetic_recovery() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0xC2);
    let (n, d, sigma) = (200, 5, 0.1);
    let x = gaussian_matrix(&mut rng, n, d);
    let w = DVector::from_fn(d, |_, _| rng.next_gaussian());
    let noiseless = &x * &w;
    let y = DVector::from_fn(n, |i, _| noiseless[i] + sigma * rng.next_gaussian());

    let model = BayesianRidge::fit(&x, &y, &BayesianRidgeConfig::default()).unwrap();
    let predictions: Vec<f64> = (0..n)
        .map(|i| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            model.predict(&row).unwrap().mean
        })
        .collect();
    let clean: Vec<f64> = noiseless.iter().copied().collect();
    let rs = spearman(&predictions, &clean).unwrap();
    assert!(rs >= 0.95, "spearman {rs}");

    let alpha_true = 1.0 / (sigma * sigma);
    assert!(
        model.alpha() >= 0.5 * alpha_true && model.alpha() <= 2.0 * alpha_true,
        "alpha {} vs 1/sigma^2 {}",
        model.alpha(),
        alpha_true
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "criterion 2 (synthetic recovery: spearman {rs:.4}, alpha {:.1}, {elapsed:?}): PASS",
        model.alpha()
    );
}

/// Criterion 3: on 100 random full-rank instances that converge by
/// tolerance, re-applying the hyperparameter updates at the stored posterior
/// moves alpha and lambda by less than 1e-6 relative.
#[test]
fn criterion_3_fixed_point() {
    let mut rng = SplitMix64::new(0xC3);
    let config = BayesianRidgeConfig {
        tol: 1e-10,
        max_iter: 5000,
        standardize_inputs: false,
        fit_intercept: false,
        ..Default::default()
    };
    for case in 0..100 {
        let d = 2 + (rng.next_u64() % 10) as usize; // 2..=11
        let n = d * 4 + (rng.next_u64() % 60) as usize;
        let x = gaussian_matrix(&mut rng, n, d);
        let w = DVector::from_fn(d, |_, _| rng.next_gaussian());
        let y = &x * &w + DVector::from_fn(n, |_, _| 0.3 * rng.next_gaussian());

        let model = BayesianRidge::fit(&x, &y, &config).unwrap();
        assert!(
            model.converged_by_tol(),
            "case {case} hit max_iter after {} iterations",
            model.n_iter()
        );

        let sse = (&y - &x * model.weights()).norm_squared();
        let lambda_next = (model.gamma() + 2.0 * config.lambda_shape)
            / (model.weights().norm_squared() + 2.0 * config.lambda_rate);
        let alpha_next =
            (n as f64 - model.gamma() + 2.0 * config.alpha_shape) / (sse + 2.0 * config.alpha_rate);
        let lambda_move = (lambda_next - model.lambda()).abs() / model.lambda();
        let alpha_move = (alpha_next - model.alpha()).abs() / model.alpha();
        assert!(
            lambda_move < 1e-6 && alpha_move < 1e-6,
            "case {case}: lambda moves {lambda_move:.3e}, alpha moves {alpha_move:.3e}"
        );
    }
    println!("criterion 3 (hyperparameter fixed point, 100 instances): PASS");
}

/// Criterion 4: tie-aware Spearman equals the classic d^2 formula exactly on
/// all 720 permutations of six tie-free values, and the hand-derived tie
/// case gives sqrt(0.9) to 1e-12.
#[test]
fn criterion_4_rank_metric_oracle() {
    use itertools::Itertools;
    let identity = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let mut checked = 0;
    for perm in identity.iter().copied().permutations(6) {
        let rs = spearman(&perm, &identity).unwrap();
        let d2: f64 = perm
            .iter()
            .zip(&identity)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den = 6.0 * (36.0 - 1.0);
        let classic = (den - 6.0 * d2) / den;
        assert_eq!(rs, classic, "permutation {perm:?}");
        checked += 1;
    }
    assert_eq!(checked, 720);

    let tie = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!(
        (tie - 0.9_f64.sqrt()).abs() < 1e-12,
        "tie case {tie} vs {}",
        0.9_f64.sqrt()
    );
    println!("criterion 4 (rank-metric oracle, 720 permutations + tie case): PASS");
}

/// Criterion 5: MFCCs match an independently written reference (direct DFT,
/// own filterbank and DCT) to 1e-3 per coefficient on a 1 kHz tone and on
/// seeded white noise; the frame-count formula gives exactly 98 frames for
/// one second at 16 kHz.
#[test]
fn criterion_5_mfcc_cross_oracle() {
    let params = MfccParams::default();

    let tone = common::sine_samples(1000.0, 0.5, 16_000, 16_000.0);
    let mut rng = SplitMix64::new(0xC5);
    let noise = common::noise_samples(&mut rng, 16_000);

    for (name, samples) in [("1 kHz tone", tone), ("white noise", noise)] {
        let clip = AudioClip::new(samples.clone(), 16_000).unwrap();
        let ours = compute_mfcc(&clip, &params).unwrap();
        assert_eq!(ours.len(), 98, "{name}: frame count");
        let reference = common::reference_mfcc(&samples);
        assert_eq!(reference.len(), 98);
        let mut worst = 0.0f64;
        for (t, (a, b)) in ours.iter().zip(&reference).enumerate() {
            for (c, (x, y)) in a.iter().zip(b).enumerate() {
                let diff = (x - y).abs();
                worst = worst.max(diff);
                assert!(diff <= 1e-3, "{name}: frame {t} coeff {c} differs by {diff:.3e}");
            }
        }
        println!("criterion 5 ({name}: 98 frames, worst diff {worst:.3e}): PASS");
    }
}

/// Criterion 6: delta of a constant matrix is exactly zero, the interior of
/// a unit ramp has slope exactly 1 at window 2, and delta is linear to 1e-12.
#[test]
fn criterion_6_delta_properties() {
    let constant = vec![vec![7.25; 6]; 9];
    for row in delta(&constant, 2) {
        assert!(row.iter().all(|v| *v == 0.0));
    }

    let ramp: Vec<Vec<f64>> = (0..20).map(|t| vec![t as f64]).collect();
    let d = delta(&ramp, 2);
    for row in &d[2..18] {
        assert_eq!(row[0], 1.0);
    }

    let mut rng = SplitMix64::new(0xC6);
    let make = |rng: &mut SplitMix64| -> Vec<Vec<f64>> {
        (0..12)
            .map(|_| (0..5).map(|_| rng.next_gaussian()).collect())
            .collect()
    };
    let a = make(&mut rng);
    let b = make(&mut rng);
    let sum: Vec<Vec<f64>> = a
        .iter()
        .zip(&b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect();
    let (da, db, ds) = (delta(&a, 2), delta(&b, 2), delta(&sum, 2));
    for t in 0..12 {
        for c in 0..5 {
            assert!((ds[t][c] - (da[t][c] + db[t][c])).abs() < 1e-12);
        }
    }
    println!("criterion 6 (delta: zero on constants, unit ramp slope, linearity): PASS");
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fixture_config(data_root: &Path, name: &str) -> ExperimentConfig {
    let mut config = ExperimentConfig::load(fixture_dir().join(name)).unwrap();
    let rebase = |source: &mut DataSource| {
        source.manifest = data_root.join(&source.manifest).display().to_string();
        source.ground_truth = data_root.join(&source.ground_truth).display().to_string();
        for f in &mut source.features {
            *f = data_root.join(&*f).display().to_string();
        }
    };
    rebase(&mut config.train);
    rebase(&mut config.test);
    config
}

/// Criterion 7: on the bundled zero-noise fixture with TRECVid-shaped splits
/// (588/1116/500), the within-dataset run reaches Spearman >= 0.99 and the
/// mean-shifted cross-dataset run scores strictly below it, within 60 s.
#[test]
fn criterion_7_end_to_end_fixture() {
    let start = Instant::now();
    let spec = SyntheticSpec::load(fixture_dir().join("synth.toml")).unwrap();
    assert_eq!(
        (spec.train_n, spec.dev_n, spec.test_n),
        (588, 1116, 500),
        "fixture must keep the TRECVid-shaped splits"
    );
    assert_eq!(spec.noise_stddev, 0.0);
    assert_eq!(spec.datasets[1].mean_shift, 2.0);

    let dir = tempfile::tempdir().unwrap();
    // the bundled configs point at data/<dataset>/ next to themselves
    write_synthetic(&spec, dir.path().join("data")).unwrap();

    let within_config = fixture_config(dir.path(), "exp_subtask1.toml");
    let across_config = fixture_config(dir.path(), "exp_subtask2.toml");
    assert_eq!(within_config.protocol, Protocol::Subtask1);
    assert_eq!(across_config.protocol, Protocol::Subtask2);

    let within = run_experiment(&within_config, Path::new("/")).unwrap();
    let across = run_experiment(&across_config, Path::new("/")).unwrap();
    let rs_within = within.rows[0].spearman;
    let rs_across = across.rows[0].spearman;

    assert!(rs_within >= 0.99, "within-dataset spearman {rs_within}");
    assert!(
        rs_across < rs_within,
        "cross-dataset {rs_across} should fall below within-dataset {rs_within}"
    );
    assert_eq!(within.rows[0].n_test, 500);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "criterion 7 (end-to-end fixture: within {rs_within:.4}, across {rs_across:.4}, {elapsed:?}): PASS"
    );
}

/// Criterion 8: rendered tables reproduce the published formatting
/// conventions byte-for-byte against golden files.
#[test]
fn criterion_8_table_fidelity() {
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let row = |run: &str, target: Target, rs: f64, r: f64| ReportRow {
        run: run.into(),
        target,
        spearman: rs,
        pearson: r,
        n_test: 500,
        dropped: 0,
    };

    let memento = ReportTable::new(vec![row(
        "BayesianRidge Dense121",
        Target::ShortNorm,
        0.524,
        0.522,
    )]);
    let rendered = render_table(&memento, ReportFormat::Markdown);
    let golden = std::fs::read_to_string(golden_dir.join("memento_row.md")).unwrap();
    assert_eq!(rendered, golden, "markdown row drifted from golden");

    let trecvid = ReportTable::new(vec![
        row("BayesianRidge Dense121", Target::ShortNorm, 0.053, 0.071),
        row("xResNet50 Transfer Frames", Target::ShortNorm, 0.105, 0.130),
        row("xResNet50 Transfer Frames", Target::Long, -0.021, -0.036),
        row("AWD-LSTM Transfer Caption", Target::ShortNorm, 0.105, 0.083),
        row("AWD-LSTM Transfer Caption", Target::Long, 0.002, 0.013),
    ]);
    let rendered = render_table(&trecvid, ReportFormat::Plain);
    let golden = std::fs::read_to_string(golden_dir.join("trecvid_subtask1.txt")).unwrap();
    assert_eq!(rendered, golden, "plain table drifted from golden");
    println!("criterion 8 (table fidelity vs golden files): PASS");
}

/// Criterion 9: two full pipeline runs (generate, fit, evaluate, write)
/// produce byte-identical report files.
#[test]
fn criterion_9_pipeline_determinism() {
    let spec = SyntheticSpec::load(fixture_dir().join("synth.toml")).unwrap();
    let run_once = || -> Vec<u8> {
        let dir = tempfile::tempdir().unwrap();
        write_synthetic(&spec, dir.path()).unwrap();
        let config = ExperimentConfig {
            run_name: "BayesianRidge Synth".into(),
            protocol: Protocol::Subtask1,
            seed: 42,
            targets: vec![Target::ShortNorm, Target::ShortRaw],
            modality: Modality::Visual,
            aggregation: Aggregation::Mean,
            vocab_size: 2000,
            train: DataSource {
                dataset_id: "alpha".into(),
                splits: vec![TrainSplit::Train, TrainSplit::Dev],
                manifest: dir.path().join("alpha/manifest.toml").display().to_string(),
                ground_truth: dir
                    .path()
                    .join("alpha/ground_truth.csv")
                    .display()
                    .to_string(),
                features: vec![dir.path().join("alpha/features.csv").display().to_string()],
                captions: None,
            },
            test: DataSource {
                dataset_id: "alpha".into(),
                splits: vec![TrainSplit::Train, TrainSplit::Dev],
                manifest: dir.path().join("alpha/manifest.toml").display().to_string(),
                ground_truth: dir
                    .path()
                    .join("alpha/ground_truth.csv")
                    .display()
                    .to_string(),
                features: vec![dir.path().join("alpha/features.csv").display().to_string()],
                captions: None,
            },
        };
        let report = run_experiment(&config, Path::new("/")).unwrap();
        let out = dir.path().join("report.csv");
        report.write_csv(&out).unwrap();
        std::fs::read(&out).unwrap()
    };

    let first = run_once();
    let second = run_once();
    assert_eq!(first, second, "report bytes differ between runs");

    // in-memory generation is deterministic too
    let a = generate_synthetic(&spec).unwrap();
    let b = generate_synthetic(&spec).unwrap();
    assert_eq!(a[0].features.len(), b[0].features.len());
    for ((ida, rowa), (idb, rowb)) in a[0].features.iter().zip(b[0].features.iter()) {
        assert_eq!(ida, idb);
        assert_eq!(rowa, rowb);
    }
    println!("criterion 9 (pipeline determinism, byte-identical reports): PASS");
}
