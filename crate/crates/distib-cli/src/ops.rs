//! Subcommand implementations.
//!
//! Every command resolves its config, writes a manifest naming the files it
//! is about to produce, then computes. If the computation fails, everything
//! the command wrote (including the manifest) is removed, so an output
//! directory never holds artifacts from a half-finished run. The one
//! exception is `sweep`: a plane table missing failed rows is still the
//! contracted artifact, so it is kept while the process exits nonzero.

use crate::artifacts;
use crate::checkpoint;
use crate::config::{DatasetKind, RunConfig};
use crate::error::{io_err, CliError, Result};
use crate::idx;
use distib_core::data::{synth_shapes, Dataset};
use distib_core::discrete::DiscreteJoint;
use distib_core::eval::{eval_accuracy, fgsm_attack, swap_generate};
use distib_core::models::ModelBundle;
use distib_core::rng;
use distib_core::trainer::{beta_sweep, fit};
use std::path::{Path, PathBuf};

/// Salt deriving the synthetic held-out split's seed from the run seed.
const TEST_SPLIT_SALT: u64 = 0x5445_5354;

fn load_config(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = seed {
        config.train.seed = seed;
    }
    if let Some(out) = out {
        config.out_dir = out;
    }
    Ok(config)
}

/// Training and held-out datasets per the config. The held-out set is
/// `None` only for synthetic configs with `n_test_per_class = 0`.
fn load_datasets(config: &RunConfig) -> Result<(Dataset, Option<Dataset>)> {
    match config.dataset {
        DatasetKind::Synth => {
            let train = synth_shapes(config.n_per_class, config.image_side, config.train.seed)?;
            let test = if config.n_test_per_class > 0 {
                Some(synth_shapes(
                    config.n_test_per_class,
                    config.image_side,
                    rng::derive(config.train.seed, TEST_SPLIT_SALT),
                )?)
            } else {
                None
            };
            Ok((train, test))
        }
        DatasetKind::Mnist => {
            let dir = &config.data_dir;
            let train = idx::load_idx(
                &dir.join("train-images-idx3-ubyte"),
                &dir.join("train-labels-idx1-ubyte"),
                10,
            )?;
            let test = idx::load_idx(
                &dir.join("t10k-images-idx3-ubyte"),
                &dir.join("t10k-labels-idx1-ubyte"),
                10,
            )?;
            Ok((train, Some(test)))
        }
    }
}

/// Pixel side length of one image for the configured dataset.
fn image_side(config: &RunConfig, input_dim: usize) -> usize {
    let side = match config.dataset {
        DatasetKind::Synth => config.image_side,
        DatasetKind::Mnist => 28,
    };
    debug_assert_eq!(side * side, input_dim, "images must be square");
    side
}

fn load_matching_checkpoint(path: &Path, train: &Dataset) -> Result<ModelBundle> {
    let bundle = checkpoint::load(path)?;
    if bundle.config().input_dim != train.input_dim() {
        return Err(CliError::CheckpointShape {
            path: path.to_path_buf(),
            reason: format!(
                "model expects {} inputs, dataset has {}",
                bundle.config().input_dim,
                train.input_dim()
            ),
        });
    }
    if bundle.config().n_classes != train.n_classes() {
        return Err(CliError::CheckpointShape {
            path: path.to_path_buf(),
            reason: format!(
                "model expects {} classes, dataset has {}",
                bundle.config().n_classes,
                train.n_classes()
            ),
        });
    }
    Ok(bundle)
}

/// Removes every listed artifact; used when a command fails mid-run.
fn remove_outputs(paths: &[PathBuf]) {
    for p in paths {
        let _ = std::fs::remove_file(p);
    }
}

fn parse_list(text: &str) -> std::result::Result<Vec<f64>, &'static str> {
    let values: std::result::Result<Vec<f64>, _> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| "not a number"))
        .collect();
    let values = values?;
    if values.is_empty() {
        return Err("list is empty");
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("values must be finite");
    }
    Ok(values)
}

pub fn train(config_path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let config = load_config(config_path, seed, out)?;
    std::fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let manifest = config.out_dir.join("manifest.txt");
    let metrics = config.out_dir.join("metrics.csv");
    let model = config.out_dir.join("model.ckpt");
    artifacts::write_manifest(
        &manifest,
        "train",
        Some(&config),
        config.train.seed,
        &[&metrics, &model],
    )?;

    let result = (|| {
        let (train_ds, test_ds) = load_datasets(&config)?;
        let outcome = fit(&config.train, &train_ds, test_ds.as_ref())?;
        artifacts::write_metrics_csv(&metrics, &outcome.metrics)?;
        checkpoint::save(&model, &outcome.bundle)?;
        let last = outcome.last();
        println!(
            "epoch {}: total {:.4} train_acc {:.4}{}",
            last.epoch,
            last.total,
            last.train_acc,
            match last.test_acc {
                Some(t) => format!(" test_acc {t:.4}"),
                None => String::new(),
            }
        );
        println!("wrote {}", metrics.display());
        println!("wrote {}", model.display());
        Ok(())
    })();
    if result.is_err() {
        remove_outputs(&[manifest, metrics, model]);
    }
    result
}

pub fn eval(config_path: &Path, ckpt: &Path, out: Option<PathBuf>) -> Result<()> {
    let config = load_config(config_path, None, out)?;
    std::fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let manifest = config.out_dir.join("manifest.txt");
    let table = config.out_dir.join("eval.csv");
    artifacts::write_manifest(&manifest, "eval", Some(&config), config.train.seed, &[&table])?;

    let result = (|| {
        let (train_ds, test_ds) = load_datasets(&config)?;
        let bundle = load_matching_checkpoint(ckpt, &train_ds)?;
        let mut rows = Vec::new();
        let train_acc = eval_accuracy(&bundle, train_ds.features(), train_ds.labels())?;
        rows.push(("train", 0.0, train_acc));
        println!("train accuracy {train_acc:.4}");
        if let Some(test_ds) = &test_ds {
            let test_acc = eval_accuracy(&bundle, test_ds.features(), test_ds.labels())?;
            rows.push(("test", 0.0, test_acc));
            println!("test accuracy {test_acc:.4}");
        }
        artifacts::write_accuracy_csv(&table, &rows)?;
        println!("wrote {}", table.display());
        Ok(())
    })();
    if result.is_err() {
        remove_outputs(&[manifest, table]);
    }
    result
}

pub fn attack(config_path: &Path, ckpt: &Path, eps_text: &str, out: Option<PathBuf>) -> Result<()> {
    let eps_list = parse_list(eps_text).map_err(|reason| CliError::BadEpsList {
        text: eps_text.to_string(),
        reason,
    })?;
    if eps_list.iter().any(|&e| e < 0.0) {
        return Err(CliError::BadEpsList {
            text: eps_text.to_string(),
            reason: "strengths must be non-negative",
        });
    }
    let config = load_config(config_path, None, out)?;
    std::fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let manifest = config.out_dir.join("manifest.txt");
    let table = config.out_dir.join("attack.csv");
    artifacts::write_manifest(&manifest, "attack", Some(&config), config.train.seed, &[&table])?;

    let result = (|| {
        let (train_ds, test_ds) = load_datasets(&config)?;
        let bundle = load_matching_checkpoint(ckpt, &train_ds)?;
        let mut rows: Vec<(&str, f64, f64)> = Vec::new();
        let mut splits: Vec<(&str, &Dataset)> = vec![("train", &train_ds)];
        if let Some(test_ds) = &test_ds {
            splits.push(("test", test_ds));
        }
        for (name, ds) in splits {
            let clean = eval_accuracy(&bundle, ds.features(), ds.labels())?;
            rows.push((name, 0.0, clean));
            println!("{name} clean accuracy {clean:.4}");
            for &eps in &eps_list {
                let adv = fgsm_attack(&bundle, ds.features(), ds.labels(), eps)?;
                let acc = eval_accuracy(&bundle, &adv, ds.labels())?;
                rows.push((name, eps, acc));
                println!("{name} accuracy at eps {eps}: {acc:.4}");
            }
        }
        artifacts::write_accuracy_csv(&table, &rows)?;
        println!("wrote {}", table.display());
        Ok(())
    })();
    if result.is_err() {
        remove_outputs(&[manifest, table]);
    }
    result
}

pub fn swap(config_path: &Path, ckpt: &Path, n: usize, out: Option<PathBuf>) -> Result<()> {
    let config = load_config(config_path, None, out)?;
    std::fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let manifest = config.out_dir.join("manifest.txt");
    let table = config.out_dir.join("swap_index.csv");
    let image = config.out_dir.join("swap_grid.pgm");
    artifacts::write_manifest(
        &manifest,
        "swap",
        Some(&config),
        config.train.seed,
        &[&table, &image],
    )?;

    let result = (|| {
        let (train_ds, test_ds) = load_datasets(&config)?;
        let bundle = load_matching_checkpoint(ckpt, &train_ds)?;
        // Swap grids read from the held-out split when one exists.
        let ds = test_ds.as_ref().unwrap_or(&train_ds);
        let indices: Vec<usize> = (0..n.min(ds.len())).collect();
        let grid = swap_generate(&bundle, ds, &indices)?;
        artifacts::write_swap_csv(&table, &grid)?;
        artifacts::write_swap_pgm(&image, &grid, image_side(&config, ds.input_dim()))?;
        let diag = grid.diagonal_error();
        println!("diagonal reconstruction error {diag:.4}");
        if let Some(off) = grid.off_diagonal_error() {
            println!("off-diagonal reconstruction error {off:.4}");
        }
        println!("wrote {}", table.display());
        println!("wrote {}", image.display());
        Ok(())
    })();
    if result.is_err() {
        remove_outputs(&[manifest, table, image]);
    }
    result
}

pub fn sweep(config_path: &Path, betas_text: &str, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let betas = parse_list(betas_text).map_err(|reason| CliError::BadBetaList {
        text: betas_text.to_string(),
        reason,
    })?;
    if betas.iter().any(|&b| !(0.0..=1.0).contains(&b)) {
        return Err(CliError::BadBetaList {
            text: betas_text.to_string(),
            reason: "compression weights must lie in [0, 1]",
        });
    }
    let config = load_config(config_path, seed, out)?;
    std::fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let manifest = config.out_dir.join("manifest.txt");
    let plane = config.out_dir.join("plane.csv");
    artifacts::write_manifest(&manifest, "sweep", Some(&config), config.train.seed, &[&plane])?;

    let report = (|| {
        let (train_ds, test_ds) = load_datasets(&config)?;
        let test_ds = test_ds.ok_or(distib_core::error::Error::InvalidConfig {
            field: "n_test_per_class",
            reason: "a sweep needs a held-out split",
        })?;
        beta_sweep(&config.train, &betas, &train_ds, &test_ds).map_err(CliError::Core)
    })();
    let report = match report {
        Ok(report) => report,
        Err(err) => {
            remove_outputs(&[manifest, plane]);
            return Err(err);
        }
    };

    if let Err(err) = artifacts::write_plane_csv(&plane, &report.rows) {
        remove_outputs(&[manifest, plane]);
        return Err(err);
    }
    for row in &report.rows {
        println!(
            "beta {}: I_XA_upper {:.4} I_AY_lower {:.4} test_acc {:.4}",
            row.beta, row.i_xa_upper, row.i_ay_lower, row.test_acc
        );
    }
    println!("wrote {}", plane.display());
    // Failed rows keep the successful table on disk but fail the process.
    for failure in &report.failures {
        eprintln!("sweep: beta {} failed: {}", failure.beta, failure.error);
    }
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::SweepFailures {
            failed: report.failures.len(),
        })
    }
}

pub fn verify_theorem1(trials: u64, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let mut outputs: Vec<PathBuf> = Vec::new();
    let mut report_csv = None;
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let manifest = dir.join("manifest.txt");
        let table = dir.join("theorem1.csv");
        artifacts::write_manifest(&manifest, "verify-theorem1", None, seed, &[&table])?;
        outputs.push(manifest);
        outputs.push(table.clone());
        report_csv = Some(table);
    }

    let result = (|| {
        let mut stream = rng::stream(seed, rng::labels::JOINTS);
        let mut failures = 0u64;
        let mut worst = 0.0f64;
        let mut lines = String::from("trial,n_vars,lhs,rhs,gap\n");
        for trial in 0..trials {
            let joint = DiscreteJoint::random_factorized(&mut stream, 4, 4);
            let report = joint.transmitted_sum_check().map_err(CliError::Core)?;
            lines.push_str(&format!(
                "{},{},{},{},{}\n",
                trial,
                joint.n_vars(),
                report.lhs,
                report.rhs,
                report.gap
            ));
            if report.gap >= 1e-9 {
                failures += 1;
                eprintln!("trial {trial}: gap {} exceeds 1e-9", report.gap);
            }
            if report.gap > worst {
                worst = report.gap;
            }
        }
        if let Some(path) = &report_csv {
            std::fs::write(path, &lines).map_err(io_err(path))?;
            println!("wrote {}", path.display());
        }
        println!("{trials} trials, worst gap {worst:.3e}");
        if failures > 0 {
            Err(CliError::IdentityGap { failures, trials })
        } else {
            Ok(())
        }
    })();
    if matches!(result, Err(CliError::Io { .. }) | Err(CliError::Core(_))) {
        remove_outputs(&outputs);
    }
    result
}

pub fn synth_data(config_path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let config = load_config(config_path, seed, out)?;
    std::fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let manifest = config.out_dir.join("manifest.txt");
    // MNIST-standard names so an exported directory is directly loadable.
    let files = [
        config.out_dir.join("train-images-idx3-ubyte"),
        config.out_dir.join("train-labels-idx1-ubyte"),
        config.out_dir.join("t10k-images-idx3-ubyte"),
        config.out_dir.join("t10k-labels-idx1-ubyte"),
    ];
    artifacts::write_manifest(
        &manifest,
        "synth-data",
        Some(&config),
        config.train.seed,
        &[&files[0], &files[1], &files[2], &files[3]],
    )?;

    let result = (|| {
        let train = synth_shapes(config.n_per_class, config.image_side, config.train.seed)?;
        let test = synth_shapes(
            config.n_test_per_class.max(1),
            config.image_side,
            rng::derive(config.train.seed, TEST_SPLIT_SALT),
        )?;
        idx::write_images(&files[0], train.features(), config.image_side)?;
        idx::write_labels(&files[1], train.labels())?;
        idx::write_images(&files[2], test.features(), config.image_side)?;
        idx::write_labels(&files[3], test.labels())?;
        println!(
            "wrote {} train rows and {} held-out rows to {}",
            train.len(),
            test.len(),
            config.out_dir.display()
        );
        Ok(())
    })();
    if result.is_err() {
        let mut all = files.to_vec();
        all.push(manifest);
        remove_outputs(&all);
    }
    result
}
