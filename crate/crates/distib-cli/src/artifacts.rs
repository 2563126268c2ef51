//! Deterministic artifact writers: CSVs, PGM image grids, run manifests.
//!
//! Numbers are written with Rust's shortest-roundtrip float formatting and
//! all files end in a trailing newline, so identical inputs always produce
//! byte-identical files.

use crate::config::RunConfig;
use crate::error::{io_err, CliError, Result};
use distib_core::eval::SwapGrid;
use distib_core::trainer::{MetricsRecord, PlaneRow};
use std::path::Path;

pub const METRICS_HEADER: &str =
    "epoch,total,sufficiency,prediction,kl_A,kl_Z,I_XA_upper,I_XZ_upper,I_AY_lower,H_Y,train_acc,test_acc";
pub const PLANE_HEADER: &str = "beta,I_XA_upper,I_AY_lower,H_Y,test_acc";
pub const SWAP_HEADER: &str = "flat_index,a_source,z_source,gen_label";
pub const ACCURACY_HEADER: &str = "split,epsilon,accuracy";

/// Rejects non-finite metric values; emitted CSVs never contain NaN or inf.
fn finite(name: &'static str, epoch: usize, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::NonFiniteMetric { name, epoch })
    }
}

pub fn write_metrics_csv(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in records {
        let e = r.epoch;
        let test_acc = match r.test_acc {
            Some(v) => finite("test_acc", e, v)?.to_string(),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            e,
            finite("total", e, r.total)?,
            finite("sufficiency", e, r.sufficiency)?,
            finite("prediction", e, r.prediction)?,
            finite("kl_A", e, r.kl_a)?,
            finite("kl_Z", e, r.kl_z)?,
            finite("I_XA_upper", e, r.mi.i_xa_upper)?,
            finite("I_XZ_upper", e, r.mi.i_xz_upper)?,
            finite("I_AY_lower", e, r.mi.i_ay_lower)?,
            finite("H_Y", e, r.mi.h_y)?,
            finite("train_acc", e, r.train_acc)?,
            test_acc,
        ));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn write_plane_csv(path: &Path, rows: &[PlaneRow]) -> Result<()> {
    let mut out = String::from(PLANE_HEADER);
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.beta,
            finite("I_XA_upper", i, r.i_xa_upper)?,
            finite("I_AY_lower", i, r.i_ay_lower)?,
            finite("H_Y", i, r.h_y)?,
            finite("test_acc", i, r.test_acc)?,
        ));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn write_swap_csv(path: &Path, grid: &SwapGrid) -> Result<()> {
    let mut out = String::from(SWAP_HEADER);
    out.push('\n');
    for flat in 0..grid.gen_labels.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            flat, grid.a_source[flat], grid.z_source[flat], grid.gen_labels[flat]
        ));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Accuracy table shared by `eval` (epsilon 0 only) and `attack`.
pub fn write_accuracy_csv(path: &Path, rows: &[(&str, f64, f64)]) -> Result<()> {
    let mut out = String::from(ACCURACY_HEADER);
    out.push('\n');
    for (i, (split, eps, acc)) in rows.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", split, eps, finite("accuracy", i, *acc)?));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Tiles an `n x n` swap grid into one 8-bit PGM (P5) image.
///
/// Tile `(i, j)` holds flat entry `i * n + j`; pixel values are clamped to
/// [0,1] before quantization since generations are unconstrained reals.
pub fn write_swap_pgm(path: &Path, grid: &SwapGrid, side: usize) -> Result<()> {
    let n = grid.n();
    let width = n * side;
    let mut header = format!("P5\n{width} {width}\n255\n").into_bytes();
    let mut pixels = vec![0u8; width * width];
    for i in 0..n {
        for j in 0..n {
            let row = grid.generations.row_slice(i * n + j);
            for py in 0..side {
                for px in 0..side {
                    let v = row[py * side + px].clamp(0.0, 1.0);
                    pixels[(i * side + py) * width + j * side + px] = (v * 255.0).round() as u8;
                }
            }
        }
    }
    header.extend_from_slice(&pixels);
    std::fs::write(path, header).map_err(io_err(path))
}

/// Writes the run manifest: command, toolkit version, the resolved config,
/// and the artifact paths the command is about to produce. The file is
/// itself a loadable config (bookkeeping keys are ignored by the parser).
pub fn write_manifest(
    path: &Path,
    command: &str,
    config: Option<&RunConfig>,
    seed: u64,
    outputs: &[&Path],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("command = {command}\n"));
    out.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    match config {
        Some(c) => {
            for line in c.echo_lines() {
                out.push_str(&line);
                out.push('\n');
            }
        }
        None => out.push_str(&format!("seed = {seed}\n")),
    }
    let names: Vec<String> = outputs
        .iter()
        .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    out.push_str(&format!("outputs = {}\n", names.join(",")));
    std::fs::write(path, out).map_err(io_err(path))
}
