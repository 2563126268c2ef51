//! IDX (MNIST-format) reading and writing.
//!
//! Headers are big-endian: magic, then one u32 per dimension. Images use
//! magic 0x00000803 (u8, 3 dims) and labels 0x00000801 (u8, 1 dim). Pixels
//! are scaled to [0,1] on read and quantized by rounding on write.

use crate::error::{io_err, CliError, Result};
use distib_core::data::{Dataset, IDX_IMAGE_MAGIC as IMAGES_MAGIC, IDX_LABEL_MAGIC as LABELS_MAGIC};
use distib_core::tensor::Tensor;
use std::path::Path;

fn read_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    let slice = bytes
        .get(at..at + 4)
        .ok_or_else(|| CliError::IdxLength {
            path: path.to_path_buf(),
            expected: at + 4,
            found: bytes.len(),
        })?;
    Ok(u32::from_be_bytes(slice.try_into().expect("4-byte slice")))
}

/// Reads an image file into row-major [0,1] rows of `rows * cols` pixels.
fn read_images(path: &Path) -> Result<(usize, usize, usize, Vec<f64>)> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let magic = read_u32(&bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(CliError::IdxMagic {
            path: path.to_path_buf(),
            expected: IMAGES_MAGIC,
            found: magic,
        });
    }
    let n = read_u32(&bytes, 4, path)? as usize;
    let rows = read_u32(&bytes, 8, path)? as usize;
    let cols = read_u32(&bytes, 12, path)? as usize;
    let expected = 16 + n * rows * cols;
    if bytes.len() != expected {
        return Err(CliError::IdxLength {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    let data = bytes[16..].iter().map(|&b| b as f64 / 255.0).collect();
    Ok((n, rows, cols, data))
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let magic = read_u32(&bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(CliError::IdxMagic {
            path: path.to_path_buf(),
            expected: LABELS_MAGIC,
            found: magic,
        });
    }
    let n = read_u32(&bytes, 4, path)? as usize;
    let expected = 8 + n;
    if bytes.len() != expected {
        return Err(CliError::IdxLength {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..].iter().map(|&b| b as usize).collect())
}

/// Loads an image/label IDX pair as a dataset with `n_classes` label arity.
pub fn load_idx(images: &Path, labels: &Path, n_classes: usize) -> Result<Dataset> {
    let (n, rows, cols, data) = read_images(images)?;
    let y = read_labels(labels)?;
    if n != y.len() {
        return Err(CliError::IdxMismatch {
            images: images.to_path_buf(),
            labels: labels.to_path_buf(),
            image_count: n,
            label_count: y.len(),
        });
    }
    let features = Tensor::new([n, rows * cols], data)
        .map_err(|source| CliError::CoreContext {
            context: format!("{}: assembling features", images.display()),
            source,
        })?;
    Dataset::new(features, y, n_classes).map_err(|source| CliError::CoreContext {
        context: format!("{}: assembling dataset", images.display()),
        source,
    })
}

/// Writes a dataset's features as an IDX image file of `side x side` pixels.
///
/// Pixels are `round(v * 255)`; datasets whose features are exact u8/255
/// multiples (both loaded MNIST and the synthetic renderer) round-trip
/// bit-exactly through a write/read cycle.
pub fn write_images(path: &Path, features: &Tensor, side: usize) -> Result<()> {
    let (n, d) = features.dims2().map_err(CliError::Core)?;
    assert_eq!(d, side * side, "feature width must be side^2");
    let mut bytes = Vec::with_capacity(16 + n * d);
    bytes.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(n as u32).to_be_bytes());
    bytes.extend_from_slice(&(side as u32).to_be_bytes());
    bytes.extend_from_slice(&(side as u32).to_be_bytes());
    bytes.extend(features.data().iter().map(|&v| quantize(v)));
    std::fs::write(path, bytes).map_err(io_err(path))
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend(labels.iter().map(|&y| {
        debug_assert!(y < 256, "IDX labels are single bytes");
        y as u8
    }));
    std::fs::write(path, bytes).map_err(io_err(path))
}

fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}
