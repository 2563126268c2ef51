//! Binary model checkpoints.
//!
//! Layout: 8-byte magic `DISTIB01`, five little-endian u32 shape fields
//! (input_dim, n_classes, dim_a, dim_z, hidden), then every parameter
//! tensor's elements as little-endian f64 in declaration order. Shapes are
//! implied by the header, so the expected byte count is exact and any
//! drift is a hard error.

use crate::error::{io_err, CliError, Result};
use distib_core::models::{ModelBundle, ModelConfig};
use distib_core::rng;
use std::path::Path;

const MAGIC: &[u8; 8] = b"DISTIB01";

pub fn save(path: &Path, bundle: &ModelBundle) -> Result<()> {
    let config = bundle.config();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    for field in [
        config.input_dim,
        config.n_classes,
        config.dim_a,
        config.dim_z,
        config.hidden,
    ] {
        bytes.extend_from_slice(&(field as u32).to_le_bytes());
    }
    for tensor in bundle.params() {
        for &v in tensor.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

pub fn load(path: &Path) -> Result<ModelBundle> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    if bytes.len() < 28 || &bytes[0..8] != MAGIC {
        return Err(CliError::CheckpointMagic {
            path: path.to_path_buf(),
        });
    }
    let field = |i: usize| {
        u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().expect("u32 field")) as usize
    };
    let config = ModelConfig::new(field(0), field(1), field(2), field(3), field(4));
    config.validate().map_err(|source| CliError::CheckpointShape {
        path: path.to_path_buf(),
        reason: source.to_string(),
    })?;

    // Initialize a bundle of the right shape, then overwrite every value.
    let mut bundle = ModelBundle::init(config, &mut rng::stream(0, rng::labels::INIT))
        .map_err(|source| CliError::CheckpointShape {
            path: path.to_path_buf(),
            reason: source.to_string(),
        })?;
    let expected: usize = 28 + 8 * bundle.params().iter().map(|t| t.data().len()).sum::<usize>();
    if bytes.len() != expected {
        return Err(CliError::CheckpointLength {
            path: path.to_path_buf(),
        });
    }
    let mut at = 28;
    for tensor in bundle.params_mut() {
        for v in tensor.data_mut() {
            *v = f64::from_le_bytes(bytes[at..at + 8].try_into().expect("f64 field"));
            at += 8;
        }
    }
    Ok(bundle)
}
