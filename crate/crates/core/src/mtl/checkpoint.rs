//! Bit-exact checkpointing: a versioned JSON envelope whose body carries
//! shape metadata and little-endian hex-encoded f64 arrays, guarded by a
//! SHA-256 checksum.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mtl::{Layer, NetworkConfig, NetworkParams};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    /// SHA-256 of the `body` string.
    checksum: String,
    /// JSON-encoded [`CheckpointBody`]; hashed as the exact string stored.
    body: String,
}

#[derive(Serialize, Deserialize)]
struct CheckpointBody {
    input_width: usize,
    config: NetworkConfig,
    tensors: Vec<TensorEntry>,
    log_var_clf: String,
    log_var_reg: String,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
    weights: String,
    bias: String,
}

fn encode_f64s(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    hex::encode(bytes)
}

fn decode_f64s(raw: &str, expected_len: usize, what: &str) -> Result<Vec<f64>> {
    let bytes =
        hex::decode(raw).map_err(|e| Error::CorruptCheckpoint(format!("{what}: bad hex: {e}")))?;
    if bytes.len() != expected_len * 8 {
        return Err(Error::VersionMismatch(format!(
            "{what}: declared length {expected_len} but payload holds {} values",
            bytes.len() / 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn layer_names(params: &NetworkParams) -> Vec<String> {
    let mut names = Vec::new();
    for i in 0..params.shared.len() {
        names.push(format!("shared.{i}"));
    }
    for i in 0..params.clf_branch.len() {
        names.push(format!("clf.{i}"));
    }
    names.push("clf_head".into());
    for i in 0..params.reg_branch.len() {
        names.push(format!("reg.{i}"));
    }
    names.push("reg_head".into());
    names
}

fn sha256_hex(data: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data.as_bytes());
    hex::encode(hasher.finalize())
}

/// Writes parameters and config; the round trip is bit-exact.
pub fn save_checkpoint(params: &NetworkParams, config: &NetworkConfig, path: &Path) -> Result<()> {
    let tensors: Vec<TensorEntry> = params
        .layers()
        .into_iter()
        .zip(layer_names(params))
        .map(|(layer, name)| TensorEntry {
            name,
            rows: layer.out_dim,
            cols: layer.in_dim,
            weights: encode_f64s(&layer.weights),
            bias: encode_f64s(&layer.bias),
        })
        .collect();
    let body = CheckpointBody {
        input_width: params.input_width,
        config: config.clone(),
        tensors,
        log_var_clf: encode_f64s(&[params.log_var_clf]),
        log_var_reg: encode_f64s(&[params.log_var_reg]),
    };
    let body_json = serde_json::to_string(&body)?;
    let envelope = Envelope {
        format_version: FORMAT_VERSION,
        checksum: sha256_hex(&body_json),
        body: body_json,
    };
    std::fs::write(path, serde_json::to_string(&envelope)?)?;
    Ok(())
}

fn take_layer(
    entries: &mut std::vec::IntoIter<TensorEntry>,
    expected_name: &str,
    expected_in: usize,
) -> Result<Layer> {
    let entry = entries
        .next()
        .ok_or_else(|| Error::VersionMismatch(format!("missing tensor {expected_name}")))?;
    if entry.name != expected_name {
        return Err(Error::VersionMismatch(format!(
            "tensor order: expected {expected_name}, found {}",
            entry.name
        )));
    }
    if entry.cols != expected_in {
        return Err(Error::VersionMismatch(format!(
            "{expected_name}: input width {} does not chain with {expected_in}",
            entry.cols
        )));
    }
    Ok(Layer {
        in_dim: entry.cols,
        out_dim: entry.rows,
        weights: decode_f64s(&entry.weights, entry.rows * entry.cols, &entry.name)?,
        bias: decode_f64s(&entry.bias, entry.rows, &entry.name)?,
    })
}

/// Reads a checkpoint, validating version, checksum, and shape chaining.
pub fn load_checkpoint(path: &Path) -> Result<(NetworkParams, NetworkConfig)> {
    let raw = std::fs::read_to_string(path)?;
    let envelope: Envelope = serde_json::from_str(&raw)
        .map_err(|e| Error::CorruptCheckpoint(format!("unparseable envelope: {e}")))?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch(format!(
            "checkpoint format {} (supported: {FORMAT_VERSION})",
            envelope.format_version
        )));
    }
    if sha256_hex(&envelope.body) != envelope.checksum {
        return Err(Error::CorruptCheckpoint("checksum mismatch".into()));
    }
    let body: CheckpointBody = serde_json::from_str(&envelope.body)
        .map_err(|e| Error::CorruptCheckpoint(format!("unparseable body: {e}")))?;
    let config = body.config;
    config.validate()?;

    let mut entries = body.tensors.into_iter();
    let mut in_dim = body.input_width;
    let mut shared = Vec::with_capacity(config.shared_sizes.len());
    for i in 0..config.shared_sizes.len() {
        let layer = take_layer(&mut entries, &format!("shared.{i}"), in_dim)?;
        in_dim = layer.out_dim;
        shared.push(layer);
    }
    let trunk_out = in_dim;
    let mut clf_branch = Vec::with_capacity(config.clf_sizes.len());
    for i in 0..config.clf_sizes.len() {
        let layer = take_layer(&mut entries, &format!("clf.{i}"), in_dim)?;
        in_dim = layer.out_dim;
        clf_branch.push(layer);
    }
    let clf_head = take_layer(&mut entries, "clf_head", in_dim)?;
    in_dim = trunk_out;
    let mut reg_branch = Vec::with_capacity(config.reg_sizes.len());
    for i in 0..config.reg_sizes.len() {
        let layer = take_layer(&mut entries, &format!("reg.{i}"), in_dim)?;
        in_dim = layer.out_dim;
        reg_branch.push(layer);
    }
    let reg_head = take_layer(&mut entries, "reg_head", in_dim)?;
    if entries.next().is_some() {
        return Err(Error::VersionMismatch("trailing tensors".into()));
    }

    let params = NetworkParams {
        input_width: body.input_width,
        shared,
        clf_branch,
        clf_head,
        reg_branch,
        reg_head,
        log_var_clf: decode_f64s(&body.log_var_clf, 1, "log_var_clf")?[0],
        log_var_reg: decode_f64s(&body.log_var_reg, 1, "log_var_reg")?[0],
    };
    Ok((params, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtl::rng_from_seed;

    fn params_and_config(seed: u64) -> (NetworkParams, NetworkConfig) {
        let config = NetworkConfig {
            shared_sizes: vec![6, 4],
            clf_sizes: vec![3],
            reg_sizes: vec![4, 2],
            seed,
            ..NetworkConfig::with_seed(seed)
        };
        let mut rng = rng_from_seed(seed);
        let params = NetworkParams::init(5, &config, &mut rng).unwrap();
        (params, config)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (mut params, config) = params_and_config(3);
        params.log_var_clf = -0.37;
        params.log_var_reg = f64::MIN_POSITIVE; // subnormal boundary survives
        save_checkpoint(&params, &config, &path).unwrap();
        let (loaded, loaded_config) = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, params);
        assert_eq!(loaded_config, config);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (params, config) = params_and_config(4);
        save_checkpoint(&params, &config, &path).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &raw[..raw.len() / 2]).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::CorruptCheckpoint(_))
        ));
    }

    #[test]
    fn checksum_flip_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (params, config) = params_and_config(5);
        save_checkpoint(&params, &config, &path).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        // Flip one hex digit inside the body payload.
        let idx = raw.find("\\\"weights\\\":\\\"").unwrap() + 14;
        let mut bytes = raw.into_bytes();
        bytes[idx] = if bytes[idx] == b'a' { b'b' } else { b'a' };
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::CorruptCheckpoint(_))
        ));
    }

    #[test]
    fn tampered_width_is_version_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (params, config) = params_and_config(6);
        save_checkpoint(&params, &config, &path).unwrap();

        // Rewrite the declared input width, keeping the checksum honest, so
        // only the structural validation can catch it.
        let raw = std::fs::read_to_string(&path).unwrap();
        let mut envelope: serde_json::Value = serde_json::from_str(&raw).unwrap();
        let body_raw = envelope["body"].as_str().unwrap();
        let new_body = body_raw.replace("\"input_width\":5", "\"input_width\":9");
        envelope["checksum"] = serde_json::Value::String(sha256_hex(&new_body));
        envelope["body"] = serde_json::Value::String(new_body);
        std::fs::write(&path, envelope.to_string()).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::VersionMismatch(_))
        ));
    }

    #[test]
    fn unknown_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (params, config) = params_and_config(7);
        save_checkpoint(&params, &config, &path).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        std::fs::write(
            &path,
            raw.replace("\"format_version\":1", "\"format_version\":2"),
        )
        .unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::VersionMismatch(_))
        ));
    }

    #[test]
    fn width_validation_helper() {
        let (params, _) = params_and_config(8);
        assert!(params.validate_input_width(5).is_ok());
        assert!(matches!(
            params.validate_input_width(7),
            Err(Error::VersionMismatch(_))
        ));
    }
}
