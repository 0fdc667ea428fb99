//! Checkpoint files.
//!
//! Two lines: a JSON header, then the base64 encoding of every parameter
//! as a little-endian `f64`, concatenated in [`TENSOR_NAMES`] order.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::params::{ModelParams, ModelShape, TENSOR_NAMES};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "hydroseries-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Run context stored alongside the weights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub l_seq: usize,
    pub input_names: Vec<String>,
    pub target_names: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    shape: ModelShape,
    dropout_rate: f64,
    meta: CheckpointMeta,
    parameter_order: Vec<String>,
    n_values: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub meta: CheckpointMeta,
}

pub fn encode_checkpoint(params: &ModelParams, meta: &CheckpointMeta) -> Result<String> {
    params.validate()?;
    let flat = params.flatten();
    let header = Header {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        shape: params.shape(),
        dropout_rate: params.dropout_rate,
        meta: meta.clone(),
        parameter_order: TENSOR_NAMES.iter().map(|s| s.to_string()).collect(),
        n_values: flat.len(),
    };
    let bytes: Vec<u8> = flat.iter().flat_map(|v| v.to_le_bytes()).collect();
    Ok(format!("{}\n{}\n", serde_json::to_string(&header)?, STANDARD.encode(bytes)))
}

pub fn decode_checkpoint(text: &str) -> Result<Checkpoint> {
    let format_err = |offset: usize, message: String| Error::Format { offset, message };
    let Some(newline) = text.find('\n') else {
        return Err(format_err(text.len(), "missing payload line".into()));
    };
    let header: Header = serde_json::from_str(&text[..newline])
        .map_err(|e| format_err(e.column().saturating_sub(1), format!("bad header: {e}")))?;
    if header.format != CHECKPOINT_FORMAT || header.version != CHECKPOINT_VERSION {
        return Err(format_err(0, format!("unsupported format {} v{}", header.format, header.version)));
    }
    if header.parameter_order != TENSOR_NAMES {
        return Err(format_err(0, "unexpected parameter order".into()));
    }
    let expected = header.shape.n_parameters();
    if header.n_values != expected {
        return Err(format_err(0, format!("header declares {} values, shape needs {expected}", header.n_values)));
    }

    let payload_start = newline + 1;
    let payload = text[payload_start..].trim_end_matches(['\n', '\r']);
    let bytes = STANDARD.decode(payload).map_err(|e| {
        let offset = match e {
            base64::DecodeError::InvalidByte(i, _) | base64::DecodeError::InvalidLastSymbol(i, _) => i,
            _ => payload.len(),
        };
        format_err(payload_start + offset, format!("bad payload: {e}"))
    })?;
    if bytes.len() != expected * 8 {
        return Err(format_err(
            payload_start + payload.len(),
            format!("payload holds {} bytes, expected {}", bytes.len(), expected * 8),
        ));
    }
    let flat: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let mut params = ModelParams::zeros(header.shape);
    params.dropout_rate = header.dropout_rate;
    params.assign_flat(&flat)?;
    Ok(Checkpoint {
        params,
        meta: header.meta,
    })
}

pub fn save_checkpoint(path: &Path, params: &ModelParams, meta: &CheckpointMeta) -> Result<()> {
    std::fs::write(path, encode_checkpoint(params, meta)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ingestion(path, e.to_string()))?;
    decode_checkpoint(&text)
}
