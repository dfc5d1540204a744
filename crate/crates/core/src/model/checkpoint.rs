//! Checkpoint file:
//!
//! ```text
//! UNLRN1
//! <version>
//! config <vocab_size> <d_model> <n_layers> <n_heads> <d_ff> <context_len>
//! <name> <dim> <dim>...
//! ...
//! DATA
//! <little-endian f32 payload in header order>
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Layout, ModelConfig, SequenceModel};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "UNLRN1";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(model: &SequenceModel, path: &Path) -> Result<()> {
    let bytes = encode(model);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

pub(crate) fn encode(model: &SequenceModel) -> Vec<u8> {
    let c = model.config();
    let mut header = format!(
        "{CHECKPOINT_MAGIC}\n{CHECKPOINT_VERSION}\nconfig {} {} {} {} {} {}\n",
        c.vocab_size, c.d_model, c.n_layers, c.n_heads, c.d_ff, c.context_len
    );
    for p in &model.layout().params {
        let dims: Vec<String> = p.shape.iter().map(usize::to_string).collect();
        header.push_str(&format!("{} {}\n", p.name, dims.join(" ")));
    }
    header.push_str("DATA\n");
    let mut bytes = header.into_bytes();
    bytes.reserve(model.params().len() * 4);
    for v in model.params() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Loads a checkpoint as a trainable model without a tokenizer.
pub fn load_checkpoint(path: &Path) -> Result<SequenceModel> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<SequenceModel> {
    let err = |m: String| Error::Checkpoint(m);
    let mut pos = 0;
    let mut next_line = || -> Result<&str> {
        let rest = &bytes[pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| err("header is truncated".into()))?;
        pos += end + 1;
        std::str::from_utf8(&rest[..end]).map_err(|_| err("header is not UTF-8".into()))
    };

    let magic = next_line().map_err(|_| err(format!("bad magic: expected {CHECKPOINT_MAGIC}")))?;
    if magic != CHECKPOINT_MAGIC {
        return Err(err(format!("bad magic: expected {CHECKPOINT_MAGIC}, found {magic:?}")));
    }
    let version = next_line()?;
    if version.trim().parse::<u32>().ok() != Some(CHECKPOINT_VERSION) {
        return Err(err(format!("unsupported version {version:?}; expected {CHECKPOINT_VERSION}")));
    }
    let config_line = next_line()?;
    let nums: Vec<usize> = config_line
        .strip_prefix("config ")
        .ok_or_else(|| err(format!("expected config line, found {config_line:?}")))?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| err(format!("bad config value {s:?}"))))
        .collect::<Result<_>>()?;
    let [vocab_size, d_model, n_layers, n_heads, d_ff, context_len] = nums[..] else {
        return Err(err(format!("config line needs 6 values, found {}", nums.len())));
    };
    let config = ModelConfig { vocab_size, d_model, n_layers, n_heads, d_ff, context_len };
    config.validate()?;
    let layout = Layout::new(&config);

    let mut declared = 0usize;
    let mut index = 0;
    loop {
        let line = next_line()?;
        if line == "DATA" {
            break;
        }
        let mut parts = line.split_whitespace();
        let name = parts.next().unwrap_or_default();
        let shape: Vec<usize> = parts
            .map(|s| s.parse().map_err(|_| err(format!("bad dimension {s:?} for {name}"))))
            .collect::<Result<_>>()?;
        let expected = layout
            .params
            .get(index)
            .ok_or_else(|| err(format!("unexpected parameter {name}")))?;
        if expected.name != name || expected.shape != shape {
            return Err(err(format!(
                "shape mismatch: header declares {name} {shape:?}, config implies {} {:?}",
                expected.name, expected.shape
            )));
        }
        declared += shape.iter().product::<usize>();
        index += 1;
    }
    if index != layout.params.len() {
        return Err(err(format!("header lists {index} of {} parameters", layout.params.len())));
    }
    let payload = &bytes[pos..];
    if payload.len() < declared * 4 {
        return Err(err(format!(
            "truncated payload: {} floats declared, {} bytes present",
            declared,
            payload.len()
        )));
    }
    if payload.len() > declared * 4 {
        return Err(err(format!("{} trailing bytes after payload", payload.len() - declared * 4)));
    }
    let params = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    SequenceModel::from_params(config, params)
}
