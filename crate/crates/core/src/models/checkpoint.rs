//! Checkpoints: a key/value text manifest next to a little-endian blob.
//!
//! ```text
//! format = 1
//! dtype = f32
//! seed = 7
//! arch = toy
//! in_channels = 3
//! hidden = 8
//! blob = recon.bin
//! blob_bytes = 4236
//! blob_sha256 = 5d1f...
//! tensor enc1.weight = 8x3x4x4 @ 0
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::params::{hex, parse_shape, Arch, ModelParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const FORMAT_VERSION: &str = "1";

fn format_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Format { kind: "checkpoint", path: path.to_path_buf(), detail: detail.into() }
}

/// Writes `<path>` (manifest) and `<path>` with extension `bin` (blob).
pub fn save_checkpoint<F: Scalar>(params: &ModelParams<F>, path: &Path) -> Result<()> {
    let blob_path = path.with_extension("bin");
    let blob_name = blob_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| format_err(path, "checkpoint path needs a file name"))?
        .to_string();
    let mut blob = Vec::with_capacity(params.parameter_count() * F::BYTES);
    let mut entries = Vec::new();
    for (name, t) in params.names().iter().zip(params.tensors()) {
        let shape: Vec<String> = t.shape().iter().map(ToString::to_string).collect();
        entries.push(format!("tensor {name} = {} @ {}", shape.join("x"), blob.len()));
        for &v in t.data() {
            v.write_le(&mut blob);
        }
    }
    let mut manifest = format!("format = {FORMAT_VERSION}\ndtype = {}\nseed = {}\n", F::DTYPE, params.seed);
    for (k, v) in params.arch.to_pairs() {
        manifest.push_str(&format!("{k} = {v}\n"));
    }
    manifest.push_str(&format!("blob = {blob_name}\nblob_bytes = {}\n", blob.len()));
    manifest.push_str(&format!("blob_sha256 = {}\n", hex(&Sha256::digest(&blob))));
    for e in entries {
        manifest.push_str(&e);
        manifest.push('\n');
    }
    fs::write(&blob_path, &blob)?;
    fs::write(path, manifest)?;
    Ok(())
}

fn read_values<F: Scalar, S: Scalar>(bytes: &[u8]) -> Vec<F> {
    bytes.chunks_exact(S::BYTES).map(|c| F::lit(S::read_le(c).as_f64())).collect()
}

/// Loads a checkpoint, validating every tensor against the architecture in the manifest.
/// Values stored in the other precision are converted.
pub fn load_checkpoint<F: Scalar>(path: &Path) -> Result<ModelParams<F>> {
    let text = fs::read_to_string(path)?;
    let mut pairs = BTreeMap::new();
    let mut tensors = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format_err(path, format!("line {}: expected `key = value`", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if let Some(name) = k.strip_prefix("tensor ") {
            let (shape, offset) = v
                .split_once('@')
                .ok_or_else(|| format_err(path, format!("line {}: expected `shape @ offset`", no + 1)))?;
            let shape = parse_shape(shape.trim()).map_err(|e| format_err(path, e.to_string()))?;
            let offset: usize = offset
                .trim()
                .parse()
                .map_err(|_| format_err(path, format!("line {}: bad offset", no + 1)))?;
            tensors.insert(name.trim().to_string(), (shape, offset));
        } else {
            pairs.insert(k.to_string(), v.to_string());
        }
    }
    let field = |k: &str| pairs.get(k).ok_or_else(|| format_err(path, format!("missing `{k}`")));
    if field("format")? != FORMAT_VERSION {
        return Err(format_err(path, format!("unsupported format {}", field("format")?)));
    }
    let seed: u64 = field("seed")?.parse().map_err(|_| format_err(path, "bad seed"))?;
    let arch = Arch::from_pairs(&pairs).map_err(|e| format_err(path, e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let blob = fs::read(dir.join(field("blob")?))?;
    if field("blob_bytes")?.parse::<usize>().ok() != Some(blob.len()) {
        return Err(format_err(path, "blob length does not match manifest"));
    }
    if &hex(&Sha256::digest(&blob)) != field("blob_sha256")? {
        return Err(format_err(path, "blob checksum mismatch"));
    }
    let width = match field("dtype")?.as_str() {
        "f32" => 4,
        "f64" => 8,
        other => return Err(format_err(path, format!("unsupported dtype `{other}`"))),
    };
    let expected = arch.param_shapes();
    if tensors.len() != expected.len() {
        return Err(format_err(
            path,
            format!("{} tensors listed, architecture has {}", tensors.len(), expected.len()),
        ));
    }
    let mut loaded = Vec::with_capacity(expected.len());
    for (name, shape) in expected {
        let (stored, offset) = tensors
            .get(&name)
            .ok_or_else(|| format_err(path, format!("tensor `{name}` missing")))?;
        if *stored != shape {
            return Err(format_err(path, format!("tensor `{name}` is {stored:?}, expected {shape:?}")));
        }
        let numel: usize = shape.iter().product();
        let end = offset + numel * width;
        if end > blob.len() {
            return Err(format_err(path, format!("tensor `{name}` runs past the blob")));
        }
        let bytes = &blob[*offset..end];
        let data = if width == 4 { read_values::<F, f32>(bytes) } else { read_values::<F, f64>(bytes) };
        loaded.push(Tensor::new(shape, data)?);
    }
    ModelParams::new(arch, seed, loaded)
}
