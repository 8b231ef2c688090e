//! Versioned binary policy checkpoints: magic, format version, config
//! hash, a named layer manifest, flat little-endian f64 arrays, and a
//! trailing content checksum. Cross-resolution transfer depends on exact
//! parameter layout, so loading refuses both corruption and config-hash
//! mismatches (the latter overridable with `--force`).

use std::fs;
use std::path::Path;

use env_core::Fnv64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rl_core::ActorCritic;
use tensor_core::Tensor;

use crate::{CliError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PRPDCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

fn named_tensors(nets: &ActorCritic) -> Vec<(String, &Tensor)> {
    let mut out = Vec::new();
    for (prefix, mlp) in [("policy", &nets.policy), ("value", &nets.value), ("q", &nets.q)] {
        for (i, (w, b)) in mlp.weights.iter().zip(&mlp.biases).enumerate() {
            out.push((format!("{prefix}.w{i}"), w));
            out.push((format!("{prefix}.b{i}"), b));
        }
    }
    out.push(("log_std".to_string(), &nets.log_std));
    out
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(CliError::Runtime(
                "checkpoint integrity error: truncated file".into(),
            ));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| CliError::Runtime("checkpoint integrity error: bad string".into()))
    }
}

pub fn checkpoint_bytes(nets: &ActorCritic, config_hash: &str) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.str(config_hash);
    let tensors = named_tensors(nets);
    w.u32(tensors.len() as u32);
    for (name, t) in &tensors {
        w.str(name);
        w.u32(t.shape.len() as u32);
        for &d in &t.shape {
            w.u64(d as u64);
        }
        w.u64(t.values.len() as u64);
        for &v in &t.values {
            w.u64(v.to_bits());
        }
    }
    let mut h = Fnv64::new();
    h.write_bytes(&w.0);
    let checksum = h.finish();
    w.u64(checksum);
    w.0
}

pub fn save_checkpoint(path: &Path, nets: &ActorCritic, config_hash: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, checkpoint_bytes(nets, config_hash))?;
    Ok(())
}

/// Loads a checkpoint, verifying checksum, layout, and (unless `force`)
/// that the stored config hash equals `expected_hash` when one is given.
/// Returns the networks and the stored hash.
pub fn load_checkpoint(
    path: &Path,
    expected_hash: Option<&str>,
    force: bool,
) -> Result<(ActorCritic, String)> {
    let bytes = fs::read(path)?;
    if bytes.len() < CHECKPOINT_MAGIC.len() + 12 {
        return Err(CliError::Runtime(
            "checkpoint integrity error: truncated file".into(),
        ));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored_checksum = u64::from_le_bytes(tail.try_into().unwrap());
    let mut h = Fnv64::new();
    h.write_bytes(body);
    if h.finish() != stored_checksum {
        return Err(CliError::Runtime(
            "checkpoint integrity error: checksum mismatch".into(),
        ));
    }

    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(CliError::Runtime(
            "checkpoint integrity error: bad magic bytes".into(),
        ));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(CliError::Runtime(format!(
            "unsupported checkpoint format version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let stored_hash = r.str()?;
    if let Some(expected) = expected_hash {
        if expected != stored_hash && !force {
            return Err(CliError::Usage(format!(
                "checkpoint config hash {stored_hash} does not match expected {expected}; \
                 pass --force to load anyway"
            )));
        }
    }

    // The architecture is fixed; fill a freshly shaped network in place.
    let mut seed_rng = ChaCha8Rng::seed_from_u64(0);
    let mut nets = ActorCritic::new(&mut seed_rng).map_err(|e| CliError::Runtime(e.to_string()))?;
    let count = r.u32()? as usize;
    let mut filled = 0usize;
    for _ in 0..count {
        let name = r.str()?;
        let ndims = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndims);
        for _ in 0..ndims {
            shape.push(r.u64()? as usize);
        }
        let len = r.u64()? as usize;
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(f64::from_bits(r.u64()?));
        }
        let target = lookup_tensor(&mut nets, &name).ok_or_else(|| {
            CliError::Runtime(format!("checkpoint layout error: unknown layer {name}"))
        })?;
        if target.shape != shape || target.values.len() != len {
            return Err(CliError::Runtime(format!(
                "checkpoint layout error: layer {name} has shape {shape:?}, expected {:?}",
                target.shape
            )));
        }
        target.values = values;
        filled += 1;
    }
    let expected_layers = named_tensors(&nets).len();
    if filled != expected_layers {
        return Err(CliError::Runtime(format!(
            "checkpoint layout error: {filled} layers, expected {expected_layers}"
        )));
    }
    Ok((nets, stored_hash))
}

fn lookup_tensor<'a>(nets: &'a mut ActorCritic, name: &str) -> Option<&'a mut Tensor> {
    if name == "log_std" {
        return Some(&mut nets.log_std);
    }
    let (prefix, layer) = name.split_once('.')?;
    let mlp = match prefix {
        "policy" => &mut nets.policy,
        "value" => &mut nets.value,
        "q" => &mut nets.q,
        _ => return None,
    };
    let (kind, index) = layer.split_at(1);
    let i: usize = index.parse().ok()?;
    match kind {
        "w" => mlp.weights.get_mut(i),
        "b" => mlp.biases.get_mut(i),
        _ => None,
    }
}
