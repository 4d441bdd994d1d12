//! On-disk checkpoints.
//!
//! A checkpoint is a directory of five files:
//!
//! * `params.bin` — magic `SLPM`, version 1, then each parameter as
//!   `u32 name_len, name, u32 ndim, u64 dims…, f64 data…` (little endian),
//! * `optimizer.bin` — magic `SLOP`, version 1, the completed step count,
//!   then per-parameter first/second moment buffers,
//! * `iterator.slit` — the data-iterator snapshot, verbatim,
//! * `config.json` — `{ "model": …, "train": … }`,
//! * `manifest.json` — format version, step, and the MD5 of every other
//!   file.
//!
//! Saving writes a sibling `<dir>.tmp` and renames it over the target, so
//! a crash mid-save never leaves a half-written checkpoint at the final
//! path. Loading re-hashes every file against the manifest before parsing
//! anything.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{file_digest, hex};
use crate::error::{Error, Result};
use crate::model::{LMParams, ModelConfig};

use super::{MomentPair, OptimizerState, TrainConfig};

const PARAMS_MAGIC: &[u8; 4] = b"SLPM";
const OPTIMIZER_MAGIC: &[u8; 4] = b"SLOP";
const FORMAT_VERSION: u32 = 1;

const PARAMS_FILE: &str = "params.bin";
const OPTIMIZER_FILE: &str = "optimizer.bin";
const ITERATOR_FILE: &str = "iterator.slit";
const CONFIG_FILE: &str = "config.json";
const MANIFEST_FILE: &str = "manifest.json";

/// Everything a resumed run needs, exactly as saved.
#[derive(Debug)]
pub struct CheckpointBundle {
    /// Model parameters (the model configuration rides along inside).
    pub params: LMParams,
    /// Optimizer moments and completed-step counter.
    pub optimizer: OptimizerState,
    /// Training hyperparameters.
    pub train_config: TrainConfig,
    /// Raw data-iterator snapshot bytes; restore them against the shard
    /// paths with the dataset layer.
    pub iterator_snapshot: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    step: u64,
    files: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    model: ModelConfig,
    train: TrainConfig,
}

fn ck_err(file: &str, msg: impl std::fmt::Display) -> Error {
    Error::Checkpoint(format!("{file}: {msg}"))
}

// ------------------------------------------------------------- writing

fn encode_params(params: &LMParams) -> Vec<u8> {
    let list = params.params();
    let mut out = Vec::new();
    out.extend_from_slice(PARAMS_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(list.len() as u32).to_le_bytes());
    for (name, value) in &list {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        let shape = value.shape();
        out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for &dim in shape {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for &x in value.data().iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

fn encode_optimizer(state: &OptimizerState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(OPTIMIZER_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&state.step.to_le_bytes());
    out.extend_from_slice(&(state.moments.len() as u32).to_le_bytes());
    for pair in &state.moments {
        out.extend_from_slice(&(pair.name.len() as u32).to_le_bytes());
        out.extend_from_slice(pair.name.as_bytes());
        out.extend_from_slice(&(pair.m.len() as u64).to_le_bytes());
        for &x in &pair.m {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for &x in &pair.v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    Ok(())
}

/// Writes a complete checkpoint directory at `dir`, replacing any
/// checkpoint already there. The directory appears atomically: content is
/// staged in a sibling `.tmp` directory and renamed into place.
pub fn save_checkpoint(
    dir: &Path,
    params: &LMParams,
    optimizer: &OptimizerState,
    train_config: &TrainConfig,
    iterator_snapshot: &[u8],
) -> Result<()> {
    let name = dir
        .file_name()
        .ok_or_else(|| Error::Config(format!("invalid checkpoint path {}", dir.display())))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = dir.with_file_name(tmp_name);
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;

    let config_json = serde_json::to_vec_pretty(&ConfigFile {
        model: params.config.clone(),
        train: train_config.clone(),
    })
    .expect("config serialization is infallible");

    write_file(&tmp.join(PARAMS_FILE), &encode_params(params))?;
    write_file(&tmp.join(OPTIMIZER_FILE), &encode_optimizer(optimizer))?;
    write_file(&tmp.join(ITERATOR_FILE), iterator_snapshot)?;
    write_file(&tmp.join(CONFIG_FILE), &config_json)?;

    let mut files = BTreeMap::new();
    for file in [PARAMS_FILE, OPTIMIZER_FILE, ITERATOR_FILE, CONFIG_FILE] {
        files.insert(file.to_string(), hex(&file_digest(&tmp.join(file))?));
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        step: optimizer.step,
        files,
    };
    write_file(
        &tmp.join(MANIFEST_FILE),
        &serde_json::to_vec_pretty(&manifest).expect("manifest serialization is infallible"),
    )?;

    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    fs::rename(&tmp, dir)?;
    Ok(())
}

// ------------------------------------------------------------- reading

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    file: &'static str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(ck_err(
                self.file,
                format!("truncated at byte {} while reading {what}", self.pos),
            ));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = self.take(8 * n, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn name(&mut self, what: &str) -> Result<String> {
        let len = self.u32(&format!("{what} length"))? as usize;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| ck_err(self.file, format!("{what} is not valid UTF-8")))
    }

    fn magic_and_version(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != magic {
            return Err(ck_err(
                self.file,
                format!("bad magic {got:?}, expected {magic:?}"),
            ));
        }
        let version = self.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(ck_err(
                self.file,
                format!("unsupported version {version}, expected {FORMAT_VERSION}"),
            ));
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(ck_err(
                self.file,
                format!(
                    "{} trailing bytes after byte {}",
                    self.buf.len() - self.pos,
                    self.pos
                ),
            ));
        }
        Ok(())
    }
}

fn decode_params(bytes: &[u8], config: &ModelConfig) -> Result<LMParams> {
    let mut r = Reader {
        buf: bytes,
        pos: 0,
        file: PARAMS_FILE,
    };
    r.magic_and_version(PARAMS_MAGIC)?;
    let count = r.u32("parameter count")? as usize;
    let mut entries: HashMap<String, (Vec<usize>, Vec<f64>)> = HashMap::new();
    for _ in 0..count {
        let name = r.name("parameter name")?;
        let ndim = r.u32(&format!("rank of {name}"))? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for d in 0..ndim {
            shape.push(r.u64(&format!("dimension {d} of {name}"))? as usize);
        }
        let len: usize = shape.iter().product();
        let data = r.f64s(len, &format!("data of {name}"))?;
        if entries.insert(name.clone(), (shape, data)).is_some() {
            return Err(ck_err(PARAMS_FILE, format!("duplicate parameter {name}")));
        }
    }
    r.finish()?;

    let params = LMParams::init(config, 0)?;
    for (name, value) in params.params() {
        let (shape, data) = entries.remove(&name).ok_or_else(|| {
            ck_err(PARAMS_FILE, format!("missing parameter {name}"))
        })?;
        if shape != value.shape() {
            return Err(ck_err(
                PARAMS_FILE,
                format!(
                    "parameter {name} has shape {shape:?}, expected {:?}",
                    value.shape()
                ),
            ));
        }
        value.set_data(&data);
    }
    if let Some(extra) = entries.keys().next() {
        return Err(ck_err(
            PARAMS_FILE,
            format!("unknown parameter {extra} not in the model"),
        ));
    }
    Ok(params)
}

fn decode_optimizer(bytes: &[u8], params: &LMParams) -> Result<OptimizerState> {
    let mut r = Reader {
        buf: bytes,
        pos: 0,
        file: OPTIMIZER_FILE,
    };
    r.magic_and_version(OPTIMIZER_MAGIC)?;
    let step = r.u64("step counter")?;
    let count = r.u32("parameter count")? as usize;
    let expected = params.params();
    if count != expected.len() {
        return Err(ck_err(
            OPTIMIZER_FILE,
            format!(
                "{count} moment buffers for a model with {} parameters",
                expected.len()
            ),
        ));
    }
    let mut moments = Vec::with_capacity(count);
    for (name, value) in &expected {
        let got = r.name("parameter name")?;
        if &got != name {
            return Err(ck_err(
                OPTIMIZER_FILE,
                format!("moment buffer {got} out of order, expected {name}"),
            ));
        }
        let len = r.u64(&format!("length of {name}"))? as usize;
        if len != value.len() {
            return Err(ck_err(
                OPTIMIZER_FILE,
                format!(
                    "moment buffer {name} has {len} entries, parameter has {}",
                    value.len()
                ),
            ));
        }
        let m = r.f64s(len, &format!("first moment of {name}"))?;
        let v = r.f64s(len, &format!("second moment of {name}"))?;
        moments.push(MomentPair {
            name: name.clone(),
            m,
            v,
        });
    }
    r.finish()?;
    Ok(OptimizerState { step, moments })
}

fn read_verified(dir: &Path, manifest: &Manifest, file: &'static str) -> Result<Vec<u8>> {
    let expected = manifest
        .files
        .get(file)
        .ok_or_else(|| ck_err(MANIFEST_FILE, format!("no digest recorded for {file}")))?;
    let path = dir.join(file);
    if !path.exists() {
        return Err(ck_err(file, "file is missing"));
    }
    let actual = hex(&file_digest(&path)?);
    if &actual != expected {
        return Err(ck_err(
            file,
            format!("checksum mismatch: manifest says {expected}, file hashes to {actual}"),
        ));
    }
    Ok(fs::read(path)?)
}

/// Loads and fully verifies a checkpoint directory: every file is
/// re-hashed against the manifest, the parameter set must match the model
/// configuration exactly, and the optimizer buffers must align with the
/// parameter list name by name.
pub fn load_checkpoint(dir: &Path) -> Result<CheckpointBundle> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(ck_err(
            MANIFEST_FILE,
            format!("not found in {}", dir.display()),
        ));
    }
    let manifest: Manifest = serde_json::from_slice(&fs::read(&manifest_path)?)
        .map_err(|e| ck_err(MANIFEST_FILE, e))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(ck_err(
            MANIFEST_FILE,
            format!(
                "unsupported format version {}, expected {FORMAT_VERSION}",
                manifest.format_version
            ),
        ));
    }

    let config_bytes = read_verified(dir, &manifest, CONFIG_FILE)?;
    let config: ConfigFile =
        serde_json::from_slice(&config_bytes).map_err(|e| ck_err(CONFIG_FILE, e))?;
    config.train.validate()?;

    let params = decode_params(&read_verified(dir, &manifest, PARAMS_FILE)?, &config.model)?;
    let optimizer = decode_optimizer(&read_verified(dir, &manifest, OPTIMIZER_FILE)?, &params)?;
    if optimizer.step != manifest.step {
        return Err(ck_err(
            OPTIMIZER_FILE,
            format!(
                "step counter {} disagrees with manifest step {}",
                optimizer.step, manifest.step
            ),
        ));
    }
    let iterator_snapshot = read_verified(dir, &manifest, ITERATOR_FILE)?;

    Ok(CheckpointBundle {
        params,
        optimizer,
        train_config: config.train,
        iterator_snapshot,
    })
}
