//! Error types shared across the toolkit.
//!
//! Variants are grouped by how callers must react (and which process exit
//! code the CLI maps them to): configuration problems, malformed input
//! data, duplicate-content registration, and corrupt checkpoint state.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: unknown operator, bad hyperparameter, …
    #[error("config error: {0}")]
    Config(String),

    /// Malformed or out-of-range input data (documents, token ids, shards).
    #[error("data error: {0}")]
    Data(String),

    /// Tensor shape mismatch; names the operation and both shapes.
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// API contract violation (e.g. backward on a non-scalar loss).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A file whose content digest is already registered.
    #[error("duplicate data: {new} has the same content (md5 {digest}) as registered {existing}")]
    DuplicateData {
        digest: String,
        existing: PathBuf,
        new: PathBuf,
    },

    /// Malformed shard file (treated as bad input data).
    #[error("shard format error at byte {offset} in {path}: {msg}")]
    ShardFormat {
        path: PathBuf,
        offset: u64,
        msg: String,
    },

    /// Malformed iterator snapshot; reports the byte offset of the
    /// first violation.
    #[error("snapshot format error at byte {offset}: {msg}")]
    Snapshot { offset: u64, msg: String },

    /// Corrupt or inconsistent checkpoint bundle.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
