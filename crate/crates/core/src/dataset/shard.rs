//! Binary token shards.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `"SLPK"`                |
//! | 4      | 4    | u32 format version (1)        |
//! | 8      | 4    | u32 dtype code (1 = u32)      |
//! | 12     | 4    | u32 block size in tokens      |
//! | 16     | 8    | u64 block count               |
//! | 24     | 4    | u32 pad flag (1 if the last block contains padding) |
//! | 28     | —    | u32 token ids, `block_size × block_count` of them   |

use std::fs::File;
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Shard magic bytes.
pub const SHARD_MAGIC: &[u8; 4] = b"SLPK";
/// Current shard format version.
pub const SHARD_VERSION: u32 = 1;
/// Dtype code for unsigned 32-bit token ids (the only supported dtype).
pub const DTYPE_U32: u32 = 1;
/// Bytes before the token payload.
pub const SHARD_HEADER_LEN: u64 = 28;

/// Parsed shard header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardHeader {
    /// Format version.
    pub version: u32,
    /// Dtype code.
    pub dtype: u32,
    /// Tokens per block.
    pub block_size: u32,
    /// Number of blocks.
    pub block_count: u64,
    /// 1 if the final block was padded to full size.
    pub pad_flag: u32,
}

/// An open shard file with a validated header.
#[derive(Debug)]
pub struct Shard {
    /// Where the shard lives.
    pub path: PathBuf,
    /// Its validated header.
    pub header: ShardHeader,
    file: File,
}

fn format_err(path: &Path, offset: u64, msg: impl Into<String>) -> Error {
    Error::ShardFormat {
        path: path.to_path_buf(),
        offset,
        msg: msg.into(),
    }
}

impl Shard {
    /// Open and validate `path`.
    pub fn open(path: &Path) -> Result<Shard> {
        let mut file = File::open(path)?;
        let mut header = [0u8; SHARD_HEADER_LEN as usize];
        file.read_exact(&mut header).map_err(|_| {
            format_err(path, 0, "file shorter than the 28-byte header")
        })?;
        if &header[0..4] != SHARD_MAGIC {
            return Err(format_err(path, 0, "bad magic, expected \"SLPK\""));
        }
        let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != SHARD_VERSION {
            return Err(format_err(
                path,
                4,
                format!("unsupported version {version}, expected {SHARD_VERSION}"),
            ));
        }
        let dtype = u32_at(8);
        if dtype != DTYPE_U32 {
            return Err(format_err(
                path,
                8,
                format!("unsupported dtype code {dtype}, expected {DTYPE_U32}"),
            ));
        }
        let block_size = u32_at(12);
        if block_size == 0 {
            return Err(format_err(path, 12, "block size must be positive"));
        }
        let block_count = u64::from_le_bytes(header[16..24].try_into().unwrap());
        let pad_flag = u32_at(24);
        if pad_flag > 1 {
            return Err(format_err(path, 24, format!("pad flag {pad_flag} not 0/1")));
        }
        let expected = SHARD_HEADER_LEN + block_size as u64 * block_count * 4;
        let actual = file.metadata()?.len();
        if actual != expected {
            return Err(format_err(
                path,
                actual.min(expected),
                format!("payload length mismatch: file is {actual} bytes, header implies {expected}"),
            ));
        }
        Ok(Shard {
            path: path.to_path_buf(),
            header: ShardHeader {
                version,
                dtype,
                block_size,
                block_count,
                pad_flag,
            },
            file,
        })
    }

    /// Read block `idx` (0-based).
    pub fn read_block(&mut self, idx: u64) -> Result<Vec<u32>> {
        if idx >= self.header.block_count {
            return Err(format_err(
                &self.path,
                SHARD_HEADER_LEN,
                format!(
                    "block {idx} out of range 0..{}",
                    self.header.block_count
                ),
            ));
        }
        let tokens = self.header.block_size as usize;
        let offset = SHARD_HEADER_LEN + idx * tokens as u64 * 4;
        self.file.seek(SeekFrom::Start(offset))?;
        let mut buf = vec![0u8; tokens * 4];
        self.file
            .read_exact(&mut buf)
            .map_err(|e| format_err(&self.path, offset, format!("short read: {e}")))?;
        Ok(buf
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// Read the whole token payload in block order.
    pub fn read_all(&mut self) -> Result<Vec<u32>> {
        let mut out = Vec::with_capacity(
            self.header.block_size as usize * self.header.block_count as usize,
        );
        for idx in 0..self.header.block_count {
            out.extend(self.read_block(idx)?);
        }
        Ok(out)
    }
}

/// Write one shard containing `tokens`, which must be an exact multiple
/// of `block_size` long (padding happens upstream).
pub fn write_shard(
    path: &Path,
    block_size: u32,
    tokens: &[u32],
    pad_flag: bool,
) -> Result<()> {
    if block_size == 0 {
        return Err(Error::Config("shard block size must be positive".into()));
    }
    if tokens.is_empty() || tokens.len() % block_size as usize != 0 {
        return Err(Error::Contract(format!(
            "shard payload of {} tokens is not a positive multiple of block size {block_size}",
            tokens.len()
        )));
    }
    let block_count = (tokens.len() / block_size as usize) as u64;
    let mut buf = Vec::with_capacity(SHARD_HEADER_LEN as usize + tokens.len() * 4);
    buf.extend_from_slice(SHARD_MAGIC);
    buf.extend_from_slice(&SHARD_VERSION.to_le_bytes());
    buf.extend_from_slice(&DTYPE_U32.to_le_bytes());
    buf.extend_from_slice(&block_size.to_le_bytes());
    buf.extend_from_slice(&block_count.to_le_bytes());
    buf.extend_from_slice(&u32::from(pad_flag).to_le_bytes());
    for t in tokens {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    let mut file = File::create(path)?;
    file.write_all(&buf)?;
    file.sync_all()?;
    Ok(())
}
