//! The serializable shuffled block iterator.
//!
//! Snapshot layout (all integers little-endian):
//!
//! | field                                   | size          |
//! |-----------------------------------------|---------------|
//! | magic `"SLIT"`                          | 4             |
//! | u32 format version (1)                  | 4             |
//! | u32 shard count                         | 4             |
//! | per shard: u32 path length, path bytes (UTF-8), 16-byte MD5 | variable |
//! | u64 order length                        | 8             |
//! | per order entry: u32 shard index, u64 block index | 12 each |
//! | u64 cursor                              | 8             |
//! | u64 epoch                               | 8             |
//! | u64 RNG state                           | 8             |
//!
//! Trailing bytes after the RNG state are an error: a snapshot is exactly
//! its fields.

use std::collections::HashSet;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

use super::registry::{file_digest, FileRegistry};
use super::shard::Shard;

/// Snapshot magic bytes.
pub const SNAPSHOT_MAGIC: &[u8; 4] = b"SLIT";
/// Current snapshot format version.
pub const SNAPSHOT_VERSION: u32 = 1;

/// One position in the global block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockRef {
    /// Index into the registered shard list.
    pub shard: u32,
    /// Block index within that shard.
    pub block: u64,
}

/// A shuffled traversal over every block of a set of shards, restorable
/// to the exact same stream from a snapshot.
#[derive(Debug)]
pub struct IteratorState {
    registry: FileRegistry,
    shards: Vec<Shard>,
    order: Vec<BlockRef>,
    cursor: usize,
    epoch: u64,
    rng: SplitMix64,
}

/// Open all `paths`, rejecting content duplicates, and lay out a seeded
/// shuffle of every block.
pub fn open_iterator(paths: &[PathBuf], seed: u64) -> Result<IteratorState> {
    let mut registry = FileRegistry::new();
    let mut shards = Vec::with_capacity(paths.len());
    for path in paths {
        registry.register(path)?;
        shards.push(Shard::open(path)?);
    }
    let mut order = Vec::new();
    for (idx, shard) in shards.iter().enumerate() {
        for block in 0..shard.header.block_count {
            order.push(BlockRef {
                shard: idx as u32,
                block,
            });
        }
    }
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut order);
    Ok(IteratorState {
        registry,
        shards,
        order,
        cursor: 0,
        epoch: 0,
        rng,
    })
}

impl IteratorState {
    /// Next block in the stored order. At exhaustion: `None` without
    /// `wrap`, otherwise the epoch counter increments and the whole
    /// order is reshuffled from the live RNG state.
    pub fn next_block(&mut self, wrap: bool) -> Result<Option<Vec<u32>>> {
        if self.cursor == self.order.len() {
            if !wrap || self.order.is_empty() {
                return Ok(None);
            }
            self.epoch += 1;
            self.cursor = 0;
            let mut order = std::mem::take(&mut self.order);
            self.rng.shuffle(&mut order);
            self.order = order;
        }
        let at = self.order[self.cursor];
        let tokens = self.shards[at.shard as usize].read_block(at.block)?;
        self.cursor += 1;
        Ok(Some(tokens))
    }

    /// Register new shards and splice their blocks into the untrained
    /// tail: positions before the cursor are untouched; the suffix
    /// becomes a fresh shuffle of the remaining old blocks plus every
    /// new block. On any duplicate digest the state is left unchanged.
    pub fn append_shards(&mut self, paths: &[PathBuf]) -> Result<()> {
        // Validate the whole batch before mutating anything.
        let mut incoming: Vec<(PathBuf, [u8; 16], Shard)> = Vec::with_capacity(paths.len());
        for path in paths {
            let digest = file_digest(path)?;
            if let Some(existing) = self.registry.path_of(&digest) {
                return Err(Error::DuplicateData {
                    digest: super::registry::hex(&digest),
                    existing: existing.to_path_buf(),
                    new: path.clone(),
                });
            }
            if let Some((prev, _, _)) = incoming.iter().find(|(_, d, _)| *d == digest) {
                return Err(Error::DuplicateData {
                    digest: super::registry::hex(&digest),
                    existing: prev.clone(),
                    new: path.clone(),
                });
            }
            incoming.push((path.clone(), digest, Shard::open(path)?));
        }
        // Commit.
        let mut suffix: Vec<BlockRef> = self.order.split_off(self.cursor);
        for (path, digest, shard) in incoming {
            let idx = self.shards.len() as u32;
            for block in 0..shard.header.block_count {
                suffix.push(BlockRef { shard: idx, block });
            }
            self.registry
                .insert(&path, digest)
                .expect("digest validated above");
            self.shards.push(shard);
        }
        self.rng.shuffle(&mut suffix);
        self.order.extend(suffix);
        Ok(())
    }

    /// Serialize the complete traversal state.
    pub fn snapshot(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        let entries = self.registry.entries();
        out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
        for (path, digest) in entries {
            let bytes = path.to_string_lossy();
            let bytes = bytes.as_bytes();
            out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
            out.extend_from_slice(bytes);
            out.extend_from_slice(digest);
        }
        out.extend_from_slice(&(self.order.len() as u64).to_le_bytes());
        for at in &self.order {
            out.extend_from_slice(&at.shard.to_le_bytes());
            out.extend_from_slice(&at.block.to_le_bytes());
        }
        out.extend_from_slice(&(self.cursor as u64).to_le_bytes());
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out.extend_from_slice(&self.rng.state().to_le_bytes());
        out
    }

    /// Rebuild an iterator from snapshot bytes, re-opening and
    /// re-hashing every shard. Every failure names the byte offset at
    /// which the snapshot stopped making sense.
    pub fn restore(bytes: &[u8]) -> Result<IteratorState> {
        let mut r = Reader { buf: bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != SNAPSHOT_MAGIC {
            return Err(snapshot_err(0, "bad magic, expected \"SLIT\""));
        }
        let version = r.u32("version")?;
        if version != SNAPSHOT_VERSION {
            return Err(snapshot_err(
                4,
                format!("unsupported version {version}, expected {SNAPSHOT_VERSION}"),
            ));
        }
        let shard_count = r.u32("shard count")? as usize;
        let mut registry = FileRegistry::new();
        let mut shards = Vec::with_capacity(shard_count);
        for i in 0..shard_count {
            let path_len = r.u32("path length")? as usize;
            let path_off = r.pos;
            let path_bytes = r.take(path_len, "path")?;
            let path = std::str::from_utf8(path_bytes).map_err(|_| {
                snapshot_err(path_off, format!("shard {i} path is not UTF-8"))
            })?;
            let path = PathBuf::from(path);
            let digest_off = r.pos;
            let stored: [u8; 16] = r.take(16, "digest")?.try_into().unwrap();
            let registered = registry.register(&path)?;
            if registered != stored {
                return Err(snapshot_err(
                    digest_off,
                    format!(
                        "shard {} content changed since the snapshot (MD5 mismatch)",
                        path.display()
                    ),
                ));
            }
            shards.push(Shard::open(&path)?);
        }
        let order_len = r.u64("order length")? as usize;
        let mut order = Vec::with_capacity(order_len);
        let mut seen: HashSet<BlockRef> = HashSet::with_capacity(order_len);
        let total_blocks: u64 = shards.iter().map(|s| s.header.block_count).sum();
        if order_len as u64 != total_blocks {
            return Err(snapshot_err(
                r.pos - 8,
                format!("order has {order_len} entries but the shards hold {total_blocks} blocks"),
            ));
        }
        for _ in 0..order_len {
            let entry_off = r.pos;
            let shard = r.u32("order entry shard index")?;
            let block = r.u64("order entry block index")?;
            let at = BlockRef { shard, block };
            let valid = (shard as usize) < shards.len()
                && block < shards[shard as usize].header.block_count;
            if !valid {
                return Err(snapshot_err(
                    entry_off,
                    format!("order entry ({shard}, {block}) is out of range"),
                ));
            }
            if !seen.insert(at) {
                return Err(snapshot_err(
                    entry_off,
                    format!("order entry ({shard}, {block}) appears twice"),
                ));
            }
            order.push(at);
        }
        let cursor_off = r.pos;
        let cursor = r.u64("cursor")? as usize;
        if cursor > order.len() {
            return Err(snapshot_err(
                cursor_off,
                format!("cursor {cursor} exceeds order length {}", order.len()),
            ));
        }
        let epoch = r.u64("epoch")?;
        let rng = SplitMix64::from_state(r.u64("RNG state")?);
        if r.pos != bytes.len() {
            return Err(snapshot_err(
                r.pos,
                format!("{} trailing bytes after the RNG state", bytes.len() - r.pos),
            ));
        }
        Ok(IteratorState {
            registry,
            shards,
            order,
            cursor,
            epoch,
            rng,
        })
    }

    /// Position within the current epoch.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Completed passes over the data.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Total blocks per epoch.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    /// True when no blocks are registered.
    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The current traversal order (tests inspect this).
    pub fn order(&self) -> &[BlockRef] {
        &self.order
    }

    /// Registered shard paths and digests, in registration order.
    pub fn registry(&self) -> &FileRegistry {
        &self.registry
    }
}

fn snapshot_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Snapshot {
        offset: offset as u64,
        msg: msg.into(),
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(snapshot_err(
                self.pos,
                format!("truncated while reading {what}"),
            ));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}
