//! Packed token shards and the serializable shuffled iterator over them.
//!
//! Token sequences are concatenated with a separator token between
//! documents, cut into fixed-size blocks, and written to binary shard
//! files ([`shard`]). An [`IteratorState`] walks every block of a shard
//! set in a seeded shuffled order, can be snapshotted to bytes at any
//! block boundary and restored bit-exactly ([`iterator`]), and accepts
//! newly packed shards mid-run without disturbing the already-consumed
//! prefix. Shard files are registered by content digest so the same data
//! can never be added twice ([`registry`]).

pub mod iterator;
pub mod registry;
pub mod shard;

pub use iterator::{open_iterator, BlockRef, IteratorState, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use registry::{file_digest, hex, FileRegistry};
pub use shard::{write_shard, Shard, ShardHeader, DTYPE_U32, SHARD_MAGIC, SHARD_VERSION};

use std::path::{Path, PathBuf};

use crate::error::Result;

/// Packing parameters.
#[derive(Debug, Clone)]
pub struct PackOptions {
    /// Tokens per block. Training uses sequence length + 1 so each block
    /// yields a full input/target pair.
    pub block_size: usize,
    /// Filler for the final partial block.
    pub pad_id: u32,
    /// Inserted between consecutive documents (never after the last).
    pub sep_id: u32,
    /// Blocks per shard file before a new file is started.
    pub blocks_per_shard: usize,
}

impl Default for PackOptions {
    fn default() -> Self {
        PackOptions {
            block_size: 2049,
            pad_id: 0,
            sep_id: 1,
            blocks_per_shard: 1024,
        }
    }
}

/// Concatenate token sequences (separator between documents), cut the
/// stream into `block_size` blocks, and write shard files into
/// `out_dir`. The final partial block, if any, is padded and its shard
/// flagged. Returns the written paths in order; empty input writes
/// nothing.
pub fn pack_tokens<I>(sequences: I, opts: &PackOptions, out_dir: &Path) -> Result<Vec<PathBuf>>
where
    I: IntoIterator<Item = Vec<u32>>,
{
    assert!(opts.block_size > 0, "block_size must be positive");
    assert!(opts.blocks_per_shard > 0, "blocks_per_shard must be positive");
    std::fs::create_dir_all(out_dir)?;
    let shard_tokens = opts.block_size * opts.blocks_per_shard;
    let mut written = Vec::new();
    let mut buffer: Vec<u32> = Vec::with_capacity(shard_tokens);
    let mut first_doc = true;
    let flush = |buffer: &mut Vec<u32>, padded: bool, written: &mut Vec<PathBuf>| -> Result<()> {
        if buffer.is_empty() {
            return Ok(());
        }
        debug_assert_eq!(buffer.len() % opts.block_size, 0);
        let path = out_dir.join(format!("shard-{:05}.slpk", written.len()));
        write_shard(&path, opts.block_size as u32, buffer, padded)?;
        written.push(path);
        buffer.clear();
        Ok(())
    };
    for seq in sequences {
        if !first_doc {
            buffer.push(opts.sep_id);
        }
        first_doc = false;
        buffer.extend(seq);
        while buffer.len() >= shard_tokens {
            let rest = buffer.split_off(shard_tokens);
            flush(&mut buffer, false, &mut written)?;
            buffer = rest;
        }
    }
    if !buffer.is_empty() {
        let partial = buffer.len() % opts.block_size;
        let padded = partial != 0;
        if padded {
            buffer.resize(buffer.len() + opts.block_size - partial, opts.pad_id);
        }
        flush(&mut buffer, padded, &mut written)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_stream(paths: &[PathBuf]) -> Vec<u32> {
        let mut out = Vec::new();
        for p in paths {
            out.extend(Shard::open(p).unwrap().read_all().unwrap());
        }
        out
    }

    fn opts(block_size: usize) -> PackOptions {
        PackOptions {
            block_size,
            ..PackOptions::default()
        }
    }

    #[test]
    fn exact_fit_needs_no_separator_or_pad() {
        let dir = tempfile::tempdir().unwrap();
        let tokens: Vec<u32> = (10..20).collect();
        let paths = pack_tokens([tokens.clone()], &opts(5), dir.path()).unwrap();
        assert_eq!(paths.len(), 1);
        let shard = Shard::open(&paths[0]).unwrap();
        assert_eq!(shard.header.block_count, 2);
        assert_eq!(shard.header.pad_flag, 0);
        assert_eq!(read_stream(&paths), tokens);
    }

    #[test]
    fn partial_tail_is_padded_and_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let tokens: Vec<u32> = (100..107).collect();
        let paths = pack_tokens([tokens], &opts(5), dir.path()).unwrap();
        let shard = Shard::open(&paths[0]).unwrap();
        assert_eq!(shard.header.block_count, 2);
        assert_eq!(shard.header.pad_flag, 1);
        let stream = read_stream(&paths);
        assert_eq!(
            stream,
            vec![100, 101, 102, 103, 104, 105, 106, 0, 0, 0]
        );
    }

    #[test]
    fn empty_input_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let paths = pack_tokens(Vec::<Vec<u32>>::new(), &opts(5), dir.path()).unwrap();
        assert!(paths.is_empty());
    }

    #[test]
    fn separator_sits_between_documents_only() {
        let dir = tempfile::tempdir().unwrap();
        let paths = pack_tokens(
            [vec![7, 8], vec![9], vec![10, 11]],
            &opts(7),
            dir.path(),
        )
        .unwrap();
        // 7 8 | 1 | 9 | 1 | 10 11  = 7 tokens exactly, one unpadded block.
        let shard = Shard::open(&paths[0]).unwrap();
        assert_eq!(shard.header.pad_flag, 0);
        assert_eq!(read_stream(&paths), vec![7, 8, 1, 9, 1, 10, 11]);
    }

    #[test]
    fn long_stream_spills_across_shard_files() {
        let dir = tempfile::tempdir().unwrap();
        let o = PackOptions {
            block_size: 4,
            blocks_per_shard: 2,
            ..PackOptions::default()
        };
        let tokens: Vec<u32> = (0..30).collect();
        let paths = pack_tokens([tokens.clone()], &o, dir.path()).unwrap();
        // 30 tokens → blocks of 4 → shards of 8 tokens: 8+8+8+6(+2 pad).
        assert_eq!(paths.len(), 4);
        for p in &paths[..3] {
            assert_eq!(Shard::open(p).unwrap().header.pad_flag, 0);
        }
        assert_eq!(Shard::open(&paths[3]).unwrap().header.pad_flag, 1);
        let mut expected = tokens;
        expected.extend([0, 0]);
        assert_eq!(read_stream(&paths), expected);
    }

    #[test]
    fn packing_is_deterministic() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let docs = vec![vec![3u32, 1, 4, 1, 5], vec![9, 2, 6], vec![5, 3]];
        let a = pack_tokens(docs.clone(), &opts(4), dir_a.path()).unwrap();
        let b = pack_tokens(docs, &opts(4), dir_b.path()).unwrap();
        assert_eq!(
            std::fs::read(&a[0]).unwrap(),
            std::fs::read(&b[0]).unwrap()
        );
    }
}
