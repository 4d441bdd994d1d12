//! `smelt pack`: tokenize curated documents into block shards.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;
use smelt::curation::read_documents_jsonl;
use smelt::dataset::{pack_tokens, PackOptions};
use smelt::tokenizer::{ByteTokenizer, Tokenizer};
use smelt::{Error, Result};

/// Tokenize JSONL documents (byte-level) and pack the stream into
/// fixed-size block shards. Documents are separated by the separator id;
/// only the final block is padded. The created shard paths are printed
/// to stdout, one per line.
#[derive(Args)]
pub struct PackArgs {
    /// Curated documents (JSONL).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Directory receiving the shard files.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Tokens per block. Training at sequence length L consumes blocks
    /// of L + 1 tokens.
    #[arg(long, default_value_t = 2049)]
    block_size: usize,
    /// Blocks per shard file.
    #[arg(long, default_value_t = 1024)]
    blocks_per_shard: usize,
    /// Token id used to pad the final block.
    #[arg(long, default_value_t = 0)]
    pad_id: u32,
    /// Token id inserted between documents.
    #[arg(long, default_value_t = 1)]
    sep_id: u32,
}

pub fn run(args: PackArgs) -> Result<()> {
    if args.block_size < 2 {
        return Err(Error::Config(format!(
            "block_size must be at least 2, got {}",
            args.block_size
        )));
    }
    if args.blocks_per_shard == 0 {
        return Err(Error::Config("blocks_per_shard must be positive".into()));
    }

    let reader = BufReader::new(File::open(&args.input)?);
    let docs = read_documents_jsonl(reader).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", args.input.display())),
        other => other,
    })?;

    let tokenizer = ByteTokenizer;
    let opts = PackOptions {
        block_size: args.block_size,
        pad_id: args.pad_id,
        sep_id: args.sep_id,
        blocks_per_shard: args.blocks_per_shard,
    };
    let count = docs.len();
    let sequences = docs.iter().map(|doc| tokenizer.encode(&doc.text));
    let shards = pack_tokens(sequences, &opts, &args.out_dir)?;

    for path in &shards {
        println!("{}", path.display());
    }
    eprintln!("pack: {count} documents into {} shards", shards.len());
    Ok(())
}
