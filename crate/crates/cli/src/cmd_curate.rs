//! `smelt curate`: filter and rewrite a JSONL corpus.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use smelt::curation::{
    default_code_specs, default_text_specs, read_documents_jsonl, read_specs_json, run_pipeline,
    write_documents_jsonl, DocKind, Document, PipelineReport,
};
use smelt::{Error, Result};

/// Run a curation pipeline over JSONL documents.
///
/// Without --config, the built-in text chain processes text documents
/// and the built-in code chain processes code documents; with it, the
/// configured chain processes every document. Kept documents keep their
/// input order. Results are independent of --jobs.
#[derive(Args)]
pub struct CurateArgs {
    /// Input documents, one JSON object per line.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output path for the kept documents (JSONL).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Optional JSON report: per-operator counts and drop records.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Operator chain (JSON list of {"name", "params"} entries).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

/// Report entry for one executed chain: which documents it saw ("text",
/// "code", or "all" for a configured chain) plus the pipeline's account.
#[derive(Serialize)]
struct ChainReport {
    kind: String,
    report: PipelineReport,
}

/// Kept documents tagged with their original input positions, restored
/// by matching ids in order (the pipeline keeps documents in sequence
/// and never rewrites ids).
fn tag_positions(kept: Vec<Document>, source: &[(usize, String)]) -> Vec<(usize, Document)> {
    let mut out = Vec::with_capacity(kept.len());
    let mut next = 0;
    for doc in kept {
        while source[next].1 != doc.id {
            next += 1;
        }
        out.push((source[next].0, doc));
        next += 1;
    }
    out
}

pub fn run(args: CurateArgs) -> Result<()> {
    let reader = BufReader::new(File::open(&args.input)?);
    let docs = read_documents_jsonl(reader).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", args.input.display())),
        other => other,
    })?;
    let total = docs.len();

    let (kept, chains) = match &args.config {
        Some(path) => {
            let specs = read_specs_json(&crate::util::read_config_text(path)?)?;
            let (kept, report) = run_pipeline(docs, &specs, args.jobs)?;
            (
                kept,
                vec![ChainReport {
                    kind: "all".into(),
                    report,
                }],
            )
        }
        None => {
            let mut text_docs = Vec::new();
            let mut code_docs = Vec::new();
            let mut text_ids = Vec::new();
            let mut code_ids = Vec::new();
            for (i, doc) in docs.into_iter().enumerate() {
                match doc.kind {
                    DocKind::Text => {
                        text_ids.push((i, doc.id.clone()));
                        text_docs.push(doc);
                    }
                    DocKind::Code => {
                        code_ids.push((i, doc.id.clone()));
                        code_docs.push(doc);
                    }
                }
            }
            let (kept_text, report_text) =
                run_pipeline(text_docs, &default_text_specs(), args.jobs)?;
            let (kept_code, report_code) =
                run_pipeline(code_docs, &default_code_specs(), args.jobs)?;
            let mut tagged = tag_positions(kept_text, &text_ids);
            tagged.extend(tag_positions(kept_code, &code_ids));
            tagged.sort_by_key(|(pos, _)| *pos);
            (
                tagged.into_iter().map(|(_, doc)| doc).collect(),
                vec![
                    ChainReport {
                        kind: "text".into(),
                        report: report_text,
                    },
                    ChainReport {
                        kind: "code".into(),
                        report: report_code,
                    },
                ],
            )
        }
    };

    let mut writer = BufWriter::new(File::create(&args.out)?);
    write_documents_jsonl(&mut writer, &kept)?;
    writer.flush()?;

    if let Some(path) = &args.report {
        let json = serde_json::json!({ "chains": chains });
        let mut pretty = serde_json::to_string_pretty(&json).expect("report serializes");
        pretty.push('\n');
        std::fs::write(path, pretty)?;
    }

    println!(
        "curate: {total} documents in, {} kept, {} dropped",
        kept.len(),
        total - kept.len()
    );
    Ok(())
}
