//! Data curation pipeline: configurable chains of text-rewriting mappers,
//! threshold filters, and near-duplicate removal.
//!
//! A pipeline is a list of [`OperatorSpec`]s (name plus JSON parameters).
//! Specs compile to typed operators up front, so a misconfigured pipeline
//! fails before any document is touched. Mappers and filter statistics
//! run in parallel across documents; document order is preserved
//! throughout, and deduplication keeps the first-seen member of each
//! duplicate cluster, so results are independent of the worker count.

pub mod filters;
pub mod mappers;
pub mod perplexity;
pub mod simhash;
mod t2s;

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use perplexity::{PerplexityScorer, TrigramScorer};

/// Which operator chain a document belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Text,
    Code,
}

/// One document flowing through the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default = "DocKind::text")]
    pub kind: DocKind,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl DocKind {
    fn text() -> DocKind {
        DocKind::Text
    }
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, kind: DocKind) -> Document {
        Document {
            id: id.into(),
            text: text.into(),
            kind,
            meta: BTreeMap::new(),
        }
    }
}

/// An operator by name plus its JSON parameters, as found in pipeline
/// configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub name: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

fn spec(name: &str, params: Value) -> OperatorSpec {
    OperatorSpec {
        name: name.to_string(),
        params: params.as_object().cloned().expect("params are an object"),
    }
}

/// Per-operator tally. `seen` counts documents entering the operator;
/// `modified` counts mapper rewrites that changed the text; `dropped`
/// counts filter and dedup removals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorReport {
    pub name: String,
    pub seen: usize,
    pub modified: usize,
    pub dropped: usize,
}

/// Why a document left the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub id: String,
    pub operator: String,
    pub reason: String,
}

/// Full account of a pipeline run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub input: usize,
    pub output: usize,
    pub operators: Vec<OperatorReport>,
    pub drops: Vec<DropRecord>,
}

impl PipelineReport {
    /// Every document is accounted for: each operator sees exactly what
    /// the previous one passed through, and input minus all drops equals
    /// output.
    pub fn conserves_documents(&self) -> bool {
        let mut expect = self.input;
        for op in &self.operators {
            if op.seen != expect || op.dropped > op.seen {
                return false;
            }
            expect = op.seen - op.dropped;
        }
        expect == self.output && self.drops.len() == self.input - self.output
    }
}

// ---------------------------------------------------------------------------
// Compiled operators
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum MapperKind {
    ChineseConvert,
    CleanEmail,
    CleanHtml,
    CleanIp,
    CleanLinks,
    CleanCopyright,
    ExpandMacro,
    FixUnicode,
    PunctuationNormalization,
    RemoveRepeatSentences,
    RemoveSpecificChars(String),
    WhitespaceNormalization,
}

impl MapperKind {
    fn apply(&self, text: &str) -> String {
        match self {
            MapperKind::ChineseConvert => mappers::chinese_convert(text),
            MapperKind::CleanEmail => mappers::clean_email(text),
            MapperKind::CleanHtml => mappers::clean_html(text),
            MapperKind::CleanIp => mappers::clean_ip(text),
            MapperKind::CleanLinks => mappers::clean_links(text),
            MapperKind::CleanCopyright => mappers::clean_copyright(text),
            MapperKind::ExpandMacro => mappers::expand_macro(text),
            MapperKind::FixUnicode => mappers::fix_unicode(text),
            MapperKind::PunctuationNormalization => mappers::punctuation_normalization(text),
            MapperKind::RemoveRepeatSentences => mappers::remove_repeat_sentences(text),
            MapperKind::RemoveSpecificChars(chars) => mappers::remove_specific_chars(text, chars),
            MapperKind::WhitespaceNormalization => mappers::whitespace_normalization(text),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum AlnumMode {
    /// Alphanumeric characters over total characters.
    Chars,
    /// Alphanumeric characters per whitespace token.
    Tokens,
}

#[derive(Clone, Debug, PartialEq)]
enum FilterKind {
    Alphanumeric { mode: AlnumMode, min: f64, max: f64 },
    AverageLineLength { min: f64, max: f64 },
    CharacterRepetition { n: usize, min: f64, max: f64 },
    MaximumLineLength { min: usize, max: usize },
    Perplexity { max: f64 },
    SpecialCharacters { min: f64, max: f64 },
    TextLength { min: usize, max: usize },
    WordRepetition { n: usize, min: f64, max: f64 },
    WordsNum { min: usize, max: usize },
}

fn out_of<T: PartialOrd + std::fmt::Display>(
    stat: &str,
    value: T,
    min: T,
    max: T,
) -> Option<String> {
    if value < min || value > max {
        Some(format!("{stat} {value} outside [{min}, {max}]"))
    } else {
        None
    }
}

impl FilterKind {
    /// `Some(reason)` means the document is dropped.
    fn evaluate(&self, text: &str) -> Option<String> {
        match *self {
            FilterKind::Alphanumeric { mode, min, max } => {
                let (label, value) = match mode {
                    AlnumMode::Chars => {
                        ("alphanumeric ratio", filters::alphanumeric_char_ratio(text))
                    }
                    AlnumMode::Tokens => (
                        "alphanumeric chars per token",
                        filters::alphanumeric_token_ratio(text),
                    ),
                };
                out_of(label, value, min, max)
            }
            FilterKind::AverageLineLength { min, max } => {
                out_of("average line length", filters::average_line_length(text), min, max)
            }
            FilterKind::CharacterRepetition { n, min, max } => out_of(
                "character repetition ratio",
                filters::character_repetition_ratio(text, n),
                min,
                max,
            ),
            FilterKind::MaximumLineLength { min, max } => {
                out_of("maximum line length", filters::maximum_line_length(text), min, max)
            }
            FilterKind::Perplexity { max } => {
                let ppl = TrigramScorer::builtin().perplexity(text);
                if ppl > max {
                    Some(format!("perplexity {ppl:.2} above {max}"))
                } else {
                    None
                }
            }
            FilterKind::SpecialCharacters { min, max } => out_of(
                "special character ratio",
                filters::special_character_ratio(text),
                min,
                max,
            ),
            FilterKind::TextLength { min, max } => {
                out_of("text length", filters::text_length(text), min, max)
            }
            FilterKind::WordRepetition { n, min, max } => out_of(
                "word repetition ratio",
                filters::word_repetition_ratio(text, n),
                min,
                max,
            ),
            FilterKind::WordsNum { min, max } => {
                out_of("word count", filters::words_num(text), min, max)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Op {
    Mapper(MapperKind),
    Filter(FilterKind),
    Dedup {
        window_size: usize,
        num_blocks: usize,
        hamming_max: u32,
        lowercase: bool,
    },
}

// ---------------------------------------------------------------------------
// Parameter parsing
// ---------------------------------------------------------------------------

fn check_keys(name: &str, params: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "operator {name} does not accept parameter {key}"
            )));
        }
    }
    Ok(())
}

fn f64_param(name: &str, params: &Map<String, Value>, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| {
            Error::Config(format!("parameter {key} of {name} must be a number"))
        }),
    }
}

fn usize_param(name: &str, params: &Map<String, Value>, key: &str, default: usize) -> Result<usize> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .map(|n| n as usize)
            .ok_or_else(|| {
                Error::Config(format!(
                    "parameter {key} of {name} must be a non-negative integer"
                ))
            }),
    }
}

fn bool_param(name: &str, params: &Map<String, Value>, key: &str, default: bool) -> Result<bool> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v.as_bool().ok_or_else(|| {
            Error::Config(format!("parameter {key} of {name} must be a boolean"))
        }),
    }
}

fn str_param<'p>(
    name: &str,
    params: &'p Map<String, Value>,
    key: &str,
    default: &'static str,
) -> Result<&'p str> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v.as_str().ok_or_else(|| {
            Error::Config(format!("parameter {key} of {name} must be a string"))
        }),
    }
}

fn ordered<T: PartialOrd + std::fmt::Display>(name: &str, min: T, max: T) -> Result<(T, T)> {
    if min > max {
        return Err(Error::Config(format!(
            "operator {name}: min {min} exceeds max {max}"
        )));
    }
    Ok((min, max))
}

fn positive_ngram(name: &str, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Config(format!(
            "operator {name}: n-gram size must be at least 1"
        )));
    }
    Ok(n)
}

fn compile(spec: &OperatorSpec) -> Result<Op> {
    let name = spec.name.as_str();
    let p = &spec.params;
    let op = match name {
        "chinese_convert_mapper" => {
            check_keys(name, p, &["mode"])?;
            let mode = str_param(name, p, "mode", "t2s")?;
            if mode != "t2s" {
                return Err(Error::Config(format!(
                    "operator {name}: unsupported mode {mode} (only t2s is available)"
                )));
            }
            Op::Mapper(MapperKind::ChineseConvert)
        }
        "clean_email_mapper" => {
            check_keys(name, p, &[])?;
            Op::Mapper(MapperKind::CleanEmail)
        }
        "clean_html_mapper" => {
            check_keys(name, p, &[])?;
            Op::Mapper(MapperKind::CleanHtml)
        }
        "clean_ip_mapper" => {
            check_keys(name, p, &[])?;
            Op::Mapper(MapperKind::CleanIp)
        }
        "clean_links_mapper" => {
            check_keys(name, p, &[])?;
            Op::Mapper(MapperKind::CleanLinks)
        }
        "clean_copyright_mapper" => {
            check_keys(name, p, &[])?;
            Op::Mapper(MapperKind::CleanCopyright)
        }
        "expand_macro_mapper" => {
            check_keys(name, p, &[])?;
            Op::Mapper(MapperKind::ExpandMacro)
        }
        "fix_unicode_mapper" => {
            check_keys(name, p, &[])?;
            Op::Mapper(MapperKind::FixUnicode)
        }
        "punctuation_normalization_mapper" => {
            check_keys(name, p, &[])?;
            Op::Mapper(MapperKind::PunctuationNormalization)
        }
        "remove_repeat_sentences_mapper" => {
            check_keys(name, p, &[])?;
            Op::Mapper(MapperKind::RemoveRepeatSentences)
        }
        "remove_specific_chars_mapper" => {
            check_keys(name, p, &["chars"])?;
            let chars = str_param(name, p, "chars", mappers::DEFAULT_SPECIFIC_CHARS)?;
            Op::Mapper(MapperKind::RemoveSpecificChars(chars.to_string()))
        }
        "whitespace_normalization_mapper" => {
            check_keys(name, p, &[])?;
            Op::Mapper(MapperKind::WhitespaceNormalization)
        }
        "alphanumeric_filter" => {
            check_keys(name, p, &["mode", "min", "max"])?;
            let mode = match str_param(name, p, "mode", "chars")? {
                "chars" => AlnumMode::Chars,
                "tokens" => AlnumMode::Tokens,
                other => {
                    return Err(Error::Config(format!(
                        "operator {name}: mode must be chars or tokens, got {other}"
                    )))
                }
            };
            let (min, max) = ordered(
                name,
                f64_param(name, p, "min", 0.0)?,
                f64_param(name, p, "max", 0.9)?,
            )?;
            Op::Filter(FilterKind::Alphanumeric { mode, min, max })
        }
        "average_line_length_filter" => {
            check_keys(name, p, &["min", "max"])?;
            let (min, max) = ordered(
                name,
                f64_param(name, p, "min", 10.0)?,
                f64_param(name, p, "max", 150.0)?,
            )?;
            Op::Filter(FilterKind::AverageLineLength { min, max })
        }
        "character_repetition_filter" => {
            check_keys(name, p, &["n", "min", "max"])?;
            let n = positive_ngram(name, usize_param(name, p, "n", 10)?)?;
            let (min, max) = ordered(
                name,
                f64_param(name, p, "min", 0.0)?,
                f64_param(name, p, "max", 0.4)?,
            )?;
            Op::Filter(FilterKind::CharacterRepetition { n, min, max })
        }
        "maximum_line_length_filter" => {
            check_keys(name, p, &["min", "max"])?;
            let (min, max) = ordered(
                name,
                usize_param(name, p, "min", 0)?,
                usize_param(name, p, "max", 1000)?,
            )?;
            Op::Filter(FilterKind::MaximumLineLength { min, max })
        }
        "perplexity_filter" => {
            check_keys(name, p, &["max"])?;
            let max = f64_param(name, p, "max", 1500.0)?;
            if !max.is_finite() || max <= 0.0 {
                return Err(Error::Config(format!(
                    "operator {name}: max must be a positive number"
                )));
            }
            Op::Filter(FilterKind::Perplexity { max })
        }
        "special_characters_filter" => {
            check_keys(name, p, &["min", "max"])?;
            let (min, max) = ordered(
                name,
                f64_param(name, p, "min", 0.0)?,
                f64_param(name, p, "max", 0.25)?,
            )?;
            Op::Filter(FilterKind::SpecialCharacters { min, max })
        }
        "text_length_filter" => {
            check_keys(name, p, &["min", "max"])?;
            let (min, max) = ordered(
                name,
                usize_param(name, p, "min", 10)?,
                usize_param(name, p, "max", 100_000)?,
            )?;
            Op::Filter(FilterKind::TextLength { min, max })
        }
        "word_repetition_filter" => {
            check_keys(name, p, &["n", "min", "max"])?;
            let n = positive_ngram(name, usize_param(name, p, "n", 10)?)?;
            let (min, max) = ordered(
                name,
                f64_param(name, p, "min", 0.0)?,
                f64_param(name, p, "max", 0.5)?,
            )?;
            Op::Filter(FilterKind::WordRepetition { n, min, max })
        }
        "words_num_filter" => {
            check_keys(name, p, &["min", "max"])?;
            let (min, max) = ordered(
                name,
                usize_param(name, p, "min", 20)?,
                usize_param(name, p, "max", 6640)?,
            )?;
            Op::Filter(FilterKind::WordsNum { min, max })
        }
        "document_simhash_deduplicator" => {
            check_keys(name, p, &["window_size", "num_blocks", "hamming_distance", "lowercase"])?;
            let window_size = usize_param(name, p, "window_size", 6)?;
            let num_blocks = usize_param(name, p, "num_blocks", 6)?;
            let hamming_max = usize_param(name, p, "hamming_distance", 4)? as u32;
            let lowercase = bool_param(name, p, "lowercase", true)?;
            if window_size == 0 {
                return Err(Error::Config(format!(
                    "operator {name}: window_size must be at least 1"
                )));
            }
            if !(2..=64).contains(&num_blocks) {
                return Err(Error::Config(format!(
                    "operator {name}: num_blocks must be in 2..=64, got {num_blocks}"
                )));
            }
            if (num_blocks as u32) < hamming_max + 2 {
                return Err(Error::Config(format!(
                    "operator {name}: num_blocks ({num_blocks}) must be at least \
                     hamming_distance + 2 ({}) for the candidate search to be exhaustive",
                    hamming_max + 2
                )));
            }
            Op::Dedup {
                window_size,
                num_blocks,
                hamming_max,
                lowercase,
            }
        }
        other => {
            return Err(Error::Config(format!("unknown operator {other}")));
        }
    };
    Ok(op)
}

// ---------------------------------------------------------------------------
// One-shot operator application
// ---------------------------------------------------------------------------

/// Applies a single mapper spec to one document.
pub fn run_mapper(doc: &Document, spec: &OperatorSpec) -> Result<Document> {
    match compile(spec)? {
        Op::Mapper(kind) => {
            let mut out = doc.clone();
            out.text = kind.apply(&doc.text);
            Ok(out)
        }
        _ => Err(Error::Config(format!("operator {} is not a mapper", spec.name))),
    }
}

/// Evaluates a single filter spec against one document. `Some(reason)`
/// means the document would be dropped.
pub fn run_filter(doc: &Document, spec: &OperatorSpec) -> Result<Option<String>> {
    match compile(spec)? {
        Op::Filter(kind) => Ok(kind.evaluate(&doc.text)),
        _ => Err(Error::Config(format!("operator {} is not a filter", spec.name))),
    }
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// Runs the operator chain over the documents with `jobs` worker threads.
/// Returns the surviving documents in their original order plus a full
/// report. Results are identical for any `jobs >= 1`.
pub fn run_pipeline(
    docs: Vec<Document>,
    specs: &[OperatorSpec],
    jobs: usize,
) -> Result<(Vec<Document>, PipelineReport)> {
    if jobs == 0 {
        return Err(Error::Config("jobs must be at least 1".to_string()));
    }
    let ops: Vec<Op> = specs.iter().map(compile).collect::<Result<_>>()?;
    let mut ids = HashSet::new();
    for d in &docs {
        if !ids.insert(d.id.as_str()) {
            return Err(Error::Data(format!("duplicate document id {}", d.id)));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("could not build thread pool: {e}")))?;
    let input = docs.len();
    let mut docs = docs;
    let mut operators = Vec::with_capacity(ops.len());
    let mut drops = Vec::new();
    pool.install(|| {
        for (op, spec) in ops.iter().zip(specs) {
            let seen = docs.len();
            let mut modified = 0;
            let mut dropped = 0;
            match op {
                Op::Mapper(kind) => {
                    let new_texts: Vec<String> =
                        docs.par_iter().map(|d| kind.apply(&d.text)).collect();
                    for (doc, text) in docs.iter_mut().zip(new_texts) {
                        if doc.text != text {
                            modified += 1;
                            doc.text = text;
                        }
                    }
                }
                Op::Filter(kind) => {
                    let verdicts: Vec<Option<String>> =
                        docs.par_iter().map(|d| kind.evaluate(&d.text)).collect();
                    let mut kept = Vec::with_capacity(docs.len());
                    for (doc, verdict) in docs.drain(..).zip(verdicts) {
                        match verdict {
                            Some(reason) => {
                                dropped += 1;
                                drops.push(DropRecord {
                                    id: doc.id,
                                    operator: spec.name.clone(),
                                    reason,
                                });
                            }
                            None => kept.push(doc),
                        }
                    }
                    docs = kept;
                }
                Op::Dedup {
                    window_size,
                    num_blocks,
                    hamming_max,
                    lowercase,
                } => {
                    let fps: Vec<u64> = docs
                        .par_iter()
                        .map(|d| simhash::simhash_fingerprint(&d.text, *window_size, *lowercase))
                        .collect();
                    let roots = simhash::simhash_dedup(&fps, *hamming_max, *num_blocks);
                    let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
                    let mut kept = Vec::with_capacity(docs.len());
                    for (i, doc) in docs.drain(..).enumerate() {
                        if roots[i] == i {
                            kept.push(doc);
                        } else {
                            dropped += 1;
                            drops.push(DropRecord {
                                id: doc.id,
                                operator: spec.name.clone(),
                                reason: format!("near-duplicate of {}", ids[roots[i]]),
                            });
                        }
                    }
                    docs = kept;
                }
            }
            operators.push(OperatorReport {
                name: spec.name.clone(),
                seen,
                modified,
                dropped,
            });
        }
    });
    let report = PipelineReport {
        input,
        output: docs.len(),
        operators,
        drops,
    };
    Ok((docs, report))
}

// ---------------------------------------------------------------------------
// Default chains
// ---------------------------------------------------------------------------

/// The default operator chain for prose documents.
pub fn default_text_specs() -> Vec<OperatorSpec> {
    use serde_json::json;
    vec![
        spec("chinese_convert_mapper", json!({"mode": "t2s"})),
        spec("clean_email_mapper", json!({})),
        spec("clean_html_mapper", json!({})),
        spec("clean_ip_mapper", json!({})),
        spec("clean_links_mapper", json!({})),
        spec("clean_copyright_mapper", json!({})),
        spec("expand_macro_mapper", json!({})),
        spec("fix_unicode_mapper", json!({})),
        spec("punctuation_normalization_mapper", json!({})),
        spec("remove_repeat_sentences_mapper", json!({})),
        spec(
            "remove_specific_chars_mapper",
            json!({"chars": mappers::DEFAULT_SPECIFIC_CHARS}),
        ),
        spec("whitespace_normalization_mapper", json!({})),
        spec(
            "alphanumeric_filter",
            json!({"mode": "chars", "min": 0.0, "max": 0.9}),
        ),
        spec("average_line_length_filter", json!({"min": 10.0, "max": 150.0})),
        spec(
            "character_repetition_filter",
            json!({"n": 10, "min": 0.0, "max": 0.4}),
        ),
        spec("maximum_line_length_filter", json!({"min": 0, "max": 1000})),
        spec("perplexity_filter", json!({"max": 1500.0})),
        spec(
            "special_characters_filter",
            json!({"min": 0.0, "max": 0.25}),
        ),
        spec("text_length_filter", json!({"min": 10, "max": 100000})),
        spec(
            "word_repetition_filter",
            json!({"n": 10, "min": 0.0, "max": 0.5}),
        ),
        spec(
            "document_simhash_deduplicator",
            json!({"window_size": 6, "num_blocks": 6, "hamming_distance": 4, "lowercase": true}),
        ),
    ]
}

/// The default operator chain for source-code documents.
pub fn default_code_specs() -> Vec<OperatorSpec> {
    use serde_json::json;
    vec![
        spec("clean_copyright_mapper", json!({})),
        spec("clean_email_mapper", json!({})),
        spec("clean_links_mapper", json!({})),
        spec("fix_unicode_mapper", json!({})),
        spec("punctuation_normalization_mapper", json!({})),
        spec(
            "alphanumeric_filter",
            json!({"mode": "tokens", "min": 0.546, "max": 3.65}),
        ),
        spec("average_line_length_filter", json!({"min": 10.0, "max": 150.0})),
        spec(
            "character_repetition_filter",
            json!({"n": 10, "min": 0.0, "max": 0.36}),
        ),
        spec("maximum_line_length_filter", json!({"min": 0, "max": 1000})),
        spec("text_length_filter", json!({"min": 0, "max": 96714})),
        spec("words_num_filter", json!({"min": 20, "max": 6640})),
        spec(
            "word_repetition_filter",
            json!({"n": 10, "min": 0.0, "max": 0.357}),
        ),
        spec(
            "document_simhash_deduplicator",
            json!({"window_size": 6, "num_blocks": 6, "hamming_distance": 4, "lowercase": true}),
        ),
    ]
}

/// The default chain for a document kind.
pub fn default_specs(kind: DocKind) -> Vec<OperatorSpec> {
    match kind {
        DocKind::Text => default_text_specs(),
        DocKind::Code => default_code_specs(),
    }
}

// ---------------------------------------------------------------------------
// JSONL I/O
// ---------------------------------------------------------------------------

/// Reads documents from JSON-lines input. Blank lines are skipped; parse
/// failures report the 1-based line number.
pub fn read_documents_jsonl(reader: impl BufRead) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?;
        docs.push(doc);
    }
    Ok(docs)
}

/// Writes documents as JSON-lines.
pub fn write_documents_jsonl(mut writer: impl Write, docs: &[Document]) -> Result<()> {
    for doc in docs {
        let line = serde_json::to_string(doc).map_err(|e| Error::Data(e.to_string()))?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Reads an operator chain from a JSON array of `{name, params}` objects.
pub fn read_specs_json(json: &str) -> Result<Vec<OperatorSpec>> {
    serde_json::from_str(json).map_err(|e| Error::Config(format!("pipeline config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> Document {
        Document::new(id, text, DocKind::Text)
    }

    #[test]
    fn unknown_operator_is_a_config_error() {
        let bad = spec("frobnicate_mapper", serde_json::json!({}));
        let err = run_pipeline(vec![doc("a", "hello")], &[bad], 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(err.to_string().contains("frobnicate_mapper"));
    }

    #[test]
    fn unknown_parameter_is_a_config_error() {
        let bad = spec("clean_email_mapper", serde_json::json!({"aggression": 11}));
        let err = compile(&bad).unwrap_err();
        assert!(err.to_string().contains("aggression"));
    }

    #[test]
    fn misconfiguration_aborts_before_processing() {
        // First op is fine, second is broken: no document may be touched.
        let specs = vec![
            spec("text_length_filter", serde_json::json!({"min": 1, "max": 5})),
            spec("alphanumeric_filter", serde_json::json!({"mode": "vibes"})),
        ];
        let docs = vec![doc("a", "would be dropped by the length filter")];
        let err = run_pipeline(docs, &specs, 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn inverted_bounds_are_rejected() {
        let bad = spec("text_length_filter", serde_json::json!({"min": 100, "max": 5}));
        assert!(compile(&bad).is_err());
    }

    #[test]
    fn duplicate_ids_are_a_data_error() {
        let docs = vec![doc("a", "one"), doc("a", "two")];
        let err = run_pipeline(docs, &default_text_specs(), 1).unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");
    }

    #[test]
    fn zero_jobs_is_a_config_error() {
        let err = run_pipeline(vec![], &[], 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn run_mapper_and_run_filter_one_shots() {
        let d = doc("a", "mail me@example.com now");
        let cleaned = run_mapper(&d, &spec("clean_email_mapper", serde_json::json!({}))).unwrap();
        assert_eq!(cleaned.text, "mail  now");
        let verdict = run_filter(
            &d,
            &spec("text_length_filter", serde_json::json!({"min": 100, "max": 200})),
        )
        .unwrap();
        assert!(verdict.unwrap().contains("text length"));
        // Category mismatches are config errors.
        assert!(run_mapper(&d, &spec("text_length_filter", serde_json::json!({}))).is_err());
        assert!(run_filter(&d, &spec("clean_email_mapper", serde_json::json!({}))).is_err());
    }

    #[test]
    fn default_chains_have_the_documented_shape() {
        let text = default_text_specs();
        assert_eq!(text.len(), 21);
        assert_eq!(text[0].name, "chinese_convert_mapper");
        assert_eq!(text[20].name, "document_simhash_deduplicator");
        let code = default_code_specs();
        assert_eq!(code.len(), 13);
        assert_eq!(code[0].name, "clean_copyright_mapper");
        assert_eq!(code[12].name, "document_simhash_deduplicator");
        // Every default spec compiles.
        for s in text.iter().chain(code.iter()) {
            compile(s).unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
    }

    #[test]
    fn pipeline_maps_filters_and_dedups_in_order() {
        let keep = "The workshop opens early in the morning, before the street \
                    outside has any traffic. Measurement comes first in every job.";
        let docs = vec![
            doc("keep", keep),
            doc("short", "tiny"),
            doc("dup", keep),
            doc("email", &format!("{keep} Contact someone@example.org for details.")),
        ];
        let (out, report) = run_pipeline(docs, &default_text_specs(), 2).unwrap();
        let ids: Vec<&str> = out.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, vec!["keep", "email"]);
        assert!(!out[1].text.contains("someone@example.org"));
        assert!(report.conserves_documents());
        assert_eq!(report.input, 4);
        assert_eq!(report.output, 2);
        let reasons: Vec<&str> = report.drops.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(reasons, vec!["short", "dup"]);
    }

    #[test]
    fn jobs_do_not_change_results() {
        let mut docs = Vec::new();
        for i in 0..40 {
            docs.push(doc(
                &format!("d{i}"),
                &format!(
                    "The workshop opens early in the morning number {i}. Small errors \
                     are easier to fix when the mind is fresh, so the difficult \
                     problems wait on the bench."
                ),
            ));
        }
        // Plant exact duplicates to exercise dedup under parallelism.
        docs.push(doc("dup-a", "The records of the shop are kept in plain notebooks, one page per job. Date, customer, description, materials, time."));
        docs.push(doc("dup-b", "The records of the shop are kept in plain notebooks, one page per job. Date, customer, description, materials, time."));
        let (out1, rep1) = run_pipeline(docs.clone(), &default_text_specs(), 1).unwrap();
        let (out8, rep8) = run_pipeline(docs, &default_text_specs(), 8).unwrap();
        assert_eq!(out1, out8);
        assert_eq!(rep1, rep8);
    }

    #[test]
    fn jsonl_round_trip_and_errors() {
        let mut d = doc("a", "text body");
        d.meta.insert("source".into(), "unit".into());
        let mut buf = Vec::new();
        write_documents_jsonl(&mut buf, &[d.clone()]).unwrap();
        let back = read_documents_jsonl(&buf[..]).unwrap();
        assert_eq!(back, vec![d]);
        // kind defaults to text when omitted.
        let minimal = br#"{"id": "x", "text": "hello"}"#;
        let docs = read_documents_jsonl(&minimal[..]).unwrap();
        assert_eq!(docs[0].kind, DocKind::Text);
        // Parse errors carry the line number.
        let bad = b"{\"id\": \"x\", \"text\": \"ok\"}\nnot json\n";
        let err = read_documents_jsonl(&bad[..]).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn report_serializes_and_round_trips() {
        let (_, report) = run_pipeline(
            vec![doc("a", "0123456789 at least")],
            &default_text_specs(),
            1,
        )
        .unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: PipelineReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }
}
