//! Pluggable tokenization.
//!
//! Production-grade BPE vocabularies are deliberately out of scope; the
//! shipped [`ByteTokenizer`] maps UTF-8 bytes to ids directly, which keeps
//! every pipeline stage exercisable end to end at desk scale. Anything
//! implementing [`Tokenizer`] can be swapped in.

/// Minimal encoding interface consumed by the packing and fine-tuning
/// stages.
pub trait Tokenizer {
    /// Total number of token ids, including special tokens.
    fn vocab_size(&self) -> usize;
    /// Encode text to token ids.
    fn encode(&self, text: &str) -> Vec<u32>;
    /// Decode ids back to text; unknown or special ids render as
    /// placeholders rather than failing.
    fn decode(&self, ids: &[u32]) -> String;
}

/// Byte-level tokenizer: ids 0–255 are raw UTF-8 bytes, followed by the
/// three chat markers.
#[derive(Debug, Clone, Copy, Default)]
pub struct ByteTokenizer;

impl ByteTokenizer {
    /// Marks the start of a user turn.
    pub const USER: u32 = 256;
    /// Marks the start of an assistant turn.
    pub const ASSISTANT: u32 = 257;
    /// Marks the end of an assistant turn.
    pub const END: u32 = 258;
    /// 256 byte values plus the three markers.
    pub const VOCAB_SIZE: usize = 259;
}

impl Tokenizer for ByteTokenizer {
    fn vocab_size(&self) -> usize {
        Self::VOCAB_SIZE
    }

    fn encode(&self, text: &str) -> Vec<u32> {
        text.bytes().map(u32::from).collect()
    }

    fn decode(&self, ids: &[u32]) -> String {
        let mut bytes = Vec::with_capacity(ids.len());
        let mut out = String::new();
        let flush = |bytes: &mut Vec<u8>, out: &mut String| {
            if !bytes.is_empty() {
                out.push_str(&String::from_utf8_lossy(bytes));
                bytes.clear();
            }
        };
        for &id in ids {
            match id {
                0..=255 => bytes.push(id as u8),
                Self::USER => {
                    flush(&mut bytes, &mut out);
                    out.push_str("<|user|>");
                }
                Self::ASSISTANT => {
                    flush(&mut bytes, &mut out);
                    out.push_str("<|assistant|>");
                }
                Self::END => {
                    flush(&mut bytes, &mut out);
                    out.push_str("<|end|>");
                }
                other => {
                    flush(&mut bytes, &mut out);
                    out.push_str(&format!("<|{other}|>"));
                }
            }
        }
        flush(&mut bytes, &mut out);
        out
    }
}

/// One encoded prompt/response pair.
///
/// `response_mask[t]` is true iff token `t` belongs to the span the loss
/// should cover: the response bytes and the trailing end marker. The
/// leading user marker, the prompt bytes, and the assistant marker are
/// context only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatSample {
    /// `<|user|> prompt <|assistant|> response <|end|>` as token ids.
    pub tokens: Vec<u32>,
    /// Same length as `tokens`; true on response tokens.
    pub response_mask: Vec<bool>,
}

/// Encode a single-turn chat exchange with the span mask used by the
/// masked fine-tuning loss.
pub fn encode_chat(tokenizer: &dyn Tokenizer, prompt: &str, response: &str) -> ChatSample {
    let mut tokens = vec![ByteTokenizer::USER];
    tokens.extend(tokenizer.encode(prompt));
    tokens.push(ByteTokenizer::ASSISTANT);
    let context_len = tokens.len();
    tokens.extend(tokenizer.encode(response));
    tokens.push(ByteTokenizer::END);
    let mut response_mask = vec![false; tokens.len()];
    for flag in response_mask.iter_mut().skip(context_len) {
        *flag = true;
    }
    ChatSample {
        tokens,
        response_mask,
    }
}
