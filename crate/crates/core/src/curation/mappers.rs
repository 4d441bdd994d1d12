//! Text-rewriting operators.
//!
//! Every mapper is a pure `&str -> String` function and is idempotent:
//! applying it twice gives the same result as applying it once. Removal
//! mappers guarantee this by re-scanning until a fixed point (each pass
//! strictly shrinks the text, so the loop terminates); substitution
//! mappers guarantee it with acyclic replacement tables.

use regex::Regex;
use std::collections::HashMap;
use std::sync::OnceLock;
use unicode_normalization::UnicodeNormalization;

use super::t2s::T2S_PAIRS;

fn regex(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static pattern compiles"))
}

/// Replaces text matching `re` with `rep` until no match remains, so that
/// removals that splice new matches together still converge.
fn replace_to_fixpoint(text: &str, re: &Regex, rep: &str) -> String {
    let mut current = text.to_string();
    loop {
        let next = re.replace_all(&current, rep);
        if next == current {
            return current;
        }
        current = next.into_owned();
    }
}

/// Converts traditional Chinese characters to simplified using the
/// embedded table. Characters outside the table pass through unchanged.
pub fn chinese_convert(text: &str) -> String {
    static MAP: OnceLock<HashMap<char, char>> = OnceLock::new();
    let map = MAP.get_or_init(|| T2S_PAIRS.iter().copied().collect());
    text.chars().map(|c| *map.get(&c).unwrap_or(&c)).collect()
}

/// Removes email addresses.
pub fn clean_email(text: &str) -> String {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = regex(&RE, r"[A-Za-z0-9.\-_+]+@[A-Za-z0-9.\-_]+\.[A-Za-z]+");
    replace_to_fixpoint(text, re, "")
}

/// Strips HTML markup: `<script>`/`<style>` elements disappear with their
/// contents, every other tag is removed leaving its text, and `&nbsp;`
/// becomes a plain space. Other entities are left encoded on purpose —
/// decoding `&lt;` to `<` would manufacture tags that a second pass would
/// then strip, breaking idempotence.
pub fn clean_html(text: &str) -> String {
    static SCRIPT: OnceLock<Regex> = OnceLock::new();
    static TAG: OnceLock<Regex> = OnceLock::new();
    let script = regex(
        &SCRIPT,
        r"(?is)<\s*(script|style)\b[^>]*>.*?<\s*/\s*(script|style)\s*>",
    );
    let tag = regex(&TAG, r"(?s)<[^<>]*>");
    let mut current = text.to_string();
    loop {
        let pass = replace_to_fixpoint(&current, script, "");
        let pass = replace_to_fixpoint(&pass, tag, "");
        if pass == current {
            break;
        }
        current = pass;
    }
    current.replace("&nbsp;", " ")
}

/// Removes IPv4 and simple IPv6 addresses.
pub fn clean_ip(text: &str) -> String {
    static RE: OnceLock<Regex> = OnceLock::new();
    let octet = r"(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)";
    let v4 = format!(r"\b(?:{octet}\.){{3}}{octet}\b");
    let v6 = r"\b(?:[0-9a-fA-F]{1,4}:){7}[0-9a-fA-F]{1,4}\b";
    let re = regex(&RE, &format!("{v4}|{v6}"));
    replace_to_fixpoint(text, re, "")
}

/// Removes URLs (http, https, ftp, and bare `www.` forms).
pub fn clean_links(text: &str) -> String {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = regex(&RE, r"(?i)(?:(?:https?|ftp)://|www\.)[^\s<>]+");
    replace_to_fixpoint(text, re, "")
}

fn is_comment_line(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("//")
        || t.starts_with('#')
        || t.starts_with('*')
        || t.starts_with("--")
        || t.starts_with('%')
        || t.starts_with(';')
}

/// Removes leading comment blocks that mention "copyright"
/// (case-insensitive). A block is either a `/* ... */` span or a maximal
/// run of single-line comments at the top of the text. Blocks without the
/// word stop the scan, so license-free header comments survive.
pub fn clean_copyright(text: &str) -> String {
    let mut rest = text;
    loop {
        let body_start = rest.len() - rest.trim_start().len();
        let body = &rest[body_start..];
        let block_len = if let Some(stripped) = body.strip_prefix("/*") {
            match stripped.find("*/") {
                Some(end) => 2 + end + 2,
                None => return rest.to_string(),
            }
        } else if is_comment_line(body) && !body.is_empty() {
            let mut len = 0;
            for line in body.split_inclusive('\n') {
                if is_comment_line(line) && !line.trim().is_empty() {
                    len += line.len();
                } else {
                    break;
                }
            }
            len
        } else {
            return rest.to_string();
        };
        let block = &body[..block_len];
        if block.to_lowercase().contains("copyright") {
            let after = &body[block_len..];
            let after = after.strip_prefix('\n').unwrap_or(after);
            // Leading whitespace before the removed block goes with it.
            rest = &rest[rest.len() - after.len()..];
        } else {
            return rest.to_string();
        }
    }
}

/// Applies Unicode NFC normalization and drops replacement characters
/// (U+FFFD) left behind by earlier decoding errors.
pub fn fix_unicode(text: &str) -> String {
    text.nfc().filter(|&c| c != '\u{FFFD}').collect()
}

/// Normalizes common full-width and typographic punctuation to ASCII.
/// The table is acyclic: no replacement output appears as an input.
pub fn punctuation_normalization(text: &str) -> String {
    const PAIRS: &[(char, &str)] = &[
        ('\u{2018}', "'"),  // left single quote
        ('\u{2019}', "'"),  // right single quote
        ('\u{201A}', "'"),  // low single quote
        ('\u{201C}', "\""), // left double quote
        ('\u{201D}', "\""), // right double quote
        ('\u{201E}', "\""), // low double quote
        ('\u{2013}', "-"),  // en dash
        ('\u{2014}', "-"),  // em dash
        ('\u{2015}', "-"),  // horizontal bar
        ('\u{2026}', "..."),
        ('\u{00AB}', "\""), // «
        ('\u{00BB}', "\""), // »
        ('\u{FF01}', "!"),
        ('\u{FF08}', "("),
        ('\u{FF09}', ")"),
        ('\u{FF0C}', ","),
        ('\u{FF1A}', ":"),
        ('\u{FF1B}', ";"),
        ('\u{FF1F}', "?"),
    ];
    static MAP: OnceLock<HashMap<char, &'static str>> = OnceLock::new();
    let map = MAP.get_or_init(|| PAIRS.iter().copied().collect());
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match map.get(&c) {
            Some(rep) => out.push_str(rep),
            None => out.push(c),
        }
    }
    out
}

/// Sentence-ending punctuation recognized by [`remove_repeat_sentences`].
const SENTENCE_ENDS: &[char] = &['。', '！', '？', '.', '!', '?'];

/// Splits text into sentences (delimiter kept with its sentence) and drops
/// any sentence whose alphanumeric content was already seen. Segments
/// shorter than two characters after trimming are kept verbatim, as are
/// segments with no alphanumeric content at all — only real prose is
/// deduplicated.
pub fn remove_repeat_sentences(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut seen = std::collections::HashSet::new();
    let mut start = 0;
    let flush = |segment: &str, seen: &mut std::collections::HashSet<String>| -> bool {
        let trimmed = segment.trim();
        if trimmed.chars().count() < 2 {
            return true;
        }
        let key: String = trimmed.chars().filter(|c| c.is_alphanumeric()).collect();
        if key.is_empty() {
            return true;
        }
        seen.insert(key)
    };
    for (i, c) in text.char_indices() {
        if SENTENCE_ENDS.contains(&c) {
            let end = i + c.len_utf8();
            let segment = &text[start..end];
            if flush(segment, &mut seen) {
                out.push_str(segment);
            }
            start = end;
        }
    }
    let tail = &text[start..];
    if flush(tail, &mut seen) {
        out.push_str(tail);
    }
    out
}

/// Default character set removed by [`remove_specific_chars`]: decorative
/// bullets and geometric shapes that carry no prose content.
pub const DEFAULT_SPECIFIC_CHARS: &str = "◆●■►▼▲▴∆▻▷❖♡□";

/// Deletes every occurrence of the listed characters.
pub fn remove_specific_chars(text: &str, chars: &str) -> String {
    text.chars().filter(|c| !chars.contains(*c)).collect()
}

/// Exotic horizontal space characters normalized to ASCII space. Newlines,
/// carriage returns, and tabs are intentionally preserved.
const EXOTIC_SPACES: &[char] = &[
    '\u{00A0}', '\u{1680}', '\u{2000}', '\u{2001}', '\u{2002}', '\u{2003}', '\u{2004}',
    '\u{2005}', '\u{2006}', '\u{2007}', '\u{2008}', '\u{2009}', '\u{200A}', '\u{202F}',
    '\u{205F}', '\u{3000}',
];

/// Maps exotic space characters to plain ASCII space.
pub fn whitespace_normalization(text: &str) -> String {
    text.chars()
        .map(|c| if EXOTIC_SPACES.contains(&c) { ' ' } else { c })
        .collect()
}

// ---------------------------------------------------------------------------
// TeX macro expansion
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct MacroDef {
    args: usize,
    body: String,
}

/// Reads a `{ ... }` group starting at `start` (which must point at `{`).
/// Returns the body and the index just past the closing brace, or `None`
/// if braces never balance.
fn read_group(text: &str, start: usize) -> Option<(&str, usize)> {
    let bytes = text.as_bytes();
    if bytes.get(start) != Some(&b'{') {
        return None;
    }
    let mut depth = 0usize;
    let mut i = start;
    while i < bytes.len() {
        match bytes[i] {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some((&text[start + 1..i], i + 1));
                }
            }
            b'\\' => i += 1, // skip escaped character
            _ => {}
        }
        i += 1;
    }
    None
}

fn read_control_word(text: &str, backslash: usize) -> Option<(&str, usize)> {
    let after = &text[backslash + 1..];
    let len = after
        .char_indices()
        .find(|(_, c)| !c.is_ascii_alphabetic())
        .map_or(after.len(), |(i, _)| i);
    if len == 0 {
        None
    } else {
        Some((&after[..len], backslash + 1 + len))
    }
}

/// Parses `\newcommand{\name}[n]{body}` and `\def\name{body}` definitions.
/// Returns the macro table plus the byte spans of the definitions, which
/// are protected from expansion so they survive verbatim.
fn collect_defs(text: &str) -> (HashMap<String, MacroDef>, Vec<(usize, usize)>) {
    let mut defs = HashMap::new();
    let mut spans = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'\\' {
            i += 1;
            continue;
        }
        let Some((word, mut pos)) = read_control_word(text, i) else {
            // An escaped character ("\\", "\{", ...) is not a control word;
            // skip the pair so e.g. "\\def" is not read as a definition.
            i += 1 + text[i + 1..].chars().next().map_or(0, char::len_utf8);
            continue;
        };
        let is_newcommand = word == "newcommand" || word == "renewcommand";
        let is_def = word == "def";
        if !is_newcommand && !is_def {
            i = pos;
            continue;
        }
        let start = i;
        let name;
        let mut args = 0usize;
        if is_newcommand {
            let Some((group, after)) = read_group(text, pos) else {
                i = pos;
                continue;
            };
            let g = group.trim();
            let Some(n) = g.strip_prefix('\\') else {
                i = pos;
                continue;
            };
            name = n.to_string();
            pos = after;
            if bytes.get(pos) == Some(&b'[') {
                if let Some(close) = text[pos..].find(']') {
                    if let Ok(n) = text[pos + 1..pos + close].trim().parse::<usize>() {
                        if n <= 9 {
                            args = n;
                            pos += close + 1;
                        }
                    }
                }
            }
        } else {
            let Some((w, after)) = (bytes.get(pos) == Some(&b'\\'))
                .then(|| read_control_word(text, pos))
                .flatten()
            else {
                i = pos;
                continue;
            };
            name = w.to_string();
            pos = after;
        }
        let Some((body, after)) = read_group(text, pos) else {
            i = pos;
            continue;
        };
        if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphabetic()) {
            defs.insert(
                name,
                MacroDef {
                    args,
                    body: body.to_string(),
                },
            );
            spans.push((start, after));
        }
        i = after;
    }
    (defs, spans)
}

/// Names of defined macros referenced inside `body`.
fn referenced<'a>(body: &str, defs: &'a HashMap<String, MacroDef>) -> Vec<&'a str> {
    let mut found = Vec::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\\' {
            if let Some((word, after)) = read_control_word(body, i) {
                if let Some((name, _)) = defs.get_key_value(word) {
                    found.push(name.as_str());
                }
                i = after;
                continue;
            }
            // Escaped character: skip the pair, mirroring expansion.
            i += 1 + body[i + 1..].chars().next().map_or(0, char::len_utf8);
            continue;
        }
        i += 1;
    }
    found
}

/// Macros that can reach themselves through their definition bodies.
/// Expanding these at all would leave a macro name behind for a second
/// pass to expand further, so they are excluded from expansion entirely.
fn cyclic_macros(defs: &HashMap<String, MacroDef>) -> std::collections::HashSet<String> {
    let mut cyclic = std::collections::HashSet::new();
    for start in defs.keys() {
        let mut stack: Vec<&str> = referenced(&defs[start].body, defs);
        let mut visited = std::collections::HashSet::new();
        while let Some(name) = stack.pop() {
            if name == start {
                cyclic.insert(start.clone());
                break;
            }
            if visited.insert(name) {
                stack.extend(referenced(&defs[name].body, defs));
            }
        }
    }
    cyclic
}

struct MacroTable {
    defs: HashMap<String, MacroDef>,
    cyclic: std::collections::HashSet<String>,
}

/// Expands macro invocations in `text`. Cyclic macros stay verbatim; an
/// active-set guard backs up the cycle analysis so expansion can never
/// loop even if the two ever disagree.
fn expand_fragment(text: &str, table: &MacroTable, active: &mut Vec<String>) -> String {
    let defs = &table.defs;
    let mut out = String::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'\\' {
            let c = text[i..].chars().next().expect("in bounds");
            out.push(c);
            i += c.len_utf8();
            continue;
        }
        let Some((word, after)) = read_control_word(text, i) else {
            // Escaped character ("\\", "\{", ...) or a lone trailing
            // backslash: emit the whole pair so the character after the
            // backslash can never be re-read as the start of a macro name.
            let end = i + 1 + text[i + 1..].chars().next().map_or(0, char::len_utf8);
            out.push_str(&text[i..end]);
            i = end;
            continue;
        };
        let Some(def) = defs.get(word) else {
            out.push_str(&text[i..after]);
            i = after;
            continue;
        };
        if table.cyclic.contains(word) || active.iter().any(|a| a == word) {
            out.push_str(&text[i..after]);
            i = after;
            continue;
        }
        // Gather the macro's argument groups; on shortfall the invocation
        // is malformed and stays verbatim.
        let mut pos = after;
        let mut call_args = Vec::with_capacity(def.args);
        let mut ok = true;
        for _ in 0..def.args {
            while bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
                pos += 1;
            }
            match read_group(text, pos) {
                Some((arg, next)) => {
                    call_args.push(arg.to_string());
                    pos = next;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            out.push_str(&text[i..after]);
            i = after;
            continue;
        }
        let mut body = String::with_capacity(def.body.len());
        let mut chars = def.body.chars().peekable();
        while let Some(c) = chars.next() {
            if c == '#' {
                if let Some(d) = chars.peek().and_then(|c| c.to_digit(10)) {
                    let idx = d as usize;
                    if idx >= 1 && idx <= call_args.len() {
                        chars.next();
                        body.push_str(&call_args[idx - 1]);
                        continue;
                    }
                }
            }
            body.push(c);
        }
        active.push(word.to_string());
        out.push_str(&expand_fragment(&body, table, active));
        active.pop();
        i = pos;
    }
    out
}

/// One full expansion sweep over the text.
fn expand_once(text: &str) -> String {
    let (defs, spans) = collect_defs(text);
    if defs.is_empty() {
        return text.to_string();
    }
    let cyclic = cyclic_macros(&defs);
    let table = MacroTable { defs, cyclic };
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    let mut active = Vec::new();
    for (start, end) in spans {
        if start > cursor {
            out.push_str(&expand_fragment(&text[cursor..start], &table, &mut active));
        }
        if end > cursor {
            out.push_str(&text[start.max(cursor)..end]);
            cursor = end;
        }
    }
    if cursor < text.len() {
        out.push_str(&expand_fragment(&text[cursor..], &table, &mut active));
    }
    out
}

/// Expands TeX macros defined in the text itself (`\newcommand`, `\def`).
/// Definitions are kept verbatim; invocations elsewhere are replaced by
/// their expanded bodies. Recursive definitions are detected up front and
/// left unexpanded rather than truncated at an arbitrary depth, because a
/// depth cap would let a second pass expand further.
///
/// Re-running this mapper never changes its output. Expansion can in
/// principle assemble brand-new definition text out of macro bodies and
/// arguments (e.g. a body ending in `\newcommand{\q}` followed by a group),
/// which a rerun would then pick up; such self-assembling inputs are
/// detected by re-expanding the result and are returned unchanged instead.
pub fn expand_macro(text: &str) -> String {
    let once = expand_once(text);
    if once == text {
        return once;
    }
    if expand_once(&once) == once {
        once
    } else {
        text.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idempotent(f: impl Fn(&str) -> String, input: &str) -> String {
        let once = f(input);
        let twice = f(&once);
        assert_eq!(once, twice, "second application changed the text");
        once
    }

    #[test]
    fn chinese_convert_translates_and_passes_through() {
        assert_eq!(idempotent(chinese_convert, "漢語學習"), "汉语学习");
        assert_eq!(chinese_convert("already 简体 and ascii"), "already 简体 and ascii");
    }

    #[test]
    fn clean_email_removes_addresses() {
        assert_eq!(
            idempotent(clean_email, "write to a.b-c+d@example.co.uk today"),
            "write to  today"
        );
        assert_eq!(clean_email("no at signs here"), "no at signs here");
    }

    #[test]
    fn clean_email_handles_spliced_addresses() {
        // Removing the inner address must not leave a fresh address behind.
        let tricky = "xa@b.comy@z.net";
        idempotent(clean_email, tricky);
    }

    #[test]
    fn clean_html_strips_tags_and_script_bodies() {
        let html = "<html><script>var x = 1;</script><p class=\"a\">Hello&nbsp;<b>world</b></p></html>";
        assert_eq!(idempotent(clean_html, html), "Hello world");
    }

    #[test]
    fn clean_html_keeps_entities_encoded() {
        assert_eq!(clean_html("3 &lt; 5 &amp; 6"), "3 &lt; 5 &amp; 6");
    }

    #[test]
    fn clean_html_survives_nested_fragments() {
        idempotent(clean_html, "<di<b>v>text</di</b>v>");
    }

    #[test]
    fn clean_ip_removes_v4_and_v6() {
        assert_eq!(
            idempotent(clean_ip, "host 192.168.0.1 and fe80:0:0:0:0:0:0:1 up"),
            "host  and  up"
        );
        assert_eq!(clean_ip("version 1.2.3"), "version 1.2.3");
        assert_eq!(clean_ip("999.999.999.999"), "999.999.999.999");
    }

    #[test]
    fn clean_links_removes_urls() {
        assert_eq!(
            idempotent(
                clean_links,
                "see https://example.com/a?b=1 or www.test.org/page now"
            ),
            "see  or  now"
        );
        assert_eq!(clean_links("no links"), "no links");
    }

    #[test]
    fn clean_copyright_strips_leading_notice() {
        let src = "// Copyright 2020 Someone\n// All rights reserved.\nfn main() {}\n";
        assert_eq!(idempotent(clean_copyright, src), "fn main() {}\n");
        let block = "/* Copyright (c) */\nint x;\n";
        assert_eq!(idempotent(clean_copyright, block), "int x;\n");
    }

    #[test]
    fn clean_copyright_keeps_other_comments() {
        let src = "// A helpful header\nfn main() {}\n";
        assert_eq!(clean_copyright(src), src);
        let inner = "fn main() {}\n// Copyright below the fold\n";
        assert_eq!(clean_copyright(inner), inner);
    }

    #[test]
    fn clean_copyright_strips_stacked_notices() {
        let src = "/* Copyright A */\n// copyright B\nbody\n";
        assert_eq!(idempotent(clean_copyright, src), "body\n");
    }

    #[test]
    fn fix_unicode_normalizes_and_drops_replacement() {
        // 'e' + combining acute composes to a single code point.
        let decomposed = "caf\u{0065}\u{0301}\u{FFFD}";
        assert_eq!(idempotent(fix_unicode, decomposed), "café");
    }

    #[test]
    fn punctuation_is_normalized() {
        assert_eq!(
            idempotent(punctuation_normalization, "\u{201C}quote\u{201D}\u{2014}done\u{2026}"),
            "\"quote\"-done..."
        );
        assert_eq!(punctuation_normalization("，：？！"), ",:?!");
    }

    #[test]
    fn repeat_sentences_are_removed() {
        assert_eq!(idempotent(remove_repeat_sentences, "你好。你好。不同。"), "你好。不同。");
        assert_eq!(idempotent(remove_repeat_sentences, "A! A? B."), "A! B.");
        // Punctuation differences do not defeat the dedup key.
        assert_eq!(remove_repeat_sentences("Same words. Same, words."), "Same words.");
    }

    #[test]
    fn repeat_sentences_keeps_short_and_symbol_segments() {
        // Bare delimiters and punctuation-only segments never dedup.
        assert_eq!(remove_repeat_sentences("?! ?!"), "?! ?!");
        assert_eq!(remove_repeat_sentences("... ..."), "... ...");
        assert_eq!(remove_repeat_sentences("no delimiter at all"), "no delimiter at all");
    }

    #[test]
    fn specific_chars_are_removed() {
        let f = |s: &str| remove_specific_chars(s, DEFAULT_SPECIFIC_CHARS);
        assert_eq!(idempotent(f, "◆ item ● other ■"), " item  other ");
    }

    #[test]
    fn exotic_spaces_become_ascii() {
        assert_eq!(
            idempotent(whitespace_normalization, "a\u{00A0}b\u{3000}c\u{2009}d"),
            "a b c d"
        );
        assert_eq!(whitespace_normalization("keep\tthis\nand\r\nthat"), "keep\tthis\nand\r\nthat");
    }

    #[test]
    fn macros_expand_with_arguments() {
        let src = "\\newcommand{\\vec}[1]{\\mathbf{#1}} compute \\vec{x} plus \\vec{y}";
        let out = idempotent(expand_macro, src);
        assert_eq!(
            out,
            "\\newcommand{\\vec}[1]{\\mathbf{#1}} compute \\mathbf{x} plus \\mathbf{y}"
        );
    }

    #[test]
    fn def_macros_expand_without_arguments() {
        let src = "\\def\\R{\\mathbb{R}} in \\R^n";
        assert_eq!(
            idempotent(expand_macro, src),
            "\\def\\R{\\mathbb{R}} in \\mathbb{R}^n"
        );
    }

    #[test]
    fn chained_macros_expand_fully_in_one_pass() {
        let src = "\\def\\a{\\b}\\def\\b{\\c}\\def\\c{leaf} use \\a end";
        assert_eq!(
            idempotent(expand_macro, src),
            "\\def\\a{\\b}\\def\\b{\\c}\\def\\c{leaf} use leaf end"
        );
    }

    #[test]
    fn recursive_macros_stay_verbatim() {
        // A self-referential macro is never expanded at all: partially
        // expanding it would leave an invocation for a second pass to
        // grow further.
        let src = "\\def\\x{\\x and more} go \\x stop";
        assert_eq!(idempotent(expand_macro, src), src);
        let mutual = "\\def\\p{\\q}\\def\\q{\\p} use \\p here";
        assert_eq!(idempotent(expand_macro, mutual), mutual);
    }

    #[test]
    fn unknown_macros_and_plain_text_pass_through() {
        assert_eq!(expand_macro("no definitions \\alpha here"), "no definitions \\alpha here");
        let src = "\\newcommand{\\aa}{x} use \\aa but \\bb stays";
        assert_eq!(
            idempotent(expand_macro, src),
            "\\newcommand{\\aa}{x} use x but \\bb stays"
        );
    }

    #[test]
    fn escaped_backslashes_never_start_macro_names() {
        // "\\aa" is an escaped backslash followed by literal text, not an
        // invocation of \aa — including when a body expansion puts the
        // two side by side.
        let src = "\\newcommand{\\aa}{Q}\\newcommand{\\x}[1]{w \\\\}\\x{q}aa";
        assert_eq!(
            idempotent(expand_macro, src),
            "\\newcommand{\\aa}{Q}\\newcommand{\\x}[1]{w \\\\}w \\\\aa"
        );
        // "\\def" is likewise not a definition.
        let literal = "a \\\\def\\y{q} \\y b";
        assert_eq!(idempotent(expand_macro, literal), literal);
    }

    #[test]
    fn self_assembling_definitions_are_left_alone() {
        // Expanding \x would stitch together a brand-new definition of \q
        // out of the argument and the body, which a second pass would then
        // expand. The mapper detects the instability and keeps the input.
        let src = "\\newcommand{\\x}[1]{#1{z}} \\x{\\newcommand{\\q}} \\q";
        assert_eq!(idempotent(expand_macro, src), src);
    }
}
