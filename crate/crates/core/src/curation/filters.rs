//! Quality statistics backing the filtering operators.
//!
//! Each function computes one number from the text; the pipeline compares
//! it against configured bounds. All character-based statistics count
//! Unicode scalar values, not bytes. Empty inputs take the conventional
//! values noted per function so filters behave predictably at the edges.

use std::collections::HashMap;

/// Text length in characters.
pub fn text_length(text: &str) -> usize {
    text.chars().count()
}

/// Number of whitespace-separated words.
pub fn words_num(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Fraction of characters that are alphanumeric. Empty text scores 0.
pub fn alphanumeric_char_ratio(text: &str) -> f64 {
    let total = text.chars().count();
    if total == 0 {
        return 0.0;
    }
    let alnum = text.chars().filter(|c| c.is_alphanumeric()).count();
    alnum as f64 / total as f64
}

/// Alphanumeric characters per whitespace-separated token, the
/// code-oriented variant whose useful range sits above 1. Token-free text
/// scores 0.
pub fn alphanumeric_token_ratio(text: &str) -> f64 {
    let tokens = text.split_whitespace().count();
    if tokens == 0 {
        return 0.0;
    }
    let alnum = text.chars().filter(|c| c.is_alphanumeric()).count();
    alnum as f64 / tokens as f64
}

/// Mean line length in characters. Lines are `\n`-separated; the final
/// fragment counts even without a trailing newline. Empty text scores 0.
pub fn average_line_length(text: &str) -> f64 {
    if text.is_empty() {
        return 0.0;
    }
    let mut lines = 0usize;
    let mut chars = 0usize;
    for line in text.split('\n') {
        lines += 1;
        chars += line.chars().count();
    }
    chars as f64 / lines as f64
}

/// Length in characters of the longest line.
pub fn maximum_line_length(text: &str) -> usize {
    text.split('\n').map(|l| l.chars().count()).max().unwrap_or(0)
}

/// Fraction of characters that are neither alphanumeric nor whitespace.
/// Empty text scores 0.
pub fn special_character_ratio(text: &str) -> f64 {
    let total = text.chars().count();
    if total == 0 {
        return 0.0;
    }
    let special = text
        .chars()
        .filter(|c| !c.is_alphanumeric() && !c.is_whitespace())
        .count();
    special as f64 / total as f64
}

fn repeated_fraction<T: std::hash::Hash + Eq>(grams: impl Iterator<Item = T>) -> f64 {
    let mut counts: HashMap<T, usize> = HashMap::new();
    for g in grams {
        *counts.entry(g).or_insert(0) += 1;
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return 0.0;
    }
    let repeated: usize = counts.values().filter(|&&c| c > 1).sum();
    repeated as f64 / total as f64
}

/// Fraction of character n-gram occurrences whose n-gram appears more
/// than once. Text shorter than `n` characters scores 0.
pub fn character_repetition_ratio(text: &str, n: usize) -> f64 {
    assert!(n > 0, "n-gram size must be positive");
    let chars: Vec<char> = text.chars().collect();
    if chars.len() < n {
        return 0.0;
    }
    repeated_fraction(chars.windows(n))
}

/// Fraction of word n-gram occurrences whose n-gram appears more than
/// once. Words are whitespace-separated; fewer than `n` words scores 0.
pub fn word_repetition_ratio(text: &str, n: usize) -> f64 {
    assert!(n > 0, "n-gram size must be positive");
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.len() < n {
        return 0.0;
    }
    repeated_fraction(words.windows(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_count_characters_not_bytes() {
        assert_eq!(text_length("héllo"), 5);
        assert_eq!(text_length("你好"), 2);
        assert_eq!(text_length(""), 0);
        assert_eq!(maximum_line_length("ab\n你好吗\nc"), 3);
    }

    #[test]
    fn words_are_whitespace_separated() {
        assert_eq!(words_num("one two\tthree\nfour"), 4);
        assert_eq!(words_num("   "), 0);
    }

    #[test]
    fn alphanumeric_ratios() {
        assert!((alphanumeric_char_ratio("ab! ") - 0.5).abs() < 1e-12);
        assert_eq!(alphanumeric_char_ratio(""), 0.0);
        // 10 alphanumeric characters across 2 tokens.
        assert!((alphanumeric_token_ratio("hello world") - 5.0).abs() < 1e-12);
        assert_eq!(alphanumeric_token_ratio("   "), 0.0);
    }

    #[test]
    fn line_lengths() {
        assert!((average_line_length("ab\ncdef") - 3.0).abs() < 1e-12);
        // Trailing newline introduces an empty final line.
        assert!((average_line_length("ab\n") - 1.0).abs() < 1e-12);
        assert_eq!(average_line_length(""), 0.0);
        assert_eq!(maximum_line_length(""), 0);
    }

    #[test]
    fn special_characters() {
        assert!((special_character_ratio("a!b?") - 0.5).abs() < 1e-12);
        assert_eq!(special_character_ratio("abc 123"), 0.0);
    }

    #[test]
    fn character_repetition_saturates_on_uniform_text() {
        // Every bigram of "aaaa" is "aa": all occurrences repeat.
        assert_eq!(character_repetition_ratio("aaaa", 2), 1.0);
        assert_eq!(character_repetition_ratio("abcd", 2), 0.0);
        assert_eq!(character_repetition_ratio("ab", 3), 0.0);
    }

    #[test]
    fn character_repetition_counts_fractions() {
        // "abab" bigrams: ab, ba, ab -> two of three occurrences repeat.
        assert!((character_repetition_ratio("abab", 2) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn word_repetition_mirrors_character_version() {
        assert_eq!(word_repetition_ratio("a b a b a b", 2), 1.0);
        assert_eq!(word_repetition_ratio("one two three", 2), 0.0);
        assert_eq!(word_repetition_ratio("one two", 3), 0.0);
        // 8 bigrams: xy x3, yz x3, zx x2 — every occurrence repeats.
        let loops = "x y z x y z x y z";
        assert!((word_repetition_ratio(loops, 2) - 1.0).abs() < 1e-12);
    }
}
