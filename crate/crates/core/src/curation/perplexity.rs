//! Character-trigram perplexity scoring.
//!
//! A deliberately small stand-in for the large n-gram language models
//! used by production quality filters: a character-trigram model with
//! add-one smoothing, trained on an embedded bilingual corpus. Text that
//! resembles the corpus scores in the low hundreds; text made of unseen
//! trigrams scores near the vocabulary size (~1900 for the embedded
//! corpus), so a drop threshold of 1500 separates prose from noise. The
//! corpus includes a one-occurrence sweep of rare ideographs purely to
//! inflate the smoothing vocabulary into that discriminative range.
//!
//! Out-of-domain natural text (for example Chinese prose sharing no
//! phrasing with the corpus) scores like noise; that corpus dependence is
//! inherent to perplexity filtering and is the operator's documented
//! behavior, not a defect.

use std::collections::HashMap;
use std::sync::OnceLock;

/// Start-of-text sentinel. Two of these precede the scored text so the
/// first real character has a well-defined trigram context.
const BOS: char = '\u{2}';

/// Anything that can assign a perplexity to a text.
pub trait PerplexityScorer: Send + Sync {
    fn perplexity(&self, text: &str) -> f64;
}

/// Add-one-smoothed character-trigram model.
///
/// `p(c | a b) = (count(abc) + 1) / (count(ab) + V)` where `V` is the
/// number of distinct characters in the raw training corpus (sentinels
/// excluded) and `count(ab)` counts occurrences of the context at
/// positions that have a following character. Perplexity is
/// `exp(mean negative log-likelihood per scored character)`; empty text
/// scores infinity.
pub struct TrigramScorer {
    trigrams: HashMap<(char, char, char), u32>,
    contexts: HashMap<(char, char), u32>,
    vocab: usize,
}

impl TrigramScorer {
    /// Trains on `corpus`. Panics on an empty corpus: a model with no
    /// vocabulary cannot assign probabilities.
    pub fn from_corpus(corpus: &str) -> Self {
        assert!(!corpus.is_empty(), "training corpus must be non-empty");
        let vocab = {
            let mut set: Vec<char> = corpus.chars().collect();
            set.sort_unstable();
            set.dedup();
            set.len()
        };
        let mut chars = Vec::with_capacity(corpus.chars().count() + 2);
        chars.push(BOS);
        chars.push(BOS);
        chars.extend(corpus.chars());
        let mut trigrams = HashMap::new();
        let mut contexts = HashMap::new();
        for w in chars.windows(3) {
            *trigrams.entry((w[0], w[1], w[2])).or_insert(0u32) += 1;
            *contexts.entry((w[0], w[1])).or_insert(0u32) += 1;
        }
        TrigramScorer {
            trigrams,
            contexts,
            vocab,
        }
    }

    /// The scorer trained on the embedded bilingual corpus.
    pub fn builtin() -> &'static TrigramScorer {
        static SCORER: OnceLock<TrigramScorer> = OnceLock::new();
        SCORER.get_or_init(|| TrigramScorer::from_corpus(include_str!("corpus.txt")))
    }
}

impl PerplexityScorer for TrigramScorer {
    fn perplexity(&self, text: &str) -> f64 {
        if text.is_empty() {
            return f64::INFINITY;
        }
        let mut chars = Vec::with_capacity(text.chars().count() + 2);
        chars.push(BOS);
        chars.push(BOS);
        chars.extend(text.chars());
        let mut nll = 0.0;
        for w in chars.windows(3) {
            let tri = *self.trigrams.get(&(w[0], w[1], w[2])).unwrap_or(&0) as f64;
            let ctx = *self.contexts.get(&(w[0], w[1])).unwrap_or(&0) as f64;
            let p = (tri + 1.0) / (ctx + self.vocab as f64);
            nll -= p.ln();
        }
        (nll / (chars.len() - 2) as f64).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_character_alphabet_scores_exactly_one() {
        // With a one-character vocabulary every smoothed probability is
        // (c+1)/(c+1) = 1, so the perplexity is exactly 1.0.
        let scorer = TrigramScorer::from_corpus("aaaa");
        assert_eq!(scorer.perplexity("a"), 1.0);
        assert_eq!(scorer.perplexity("aaaaaaa"), 1.0);
    }

    #[test]
    fn empty_text_is_infinitely_surprising() {
        assert_eq!(TrigramScorer::builtin().perplexity(""), f64::INFINITY);
    }

    #[test]
    fn corpus_text_beats_its_own_reversal() {
        let sample = "Measurement comes first in every job.";
        let reversed: String = sample.chars().rev().collect();
        let scorer = TrigramScorer::builtin();
        assert!(scorer.perplexity(sample) < scorer.perplexity(&reversed));
    }

    #[test]
    fn prose_clears_the_threshold_and_noise_does_not() {
        let scorer = TrigramScorer::builtin();
        let prose = "She walked through the garden and watered the plants before breakfast.";
        let noise = "xq zvkj qqp wfzx jq kvvx zzq pxw qjz vkx";
        assert!(scorer.perplexity(prose) < 1500.0, "prose should be kept");
        assert!(scorer.perplexity(noise) > 1500.0, "noise should be dropped");
    }

    #[test]
    fn matches_the_independent_model_on_a_fixed_sample() {
        // Value computed by the Python trigram model over the same corpus
        // bytes; agreement pins both the formula and the corpus file.
        let scorer = TrigramScorer::builtin();
        let got = scorer.perplexity("The workshop opens early in the morning.");
        let expected = 183.73096050008374;
        assert!((got - expected).abs() < 1e-6, "got {got}");
    }
}
