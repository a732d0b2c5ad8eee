//! Sentence-level dimension scores: the mean of the word scores over the
//! tokens that match the lexicon.

use serde::Serialize;

use super::{Dimension, Lexicon, DIMENSION_COUNT};

/// Per-dimension sentence score. `scores` is present iff at least one
/// token matched the lexicon; all nine dimensions are populated together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceScore {
    pub scores: Option<[f64; DIMENSION_COUNT]>,
    pub matched_count: usize,
}

impl SentenceScore {
    pub fn get(&self, dim: Dimension) -> Option<f64> {
        self.scores.map(|s| s[dim.index()])
    }
}

/// Lowercase, split on whitespace, strip leading/trailing punctuation.
/// Interior punctuation (apostrophes, hyphens) is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| {
            raw.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|token| !token.is_empty())
        .collect()
}

/// Mean word score per dimension over the tokens found in the lexicon.
/// Repeated tokens each contribute. No matches yields all-missing scores.
pub fn score_sentence(text: &str, lexicon: &Lexicon) -> SentenceScore {
    let mut sums = [0.0; DIMENSION_COUNT];
    let mut matched = 0usize;
    for token in tokenize(text) {
        if let Some(scores) = lexicon.get(&token) {
            matched += 1;
            for (d, &s) in scores.iter().enumerate() {
                sums[d] += s;
            }
        }
    }
    if matched == 0 {
        return SentenceScore {
            scores: None,
            matched_count: 0,
        };
    }
    for sum in &mut sums {
        *sum /= matched as f64;
    }
    SentenceScore {
        scores: Some(sums),
        matched_count: matched,
    }
}

/// Conversation-level dimension scores over a set of sentences (one
/// subscale's worth): the unweighted mean of the per-sentence scores,
/// skipping sentences with no lexicon matches. Missing when every
/// sentence is empty-matched.
pub fn conversation_dimension(
    sentences: &[&str],
    lexicon: &Lexicon,
) -> Option<[f64; DIMENSION_COUNT]> {
    let mut sums = [0.0; DIMENSION_COUNT];
    let mut scored = 0usize;
    for sentence in sentences {
        if let Some(scores) = score_sentence(sentence, lexicon).scores {
            scored += 1;
            for (d, &s) in scores.iter().enumerate() {
                sums[d] += s;
            }
        }
    }
    if scored == 0 {
        return None;
    }
    for sum in &mut sums {
        *sum /= scored as f64;
    }
    Some(sums)
}
