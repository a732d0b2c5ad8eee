//! Word-norms lexicon and sentence-level psycholinguistic scoring.
//!
//! A lexicon maps words to scores on nine dimensions (arousal, valence,
//! dominance, concreteness, imageability, familiarity, age of acquisition,
//! semantic size, gender association). A sentence scores as the mean of
//! the word scores over the tokens found in the lexicon.

mod heatmap;
mod score;

pub use heatmap::{
    heatmap, AggregationMode, CellStatus, CorrelationHeatmap, HeatmapCell, HeatmapConfig,
    HeatmapRow,
};
pub use score::{conversation_dimension, score_sentence, tokenize, SentenceScore};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of psycholinguistic dimensions.
pub const DIMENSION_COUNT: usize = 9;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read lexicon file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon file {path}: {message}")]
    Schema { path: String, message: String },
    #[error("lexicon row {row} ({word:?}): {dimension} = {value} outside [{low}, {high}]")]
    OutOfBounds {
        row: usize,
        word: String,
        dimension: Dimension,
        value: f64,
        low: f64,
        high: f64,
    },
    #[error("duplicate word {word:?} at row {row}")]
    DuplicateWord { row: usize, word: String },
    #[error("lexicon row {row}: {message}")]
    BadRow { row: usize, message: String },
}

/// The nine Glasgow-norm dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    Arousal,
    Valence,
    Dominance,
    Concreteness,
    Imageability,
    Familiarity,
    AgeOfAcquisition,
    SemanticSize,
    GenderAssociation,
}

impl Dimension {
    pub const ALL: [Dimension; DIMENSION_COUNT] = [
        Dimension::Arousal,
        Dimension::Valence,
        Dimension::Dominance,
        Dimension::Concreteness,
        Dimension::Imageability,
        Dimension::Familiarity,
        Dimension::AgeOfAcquisition,
        Dimension::SemanticSize,
        Dimension::GenderAssociation,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&d| d == self).unwrap()
    }

    /// Conventional column abbreviation.
    pub fn abbrev(self) -> &'static str {
        match self {
            Dimension::Arousal => "AROU",
            Dimension::Valence => "VAL",
            Dimension::Dominance => "DOM",
            Dimension::Concreteness => "CNC",
            Dimension::Imageability => "IMAG",
            Dimension::Familiarity => "FAM",
            Dimension::AgeOfAcquisition => "AOA",
            Dimension::SemanticSize => "SIZE",
            Dimension::GenderAssociation => "GEND",
        }
    }

    /// Inclusive rating scale bounds: 1..9 for arousal, valence and
    /// dominance; 1..7 for the rest.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Dimension::Arousal | Dimension::Valence | Dimension::Dominance => (1.0, 9.0),
            _ => (1.0, 7.0),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbrev())
    }
}

const BUNDLED_LEXICON: &str = include_str!("../../data/toy_lexicon.csv");

/// Validated word table: lowercased unique words, nine scores each.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: BTreeMap<String, [f64; DIMENSION_COUNT]>,
}

impl Lexicon {
    /// Small bundled word table used by the synthetic respondent and the
    /// test suites. Values are plausible but are not the published norms;
    /// load those from disk for real analyses.
    pub fn bundled() -> Lexicon {
        Self::from_reader(BUNDLED_LEXICON.as_bytes(), "<bundled>")
            .expect("bundled lexicon is valid")
    }

    /// Load a lexicon from a CSV file with header
    /// `word,arou,val,dom,cnc,imag,fam,aoa,size,gend` (case-insensitive,
    /// any column order after `word`).
    pub fn from_path(path: &Path) -> Result<Lexicon, LexiconError> {
        let file = std::fs::File::open(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(file, &path.display().to_string())
    }

    pub fn from_reader<R: std::io::Read>(reader: R, origin: &str) -> Result<Lexicon, LexiconError> {
        let mut csv_reader = csv::Reader::from_reader(reader);
        let headers = csv_reader
            .headers()
            .map_err(|e| LexiconError::Schema {
                path: origin.to_string(),
                message: e.to_string(),
            })?
            .clone();
        let lowered: Vec<String> = headers.iter().map(|h| h.trim().to_lowercase()).collect();
        let word_col = lowered
            .iter()
            .position(|h| h == "word" || h == "words")
            .ok_or_else(|| LexiconError::Schema {
                path: origin.to_string(),
                message: "missing `word` column".into(),
            })?;
        let mut dim_cols = [usize::MAX; DIMENSION_COUNT];
        for dim in Dimension::ALL {
            let abbrev = dim.abbrev().to_lowercase();
            match lowered.iter().position(|h| *h == abbrev) {
                Some(col) => dim_cols[dim.index()] = col,
                None => {
                    return Err(LexiconError::Schema {
                        path: origin.to_string(),
                        message: format!("missing dimension column `{}`", dim.abbrev()),
                    })
                }
            }
        }

        let mut entries = BTreeMap::new();
        for (row_index, row) in csv_reader.records().enumerate() {
            let row_number = row_index + 2; // 1-based, after header
            let row = row.map_err(|e| LexiconError::BadRow {
                row: row_number,
                message: e.to_string(),
            })?;
            let word = row
                .get(word_col)
                .unwrap_or("")
                .trim()
                .to_lowercase();
            if word.is_empty() {
                return Err(LexiconError::BadRow {
                    row: row_number,
                    message: "empty word".into(),
                });
            }
            let mut scores = [0.0; DIMENSION_COUNT];
            for dim in Dimension::ALL {
                let raw = row.get(dim_cols[dim.index()]).unwrap_or("").trim();
                let value: f64 = raw.parse().map_err(|_| LexiconError::BadRow {
                    row: row_number,
                    message: format!("bad {} value {raw:?}", dim.abbrev()),
                })?;
                let (low, high) = dim.bounds();
                if !(low..=high).contains(&value) {
                    return Err(LexiconError::OutOfBounds {
                        row: row_number,
                        word,
                        dimension: dim,
                        value,
                        low,
                        high,
                    });
                }
                scores[dim.index()] = value;
            }
            if entries.insert(word.clone(), scores).is_some() {
                return Err(LexiconError::DuplicateWord {
                    row: row_number,
                    word,
                });
            }
        }
        Ok(Lexicon { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Scores for a (lowercased) word, if present.
    pub fn get(&self, word: &str) -> Option<&[f64; DIMENSION_COUNT]> {
        self.entries.get(word)
    }

    /// Words in sorted order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Per-dimension mean and standard deviation over the whole lexicon.
    pub fn dimension_moments(&self) -> [(f64, f64); DIMENSION_COUNT] {
        let n = self.entries.len().max(1) as f64;
        let mut moments = [(0.0, 0.0); DIMENSION_COUNT];
        for scores in self.entries.values() {
            for (d, &s) in scores.iter().enumerate() {
                moments[d].0 += s;
            }
        }
        for m in &mut moments {
            m.0 /= n;
        }
        for scores in self.entries.values() {
            for (d, &s) in scores.iter().enumerate() {
                let delta = s - moments[d].0;
                moments[d].1 += delta * delta;
            }
        }
        for m in &mut moments {
            m.1 = (m.1 / n).sqrt();
        }
        moments
    }

    /// Restrict to the given words (exact lowercase match); useful for
    /// checking that scoring never falls back outside the lexicon.
    pub fn subset(&self, words: &[&str]) -> Lexicon {
        let entries = self
            .entries
            .iter()
            .filter(|(w, _)| words.contains(&w.as_str()))
            .map(|(w, s)| (w.clone(), *s))
            .collect();
        Lexicon { entries }
    }
}
