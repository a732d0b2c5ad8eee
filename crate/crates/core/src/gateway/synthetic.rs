//! Deterministic synthetic respondent with planted structure.
//!
//! Scores come from a shared per-subscale latent draw per conversation
//! plus per-item noise, which induces within-subscale correlation — the
//! oracle that the network pipeline is expected to recover as three
//! communities. Explanation sentences are assembled from lexicon words
//! chosen so that configured dimensions track the item score, planting a
//! known sign for the lexicon correlation analysis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, ResponseItem, ResponseRecord};
use crate::catalog::{subscale_of, ItemCatalog, Subscale, ITEM_COUNT};
use crate::lexi::{Dimension, Lexicon, DIMENSION_COUNT};
use crate::prompts::{Condition, PromptSpec, Valence};
use crate::util::{splitmix64, standard_normal};

/// Fixed timestamp so synthetic reruns are bit-identical.
const SYNTHETIC_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticRespondentConfig {
    pub seed: u64,
    /// Latent mean per (subscale, valence), indexed
    /// `[subscale.index()][valence.index()]`.
    pub latent_means: [[f64; 3]; 3],
    /// Standard deviation of both the shared subscale latent and the
    /// per-item noise; 0 makes the respondent fully deterministic.
    pub latent_sd: f64,
    /// Lexicon-dimension slope per (subscale, dimension), indexed
    /// `[subscale.index()][dimension.index()]`. Positive values make the
    /// dimension rise with the item score, negative values invert it.
    pub planted_lexicon_bias: [[f64; DIMENSION_COUNT]; 3],
    pub words_per_sentence: usize,
}

impl Default for SyntheticRespondentConfig {
    fn default() -> Self {
        SyntheticRespondentConfig {
            seed: 0,
            latent_means: [[2.5; 3]; 3],
            latent_sd: 0.6,
            planted_lexicon_bias: [[0.0; DIMENSION_COUNT]; 3],
            words_per_sentence: 6,
        }
    }
}

impl SyntheticRespondentConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_latent_sd(mut self, sd: f64) -> Self {
        assert!(sd >= 0.0, "latent_sd must be non-negative");
        self.latent_sd = sd;
        self
    }

    pub fn with_mean(mut self, subscale: Subscale, valence: Valence, mean: f64) -> Self {
        self.latent_means[subscale.index()][valence.index()] = mean;
        self
    }

    /// Same mean for every valence of a subscale.
    pub fn with_subscale_mean(mut self, subscale: Subscale, mean: f64) -> Self {
        for v in 0..3 {
            self.latent_means[subscale.index()][v] = mean;
        }
        self
    }

    pub fn with_bias(mut self, subscale: Subscale, dimension: Dimension, slope: f64) -> Self {
        self.planted_lexicon_bias[subscale.index()][dimension.index()] = slope;
        self
    }

    /// Clean three-factor structure: distinct subscale means, no valence
    /// effect, moderate noise.
    pub fn three_factor(seed: u64) -> Self {
        Self::default()
            .with_seed(seed)
            .with_subscale_mean(Subscale::Depression, 2.2)
            .with_subscale_mean(Subscale::Anxiety, 2.5)
            .with_subscale_mean(Subscale::Stress, 2.8)
    }

    /// Valence shifts every subscale: positive framing scores low,
    /// negative framing scores high.
    pub fn valence_sensitive(seed: u64) -> Self {
        let mut config = Self::default().with_seed(seed);
        for subscale in Subscale::ALL {
            config = config
                .with_mean(subscale, Valence::Positive, 2.0)
                .with_mean(subscale, Valence::Neutral, 2.5)
                .with_mean(subscale, Valence::Negative, 3.0);
        }
        config
    }
}

/// Offline deterministic backend. Same config and spec always produce
/// the same record.
pub struct SyntheticRespondent {
    config: SyntheticRespondentConfig,
    catalog: ItemCatalog,
    words: Vec<String>,
    /// Per subscale: word indices sorted by planted utility (ascending),
    /// present only when that subscale has a nonzero bias vector.
    ranked: [Option<Vec<usize>>; 3],
}

impl SyntheticRespondent {
    pub fn new(
        config: SyntheticRespondentConfig,
        lexicon: Lexicon,
        catalog: ItemCatalog,
    ) -> SyntheticRespondent {
        let words: Vec<String> = lexicon.words().map(String::from).collect();
        assert!(!words.is_empty(), "synthetic respondent needs a lexicon");
        let moments = lexicon.dimension_moments();
        let mut ranked: [Option<Vec<usize>>; 3] = [None, None, None];
        for subscale in Subscale::ALL {
            let bias = &config.planted_lexicon_bias[subscale.index()];
            if bias.iter().all(|&b| b == 0.0) {
                continue;
            }
            // Utility = weighted sum of z-scored dimensions.
            let mut utilities: Vec<(f64, usize)> = words
                .iter()
                .enumerate()
                .map(|(index, word)| {
                    let scores = lexicon.get(word).expect("word from lexicon");
                    let utility: f64 = (0..DIMENSION_COUNT)
                        .map(|d| {
                            let (mean, sd) = moments[d];
                            if sd == 0.0 {
                                0.0
                            } else {
                                bias[d] * (scores[d] - mean) / sd
                            }
                        })
                        .sum();
                    (utility, index)
                })
                .collect();
            utilities.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap()
                    .then_with(|| words[a.1].cmp(&words[b.1]))
            });
            ranked[subscale.index()] = Some(utilities.into_iter().map(|(_, i)| i).collect());
        }
        SyntheticRespondent {
            config,
            catalog,
            words,
            ranked,
        }
    }

    fn conversation_seed(&self, condition: &Condition, iteration: u32) -> u64 {
        let key = ((condition.ordinal() as u64) << 32) | u64::from(iteration);
        splitmix64(self.config.seed ^ splitmix64(key))
    }

    fn sentence(&self, subscale: Subscale, value: u8, rng: &mut ChaCha12Rng) -> String {
        let count = self.config.words_per_sentence.max(1);
        let pool: &[usize];
        let plain: Vec<usize>;
        let (start, end) = match &self.ranked[subscale.index()] {
            Some(order) => {
                pool = order;
                // Score 1..=4 maps to ascending utility quartiles.
                let n = order.len();
                let band = usize::from(value - 1);
                let start = n * band / 4;
                let end = (n * (band + 1) / 4).max(start + 1).min(n);
                (start, end)
            }
            None => {
                plain = (0..self.words.len()).collect();
                pool = &plain;
                (0, self.words.len())
            }
        };
        let mut chosen = Vec::with_capacity(count);
        for _ in 0..count {
            let index = pool[rng.gen_range(start..end)];
            chosen.push(self.words[index].as_str());
        }
        let mut sentence = String::new();
        for (position, word) in chosen.iter().enumerate() {
            if position == 0 {
                let mut chars = word.chars();
                if let Some(first) = chars.next() {
                    sentence.extend(first.to_uppercase());
                    sentence.push_str(chars.as_str());
                }
            } else {
                sentence.push(' ');
                sentence.push_str(word);
            }
        }
        sentence.push('.');
        sentence
    }

    /// Deterministic synthetic record for one prompt spec.
    pub fn respond(&self, spec: &PromptSpec) -> ResponseRecord {
        let mut rng =
            ChaCha12Rng::seed_from_u64(self.conversation_seed(&spec.condition, spec.iteration_index));
        let valence = spec.condition.valence.index();
        let sd = self.config.latent_sd;
        // Shared latent per subscale: the within-subscale correlation plant.
        let mut latent = [0.0; 3];
        for subscale in Subscale::ALL {
            let mean = self.config.latent_means[subscale.index()][valence];
            latent[subscale.index()] = mean + sd * standard_normal(&mut rng);
        }
        let mut items = Vec::with_capacity(ITEM_COUNT);
        for item_number in 1..=ITEM_COUNT as u8 {
            let subscale = subscale_of(item_number).expect("valid item");
            let raw = latent[subscale.index()] + sd * standard_normal(&mut rng);
            let value = raw.round().clamp(1.0, 4.0) as u8;
            let sentence = self.sentence(subscale, value, &mut rng);
            items.push(ResponseItem {
                item_number,
                value,
                sentence,
            });
        }
        ResponseRecord::new(
            spec.conversation_id(),
            spec.condition,
            items,
            self.tag(),
            SYNTHETIC_TIMESTAMP.to_string(),
        )
        .expect("synthetic records are valid by construction")
    }

    pub fn catalog(&self) -> &ItemCatalog {
        &self.catalog
    }
}

impl Backend for SyntheticRespondent {
    fn complete(&self, spec: &PromptSpec) -> Result<String, BackendError> {
        Ok(format_reply(&self.respond(spec)))
    }

    fn tag(&self) -> String {
        format!("synthetic:seed={}", self.config.seed)
    }

    fn timestamp(&self) -> String {
        SYNTHETIC_TIMESTAMP.to_string()
    }
}

/// Render a record in the reply wire format, one `n: v | sentence` line
/// per item.
pub fn format_reply(record: &ResponseRecord) -> String {
    record
        .items
        .iter()
        .map(|item| format!("{}: {} | {}", item.item_number, item.value, item.sentence))
        .collect::<Vec<_>>()
        .join("\n")
}
