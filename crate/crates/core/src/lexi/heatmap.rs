//! Correlation heatmap between subscale totals and sentence-level
//! dimension scores, per persona cell, with p < alpha significance
//! masking.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{conversation_dimension, score_sentence, Dimension, Lexicon, DIMENSION_COUNT};
use crate::catalog::Subscale;
use crate::gateway::ResponseRecord;
use crate::prompts::{Event, Gender, Role};

/// How a conversation's 14 subscale sentences reduce to one dimension
/// score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// Mean of the per-sentence scores, skipping unmatched sentences.
    MeanOfSentences,
    /// Join the sentences and score the concatenation once.
    Concatenate,
}

#[derive(Debug, Clone)]
pub struct HeatmapConfig {
    /// Split rows by role as well as gender and event.
    pub include_role: bool,
    pub aggregation: AggregationMode,
    /// Two-sided significance threshold for the mask.
    pub alpha: f64,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        HeatmapConfig {
            include_role: false,
            aggregation: AggregationMode::MeanOfSentences,
            alpha: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// Fewer than 3 usable conversations.
    Insufficient,
    /// Zero variance in the totals or the dimension scores.
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatmapCell {
    pub subscale: Subscale,
    pub dimension: Dimension,
    pub status: CellStatus,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub n: usize,
    pub significant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatmapRow {
    pub persona: String,
    pub gender: Gender,
    pub role: Option<Role>,
    pub event: Event,
    pub cells: Vec<HeatmapCell>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationHeatmap {
    pub alpha: f64,
    pub rows: Vec<HeatmapRow>,
}

impl Event {
    /// Short label used in heatmap row names.
    pub fn abbrev(self) -> &'static str {
        match self {
            Event::Examination => "Exam",
            Event::Research => "Res",
            Event::Publish => "Pub",
            Event::Balance => "Bal",
            Event::Relationships => "Rel",
        }
    }
}

/// Single-pass bivariate moments; the naive two-pass formula is kept in
/// `util::pearson` as the independent check.
#[derive(Default)]
struct Streaming {
    n: usize,
    mean_x: f64,
    mean_y: f64,
    m2x: f64,
    m2y: f64,
    cxy: f64,
}

impl Streaming {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.m2x += dx * (x - self.mean_x);
        self.m2y += dy * (y - self.mean_y);
        self.cxy += dx * (y - self.mean_y);
    }

    fn pearson(&self) -> Option<f64> {
        if self.m2x <= 0.0 || self.m2y <= 0.0 {
            return None;
        }
        Some((self.cxy / (self.m2x * self.m2y).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Two-sided p-value for a Pearson r with n observations, via
/// t = r sqrt((n-2)/(1-r^2)).
pub fn pearson_p_value(r: f64, n: usize) -> f64 {
    if n < 3 {
        return f64::NAN;
    }
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

fn dimension_scores(
    record: &ResponseRecord,
    subscale: Subscale,
    lexicon: &Lexicon,
    mode: AggregationMode,
) -> Option<[f64; DIMENSION_COUNT]> {
    let sentences = record.sentences_for(subscale);
    match mode {
        AggregationMode::MeanOfSentences => conversation_dimension(&sentences, lexicon),
        AggregationMode::Concatenate => score_sentence(&sentences.join(" "), lexicon).scores,
    }
}

/// Build the heatmap: one row per persona cell, one cell per
/// (subscale, dimension), each holding Pearson r between the subscale
/// total and the conversation-level dimension score across conversations.
pub fn heatmap(
    records: &[ResponseRecord],
    lexicon: &Lexicon,
    config: &HeatmapConfig,
) -> CorrelationHeatmap {
    let mut groups: BTreeMap<(Gender, Option<Role>, Event), Vec<&ResponseRecord>> =
        BTreeMap::new();
    for record in records {
        let role = config.include_role.then_some(record.condition.role);
        groups
            .entry((record.condition.gender, role, record.condition.event))
            .or_default()
            .push(record);
    }

    let mut rows = Vec::with_capacity(groups.len());
    for ((gender, role, event), group) in groups {
        let persona = match role {
            Some(role) => format!(
                "{}_{}_{}",
                if gender == Gender::Male { "M" } else { "F" },
                if role == Role::PhdStudent { "PhD" } else { "Prof" },
                event.abbrev()
            ),
            None => format!(
                "{}_{}",
                if gender == Gender::Male { "M" } else { "F" },
                event.abbrev()
            ),
        };
        let mut cells = Vec::with_capacity(3 * DIMENSION_COUNT);
        for subscale in Subscale::ALL {
            // Score each conversation once per subscale.
            let scored: Vec<(f64, [f64; DIMENSION_COUNT])> = group
                .iter()
                .filter_map(|record| {
                    dimension_scores(record, subscale, lexicon, config.aggregation)
                        .map(|dims| (f64::from(record.subscale_total(subscale)), dims))
                })
                .collect();
            for dimension in Dimension::ALL {
                let mut stream = Streaming::default();
                for (total, dims) in &scored {
                    stream.push(*total, dims[dimension.index()]);
                }
                let n = stream.n;
                let cell = if n < 3 {
                    HeatmapCell {
                        subscale,
                        dimension,
                        status: CellStatus::Insufficient,
                        r: None,
                        p: None,
                        n,
                        significant: false,
                    }
                } else {
                    match stream.pearson() {
                        Some(r) => {
                            let p = pearson_p_value(r, n);
                            HeatmapCell {
                                subscale,
                                dimension,
                                status: CellStatus::Ok,
                                r: Some(r),
                                p: Some(p),
                                n,
                                significant: p < config.alpha,
                            }
                        }
                        None => HeatmapCell {
                            subscale,
                            dimension,
                            status: CellStatus::Degenerate,
                            r: None,
                            p: None,
                            n,
                            significant: false,
                        },
                    }
                };
                cells.push(cell);
            }
        }
        rows.push(HeatmapRow {
            persona,
            gender,
            role,
            event,
            cells,
        });
    }
    CorrelationHeatmap {
        alpha: config.alpha,
        rows,
    }
}

impl CorrelationHeatmap {
    pub fn cell(
        &self,
        persona: &str,
        subscale: Subscale,
        dimension: Dimension,
    ) -> Option<&HeatmapCell> {
        self.rows
            .iter()
            .find(|row| row.persona == persona)?
            .cells
            .iter()
            .find(|cell| cell.subscale == subscale && cell.dimension == dimension)
    }
}
