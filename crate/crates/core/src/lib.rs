//! Toolkit for administering the DASS-42 questionnaire to LLM personas
//! over a factorial grid of academic scenarios, storing the scored and
//! free-text replies, and analysing them with network psychometrics and
//! psycholinguistic lexicon scoring.
//!
//! Pipeline stages map onto the modules:
//!
//! - [`catalog`]: the 42-item instrument, subscale ground truth, totals
//! - [`prompts`]: the gender x role x event x valence prompt grid
//! - [`gateway`]: administering prompts to a backend (HTTP or synthetic)
//! - [`dataset`]: the three CSV output formats plus human data ingestion
//! - [`net`]: correlation networks, filtering, communities, stability
//! - [`lexi`]: word-norm lexicon scoring and correlation heatmaps
//! - [`stats`]: Kruskal-Wallis tests and histograms
//! - [`report`]: plot-ready table emission

pub mod catalog;
pub mod dataset;
pub mod gateway;
pub mod lexi;
pub mod net;
pub mod prompts;
pub mod report;
pub mod stats;
pub mod util;
