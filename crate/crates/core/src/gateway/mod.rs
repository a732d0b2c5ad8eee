//! Prompt administration: sends rendered prompts to a completion backend,
//! parses replies into validated per-item records, retries transient
//! failures, and persists progress so interrupted runs resume by
//! conversation id.

mod http;
mod parse;
mod synthetic;

pub use http::{HttpBackend, HttpBackendConfig};
pub use parse::parse_reply;
pub use synthetic::{format_reply, SyntheticRespondent, SyntheticRespondentConfig};

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{subscale_of, ItemScore, Subscale, ITEM_COUNT};
use crate::prompts::{Condition, PromptSpec};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("reply is missing items {missing:?}")]
    IncompleteReply { missing: Vec<u8> },
    #[error("item {item}: score {value} outside 1..=4")]
    RangeError { item: u8, value: i64 },
    #[error("item number {0} outside 1..=42")]
    ItemOutOfRange(i64),
    #[error("item {0} appears more than once")]
    DuplicateItem(u8),
    #[error("item {0} has an empty explanation sentence")]
    EmptySentence(u8),
    #[error("duplicate conversation id {0} in spec list")]
    DuplicateConversation(String),
    #[error("backend authentication failed: {0}")]
    Auth(String),
    #[error("journal {path}: {source}")]
    Journal {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("backend configuration: {0}")]
    Config(String),
}

/// One parsed (item, score, explanation) triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseItem {
    pub item_number: u8,
    pub value: u8,
    pub sentence: String,
}

/// One conversation's validated 42-item response with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub conversation_id: String,
    pub condition: Condition,
    pub items: Vec<ResponseItem>,
    pub backend_tag: String,
    pub timestamp: String,
}

impl ResponseRecord {
    /// Validate and build: exactly one item per number 1..=42, scores in
    /// 1..=4, non-empty sentences. Items are stored sorted by number.
    pub fn new(
        conversation_id: String,
        condition: Condition,
        mut items: Vec<ResponseItem>,
        backend_tag: String,
        timestamp: String,
    ) -> Result<ResponseRecord, GatewayError> {
        items.sort_by_key(|item| item.item_number);
        let mut seen = [false; ITEM_COUNT + 1];
        for item in &items {
            if !(1..=ITEM_COUNT as u8).contains(&item.item_number) {
                return Err(GatewayError::ItemOutOfRange(i64::from(item.item_number)));
            }
            if seen[item.item_number as usize] {
                return Err(GatewayError::DuplicateItem(item.item_number));
            }
            seen[item.item_number as usize] = true;
            if !(1..=4).contains(&item.value) {
                return Err(GatewayError::RangeError {
                    item: item.item_number,
                    value: i64::from(item.value),
                });
            }
            if item.sentence.trim().is_empty() {
                return Err(GatewayError::EmptySentence(item.item_number));
            }
        }
        let missing: Vec<u8> = (1..=ITEM_COUNT as u8)
            .filter(|&n| !seen[n as usize])
            .collect();
        if !missing.is_empty() {
            return Err(GatewayError::IncompleteReply { missing });
        }
        Ok(ResponseRecord {
            conversation_id,
            condition,
            items,
            backend_tag,
            timestamp,
        })
    }

    pub fn scores(&self) -> Vec<ItemScore> {
        self.items
            .iter()
            .map(|item| ItemScore::new(item.item_number, item.value).expect("validated"))
            .collect()
    }

    /// Sum of the 14 member scores of a subscale.
    pub fn subscale_total(&self, subscale: Subscale) -> u16 {
        self.items
            .iter()
            .filter(|item| subscale_of(item.item_number).expect("validated") == subscale)
            .map(|item| u16::from(item.value))
            .sum()
    }

    /// The 14 explanation sentences of a subscale, in item order.
    pub fn sentences_for(&self, subscale: Subscale) -> Vec<&str> {
        self.items
            .iter()
            .filter(|item| subscale_of(item.item_number).expect("validated") == subscale)
            .map(|item| item.sentence.as_str())
            .collect()
    }
}

/// Why a completion attempt failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendErrorKind {
    /// Connection problems, timeouts, 5xx, 429: worth retrying.
    Transient,
    /// Authentication/authorization failure: aborts the run.
    Auth,
    /// Anything else (4xx, malformed response body).
    Fatal,
}

#[derive(Debug, Clone, Error)]
#[error("{message}")]
pub struct BackendError {
    pub kind: BackendErrorKind,
    pub message: String,
    pub status: Option<u16>,
}

impl BackendError {
    pub fn transient(message: impl Into<String>, status: Option<u16>) -> Self {
        BackendError {
            kind: BackendErrorKind::Transient,
            message: message.into(),
            status,
        }
    }

    pub fn fatal(message: impl Into<String>, status: Option<u16>) -> Self {
        BackendError {
            kind: BackendErrorKind::Fatal,
            message: message.into(),
            status,
        }
    }
}

/// A completion backend: produces one raw reply per prompt spec.
pub trait Backend: Sync {
    fn complete(&self, spec: &PromptSpec) -> Result<String, BackendError>;

    /// Provenance tag stored on every record, e.g. `openai:gpt-3.5-turbo`.
    fn tag(&self) -> String;

    /// Timestamp recorded on a finished conversation. Deterministic
    /// backends return a fixed value so reruns are bit-identical.
    fn timestamp(&self) -> String {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollectConfig {
    /// Transport retries per conversation before giving up.
    pub max_retries: u32,
    /// Exponential backoff base; delay = base * 2^attempt, capped.
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
    /// Bounded number of in-flight requests.
    pub concurrency: usize,
    /// Line-delimited progress journal; completed conversations are
    /// skipped on rerun.
    pub journal: Option<PathBuf>,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            max_retries: 5,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
            concurrency: 4,
            journal: None,
        }
    }
}

/// Per-spec result: a validated record or a failure entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CollectOutcome {
    Record(ResponseRecord),
    Failure {
        conversation_id: String,
        reason: String,
    },
}

impl CollectOutcome {
    pub fn conversation_id(&self) -> &str {
        match self {
            CollectOutcome::Record(record) => &record.conversation_id,
            CollectOutcome::Failure {
                conversation_id, ..
            } => conversation_id,
        }
    }

    pub fn record(&self) -> Option<&ResponseRecord> {
        match self {
            CollectOutcome::Record(record) => Some(record),
            CollectOutcome::Failure { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RetryEvent {
    pub conversation_id: String,
    pub attempt: u32,
    pub reason: String,
}

#[derive(Debug)]
pub struct CollectReport {
    /// One outcome per input spec, in spec order.
    pub outcomes: Vec<CollectOutcome>,
    pub retries: Vec<RetryEvent>,
    /// Conversations restored from the journal instead of re-run.
    pub resumed: usize,
}

impl CollectReport {
    pub fn records(&self) -> impl Iterator<Item = &ResponseRecord> {
        self.outcomes.iter().filter_map(CollectOutcome::record)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&str, &str)> {
        self.outcomes.iter().filter_map(|outcome| match outcome {
            CollectOutcome::Failure {
                conversation_id,
                reason,
            } => Some((conversation_id.as_str(), reason.as_str())),
            CollectOutcome::Record(_) => None,
        })
    }
}

fn load_journal(path: &Path) -> Result<BTreeMap<String, ResponseRecord>, GatewayError> {
    let mut done = BTreeMap::new();
    let file = match std::fs::File::open(path) {
        Ok(file) => file,
        Err(error) if error.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(source) => {
            return Err(GatewayError::Journal {
                path: path.display().to_string(),
                source,
            })
        }
    };
    for line in std::io::BufReader::new(file).lines() {
        let line = line.map_err(|source| GatewayError::Journal {
            path: path.display().to_string(),
            source,
        })?;
        // Tolerate lines truncated by an interrupted run; failures are
        // re-attempted, so only completed records are restored.
        if let Ok(CollectOutcome::Record(record)) = serde_json::from_str(&line) {
            done.insert(record.conversation_id.clone(), record);
        }
    }
    Ok(done)
}

fn backoff_delay(config: &CollectConfig, attempt: u32) -> std::time::Duration {
    let exp = config.base_delay_ms.saturating_mul(1u64 << attempt.min(16));
    std::time::Duration::from_millis(exp.min(config.max_delay_ms))
}

/// Run one conversation: transport retries with exponential backoff, one
/// re-ask on a malformed reply.
fn run_one(
    spec: &PromptSpec,
    backend: &dyn Backend,
    config: &CollectConfig,
    retries: &Mutex<Vec<RetryEvent>>,
) -> Result<CollectOutcome, GatewayError> {
    let conversation_id = spec.conversation_id();
    let mut asks = 0;
    loop {
        // One "ask" = one prompt submission, retried across transport
        // failures up to the cap.
        let mut attempt = 0;
        let raw = loop {
            match backend.complete(spec) {
                Ok(raw) => break Some(raw),
                Err(error) if error.kind == BackendErrorKind::Auth => {
                    return Err(GatewayError::Auth(error.message));
                }
                Err(error) if error.kind == BackendErrorKind::Transient => {
                    if attempt >= config.max_retries {
                        return Ok(CollectOutcome::Failure {
                            conversation_id,
                            reason: format!("transport: {}", error.message),
                        });
                    }
                    retries.lock().unwrap().push(RetryEvent {
                        conversation_id: conversation_id.clone(),
                        attempt,
                        reason: error.message.clone(),
                    });
                    std::thread::sleep(backoff_delay(config, attempt));
                    attempt += 1;
                }
                Err(error) => {
                    return Ok(CollectOutcome::Failure {
                        conversation_id,
                        reason: format!("backend: {}", error.message),
                    });
                }
            }
        };
        let raw = raw.expect("loop breaks with a reply");
        match parse_reply(&raw) {
            Ok(triples) => {
                let items = triples
                    .into_iter()
                    .map(|(item_number, value, sentence)| ResponseItem {
                        item_number,
                        value,
                        sentence,
                    })
                    .collect();
                let record = ResponseRecord::new(
                    conversation_id.clone(),
                    spec.condition,
                    items,
                    backend.tag(),
                    backend.timestamp(),
                )?;
                return Ok(CollectOutcome::Record(record));
            }
            Err(parse_error) => {
                asks += 1;
                if asks > 1 {
                    let reason = match parse_error {
                        GatewayError::IncompleteReply { .. } => "incomplete".to_string(),
                        other => format!("malformed: {other}"),
                    };
                    return Ok(CollectOutcome::Failure {
                        conversation_id,
                        reason,
                    });
                }
                // One re-ask, then give up.
            }
        }
    }
}

/// Administer every spec, in bounded-concurrency order-preserving fashion.
/// Returns one outcome per spec in input order regardless of completion
/// order. With a journal configured, already-completed conversations are
/// restored and new progress is appended as it happens.
pub fn collect(
    specs: &[PromptSpec],
    backend: &dyn Backend,
    config: &CollectConfig,
) -> Result<CollectReport, GatewayError> {
    let mut ids = BTreeMap::new();
    for spec in specs {
        if ids.insert(spec.conversation_id(), ()).is_some() {
            return Err(GatewayError::DuplicateConversation(spec.conversation_id()));
        }
    }

    let done = match &config.journal {
        Some(path) => load_journal(path)?,
        None => BTreeMap::new(),
    };
    let journal_file = match &config.journal {
        Some(path) => {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|source| GatewayError::Journal {
                    path: path.display().to_string(),
                    source,
                })?;
            }
            let file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|source| GatewayError::Journal {
                    path: path.display().to_string(),
                    source,
                })?;
            Some(Mutex::new(file))
        }
        None => None,
    };

    let slots: Vec<Mutex<Option<CollectOutcome>>> =
        specs.iter().map(|_| Mutex::new(None)).collect();
    let retries = Mutex::new(Vec::new());
    let next = AtomicUsize::new(0);
    let fatal: Mutex<Option<GatewayError>> = Mutex::new(None);
    let mut resumed = 0;

    // Pre-fill resumed conversations so workers skip them.
    for (index, spec) in specs.iter().enumerate() {
        if let Some(record) = done.get(&spec.conversation_id()) {
            *slots[index].lock().unwrap() = Some(CollectOutcome::Record(record.clone()));
            resumed += 1;
        }
    }

    let workers = config.concurrency.max(1).min(specs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if fatal.lock().unwrap().is_some() {
                    return;
                }
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= specs.len() {
                    return;
                }
                if slots[index].lock().unwrap().is_some() {
                    continue; // resumed
                }
                match run_one(&specs[index], backend, config, &retries) {
                    Ok(outcome) => {
                        if let Some(journal) = &journal_file {
                            let line =
                                serde_json::to_string(&outcome).expect("outcome serializes");
                            let mut file = journal.lock().unwrap();
                            let _ = writeln!(file, "{line}");
                        }
                        *slots[index].lock().unwrap() = Some(outcome);
                    }
                    Err(error) => {
                        let mut fatal = fatal.lock().unwrap();
                        if fatal.is_none() {
                            *fatal = Some(error);
                        }
                        return;
                    }
                }
            });
        }
    });

    if let Some(error) = fatal.into_inner().unwrap() {
        return Err(error);
    }
    let outcomes = slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("all specs processed"))
        .collect();
    Ok(CollectReport {
        outcomes,
        retries: retries.into_inner().unwrap(),
        resumed,
    })
}
