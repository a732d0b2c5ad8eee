//! Dataset serialization: the three per-cell CSV output formats with
//! their naming convention, plus ingestion of the human comparison data.
//!
//! Each (gender, event, valence) cell of a run produces three files:
//!
//! - Base: one row per conversation, ID plus the 42 numeric scores
//! - FMN: four columns (ID, question, score, sentence), 42 rows per
//!   conversation
//! - Sentence: one row per conversation, ID plus the 42 sentences
//!
//! Files are UTF-8 CSV with RFC 4180 quoting; sentences may contain
//! commas and quotes.

mod human;

pub use human::{read_human, HumanDataset, HumanGender, HumanRespondent, HumanSchema};

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ITEM_COUNT;
use crate::gateway::{ResponseItem, ResponseRecord};
use crate::prompts::{parse_conversation_id, Event, Gender, Valence};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path} row {row}: {message}")]
    Row {
        path: String,
        row: usize,
        message: String,
    },
    #[error("conversation id {0:?} does not encode a grid condition")]
    UnparseableId(String),
    #[error("record {0} failed validation: {1}")]
    BadRecord(String, String),
}

/// The three per-cell output formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Base,
    Fmn,
    Sentence,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 3] = [
        OutputFormat::Base,
        OutputFormat::Fmn,
        OutputFormat::Sentence,
    ];

    pub fn token(self) -> &'static str {
        match self {
            OutputFormat::Base => "base",
            OutputFormat::Fmn => "fmn",
            OutputFormat::Sentence => "sentence",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// File name for one cell and format:
/// `csv_openai-{gender}-{event}-{eventnumber}-{eventtype}-{outputformat}.csv`.
pub fn file_name(gender: Gender, event: Event, valence: Valence, format: OutputFormat) -> String {
    format!(
        "csv_openai-{}-{}-{}-{}-{}.csv",
        gender.token(),
        event.token(),
        event.number(),
        valence.token(),
        format.token()
    )
}

/// One Base row: conversation ID and the 42 numeric responses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseRow {
    pub id: String,
    pub values: Vec<u8>,
}

/// One FMN row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FmnRow {
    pub id: String,
    pub question: u8,
    pub score: u8,
    pub sentence: String,
}

/// One Sentence row: conversation ID and the 42 sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRow {
    pub id: String,
    pub sentences: Vec<String>,
}

fn io_error(path: &Path) -> impl FnOnce(csv::Error) -> DatasetError + '_ {
    move |error| DatasetError::Schema {
        path: path.display().to_string(),
        message: error.to_string(),
    }
}

/// Write the Base format: header `ID,Q1..Q42`, one row per conversation.
pub fn write_base(records: &[ResponseRecord], path: &Path) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_path(path).map_err(io_error(path))?;
    let mut header = vec!["ID".to_string()];
    header.extend((1..=ITEM_COUNT).map(|n| format!("Q{n}")));
    writer.write_record(&header).map_err(io_error(path))?;
    for record in records {
        let mut row = vec![record.conversation_id.clone()];
        row.extend(record.items.iter().map(|item| item.value.to_string()));
        writer.write_record(&row).map_err(io_error(path))?;
    }
    writer.flush().map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Write the FMN format: `ID,question,score,sentence`, 42 rows per
/// conversation.
pub fn write_fmn(records: &[ResponseRecord], path: &Path) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_path(path).map_err(io_error(path))?;
    writer
        .write_record(["ID", "question", "score", "sentence"])
        .map_err(io_error(path))?;
    for record in records {
        for item in &record.items {
            writer
                .write_record([
                    record.conversation_id.as_str(),
                    &item.item_number.to_string(),
                    &item.value.to_string(),
                    &item.sentence,
                ])
                .map_err(io_error(path))?;
        }
    }
    writer.flush().map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Write the Sentence format: header `ID,S1..S42`, one row per
/// conversation.
pub fn write_sentence(records: &[ResponseRecord], path: &Path) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_path(path).map_err(io_error(path))?;
    let mut header = vec!["ID".to_string()];
    header.extend((1..=ITEM_COUNT).map(|n| format!("S{n}")));
    writer.write_record(&header).map_err(io_error(path))?;
    for record in records {
        let mut row = vec![record.conversation_id.clone()];
        row.extend(record.items.iter().map(|item| item.sentence.clone()));
        writer.write_record(&row).map_err(io_error(path))?;
    }
    writer.flush().map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, DatasetError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|error| DatasetError::Schema {
            path: path.display().to_string(),
            message: error.to_string(),
        })
}

fn parse_score(raw: &str, path: &Path, row: usize) -> Result<u8, DatasetError> {
    let value: i64 = raw.trim().parse().map_err(|_| DatasetError::Row {
        path: path.display().to_string(),
        row,
        message: format!("bad score {raw:?}"),
    })?;
    if !(1..=4).contains(&value) {
        return Err(DatasetError::Row {
            path: path.display().to_string(),
            row,
            message: format!("score {value} outside 1..=4"),
        });
    }
    Ok(value as u8)
}

pub fn read_base(path: &Path) -> Result<Vec<BaseRow>, DatasetError> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(io_error(path))?.clone();
    if headers.len() != ITEM_COUNT + 1 {
        return Err(DatasetError::Schema {
            path: path.display().to_string(),
            message: format!("expected 43 columns, got {}", headers.len()),
        });
    }
    let mut rows = Vec::new();
    for (index, result) in reader.records().enumerate() {
        let row_number = index + 2;
        let record = result.map_err(io_error(path))?;
        let id = record.get(0).unwrap_or("").to_string();
        let mut values = Vec::with_capacity(ITEM_COUNT);
        for column in 1..=ITEM_COUNT {
            values.push(parse_score(
                record.get(column).unwrap_or(""),
                path,
                row_number,
            )?);
        }
        rows.push(BaseRow { id, values });
    }
    Ok(rows)
}

pub fn read_fmn(path: &Path) -> Result<Vec<FmnRow>, DatasetError> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(io_error(path))?.clone();
    if headers.len() != 4 {
        return Err(DatasetError::Schema {
            path: path.display().to_string(),
            message: format!("expected 4 columns, got {}", headers.len()),
        });
    }
    let mut rows = Vec::new();
    for (index, result) in reader.records().enumerate() {
        let row_number = index + 2;
        let record = result.map_err(io_error(path))?;
        let question: u8 = record
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| DatasetError::Row {
                path: path.display().to_string(),
                row: row_number,
                message: format!("bad question number {:?}", record.get(1)),
            })?;
        rows.push(FmnRow {
            id: record.get(0).unwrap_or("").to_string(),
            question,
            score: parse_score(record.get(2).unwrap_or(""), path, row_number)?,
            sentence: record.get(3).unwrap_or("").to_string(),
        });
    }
    Ok(rows)
}

pub fn read_sentence(path: &Path) -> Result<Vec<SentenceRow>, DatasetError> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(io_error(path))?.clone();
    if headers.len() != ITEM_COUNT + 1 {
        return Err(DatasetError::Schema {
            path: path.display().to_string(),
            message: format!("expected 43 columns, got {}", headers.len()),
        });
    }
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(io_error(path))?;
        rows.push(SentenceRow {
            id: record.get(0).unwrap_or("").to_string(),
            sentences: (1..=ITEM_COUNT)
                .map(|column| record.get(column).unwrap_or("").to_string())
                .collect(),
        });
    }
    Ok(rows)
}

/// Reconstruct Base rows from FMN rows; the cross-format consistency
/// route.
pub fn base_from_fmn(rows: &[FmnRow]) -> Result<Vec<BaseRow>, DatasetError> {
    let mut order: Vec<String> = Vec::new();
    let mut by_id: BTreeMap<String, Vec<Option<u8>>> = BTreeMap::new();
    for row in rows {
        let entry = by_id.entry(row.id.clone()).or_insert_with(|| {
            order.push(row.id.clone());
            vec![None; ITEM_COUNT]
        });
        if !(1..=ITEM_COUNT as u8).contains(&row.question) {
            return Err(DatasetError::UnparseableId(format!(
                "{}: question {}",
                row.id, row.question
            )));
        }
        entry[row.question as usize - 1] = Some(row.score);
    }
    order
        .into_iter()
        .map(|id| {
            let values = by_id[&id]
                .iter()
                .enumerate()
                .map(|(column, slot)| {
                    slot.ok_or_else(|| DatasetError::BadRecord(
                        id.clone(),
                        format!("missing question {}", column + 1),
                    ))
                })
                .collect::<Result<Vec<u8>, _>>()?;
            Ok(BaseRow { id, values })
        })
        .collect()
}

/// Rebuild full response records from FMN rows. Conversation ids must
/// follow the grid encoding (gender-role-event-valence-iNNNNN).
pub fn records_from_fmn(
    rows: &[FmnRow],
    backend_tag: &str,
    timestamp: &str,
) -> Result<Vec<ResponseRecord>, DatasetError> {
    let mut order: Vec<String> = Vec::new();
    let mut by_id: BTreeMap<String, Vec<ResponseItem>> = BTreeMap::new();
    for row in rows {
        by_id
            .entry(row.id.clone())
            .or_insert_with(|| {
                order.push(row.id.clone());
                Vec::with_capacity(ITEM_COUNT)
            })
            .push(ResponseItem {
                item_number: row.question,
                value: row.score,
                sentence: row.sentence.clone(),
            });
    }
    order
        .into_iter()
        .map(|id| {
            let (condition, _) =
                parse_conversation_id(&id).ok_or_else(|| DatasetError::UnparseableId(id.clone()))?;
            ResponseRecord::new(
                id.clone(),
                condition,
                by_id.remove(&id).expect("id collected above"),
                backend_tag.to_string(),
                timestamp.to_string(),
            )
            .map_err(|error| DatasetError::BadRecord(id, error.to_string()))
        })
        .collect()
}

/// Group records into (gender, event, valence) cells, preserving input
/// order within each cell.
pub fn group_by_cell(
    records: &[ResponseRecord],
) -> BTreeMap<(Gender, Event, Valence), Vec<&ResponseRecord>> {
    let mut cells: BTreeMap<(Gender, Event, Valence), Vec<&ResponseRecord>> = BTreeMap::new();
    for record in records {
        cells
            .entry((
                record.condition.gender,
                record.condition.event,
                record.condition.valence,
            ))
            .or_default()
            .push(record);
    }
    cells
}

/// Write all three formats for every populated cell under `dir`,
/// returning the written paths.
pub fn write_run(dir: &Path, records: &[ResponseRecord]) -> Result<Vec<PathBuf>, DatasetError> {
    std::fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    for ((gender, event, valence), cell_records) in group_by_cell(records) {
        let owned: Vec<ResponseRecord> = cell_records.into_iter().cloned().collect();
        for format in OutputFormat::ALL {
            let path = dir.join(file_name(gender, event, valence, format));
            match format {
                OutputFormat::Base => write_base(&owned, &path)?,
                OutputFormat::Fmn => write_fmn(&owned, &path)?,
                OutputFormat::Sentence => write_sentence(&owned, &path)?,
            }
            written.push(path);
        }
    }
    Ok(written)
}

/// Load every FMN file under `dir` that follows the naming convention and
/// rebuild the records.
pub fn load_run(dir: &Path) -> Result<Vec<ResponseRecord>, DatasetError> {
    let mut records = Vec::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|source| DatasetError::Io {
            path: dir.display().to_string(),
            source,
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|path| {
            path.file_name()
                .and_then(|name| name.to_str())
                .map(|name| name.starts_with("csv_openai-") && name.ends_with("-fmn.csv"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    for path in paths {
        let rows = read_fmn(&path)?;
        records.extend(records_from_fmn(&rows, "loaded", "")?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ItemCatalog;
    use crate::gateway::{SyntheticRespondent, SyntheticRespondentConfig};
    use crate::lexi::Lexicon;
    use crate::prompts::{PromptFactory, Role};

    fn sample_records(n: usize) -> Vec<ResponseRecord> {
        let factory = PromptFactory::with_defaults(ItemCatalog::bundled());
        let respondent = SyntheticRespondent::new(
            SyntheticRespondentConfig::three_factor(19),
            Lexicon::bundled(),
            ItemCatalog::bundled(),
        );
        factory
            .grid(1)
            .unwrap()
            .iter()
            .take(n)
            .map(|spec| respondent.respond(spec))
            .collect()
    }

    #[test]
    fn naming_convention_is_exact() {
        assert_eq!(
            file_name(
                Gender::Female,
                Event::Publish,
                Valence::Neutral,
                OutputFormat::Fmn
            ),
            "csv_openai-female-publish-3-neutral-fmn.csv"
        );
        assert_eq!(
            file_name(
                Gender::Male,
                Event::Examination,
                Valence::Positive,
                OutputFormat::Base
            ),
            "csv_openai-male-examination-1-positive-base.csv"
        );
    }

    #[test]
    fn base_shape_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let records = sample_records(2);
        let path = dir.path().join("base.csv");
        write_base(&records, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), 43);
        assert_eq!(lines.count(), 2);

        let rows = read_base(&path).unwrap();
        assert_eq!(rows.len(), 2);
        for (row, record) in rows.iter().zip(&records) {
            assert_eq!(row.id, record.conversation_id);
            let values: Vec<u8> = record.items.iter().map(|item| item.value).collect();
            assert_eq!(row.values, values);
        }
    }

    #[test]
    fn fmn_has_42_rows_per_conversation() {
        let dir = tempfile::tempdir().unwrap();
        let records = sample_records(2);
        let path = dir.path().join("fmn.csv");
        write_fmn(&records, &path).unwrap();
        let rows = read_fmn(&path).unwrap();
        assert_eq!(rows.len(), 84);
    }

    #[test]
    fn sentence_round_trip_with_commas_and_quotes() {
        let dir = tempfile::tempdir().unwrap();
        let mut records = sample_records(1);
        records[0].items[0].sentence = "Deadlines, exams, and \"results\" pile up".into();
        let path = dir.path().join("sentence.csv");
        write_sentence(&records, &path).unwrap();
        let rows = read_sentence(&path).unwrap();
        assert_eq!(rows[0].sentences[0], records[0].items[0].sentence);
    }

    #[test]
    fn records_round_trip_through_fmn() {
        let dir = tempfile::tempdir().unwrap();
        let records = sample_records(3);
        let path = dir.path().join("fmn.csv");
        write_fmn(&records, &path).unwrap();
        let rebuilt = records_from_fmn(&read_fmn(&path).unwrap(), "t", "now").unwrap();
        assert_eq!(rebuilt.len(), records.len());
        for (new, old) in rebuilt.iter().zip(&records) {
            assert_eq!(new.conversation_id, old.conversation_id);
            assert_eq!(new.condition, old.condition);
            assert_eq!(new.items, old.items);
        }
    }

    #[test]
    fn base_reconstructed_from_fmn_matches_direct_base() {
        let dir = tempfile::tempdir().unwrap();
        let records = sample_records(4);
        let base_path = dir.path().join("base.csv");
        let fmn_path = dir.path().join("fmn.csv");
        write_base(&records, &base_path).unwrap();
        write_fmn(&records, &fmn_path).unwrap();
        let direct = read_base(&base_path).unwrap();
        let rebuilt = base_from_fmn(&read_fmn(&fmn_path).unwrap()).unwrap();
        assert_eq!(direct, rebuilt);
    }

    #[test]
    fn write_run_emits_three_files_per_cell_and_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        let records = sample_records(6); // first 6 grid specs: 2 cells x 3? depends on grid order
        let written = write_run(dir.path(), &records).unwrap();
        let cells = group_by_cell(&records).len();
        assert_eq!(written.len(), 3 * cells);
        for path in &written {
            let name = path.file_name().unwrap().to_str().unwrap();
            assert!(name.starts_with("csv_openai-"));
        }
        let loaded = load_run(dir.path()).unwrap();
        assert_eq!(loaded.len(), records.len());
        let mut expected: Vec<&str> = records
            .iter()
            .map(|record| record.conversation_id.as_str())
            .collect();
        expected.sort();
        let mut got: Vec<&str> = loaded
            .iter()
            .map(|record| record.conversation_id.as_str())
            .collect();
        got.sort();
        assert_eq!(expected, got);
        // Scores and condition survive the trip.
        let one = loaded
            .iter()
            .find(|r| r.conversation_id == records[0].conversation_id)
            .unwrap();
        assert_eq!(one.items, records[0].items);
        assert_eq!(one.condition.role, Role::PhdStudent);
    }

    #[test]
    fn read_base_rejects_out_of_range_scores() {
        let dir = tempfile::tempdir().unwrap();
        let records = sample_records(1);
        let path = dir.path().join("base.csv");
        write_base(&records, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let bad = text.replacen(",3,", ",7,", 1).replacen(",2,", ",7,", 1);
        std::fs::write(&path, bad).unwrap();
        assert!(matches!(
            read_base(&path),
            Err(DatasetError::Row { .. })
        ));
    }

    #[test]
    fn fmn_with_missing_question_fails_reconstruction() {
        let dir = tempfile::tempdir().unwrap();
        let records = sample_records(1);
        let path = dir.path().join("fmn.csv");
        write_fmn(&records, &path).unwrap();
        let mut rows = read_fmn(&path).unwrap();
        rows.remove(16);
        assert!(matches!(
            base_from_fmn(&rows),
            Err(DatasetError::BadRecord(_, _))
        ));
    }
}
