//! Human comparison data ingestion with a configurable column schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::catalog::ITEM_COUNT;

/// Column mapping for a human responses file. The published
/// crowdsourced export uses tab-separated `Q1A..Q42A` answer columns;
/// plain `Q1..Q42` CSV is the default.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HumanSchema {
    /// Answer column name pattern; `{n}` is replaced by the item number.
    pub answer_column_pattern: String,
    pub gender_column: String,
    pub male_code: String,
    pub female_code: String,
    /// Field delimiter as a single character.
    pub delimiter: char,
}

impl Default for HumanSchema {
    fn default() -> Self {
        HumanSchema {
            answer_column_pattern: "Q{n}".into(),
            gender_column: "gender".into(),
            male_code: "1".into(),
            female_code: "2".into(),
            delimiter: ',',
        }
    }
}

impl HumanSchema {
    /// Preset for the public Openpsychometrics export.
    pub fn openpsychometrics() -> HumanSchema {
        HumanSchema {
            answer_column_pattern: "Q{n}A".into(),
            delimiter: '\t',
            ..HumanSchema::default()
        }
    }

    pub fn from_path(path: &Path) -> Result<HumanSchema, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|error| DatasetError::Schema {
            path: path.display().to_string(),
            message: error.to_string(),
        })
    }

    fn answer_column(&self, item: usize) -> String {
        self.answer_column_pattern.replace("{n}", &item.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanGender {
    Male,
    Female,
    Other,
}

#[derive(Debug, Clone)]
pub struct HumanRespondent {
    pub gender: HumanGender,
    /// One value per item 1..=42, each in 1..=4.
    pub values: Vec<u8>,
}

/// Validated human dataset. `total_rows` counts data rows before the
/// validity filter; rows with missing or out-of-range answers are
/// dropped and counted.
#[derive(Debug, Clone)]
pub struct HumanDataset {
    pub respondents: Vec<HumanRespondent>,
    pub total_rows: usize,
    pub dropped: usize,
}

impl HumanDataset {
    pub fn len(&self) -> usize {
        self.respondents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.respondents.is_empty()
    }

    /// Rows of one gender as an item-value matrix.
    pub fn matrix_for(&self, gender: HumanGender) -> Vec<Vec<f64>> {
        self.respondents
            .iter()
            .filter(|respondent| respondent.gender == gender)
            .map(|respondent| respondent.values.iter().map(|&v| f64::from(v)).collect())
            .collect()
    }
}

/// Read a human responses file per the schema. The header must contain
/// all 42 answer columns and the gender column.
pub fn read_human(path: &Path, schema: &HumanSchema) -> Result<HumanDataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(schema.delimiter as u8)
        .flexible(true)
        .from_path(path)
        .map_err(|error| DatasetError::Schema {
            path: path.display().to_string(),
            message: error.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|error| DatasetError::Schema {
            path: path.display().to_string(),
            message: error.to_string(),
        })?
        .clone();
    let find = |name: &str| headers.iter().position(|header| header.trim() == name);
    let mut answer_columns = Vec::with_capacity(ITEM_COUNT);
    for item in 1..=ITEM_COUNT {
        let column_name = schema.answer_column(item);
        let column = find(&column_name).ok_or_else(|| DatasetError::Schema {
            path: path.display().to_string(),
            message: format!("missing answer column {column_name:?}"),
        })?;
        answer_columns.push(column);
    }
    let gender_column = find(&schema.gender_column).ok_or_else(|| DatasetError::Schema {
        path: path.display().to_string(),
        message: format!("missing gender column {:?}", schema.gender_column),
    })?;

    let mut respondents = Vec::new();
    let mut total_rows = 0usize;
    let mut dropped = 0usize;
    for result in reader.records() {
        let record = result.map_err(|error| DatasetError::Schema {
            path: path.display().to_string(),
            message: error.to_string(),
        })?;
        total_rows += 1;
        let mut values = Vec::with_capacity(ITEM_COUNT);
        let mut valid = true;
        for &column in &answer_columns {
            match record.get(column).map(str::trim).and_then(|raw| raw.parse::<i64>().ok()) {
                Some(value) if (1..=4).contains(&value) => values.push(value as u8),
                _ => {
                    valid = false;
                    break;
                }
            }
        }
        if !valid {
            dropped += 1;
            continue;
        }
        let gender_raw = record.get(gender_column).unwrap_or("").trim();
        let gender = if gender_raw == schema.male_code {
            HumanGender::Male
        } else if gender_raw == schema.female_code {
            HumanGender::Female
        } else {
            HumanGender::Other
        };
        respondents.push(HumanRespondent { gender, values });
    }
    Ok(HumanDataset {
        respondents,
        total_rows,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut file = std::fs::File::create(&path).unwrap();
        file.write_all(text.as_bytes()).unwrap();
        path
    }

    fn toy_csv(rows: &[(&str, u8)]) -> String {
        let mut header: Vec<String> = (1..=42).map(|n| format!("Q{n}")).collect();
        header.push("gender".into());
        let mut text = header.join(",");
        text.push('\n');
        for (gender, value) in rows {
            let mut row: Vec<String> = (0..42).map(|_| value.to_string()).collect();
            row.push((*gender).to_string());
            text.push_str(&row.join(","));
            text.push('\n');
        }
        text
    }

    #[test]
    fn toy_file_loads_all_valid_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "human.csv",
            &toy_csv(&[("1", 2), ("2", 3), ("1", 1), ("2", 4), ("3", 2)]),
        );
        let data = read_human(&path, &HumanSchema::default()).unwrap();
        assert_eq!(data.len(), 5);
        assert_eq!(data.total_rows, 5);
        assert_eq!(data.dropped, 0);
        assert_eq!(data.matrix_for(HumanGender::Male).len(), 2);
        assert_eq!(data.matrix_for(HumanGender::Female).len(), 2);
    }

    #[test]
    fn out_of_range_rows_are_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = toy_csv(&[("1", 2), ("2", 3), ("1", 1), ("2", 4)]);
        // Append a row with a zero answer.
        let mut bad: Vec<String> = (0..42).map(|_| "0".to_string()).collect();
        bad.push("1".into());
        text.push_str(&bad.join(","));
        text.push('\n');
        let path = write_file(&dir, "human.csv", &text);
        let data = read_human(&path, &HumanSchema::default()).unwrap();
        assert_eq!(data.len(), 4);
        assert_eq!(data.total_rows, 5);
        assert_eq!(data.dropped, 1);
    }

    #[test]
    fn missing_answer_column_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "human.csv", "Q1,gender\n1,1\n");
        assert!(matches!(
            read_human(&path, &HumanSchema::default()),
            Err(DatasetError::Schema { .. })
        ));
    }

    #[test]
    fn openpsychometrics_schema_reads_tab_separated_qna() {
        let dir = tempfile::tempdir().unwrap();
        let mut header: Vec<String> = (1..=42).map(|n| format!("Q{n}A")).collect();
        header.push("gender".into());
        let mut text = header.join("\t");
        text.push('\n');
        let mut row: Vec<String> = (0..42).map(|_| "3".to_string()).collect();
        row.push("2".into());
        text.push_str(&row.join("\t"));
        text.push('\n');
        let path = write_file(&dir, "human.tsv", &text);
        let data = read_human(&path, &HumanSchema::openpsychometrics()).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data.respondents[0].gender, HumanGender::Female);
    }

    #[test]
    fn schema_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let schema = HumanSchema::openpsychometrics();
        let path = dir.path().join("schema.json");
        std::fs::write(&path, serde_json::to_string(&schema).unwrap()).unwrap();
        let loaded = HumanSchema::from_path(&path).unwrap();
        assert_eq!(loaded.answer_column_pattern, "Q{n}A");
        assert_eq!(loaded.delimiter, '\t');
    }
}
