//! The DASS-42 instrument: item texts, subscale ground truth and score
//! aggregation.
//!
//! Item scores use the 1..4 scale, so each 14-item subscale total lies in
//! 14..=56. Item texts come from a bundled data file so an alternative
//! wording set can be swapped in; the item-to-subscale assignment is part
//! of the instrument and is validated on load.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of items in the instrument.
pub const ITEM_COUNT: usize = 42;
/// Items per subscale.
pub const SUBSCALE_SIZE: usize = 14;

/// Ground-truth item sets, one per subscale.
const DEPRESSION_ITEMS: [u8; 14] = [3, 5, 10, 13, 16, 17, 21, 24, 26, 31, 34, 37, 38, 42];
const ANXIETY_ITEMS: [u8; 14] = [2, 4, 7, 9, 15, 19, 20, 23, 25, 28, 30, 36, 40, 41];
const STRESS_ITEMS: [u8; 14] = [1, 6, 8, 11, 12, 14, 18, 22, 27, 29, 32, 33, 35, 39];

const BUNDLED_CATALOG: &str = include_str!("../data/dass42.csv");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("item number {0} is out of range 1..=42")]
    ItemOutOfRange(u8),
    #[error("score value {value} for item {item} is outside 1..=4")]
    ScoreOutOfRange { item: u8, value: u8 },
    #[error("expected exactly one score per item 1..=42: {0}")]
    BadScoreSet(String),
    #[error("catalog must contain exactly 42 items, got {0}")]
    WrongItemCount(usize),
    #[error("catalog item numbers are not a permutation of 1..=42 (problem near item {0})")]
    NotAPermutation(u8),
    #[error("item {item} is assigned to {found} but the instrument places it in {expected}")]
    SubscaleMismatch {
        item: u8,
        found: Subscale,
        expected: Subscale,
    },
    #[error("item {0} has an empty text")]
    EmptyText(u8),
    #[error("unknown subscale label {0:?}")]
    UnknownSubscale(String),
    #[error("failed to read catalog file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("catalog file {path}: {message}")]
    Parse { path: String, message: String },
}

/// The three DASS subscales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subscale {
    Depression,
    Anxiety,
    Stress,
}

impl Subscale {
    pub const ALL: [Subscale; 3] = [Subscale::Depression, Subscale::Anxiety, Subscale::Stress];

    /// Position in [`Subscale::ALL`].
    pub fn index(self) -> usize {
        match self {
            Subscale::Depression => 0,
            Subscale::Anxiety => 1,
            Subscale::Stress => 2,
        }
    }

    /// The 14 item numbers belonging to this subscale.
    pub fn items(self) -> &'static [u8; 14] {
        match self {
            Subscale::Depression => &DEPRESSION_ITEMS,
            Subscale::Anxiety => &ANXIETY_ITEMS,
            Subscale::Stress => &STRESS_ITEMS,
        }
    }
}

impl fmt::Display for Subscale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Subscale::Depression => "Depression",
            Subscale::Anxiety => "Anxiety",
            Subscale::Stress => "Stress",
        };
        f.write_str(name)
    }
}

impl FromStr for Subscale {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "depression" | "d" => Ok(Subscale::Depression),
            "anxiety" | "a" => Ok(Subscale::Anxiety),
            "stress" | "s" => Ok(Subscale::Stress),
            other => Err(CatalogError::UnknownSubscale(other.to_string())),
        }
    }
}

/// Ground-truth subscale of an item number.
pub fn subscale_of(item_number: u8) -> Result<Subscale, CatalogError> {
    if DEPRESSION_ITEMS.contains(&item_number) {
        Ok(Subscale::Depression)
    } else if ANXIETY_ITEMS.contains(&item_number) {
        Ok(Subscale::Anxiety)
    } else if STRESS_ITEMS.contains(&item_number) {
        Ok(Subscale::Stress)
    } else {
        Err(CatalogError::ItemOutOfRange(item_number))
    }
}

/// One item of the instrument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub item_number: u8,
    pub text: String,
    pub subscale: Subscale,
}

/// The validated 42-item instrument.
#[derive(Debug, Clone)]
pub struct ItemCatalog {
    items: Vec<Item>,
}

impl ItemCatalog {
    /// The catalog bundled with the crate.
    pub fn bundled() -> ItemCatalog {
        Self::from_reader(BUNDLED_CATALOG.as_bytes(), "<bundled>")
            .expect("bundled catalog is valid")
    }

    /// Load a catalog from a CSV file with header `item_number,text,subscale`.
    pub fn from_path(path: &Path) -> Result<ItemCatalog, CatalogError> {
        let file = std::fs::File::open(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(file, &path.display().to_string())
    }

    fn from_reader<R: std::io::Read>(reader: R, origin: &str) -> Result<ItemCatalog, CatalogError> {
        let mut csv_reader = csv::Reader::from_reader(reader);
        let headers = csv_reader
            .headers()
            .map_err(|e| CatalogError::Parse {
                path: origin.to_string(),
                message: e.to_string(),
            })?
            .clone();
        let expected = ["item_number", "text", "subscale"];
        if headers.iter().map(str::trim).collect::<Vec<_>>() != expected {
            return Err(CatalogError::Parse {
                path: origin.to_string(),
                message: format!("expected header `item_number,text,subscale`, got {headers:?}"),
            });
        }
        let mut items = Vec::with_capacity(ITEM_COUNT);
        for row in csv_reader.records() {
            let row = row.map_err(|e| CatalogError::Parse {
                path: origin.to_string(),
                message: e.to_string(),
            })?;
            let number: u8 = row
                .get(0)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| CatalogError::Parse {
                    path: origin.to_string(),
                    message: format!("bad item_number {:?}", row.get(0)),
                })?;
            let text = row.get(1).unwrap_or("").trim().to_string();
            let subscale: Subscale = row.get(2).unwrap_or("").parse()?;
            items.push(Item {
                item_number: number,
                text,
                subscale,
            });
        }
        Self::new(items)
    }

    /// Validate and build a catalog from items.
    pub fn new(mut items: Vec<Item>) -> Result<ItemCatalog, CatalogError> {
        if items.len() != ITEM_COUNT {
            return Err(CatalogError::WrongItemCount(items.len()));
        }
        items.sort_by_key(|item| item.item_number);
        for (index, item) in items.iter().enumerate() {
            let expected_number = (index + 1) as u8;
            if item.item_number != expected_number {
                return Err(CatalogError::NotAPermutation(item.item_number));
            }
            if item.text.is_empty() {
                return Err(CatalogError::EmptyText(item.item_number));
            }
            let expected = subscale_of(item.item_number)?;
            if item.subscale != expected {
                return Err(CatalogError::SubscaleMismatch {
                    item: item.item_number,
                    found: item.subscale,
                    expected,
                });
            }
        }
        Ok(ItemCatalog { items })
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    /// Item by number (1-based).
    pub fn item(&self, item_number: u8) -> Result<&Item, CatalogError> {
        if (1..=ITEM_COUNT as u8).contains(&item_number) {
            Ok(&self.items[item_number as usize - 1])
        } else {
            Err(CatalogError::ItemOutOfRange(item_number))
        }
    }
}

/// A single validated item response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemScore {
    item_number: u8,
    value: u8,
}

impl ItemScore {
    pub fn new(item_number: u8, value: u8) -> Result<ItemScore, CatalogError> {
        if !(1..=ITEM_COUNT as u8).contains(&item_number) {
            return Err(CatalogError::ItemOutOfRange(item_number));
        }
        if !(1..=4).contains(&value) {
            return Err(CatalogError::ScoreOutOfRange {
                item: item_number,
                value,
            });
        }
        Ok(ItemScore { item_number, value })
    }

    pub fn item_number(self) -> u8 {
        self.item_number
    }

    pub fn value(self) -> u8 {
        self.value
    }
}

/// Sum of the 14 member item scores of one subscale for one conversation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubscaleTotal {
    pub subscale: Subscale,
    pub total: u16,
    pub conversation_id: String,
}

/// Check that `scores` holds exactly one score per item 1..=42.
fn validate_complete(scores: &[ItemScore]) -> Result<BTreeMap<u8, u8>, CatalogError> {
    let mut by_item = BTreeMap::new();
    for score in scores {
        if by_item.insert(score.item_number, score.value).is_some() {
            return Err(CatalogError::BadScoreSet(format!(
                "duplicate item {}",
                score.item_number
            )));
        }
    }
    if by_item.len() != ITEM_COUNT {
        let missing: Vec<u8> = (1..=ITEM_COUNT as u8)
            .filter(|n| !by_item.contains_key(n))
            .collect();
        return Err(CatalogError::BadScoreSet(format!(
            "missing items {missing:?}"
        )));
    }
    Ok(by_item)
}

/// Sum the 14 member scores of `subscale` over a complete 42-item response.
pub fn aggregate_subscale(
    scores: &[ItemScore],
    subscale: Subscale,
    conversation_id: &str,
) -> Result<SubscaleTotal, CatalogError> {
    let by_item = validate_complete(scores)?;
    let total: u16 = subscale
        .items()
        .iter()
        .map(|item| u16::from(by_item[item]))
        .sum();
    debug_assert!((14..=56).contains(&total));
    Ok(SubscaleTotal {
        subscale,
        total,
        conversation_id: conversation_id.to_string(),
    })
}
