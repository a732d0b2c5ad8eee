//! Reply parsing for the `<item_number>: <score 1-4> | <sentence>` line
//! contract.

use super::GatewayError;
use crate::catalog::ITEM_COUNT;

/// Parse a raw reply into 42 (item_number, value, sentence) triples.
///
/// Lines that do not look like item lines (no leading integer before a
/// colon) are ignored, so chat preambles are harmless. Item order in the
/// reply is free; the result is sorted by item number. Duplicate items,
/// out-of-range item numbers or scores, and missing items are rejected.
pub fn parse_reply(raw: &str) -> Result<Vec<(u8, u8, String)>, GatewayError> {
    let mut triples: Vec<Option<(u8, String)>> = vec![None; ITEM_COUNT + 1];
    let mut found = 0usize;
    for line in raw.lines() {
        let line = line.trim();
        let Some((head, rest)) = line.split_once(':') else {
            continue;
        };
        let head = head.trim().trim_start_matches(['#', '*', '-', ' ']);
        let Ok(item_number) = head.parse::<i64>() else {
            continue;
        };
        if !(1..=ITEM_COUNT as i64).contains(&item_number) {
            return Err(GatewayError::ItemOutOfRange(item_number));
        }
        let item_number = item_number as u8;
        let Some((score_part, sentence_part)) = rest.split_once('|') else {
            return Err(GatewayError::EmptySentence(item_number));
        };
        let score: i64 = score_part
            .trim()
            .parse()
            .map_err(|_| GatewayError::RangeError {
                item: item_number,
                value: i64::MIN,
            })?;
        if !(1..=4).contains(&score) {
            return Err(GatewayError::RangeError {
                item: item_number,
                value: score,
            });
        }
        let sentence = sentence_part.trim().to_string();
        if sentence.is_empty() {
            return Err(GatewayError::EmptySentence(item_number));
        }
        if triples[item_number as usize].is_some() {
            return Err(GatewayError::DuplicateItem(item_number));
        }
        triples[item_number as usize] = Some((score as u8, sentence));
        found += 1;
    }
    if found < ITEM_COUNT {
        let missing = (1..=ITEM_COUNT as u8)
            .filter(|&n| triples[n as usize].is_none())
            .collect();
        return Err(GatewayError::IncompleteReply { missing });
    }
    Ok(triples
        .into_iter()
        .enumerate()
        .filter_map(|(n, slot)| slot.map(|(value, sentence)| (n as u8, value, sentence)))
        .collect())
}
