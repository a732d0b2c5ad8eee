//! Item-by-item correlation estimation from response matrices.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{CorrelationMatrix, NetError};
use crate::catalog::ITEM_COUNT;
use crate::gateway::ResponseRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

/// N x p observation matrix with item labels per column.
#[derive(Debug, Clone)]
pub struct ItemMatrix {
    pub items: Vec<u8>,
    /// Row-major observations: data[row][column].
    pub rows: Vec<Vec<f64>>,
}

impl ItemMatrix {
    pub fn new(rows: Vec<Vec<f64>>, items: Vec<u8>) -> Result<ItemMatrix, NetError> {
        for row in &rows {
            if row.len() != items.len() {
                return Err(NetError::ShapeMismatch(format!(
                    "row has {} values for {} items",
                    row.len(),
                    items.len()
                )));
            }
        }
        Ok(ItemMatrix { items, rows })
    }

    /// One row per record, one column per item 1..=42.
    pub fn from_records(records: &[ResponseRecord]) -> ItemMatrix {
        let items: Vec<u8> = (1..=ITEM_COUNT as u8).collect();
        let rows = records
            .iter()
            .map(|record| {
                record
                    .items
                    .iter()
                    .map(|item| f64::from(item.value))
                    .collect()
            })
            .collect();
        ItemMatrix { items, rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.items.len()
    }

    fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|row| row[j]).collect()
    }
}

/// Mid-ranks of one column.
fn rank_column(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end) as f64 / 2.0 + 1.0;
        for &index in &order[start..=end] {
            ranks[index] = avg;
        }
        start = end + 1;
    }
    ranks
}

/// Correlation matrix over the item columns. Requires at least 3 rows;
/// any zero-variance column is rejected, naming the item.
pub fn correlate(
    data: &ItemMatrix,
    method: CorrelationMethod,
) -> Result<CorrelationMatrix, NetError> {
    let n = data.n();
    let p = data.p();
    if n < 3 {
        return Err(NetError::TooFewRows { need: 3, got: n });
    }

    // Column-wise centered (and possibly rank-transformed) values.
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let raw = data.column(j);
        let values = match method {
            CorrelationMethod::Pearson => raw,
            CorrelationMethod::Spearman => rank_column(&raw),
        };
        let mean = values.iter().sum::<f64>() / n as f64;
        let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
        columns.push(centered);
    }
    let mut norms = Vec::with_capacity(p);
    for (j, column) in columns.iter().enumerate() {
        let ss: f64 = column.iter().map(|v| v * v).sum();
        if ss == 0.0 {
            return Err(NetError::DegenerateColumn(data.items[j]));
        }
        norms.push(ss.sqrt());
    }

    let mut matrix = DMatrix::zeros(p, p);
    for i in 0..p {
        matrix[(i, i)] = 1.0;
        for j in 0..i {
            let dot: f64 = columns[i]
                .iter()
                .zip(&columns[j])
                .map(|(a, b)| a * b)
                .sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            matrix[(i, j)] = r;
            matrix[(j, i)] = r;
        }
    }
    CorrelationMatrix::new(matrix, n, method, data.items.clone())
}
