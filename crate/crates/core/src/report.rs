//! Plot-ready table emission: long-format CSVs plus a JSON summary.
//!
//! Reports are data tables, not images; every bundle carries the run
//! configuration used to produce it so analyses can be reproduced
//! byte-for-byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::catalog::Subscale;
use crate::lexi::{CellStatus, CorrelationHeatmap};
use crate::net::{EgaResult, StabilityReport};
use crate::stats::{Histogram, KWResult};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ReportError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| ReportError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    csv::Writer::from_path(path).map_err(|source| ReportError::Csv {
        path: path.display().to_string(),
        source,
    })
}

fn finish(
    mut writer: csv::Writer<std::fs::File>,
    path: &Path,
) -> Result<PathBuf, ReportError> {
    writer.flush().map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path.to_path_buf())
}

fn fmt_float(value: f64) -> String {
    format!("{value:.10}")
}

/// Node table: item, community, membership of the ground-truth subscale,
/// and bootstrap stability when available.
pub fn write_node_table(
    path: &Path,
    ega: &EgaResult,
    stability: Option<&StabilityReport>,
) -> Result<PathBuf, ReportError> {
    let mut writer = csv_writer(path)?;
    let mut record = |row: &[String]| -> Result<(), ReportError> {
        writer.write_record(row).map_err(|source| ReportError::Csv {
            path: path.display().to_string(),
            source,
        })
    };
    record(&[
        "item".into(),
        "community".into(),
        "subscale".into(),
        "stability".into(),
    ])?;
    let truth = crate::net::subscale_truth();
    for (&item, &community) in &ega.fit.partition.assignment {
        let stability_value = stability
            .and_then(|report| report.stability_of(item))
            .map(fmt_float)
            .unwrap_or_default();
        record(&[
            item.to_string(),
            community.to_string(),
            truth
                .get(&item)
                .map(|s| s.to_string())
                .unwrap_or_default(),
            stability_value,
        ])?;
    }
    finish(writer, path)
}

/// Edge table of the signed filtered network.
pub fn write_edge_table(path: &Path, ega: &EgaResult) -> Result<PathBuf, ReportError> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record(["item_i", "item_j", "weight"])
        .map_err(|source| ReportError::Csv {
            path: path.display().to_string(),
            source,
        })?;
    let items = &ega.fit.network.items;
    for edge in &ega.fit.network.edges {
        writer
            .write_record([
                items[edge.i].to_string(),
                items[edge.j].to_string(),
                fmt_float(edge.weight),
            ])
            .map_err(|source| ReportError::Csv {
                path: path.display().to_string(),
                source,
            })?;
    }
    finish(writer, path)
}

/// Purity rows across personas (long format).
pub fn write_purity_table(
    path: &Path,
    rows: &BTreeMap<String, &EgaResult>,
) -> Result<PathBuf, ReportError> {
    let mut writer = csv_writer(path)?;
    let mut record = |row: &[String]| -> Result<(), ReportError> {
        writer.write_record(row).map_err(|source| ReportError::Csv {
            path: path.display().to_string(),
            source,
        })
    };
    record(&[
        "persona".into(),
        "communities".into(),
        "overall_purity".into(),
        "n_items".into(),
        "modularity".into(),
        "lambda".into(),
    ])?;
    for (persona, ega) in rows {
        record(&[
            persona.clone(),
            ega.fit.partition.k.to_string(),
            fmt_float(ega.purity.overall),
            ega.purity.n.to_string(),
            fmt_float(ega.fit.modularity),
            ega.fit.lambda.map(fmt_float).unwrap_or_default(),
        ])?;
    }
    finish(writer, path)
}

/// One Kruskal-Wallis table row.
#[derive(Debug, Clone, Serialize)]
pub struct KwRow {
    pub persona: String,
    pub subscale: Subscale,
    pub comparison: String,
    pub h: f64,
    pub df: usize,
    pub p: f64,
    pub group_sizes: Vec<usize>,
    pub group_medians: Vec<f64>,
    pub group_means: Vec<f64>,
}

impl KwRow {
    pub fn from_result(
        persona: String,
        subscale: Subscale,
        comparison: String,
        result: &KWResult,
        group_means: Vec<f64>,
    ) -> KwRow {
        KwRow {
            persona,
            subscale,
            comparison,
            h: result.h,
            df: result.df,
            p: result.p,
            group_sizes: result.group_sizes.clone(),
            group_medians: result.group_medians.clone(),
            group_means,
        }
    }
}

pub fn write_kw_table(path: &Path, rows: &[KwRow]) -> Result<PathBuf, ReportError> {
    let mut writer = csv_writer(path)?;
    let mut record = |row: &[String]| -> Result<(), ReportError> {
        writer.write_record(row).map_err(|source| ReportError::Csv {
            path: path.display().to_string(),
            source,
        })
    };
    record(&[
        "persona".into(),
        "subscale".into(),
        "comparison".into(),
        "h".into(),
        "df".into(),
        "p".into(),
        "group_sizes".into(),
        "group_medians".into(),
        "group_means".into(),
    ])?;
    let join = |values: &[f64]| {
        values
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(";")
    };
    for row in rows {
        record(&[
            row.persona.clone(),
            row.subscale.to_string(),
            row.comparison.clone(),
            fmt_float(row.h),
            row.df.to_string(),
            format!("{:.6e}", row.p),
            row.group_sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            join(&row.group_medians),
            join(&row.group_means),
        ])?;
    }
    finish(writer, path)
}

/// Histogram rows in long format.
pub fn write_histogram_table(
    path: &Path,
    rows: &[(String, Subscale, Histogram)],
) -> Result<PathBuf, ReportError> {
    let mut writer = csv_writer(path)?;
    let mut record = |row: &[String]| -> Result<(), ReportError> {
        writer.write_record(row).map_err(|source| ReportError::Csv {
            path: path.display().to_string(),
            source,
        })
    };
    record(&[
        "group".into(),
        "subscale".into(),
        "bin_left_open".into(),
        "bin_right_closed".into(),
        "count".into(),
    ])?;
    for (group, subscale, histogram) in rows {
        for (index, &count) in histogram.counts.iter().enumerate() {
            record(&[
                group.clone(),
                subscale.to_string(),
                format!("{}", histogram.edges[index]),
                format!("{}", histogram.edges[index + 1]),
                count.to_string(),
            ])?;
        }
        if histogram.underflow > 0 {
            record(&[
                group.clone(),
                subscale.to_string(),
                "-inf".into(),
                format!("{}", histogram.edges[0]),
                histogram.underflow.to_string(),
            ])?;
        }
        if histogram.overflow > 0 {
            record(&[
                group.clone(),
                subscale.to_string(),
                format!("{}", histogram.edges[histogram.edges.len() - 1]),
                "+inf".into(),
                histogram.overflow.to_string(),
            ])?;
        }
    }
    finish(writer, path)
}

/// Heatmap cells in long format: persona, subscale, dimension, r, p, n,
/// significant, status.
pub fn write_heatmap_table(
    path: &Path,
    heatmap: &CorrelationHeatmap,
) -> Result<PathBuf, ReportError> {
    let mut writer = csv_writer(path)?;
    let mut record = |row: &[String]| -> Result<(), ReportError> {
        writer.write_record(row).map_err(|source| ReportError::Csv {
            path: path.display().to_string(),
            source,
        })
    };
    record(&[
        "persona".into(),
        "subscale".into(),
        "dimension".into(),
        "r".into(),
        "p".into(),
        "n".into(),
        "significant".into(),
        "status".into(),
    ])?;
    for row in &heatmap.rows {
        for cell in &row.cells {
            record(&[
                row.persona.clone(),
                cell.subscale.to_string(),
                cell.dimension.to_string(),
                cell.r.map(fmt_float).unwrap_or_default(),
                cell.p.map(|p| format!("{p:.6e}")).unwrap_or_default(),
                cell.n.to_string(),
                cell.significant.to_string(),
                match cell.status {
                    CellStatus::Ok => "ok",
                    CellStatus::Insufficient => "insufficient",
                    CellStatus::Degenerate => "degenerate",
                }
                .to_string(),
            ])?;
        }
    }
    finish(writer, path)
}

/// Write any serializable value as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, ReportError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| ReportError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text.as_bytes()).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ItemCatalog;
    use crate::gateway::{SyntheticRespondent, SyntheticRespondentConfig};
    use crate::lexi::{heatmap, HeatmapConfig, Lexicon};
    use crate::net::{ega, EgaConfig, FilterChoice, ItemMatrix};
    use crate::prompts::PromptFactory;
    use crate::stats::{histogram, kruskal_wallis};

    fn small_ega() -> EgaResult {
        let factory = PromptFactory::with_defaults(ItemCatalog::bundled());
        let respondent = SyntheticRespondent::new(
            SyntheticRespondentConfig::three_factor(3),
            Lexicon::bundled(),
            ItemCatalog::bundled(),
        );
        let records: Vec<_> = factory
            .grid(2)
            .unwrap()
            .iter()
            .map(|spec| respondent.respond(spec))
            .collect();
        let data = ItemMatrix::from_records(&records);
        ega(
            &data,
            &EgaConfig {
                filter: FilterChoice::Glasso {
                    gamma: 0.5,
                    grid_points: 20,
                },
                ..EgaConfig::default()
            },
            Some((5, 9)),
        )
        .unwrap()
    }

    #[test]
    fn tables_are_written_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let result = small_ega();

        let nodes = dir.path().join("nodes.csv");
        write_node_table(&nodes, &result, result.stability.as_ref()).unwrap();
        let text = std::fs::read_to_string(&nodes).unwrap();
        assert_eq!(text.lines().count(), 43); // header + 42 items
        assert!(text.starts_with("item,community,subscale,stability"));

        let edges = dir.path().join("edges.csv");
        write_edge_table(&edges, &result).unwrap();
        let edge_lines = std::fs::read_to_string(&edges).unwrap();
        assert_eq!(
            edge_lines.lines().count(),
            result.fit.network.edge_count() + 1
        );

        let mut rows = BTreeMap::new();
        rows.insert("male_phd".to_string(), &result);
        let purity_path = dir.path().join("purity.csv");
        write_purity_table(&purity_path, &rows).unwrap();

        // Rewriting produces identical bytes.
        let before = std::fs::read(&nodes).unwrap();
        write_node_table(&nodes, &result, result.stability.as_ref()).unwrap();
        assert_eq!(before, std::fs::read(&nodes).unwrap());
    }

    #[test]
    fn kw_and_histogram_tables() {
        let dir = tempfile::tempdir().unwrap();
        let result = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let row = KwRow::from_result(
            "male_phd_publish".into(),
            Subscale::Stress,
            "positive_vs_negative".into(),
            &result,
            vec![2.0, 5.0],
        );
        let path = dir.path().join("kw.csv");
        write_kw_table(&path, &[row]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("male_phd_publish,Stress,positive_vs_negative"));

        let hist = histogram(&[14.0, 15.0, 16.0, 60.0], &[13.0, 20.0, 30.0]).unwrap();
        let hist_path = dir.path().join("hist.csv");
        write_histogram_table(
            &hist_path,
            &[("neutral".into(), Subscale::Depression, hist)],
        )
        .unwrap();
        let text = std::fs::read_to_string(&hist_path).unwrap();
        assert!(text.contains("neutral,Depression,13,20,3"));
        assert!(text.contains("+inf"));
    }

    #[test]
    fn heatmap_table_emits_all_cells() {
        let dir = tempfile::tempdir().unwrap();
        let factory = PromptFactory::with_defaults(ItemCatalog::bundled());
        let respondent = SyntheticRespondent::new(
            SyntheticRespondentConfig::three_factor(5),
            Lexicon::bundled(),
            ItemCatalog::bundled(),
        );
        let records: Vec<_> = factory
            .grid(3)
            .unwrap()
            .iter()
            .map(|spec| respondent.respond(spec))
            .collect();
        let map = heatmap(&records, &Lexicon::bundled(), &HeatmapConfig::default());
        let path = dir.path().join("heatmap.csv");
        write_heatmap_table(&path, &map).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // 10 personas x 3 subscales x 9 dimensions + header.
        assert_eq!(text.lines().count(), 271);
    }
}
