//! `analyze`: turn dataset files into the plot-ready report bundle
//! (EGA node/edge tables per persona, purity, stability, Kruskal-Wallis,
//! histograms, lexicon heatmap, JSON summary).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dasslab_core::catalog::Subscale;
use dasslab_core::dataset::{self, HumanGender, HumanSchema};
use dasslab_core::gateway::ResponseRecord;
use dasslab_core::lexi::{heatmap, HeatmapConfig};
use dasslab_core::net::{ega, EgaResult, ItemMatrix};
use dasslab_core::prompts::{Event, Gender, Role, Valence};
use dasslab_core::report;
use dasslab_core::stats::{histogram, kruskal_wallis};

use crate::config::RunConfig;
use crate::AppError;

pub fn run(
    config: &RunConfig,
    data_dir: Option<PathBuf>,
    human: Option<PathBuf>,
    human_schema: Option<String>,
    force: bool,
) -> Result<(), AppError> {
    let data_dir = data_dir.unwrap_or_else(|| config.run.out_dir.join("data"));
    let analysis_dir = config.run.out_dir.join("analysis");
    if analysis_dir.exists() {
        let occupied = std::fs::read_dir(&analysis_dir)
            .map(|mut entries| entries.next().is_some())
            .unwrap_or(false);
        if occupied && !force {
            return Err(AppError::Config(format!(
                "analysis directory {} is not empty; pass --force to overwrite",
                analysis_dir.display()
            )));
        }
    }
    super::ensure_dir(&analysis_dir)?;

    let records = dataset::load_run(&data_dir)
        .map_err(|error| AppError::Data(error.to_string()))?;
    if records.is_empty() {
        return Err(AppError::Data(format!(
            "no dataset files found in {} (expected csv_openai-*-fmn.csv)",
            data_dir.display()
        )));
    }

    let ega_config = config
        .ega_config()
        .map_err(|error| AppError::Config(error.to_string()))?;
    let bootstrap = (config.analysis.bootstrap_reps > 0)
        .then_some((config.analysis.bootstrap_reps, config.run.seed));

    // Per-persona (gender x role) network analysis.
    let mut persona_results: BTreeMap<String, EgaResult> = BTreeMap::new();
    for &gender in Gender::ALL {
        for &role in Role::ALL {
            let subset: Vec<ResponseRecord> = records
                .iter()
                .filter(|record| {
                    record.condition.gender == gender && record.condition.role == role
                })
                .cloned()
                .collect();
            if subset.len() < 3 {
                continue;
            }
            let data = ItemMatrix::from_records(&subset);
            let result = ega(&data, &ega_config, bootstrap)
                .map_err(|error| AppError::Data(error.to_string()))?;
            persona_results.insert(format!("{gender}_{role}"), result);
        }
    }

    // Optional human comparison data, split by gender.
    if let Some(human_path) = &human {
        let schema = resolve_schema(human_schema.as_deref())?;
        let human_data = dataset::read_human(human_path, &schema)
            .map_err(|error| AppError::Data(error.to_string()))?;
        println!(
            "human data: {} rows read, {} kept, {} dropped",
            human_data.total_rows,
            human_data.len(),
            human_data.dropped
        );
        for (gender, label) in [
            (HumanGender::Male, "human_male"),
            (HumanGender::Female, "human_female"),
        ] {
            let rows = human_data.matrix_for(gender);
            if rows.len() < 3 {
                continue;
            }
            let data = ItemMatrix::new(rows, (1..=42).collect())
                .map_err(|error| AppError::Data(error.to_string()))?;
            let result = ega(&data, &ega_config, bootstrap)
                .map_err(|error| AppError::Data(error.to_string()))?;
            persona_results.insert(label.to_string(), result);
        }
    }

    for (persona, result) in &persona_results {
        let dir = analysis_dir.join("ega").join(persona);
        report::write_node_table(&dir.join("nodes.csv"), result, result.stability.as_ref())
            .map_err(|error| AppError::Data(error.to_string()))?;
        report::write_edge_table(&dir.join("edges.csv"), result)
            .map_err(|error| AppError::Data(error.to_string()))?;
    }
    let purity_rows: BTreeMap<String, &EgaResult> = persona_results
        .iter()
        .map(|(persona, result)| (persona.clone(), result))
        .collect();
    report::write_purity_table(&analysis_dir.join("purity.csv"), &purity_rows)
        .map_err(|error| AppError::Data(error.to_string()))?;
    let purity_json: BTreeMap<&String, &dasslab_core::net::PurityResult> = persona_results
        .iter()
        .map(|(persona, result)| (persona, &result.purity))
        .collect();
    report::write_json(&analysis_dir.join("purity.json"), &purity_json)
        .map_err(|error| AppError::Data(error.to_string()))?;

    // Kruskal-Wallis: valence contrasts of subscale totals per
    // (gender, role, event).
    let mut kw_rows = Vec::new();
    for &gender in Gender::ALL {
        for &role in Role::ALL {
            for &event in Event::ALL {
                for subscale in Subscale::ALL {
                    let totals_for = |valence: Valence| -> Vec<f64> {
                        records
                            .iter()
                            .filter(|record| {
                                record.condition.gender == gender
                                    && record.condition.role == role
                                    && record.condition.event == event
                                    && record.condition.valence == valence
                            })
                            .map(|record| f64::from(record.subscale_total(subscale)))
                            .collect()
                    };
                    let positive = totals_for(Valence::Positive);
                    let negative = totals_for(Valence::Negative);
                    let neutral = totals_for(Valence::Neutral);
                    let persona = format!("{gender}_{role}_{event}");
                    let mean = |values: &[f64]| {
                        if values.is_empty() {
                            f64::NAN
                        } else {
                            values.iter().sum::<f64>() / values.len() as f64
                        }
                    };
                    if !positive.is_empty() && !negative.is_empty() {
                        let groups = vec![positive.clone(), negative.clone()];
                        if let Ok(result) = kruskal_wallis(&groups) {
                            kw_rows.push(report::KwRow::from_result(
                                persona.clone(),
                                subscale,
                                "positive_vs_negative".into(),
                                &result,
                                vec![mean(&positive), mean(&negative)],
                            ));
                        }
                    }
                    if !positive.is_empty() && !negative.is_empty() && !neutral.is_empty() {
                        let groups = vec![positive.clone(), negative.clone(), neutral.clone()];
                        if let Ok(result) = kruskal_wallis(&groups) {
                            kw_rows.push(report::KwRow::from_result(
                                persona,
                                subscale,
                                "all_valences".into(),
                                &result,
                                vec![mean(&positive), mean(&negative), mean(&neutral)],
                            ));
                        }
                    }
                }
            }
        }
    }
    report::write_kw_table(&analysis_dir.join("kw.csv"), &kw_rows)
        .map_err(|error| AppError::Data(error.to_string()))?;

    // Histograms of subscale totals, unit right-closed bins over 13..=56.
    let edges: Vec<f64> = (13..=56).map(f64::from).collect();
    let mut histogram_rows = Vec::new();
    for &valence in Valence::ALL {
        for &gender in Gender::ALL {
            for &event in Event::ALL {
                for subscale in Subscale::ALL {
                    let totals: Vec<f64> = records
                        .iter()
                        .filter(|record| {
                            record.condition.valence == valence
                                && record.condition.gender == gender
                                && record.condition.event == event
                        })
                        .map(|record| f64::from(record.subscale_total(subscale)))
                        .collect();
                    if totals.is_empty() {
                        continue;
                    }
                    let hist = histogram(&totals, &edges)
                        .map_err(|error| AppError::Data(error.to_string()))?;
                    histogram_rows.push((
                        format!("{valence}_{gender}_{event}"),
                        subscale,
                        hist,
                    ));
                }
            }
        }
    }
    report::write_histogram_table(&analysis_dir.join("histograms.csv"), &histogram_rows)
        .map_err(|error| AppError::Data(error.to_string()))?;

    // Lexicon heatmap over the configured valence slice.
    let lexicon = super::lexicon(config)?;
    let valence_filter = config
        .heatmap_valence()
        .map_err(|error| AppError::Config(error.to_string()))?;
    let heatmap_records: Vec<ResponseRecord> = records
        .iter()
        .filter(|record| valence_filter.is_none_or(|v| record.condition.valence == v))
        .cloned()
        .collect();
    let heatmap_config = HeatmapConfig {
        include_role: config.analysis.heatmap_include_role,
        aggregation: config
            .aggregation_mode()
            .map_err(|error| AppError::Config(error.to_string()))?,
        alpha: config.analysis.significance_alpha,
    };
    let map = heatmap(&heatmap_records, &lexicon, &heatmap_config);
    report::write_heatmap_table(&analysis_dir.join("heatmap.csv"), &map)
        .map_err(|error| AppError::Data(error.to_string()))?;
    report::write_json(&analysis_dir.join("heatmap.json"), &map)
        .map_err(|error| AppError::Data(error.to_string()))?;

    // Single JSON summary plus the exact config used.
    let summary = build_summary(config, &records, &persona_results, &kw_rows, &map);
    report::write_json(&analysis_dir.join("summary.json"), &summary)
        .map_err(|error| AppError::Data(error.to_string()))?;
    config
        .save(&analysis_dir.join("run_config.toml"))
        .map_err(AppError::Other)?;

    println!(
        "analysis complete: {} records, {} personas, {} KW rows, {} heatmap rows -> {}",
        records.len(),
        persona_results.len(),
        kw_rows.len(),
        map.rows.len(),
        analysis_dir.display()
    );
    for (persona, result) in &persona_results {
        println!(
            "  {persona}: k={} purity={:.3}{}",
            result.fit.partition.k,
            result.purity.overall,
            result
                .stability
                .as_ref()
                .map(|s| format!(" min_stability={:.3}", s.min_stability()))
                .unwrap_or_default()
        );
    }
    Ok(())
}

fn resolve_schema(spec: Option<&str>) -> Result<HumanSchema, AppError> {
    match spec {
        None | Some("default") => Ok(HumanSchema::default()),
        Some("openpsychometrics") => Ok(HumanSchema::openpsychometrics()),
        Some(path) => HumanSchema::from_path(Path::new(path))
            .map_err(|error| AppError::Config(error.to_string())),
    }
}

fn build_summary(
    config: &RunConfig,
    records: &[ResponseRecord],
    personas: &BTreeMap<String, EgaResult>,
    kw_rows: &[report::KwRow],
    map: &dasslab_core::lexi::CorrelationHeatmap,
) -> serde_json::Value {
    let persona_summaries: BTreeMap<String, serde_json::Value> = personas
        .iter()
        .map(|(persona, result)| {
            (
                persona.clone(),
                serde_json::json!({
                    "communities": result.fit.partition.k,
                    "purity": result.purity.overall,
                    "modularity": result.fit.modularity,
                    "lambda": result.fit.lambda,
                    "n": result.fit.correlation.n,
                    "min_stability": result.stability.as_ref().map(|s| s.min_stability()),
                    "median_k": result.stability.as_ref().map(|s| s.median_k),
                }),
            )
        })
        .collect();
    let significant = map
        .rows
        .iter()
        .flat_map(|row| &row.cells)
        .filter(|cell| cell.significant)
        .count();
    let total_cells = map.rows.iter().map(|row| row.cells.len()).sum::<usize>();
    serde_json::json!({
        "config": config,
        "dataset": {
            "records": records.len(),
            "cells": dataset::group_by_cell(records).len(),
        },
        "ega": persona_summaries,
        "kw_rows": kw_rows.len(),
        "kw": kw_rows,
        "heatmap": {
            "rows": map.rows.len(),
            "significant_cells": significant,
            "total_cells": total_cells,
            "alpha": map.alpha,
        },
    })
}
