//! `report`: print a human-readable digest of an analysis directory and
//! drop a plotting recipe next to the tables.

use std::path::PathBuf;

use crate::config::RunConfig;
use crate::AppError;

const PLOTTING_RECIPE: &str = r#"# Plotting the analysis tables

All tables are long-format CSV, ready for pandas/ggplot/vega.

- `histograms.csv`: one row per (group, subscale, bin). Bins are
  left-open, right-closed; plot `count` against the bin interval as a
  bar chart, faceted by `group` (valence_gender_event) and `subscale`.
- `ega/<persona>/nodes.csv`: item-to-community assignment with bootstrap
  stability. Join with `edges.csv` (item_i, item_j, weight) to draw the
  network: nodes colored by `community`, edge width by `|weight|`,
  dashed edges for negative weights.
- `ega/<persona>/edges.csv`: signed partial-correlation (or planar
  filter) weights.
- `purity.csv`: communities and overall purity per persona; the
  male/female x PhD/professor cells reproduce the purity table layout.
- `kw.csv`: Kruskal-Wallis H, df, p per persona/subscale/comparison,
  with group sizes, medians and means (groups are `;`-separated in the
  order positive;negative[;neutral]).
- `heatmap.csv`: Pearson r per (persona, subscale, dimension) with
  two-sided p and a significance flag; plot as a tile map masking
  non-significant cells (white), rows ordered by event.
- `summary.json`: everything above in one machine-readable document.
"#;

pub fn run(config: &RunConfig, analysis_dir: Option<PathBuf>) -> Result<(), AppError> {
    let dir = analysis_dir.unwrap_or_else(|| config.run.out_dir.join("analysis"));
    let summary_path = dir.join("summary.json");
    let text = std::fs::read_to_string(&summary_path).map_err(|error| {
        AppError::Data(format!(
            "cannot read {} (run `analyze` first): {error}",
            summary_path.display()
        ))
    })?;
    let summary: serde_json::Value =
        serde_json::from_str(&text).map_err(|error| AppError::Data(error.to_string()))?;

    println!("analysis report: {}", dir.display());
    if let Some(dataset) = summary.get("dataset") {
        println!(
            "  dataset: {} records in {} cells",
            dataset["records"], dataset["cells"]
        );
    }
    if let Some(ega) = summary.get("ega").and_then(|v| v.as_object()) {
        println!("  networks:");
        for (persona, stats) in ega {
            let stability = stats
                .get("min_stability")
                .filter(|v| !v.is_null())
                .map(|v| format!(", min stability {v}"))
                .unwrap_or_default();
            println!(
                "    {persona}: {} communities, purity {:.3}{stability}",
                stats["communities"],
                stats["purity"].as_f64().unwrap_or(f64::NAN)
            );
        }
    }
    if let Some(heatmap) = summary.get("heatmap") {
        println!(
            "  heatmap: {} of {} cells significant at alpha {}",
            heatmap["significant_cells"], heatmap["total_cells"], heatmap["alpha"]
        );
    }
    if let Some(rows) = summary.get("kw_rows") {
        println!("  kruskal-wallis rows: {rows}");
    }

    let recipe_path = dir.join("PLOTTING.md");
    std::fs::write(&recipe_path, PLOTTING_RECIPE)
        .map_err(|error| AppError::Other(error.into()))?;
    println!("  plotting recipe: {}", recipe_path.display());
    Ok(())
}
