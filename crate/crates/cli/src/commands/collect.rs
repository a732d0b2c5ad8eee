//! `collect`: administer the manifest against the configured backend,
//! journal progress for resumability, and write the three per-cell
//! dataset formats.

use std::io::BufRead;
use std::path::PathBuf;

use dasslab_core::dataset;
use dasslab_core::gateway::{
    collect, Backend, GatewayError, HttpBackend, SyntheticRespondent,
};
use dasslab_core::prompts::PromptSpec;

use crate::config::RunConfig;
use crate::AppError;

pub fn run(
    config: &RunConfig,
    manifest: Option<PathBuf>,
    dry_run: bool,
) -> Result<(), AppError> {
    let manifest_path = manifest.unwrap_or_else(|| config.run.out_dir.join("prompts.jsonl"));
    let specs = load_manifest(&manifest_path)?;
    if dry_run {
        println!(
            "dry run: {} requests would be sent to backend `{}`",
            specs.len(),
            config.backend.kind
        );
        return Ok(());
    }

    let backend: Box<dyn Backend> = match config.backend.kind.as_str() {
        "synthetic" => {
            let synthetic_config = config
                .synthetic_config()
                .map_err(|error| AppError::Config(error.to_string()))?;
            let catalog = match &config.run.catalog {
                Some(path) => dasslab_core::catalog::ItemCatalog::from_path(path)
                    .map_err(|error| AppError::Config(error.to_string()))?,
                None => dasslab_core::catalog::ItemCatalog::bundled(),
            };
            Box::new(SyntheticRespondent::new(
                synthetic_config,
                super::lexicon(config)?,
                catalog,
            ))
        }
        "openai" => Box::new(
            HttpBackend::new(config.http_config())
                .map_err(|error| AppError::Config(error.to_string()))?,
        ),
        other => return Err(AppError::Config(format!("unknown backend kind {other:?}"))),
    };

    let journal = config.run.out_dir.join("collect.journal.jsonl");
    let collect_config = config.collect_config(Some(journal));
    let report = collect(&specs, backend.as_ref(), &collect_config).map_err(|error| {
        match error {
            GatewayError::Auth(message) => AppError::Backend(message),
            other => AppError::Data(other.to_string()),
        }
    })?;

    let records: Vec<_> = report.records().cloned().collect();
    let data_dir = config.run.out_dir.join("data");
    let written = dataset::write_run(&data_dir, &records)
        .map_err(|error| AppError::Data(error.to_string()))?;

    // Failure and retry logs round out the audit trail.
    let failures: Vec<_> = report
        .failures()
        .map(|(id, reason)| serde_json::json!({"conversation_id": id, "reason": reason}))
        .collect();
    if !failures.is_empty() {
        let path = config.run.out_dir.join("failures.jsonl");
        let text = failures
            .iter()
            .map(|f| f.to_string())
            .collect::<Vec<_>>()
            .join("\n");
        std::fs::write(&path, text).map_err(|error| AppError::Other(error.into()))?;
    }
    config
        .save(&config.run.out_dir.join("run_config.toml"))
        .map_err(AppError::Other)?;

    println!(
        "collected {} records ({} resumed, {} failures, {} transport retries); {} dataset files in {}",
        records.len(),
        report.resumed,
        report.failures().count(),
        report.retries.len(),
        written.len(),
        data_dir.display()
    );
    Ok(())
}

fn load_manifest(path: &std::path::Path) -> Result<Vec<PromptSpec>, AppError> {
    let file = std::fs::File::open(path).map_err(|error| {
        AppError::Config(format!("cannot open manifest {}: {error}", path.display()))
    })?;
    let mut specs = Vec::new();
    for (index, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|error| AppError::Other(error.into()))?;
        if line.trim().is_empty() {
            continue;
        }
        let spec: PromptSpec = serde_json::from_str(&line).map_err(|error| {
            AppError::Data(format!(
                "manifest {} line {}: {error}",
                path.display(),
                index + 1
            ))
        })?;
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err(AppError::Data(format!(
            "manifest {} holds no prompt specs",
            path.display()
        )));
    }
    Ok(specs)
}
