//! `generate`: render the full prompt grid into `<out>/prompts.jsonl`.

use std::io::Write;
use std::path::PathBuf;

use crate::config::RunConfig;
use crate::AppError;

pub fn run(config: &mut RunConfig, iterations: Option<u32>) -> Result<(), AppError> {
    if let Some(iterations) = iterations {
        config.run.iterations = iterations;
    }
    let factory = super::factory(config)?;
    let specs = factory
        .grid(config.run.iterations)
        .map_err(|error| AppError::Config(error.to_string()))?;

    super::ensure_dir(&config.run.out_dir)?;
    let manifest_path = manifest_path(config);
    let file = std::fs::File::create(&manifest_path).map_err(|error| {
        AppError::Other(anyhow::anyhow!(
            "cannot write {}: {error}",
            manifest_path.display()
        ))
    })?;
    let mut writer = std::io::BufWriter::new(file);
    for spec in &specs {
        let line = serde_json::to_string(spec)
            .map_err(|error| AppError::Other(error.into()))?;
        writeln!(writer, "{line}").map_err(|error| AppError::Other(error.into()))?;
    }
    writer
        .flush()
        .map_err(|error| AppError::Other(error.into()))?;

    config
        .save(&config.run.out_dir.join("run_config.toml"))
        .map_err(AppError::Other)?;
    println!(
        "wrote {} prompt specs ({} cells x {} iterations) to {}",
        specs.len(),
        specs.len() / config.run.iterations as usize,
        config.run.iterations,
        manifest_path.display()
    );
    Ok(())
}

pub fn manifest_path(config: &RunConfig) -> PathBuf {
    config.run.out_dir.join("prompts.jsonl")
}
