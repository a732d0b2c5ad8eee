pub mod analyze;
pub mod collect;
pub mod generate;
pub mod report;

use std::path::Path;

use dasslab_core::catalog::ItemCatalog;
use dasslab_core::prompts::{PromptFactory, PromptTemplate};

use crate::config::RunConfig;
use crate::AppError;

/// Build the prompt factory from the configured catalog/template.
pub fn factory(config: &RunConfig) -> Result<PromptFactory, AppError> {
    let catalog = match &config.run.catalog {
        Some(path) => ItemCatalog::from_path(path)
            .map_err(|error| AppError::Config(error.to_string()))?,
        None => ItemCatalog::bundled(),
    };
    let template = match &config.run.template {
        Some(path) => PromptTemplate::from_path(path)
            .map_err(|error| AppError::Config(error.to_string()))?,
        None => PromptTemplate::bundled(),
    };
    Ok(PromptFactory::new(template, catalog, config.run.repetitions))
}

/// Load the configured lexicon (bundled toy table by default).
pub fn lexicon(config: &RunConfig) -> Result<dasslab_core::lexi::Lexicon, AppError> {
    match &config.analysis.lexicon {
        Some(path) => dasslab_core::lexi::Lexicon::from_path(path)
            .map_err(|error| AppError::Data(error.to_string())),
        None => Ok(dasslab_core::lexi::Lexicon::bundled()),
    }
}

pub fn ensure_dir(path: &Path) -> Result<(), AppError> {
    std::fs::create_dir_all(path)
        .map_err(|error| AppError::Other(anyhow::anyhow!("cannot create {}: {error}", path.display())))
}
