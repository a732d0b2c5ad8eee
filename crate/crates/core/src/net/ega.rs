//! The full network pipeline: correlate, filter, detect communities,
//! score purity against the instrument subscales, and (optionally)
//! bootstrap item stability.

use std::collections::BTreeMap;

use super::bootstrap::{bootstrap_stability, StabilityReport};
use super::correlate::{correlate, CorrelationMethod, ItemMatrix};
use super::glasso::select_lambda;
use super::louvain::louvain;
use super::purity::{purity, PurityResult};
use super::tmfg::tmfg;
use super::{CorrelationMatrix, NetError, Partition, PsychNetwork};
use crate::catalog::{subscale_of, Subscale, ITEM_COUNT};

/// Network filtering choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterChoice {
    Glasso { gamma: f64, grid_points: usize },
    Tmfg,
}

impl Default for FilterChoice {
    fn default() -> Self {
        FilterChoice::Glasso {
            gamma: 0.5,
            grid_points: 100,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EgaConfig {
    pub method: CorrelationMethod,
    pub filter: FilterChoice,
    pub louvain_seed: Option<u64>,
}

impl Default for EgaConfig {
    fn default() -> Self {
        EgaConfig {
            method: CorrelationMethod::Pearson,
            filter: FilterChoice::default(),
            louvain_seed: None,
        }
    }
}

/// Output of one correlate -> filter -> communities run.
#[derive(Debug, Clone)]
pub struct EgaFit {
    pub correlation: CorrelationMatrix,
    /// Signed filtered network (negative edges preserved for emission).
    pub network: PsychNetwork,
    pub partition: Partition,
    pub modularity: f64,
    /// Selected penalty when the filter was glasso.
    pub lambda: Option<f64>,
}

/// One pipeline pass without purity/stability; community detection runs
/// on the non-negative clamp of the network.
pub fn ega_once(data: &ItemMatrix, config: &EgaConfig) -> Result<EgaFit, NetError> {
    let correlation = correlate(data, config.method)?;
    let (network, lambda) = match config.filter {
        FilterChoice::Glasso { gamma, grid_points } => {
            let selection = select_lambda(&correlation, gamma, grid_points)?;
            let network = selection.fit.to_network(&correlation, gamma);
            (network, Some(selection.lambda))
        }
        FilterChoice::Tmfg => (tmfg(&correlation)?.network, None),
    };
    let communities = louvain(&network.clamped_nonnegative(), config.louvain_seed)?;
    Ok(EgaFit {
        correlation,
        network,
        partition: communities.partition,
        modularity: communities.modularity,
        lambda,
    })
}

/// Ground-truth subscale per item 1..=42.
pub fn subscale_truth() -> BTreeMap<u8, Subscale> {
    (1..=ITEM_COUNT as u8)
        .map(|item| (item, subscale_of(item).expect("valid item")))
        .collect()
}

#[derive(Debug, Clone)]
pub struct EgaResult {
    pub fit: EgaFit,
    pub purity: PurityResult,
    pub stability: Option<StabilityReport>,
}

/// Full instrument-level analysis: pipeline, purity against the DASS
/// subscales, and optional parametric bootstrap stability.
pub fn ega(
    data: &ItemMatrix,
    config: &EgaConfig,
    bootstrap: Option<(usize, u64)>,
) -> Result<EgaResult, NetError> {
    let fit = ega_once(data, config)?;
    let purity_result = purity(&fit.partition, &subscale_truth())?;
    let stability = match bootstrap {
        Some((replicates, seed)) => Some(bootstrap_stability(
            &fit.correlation,
            &fit.partition,
            config,
            replicates,
            seed,
        )?),
        None => None,
    };
    Ok(EgaResult {
        fit,
        purity: purity_result,
        stability,
    })
}
