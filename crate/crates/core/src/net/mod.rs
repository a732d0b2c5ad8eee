//! Psychometric network engine: correlation estimation, network
//! filtering (penalized precision / planar filtering), community
//! detection, purity against the instrument's subscales, and parametric
//! bootstrap item stability.

mod bootstrap;
mod correlate;
mod ega;
mod glasso;
mod louvain;
mod planarity;
mod purity;
mod tmfg;

pub use bootstrap::{bootstrap_stability, StabilityReport};
pub use correlate::{correlate, CorrelationMethod, ItemMatrix};
pub use ega::{ega, ega_once, subscale_truth, EgaConfig, EgaFit, EgaResult, FilterChoice};
pub use glasso::{glasso, select_lambda, GlassoFit, LambdaSelection};
pub use louvain::{louvain, modularity, LouvainResult};
pub use planarity::is_planar;
pub use purity::{purity, CommunityPurity, PurityResult};
pub use tmfg::{tmfg, TmfgResult, TmfgStep};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("item {0} has zero variance")]
    DegenerateColumn(u8),
    #[error("correlation matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("penalized precision estimation did not converge in {sweeps} sweeps (duality gap {gap:.3e})")]
    GlassoNotConverged { sweeps: usize, gap: f64 },
    #[error("planar filtering needs at least 4 items, got {0}")]
    TooFewItems(usize),
    #[error("community detection requires non-negative weights; edge ({i},{j}) has {weight}")]
    NegativeWeight { i: u8, j: u8, weight: f64 },
    #[error("partition does not cover item {0}")]
    UncoveredItem(u8),
    #[error("empirical correlation could not be factorized even with diagonal jitter up to {0:.1e}")]
    JitterExhausted(f64),
}

/// How the item network was filtered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "filter", rename_all = "snake_case")]
pub enum FilterInfo {
    Glasso { lambda: f64, gamma: f64 },
    Tmfg,
    /// Unfiltered (used by tests and diagnostics).
    Raw,
}

/// Weighted undirected edge between two node indices (positions in the
/// network's item list).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Filtered weighted item network. Node identity lives in `items`
/// (parallel to matrix/node indices); edges carry signed weights.
#[derive(Debug, Clone, Serialize)]
pub struct PsychNetwork {
    pub items: Vec<u8>,
    pub edges: Vec<Edge>,
    pub filter: FilterInfo,
}

impl PsychNetwork {
    pub fn node_count(&self) -> usize {
        self.items.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|edge| edge.weight).sum()
    }

    /// Copy with negative weights clamped to zero (dropped), for
    /// modularity-based community detection. The signed network is kept
    /// for emission.
    pub fn clamped_nonnegative(&self) -> PsychNetwork {
        PsychNetwork {
            items: self.items.clone(),
            edges: self
                .edges
                .iter()
                .filter(|edge| edge.weight > 0.0)
                .copied()
                .collect(),
            filter: self.filter,
        }
    }
}

/// Item correlation matrix with provenance.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    matrix: DMatrix<f64>,
    pub n: usize,
    pub method: CorrelationMethod,
    pub items: Vec<u8>,
}

impl CorrelationMatrix {
    /// Validate symmetry, unit diagonal, range and positive
    /// semidefiniteness (within 1e-8).
    pub fn new(
        matrix: DMatrix<f64>,
        n: usize,
        method: CorrelationMethod,
        items: Vec<u8>,
    ) -> Result<CorrelationMatrix, NetError> {
        let p = matrix.nrows();
        if matrix.ncols() != p || items.len() != p {
            return Err(NetError::ShapeMismatch(format!(
                "{}x{} with {} items",
                matrix.nrows(),
                matrix.ncols(),
                items.len()
            )));
        }
        for i in 0..p {
            if (matrix[(i, i)] - 1.0).abs() > 1e-9 {
                return Err(NetError::ShapeMismatch(format!(
                    "diagonal entry {i} is {}",
                    matrix[(i, i)]
                )));
            }
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-9 {
                    return Err(NetError::ShapeMismatch(format!(
                        "asymmetry at ({i},{j})"
                    )));
                }
                if matrix[(i, j)].abs() > 1.0 + 1e-9 {
                    return Err(NetError::ShapeMismatch(format!(
                        "entry ({i},{j}) = {} outside [-1,1]",
                        matrix[(i, j)]
                    )));
                }
            }
        }
        let min_eig = matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_eig < -1e-8 {
            return Err(NetError::NotPsd(min_eig));
        }
        Ok(CorrelationMatrix {
            matrix,
            n,
            method,
            items,
        })
    }

    pub fn p(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }
}

/// Community assignment over items; labels are contiguous 1..=k.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub assignment: BTreeMap<u8, usize>,
    pub k: usize,
}

impl Partition {
    pub fn new(assignment: BTreeMap<u8, usize>) -> Partition {
        // Relabel to contiguous 1..=k by first appearance over ascending
        // item number.
        let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
        let mut next = 1usize;
        let mut out = BTreeMap::new();
        for (&item, &raw) in &assignment {
            let label = *relabel.entry(raw).or_insert_with(|| {
                let l = next;
                next += 1;
                l
            });
            out.insert(item, label);
        }
        Partition {
            assignment: out,
            k: next - 1,
        }
    }

    pub fn community_of(&self, item: u8) -> Option<usize> {
        self.assignment.get(&item).copied()
    }

    /// Members of each community, keyed by label.
    pub fn communities(&self) -> BTreeMap<usize, Vec<u8>> {
        let mut out: BTreeMap<usize, Vec<u8>> = BTreeMap::new();
        for (&item, &label) in &self.assignment {
            out.entry(label).or_default().push(item);
        }
        out
    }
}
