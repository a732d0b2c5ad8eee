//! Parametric bootstrap item stability: redraw Gaussian samples from the
//! empirical correlation, rerun the whole network pipeline per
//! replicate, align replicate communities to the empirical ones by
//! greedy maximal Jaccard overlap, and score per-item membership
//! agreement.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ega::{ega_once, EgaConfig};
use super::{CorrelationMatrix, ItemMatrix, NetError, Partition};
use crate::util::standard_normal;

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub items: Vec<u8>,
    /// Fraction of replicates in which each item stayed in its empirical
    /// community.
    pub stability: Vec<f64>,
    pub replicates: usize,
    pub median_k: f64,
    pub empirical_k: usize,
}

impl StabilityReport {
    pub fn stability_of(&self, item: u8) -> Option<f64> {
        self.items
            .iter()
            .position(|&i| i == item)
            .map(|index| self.stability[index])
    }

    pub fn min_stability(&self) -> f64 {
        self.stability.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

/// Cholesky factor of the correlation with escalating diagonal jitter up
/// to 1e-6.
fn jittered_cholesky(r: &CorrelationMatrix) -> Result<DMatrix<f64>, NetError> {
    let p = r.p();
    let mut jitter = 0.0;
    loop {
        let mut matrix = r.matrix().clone();
        for i in 0..p {
            matrix[(i, i)] += jitter;
        }
        if let Some(chol) = matrix.cholesky() {
            return Ok(chol.l());
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
        if jitter > 1e-6 {
            return Err(NetError::JitterExhausted(1e-6));
        }
    }
}

/// Greedy maximal-Jaccard alignment: returns replicate label ->
/// empirical label. Ties prefer the lower empirical label, then the
/// lower replicate label.
fn align_partitions(replicate: &Partition, empirical: &Partition) -> BTreeMap<usize, usize> {
    let replicate_communities = replicate.communities();
    let empirical_communities = empirical.communities();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (&e_label, e_members) in &empirical_communities {
        let e_set: BTreeSet<u8> = e_members.iter().copied().collect();
        for (&r_label, r_members) in &replicate_communities {
            let r_set: BTreeSet<u8> = r_members.iter().copied().collect();
            let intersection = e_set.intersection(&r_set).count();
            if intersection == 0 {
                continue;
            }
            let union = e_set.union(&r_set).count();
            pairs.push((intersection as f64 / union as f64, e_label, r_label));
        }
    }
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite jaccard")
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    let mut used_empirical = BTreeSet::new();
    let mut used_replicate = BTreeSet::new();
    let mut mapping = BTreeMap::new();
    for (_, e_label, r_label) in pairs {
        if used_empirical.contains(&e_label) || used_replicate.contains(&r_label) {
            continue;
        }
        used_empirical.insert(e_label);
        used_replicate.insert(r_label);
        mapping.insert(r_label, e_label);
    }
    mapping
}

/// Run `replicates` parametric bootstrap replicates of the pipeline.
/// Replicate seeds derive as `seed + replicate_index`, so runs are
/// reproducible regardless of thread scheduling.
pub fn bootstrap_stability(
    empirical_correlation: &CorrelationMatrix,
    empirical_partition: &Partition,
    config: &EgaConfig,
    replicates: usize,
    seed: u64,
) -> Result<StabilityReport, NetError> {
    let chol = jittered_cholesky(empirical_correlation)?;
    let n = empirical_correlation.n;
    let p = empirical_correlation.p();
    let items = empirical_correlation.items.clone();

    let results: Vec<Result<(Vec<bool>, usize), NetError>> = (0..replicates)
        .into_par_iter()
        .map(|replicate| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(replicate as u64));
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let z = nalgebra::DVector::from_fn(p, |_, _| standard_normal(&mut rng));
                    (&chol * z).iter().copied().collect()
                })
                .collect();
            let data = ItemMatrix::new(rows, items.clone())?;
            let fit = ega_once(&data, config)?;
            let mapping = align_partitions(&fit.partition, empirical_partition);
            let agreement: Vec<bool> = items
                .iter()
                .map(|&item| {
                    let replicate_label = fit.partition.community_of(item).expect("covered");
                    let empirical_label =
                        empirical_partition.community_of(item).expect("covered");
                    mapping.get(&replicate_label) == Some(&empirical_label)
                })
                .collect();
            Ok((agreement, fit.partition.k))
        })
        .collect();

    let mut agree_counts = vec![0usize; p];
    let mut ks = Vec::with_capacity(replicates);
    for result in results {
        let (agreement, k) = result?;
        for (index, &agrees) in agreement.iter().enumerate() {
            if agrees {
                agree_counts[index] += 1;
            }
        }
        ks.push(k);
    }
    ks.sort_unstable();
    let median_k = if ks.is_empty() {
        f64::NAN
    } else if ks.len() % 2 == 1 {
        ks[ks.len() / 2] as f64
    } else {
        (ks[ks.len() / 2 - 1] + ks[ks.len() / 2]) as f64 / 2.0
    };
    let stability = agree_counts
        .iter()
        .map(|&count| count as f64 / replicates.max(1) as f64)
        .collect();
    Ok(StabilityReport {
        items,
        stability,
        replicates,
        median_k,
        empirical_k: empirical_partition.k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::ega::{ega_once, EgaConfig};
    use crate::net::correlate::{correlate, CorrelationMethod};

    /// Three-block planted data over items 1..=p.
    fn planted_matrix(n: usize, p: usize, block_r: f64, seed: u64) -> ItemMatrix {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let blocks = 3usize;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let shared: Vec<f64> = (0..blocks).map(|_| standard_normal(&mut rng)).collect();
                (0..p)
                    .map(|j| {
                        let b = j * blocks / p;
                        let lambda = block_r.sqrt();
                        lambda * shared[b]
                            + (1.0 - block_r).sqrt() * standard_normal(&mut rng)
                    })
                    .collect()
            })
            .collect();
        ItemMatrix::new(rows, (1..=p as u8).collect()).unwrap()
    }

    #[test]
    fn planted_three_blocks_are_stable() {
        let data = planted_matrix(300, 12, 0.6, 3);
        let config = EgaConfig::default();
        let fit = ega_once(&data, &config).unwrap();
        assert_eq!(fit.partition.k, 3);
        let report = bootstrap_stability(
            &fit.correlation,
            &fit.partition,
            &config,
            100,
            99,
        )
        .unwrap();
        assert!(
            report.min_stability() >= 0.9,
            "min stability {}",
            report.min_stability()
        );
        assert_eq!(report.median_k, 3.0);
    }

    #[test]
    fn single_replicate_gives_zero_one_stabilities() {
        let data = planted_matrix(200, 9, 0.6, 5);
        let config = EgaConfig::default();
        let fit = ega_once(&data, &config).unwrap();
        let report =
            bootstrap_stability(&fit.correlation, &fit.partition, &config, 1, 7).unwrap();
        assert!(report
            .stability
            .iter()
            .all(|&s| s == 0.0 || s == 1.0));
    }

    #[test]
    fn identical_seed_reproduces_the_report() {
        let data = planted_matrix(150, 9, 0.55, 11);
        let config = EgaConfig::default();
        let fit = ega_once(&data, &config).unwrap();
        let a = bootstrap_stability(&fit.correlation, &fit.partition, &config, 20, 31).unwrap();
        let b = bootstrap_stability(&fit.correlation, &fit.partition, &config, 20, 31).unwrap();
        assert_eq!(a.stability, b.stability);
        assert_eq!(a.median_k, b.median_k);
    }

    #[test]
    fn alignment_is_label_permutation_invariant() {
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        for item in 1..=12u8 {
            let block = ((item - 1) / 4) as usize;
            a.insert(item, block);
            b.insert(item, (block + 2) % 3); // permuted labels
        }
        let pa = Partition::new(a);
        let pb = Partition::new(b);
        let mapping = align_partitions(&pb, &pa);
        // Every replicate community maps to the empirical one holding the
        // same members.
        for item in 1..=12u8 {
            let r = pb.community_of(item).unwrap();
            let e = pa.community_of(item).unwrap();
            assert_eq!(mapping[&r], e);
        }
    }

    #[test]
    fn median_k_converges_to_empirical_k_on_exact_data() {
        // Data drawn exactly from the empirical correlation: the median
        // replicate community count matches the empirical count.
        let data = planted_matrix(400, 12, 0.65, 17);
        let config = EgaConfig::default();
        let fit = ega_once(&data, &config).unwrap();
        let report = bootstrap_stability(
            &fit.correlation,
            &fit.partition,
            &config,
            200,
            71,
        )
        .unwrap();
        assert_eq!(report.median_k, fit.partition.k as f64);
        let r = correlate(&data, CorrelationMethod::Pearson).unwrap();
        assert_eq!(r.p(), 12);
    }
}
