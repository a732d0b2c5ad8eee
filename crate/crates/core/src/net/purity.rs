//! Partition purity against ground-truth classes: per community, the
//! share of members whose class matches the community's dominant class;
//! overall, the size-weighted average.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{NetError, Partition};
use crate::catalog::Subscale;

#[derive(Debug, Clone, Serialize)]
pub struct CommunityPurity {
    pub label: usize,
    pub size: usize,
    pub purity: f64,
    pub dominant: Subscale,
    pub overlap: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PurityResult {
    pub communities: Vec<CommunityPurity>,
    pub overall: f64,
    pub n: usize,
}

/// Purity of `partition` against `truth`. Every item in the partition
/// must have a ground-truth class.
pub fn purity(
    partition: &Partition,
    truth: &BTreeMap<u8, Subscale>,
) -> Result<PurityResult, NetError> {
    let mut communities = Vec::new();
    let n: usize = partition.assignment.len();
    for (label, members) in partition.communities() {
        let mut counts: BTreeMap<Subscale, usize> = BTreeMap::new();
        for item in &members {
            let class = truth.get(item).ok_or(NetError::UncoveredItem(*item))?;
            *counts.entry(*class).or_insert(0) += 1;
        }
        // Highest overlap wins; ties go to the earliest subscale.
        let mut dominant = Subscale::Depression;
        let mut overlap = 0usize;
        for (&class, &count) in &counts {
            if count > overlap {
                dominant = class;
                overlap = count;
            }
        }
        communities.push(CommunityPurity {
            label,
            size: members.len(),
            purity: overlap as f64 / members.len() as f64,
            dominant,
            overlap,
        });
    }
    let overall = communities
        .iter()
        .map(|community| community.overlap as f64)
        .sum::<f64>()
        / n as f64;
    Ok(PurityResult {
        communities,
        overall,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::subscale_of;
    use crate::net::ega::subscale_truth;
    use proptest::prelude::*;

    fn partition_from(groups: &[&[u8]]) -> Partition {
        let mut assignment = BTreeMap::new();
        for (label, group) in groups.iter().enumerate() {
            for &item in *group {
                assignment.insert(item, label);
            }
        }
        Partition::new(assignment)
    }

    #[test]
    fn ground_truth_partition_scores_one() {
        let groups: Vec<Vec<u8>> = Subscale::ALL
            .iter()
            .map(|s| s.items().to_vec())
            .collect();
        let partition = partition_from(&[&groups[0], &groups[1], &groups[2]]);
        let result = purity(&partition, &subscale_truth()).unwrap();
        assert_eq!(result.overall, 1.0);
        assert_eq!(result.n, 42);
        assert!(result.communities.iter().all(|c| c.purity == 1.0));
    }

    #[test]
    fn worked_four_factor_example_scores_39_over_42() {
        // Hand enumeration: F1 is 12 depression items (12), F2 mixes
        // 2 depression + 1 anxiety + 6 stress (max 6), F3 is 13 anxiety
        // items (13), F4 is 8 stress items (8): (12+6+13+8)/42.
        let f1: &[u8] = &[34, 17, 21, 38, 13, 26, 37, 10, 3, 16, 24, 31];
        let f2: &[u8] = &[5, 42, 9, 33, 12, 8, 22, 1, 29];
        let f3: &[u8] = &[25, 40, 4, 15, 41, 7, 20, 23, 36, 19, 30, 28, 2];
        let f4: &[u8] = &[39, 32, 35, 14, 18, 27, 6, 11];
        let partition = partition_from(&[f1, f2, f3, f4]);
        let result = purity(&partition, &subscale_truth()).unwrap();
        assert!((result.overall - 39.0 / 42.0).abs() < 1e-15);
        let overlaps: Vec<usize> = result.communities.iter().map(|c| c.overlap).collect();
        let mut sorted = overlaps.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![6, 8, 12, 13]);
    }

    #[test]
    fn single_community_scores_max_subscale_share() {
        let all: Vec<u8> = (1..=42).collect();
        let partition = partition_from(&[&all]);
        let result = purity(&partition, &subscale_truth()).unwrap();
        assert!((result.overall - 14.0 / 42.0).abs() < 1e-15);
    }

    #[test]
    fn uncovered_item_is_an_error() {
        let partition = partition_from(&[&[1, 2, 3]]);
        let mut truth = BTreeMap::new();
        truth.insert(1, subscale_of(1).unwrap());
        truth.insert(2, subscale_of(2).unwrap());
        assert!(matches!(
            purity(&partition, &truth),
            Err(NetError::UncoveredItem(3))
        ));
    }

    proptest! {
        #[test]
        fn purity_is_invariant_under_relabeling(
            labels in proptest::collection::vec(0usize..5, 42),
            permutation_seed in 0u64..1000,
        ) {
            let assignment: BTreeMap<u8, usize> = labels
                .iter()
                .enumerate()
                .map(|(index, &label)| ((index + 1) as u8, label))
                .collect();
            let partition = Partition::new(assignment);
            // Apply a label permutation derived from the seed.
            let mut permuted = BTreeMap::new();
            for (&item, &label) in &partition.assignment {
                let new_label = (label as u64 * 7919 + permutation_seed) as usize;
                permuted.insert(item, new_label);
            }
            let relabeled = Partition::new(permuted);
            let truth = subscale_truth();
            let a = purity(&partition, &truth).unwrap();
            let b = purity(&relabeled, &truth).unwrap();
            prop_assert!((a.overall - b.overall).abs() < 1e-15);
        }
    }
}
