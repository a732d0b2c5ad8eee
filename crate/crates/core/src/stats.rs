//! Nonparametric and descriptive statistics: Kruskal-Wallis rank tests and
//! right-closed histograms.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("Kruskal-Wallis needs at least two groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("Kruskal-Wallis needs at least 3 observations in total, got {0}")]
    TooFewObservations(usize),
    #[error("non-finite observation in group {0}")]
    NonFinite(usize),
    #[error("histogram edges must be strictly increasing")]
    NonMonotoneEdges,
    #[error("exact permutation test too large: {arrangements} arrangements (cap {cap})")]
    PermutationTooLarge { arrangements: u128, cap: u128 },
}

/// Result of a Kruskal-Wallis rank test.
#[derive(Debug, Clone, Serialize)]
pub struct KWResult {
    /// Tie-corrected H statistic.
    pub h: f64,
    /// Degrees of freedom, `groups - 1`.
    pub df: usize,
    /// Upper-tail p-value from the chi-square approximation.
    pub p: f64,
    pub group_sizes: Vec<usize>,
    pub group_medians: Vec<f64>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Mid-ranks of `values` (average rank within tied runs), 1-based.
fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // indices start..=end share value; mean of ranks start+1 ..= end+1
        let avg = (start + end) as f64 / 2.0 + 1.0;
        for &index in &order[start..=end] {
            ranks[index] = avg;
        }
        start = end + 1;
    }
    ranks
}

fn validate_groups(groups: &[Vec<f64>]) -> Result<usize, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    let mut total = 0;
    for (index, group) in groups.iter().enumerate() {
        if group.is_empty() {
            return Err(StatsError::EmptyGroup(index));
        }
        if group.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(index));
        }
        total += group.len();
    }
    if total < 3 {
        return Err(StatsError::TooFewObservations(total));
    }
    Ok(total)
}

/// Tie-corrected H for a flat value vector with group labels.
fn h_statistic(values: &[f64], group_of: &[usize], group_count: usize) -> f64 {
    let n = values.len() as f64;
    let ranks = midranks(values);
    let mut rank_sums = vec![0.0; group_count];
    let mut sizes = vec![0usize; group_count];
    for (index, &group) in group_of.iter().enumerate() {
        rank_sums[group] += ranks[index];
        sizes[group] += 1;
    }
    let mut h = 0.0;
    for group in 0..group_count {
        h += rank_sums[group] * rank_sums[group] / sizes[group] as f64;
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

    // Tie correction: 1 - sum(t^3 - t) / (N^3 - N) over tied runs.
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut tie_sum = 0.0;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start;
        while end + 1 < sorted.len() && sorted[end + 1] == sorted[start] {
            end += 1;
        }
        let run = (end - start + 1) as f64;
        tie_sum += run * run * run - run;
        start = end + 1;
    }
    let correction = 1.0 - tie_sum / (n * n * n - n);
    if correction <= 0.0 {
        // All observations identical: no evidence against the null.
        return 0.0;
    }
    h / correction
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(df as f64 / 2.0, x / 2.0)
}

/// Kruskal-Wallis rank test with mid-rank tie handling and tie correction;
/// p-value from the chi-square upper tail with `groups - 1` degrees of
/// freedom. All observations identical yields H = 0, p = 1.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KWResult, StatsError> {
    validate_groups(groups)?;
    let mut values = Vec::new();
    let mut group_of = Vec::new();
    for (index, group) in groups.iter().enumerate() {
        values.extend_from_slice(group);
        group_of.extend(std::iter::repeat(index).take(group.len()));
    }
    let h = h_statistic(&values, &group_of, groups.len());
    let df = groups.len() - 1;
    let p = if h == 0.0 { 1.0 } else { chi_square_sf(h, df) };
    let group_medians = groups
        .iter()
        .map(|group| {
            let mut sorted = group.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
            median(&sorted)
        })
        .collect();
    Ok(KWResult {
        h,
        df,
        p,
        group_sizes: groups.iter().map(Vec::len).collect(),
        group_medians,
    })
}

/// Exact permutation p-value for the Kruskal-Wallis H, by full enumeration
/// of group assignments. Intended for small samples (n <= 10 per group);
/// errors out above `cap` arrangements (default 500,000).
pub fn kruskal_wallis_exact(groups: &[Vec<f64>], cap: Option<u128>) -> Result<KWResult, StatsError> {
    let total = validate_groups(groups)?;
    let cap = cap.unwrap_or(500_000);

    let mut arrangements: u128 = 1;
    let mut remaining = total;
    for group in groups {
        arrangements = arrangements.saturating_mul(binomial(remaining, group.len()));
        remaining -= group.len();
        if arrangements > cap {
            return Err(StatsError::PermutationTooLarge { arrangements, cap });
        }
    }

    let mut values = Vec::new();
    for group in groups {
        values.extend_from_slice(group);
    }
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let observed = {
        let mut group_of = Vec::new();
        for (index, group) in groups.iter().enumerate() {
            group_of.extend(std::iter::repeat(index).take(group.len()));
        }
        h_statistic(&values, &group_of, groups.len())
    };

    // Ranks are a function of the pooled values only, so H depends on the
    // assignment alone; enumerate assignments recursively.
    let mut assignment = vec![usize::MAX; total];
    let mut at_least = 0u64;
    let mut count = 0u64;
    enumerate_assignments(
        &values,
        &sizes,
        &mut assignment,
        0,
        observed,
        &mut at_least,
        &mut count,
    );
    let p = at_least as f64 / count as f64;
    let base = kruskal_wallis(groups)?;
    Ok(KWResult { p, ..base })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result * (n - i) as u128 / (i + 1) as u128;
    }
    result
}

fn enumerate_assignments(
    values: &[f64],
    sizes: &[usize],
    assignment: &mut Vec<usize>,
    group: usize,
    observed: f64,
    at_least: &mut u64,
    count: &mut u64,
) {
    if group == sizes.len() {
        let h = h_statistic(values, assignment, sizes.len());
        *count += 1;
        if h >= observed - 1e-12 {
            *at_least += 1;
        }
        return;
    }
    let free: Vec<usize> = (0..values.len())
        .filter(|&i| assignment[i] == usize::MAX)
        .collect();
    if group + 1 == sizes.len() {
        // Last group takes everything that is left.
        for &i in &free {
            assignment[i] = group;
        }
        enumerate_assignments(values, sizes, assignment, group + 1, observed, at_least, count);
        for &i in &free {
            assignment[i] = usize::MAX;
        }
        return;
    }
    let mut chosen = vec![0usize; sizes[group]];
    combinations(&free, sizes[group], &mut chosen, 0, 0, &mut |subset| {
        for &i in subset {
            assignment[i] = group;
        }
        enumerate_assignments(values, sizes, assignment, group + 1, observed, at_least, count);
        for &i in subset {
            assignment[i] = usize::MAX;
        }
    });
}

fn combinations(
    pool: &[usize],
    k: usize,
    chosen: &mut Vec<usize>,
    depth: usize,
    start: usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    if depth == k {
        visit(chosen);
        return;
    }
    for index in start..=pool.len().saturating_sub(k - depth) {
        chosen[depth] = pool[index];
        combinations(pool, k, chosen, depth + 1, index + 1, visit);
    }
}

/// Histogram with left-open, right-closed bins: value x lands in bin
/// (a, b] iff a < x <= b. Values at or below the first edge land in the
/// underflow bin; values above the last edge land in the overflow bin.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// One count per (edges[i], edges[i+1]] interval.
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.underflow + self.overflow + self.counts.iter().sum::<u64>()
    }
}

pub fn histogram(values: &[f64], edges: &[f64]) -> Result<Histogram, StatsError> {
    if edges.len() < 2 || edges.windows(2).any(|pair| pair[0] >= pair[1]) {
        return Err(StatsError::NonMonotoneEdges);
    }
    let mut counts = vec![0u64; edges.len() - 1];
    let mut underflow = 0;
    let mut overflow = 0;
    for &value in values {
        // First edge index with edge >= value; bin (edges[pos-1], edges[pos]].
        let pos = edges.partition_point(|&edge| edge < value);
        if pos == 0 {
            underflow += 1;
        } else if pos == edges.len() {
            overflow += 1;
        } else {
            counts[pos - 1] += 1;
        }
    }
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
        underflow,
        overflow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook H from scratch: rank the pooled sample (mid-ranks), apply
    /// 12/(N(N+1)) * sum(R_i^2/n_i) - 3(N+1), divide by the tie factor.
    /// Kept separate from the implementation's flat-vector plumbing.
    fn oracle_h(groups: &[Vec<f64>]) -> f64 {
        let mut pooled: Vec<(f64, usize)> = Vec::new();
        for (g, group) in groups.iter().enumerate() {
            for &v in group {
                pooled.push((v, g));
            }
        }
        let n = pooled.len() as f64;
        let mut sorted = pooled.clone();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // rank_of[k] is the mid-rank of sorted[k].
        let mut rank_of = vec![0.0; pooled.len()];
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1].0 == sorted[i].0 {
                j += 1;
            }
            let avg = (i + 1 + j + 1) as f64 / 2.0;
            for k in i..=j {
                rank_of[k] = avg;
            }
            i = j + 1;
        }
        let mut rank_sum = vec![0.0; groups.len()];
        for (k, &(_, g)) in sorted.iter().enumerate() {
            rank_sum[g] += rank_of[k];
        }
        let mut h = 0.0;
        for (g, group) in groups.iter().enumerate() {
            h += rank_sum[g].powi(2) / group.len() as f64;
        }
        h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
        let mut tie = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1].0 == sorted[i].0 {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie += t * t * t - t;
            i = j + 1;
        }
        let c = 1.0 - tie / (n * n * n - n);
        if c <= 0.0 {
            0.0
        } else {
            h / c
        }
    }

    #[test]
    fn chi_square_tail_matches_known_quantiles() {
        // Classic 5% critical values.
        assert!((chi_square_sf(3.841459, 1) - 0.05).abs() < 1e-6);
        assert!((chi_square_sf(5.991465, 2) - 0.05).abs() < 1e-6);
        assert!((chi_square_sf(11.070498, 5) - 0.05).abs() < 1e-6);
        assert_eq!(chi_square_sf(0.0, 3), 1.0);
        assert!(chi_square_sf(381.85, 1) < 1e-80);
    }

    #[test]
    fn two_group_p_value_matches_chi_square_approximation() {
        let groups = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let result = kruskal_wallis(&groups).unwrap();
        // H = 27/7 at df = 1: p = 0.0495 by the chi-square tail.
        assert!((result.p - chi_square_sf(27.0 / 7.0, 1)).abs() < 1e-12);
        assert!((result.p - 0.04953).abs() < 5e-5);
    }

    #[test]
    fn identical_groups_give_zero_h_unit_p() {
        let groups = vec![vec![2.0, 2.0, 2.0], vec![2.0, 2.0], vec![2.0, 2.0, 2.0]];
        let result = kruskal_wallis(&groups).unwrap();
        assert_eq!(result.h, 0.0);
        assert_eq!(result.p, 1.0);
    }

    #[test]
    fn two_clean_groups_match_rank_formula_oracle() {
        let groups = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let result = kruskal_wallis(&groups).unwrap();
        assert!((result.h - oracle_h(&groups)).abs() < 1e-9);
        // Ranks 1..6, R1=6, R2=15: H = 12/42*(36/3+225/3)-21 = 3.857142...
        assert!((result.h - 27.0 / 7.0).abs() < 1e-9);
    }

    #[test]
    fn tied_data_matches_oracle() {
        let groups = vec![
            vec![1.0, 2.0, 2.0, 3.0],
            vec![2.0, 3.0, 3.0],
            vec![1.0, 1.0, 4.0, 4.0],
        ];
        let result = kruskal_wallis(&groups).unwrap();
        assert!((result.h - oracle_h(&groups)).abs() < 1e-9);
    }

    #[test]
    fn exact_permutation_agrees_with_full_enumeration_sanity() {
        let groups = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let exact = kruskal_wallis_exact(&groups, None).unwrap();
        // Complete separation of 3+3: only the two extreme assignments of
        // {1..6} reach H = 27/7, so p = 2/20.
        assert!((exact.p - 0.1).abs() < 1e-12);
    }

    #[test]
    fn exact_permutation_cap_is_enforced() {
        let groups = vec![vec![1.0; 20], vec![2.0; 20]];
        assert!(matches!(
            kruskal_wallis_exact(&groups, Some(1000)),
            Err(StatsError::PermutationTooLarge { .. })
        ));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            kruskal_wallis(&[vec![1.0, 2.0]]),
            Err(StatsError::TooFewGroups(1))
        ));
        assert!(matches!(
            kruskal_wallis(&[vec![1.0], vec![]]),
            Err(StatsError::EmptyGroup(1))
        ));
        assert!(matches!(
            kruskal_wallis(&[vec![1.0], vec![2.0]]),
            Err(StatsError::TooFewObservations(2))
        ));
    }

    #[test]
    fn histogram_right_closed_places_edge_values() {
        let hist = histogram(&[2.0, 4.0, 4.0, 5.0], &[0.0, 2.0, 4.0, 6.0]).unwrap();
        assert_eq!(hist.counts, vec![1, 2, 1]); // 2 in (0,2], both 4s in (2,4]
        assert_eq!(hist.underflow, 0);
        assert_eq!(hist.overflow, 0);
    }

    #[test]
    fn histogram_under_and_overflow() {
        let hist = histogram(&[0.0, -1.0, 7.0], &[0.0, 2.0, 4.0]).unwrap();
        assert_eq!(hist.underflow, 2); // x <= first edge
        assert_eq!(hist.overflow, 1);
        assert_eq!(hist.counts, vec![0, 0]);
    }

    #[test]
    fn histogram_empty_input() {
        let hist = histogram(&[], &[0.0, 1.0]).unwrap();
        assert_eq!(hist.total(), 0);
    }

    #[test]
    fn histogram_rejects_bad_edges() {
        assert!(histogram(&[1.0], &[0.0, 0.0, 1.0]).is_err());
        assert!(histogram(&[1.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn kw_invariant_under_monotone_transform(
            a in proptest::collection::vec(1.0f64..100.0, 3..12),
            b in proptest::collection::vec(1.0f64..100.0, 3..12),
        ) {
            let groups = vec![a.clone(), b.clone()];
            let transformed = vec![
                a.iter().map(|v| (v * 0.37).exp()).collect::<Vec<_>>(),
                b.iter().map(|v| (v * 0.37).exp()).collect::<Vec<_>>(),
            ];
            let h1 = kruskal_wallis(&groups).unwrap().h;
            let h2 = kruskal_wallis(&transformed).unwrap().h;
            prop_assert!((h1 - h2).abs() < 1e-9);
        }

        #[test]
        fn histogram_conserves_count(
            values in proptest::collection::vec(-50.0f64..50.0, 0..200),
            cuts in proptest::collection::btree_set(-40i32..40, 2..10),
        ) {
            let edges: Vec<f64> = cuts.iter().map(|&c| c as f64).collect();
            let hist = histogram(&values, &edges).unwrap();
            prop_assert_eq!(hist.total(), values.len() as u64);
        }
    }
}
