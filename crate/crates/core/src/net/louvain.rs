//! Two-phase greedy modularity maximization (local moving + graph
//! aggregation) for non-negative weighted item networks.
//!
//! Determinism: the node sweep order is ascending unless an explicit
//! seed is given, and ties between candidate communities resolve to the
//! first one touched in ascending-neighbor order.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{NetError, Partition, PsychNetwork};

const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LouvainResult {
    pub partition: Partition,
    pub modularity: f64,
    /// Modularity after each completed phase; non-decreasing.
    pub phase_modularities: Vec<f64>,
}

struct Graph {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
    /// Internal (aggregated) weight per node; contributes twice to the
    /// node degree.
    self_weight: Vec<f64>,
    degree: Vec<f64>,
    two_m: f64,
}

impl Graph {
    fn from_network(net: &PsychNetwork) -> Result<Graph, NetError> {
        let n = net.node_count();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for edge in &net.edges {
            if edge.weight < 0.0 {
                return Err(NetError::NegativeWeight {
                    i: net.items[edge.i],
                    j: net.items[edge.j],
                    weight: edge.weight,
                });
            }
            if edge.weight == 0.0 || edge.i == edge.j {
                continue;
            }
            adj[edge.i].push((edge.j, edge.weight));
            adj[edge.j].push((edge.i, edge.weight));
        }
        for neighbors in &mut adj {
            neighbors.sort_by(|a, b| a.0.cmp(&b.0));
        }
        let self_weight = vec![0.0; n];
        let degree: Vec<f64> = adj
            .iter()
            .map(|neighbors| neighbors.iter().map(|&(_, w)| w).sum::<f64>())
            .collect();
        let two_m = degree.iter().sum();
        Ok(Graph {
            n,
            adj,
            self_weight,
            degree,
            two_m,
        })
    }

    fn modularity(&self, community: &[usize]) -> f64 {
        if self.two_m == 0.0 {
            return 0.0;
        }
        let k = community.iter().max().map_or(0, |&c| c + 1);
        let mut internal = vec![0.0; k];
        let mut total = vec![0.0; k];
        for v in 0..self.n {
            let c = community[v];
            total[c] += self.degree[v];
            internal[c] += 2.0 * self.self_weight[v];
            for &(w, weight) in &self.adj[v] {
                if community[w] == c {
                    internal[c] += weight;
                }
            }
        }
        (0..k)
            .map(|c| {
                internal[c] / self.two_m - (total[c] / self.two_m) * (total[c] / self.two_m)
            })
            .sum()
    }

    /// One local-moving phase. Returns (community per node, any move).
    fn local_move(&self, rng: Option<&mut ChaCha12Rng>) -> (Vec<usize>, bool) {
        let mut community: Vec<usize> = (0..self.n).collect();
        let mut community_total = self.degree.clone();
        // Self weights stay with the node wherever it goes; they do not
        // affect move gains.
        let mut order: Vec<usize> = (0..self.n).collect();
        let mut rng = rng;
        let mut neighbor_weight = vec![0.0; self.n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any_move = false;
        loop {
            if let Some(rng) = rng.as_deref_mut() {
                order.shuffle(rng);
            }
            let mut moved = false;
            for &v in &order {
                let old = community[v];
                for &(w, weight) in &self.adj[v] {
                    let c = community[w];
                    if neighbor_weight[c] == 0.0 && !touched.contains(&c) {
                        touched.push(c);
                    }
                    neighbor_weight[c] += weight;
                }
                community_total[old] -= self.degree[v];
                let scale = self.degree[v] / self.two_m;
                let mut best = old;
                let mut best_gain = neighbor_weight[old] - scale * community_total[old];
                for &c in &touched {
                    if c == old {
                        continue;
                    }
                    let gain = neighbor_weight[c] - scale * community_total[c];
                    if gain > best_gain + GAIN_EPS {
                        best_gain = gain;
                        best = c;
                    }
                }
                community[v] = best;
                community_total[best] += self.degree[v];
                if best != old {
                    moved = true;
                    any_move = true;
                }
                for &c in &touched {
                    neighbor_weight[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
        }
        (community, any_move)
    }

    /// Contract communities into super-nodes; labels are renumbered by
    /// ascending old community id.
    fn aggregate(&self, community: &[usize]) -> (Graph, Vec<usize>) {
        let mut labels: Vec<usize> = community.to_vec();
        labels.sort_unstable();
        labels.dedup();
        let compact: BTreeMap<usize, usize> = labels
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let k = labels.len();
        let renumbered: Vec<usize> = community.iter().map(|c| compact[c]).collect();

        let mut self_weight = vec![0.0; k];
        let mut cross: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for v in 0..self.n {
            let cv = renumbered[v];
            self_weight[cv] += self.self_weight[v];
            for &(w, weight) in &self.adj[v] {
                let cw = renumbered[w];
                if cv == cw {
                    if v < w {
                        self_weight[cv] += weight;
                    }
                } else if cv < cw {
                    *cross.entry((cv, cw)).or_insert(0.0) += weight;
                }
            }
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
        for (&(a, b), &weight) in &cross {
            adj[a].push((b, weight));
            adj[b].push((a, weight));
        }
        for neighbors in &mut adj {
            neighbors.sort_by(|x, y| x.0.cmp(&y.0));
        }
        let degree: Vec<f64> = (0..k)
            .map(|c| {
                adj[c].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self_weight[c]
            })
            .collect();
        let two_m = degree.iter().sum();
        (
            Graph {
                n: k,
                adj,
                self_weight,
                degree,
                two_m,
            },
            renumbered,
        )
    }
}

/// Run Louvain over the network. Zero-weight networks degenerate to one
/// community per node.
pub fn louvain(net: &PsychNetwork, seed: Option<u64>) -> Result<LouvainResult, NetError> {
    let graph = Graph::from_network(net)?;
    let n = graph.n;
    if graph.two_m == 0.0 {
        let assignment: BTreeMap<u8, usize> = net
            .items
            .iter()
            .enumerate()
            .map(|(index, &item)| (item, index))
            .collect();
        return Ok(LouvainResult {
            partition: Partition::new(assignment),
            modularity: 0.0,
            phase_modularities: Vec::new(),
        });
    }

    let mut rng = seed.map(ChaCha12Rng::seed_from_u64);
    let mut node_to_final: Vec<usize> = (0..n).collect();
    let mut level = graph;
    let mut phase_modularities = Vec::new();
    loop {
        let (community, changed) = level.local_move(rng.as_mut());
        if !changed && !phase_modularities.is_empty() {
            break;
        }
        let q = level.modularity(&community);
        phase_modularities.push(q);
        let (aggregated, renumbered) = level.aggregate(&community);
        for slot in node_to_final.iter_mut() {
            *slot = renumbered[*slot];
        }
        if aggregated.n == level.n {
            break; // no contraction happened
        }
        level = aggregated;
    }

    let assignment: BTreeMap<u8, usize> = net
        .items
        .iter()
        .enumerate()
        .map(|(node, &item)| (item, node_to_final[node]))
        .collect();
    let partition = Partition::new(assignment);
    let final_q = modularity(net, &partition);
    Ok(LouvainResult {
        partition,
        modularity: final_q,
        phase_modularities,
    })
}

/// Modularity of an item partition, recomputed directly from the
/// network.
pub fn modularity(net: &PsychNetwork, partition: &Partition) -> f64 {
    let graph = match Graph::from_network(net) {
        Ok(graph) => graph,
        Err(_) => return f64::NAN,
    };
    let community: Vec<usize> = net
        .items
        .iter()
        .map(|item| partition.community_of(*item).expect("covered item") - 1)
        .collect();
    graph.modularity(&community)
}
