//! Brute-force reference oracles for the test suites.
//!
//! Everything in this crate is deliberately slow and independent of the main
//! library: distances are computed by solving the transportation problem with
//! an explicit min-cost-flow network, and the anonymity measures are computed
//! by quadratic grouping over raw record matrices. Test code compares the
//! fast closed-form implementations against these.

const EPS: f64 = 1e-12;

struct Edge {
    to: usize,
    rev: usize,
    cap: f64,
    cost: f64,
}

struct FlowNetwork {
    graph: Vec<Vec<Edge>>,
}

impl FlowNetwork {
    fn new(n: usize) -> Self {
        FlowNetwork {
            graph: (0..n).map(|_| Vec::new()).collect(),
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64, cost: f64) {
        let rev_from = self.graph[to].len();
        let rev_to = self.graph[from].len();
        self.graph[from].push(Edge {
            to,
            rev: rev_from,
            cap,
            cost,
        });
        self.graph[to].push(Edge {
            to: from,
            rev: rev_to,
            cap: 0.0,
            cost: -cost,
        });
    }

    /// Successive shortest augmenting paths; Bellman-Ford tolerates the
    /// negative-cost residual arcs. Returns the total cost of a maximum flow.
    fn min_cost_max_flow(&mut self, source: usize, sink: usize) -> f64 {
        let n = self.graph.len();
        let mut total_cost = 0.0;
        loop {
            let mut dist = vec![f64::INFINITY; n];
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
            dist[source] = 0.0;
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    if !dist[u].is_finite() {
                        continue;
                    }
                    for (ei, e) in self.graph[u].iter().enumerate() {
                        if e.cap > EPS && dist[u] + e.cost < dist[e.to] - EPS {
                            dist[e.to] = dist[u] + e.cost;
                            prev[e.to] = Some((u, ei));
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if prev[sink].is_none() {
                break;
            }
            let mut bottleneck = f64::INFINITY;
            let mut node = sink;
            while let Some((u, ei)) = prev[node] {
                bottleneck = bottleneck.min(self.graph[u][ei].cap);
                node = u;
            }
            let mut node = sink;
            while let Some((u, ei)) = prev[node] {
                let rev = self.graph[u][ei].rev;
                self.graph[u][ei].cap -= bottleneck;
                self.graph[node][rev].cap += bottleneck;
                node = u;
            }
            total_cost += bottleneck * dist[sink];
        }
        total_cost
    }
}

/// Transportation-problem distance between two histograms with an arbitrary
/// ground-cost matrix, solved exactly on a bipartite flow network.
///
/// `p` and `q` must have equal length and each sum to 1.
pub fn flow_emd(p: &[f64], q: &[f64], costs: &[Vec<f64>]) -> f64 {
    assert_eq!(p.len(), q.len(), "histogram lengths differ");
    assert_eq!(p.len(), costs.len(), "cost matrix does not match histograms");
    let n = p.len();
    let source = 2 * n;
    let sink = 2 * n + 1;
    let mut net = FlowNetwork::new(2 * n + 2);
    for i in 0..n {
        net.add_edge(source, i, p[i], 0.0);
        net.add_edge(n + i, sink, q[i], 0.0);
        for (j, &cost) in costs[i].iter().enumerate() {
            net.add_edge(i, n + j, 2.0, cost);
        }
    }
    net.min_cost_max_flow(source, sink)
}

/// Ground costs `|i - j|` for histograms whose bins sit on a unit-spaced line.
pub fn unit_spacing_costs(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| (i as f64 - j as f64).abs()).collect())
        .collect()
}

/// Ground costs of the discrete metric: 0 on the diagonal, 1 elsewhere.
pub fn discrete_metric_costs(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
        .collect()
}

/// Groups record indices by their projection onto `attrs`, using linear
/// search instead of hashing. Groups come back sorted by key.
pub fn group_indices(records: &[Vec<u8>], attrs: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: Vec<(Vec<u8>, Vec<usize>)> = Vec::new();
    for (i, record) in records.iter().enumerate() {
        let key: Vec<u8> = attrs.iter().map(|&a| record[a]).collect();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(i),
            None => groups.push((key, vec![i])),
        }
    }
    groups.sort_by(|a, b| a.0.cmp(&b.0));
    groups.into_iter().map(|(_, members)| members).collect()
}

/// Smallest group size under the projection onto `quasi`. Panics on an empty
/// record set (the measure is undefined there).
pub fn k_anonymity(records: &[Vec<u8>], quasi: &[usize]) -> usize {
    group_indices(records, quasi)
        .iter()
        .map(|g| g.len())
        .min()
        .expect("k-anonymity of an empty table")
}

fn histogram(records: &[Vec<u8>], members: &[usize], attr: usize, arity: usize) -> Vec<f64> {
    let mut counts = vec![0usize; arity];
    for &i in members {
        counts[records[i][attr] as usize] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / members.len() as f64)
        .collect()
}

/// Minimum over groups of `exp(H)` where `H` is the Shannon entropy (natural
/// log) of the sensitive attribute within the group.
pub fn entropy_l_diversity(records: &[Vec<u8>], quasi: &[usize], sensitive: usize) -> f64 {
    let mut min_l = f64::INFINITY;
    for members in group_indices(records, quasi) {
        let mut distinct: Vec<(u8, usize)> = Vec::new();
        for &i in &members {
            let v = records[i][sensitive];
            match distinct.iter_mut().find(|(val, _)| *val == v) {
                Some((_, c)) => *c += 1,
                None => distinct.push((v, 1)),
            }
        }
        let total = members.len() as f64;
        let entropy: f64 = distinct
            .iter()
            .map(|&(_, c)| {
                let p = c as f64 / total;
                -p * p.ln()
            })
            .sum();
        min_l = min_l.min(entropy.exp());
    }
    min_l
}

/// Maximum over groups of the flow-network distance between the group's
/// sensitive histogram and the whole-table histogram.
pub fn t_closeness_max(
    records: &[Vec<u8>],
    quasi: &[usize],
    sensitive: usize,
    arity: usize,
    costs: &[Vec<f64>],
) -> f64 {
    let all: Vec<usize> = (0..records.len()).collect();
    let table_hist = histogram(records, &all, sensitive, arity);
    let mut max_d: f64 = 0.0;
    for members in group_indices(records, quasi) {
        let group_hist = histogram(records, &members, sensitive, arity);
        max_d = max_d.max(flow_emd(&group_hist, &table_hist, costs));
    }
    max_d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_moves_mass_at_unit_cost() {
        // Shift everything one bin to the right: cost 1 per unit of mass.
        let p = vec![0.5, 0.5, 0.0];
        let q = vec![0.0, 0.5, 0.5];
        let d = flow_emd(&p, &q, &unit_spacing_costs(3));
        assert!((d - 1.0).abs() < 1e-9, "got {d}");
    }

    #[test]
    fn flow_is_zero_between_equal_histograms() {
        let p = vec![0.2, 0.3, 0.5];
        let d = flow_emd(&p, &p, &unit_spacing_costs(3));
        assert!(d.abs() < 1e-9, "got {d}");
    }

    #[test]
    fn flow_with_discrete_costs_is_total_variation() {
        let p = vec![0.7, 0.1, 0.2];
        let q = vec![0.2, 0.5, 0.3];
        // TV = 0.5 * (0.5 + 0.4 + 0.1) = 0.5
        let d = flow_emd(&p, &q, &discrete_metric_costs(3));
        assert!((d - 0.5).abs() < 1e-9, "got {d}");
    }

    #[test]
    fn grouping_and_k() {
        let records = vec![vec![1, 0], vec![1, 1], vec![1, 0], vec![0, 0]];
        let groups = group_indices(&records, &[0]);
        assert_eq!(groups, vec![vec![3], vec![0, 1, 2]]);
        assert_eq!(k_anonymity(&records, &[0]), 1);
        assert_eq!(k_anonymity(&records, &[]), 4);
    }

    #[test]
    fn entropy_diversity_of_uniform_pair_is_two() {
        let records = vec![vec![0, 0], vec![0, 1]];
        let l = entropy_l_diversity(&records, &[0], 1);
        assert!((l - 2.0).abs() < 1e-9, "got {l}");
    }

    #[test]
    fn t_closeness_of_single_group_is_zero() {
        let records = vec![vec![0, 0], vec![0, 1]];
        let t = t_closeness_max(&records, &[0], 1, 2, &unit_spacing_costs(2));
        assert!(t.abs() < 1e-12, "got {t}");
    }
}
