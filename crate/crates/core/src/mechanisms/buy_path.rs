//! Buying an s-t path in a network whose edges are owned by the players.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::MechanismError;
use crate::mechanisms::groves::{groves_tax, DecisionProblem, TaxVector};
use crate::scalar::{sum, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub label: String,
    pub from: String,
    pub to: String,
}

impl Edge {
    pub fn new(label: &str, from: &str, to: &str) -> Self {
        Edge {
            label: label.to_string(),
            from: from.to_string(),
            to: to.to_string(),
        }
    }
}

/// Directed graph; edge `i` is owned by player `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    pub edges: Vec<Edge>,
    pub source: String,
    pub sink: String,
}

impl Network {
    pub fn new(edges: Vec<Edge>, source: &str, sink: &str) -> Self {
        Network {
            edges,
            source: source.to_string(),
            sink: sink.to_string(),
        }
    }

    fn nodes(&self) -> Vec<String> {
        let mut nodes = BTreeSet::new();
        nodes.insert(self.source.clone());
        nodes.insert(self.sink.clone());
        for e in &self.edges {
            nodes.insert(e.from.clone());
            nodes.insert(e.to.clone());
        }
        nodes.into_iter().collect()
    }

    /// No self-loops, no parallel edges, unique labels, and an s-t path
    /// avoiding every single edge.
    pub fn validate(&self) -> Result<(), MechanismError> {
        let mut labels = BTreeSet::new();
        let mut arcs = BTreeSet::new();
        for e in &self.edges {
            if e.from == e.to {
                return Err(MechanismError::InvalidGraph(format!("edge {} is a self-loop", e.label)));
            }
            if !labels.insert(e.label.clone()) {
                return Err(MechanismError::InvalidGraph(format!("duplicate edge label {}", e.label)));
            }
            if !arcs.insert((e.from.clone(), e.to.clone())) {
                return Err(MechanismError::InvalidGraph(format!(
                    "parallel edge {} from {} to {}",
                    e.label, e.from, e.to
                )));
            }
        }
        let unit = vec![1u32; self.edges.len()];
        let unit: Vec<f64> = unit.into_iter().map(f64::from).collect();
        if shortest_path(self, &unit, None).is_none() {
            return Err(MechanismError::InvalidGraph(format!(
                "no path from {} to {}",
                self.source, self.sink
            )));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if shortest_path(self, &unit, Some(i)).is_none() {
                return Err(MechanismError::NoAlternativePath {
                    source_node: self.source.clone(),
                    sink: self.sink.clone(),
                    edge: e.label.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Shortest s-t path under `costs`, optionally with one edge removed.
/// Among equal-cost simple paths the one whose edge-label sequence is
/// alphabetically first is chosen. Returns `(cost, edge indices)`.
pub fn shortest_path<S: Scalar>(net: &Network, costs: &[S], removed: Option<usize>) -> Option<(S, Vec<usize>)> {
    let nodes = net.nodes();
    let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let live = |e: usize| Some(e) != removed;
    // Distances to the sink over reversed edges (plain Dijkstra, O(V^2)).
    let sink = index[net.sink.as_str()];
    let source = index[net.source.as_str()];
    let mut dist: Vec<Option<S>> = vec![None; nodes.len()];
    let mut done = vec![false; nodes.len()];
    dist[sink] = Some(S::zero());
    loop {
        let next = (0..nodes.len())
            .filter(|&v| !done[v] && dist[v].is_some())
            .min_by(|&a, &b| {
                dist[a]
                    .as_ref()
                    .unwrap()
                    .partial_cmp(dist[b].as_ref().unwrap())
                    .expect("costs are ordered")
            });
        let Some(v) = next else { break };
        done[v] = true;
        let dv = dist[v].clone().unwrap();
        for (e, edge) in net.edges.iter().enumerate() {
            if !live(e) || index[edge.to.as_str()] != v {
                continue;
            }
            let u = index[edge.from.as_str()];
            let cand = dv.clone() + costs[e].clone();
            if dist[u].as_ref().is_none_or(|d| cand < *d) {
                dist[u] = Some(cand);
            }
        }
    }
    let total = dist[source].clone()?;

    // Walk tight edges in label order; backtrack if a zero-cost cycle would
    // be needed to continue.
    let mut order: Vec<usize> = (0..net.edges.len()).filter(|&e| live(e)).collect();
    order.sort_by(|&a, &b| net.edges[a].label.cmp(&net.edges[b].label));
    let mut visited = vec![false; nodes.len()];
    let mut path = Vec::new();
    visited[source] = true;
    fn walk<S: Scalar>(
        net: &Network,
        costs: &[S],
        order: &[usize],
        index: &BTreeMap<&str, usize>,
        dist: &[Option<S>],
        at: usize,
        sink: usize,
        visited: &mut [bool],
        path: &mut Vec<usize>,
    ) -> bool {
        if at == sink {
            return true;
        }
        let here = dist[at].clone().expect("walk stays on reachable nodes");
        for &e in order {
            let edge = &net.edges[e];
            if index[edge.from.as_str()] != at {
                continue;
            }
            let w = index[edge.to.as_str()];
            if visited[w] {
                continue;
            }
            let Some(dw) = dist[w].clone() else { continue };
            if !(costs[e].clone() + dw).approx_eq(&here) {
                continue;
            }
            visited[w] = true;
            path.push(e);
            if walk(net, costs, order, index, dist, w, sink, visited, path) {
                return true;
            }
            path.pop();
            visited[w] = false;
        }
        false
    }
    if walk(net, costs, &order, &index, &dist, source, sink, &mut visited, &mut path) {
        Some((total, path))
    } else {
        None
    }
}

/// `v_i(p, θ_i) = -θ_i` if edge `i` lies on `p`.
#[derive(Debug, Clone)]
pub struct BuyPathProblem {
    pub network: Network,
}

impl<S: Scalar> DecisionProblem<S> for BuyPathProblem {
    type Type = S;
    type Decision = Vec<usize>;

    fn valuation(&self, player: usize, decision: &Vec<usize>, ty: &S) -> S {
        if decision.contains(&player) {
            -ty.clone()
        } else {
            S::zero()
        }
    }

    /// Maximising the others' valuation makes the excluded edge free.
    fn decide(&self, types: &[S], excluded: Option<usize>) -> Vec<usize> {
        let mut costs = types.to_vec();
        if let Some(i) = excluded {
            costs[i] = S::zero();
        }
        shortest_path(&self.network, &costs, None)
            .map(|(_, p)| p)
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuyPathOutcome<S> {
    pub path: Vec<usize>,
    pub cost: S,
    /// Claims on the collector; positive for edges on the path.
    pub taxes: TaxVector<S>,
}

/// Shortest path with claims `cost(p_{-i}) - cost(p) + θ_i` for edges on it.
pub fn buy_path<S: Scalar>(network: &Network, costs: &[S]) -> Result<BuyPathOutcome<S>, MechanismError> {
    if costs.len() != network.edges.len() {
        return Err(MechanismError::DimensionMismatch {
            expected: network.edges.len(),
            actual: costs.len(),
        });
    }
    if let Some(player) = costs.iter().position(|c| c.is_negative()) {
        return Err(MechanismError::NegativeValue { player });
    }
    let (cost, path) = shortest_path(network, costs, None).ok_or_else(|| {
        MechanismError::InvalidGraph(format!("no path from {} to {}", network.source, network.sink))
    })?;
    let mut avoiding = Vec::with_capacity(costs.len());
    for i in 0..costs.len() {
        let alt = shortest_path(network, costs, Some(i)).ok_or_else(|| MechanismError::NoAlternativePath {
            source_node: network.source.clone(),
            sink: network.sink.clone(),
            edge: network.edges[i].label.clone(),
        })?;
        avoiding.push(alt.0);
    }
    let problem = BuyPathProblem {
        network: network.clone(),
    };
    // Pivot h_i: cost of the cheapest path avoiding edge i.
    let taxes = groves_tax(&problem, costs, costs.len(), |i, _| avoiding[i].clone())?;
    debug_assert!(cost.approx_eq(&sum(path.iter().map(|&e| costs[e].clone()))));
    Ok(BuyPathOutcome { path, cost, taxes })
}
