//! Exhaustive-search oracles and random instance generators.
#![allow(dead_code)]

use mechnet_core::catalog::{Decision, Mechanism, TypeReport};
use mechnet_core::{Edge, IntervalBid, Network};
use rand::Rng;

/// Maximum welfare and optimal assignment by trying every partial injection.
/// Ties go to the smallest `(item, player)` pair sequence.
pub fn unit_demand(weights: &[Vec<f64>], items: usize, excluded: Option<usize>) -> (f64, Vec<Option<usize>>) {
    fn go(
        weights: &[Vec<f64>],
        items: usize,
        excluded: Option<usize>,
        item: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<Option<usize>>,
        best: &mut Option<(f64, Vec<(usize, usize)>, Vec<Option<usize>>)>,
    ) {
        if item == items {
            let total: f64 = cur.iter().enumerate().filter_map(|(it, p)| p.map(|p| weights[p][it])).sum();
            let pairs: Vec<(usize, usize)> = cur.iter().enumerate().filter_map(|(it, p)| p.map(|p| (it, p))).collect();
            let better = match best {
                None => true,
                Some((w, s, _)) => total > *w || (total == *w && pairs < *s),
            };
            if better {
                *best = Some((total, pairs, cur.clone()));
            }
            return;
        }
        cur[item] = None;
        go(weights, items, excluded, item + 1, used, cur, best);
        for p in 0..weights.len() {
            if used[p] || Some(p) == excluded || weights[p][item] <= 0.0 {
                continue;
            }
            used[p] = true;
            cur[item] = Some(p);
            go(weights, items, excluded, item + 1, used, cur, best);
            cur[item] = None;
            used[p] = false;
        }
    }
    let mut best = None;
    go(weights, items, excluded, 0, &mut vec![false; weights.len()], &mut vec![None; items], &mut best);
    let (w, _, a) = best.expect("the empty assignment always exists");
    (w, a)
}

pub fn unit_demand_taxes(weights: &[Vec<f64>], items: usize) -> Vec<f64> {
    let (total, assignment) = unit_demand(weights, items, None);
    (0..weights.len())
        .map(|i| {
            let own: f64 = assignment
                .iter()
                .enumerate()
                .filter(|(_, p)| **p == Some(i))
                .map(|(it, _)| weights[i][it])
                .sum();
            let (without, _) = unit_demand(weights, items, Some(i));
            (total - own) - without
        })
        .collect()
}

/// Best non-overlapping winner set over all subsets, lexicographically
/// smallest on ties. Only positive bids may win.
pub fn single_minded(bids: &[IntervalBid<f64>], excluded: Option<usize>) -> (f64, Vec<usize>) {
    let n = bids.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u32..(1 << n) {
        let set: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if set.iter().any(|&i| Some(i) == excluded || bids[i].value <= 0.0) {
            continue;
        }
        let disjoint = set.iter().enumerate().all(|(a, &i)| {
            set[a + 1..]
                .iter()
                .all(|&j| bids[i].last < bids[j].first || bids[j].last < bids[i].first)
        });
        if !disjoint {
            continue;
        }
        let total: f64 = set.iter().map(|&i| bids[i].value).sum();
        let better = match &best {
            None => true,
            Some((w, s)) => total > *w || (total == *w && set < *s),
        };
        if better {
            best = Some((total, set));
        }
    }
    best.expect("the empty set is feasible")
}

pub fn single_minded_taxes(bids: &[IntervalBid<f64>]) -> Vec<f64> {
    let (total, winners) = single_minded(bids, None);
    (0..bids.len())
        .map(|i| {
            let own = if winners.contains(&i) { bids[i].value } else { 0.0 };
            (total - own) - single_minded(bids, Some(i)).0
        })
        .collect()
}

/// Every simple s-t path as a list of edge indices.
pub fn all_paths(net: &Network, removed: Option<usize>) -> Vec<Vec<usize>> {
    fn go(net: &Network, removed: Option<usize>, at: &str, seen: &mut Vec<String>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if at == net.sink {
            out.push(cur.clone());
            return;
        }
        for (i, e) in net.edges.iter().enumerate() {
            if Some(i) == removed || e.from != at || seen.contains(&e.to) {
                continue;
            }
            seen.push(e.to.clone());
            cur.push(i);
            go(net, removed, &e.to, seen, cur, out);
            cur.pop();
            seen.pop();
        }
    }
    let mut out = Vec::new();
    go(net, removed, &net.source, &mut vec![net.source.clone()], &mut Vec::new(), &mut out);
    out
}

/// Cheapest path, alphabetically first label sequence on ties.
pub fn cheapest_path(net: &Network, costs: &[f64], removed: Option<usize>) -> Option<(f64, Vec<usize>)> {
    all_paths(net, removed)
        .into_iter()
        .map(|p| (p.iter().map(|&e| costs[e]).sum::<f64>(), p))
        .min_by(|(ca, pa), (cb, pb)| {
            ca.partial_cmp(cb).unwrap().then_with(|| {
                let la: Vec<&str> = pa.iter().map(|&e| net.edges[e].label.as_str()).collect();
                let lb: Vec<&str> = pb.iter().map(|&e| net.edges[e].label.as_str()).collect();
                la.cmp(&lb)
            })
        })
}

pub fn buy_path_claims(net: &Network, costs: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let (cost, path) = cheapest_path(net, costs, None).expect("connected");
    let claims = (0..costs.len())
        .map(|i| {
            if path.contains(&i) {
                cheapest_path(net, costs, Some(i)).expect("alternative").0 - cost + costs[i]
            } else {
                0.0
            }
        })
        .collect();
    (path, claims)
}

pub fn random_network<R: Rng>(rng: &mut R, max_edges: usize) -> Network {
    loop {
        let nodes = ["s", "a", "b", "c", "t"];
        let k = rng.gen_range(3..=max_edges);
        let mut edges: Vec<Edge> = Vec::new();
        for _ in 0..k * 3 {
            if edges.len() == k {
                break;
            }
            let from = nodes[rng.gen_range(0..nodes.len() - 1)];
            let to = nodes[rng.gen_range(1..nodes.len())];
            if from == to || edges.iter().any(|e| e.from == from && e.to == to) {
                continue;
            }
            let label = format!("e{}", (b'a' + edges.len() as u8) as char);
            edges.push(Edge::new(&label, from, to));
        }
        // Shuffle labels so alphabetical order differs from insertion order.
        let mut labels: Vec<String> = edges.iter().map(|e| e.label.clone()).collect();
        for i in (1..labels.len()).rev() {
            labels.swap(i, rng.gen_range(0..=i));
        }
        for (e, l) in edges.iter_mut().zip(labels) {
            e.label = l;
        }
        let net = Network::new(edges, "s", "t");
        if net.validate().is_ok() {
            return net;
        }
    }
}

pub fn random_bids<R: Rng>(rng: &mut R, n: usize, items: usize) -> Vec<IntervalBid<f64>> {
    (0..n)
        .map(|_| {
            let first = rng.gen_range(1..=items);
            let last = rng.gen_range(first..=items);
            IntervalBid::new(first, last, rng.gen_range(0..=10) as f64)
        })
        .collect()
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, items: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..items).map(|_| rng.gen_range(0..=6) as f64).collect())
        .collect()
}

/// True valuation of `player` for a decision, given its true report.
pub fn true_value(
    mech: &Mechanism<f64>,
    decision: &Decision<f64>,
    player: usize,
    truth: &TypeReport<f64>,
    announced: &TypeReport<f64>,
    n: usize,
) -> f64 {
    match (mech, decision, truth) {
        (_, Decision::Winner(w), TypeReport::Value(v)) => {
            if *w == player {
                *v
            } else {
                0.0
            }
        }
        (Mechanism::PublicProject { cost } | Mechanism::SequentialPublicProject { cost }, Decision::Build(b), TypeReport::Value(v)) => {
            if *b {
                v - cost / n as f64
            } else {
                0.0
            }
        }
        (_, Decision::Assignment(a), TypeReport::Valuations(vs)) => a
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == Some(player))
            .map(|(it, _)| vs[it])
            .sum(),
        (_, Decision::Winners(_), TypeReport::Bundle(b)) => {
            // Only the announced bundle can be won, which is worth the true
            // value iff it covers the true interval.
            let TypeReport::Bundle(won) = announced else {
                panic!("bundle expected")
            };
            if decision.winners().contains(&player) && won.first <= b.first && b.last <= won.last {
                b.value
            } else {
                0.0
            }
        }
        (_, Decision::Path(p), TypeReport::EdgeCost { cost, .. }) => {
            if p.contains(&player) {
                -cost
            } else {
                0.0
            }
        }
        other => panic!("no valuation for {other:?}"),
    }
}

/// `u_i = v_i(f(θ'), θ_i) + t_i(θ')` when player `i` announces `lie`.
pub fn utility(mech: &Mechanism<f64>, truth: &[TypeReport<f64>], player: usize, lie: &TypeReport<f64>) -> f64 {
    let mut announced = truth.to_vec();
    announced[player] = lie.clone();
    let out = mech.evaluate(&announced).expect("valid instance");
    true_value(mech, &out.decision, player, &truth[player], lie, truth.len()) + out.taxes[player]
}
