//! Unit-demand auction: every player receives at most one item and the
//! allocation is a maximum-weight bipartite matching.

use crate::error::MechanismError;
use crate::mechanisms::groves::{vcg_tax, DecisionProblem, TaxVector};
use crate::scalar::Scalar;

/// Minimum-cost perfect assignment on a square matrix (Kuhn-Munkres with
/// potentials). Returns `assignment[row] = column`.
pub fn min_cost_assignment<S: Scalar>(cost: &[Vec<S>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based bookkeeping, column 0 is a sentinel.
    let mut u = vec![S::zero(); n + 1];
    let mut v = vec![S::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<S>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta: Option<S> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1].clone() - u[i0].clone() - v[j].clone();
                if minv[j].as_ref().is_none_or(|m| cur < *m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].clone().expect("set above");
                if delta.as_ref().is_none_or(|d| mj < *d) {
                    delta = Some(mj);
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains");
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]].clone() + delta.clone();
                    v[j] = v[j].clone() - delta.clone();
                } else if let Some(m) = minv[j].as_mut() {
                    *m = m.clone() - delta.clone();
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Maximum total weight of a matching between `players` and `items`.
pub fn max_matching_value<S: Scalar>(weights: &[Vec<S>], players: &[usize], items: &[usize]) -> S {
    let k = players.len().max(items.len());
    if k == 0 {
        return S::zero();
    }
    let weight = |r: usize, c: usize| -> S {
        if r < players.len() && c < items.len() {
            weights[players[r]][items[c]].clone()
        } else {
            S::zero()
        }
    };
    let cost: Vec<Vec<S>> = (0..k).map(|r| (0..k).map(|c| -weight(r, c)).collect()).collect();
    let assignment = min_cost_assignment(&cost);
    assignment
        .iter()
        .enumerate()
        .fold(S::zero(), |acc, (r, &c)| acc + weight(r, c))
}

/// `weights[player][item]`, all non-negative.
#[derive(Debug, Clone)]
pub struct UnitDemandProblem {
    pub items: usize,
}

impl<S: Scalar> DecisionProblem<S> for UnitDemandProblem {
    type Type = Vec<S>;
    /// `decision[item] = Some(player)`.
    type Decision = Vec<Option<usize>>;

    fn valuation(&self, player: usize, decision: &Self::Decision, ty: &Vec<S>) -> S {
        decision
            .iter()
            .position(|owner| *owner == Some(player))
            .map(|item| ty[item].clone())
            .unwrap_or_else(S::zero)
    }

    fn decide(&self, types: &[Vec<S>], excluded: Option<usize>) -> Self::Decision {
        canonical_assignment(types, self.items, excluded)
    }
}

/// Optimal assignment that is lexicographically smallest as a sequence of
/// `(item, player)` pairs. Zero-valued pairs are never listed.
pub fn canonical_assignment<S: Scalar>(weights: &[Vec<S>], items: usize, excluded: Option<usize>) -> Vec<Option<usize>> {
    let mut free_players: Vec<usize> = (0..weights.len()).filter(|&i| Some(i) != excluded).collect();
    let all_items: Vec<usize> = (0..items).collect();
    let target = max_matching_value(weights, &free_players, &all_items);
    let mut fixed = S::zero();
    let mut decision = vec![None; items];
    for item in 0..items {
        let later: Vec<usize> = (item + 1..items).collect();
        let mut chosen = None;
        for (pos, &player) in free_players.iter().enumerate() {
            let w = weights[player][item].clone();
            if w <= S::zero() {
                continue;
            }
            let rest: Vec<usize> = free_players.iter().copied().filter(|&p| p != player).collect();
            let total = fixed.clone() + w.clone() + max_matching_value(weights, &rest, &later);
            if total.approx_eq(&target) {
                chosen = Some((pos, player, w));
                break;
            }
        }
        if let Some((pos, player, w)) = chosen {
            decision[item] = Some(player);
            fixed = fixed + w;
            free_players.remove(pos);
        }
    }
    decision
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitDemandOutcome<S> {
    pub assignment: Vec<Option<usize>>,
    pub taxes: TaxVector<S>,
}

/// VCG unit-demand auction; each excluded-player re-solve is an independent run.
pub fn unit_demand<S: Scalar>(weights: &[Vec<S>], items: usize) -> Result<UnitDemandOutcome<S>, MechanismError> {
    for (player, row) in weights.iter().enumerate() {
        if row.len() != items {
            return Err(MechanismError::DimensionMismatch {
                expected: items,
                actual: row.len(),
            });
        }
        if row.iter().any(|w| w.is_negative()) {
            return Err(MechanismError::NegativeValue { player });
        }
    }
    let problem = UnitDemandProblem { items };
    let assignment = problem.decide(weights, None);
    Ok(UnitDemandOutcome {
        assignment,
        taxes: vcg_tax(&problem, weights),
    })
}
