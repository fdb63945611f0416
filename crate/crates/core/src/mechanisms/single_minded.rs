//! Single-minded auction where each bundle is a consecutive block of items.
//!
//! Winner determination is weighted interval scheduling, solved by dynamic
//! programming over the item line.

use serde::{Deserialize, Serialize};

use crate::error::MechanismError;
use crate::mechanisms::groves::{vcg_tax, DecisionProblem, TaxVector};
use crate::scalar::Scalar;

/// Bid for the items `first..=last` (1-based, inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct IntervalBid<S> {
    pub first: usize,
    pub last: usize,
    pub value: S,
}

impl<S> IntervalBid<S> {
    pub fn new(first: usize, last: usize, value: S) -> Self {
        IntervalBid { first, last, value }
    }

    fn overlaps(&self, other: &Self) -> bool {
        self.first <= other.last && other.first <= self.last
    }
}

#[derive(Debug, Clone)]
pub struct SingleMindedProblem {
    pub items: usize,
}

impl<S: Scalar> DecisionProblem<S> for SingleMindedProblem {
    type Type = IntervalBid<S>;
    /// Sorted indices of the winning players.
    type Decision = Vec<usize>;

    fn valuation(&self, player: usize, decision: &Vec<usize>, ty: &IntervalBid<S>) -> S {
        if decision.contains(&player) {
            ty.value.clone()
        } else {
            S::zero()
        }
    }

    fn decide(&self, types: &[IntervalBid<S>], excluded: Option<usize>) -> Vec<usize> {
        canonical_winners(types, self.items, excluded)
    }
}

/// Best welfare over bids in `allowed` whose intervals avoid `blocked` items.
pub fn best_welfare<S: Scalar>(bids: &[IntervalBid<S>], items: usize, allowed: &[bool], blocked: &[bool]) -> S {
    // best[k]: best welfare using items 1..=k.
    let mut best = vec![S::zero(); items + 1];
    for k in 1..=items {
        let mut value = best[k - 1].clone();
        for (i, bid) in bids.iter().enumerate() {
            if !allowed[i] || bid.last != k || bid.value <= S::zero() {
                continue;
            }
            if (bid.first..=bid.last).any(|item| blocked[item]) {
                continue;
            }
            let with = best[bid.first - 1].clone() + bid.value.clone();
            if with > value {
                value = with;
            }
        }
        best[k] = value;
    }
    best[items].clone()
}

/// Optimal winner set, lexicographically smallest among equal-welfare sets.
/// Only bids with positive value can win.
pub fn canonical_winners<S: Scalar>(bids: &[IntervalBid<S>], items: usize, excluded: Option<usize>) -> Vec<usize> {
    let mut allowed: Vec<bool> = (0..bids.len()).map(|i| Some(i) != excluded).collect();
    let mut blocked = vec![false; items + 1];
    let target = best_welfare(bids, items, &allowed, &blocked);
    let mut fixed = S::zero();
    let mut winners = Vec::new();
    for i in 0..bids.len() {
        if !allowed[i] {
            continue;
        }
        allowed[i] = false;
        let bid = &bids[i];
        let fits = bid.value > S::zero() && !(bid.first..=bid.last).any(|item| blocked[item]);
        if fits {
            for item in bid.first..=bid.last {
                blocked[item] = true;
            }
            let total = fixed.clone() + bid.value.clone() + best_welfare(bids, items, &allowed, &blocked);
            if total.approx_eq(&target) {
                fixed = fixed + bid.value.clone();
                winners.push(i);
                continue;
            }
            for item in bid.first..=bid.last {
                blocked[item] = false;
            }
        }
    }
    debug_assert!(winners
        .iter()
        .enumerate()
        .all(|(a, &i)| winners[a + 1..].iter().all(|&j| !bids[i].overlaps(&bids[j]))));
    winners
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleMindedOutcome<S> {
    /// Sorted indices of winning players.
    pub winners: Vec<usize>,
    pub taxes: TaxVector<S>,
}

pub fn validate_bids<S: Scalar>(bids: &[IntervalBid<S>], items: usize) -> Result<(), MechanismError> {
    for (player, bid) in bids.iter().enumerate() {
        if bid.first < 1 || bid.first > bid.last || bid.last > items {
            return Err(MechanismError::MalformedInterval {
                first: bid.first,
                last: bid.last,
                items,
            });
        }
        if bid.value.is_negative() {
            return Err(MechanismError::NegativeValue { player });
        }
    }
    Ok(())
}

/// VCG single-minded interval auction over `items` items.
pub fn single_minded_interval<S: Scalar>(
    bids: &[IntervalBid<S>],
    items: usize,
) -> Result<SingleMindedOutcome<S>, MechanismError> {
    validate_bids(bids, items)?;
    let problem = SingleMindedProblem { items };
    Ok(SingleMindedOutcome {
        winners: problem.decide(bids, None),
        taxes: vcg_tax(&problem, bids),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn bid(first: usize, last: usize, value: i64) -> IntervalBid<Q> {
        IntervalBid::new(first, last, Q::from_integer(value))
    }

    #[test]
    fn three_item_instance_with_five_bids() {
        let bids = [bid(1, 2, 20), bid(3, 3, 50), bid(2, 2, 32), bid(2, 3, 60), bid(1, 1, 19)];
        let out = single_minded_interval(&bids, 3).unwrap();
        assert_eq!(out.winners, vec![1, 2, 4]);
        let expected: Vec<Q> = [0, -28, -10, 0, 0].iter().map(|&v| Q::from_integer(v)).collect();
        assert_eq!(out.taxes.0, expected);
    }

    #[test]
    fn full_range_single_bidder() {
        let out = single_minded_interval(&[bid(1, 4, 9)], 4).unwrap();
        assert_eq!(out.winners, vec![0]);
        assert_eq!(out.taxes.0, vec![Q::from_integer(0)]);
    }

    #[test]
    fn overlapping_pair() {
        let out = single_minded_interval(&[bid(1, 2, 10), bid(2, 3, 6)], 3).unwrap();
        assert_eq!(out.winners, vec![0]);
        assert_eq!(out.taxes.0, vec![Q::from_integer(-6), Q::from_integer(0)]);
    }

    #[test]
    fn equal_welfare_prefers_smaller_index_set() {
        // {0} and {1, 2} both reach 10.
        let out = single_minded_interval(&[bid(1, 2, 10), bid(1, 1, 5), bid(2, 2, 5)], 2).unwrap();
        assert_eq!(out.winners, vec![0]);
    }

    #[test]
    fn malformed_intervals_are_rejected() {
        assert!(single_minded_interval(&[bid(2, 1, 3)], 3).is_err());
        assert!(single_minded_interval(&[bid(1, 4, 3)], 3).is_err());
        assert!(single_minded_interval(&[bid(0, 1, 3)], 3).is_err());
    }
}
