//! Single-item second-price auction, with and without redistribution.

use crate::error::MechanismError;
use crate::mechanisms::groves::{vcg_tax, DecisionProblem, TaxVector};
use crate::scalar::{kth_largest, Scalar};

/// The object goes to the highest bid; ties go to the highest index.
#[derive(Debug, Clone, Copy, Default)]
pub struct VickreyProblem;

impl<S: Scalar> DecisionProblem<S> for VickreyProblem {
    type Type = S;
    /// Index of the winning player.
    type Decision = usize;

    fn valuation(&self, player: usize, decision: &usize, ty: &S) -> S {
        if *decision == player {
            ty.clone()
        } else {
            S::zero()
        }
    }

    fn decide(&self, types: &[S], excluded: Option<usize>) -> usize {
        highest_bidder(types, excluded).unwrap_or(usize::MAX)
    }
}

/// Highest bidder among the non-excluded players, highest index on ties.
pub fn highest_bidder<S: Scalar>(bids: &[S], excluded: Option<usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, bid) in bids.iter().enumerate() {
        if Some(i) == excluded {
            continue;
        }
        match best {
            Some(b) if *bid < bids[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct VickreyOutcome<S> {
    pub winner: usize,
    pub taxes: TaxVector<S>,
}

/// Second-price auction: the winner pays the second highest bid.
pub fn vickrey<S: Scalar>(bids: &[S]) -> Result<VickreyOutcome<S>, MechanismError> {
    check_bids(bids, 1)?;
    let winner = highest_bidder(bids, None).expect("at least one bid");
    let mut taxes = TaxVector::zeros(bids.len());
    taxes.0[winner] = -kth_largest(bids, 2);
    Ok(VickreyOutcome { winner, taxes })
}

/// Same auction computed through the generic Clarke pivot.
pub fn vickrey_via_clarke<S: Scalar>(bids: &[S]) -> TaxVector<S> {
    vcg_tax(&VickreyProblem, bids)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedistributionOutcome<S> {
    pub winner: usize,
    pub taxes: TaxVector<S>,
    /// Amount that ends up with the tax collector, `-Σ t_i`.
    pub collector: S,
}

/// Vickrey auction where every player `i` receives `[θ_{-i}]_2 / n` back.
pub fn vickrey_redistribution<S: Scalar>(bids: &[S]) -> Result<RedistributionOutcome<S>, MechanismError> {
    check_bids(bids, 3)?;
    let n = S::from_count(bids.len());
    let base = vickrey(bids)?;
    let taxes: Vec<S> = (0..bids.len())
        .map(|i| {
            let others: Vec<S> = bids
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| b.clone())
                .collect();
            base.taxes[i].clone() + kth_largest(&others, 2) / n.clone()
        })
        .collect();
    let taxes = TaxVector(taxes);
    let collector = -taxes.total();
    Ok(RedistributionOutcome {
        winner: base.winner,
        taxes,
        collector,
    })
}

/// One payment `(payer, amount, payee)`; payee `None` is the tax collector.
pub type Payment<S> = (usize, S, Option<usize>);

/// The rank-based payment breakdown of the redistribution auction: the winner
/// pays `[θ]_3/n` to the runner-up, `[θ]_2/n` to every other player and the
/// remainder `(2/n)([θ]_2 - [θ]_3)` to the collector.
pub fn redistribution_payments<S: Scalar>(bids: &[S]) -> Result<Vec<Payment<S>>, MechanismError> {
    check_bids(bids, 3)?;
    let n = S::from_count(bids.len());
    let ranking = rank_order(bids);
    let second = bids[ranking[1]].clone();
    let third = bids[ranking[2]].clone();
    let winner = ranking[0];
    let mut payments = vec![(winner, third.clone() / n.clone(), Some(ranking[1]))];
    for &p in &ranking[2..] {
        payments.push((winner, second.clone() / n.clone(), Some(p)));
    }
    let two = S::from_count(2);
    payments.push((winner, two / n * (second - third), None));
    Ok(payments)
}

/// Permutation π with `θ_{π(k)} = [θ]_k`, higher index first among ties.
pub fn rank_order<S: Scalar>(bids: &[S]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.sort_by(|&a, &b| {
        bids[b]
            .partial_cmp(&bids[a])
            .expect("bids are ordered")
            .then(b.cmp(&a))
    });
    order
}

fn check_bids<S: Scalar>(bids: &[S], required: usize) -> Result<(), MechanismError> {
    if bids.len() < required {
        return Err(MechanismError::TooFewPlayers {
            required,
            actual: bids.len(),
        });
    }
    if let Some(player) = bids.iter().position(|b| b.is_negative()) {
        return Err(MechanismError::NegativeValue { player });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn q(n: i64) -> Q {
        Q::from_integer(n)
    }

    #[test]
    fn second_price_example() {
        let out = vickrey(&[1.0, 5.0, 2.0, 3.0, 2.0]).unwrap();
        assert_eq!(out.winner, 1);
        assert_eq!(out.taxes.0, vec![0.0, -3.0, 0.0, 0.0, 0.0]);
        assert_eq!(vickrey_via_clarke(&[1.0, 5.0, 2.0, 3.0, 2.0]), out.taxes);
    }

    #[test]
    fn tie_goes_to_highest_index() {
        let out = vickrey(&[7.0, 7.0]).unwrap();
        assert_eq!(out.winner, 1);
        assert_eq!(out.taxes.0, vec![0.0, -7.0]);
    }

    #[test]
    fn zero_second_bid_is_free() {
        let out = vickrey(&[4.0, 0.0]).unwrap();
        assert_eq!(out.winner, 0);
        assert_eq!(out.taxes.0, vec![0.0, 0.0]);
    }

    #[test]
    fn lone_bidder_pays_nothing() {
        let out = vickrey(&[9.0]).unwrap();
        assert_eq!((out.winner, out.taxes.0), (0, vec![0.0]));
    }

    #[test]
    fn redistribution_example_is_exact() {
        let out = vickrey_redistribution(&[q(10), q(8), q(5)]).unwrap();
        assert_eq!(out.winner, 0);
        assert_eq!(out.taxes.0, vec![Q::new(-19, 3), Q::new(5, 3), Q::new(8, 3)]);
        assert_eq!(out.collector, q(2));
    }

    #[test]
    fn redistribution_tie_and_zero() {
        let out = vickrey_redistribution(&[q(6), q(6), q(6)]).unwrap();
        assert_eq!(out.winner, 2);
        assert_eq!(out.taxes.0, vec![q(2), q(2), q(-4)]);
        assert_eq!(out.collector, q(0));
        let zero = vickrey_redistribution(&[q(0), q(0), q(0)]).unwrap();
        assert!(zero.taxes.0.iter().all(|t| *t == q(0)));
        assert_eq!(zero.collector, q(0));
    }

    #[test]
    fn redistribution_needs_three_players() {
        assert_eq!(
            vickrey_redistribution(&[1.0, 2.0]).unwrap_err(),
            MechanismError::TooFewPlayers { required: 3, actual: 2 }
        );
    }

    #[test]
    fn payment_breakdown_matches_taxes() {
        let bids = [q(10), q(8), q(5)];
        let payments = redistribution_payments(&bids).unwrap();
        let mut net = vec![q(0); 3];
        let mut collector = q(0);
        for (payer, amount, payee) in payments {
            net[payer] -= amount;
            match payee {
                Some(p) => net[p] += amount,
                None => collector += amount,
            }
        }
        let out = vickrey_redistribution(&bids).unwrap();
        assert_eq!(net, out.taxes.0);
        assert_eq!(collector, out.collector);
    }
}
