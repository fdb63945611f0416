//! Reduced tax schemes: turning a tax vector into "who pays how much to whom".

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::mechanisms::groves::TaxVector;
use crate::scalar::Scalar;

/// Receiver of a transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Payee {
    Player(usize),
    Collector,
}

impl Payee {
    /// Legacy numeric form, `-1` for the collector.
    pub fn index(self) -> i64 {
        match self {
            Payee::Player(i) => i as i64,
            Payee::Collector => -1,
        }
    }
}

/// `payer` pays `amount` to `payee`. A negative amount towards the collector
/// is a financial claim on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Transfer<S> {
    pub payer: usize,
    pub amount: S,
    pub payee: Payee,
}

impl<S: Scalar> Transfer<S> {
    pub fn involves(&self, player: usize) -> bool {
        self.payer == player || self.payee == Payee::Player(player)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TaxScheme<S> {
    pub transfers: Vec<Transfer<S>>,
}

impl<S: Scalar> TaxScheme<S> {
    pub fn is_empty(&self) -> bool {
        self.transfers.is_empty()
    }

    /// Players named in at least one transfer, ascending.
    pub fn involved(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .transfers
            .iter()
            .flat_map(|t| {
                let mut v = vec![t.payer];
                if let Payee::Player(p) = t.payee {
                    v.push(p);
                }
                v
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Entries of `player` addressed to the collector.
    pub fn collector_entries(&self, player: usize) -> impl Iterator<Item = &Transfer<S>> {
        self.transfers
            .iter()
            .filter(move |t| t.payer == player && t.payee == Payee::Collector)
    }

    /// Signed collector intake: payments positive, claims negative.
    pub fn collector_total(&self) -> S {
        self.transfers
            .iter()
            .filter(|t| t.payee == Payee::Collector)
            .fold(S::zero(), |acc, t| acc + t.amount.clone())
    }

    /// Rewrites player indices, e.g. from list positions to process names.
    pub fn map_players<F: Fn(usize) -> usize>(&self, f: F) -> TaxScheme<S> {
        TaxScheme {
            transfers: self
                .transfers
                .iter()
                .map(|t| Transfer {
                    payer: f(t.payer),
                    amount: t.amount.clone(),
                    payee: match t.payee {
                        Payee::Player(p) => Payee::Player(f(p)),
                        Payee::Collector => Payee::Collector,
                    },
                })
                .collect(),
        }
    }
}

impl<S: Scalar> fmt::Display for TaxScheme<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.transfers.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            match t.payee {
                Payee::Player(p) => write!(f, "p{} -> p{} : {}", t.payer, p, t.amount)?,
                Payee::Collector => write!(f, "p{} -> TC : {}", t.payer, t.amount)?,
            }
        }
        Ok(())
    }
}

/// Two-pointer pairing of payers (negative taxes) with payees (positive
/// taxes), both in input order. Leftover payers pay the collector, leftover
/// payees file claims with it. Zero amounts are never emitted.
pub fn reduce_tax_scheme<S: Scalar>(taxes: &TaxVector<S>) -> TaxScheme<S> {
    let mut payers: Vec<(usize, S)> = Vec::new();
    let mut payees: Vec<(usize, S)> = Vec::new();
    for (i, t) in taxes.as_slice().iter().enumerate() {
        if t.is_negative() && !t.is_negligible() {
            payers.push((i, t.clone()));
        } else if t.is_positive() && !t.is_negligible() {
            payees.push((i, t.clone()));
        }
    }
    let mut transfers = Vec::new();
    let (mut j, mut k) = (0usize, 0usize);
    while j < payers.len() && k < payees.len() {
        let owed = payers[j].1.abs();
        if owed <= payees[k].1 {
            transfers.push(Transfer {
                payer: payers[j].0,
                amount: owed,
                payee: Payee::Player(payees[k].0),
            });
            payees[k].1 = payees[k].1.clone() + payers[j].1.clone();
            j += 1;
            if payees[k].1.is_negligible() {
                k += 1;
            }
        } else {
            // The payer settles the payee's whole remaining amount.
            transfers.push(Transfer {
                payer: payers[j].0,
                amount: payees[k].1.clone(),
                payee: Payee::Player(payees[k].0),
            });
            payers[j].1 = payers[j].1.clone() + payees[k].1.clone();
            k += 1;
            if payers[j].1.is_negligible() {
                j += 1;
            }
        }
    }
    for (payer, t) in &payers[j.min(payers.len())..] {
        transfers.push(Transfer {
            payer: *payer,
            amount: t.abs(),
            payee: Payee::Collector,
        });
    }
    for (payee, t) in &payees[k.min(payees.len())..] {
        transfers.push(Transfer {
            payer: *payee,
            amount: -t.clone(),
            payee: Payee::Collector,
        });
    }
    TaxScheme { transfers }
}

/// Settlement ledger: one balance per player plus the collector.
#[derive(Debug, Clone, PartialEq)]
pub struct Balances<S> {
    pub players: Vec<S>,
    pub collector: S,
}

impl<S: Scalar> Balances<S> {
    pub fn zeros(n: usize) -> Self {
        Balances {
            players: vec![S::zero(); n],
            collector: S::zero(),
        }
    }
}

/// Executes every transfer of `scheme` on `balances`.
pub fn apply_scheme<S: Scalar>(scheme: &TaxScheme<S>, mut balances: Balances<S>) -> Balances<S> {
    for t in &scheme.transfers {
        balances.players[t.payer] = balances.players[t.payer].clone() - t.amount.clone();
        match t.payee {
            Payee::Player(p) => balances.players[p] = balances.players[p].clone() + t.amount.clone(),
            Payee::Collector => balances.collector = balances.collector.clone() + t.amount.clone(),
        }
    }
    balances
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scheme(t: &[f64]) -> Vec<(usize, f64, i64)> {
        reduce_tax_scheme(&TaxVector(t.to_vec()))
            .transfers
            .into_iter()
            .map(|t| (t.payer, t.amount, t.payee.index()))
            .collect()
    }

    #[test]
    fn all_zero_is_empty() {
        assert!(scheme(&[0.0, 0.0, 0.0]).is_empty());
    }

    #[test]
    fn one_payer_two_payees() {
        assert_eq!(scheme(&[-5.0, 3.0, 2.0]), vec![(0, 3.0, 1), (0, 2.0, 2)]);
    }

    #[test]
    fn single_payer_pays_collector() {
        assert_eq!(scheme(&[0.0, -3.0, 0.0, 0.0, 0.0]), vec![(1, 3.0, -1)]);
    }

    #[test]
    fn leftover_payees_file_claims() {
        assert_eq!(scheme(&[3.0, 2.0]), vec![(0, -3.0, -1), (1, -2.0, -1)]);
    }

    #[test]
    fn exact_match_advances_both_sides() {
        assert_eq!(scheme(&[-2.0, 2.0, -1.0, 1.0]), vec![(0, 2.0, 1), (2, 1.0, 3)]);
    }

    #[test]
    fn balances_after_settlement() {
        let t = TaxVector(vec![0.0, -3.0, 0.0, 0.0, 0.0]);
        let b = apply_scheme(&reduce_tax_scheme(&t), Balances::zeros(5));
        assert_eq!(b.collector, 3.0);
        assert_eq!(b.players[1], -3.0);

        let t = TaxVector(vec![-5.0, 3.0, 2.0]);
        let b = apply_scheme(&reduce_tax_scheme(&t), Balances::zeros(3));
        assert_eq!(b.collector, 0.0);
        assert_eq!(b.players, t.0);
    }

    #[test]
    fn float_residue_is_not_emitted() {
        let t = TaxVector(vec![-0.3, 0.1, 0.2]);
        let s = reduce_tax_scheme(&t);
        assert!(s.transfers.iter().all(|x| !x.amount.is_negligible()));
        assert!(s.transfers.iter().all(|x| x.payee != Payee::Collector));
    }

    #[test]
    fn display_uses_collector_label() {
        let s = reduce_tax_scheme(&TaxVector(vec![0.0, -3.0]));
        assert_eq!(s.to_string(), "p1 -> TC : 3");
    }
}
