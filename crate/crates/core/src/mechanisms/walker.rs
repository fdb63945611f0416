//! Walker's ring mechanism for a continuous public good.

use serde::{Deserialize, Serialize};

use crate::error::MechanismError;
use crate::mechanisms::groves::TaxVector;
use crate::scalar::{sum, Scalar};

/// Test valuation `v_i(q) = α q - β q² - q c / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct WalkerValuation<S> {
    pub alpha: S,
    pub beta: S,
}

impl<S: Scalar> WalkerValuation<S> {
    pub fn value(&self, quantity: &S, unit_cost: &S, players: usize) -> S {
        let benefit = self.alpha.clone() * quantity.clone() - self.beta.clone() * quantity.clone() * quantity.clone();
        benefit - quantity.clone() * unit_cost.clone() / S::from_count(players)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkerOutcome<S> {
    pub quantity: S,
    pub taxes: TaxVector<S>,
}

/// `q = Σ x_j`, `t_i = (x_{i+1} - x_{i-1}) q` with ring indices.
pub fn walker<S: Scalar>(amounts: &[S]) -> Result<WalkerOutcome<S>, MechanismError> {
    let n = amounts.len();
    if n < 3 {
        return Err(MechanismError::TooFewPlayers { required: 3, actual: n });
    }
    let quantity = sum(amounts.iter().cloned());
    let taxes = (0..n)
        .map(|i| {
            let right = amounts[(i + 1) % n].clone();
            let left = amounts[(i + n - 1) % n].clone();
            (right - left) * quantity.clone()
        })
        .collect();
    Ok(WalkerOutcome {
        quantity,
        taxes: TaxVector(taxes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_taxes_telescope() {
        let out = walker(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(out.quantity, 6.0);
        assert_eq!(out.taxes.0, vec![-6.0, 12.0, -6.0]);
        assert_eq!(out.taxes.total(), 0.0);
    }

    #[test]
    fn symmetric_and_zero_profiles() {
        assert_eq!(walker(&[1.0, 1.0, 1.0]).unwrap().taxes.0, vec![0.0; 3]);
        let zero = walker(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(zero.quantity, 0.0);
        assert_eq!(zero.taxes.0, vec![0.0; 3]);
    }

    #[test]
    fn needs_three_players() {
        assert!(walker(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn quadratic_valuation() {
        let v = WalkerValuation { alpha: 4.0, beta: 0.5 };
        // 4*2 - 0.5*4 - 2*3/3
        assert_eq!(v.value(&2.0, &3.0, 3), 4.0);
    }
}
