//! Discrete public project with equal cost shares.

use crate::error::MechanismError;
use crate::mechanisms::groves::{vcg_tax, DecisionProblem, TaxVector};
use crate::scalar::Scalar;

/// `v_i(d, θ_i) = d (θ_i - c/n)` with `D = {0, 1}`.
#[derive(Debug, Clone)]
pub struct PublicProjectProblem<S> {
    pub cost: S,
    pub players: usize,
}

impl<S: Scalar> PublicProjectProblem<S> {
    fn share(&self) -> S {
        self.cost.clone() / S::from_count(self.players)
    }
}

impl<S: Scalar> DecisionProblem<S> for PublicProjectProblem<S> {
    type Type = S;
    type Decision = bool;

    fn valuation(&self, _player: usize, decision: &bool, ty: &S) -> S {
        if *decision {
            ty.clone() - self.share()
        } else {
            S::zero()
        }
    }

    fn decide(&self, types: &[S], excluded: Option<usize>) -> bool {
        let built = self.welfare(&true, types, excluded);
        built >= S::zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublicProjectOutcome<S> {
    pub build: bool,
    pub taxes: TaxVector<S>,
}

/// Build iff `Σ(θ_i - c/n) ≥ 0`; Clarke taxes over `D = {0, 1}`.
pub fn public_project<S: Scalar>(types: &[S], cost: S) -> Result<PublicProjectOutcome<S>, MechanismError> {
    if types.is_empty() {
        return Err(MechanismError::TooFewPlayers { required: 1, actual: 0 });
    }
    if let Some(player) = types.iter().position(|t| t.is_negative()) {
        return Err(MechanismError::NegativeValue { player });
    }
    let problem = PublicProjectProblem {
        cost: cost.clone(),
        players: types.len(),
    };
    let build = problem.decide(types, None);
    Ok(PublicProjectOutcome {
        build,
        taxes: vcg_tax(&problem, types),
    })
}
