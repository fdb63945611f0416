//! Generic Groves and Clarke (VCG) tax machinery.

use serde::{Deserialize, Serialize};

use crate::error::MechanismError;
use crate::scalar::{sum, Scalar};

/// Per-player taxes. Negative entries are payments, positive entries are
/// amounts owed to the player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TaxVector<S>(pub Vec<S>);

impl<S: Scalar> TaxVector<S> {
    pub fn zeros(n: usize) -> Self {
        TaxVector(vec![S::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> S {
        sum(self.0.iter().cloned())
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }
}

impl<S> std::ops::Index<usize> for TaxVector<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

/// A decision problem with an efficient decision rule.
///
/// `decide(types, excluded)` must return a decision maximising the summed
/// valuation of every player except `excluded`. With `excluded = None` this
/// is the efficient rule `f`; with `Some(i)` it realises the maximisation
/// inside the Clarke pivot.
pub trait DecisionProblem<S: Scalar> {
    type Type: Clone;
    type Decision: Clone + PartialEq + std::fmt::Debug;

    fn valuation(&self, player: usize, decision: &Self::Decision, ty: &Self::Type) -> S;

    fn decide(&self, types: &[Self::Type], excluded: Option<usize>) -> Self::Decision;

    /// Sum of valuations of all players except `excluded` under `decision`.
    fn welfare(&self, decision: &Self::Decision, types: &[Self::Type], excluded: Option<usize>) -> S {
        sum(types
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != excluded)
            .map(|(j, ty)| self.valuation(j, decision, ty)))
    }
}

/// `t_i = h_i(θ'_{-i}) + Σ_{j≠i} v_j(f(θ'), θ'_j)`.
///
/// `pivot(i, types)` plays the role of `h_i`; it receives the full profile
/// but must only depend on the entries other than `i`.
pub fn groves_tax<S, P, H>(
    problem: &P,
    types: &[P::Type],
    expected_players: usize,
    mut pivot: H,
) -> Result<TaxVector<S>, MechanismError>
where
    S: Scalar,
    P: DecisionProblem<S>,
    H: FnMut(usize, &[P::Type]) -> S,
{
    if types.len() != expected_players {
        return Err(MechanismError::DimensionMismatch {
            expected: expected_players,
            actual: types.len(),
        });
    }
    let decision = problem.decide(types, None);
    let taxes = (0..types.len())
        .map(|i| pivot(i, types) + problem.welfare(&decision, types, Some(i)))
        .collect();
    Ok(TaxVector(taxes))
}

/// Clarke pivot `h_i = -max_d Σ_{j≠i} v_j(d, θ'_j)`.
pub fn clarke_pivot<S, P>(problem: &P, types: &[P::Type], player: usize) -> S
where
    S: Scalar,
    P: DecisionProblem<S>,
{
    let best = problem.decide(types, Some(player));
    -problem.welfare(&best, types, Some(player))
}

/// Groves taxes with the Clarke pivot (the VCG mechanism).
pub fn vcg_tax<S, P>(problem: &P, types: &[P::Type]) -> TaxVector<S>
where
    S: Scalar,
    P: DecisionProblem<S>,
{
    groves_tax(problem, types, types.len(), |i, t| clarke_pivot(problem, t, i))
        .expect("profile length is the player count")
}

/// Quasi-linear utility `v_i(d, θ_i) + t_i` of `player` with true type
/// `truth` when the announced profile is `announced`.
pub fn utility<S, P, G>(problem: &P, announced: &[P::Type], truth: &P::Type, player: usize, tax_rule: G) -> S
where
    S: Scalar,
    P: DecisionProblem<S>,
    G: Fn(&[P::Type]) -> TaxVector<S>,
{
    let decision = problem.decide(announced, None);
    let taxes = tax_rule(announced);
    problem.valuation(player, &decision, truth) + taxes[player].clone()
}
