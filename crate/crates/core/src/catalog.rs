//! Mechanisms addressed by their scenario tags.
//!
//! [`Mechanism::evaluate`] takes the announced types in a fixed player order
//! and returns the decision and the tax vector in that same order. Callers
//! that work with a subset of the original players (exclusions, crashes)
//! simply pass the survivors' reports.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::MechanismError;
use crate::mechanisms::buy_path::{buy_path, Edge, Network};
use crate::mechanisms::groves::TaxVector;
use crate::mechanisms::public_project::public_project;
use crate::mechanisms::single_minded::{single_minded_interval, IntervalBid};
use crate::mechanisms::unit_demand::unit_demand;
use crate::mechanisms::vickrey::{vickrey, vickrey_redistribution};
use crate::mechanisms::walker::walker;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MechanismKind {
    Vickrey,
    VickreyRedistribution,
    PublicProject,
    UnitDemand,
    SingleMinded,
    BuyPath,
    Walker,
    SequentialPublicProject,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 8] = [
        MechanismKind::Vickrey,
        MechanismKind::VickreyRedistribution,
        MechanismKind::PublicProject,
        MechanismKind::UnitDemand,
        MechanismKind::SingleMinded,
        MechanismKind::BuyPath,
        MechanismKind::Walker,
        MechanismKind::SequentialPublicProject,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            MechanismKind::Vickrey => "vickrey",
            MechanismKind::VickreyRedistribution => "vickrey-redist",
            MechanismKind::PublicProject => "public-project",
            MechanismKind::UnitDemand => "unit-demand",
            MechanismKind::SingleMinded => "single-minded",
            MechanismKind::BuyPath => "buy-path",
            MechanismKind::Walker => "walker",
            MechanismKind::SequentialPublicProject => "sequential-public-project",
        }
    }

    /// Smallest number of participants the mechanism is defined for.
    pub fn min_players(self) -> usize {
        match self {
            MechanismKind::VickreyRedistribution | MechanismKind::Walker => 3,
            _ => 1,
        }
    }

    /// Clarke-pivot mechanisms whose taxes are all non-positive.
    pub fn is_feasible_vcg(self) -> bool {
        !matches!(
            self,
            MechanismKind::BuyPath | MechanismKind::Walker | MechanismKind::VickreyRedistribution
        )
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MechanismKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        MechanismKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| format!("unknown mechanism `{s}`"))
    }
}

/// Public mechanism definition, known to every player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub enum Mechanism<S> {
    Vickrey,
    VickreyRedistribution,
    PublicProject { cost: S },
    UnitDemand { items: usize },
    SingleMinded { items: usize },
    BuyPath { network: Network },
    Walker,
    SequentialPublicProject { cost: S },
}

/// Announced type of a single player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub enum TypeReport<S> {
    Value(S),
    Valuations(Vec<S>),
    Bundle(IntervalBid<S>),
    EdgeCost { edge: String, cost: S },
}

impl<S: Scalar> fmt::Display for TypeReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeReport::Value(v) => write!(f, "{v}"),
            TypeReport::Valuations(vs) => {
                let parts: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            TypeReport::Bundle(b) => write!(f, "{}[{},{}]", b.value, b.first, b.last),
            TypeReport::EdgeCost { edge, cost } => write!(f, "{edge}:{cost}"),
        }
    }
}

/// Chosen alternative. Player references are positions in the report list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub enum Decision<S> {
    Winner(usize),
    Build(bool),
    /// `assignment[item] = Some(player)`.
    Assignment(Vec<Option<usize>>),
    /// Winning bundles, sorted by player.
    Winners(Vec<usize>),
    /// Owners of the selected edges, in path order.
    Path(Vec<usize>),
    Quantity(S),
}

impl<S: Scalar> Decision<S> {
    /// Players that receive something under this decision.
    pub fn winners(&self) -> Vec<usize> {
        match self {
            Decision::Winner(w) => vec![*w],
            Decision::Build(_) | Decision::Quantity(_) => Vec::new(),
            Decision::Assignment(a) => {
                let mut w: Vec<usize> = a.iter().flatten().copied().collect();
                w.sort_unstable();
                w
            }
            Decision::Winners(w) => w.clone(),
            Decision::Path(p) => {
                let mut w = p.clone();
                w.sort_unstable();
                w
            }
        }
    }

    /// Rewrites player references, e.g. from report positions to player ids.
    pub fn map_players<F: Fn(usize) -> usize>(&self, f: F) -> Decision<S> {
        match self {
            Decision::Winner(w) => Decision::Winner(f(*w)),
            Decision::Build(b) => Decision::Build(*b),
            Decision::Assignment(a) => Decision::Assignment(a.iter().map(|o| o.map(&f)).collect()),
            Decision::Winners(w) => Decision::Winners(w.iter().map(|&i| f(i)).collect()),
            Decision::Path(p) => Decision::Path(p.iter().map(|&i| f(i)).collect()),
            Decision::Quantity(q) => Decision::Quantity(q.clone()),
        }
    }

    /// Human readable rendering with player names supplied by `name`.
    pub fn describe<F: Fn(usize) -> String>(&self, name: F) -> String {
        match self {
            Decision::Winner(w) => format!("winner {}", name(*w)),
            Decision::Build(true) => "build".to_string(),
            Decision::Build(false) => "no-build".to_string(),
            Decision::Assignment(a) => {
                let parts: Vec<String> = a
                    .iter()
                    .enumerate()
                    .map(|(item, o)| match o {
                        Some(p) => format!("item{}:{}", item + 1, name(*p)),
                        None => format!("item{}:-", item + 1),
                    })
                    .collect();
                format!("assign {}", parts.join(" "))
            }
            Decision::Winners(w) => {
                let parts: Vec<String> = w.iter().map(|&p| name(p)).collect();
                format!("winners {}", parts.join(" "))
            }
            Decision::Path(p) => {
                let parts: Vec<String> = p.iter().map(|&e| name(e)).collect();
                format!("path {}", parts.join(" "))
            }
            Decision::Quantity(q) => format!("quantity {q}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Outcome<S> {
    pub decision: Decision<S>,
    pub taxes: TaxVector<S>,
}

fn mismatch(kind: MechanismKind, player: usize, want: &str) -> MechanismError {
    MechanismError::TypeMismatch {
        mechanism: kind.tag(),
        detail: format!("player {player} must announce {want}"),
    }
}

impl<S: Scalar> Mechanism<S> {
    pub fn kind(&self) -> MechanismKind {
        match self {
            Mechanism::Vickrey => MechanismKind::Vickrey,
            Mechanism::VickreyRedistribution => MechanismKind::VickreyRedistribution,
            Mechanism::PublicProject { .. } => MechanismKind::PublicProject,
            Mechanism::UnitDemand { .. } => MechanismKind::UnitDemand,
            Mechanism::SingleMinded { .. } => MechanismKind::SingleMinded,
            Mechanism::BuyPath { .. } => MechanismKind::BuyPath,
            Mechanism::Walker => MechanismKind::Walker,
            Mechanism::SequentialPublicProject { .. } => MechanismKind::SequentialPublicProject,
        }
    }

    fn values(&self, reports: &[TypeReport<S>]) -> Result<Vec<S>, MechanismError> {
        reports
            .iter()
            .enumerate()
            .map(|(i, r)| match r {
                TypeReport::Value(v) => Ok(v.clone()),
                _ => Err(mismatch(self.kind(), i, "a single value")),
            })
            .collect()
    }

    /// Decision and taxes for the given announced types.
    pub fn evaluate(&self, reports: &[TypeReport<S>]) -> Result<Outcome<S>, MechanismError> {
        let kind = self.kind();
        if reports.len() < kind.min_players() {
            return Err(MechanismError::TooFewPlayers {
                required: kind.min_players(),
                actual: reports.len(),
            });
        }
        match self {
            Mechanism::Vickrey => {
                let out = vickrey(&self.values(reports)?)?;
                Ok(Outcome {
                    decision: Decision::Winner(out.winner),
                    taxes: out.taxes,
                })
            }
            Mechanism::VickreyRedistribution => {
                let out = vickrey_redistribution(&self.values(reports)?)?;
                Ok(Outcome {
                    decision: Decision::Winner(out.winner),
                    taxes: out.taxes,
                })
            }
            Mechanism::PublicProject { cost } | Mechanism::SequentialPublicProject { cost } => {
                let out = public_project(&self.values(reports)?, cost.clone())?;
                Ok(Outcome {
                    decision: Decision::Build(out.build),
                    taxes: out.taxes,
                })
            }
            Mechanism::UnitDemand { items } => {
                let rows = reports
                    .iter()
                    .enumerate()
                    .map(|(i, r)| match r {
                        TypeReport::Valuations(v) => Ok(v.clone()),
                        _ => Err(mismatch(kind, i, "one value per item")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let out = unit_demand(&rows, *items)?;
                Ok(Outcome {
                    decision: Decision::Assignment(out.assignment),
                    taxes: out.taxes,
                })
            }
            Mechanism::SingleMinded { items } => {
                let bids = reports
                    .iter()
                    .enumerate()
                    .map(|(i, r)| match r {
                        TypeReport::Bundle(b) => Ok(b.clone()),
                        _ => Err(mismatch(kind, i, "an interval bid")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let out = single_minded_interval(&bids, *items)?;
                Ok(Outcome {
                    decision: Decision::Winners(out.winners),
                    taxes: out.taxes,
                })
            }
            Mechanism::BuyPath { network } => {
                let mut edges: Vec<Edge> = Vec::with_capacity(reports.len());
                let mut costs = Vec::with_capacity(reports.len());
                for (i, r) in reports.iter().enumerate() {
                    let TypeReport::EdgeCost { edge, cost } = r else {
                        return Err(mismatch(kind, i, "the cost of its edge"));
                    };
                    let e = network
                        .edges
                        .iter()
                        .find(|e| &e.label == edge)
                        .ok_or_else(|| MechanismError::InvalidGraph(format!("unknown edge {edge}")))?;
                    edges.push(e.clone());
                    costs.push(cost.clone());
                }
                // Edges of non-participants are unavailable.
                let sub = Network::new(edges, &network.source, &network.sink);
                let out = buy_path(&sub, &costs)?;
                Ok(Outcome {
                    decision: Decision::Path(out.path),
                    taxes: out.taxes,
                })
            }
            Mechanism::Walker => {
                let out = walker(&self.values(reports)?)?;
                Ok(Outcome {
                    decision: Decision::Quantity(out.quantity),
                    taxes: out.taxes,
                })
            }
        }
    }
}
