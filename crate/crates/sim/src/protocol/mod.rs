//! The distributed mechanism protocol run by players and the tax collector.

mod collector;
pub mod phases;
mod player;

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use mechnet_core::catalog::{Decision, Mechanism, MechanismKind, TypeReport};
use mechnet_core::{reduce_tax_scheme, Scalar, TaxScheme};
use serde::{Deserialize, Serialize};

pub use collector::{run_collector, CollectorConfig};
pub use player::{run_player, PlayerConfig};

use crate::hlc::Reason;
use crate::kernel::ProcessId;

pub const DECISION_TAG: &str = "DECISION";
pub const SCHEME_TAG: &str = "SCHEME";
pub const TAX_PAYMENT_TAG: &str = "TAX_PAYMENT";
pub const TAX_CLAIM_TAG: &str = "TAX_CLAIM";
pub const TOTAL_TAG: &str = "TOTAL";
pub const ROLLCALL_TAG: &str = "ROLLCALL";

/// Result of one round as computed by a player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub enum Settled<S> {
    /// Player references are alias numbers.
    Computed { decision: Decision<S>, scheme: TaxScheme<S> },
    Aborted { reason: String },
}

impl<S: Scalar> Settled<S> {
    pub fn winners(&self) -> Vec<ProcessId> {
        match self {
            Settled::Computed { decision, .. } => decision.winners().into_iter().map(|w| ProcessId(w as u64)).collect(),
            Settled::Aborted { .. } => Vec::new(),
        }
    }
}

/// Deterministic round result from the announced types of the survivors.
///
/// When a survivor set smaller than the typed set is given, the crashed
/// players are dropped and the rest recomputed, except that a public project
/// round is aborted if a crashed player was pivotal.
pub fn settle<S: Scalar>(
    mechanism: &Mechanism<S>,
    types: &BTreeMap<ProcessId, TypeReport<S>>,
    survivors: &BTreeSet<ProcessId>,
) -> Settled<S> {
    let evaluate = |ids: &[ProcessId]| {
        let reports: Vec<TypeReport<S>> = ids.iter().map(|p| types[p].clone()).collect();
        mechanism.evaluate(&reports).map(|out| (out, ids.to_vec()))
    };
    let all: Vec<ProcessId> = types.keys().copied().collect();
    let alive: Vec<ProcessId> = all.iter().copied().filter(|p| survivors.contains(p)).collect();
    if alive.len() < all.len()
        && matches!(
            mechanism.kind(),
            MechanismKind::PublicProject | MechanismKind::SequentialPublicProject
        )
    {
        if let Ok((full, ids)) = evaluate(&all) {
            let zero = S::zero();
            let pivotal = ids
                .iter()
                .zip(&full.taxes.0)
                .any(|(p, t)| !survivors.contains(p) && *t < zero && !t.is_negligible());
            if pivotal {
                return Settled::Aborted {
                    reason: "a pivotal player crashed".into(),
                };
            }
        }
    }
    match evaluate(&alive) {
        Ok((out, ids)) => {
            let to_alias = |i: usize| ids[i].0 as usize;
            Settled::Computed {
                decision: out.decision.map_players(to_alias),
                scheme: reduce_tax_scheme(&out.taxes).map_players(to_alias),
            }
        }
        Err(e) => Settled::Aborted { reason: e.to_string() },
    }
}

/// Misbehaviour injected into a player.
#[derive(Clone, Default)]
pub enum Strategy<S> {
    #[default]
    Honest,
    /// Announces a fixed type instead of the true one.
    Misreport(TypeReport<S>),
    /// Submits a scheme without its own collector entries.
    FalsifyScheme,
    /// Submits its scheme twice.
    DuplicateSubmit,
    /// Chooses the announcement from the types heard so far.
    Hook(Rc<dyn Fn(&TypeReport<S>, &BTreeMap<ProcessId, TypeReport<S>>) -> TypeReport<S>>),
}

impl<S: fmt::Debug> fmt::Debug for Strategy<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Honest => write!(f, "Honest"),
            Strategy::Misreport(t) => write!(f, "Misreport({t:?})"),
            Strategy::FalsifyScheme => write!(f, "FalsifyScheme"),
            Strategy::DuplicateSubmit => write!(f, "DuplicateSubmit"),
            Strategy::Hook(_) => write!(f, "Hook"),
        }
    }
}

/// Crash points handled inside the player; plain step crashes go to the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrashPoint {
    BeforeType,
    AfterType,
}

/// What one player saw in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundView<S> {
    pub round: u32,
    pub alias: Option<ProcessId>,
    pub rejected: Option<Reason>,
    pub types: BTreeMap<ProcessId, TypeReport<S>>,
    pub excluded: BTreeSet<ProcessId>,
    pub failure_after_types: bool,
    pub survivors: BTreeSet<ProcessId>,
    pub settled: Option<Settled<S>>,
    pub computed: bool,
    pub adopted_from: Option<ProcessId>,
    pub honest: Option<BTreeSet<ProcessId>>,
    pub paid: Vec<(String, S)>,
    pub total: Option<S>,
    pub finished: bool,
}

impl<S> RoundView<S> {
    fn new(round: u32) -> Self {
        RoundView {
            round,
            alias: None,
            rejected: None,
            types: BTreeMap::new(),
            excluded: BTreeSet::new(),
            failure_after_types: false,
            survivors: BTreeSet::new(),
            settled: None,
            computed: false,
            adopted_from: None,
            honest: None,
            paid: Vec::new(),
            total: None,
            finished: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectorRound<S> {
    pub round: u32,
    /// Signed amounts: payments positive, claims negative.
    pub entries: Vec<(ProcessId, S)>,
    pub total: S,
}

/// Observations written by the processes for the harness.
#[derive(Debug, Clone)]
pub struct Journal<S> {
    pub players: BTreeMap<ProcessId, Vec<RoundView<S>>>,
    pub collector: Vec<CollectorRound<S>>,
}

impl<S> Default for Journal<S> {
    fn default() -> Self {
        Journal {
            players: BTreeMap::new(),
            collector: Vec::new(),
        }
    }
}

pub type SharedJournal<S> = Rc<RefCell<Journal<S>>>;
