//! Drives a scenario through the simulator and condenses the outcome.

use std::collections::{BTreeMap, BTreeSet};

use mechnet_core::catalog::{Decision, TypeReport};
use mechnet_core::{Payee, Scalar, TaxScheme};
use mechnet_sim::protocol::{CrashPoint, RoundView, Settled, Strategy};
use mechnet_sim::world::{run_world, Crash, PlayerSpec, RegistrySpec, WorldRun, WorldSpec};
use mechnet_sim::{ProcessId, RunReport};

use crate::scenario::{CrashSpec, Scenario, StrategySpec};
use crate::types::{build_mechanism, parse_report};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum RoundOutcome<S> {
    Settled {
        decision: String,
        /// `(payer, payee, amount)` with the collector as `TC`.
        transfers: Vec<(String, String, S)>,
        /// Net tax per participant; negative amounts are paid.
        taxes: Vec<(String, S)>,
    },
    Aborted(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult<S> {
    pub round: u32,
    pub participants: Vec<String>,
    pub rejected: Vec<String>,
    pub excluded: Vec<String>,
    pub crashed: Vec<String>,
    pub failure: bool,
    pub outcome: RoundOutcome<S>,
    pub total: Option<S>,
    pub computed_by: Vec<String>,
    pub honest: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct RunResult<S> {
    pub seed: u64,
    pub rounds: Vec<RoundResult<S>>,
    pub report: RunReport,
    /// Broken cross-player invariants, such as survivors disagreeing.
    pub disagreements: Vec<String>,
    pub names: BTreeMap<ProcessId, String>,
}

impl<S> RunResult<S> {
    pub fn violated(&self) -> bool {
        !self.report.violations.is_empty() || self.report.stalled || !self.disagreements.is_empty()
    }

    pub fn aborted(&self) -> bool {
        self.rounds.iter().any(|r| matches!(r.outcome, RoundOutcome::Aborted(_)))
    }

    /// 0 success, 2 invariant violation, 3 aborted round.
    pub fn exit_code(&self) -> i32 {
        if self.violated() {
            2
        } else if self.aborted() {
            3
        } else {
            0
        }
    }

    /// Trace with process names in place of ids.
    pub fn trace_lines(&self) -> Vec<String> {
        let name = |p: Option<ProcessId>| match p {
            Some(p) => self.names.get(&p).cloned().unwrap_or_else(|| p.to_string()),
            None => "-".into(),
        };
        self.report
            .trace
            .iter()
            .map(|e| {
                let phase = e.phase.map_or("-".to_string(), |p| p.to_string());
                format!(
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    e.step,
                    e.kind.as_str(),
                    name(e.source),
                    name(e.target),
                    phase,
                    e.summary
                )
            })
            .collect()
    }
}

fn world_spec<S: Scalar>(s: &Scenario, seed: u64) -> Result<WorldSpec<S>, HarnessError> {
    let invalid = |e: String| HarnessError::Invalid(vec![e]);
    let mechanism = build_mechanism::<S>(s).map_err(invalid)?;
    let players = s
        .players
        .iter()
        .map(|p| {
            let truth = parse_report::<S>(s.mechanism, &p.announced)?;
            let strategy = match &p.strategy {
                StrategySpec::Honest => Strategy::Honest,
                StrategySpec::Misreport(t) => Strategy::Misreport(parse_report::<S>(s.mechanism, t)?),
                StrategySpec::Falsify => Strategy::FalsifyScheme,
                StrategySpec::Duplicate => Strategy::DuplicateSubmit,
            };
            let round = p.crash_round - 1;
            let crash = p.crash.map(|c| match c {
                CrashSpec::Step(n) => Crash::AtStep(n),
                CrashSpec::BeforeType => Crash::At {
                    round,
                    point: CrashPoint::BeforeType,
                },
                CrashSpec::AfterType => Crash::At {
                    round,
                    point: CrashPoint::AfterType,
                },
            });
            Ok(PlayerSpec {
                name: p.name.clone(),
                registry: p.registry.clone(),
                region: s.region_of(p),
                truth,
                strategy,
                crash,
                skip_rounds: p.skip.iter().map(|r| r - 1).collect(),
                start_at: p.start,
            })
        })
        .collect::<Result<Vec<_>, String>>()
        .map_err(invalid)?;
    Ok(WorldSpec {
        seed,
        max_latency: s.max_latency,
        max_steps: s.max_steps,
        capacity: s.capacity,
        mechanism,
        registries: s
            .registries
            .iter()
            .map(|r| RegistrySpec {
                name: r.name.clone(),
                region: r.region.clone(),
                rule: r.rule.clone(),
            })
            .collect(),
        gateways: s.gateways.clone(),
        links: s.links.clone(),
        policy: s.policy,
        masking: s.masking,
        self_copy: s.self_copy,
        react_deadline: s.react_deadline,
        policing: s.policing,
        exclude_winners: s.exclude_winners,
        rounds: s.rounds,
        inspect_timeout: s.inspect_timeout,
        probe_timeout: s.probe_timeout,
        wave_interval: s.wave_interval,
        players,
    })
}

/// Runs a validated scenario; `seed` overrides the scenario seed.
pub fn run_scenario<S: Scalar>(s: &Scenario, seed: Option<u64>) -> Result<RunResult<S>, HarnessError> {
    let issues = crate::validate::validate(s);
    if !issues.is_empty() {
        return Err(HarnessError::Invalid(issues.iter().map(|i| i.to_string()).collect()));
    }
    let seed = seed.unwrap_or(s.seed);
    let spec = world_spec::<S>(s, seed)?;
    let world = run_world(&spec).map_err(|e| HarnessError::Invalid(vec![e]))?;
    let mut disagreements = Vec::new();
    let rounds = (0..s.rounds)
        .map(|r| summarize(s, &world, r, &mut disagreements))
        .collect();
    Ok(RunResult {
        seed,
        rounds,
        disagreements,
        names: world.names.clone(),
        report: world.report,
    })
}

fn declared_order(s: &Scenario, mut names: Vec<String>) -> Vec<String> {
    let position = |n: &String| s.players.iter().position(|p| &p.name == n).unwrap_or(usize::MAX);
    names.sort_by_key(position);
    names.dedup();
    names
}

fn summarize<S: Scalar>(
    s: &Scenario,
    world: &WorldRun<S>,
    round: u32,
    disagreements: &mut Vec<String>,
) -> RoundResult<S> {
    let name = |a: &ProcessId| world.name_of_alias(*a);
    let views: Vec<(&String, &RoundView<S>)> = world
        .players
        .iter()
        .filter_map(|(n, id)| {
            let v = world.journal.players.get(id)?.iter().find(|v| v.round == round)?;
            Some((n, v))
        })
        .collect();
    // Views of players that saw the whole round as survivors.
    let survivors: Vec<&RoundView<S>> = views
        .iter()
        .map(|(_, v)| *v)
        .filter(|v| v.finished && v.alias.is_some_and(|a| v.survivors.contains(&a)))
        .collect();
    let rejected = views
        .iter()
        .filter(|(_, v)| v.rejected.is_some())
        .map(|(n, _)| (*n).clone())
        .collect();
    let computed_by = views
        .iter()
        .filter(|(_, v)| v.computed && v.settled.is_some())
        .map(|(n, _)| (*n).clone())
        .collect();

    let label = format!("round {}", round + 1);
    let reference = survivors.first().copied();
    for v in &survivors {
        if v.settled != reference.and_then(|r| r.settled.clone()) {
            disagreements.push(format!("{label}: survivors hold different outcomes"));
            break;
        }
    }
    for v in &survivors {
        if v.total != reference.and_then(|r| r.total.clone()) {
            disagreements.push(format!("{label}: survivors saw different totals"));
            break;
        }
    }

    let (participants, excluded, crashed, failure, outcome, honest) = match reference {
        Some(v) => {
            let typed: BTreeSet<ProcessId> = v.types.keys().copied().collect();
            let outcome = match &v.settled {
                Some(Settled::Computed { decision, scheme }) => {
                    RoundOutcome::Settled {
                        decision: describe(decision, &v.types, &name),
                        transfers: scheme
                            .transfers
                            .iter()
                            .map(|t| {
                                let payee = match t.payee {
                                    Payee::Collector => "TC".to_string(),
                                    Payee::Player(p) => name(&ProcessId(p as u64)),
                                };
                                (name(&ProcessId(t.payer as u64)), payee, t.amount.clone())
                            })
                            .collect(),
                        taxes: v.survivors.iter().map(|a| (name(a), net_tax(scheme, *a))).collect(),
                    }
                }
                Some(Settled::Aborted { reason }) => RoundOutcome::Aborted(reason.clone()),
                None => RoundOutcome::Aborted("no outcome".into()),
            };
            (
                v.survivors.iter().map(name).collect(),
                v.excluded.iter().map(name).collect(),
                typed.difference(&v.survivors).map(name).collect(),
                // A crash before typing shows up only as an exclusion.
                v.failure_after_types || !v.excluded.is_empty(),
                outcome,
                v.honest.as_ref().map(|h| h.iter().map(name).collect()),
            )
        }
        None => (
            Vec::new(),
            Vec::new(),
            Vec::new(),
            false,
            RoundOutcome::Aborted("no participants".into()),
            None,
        ),
    };
    let total = world
        .journal
        .collector
        .iter()
        .find(|c| c.round == round)
        .map(|c| c.total.clone());
    RoundResult {
        round: round + 1,
        participants: declared_order(s, participants),
        rejected: declared_order(s, rejected),
        excluded: declared_order(s, excluded),
        crashed: declared_order(s, crashed),
        failure,
        outcome,
        total,
        computed_by: declared_order(s, computed_by),
        honest: honest.map(|h| declared_order(s, h)),
    }
}

/// Net tax of `alias` under the scheme; negative when it pays.
fn net_tax<S: Scalar>(scheme: &TaxScheme<S>, alias: ProcessId) -> S {
    let me = alias.0 as usize;
    scheme.transfers.iter().fold(S::zero(), |acc, t| {
        let mut acc = acc;
        if t.payer == me {
            acc = acc - t.amount.clone();
        }
        if t.payee == Payee::Player(me) {
            acc = acc + t.amount.clone();
        }
        acc
    })
}

fn describe<S: Scalar>(
    decision: &Decision<S>,
    types: &BTreeMap<ProcessId, TypeReport<S>>,
    name: &dyn Fn(&ProcessId) -> String,
) -> String {
    match decision {
        Decision::Path(owners) => {
            let hops: Vec<String> = owners
                .iter()
                .map(|&o| {
                    let a = ProcessId(o as u64);
                    match types.get(&a) {
                        Some(TypeReport::EdgeCost { edge, .. }) => format!("{edge}:{}", name(&a)),
                        _ => name(&a),
                    }
                })
                .collect();
            format!("path {}", hops.join(" "))
        }
        d => d.describe(|a| name(&ProcessId(a as u64))),
    }
}
