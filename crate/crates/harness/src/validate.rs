//! Checks run on a scenario before anything is simulated.

use std::collections::{BTreeMap, BTreeSet};

use mechnet_core::catalog::{MechanismKind, TypeReport};
use mechnet_core::{Exact, Real, Scalar};
use mechnet_sim::hlc::{Backbone, PolicyKind, RegistrationRule};
use mechnet_sim::ProcessId;

use crate::scenario::{CrashSpec, Issue, ScalarKind, Scenario, StrategySpec};
use crate::types::{build_mechanism, parse_report};

fn issue(line: usize, message: impl Into<String>) -> Issue {
    Issue {
        line,
        message: message.into(),
    }
}

/// Every problem found, in line order; empty when the scenario can run.
pub fn validate(s: &Scenario) -> Vec<Issue> {
    let mut issues = match s.scalar {
        ScalarKind::Exact => validate_as::<Exact>(s),
        ScalarKind::Float => validate_as::<Real>(s),
    };
    issues.sort_by_key(|i| i.line);
    issues
}

fn validate_as<S: Scalar>(s: &Scenario) -> Vec<Issue> {
    let mut out = Vec::new();
    if s.players.is_empty() {
        out.push(issue(0, "the scenario has no players"));
    }
    if s.registries.is_empty() {
        out.push(issue(0, "the scenario has no registries"));
    }
    if s.rounds == 0 {
        out.push(issue(0, "rounds must be at least 1"));
    }
    if s.max_latency == 0 {
        out.push(issue(0, "max-latency must be at least 1"));
    }
    topology(s, &mut out);

    let kind = s.mechanism;
    let mechanism = match build_mechanism::<S>(s) {
        Ok(m) => Some(m),
        Err(e) => {
            out.push(issue(0, e));
            None
        }
    };
    let n = s.players.len();
    if n > 0 && n < kind.min_players() {
        out.push(issue(
            0,
            format!("{} requires n >= {} players, found {n}", kind.tag(), kind.min_players()),
        ));
    }

    let mut owners: BTreeMap<String, String> = BTreeMap::new();
    for p in &s.players {
        let mut reports = vec![&p.announced];
        if let StrategySpec::Misreport(t) = &p.strategy {
            reports.push(t);
        }
        for r in reports {
            match parse_report::<S>(kind, r) {
                Err(e) => out.push(issue(p.line, e)),
                Ok(report) => {
                    if let Some(m) = &mechanism {
                        if let Err(e) = m.evaluate(&vec![report.clone(); kind.min_players().max(1)]) {
                            if !matches!(kind, MechanismKind::BuyPath) {
                                out.push(issue(p.line, format!("type `{r}`: {e}")));
                            }
                        }
                    }
                    if let TypeReport::EdgeCost { edge, .. } = &report {
                        if !s.edges.iter().any(|e| &e.label == edge) {
                            out.push(issue(p.line, format!("edge `{edge}` is not in the network")));
                        }
                        if r == &p.announced {
                            if let Some(other) = owners.insert(edge.clone(), p.name.clone()) {
                                out.push(issue(p.line, format!("edge `{edge}` is already owned by {other}")));
                            }
                        }
                    }
                }
            }
        }
        if p.crash_round == 0 || p.crash_round > s.rounds {
            out.push(issue(p.line, format!("crash-round {} is outside 1..={}", p.crash_round, s.rounds)));
        }
        if p.crash_round != 1 && matches!(p.crash, Some(CrashSpec::Step(_))) {
            out.push(issue(p.line, "crash-round does not apply to step crashes"));
        }
        if let Some(r) = p.skip.iter().find(|&&r| r == 0 || r > s.rounds) {
            out.push(issue(p.line, format!("skipped round {r} is outside 1..={}", s.rounds)));
        }
        if matches!(p.strategy, StrategySpec::Falsify | StrategySpec::Duplicate) && !s.policing {
            out.push(issue(p.line, "scheme falsification and duplicates need policing on"));
        }
    }

    let sequential_mechanism = kind == MechanismKind::SequentialPublicProject;
    if sequential_mechanism && s.policy != PolicyKind::Sequential {
        out.push(issue(0, "sequential-public-project needs policy sequential"));
    }
    if s.policy == PolicyKind::Sequential {
        if s.registries.len() != 1 {
            out.push(issue(0, "the sequential policy needs exactly one registry"));
        }
        if let Some(r) = s.registries.first() {
            if !matches!(r.rule, RegistrationRule::LocalQuorum { .. } | RegistrationRule::GlobalQuorum { .. }) {
                out.push(issue(r.line, "the sequential policy needs a quorum rule"));
            }
        }
    }
    out
}

fn topology(s: &Scenario, out: &mut Vec<Issue>) {
    let mut names: BTreeSet<String> = BTreeSet::new();
    let mut seen = |name: &str, line: usize, out: &mut Vec<Issue>| {
        if name == "TC" || !names.insert(name.to_string()) {
            out.push(issue(line, format!("process name `{name}` is already taken")));
        }
    };
    let mut ids: BTreeMap<String, ProcessId> = BTreeMap::new();
    let mut registries = Vec::new();
    let mut gateways = Vec::new();
    for r in &s.registries {
        seen(&r.name, r.line, out);
        let id = ProcessId(ids.len() as u64 + 1);
        ids.insert(r.name.clone(), id);
        registries.push(id);
    }
    for g in &s.gateways {
        seen(g, 0, out);
        let id = ProcessId(ids.len() as u64 + 1);
        ids.insert(g.clone(), id);
        gateways.push(id);
    }
    for p in &s.players {
        seen(&p.name, p.line, out);
    }
    let mut links = Vec::new();
    for (a, b) in &s.links {
        match (ids.get(a), ids.get(b)) {
            (Some(&x), Some(&y)) => links.push((x, y)),
            _ => out.push(issue(0, format!("link {a} {b} names a process outside the backbone"))),
        }
    }
    if let Err(e) = Backbone::new(&registries, &gateways, &links) {
        let named = ids
            .iter()
            .fold(e, |msg, (name, id)| msg.replace(&id.to_string(), name));
        out.push(issue(0, format!("backbone is not connected: {named}")));
    }
    let regions: BTreeSet<&str> = s.registries.iter().map(|r| r.region.as_str()).collect();
    for p in &s.players {
        if !s.registries.iter().any(|r| r.name == p.registry) {
            out.push(issue(p.line, format!("player {} names unknown registry `{}`", p.name, p.registry)));
        }
        if let Some(region) = &p.region {
            if !regions.contains(region.as_str()) {
                out.push(issue(p.line, format!("no registry serves region `{region}`")));
            }
        }
    }
}
