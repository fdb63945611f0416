//! Inline notation for numbers, announced types and mechanisms.

use mechnet_core::catalog::{Mechanism, MechanismKind, TypeReport};
use mechnet_core::{Edge, IntervalBid, Network, Scalar};

use crate::scenario::Scenario;

/// Integers, fractions `a/b` and decimals, in any scalar type.
pub fn parse_scalar<S: Scalar>(s: &str) -> Result<S, String> {
    if let Ok(v) = s.parse::<S>() {
        return Ok(v);
    }
    let bad = || format!("`{s}` is not a number");
    if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.parse().map_err(|_| bad())?;
        let b: i64 = b.parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(S::from_i64(a).ok_or_else(bad)? / S::from_i64(b).ok_or_else(bad)?);
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = format!("{int}{frac}");
        let n: i64 = digits.parse().map_err(|_| bad())?;
        let scale = 10i64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
        return Ok(S::from_i64(n).ok_or_else(bad)? / S::from_i64(scale).ok_or_else(bad)?);
    }
    Err(bad())
}

fn list<S: Scalar>(s: &str) -> Result<Vec<S>, String> {
    s.split(',').map(|v| parse_scalar(v.trim())).collect()
}

/// Reads a type in the notation used by the mechanism: `7`, `(1,2,3)`,
/// `20[1,2]` or `edge:cost`.
pub fn parse_report<S: Scalar>(kind: MechanismKind, s: &str) -> Result<TypeReport<S>, String> {
    match kind {
        MechanismKind::UnitDemand => {
            let inner = s
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| format!("`{s}` is not a valuation list like (1,2,3)"))?;
            Ok(TypeReport::Valuations(list(inner)?))
        }
        MechanismKind::SingleMinded => {
            let (value, rest) = s
                .split_once('[')
                .ok_or_else(|| format!("`{s}` is not an interval bid like 20[1,2]"))?;
            let bounds = rest
                .strip_suffix(']')
                .ok_or_else(|| format!("`{s}` is missing `]`"))?;
            let ends: Vec<usize> = bounds
                .split(',')
                .map(|b| b.trim().parse().map_err(|_| format!("bad item `{b}` in `{s}`")))
                .collect::<Result<_, _>>()?;
            let (first, last) = match ends.as_slice() {
                [a] => (*a, *a),
                [a, b] => (*a, *b),
                _ => return Err(format!("`{s}` needs one or two item numbers")),
            };
            Ok(TypeReport::Bundle(IntervalBid::new(first, last, parse_scalar(value)?)))
        }
        MechanismKind::BuyPath => {
            let (edge, cost) = s
                .split_once(':')
                .ok_or_else(|| format!("`{s}` is not an edge cost like sa:3"))?;
            Ok(TypeReport::EdgeCost {
                edge: edge.to_string(),
                cost: parse_scalar(cost)?,
            })
        }
        _ => Ok(TypeReport::Value(parse_scalar(s)?)),
    }
}

/// Splits an inline type list on whitespace or `;`.
pub fn split_types(s: &str) -> Vec<&str> {
    s.split(|c: char| c.is_whitespace() || c == ';').filter(|t| !t.is_empty()).collect()
}

pub fn network(scenario: &Scenario) -> Option<Network> {
    let edges = scenario.edges.iter().map(|e| Edge::new(&e.label, &e.from, &e.to)).collect();
    Some(Network::new(edges, scenario.source.as_deref()?, scenario.sink.as_deref()?))
}

pub fn build_mechanism<S: Scalar>(scenario: &Scenario) -> Result<Mechanism<S>, String> {
    let kind = scenario.mechanism;
    let cost = || -> Result<S, String> {
        let c = scenario.cost.as_deref().ok_or_else(|| format!("{} needs `cost`", kind.tag()))?;
        parse_scalar(c)
    };
    let items = || scenario.items.filter(|&m| m > 0).ok_or_else(|| format!("{} needs `items`", kind.tag()));
    Ok(match kind {
        MechanismKind::Vickrey => Mechanism::Vickrey,
        MechanismKind::VickreyRedistribution => Mechanism::VickreyRedistribution,
        MechanismKind::PublicProject => Mechanism::PublicProject { cost: cost()? },
        MechanismKind::SequentialPublicProject => Mechanism::SequentialPublicProject { cost: cost()? },
        MechanismKind::UnitDemand => Mechanism::UnitDemand { items: items()? },
        MechanismKind::SingleMinded => Mechanism::SingleMinded { items: items()? },
        MechanismKind::Walker => Mechanism::Walker,
        MechanismKind::BuyPath => {
            let network = network(scenario).ok_or("buy-path needs `source` and `sink`")?;
            network.validate().map_err(|e| e.to_string())?;
            Mechanism::BuyPath { network }
        }
    })
}
