//! Direct mechanism evaluation without a simulated network.

use std::fmt::Write as _;

use mechnet_core::catalog::MechanismKind;
use mechnet_core::{reduce_tax_scheme, Payee, Scalar};

use crate::scenario::{EdgeLine, Scenario};
use crate::types::{build_mechanism, parse_report, split_types};

/// Mechanism parameters given on the command line.
#[derive(Debug, Clone, Default)]
pub struct OracleParams {
    pub items: Option<usize>,
    pub cost: Option<String>,
    /// `label:from:to`
    pub edges: Vec<String>,
    pub source: Option<String>,
    pub sink: Option<String>,
}

/// Evaluates `types` and renders the decision, taxes and reduced scheme.
/// Players are named `p1`, `p2`, ... in the order given.
pub fn oracle<S: Scalar>(kind: MechanismKind, types: &str, params: &OracleParams) -> Result<String, String> {
    let edges = params
        .edges
        .iter()
        .map(|e| match e.split(':').collect::<Vec<_>>().as_slice() {
            [label, from, to] => Ok(EdgeLine {
                label: label.to_string(),
                from: from.to_string(),
                to: to.to_string(),
            }),
            _ => Err(format!("edge `{e}` is not label:from:to")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scenario = Scenario {
        mechanism: kind,
        items: params.items,
        cost: params.cost.clone(),
        edges,
        source: params.source.clone(),
        sink: params.sink.clone(),
        ..Scenario::default()
    };
    let mechanism = build_mechanism::<S>(&scenario)?;
    let reports = split_types(types)
        .into_iter()
        .map(|t| parse_report::<S>(kind, t))
        .collect::<Result<Vec<_>, _>>()?;
    let outcome = mechanism.evaluate(&reports).map_err(|e| e.to_string())?;
    let name = |i: usize| format!("p{}", i + 1);
    let mut out = String::new();
    let _ = writeln!(out, "DECISION {}", outcome.decision.describe(name));
    let taxes: Vec<String> = outcome
        .taxes
        .0
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{}={t}", name(i)))
        .collect();
    let _ = writeln!(out, "TAXES {}", taxes.join(" "));
    for t in reduce_tax_scheme(&outcome.taxes).transfers {
        let payee = match t.payee {
            Payee::Collector => "TC".to_string(),
            Payee::Player(p) => name(p),
        };
        let _ = writeln!(out, "SCHEME {} -> {payee} : {}", name(t.payer), t.amount);
    }
    Ok(out)
}
