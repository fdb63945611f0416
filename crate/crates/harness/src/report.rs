//! Text and machine-readable renderings of a run.
//!
//! The machine-readable form is one `key=value` pair per line. Keys are
//! `round.N.<field>` for per-round data followed by run-wide `violations`,
//! `stalled` and `disagreements` counts. Only schedule-independent data is
//! written, so runs of one scenario under different seeds can be diffed.

use std::fmt::Write as _;

use mechnet_core::Scalar;

use crate::runner::{RoundOutcome, RunResult};

fn names(list: &[String]) -> String {
    if list.is_empty() {
        "-".into()
    } else {
        list.join(" ")
    }
}

pub fn text<S: Scalar>(r: &RunResult<S>) -> String {
    let mut out = String::new();
    for round in &r.rounds {
        let _ = writeln!(out, "ROUND {}", round.round);
        let _ = writeln!(out, "PARTICIPANTS {}", names(&round.participants));
        let _ = writeln!(out, "REJECTED {}", names(&round.rejected));
        let _ = writeln!(out, "EXCLUDED {}", names(&round.excluded));
        if !round.crashed.is_empty() {
            let _ = writeln!(out, "CRASHED {}", names(&round.crashed));
        }
        match &round.outcome {
            RoundOutcome::Settled {
                decision,
                transfers,
                taxes,
            } => {
                let _ = writeln!(out, "DECISION {decision}");
                for (payer, payee, amount) in transfers {
                    let _ = writeln!(out, "SCHEME {payer} -> {payee} : {amount}");
                }
                let taxes: Vec<String> = taxes.iter().map(|(p, t)| format!("{p}={t}")).collect();
                let _ = writeln!(out, "TAXES {}", taxes.join(" "));
            }
            RoundOutcome::Aborted(reason) => {
                let _ = writeln!(out, "ABORTED {reason}");
            }
        }
        if let Some(honest) = &round.honest {
            let _ = writeln!(out, "HONEST {}", names(honest));
        }
        match &round.total {
            Some(t) => {
                let _ = writeln!(out, "TOTAL {t}");
            }
            None => {
                let _ = writeln!(out, "TOTAL -");
            }
        }
        let _ = writeln!(out, "FAILURE {}", if round.failure { "yes" } else { "no" });
        let _ = writeln!(out);
    }
    for v in &r.report.violations {
        let _ = writeln!(out, "VIOLATION {v}");
    }
    for d in &r.disagreements {
        let _ = writeln!(out, "DISAGREEMENT {d}");
    }
    if r.report.stalled {
        let _ = writeln!(out, "STALLED after {} steps", r.report.steps);
    }
    out
}

pub fn machine<S: Scalar>(r: &RunResult<S>) -> String {
    let mut out = String::new();
    let mut kv = |k: String, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("rounds".into(), r.rounds.len().to_string());
    for round in &r.rounds {
        let key = |f: &str| format!("round.{}.{f}", round.round);
        kv(key("participants"), round.participants.join(","));
        kv(key("rejected"), round.rejected.join(","));
        kv(key("excluded"), round.excluded.join(","));
        kv(key("crashed"), round.crashed.join(","));
        kv(key("failure"), round.failure.to_string());
        match &round.outcome {
            RoundOutcome::Settled {
                decision,
                transfers,
                taxes,
            } => {
                kv(key("status"), "settled".into());
                kv(key("decision"), decision.clone());
                kv(key("transfers"), transfers.len().to_string());
                for (i, (payer, payee, amount)) in transfers.iter().enumerate() {
                    kv(key(&format!("transfer.{i}")), format!("{payer},{payee},{amount}"));
                }
                for (p, t) in taxes {
                    kv(key(&format!("tax.{p}")), t.to_string());
                }
            }
            RoundOutcome::Aborted(reason) => {
                kv(key("status"), "aborted".into());
                kv(key("reason"), reason.clone());
            }
        }
        if let Some(honest) = &round.honest {
            kv(key("honest"), honest.join(","));
        }
        kv(key("total"), round.total.as_ref().map_or("-".into(), |t| t.to_string()));
    }
    kv("violations".into(), r.report.violations.len().to_string());
    kv("stalled".into(), r.report.stalled.to_string());
    kv("disagreements".into(), r.disagreements.len().to_string());
    out
}
