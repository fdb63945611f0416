use serde::{Deserialize, Serialize};

/// The kind of work done in one detector phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseKind {
    Register,
    Types,
    RollCall,
    Scheme,
    Police,
    Pay,
    Total,
    Final,
}

/// Phases that follow the type phase of a round.
pub fn after_types(policing: bool, failure: bool) -> Vec<PhaseKind> {
    let mut plan = Vec::new();
    if failure {
        plan.push(PhaseKind::RollCall);
    }
    if policing {
        plan.extend([PhaseKind::Police, PhaseKind::Pay]);
    } else {
        plan.push(PhaseKind::Scheme);
    }
    plan.extend([PhaseKind::Total, PhaseKind::Final]);
    plan
}
