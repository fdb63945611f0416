use mechnet_core::Scalar;

use super::phases::after_types;
use super::{CollectorRound, SharedJournal, TAX_CLAIM_TAG, TAX_PAYMENT_TAG, TOTAL_TAG};
use crate::dtd::DtdConfig;
use crate::hlc::{Client, Delivery};
use crate::kernel::{Ctx, ProcessId};
use crate::protocol::phases::PhaseKind;

#[derive(Debug, Clone)]
pub struct CollectorConfig<S> {
    pub registry: ProcessId,
    pub rounds: u32,
    pub policing: bool,
    pub dtd: DtdConfig,
    pub journal: SharedJournal<S>,
}

async fn phase(client: &mut Client) -> Vec<Delivery> {
    client.initialize().expect("collector phases advance one at a time");
    let mut out = Vec::new();
    while let Some(d) = client.passive_receive().await.expect("collector is never locked") {
        out.push(d);
    }
    out
}

/// Trusted tax collector: sums payments and claims, then announces the total.
pub async fn run_collector<S: Scalar>(ctx: Ctx, config: CollectorConfig<S>) {
    let mut client = Client::preregistered(ctx, config.dtd, config.registry);
    for round in 0..config.rounds {
        phase(&mut client).await;
        phase(&mut client).await;
        let failure = client.had_failure().unwrap_or(false);
        let mut entries: Vec<(ProcessId, S)> = Vec::new();
        for kind in after_types(config.policing, failure) {
            match kind {
                PhaseKind::Scheme | PhaseKind::Pay => {
                    for d in phase(&mut client).await {
                        let Ok(amount) = serde_json::from_slice::<S>(&d.body) else {
                            continue;
                        };
                        match d.tag.as_str() {
                            TAX_PAYMENT_TAG => entries.push((d.origin, amount)),
                            TAX_CLAIM_TAG => entries.push((d.origin, -amount)),
                            _ => {}
                        }
                    }
                }
                PhaseKind::Total => {
                    client.initialize().expect("collector phases advance one at a time");
                    let total = entries.iter().fold(S::zero(), |acc, (_, a)| acc + a.clone());
                    client
                        .bsend(TOTAL_TAG, serde_json::to_vec(&total).expect("totals serialize"))
                        .expect("collector is preregistered");
                    while client.passive_receive().await.expect("unlocked").is_some() {}
                    config.journal.borrow_mut().collector.push(CollectorRound {
                        round,
                        entries: entries.clone(),
                        total,
                    });
                }
                _ => {
                    phase(&mut client).await;
                }
            }
        }
    }
}
