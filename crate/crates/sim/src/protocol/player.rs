use std::collections::{BTreeMap, BTreeSet};

use mechnet_core::catalog::{Mechanism, TypeReport};
use mechnet_core::{Payee, Scalar, Transfer};
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{
    settle, CrashPoint, RoundView, Settled, SharedJournal, Strategy, DECISION_TAG, ROLLCALL_TAG, SCHEME_TAG,
    TAX_CLAIM_TAG, TAX_PAYMENT_TAG, TOTAL_TAG,
};
use crate::dtd::DtdConfig;
use crate::error::SimError;
use crate::hlc::{Client, Delivery, ExclusionNotice, Frame, EXCLUSION_TAG, POLICE_DISPATCH_TAG, POLICE_SUBMIT_TAG, TYPE_TAG};
use crate::kernel::{Ctx, ProcessId};

const SEQUENTIAL_POLL: u64 = 32;

#[derive(Debug, Clone)]
pub struct PlayerConfig<S> {
    pub registry: ProcessId,
    pub collector: ProcessId,
    pub region: String,
    pub truth: TypeReport<S>,
    pub strategy: Strategy<S>,
    /// Round and point at which the player stops.
    pub crash: Option<(u32, CrashPoint)>,
    pub skip_rounds: BTreeSet<u32>,
    pub start_at: u64,
    pub rounds: u32,
    pub mechanism: Mechanism<S>,
    pub policing: bool,
    pub self_copy: bool,
    pub inspect_timeout: u64,
    pub dtd: DtdConfig,
    pub journal: SharedJournal<S>,
}

fn encode<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("payloads serialize")
}

fn decode<T: DeserializeOwned>(d: &Delivery) -> Option<T> {
    serde_json::from_slice(&d.body).ok()
}

struct Player<S> {
    ctx: Ctx,
    me: ProcessId,
    config: PlayerConfig<S>,
    client: Client,
    view: RoundView<S>,
    attached: bool,
}

pub async fn run_player<S: Scalar>(ctx: Ctx, config: PlayerConfig<S>) {
    let client = Client::new(ctx.clone(), config.dtd, config.registry, config.self_copy);
    let mut p = Player {
        me: ctx.id(),
        ctx,
        config,
        client,
        view: RoundView::new(0),
        attached: false,
    };
    if p.config.start_at > 0 {
        p.ctx.sleep_until(p.config.start_at).await;
    }
    let mut round = 0;
    while round < p.config.rounds {
        p.view = RoundView::new(round);
        let go_on = p.round(round).await;
        round = p.view.round + 1;
        p.view.finished = go_on;
        p.commit();
        if !go_on {
            return;
        }
    }
}

impl<S: Scalar> Player<S> {
    fn commit(&self) {
        let mut j = self.config.journal.borrow_mut();
        let rounds = j.players.entry(self.me).or_default();
        match rounds.last_mut() {
            Some(last) if last.round == self.view.round => *last = self.view.clone(),
            _ => rounds.push(self.view.clone()),
        }
    }

    fn enter(&mut self) {
        self.client.initialize().expect("player phases advance one at a time");
    }

    async fn drain(&mut self) -> Vec<Delivery> {
        let mut out = Vec::new();
        while let Some(d) = self.client.passive_receive().await.expect("own type already announced") {
            out.push(d);
        }
        out
    }

    fn alias(&self) -> Option<ProcessId> {
        self.view.alias
    }

    fn is_survivor(&self) -> bool {
        self.alias().is_some_and(|a| self.view.survivors.contains(&a))
    }

    /// Plays one round; `false` when the player must stop.
    async fn round(&mut self, round: u32) -> bool {
        self.enter();
        let skipping = self.config.skip_rounds.contains(&round);
        if skipping {
            if !self.attached {
                return false;
            }
            self.drain().await;
        } else {
            match self.client.signin(&self.config.region).await {
                Err(reason) => {
                    self.view.round = self.view.round.max(self.client.round());
                    self.view.rejected = Some(reason);
                    return false;
                }
                Ok(a) => {
                    self.view.round = self.view.round.max(a.round);
                    self.view.alias = Some(a.alias);
                    self.attached = true;
                    self.commit();
                }
            }
            self.drain().await;
        }

        let round = self.view.round;
        self.enter();
        if !skipping {
            self.announce(round).await;
        }
        for d in self.drain().await {
            self.absorb(d);
        }
        let failure = self.client.had_failure().unwrap_or(false);
        self.view.failure_after_types = failure;
        self.view.survivors = self.view.types.keys().copied().collect();
        if failure {
            self.enter();
            let mut alive = BTreeSet::new();
            if let Some(a) = self.alias() {
                alive.insert(a);
                let _ = self.client.bsend(ROLLCALL_TAG, Vec::new());
            }
            for d in self.drain().await {
                if d.tag == ROLLCALL_TAG {
                    alive.insert(d.origin);
                }
            }
            self.view.survivors.retain(|p| alive.contains(p));
        }
        self.commit();

        if self.config.policing {
            self.police().await;
        } else {
            self.scheme().await;
        }

        self.enter();
        for d in self.drain().await {
            if d.tag == TOTAL_TAG {
                self.view.total = decode(&d);
            }
        }

        self.enter();
        if self.view.alias.is_some() && round + 1 < self.config.rounds {
            let winners = self.view.settled.as_ref().map(|s| s.winners()).unwrap_or_default();
            self.client.to_registry(&Frame::Report { winners });
        }
        self.drain().await;
        true
    }

    async fn announce(&mut self, round: u32) {
        self.client.arm_policy();
        if self.config.crash == Some((round, CrashPoint::BeforeType)) {
            self.commit();
            self.ctx.crash_self().await;
        }
        let alias = self.alias().expect("registered before announcing");
        loop {
            let announced = match &self.config.strategy {
                Strategy::Misreport(t) => t.clone(),
                Strategy::Hook(f) => f(&self.config.truth, &self.view.types),
                _ => self.config.truth.clone(),
            };
            match self.client.bsend(TYPE_TAG, encode(&announced)) {
                Ok(()) => {
                    self.view.types.insert(alias, announced);
                    break;
                }
                Err(SimError::PolicyViolation(_)) => {
                    if let Some(d) = self.client.receive(SEQUENTIAL_POLL).await.expect("sequential receive") {
                        self.absorb(d);
                    }
                }
                Err(e) => panic!("type broadcast failed: {e}"),
            }
        }
        if self.config.crash == Some((round, CrashPoint::AfterType)) {
            self.client.flush();
            self.commit();
            self.ctx.crash_self().await;
        }
    }

    fn absorb(&mut self, d: Delivery) {
        match d.tag.as_str() {
            TYPE_TAG => {
                if let Some(t) = decode::<TypeReport<S>>(&d) {
                    if !self.view.excluded.contains(&d.origin) {
                        self.view.types.insert(d.origin, t);
                    }
                }
            }
            EXCLUSION_TAG => {
                if let Some(notice) = decode::<ExclusionNotice>(&d) {
                    for e in notice.excluded {
                        self.view.excluded.insert(e.alias);
                        self.view.types.remove(&e.alias);
                        if let Some(seq) = e.seq {
                            self.client.excuse(seq);
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn compute(&mut self) -> Settled<S> {
        self.view.computed = true;
        settle(&self.config.mechanism, &self.view.types, &self.view.survivors)
    }

    async fn scheme(&mut self) {
        self.enter();
        if self.is_survivor() {
            let mut adopted: Option<(ProcessId, Settled<S>)> = None;
            while let Some(d) = self.client.receive(self.config.inspect_timeout).await.expect("typed") {
                if (d.tag == SCHEME_TAG || d.tag == DECISION_TAG) && adopted.is_none() {
                    adopted = decode(&d).map(|s| (d.origin, s));
                }
            }
            let settled = match adopted {
                Some((from, s)) => {
                    self.view.adopted_from = Some(from);
                    s
                }
                None => {
                    let s = self.compute();
                    self.distribute(&s);
                    s
                }
            };
            self.pay(&settled);
            self.view.settled = Some(settled);
            self.commit();
        }
        self.drain().await;
    }

    fn distribute(&mut self, s: &Settled<S>) {
        let Settled::Computed { scheme, .. } = s else {
            return;
        };
        let me = self.alias();
        let involved: BTreeSet<ProcessId> = scheme.involved().into_iter().map(|i| ProcessId(i as u64)).collect();
        let (to_scheme, to_decision): (Vec<ProcessId>, Vec<ProcessId>) = self
            .view
            .survivors
            .iter()
            .copied()
            .filter(|&p| Some(p) != me)
            .partition(|p| involved.contains(p));
        let body = encode(s);
        self.client.msend(SCHEME_TAG, body.clone(), &to_scheme).expect("registered");
        self.client.msend(DECISION_TAG, body, &to_decision).expect("registered");
    }

    /// Sends the own collector entries of the scheme.
    fn pay(&mut self, s: &Settled<S>) {
        let (Settled::Computed { scheme, .. }, Some(me)) = (s, self.alias()) else {
            return;
        };
        let zero = S::zero();
        let entries: Vec<S> = scheme.collector_entries(me.0 as usize).map(|t| t.amount.clone()).collect();
        for amount in entries {
            let (tag, value) = if amount > zero {
                (TAX_PAYMENT_TAG, amount)
            } else {
                (TAX_CLAIM_TAG, -amount)
            };
            self.client
                .msend(tag, encode(&value), &[self.config.collector])
                .expect("registered");
            self.view.paid.push((tag.to_string(), value));
        }
    }

    async fn police(&mut self) {
        self.enter();
        let own = if self.is_survivor() {
            let s = self.compute();
            let submitted = match (&self.config.strategy, &s) {
                (Strategy::FalsifyScheme, Settled::Computed { decision, scheme }) => {
                    let me = self.alias().map(|a| a.0 as usize);
                    let mut scheme = scheme.clone();
                    let before = scheme.transfers.len();
                    scheme
                        .transfers
                        .retain(|t| !(Some(t.payer) == me && t.payee == Payee::Collector));
                    if let (true, Some(me)) = (scheme.transfers.len() == before, me) {
                        // Nothing to dodge, so claim money instead.
                        scheme.transfers.push(Transfer {
                            payer: me,
                            amount: -S::one(),
                            payee: Payee::Collector,
                        });
                    }
                    Settled::Computed {
                        decision: decision.clone(),
                        scheme,
                    }
                }
                _ => s.clone(),
            };
            let copies = if matches!(self.config.strategy, Strategy::DuplicateSubmit) { 2 } else { 1 };
            for _ in 0..copies {
                self.client.bsend(POLICE_SUBMIT_TAG, encode(&submitted)).expect("registered");
            }
            Some(s)
        } else {
            None
        };
        let mut dispatched: BTreeMap<ProcessId, Settled<S>> = BTreeMap::new();
        for d in self.drain().await {
            if d.tag == POLICE_DISPATCH_TAG {
                if let Some(s) = decode(&d) {
                    dispatched.entry(d.origin).or_insert(s);
                }
            }
        }

        self.enter();
        if let Some(own) = own {
            let honest: BTreeSet<ProcessId> = dispatched
                .iter()
                .filter(|(_, s)| **s == own)
                .map(|(&p, _)| p)
                .collect();
            if honest == self.view.survivors {
                self.pay(&own);
            }
            self.view.honest = Some(honest);
            self.view.settled = Some(own);
            self.commit();
        }
        self.drain().await;
    }
}
