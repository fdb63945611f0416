use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use super::{
    send_frame, AliasMap, Backbone, Dest, Entry, ExclusionNotice, Frame, Member, PolicyInstance, PolicyKind, Reason,
    RegistrationRule, Signal, EXCLUSION_TAG, POLICE_DISPATCH_TAG, POLICE_SUBMIT_TAG, TYPE_TAG,
};
use crate::dtd::{Dtd, DtdConfig};
use crate::error::SimError;
use crate::kernel::{Class, Ctx, Message, ProcessId, Timeout};
use crate::protocol::phases::after_types;

#[derive(Debug, Clone)]
pub struct RegistryConfig {
    pub region: String,
    pub rule: RegistrationRule,
    pub policy: PolicyKind,
    pub masking: bool,
    pub react_deadline: u64,
    pub policing: bool,
    pub exclude_winners: bool,
    /// Rounds to run; later sign-ins are refused as late.
    pub rounds: u32,
    pub collector: Option<ProcessId>,
    pub backbone: Rc<Backbone>,
    pub dtd: DtdConfig,
    /// Alias table shared with the harness for reporting.
    pub aliases: Rc<RefCell<AliasMap>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Local {
    pid: ProcessId,
    seq: Option<u32>,
}

/// Registration bookkeeping of one registry for one round.
#[derive(Debug, Clone)]
pub struct RegistryBook {
    region: String,
    rule: RegistrationRule,
    policy: PolicyKind,
    open: bool,
    local: BTreeMap<ProcessId, Local>,
    alias_of: BTreeMap<ProcessId, ProcessId>,
    barred: BTreeSet<ProcessId>,
    next_seq: u32,
}

impl RegistryBook {
    pub fn new(region: &str, rule: RegistrationRule, policy: PolicyKind) -> Self {
        RegistryBook {
            region: region.to_string(),
            rule,
            policy,
            open: true,
            local: BTreeMap::new(),
            alias_of: BTreeMap::new(),
            barred: BTreeSet::new(),
            next_seq: 1,
        }
    }

    pub fn reset_round(&mut self) {
        self.open = true;
        self.local.clear();
        self.next_seq = 1;
    }

    pub fn close(&mut self) {
        self.open = false;
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    pub fn count(&self) -> usize {
        self.local.len()
    }

    /// Keeps `pid` out of later rounds.
    pub fn bar(&mut self, pid: ProcessId) {
        self.barred.insert(pid);
    }

    pub fn is_registered(&self, pid: ProcessId) -> bool {
        self.alias_of.get(&pid).is_some_and(|a| self.local.contains_key(a))
    }

    /// Admits `pid`; `fresh` supplies an alias the first time one is needed.
    pub fn signin(
        &mut self,
        pid: ProcessId,
        region: &str,
        fresh: impl FnOnce() -> ProcessId,
    ) -> Result<(ProcessId, PolicyInstance), Reason> {
        if !self.open {
            return Err(Reason::Late);
        }
        if region != self.region {
            return Err(Reason::Ineligible);
        }
        if self.barred.contains(&pid) {
            return Err(Reason::Excluded);
        }
        if self.is_registered(pid) {
            return Err(Reason::Duplicate);
        }
        let alias = *self.alias_of.entry(pid).or_insert_with(fresh);
        let policy = match self.policy {
            PolicyKind::Simultaneous => PolicyInstance::Simultaneous,
            PolicyKind::Sequential => {
                let seq = self.next_seq;
                self.next_seq += 1;
                let is_last = match self.rule {
                    RegistrationRule::LocalQuorum { count, .. } | RegistrationRule::GlobalQuorum { count, .. } => {
                        seq as usize == count
                    }
                    RegistrationRule::Deadline { .. } => false,
                };
                PolicyInstance::Sequential { seq, is_last }
            }
        };
        let seq = match policy {
            PolicyInstance::Sequential { seq, .. } => Some(seq),
            PolicyInstance::Simultaneous => None,
        };
        self.local.insert(alias, Local { pid, seq });
        Ok((alias, policy))
    }

    pub fn signout(&mut self, pid: ProcessId) -> Result<(), SimError> {
        let alias = self.alias_of.get(&pid).copied().ok_or(SimError::NotRegistered(pid))?;
        self.local.remove(&alias).map(|_| ()).ok_or(SimError::NotRegistered(pid))
    }

    pub fn alias(&self, pid: ProcessId) -> Option<ProcessId> {
        self.alias_of.get(&pid).copied().filter(|a| self.local.contains_key(a))
    }

    fn pid(&self, alias: ProcessId) -> Option<ProcessId> {
        self.local.get(&alias).map(|l| l.pid)
    }

    fn entries(&self) -> Vec<Entry> {
        self.local
            .iter()
            .map(|(&alias, l)| Entry {
                alias,
                seq: l.seq,
                member: Member::Player,
            })
            .collect()
    }
}

/// Registry process: admits players, keeps the directory and routes frames.
pub struct Registry {
    dtd: Dtd,
    me: ProcessId,
    config: RegistryConfig,
    book: RegistryBook,
    directory: BTreeMap<ProcessId, (ProcessId, Entry)>,
    remote_counts: BTreeMap<ProcessId, usize>,
    gateway_of: BTreeMap<ProcessId, ProcessId>,
    typed: BTreeSet<ProcessId>,
    excluded: BTreeSet<ProcessId>,
    policed: BTreeSet<ProcessId>,
    round: u32,
}

impl Registry {
    pub fn new(ctx: Ctx, config: RegistryConfig) -> Self {
        let me = ctx.id();
        let mut buddies = config.backbone.neighbours(me);
        buddies.extend(config.collector);
        let book = RegistryBook::new(&config.region, config.rule.clone(), config.policy);
        let r = Registry {
            dtd: Dtd::new(ctx, config.dtd, buddies, true),
            me,
            config,
            book,
            directory: BTreeMap::new(),
            remote_counts: BTreeMap::new(),
            gateway_of: BTreeMap::new(),
            typed: BTreeSet::new(),
            excluded: BTreeSet::new(),
            policed: BTreeSet::new(),
            round: 0,
        };
        if let Some(c) = r.config.collector {
            r.config.aliases.borrow_mut().insert(c, c);
        }
        r
    }

    pub async fn run(mut self) {
        for round in 0..self.config.rounds {
            self.round = round;
            self.register_phase().await;
            self.types_phase().await;
            let failure = self.dtd.had_failure_in_last_phase().unwrap_or(false);
            for _ in after_types(self.config.policing, failure) {
                self.enter();
                self.drain().await;
            }
        }
        self.closed().await;
    }

    /// After the last round: every sign-in is late.
    async fn closed(&mut self) {
        self.dtd.retire();
        let ctx = self.dtd.ctx().clone();
        while let Some(m) = ctx.llreceive(Timeout::Never).await {
            if m.class == Class::Raw && matches!(Signal::decode(&m.payload), Some(Signal::SignIn { .. })) {
                ctx.note(None, format!("rejected {}: Late", m.sender));
                self.welcome(m.sender);
                self.dtd
                    .raw_send(m.sender, "REJECT", Signal::Reject { reason: Reason::Late }.encode());
            }
        }
    }

    fn enter(&mut self) {
        self.dtd.initialize().expect("registry phases advance one at a time");
        self.policed.clear();
    }

    async fn drain(&mut self) {
        while let Some(m) = self.dtd.passive_receive().await {
            self.handle(m);
        }
    }

    async fn register_phase(&mut self) {
        self.enter();
        self.book.reset_round();
        self.directory.retain(|_, (_, e)| e.member != Member::Player);
        self.remote_counts.clear();
        self.typed.clear();
        self.excluded.clear();
        let close_at = self.dtd.ctx().now() + self.config.rule.deadline();
        while self.book.is_open() {
            let now = self.dtd.ctx().now();
            if now >= close_at || self.quorum_reached() {
                self.close();
                break;
            }
            if let Some(m) = self.dtd.receive(close_at - now).await {
                self.handle(m);
            }
        }
        self.drain().await;
    }

    fn quorum_reached(&self) -> bool {
        match self.config.rule {
            RegistrationRule::Deadline { .. } => false,
            RegistrationRule::LocalQuorum { count, .. } => self.book.count() >= count,
            RegistrationRule::GlobalQuorum { count, .. } => {
                self.book.count() + self.remote_counts.values().sum::<usize>() >= count
            }
        }
    }

    fn own_entries(&self) -> Vec<Entry> {
        let mut entries = self.book.entries();
        entries.extend(self.config.collector.map(|c| Entry {
            alias: c,
            seq: None,
            member: Member::Collector,
        }));
        entries
    }

    fn close(&mut self) {
        self.book.close();
        let entries = self.own_entries();
        for e in &entries {
            self.directory.insert(e.alias, (self.me, *e));
        }
        let phase = self.dtd.phase();
        self.dtd
            .ctx()
            .note(Some(phase), format!("registration closed with {} players", self.book.count()));
        let peers: Vec<ProcessId> = self.config.backbone.registries().filter(|&r| r != self.me).collect();
        for to in peers {
            let frame = Frame::Directory {
                to,
                registry: self.me,
                entries: entries.clone(),
            };
            self.forward(frame);
        }
    }

    async fn types_phase(&mut self) {
        self.enter();
        let deadline = self.dtd.ctx().now() + self.config.react_deadline;
        loop {
            let missing: Vec<Entry> = self
                .book
                .entries()
                .into_iter()
                .filter(|e| !self.typed.contains(&e.alias))
                .collect();
            if missing.is_empty() {
                break;
            }
            let now = self.dtd.ctx().now();
            if now >= deadline {
                self.exclude(missing);
                break;
            }
            if let Some(m) = self.dtd.receive(deadline - now).await {
                self.handle(m);
            }
        }
        self.drain().await;
    }

    fn exclude(&mut self, missing: Vec<Entry>) {
        let phase = self.dtd.phase();
        for e in &missing {
            self.excluded.insert(e.alias);
            self.dtd.ctx().note(Some(phase), format!("excluded {} for missing the type deadline", e.alias));
        }
        let body = serde_json::to_vec(&ExclusionNotice { excluded: missing }).expect("notices serialize");
        self.route(self.me, None, Dest::AllPlayers { self_copy: false }, EXCLUSION_TAG, body);
    }

    fn handle(&mut self, m: Message) {
        self.dtd.take_bounced();
        match m.class {
            Class::Raw => match Signal::decode(&m.payload) {
                Some(Signal::SignIn { region }) => self.signin(m.sender, &region),
                Some(Signal::SignOut) => {
                    if self.book.signout(m.sender).is_ok() {
                        self.dtd.remove_buddy(m.sender);
                    }
                }
                _ => {}
            },
            Class::App => {
                if let Some(frame) = Frame::decode(&m.payload) {
                    self.handle_frame(m.sender, frame);
                }
            }
            Class::Control => {}
        }
    }

    fn signin(&mut self, pid: ProcessId, region: &str) {
        let ctx = self.dtd.ctx().clone();
        let masking = self.config.masking;
        let phase = self.dtd.phase();
        match self.book.signin(pid, region, || if masking { ctx.fresh_id() } else { pid }) {
            Ok((alias, policy)) => {
                self.dtd.add_buddy(pid);
                let gateways = self.config.backbone.gateways_of(self.me);
                let gateway = (!gateways.is_empty()).then(|| gateways[ctx.random_below(gateways.len())]);
                if let Some(g) = gateway {
                    self.gateway_of.insert(alias, g);
                }
                self.config.aliases.borrow_mut().insert(alias, pid);
                ctx.note(Some(phase), format!("accepted {pid} as {alias}"));
                self.welcome(pid);
                send_frame(&mut self.dtd, &Frame::Accept { alias, gateway, policy }, &[pid]);
                if matches!(self.config.rule, RegistrationRule::GlobalQuorum { .. }) {
                    let count = self.book.count();
                    let peers: Vec<ProcessId> = self.config.backbone.registries().filter(|&r| r != self.me).collect();
                    for to in peers {
                        self.forward(Frame::Registered {
                            to,
                            registry: self.me,
                            count,
                        });
                    }
                }
            }
            Err(reason) => {
                if reason != Reason::Duplicate {
                    self.dtd.remove_buddy(pid);
                }
                ctx.note(Some(phase), format!("rejected {pid}: {reason:?}"));
                self.welcome(pid);
                self.dtd.raw_send(pid, "REJECT", Signal::Reject { reason }.encode());
            }
        }
    }

    fn welcome(&self, pid: ProcessId) {
        let welcome = Signal::Welcome {
            phase: self.dtd.phase(),
            round: self.round,
        };
        self.dtd.raw_send(pid, "WELCOME", welcome.encode());
    }

    fn handle_frame(&mut self, sender: ProcessId, frame: Frame) {
        if let Some(to) = frame.destination() {
            if to != self.me {
                self.forward(frame);
                return;
            }
        }
        match frame {
            Frame::Submit { dest, tag, body } => self.submit(sender, dest, tag, body),
            Frame::Forward {
                origin,
                origin_seq,
                targets,
                tag,
                body,
                ..
            } => self.deliver_local(origin, origin_seq, &tag, &body, &targets),
            Frame::Directory { registry, entries, .. } => {
                self.directory.retain(|_, (r, _)| *r != registry);
                for e in entries {
                    self.directory.insert(e.alias, (registry, e));
                }
            }
            Frame::Registered { registry, count, .. } => {
                self.remote_counts.insert(registry, count);
            }
            Frame::Report { winners } => {
                if self.config.exclude_winners {
                    for w in winners {
                        if let Some(pid) = self.book.pid(w) {
                            self.book.bar(pid);
                        }
                    }
                }
            }
            Frame::Accept { .. } | Frame::Deliver { .. } => {}
        }
    }

    fn submit(&mut self, sender: ProcessId, dest: Dest, tag: String, body: Vec<u8>) {
        let phase = self.dtd.phase();
        let origin = if self.config.collector == Some(sender) {
            sender
        } else {
            match self.book.alias(sender) {
                Some(a) => a,
                None => {
                    self.dtd.ctx().note(Some(phase), format!("dropped {tag} from unregistered {sender}"));
                    return;
                }
            }
        };
        if tag == TYPE_TAG {
            if self.excluded.contains(&origin) {
                self.dtd.ctx().note(Some(phase), format!("dropped late TYPE from {origin}"));
                return;
            }
            self.typed.insert(origin);
        }
        let (tag, dest) = if tag == POLICE_SUBMIT_TAG {
            if !self.policed.insert(origin) {
                self.dtd
                    .ctx()
                    .note(Some(phase), format!("rejected duplicate {POLICE_SUBMIT_TAG} from {origin}"));
                return;
            }
            (POLICE_DISPATCH_TAG.to_string(), Dest::AllPlayers { self_copy: true })
        } else {
            (tag, dest)
        };
        let via = self.gateway_of.get(&origin).copied();
        self.route(origin, via, dest, &tag, body);
    }

    fn route(&mut self, origin: ProcessId, via: Option<ProcessId>, dest: Dest, tag: &str, body: Vec<u8>) {
        let seq = self.directory.get(&origin).and_then(|(_, e)| e.seq);
        let targets: Vec<ProcessId> = match dest {
            Dest::AllPlayers { self_copy } => self
                .directory
                .iter()
                .filter(|(&a, (_, e))| e.member == Member::Player && (self_copy || a != origin))
                .map(|(&a, _)| a)
                .collect(),
            Dest::Only(v) => v,
        };
        let mut groups: BTreeMap<ProcessId, Vec<ProcessId>> = BTreeMap::new();
        for t in targets {
            match self.directory.get(&t) {
                Some(&(reg, _)) => groups.entry(reg).or_default().push(t),
                None => {
                    let phase = self.dtd.phase();
                    self.dtd.ctx().note(Some(phase), format!("no route to {t}"));
                }
            }
        }
        for (reg, targets) in groups {
            if reg == self.me {
                self.deliver_local(origin, seq, tag, &body, &targets);
                continue;
            }
            let frame = Frame::Forward {
                to: reg,
                origin,
                origin_seq: seq,
                targets,
                tag: tag.to_string(),
                body: body.clone(),
            };
            // Remote traffic leaves through the origin's assigned gateway.
            let hop = via.unwrap_or_else(|| self.config.backbone.next_hop(self.me, reg));
            send_frame(&mut self.dtd, &frame, &[hop]);
        }
    }

    fn forward(&mut self, frame: Frame) {
        let to = frame.destination().expect("backbone frames have a destination");
        let hop = self.config.backbone.next_hop(self.me, to);
        send_frame(&mut self.dtd, &frame, &[hop]);
    }

    fn deliver_local(&mut self, origin: ProcessId, origin_seq: Option<u32>, tag: &str, body: &[u8], targets: &[ProcessId]) {
        let frame = Frame::Deliver {
            origin,
            origin_seq,
            tag: tag.to_string(),
            body: body.to_vec(),
        };
        let pids: Vec<ProcessId> = targets
            .iter()
            .filter_map(|&t| {
                if self.config.collector == Some(t) {
                    Some(t)
                } else {
                    self.book.pid(t)
                }
            })
            .collect();
        send_frame(&mut self.dtd, &frame, &pids);
    }
}
