//! Phase-based termination detection and barrier synchronization.
//!
//! A designated initiator runs echo waves over the buddy graph. Every
//! application message is acknowledged by its receiver; a process reports
//! clean when it is passive, has nothing queued, has no unacknowledged
//! messages and has neither sent nor received anything since its previous
//! report. One clean wave ends the phase. Crashes are detected through
//! bounced probes, and a ping is sent to every child that stays silent for
//! longer than the probe timeout.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::kernel::{Class, Ctx, Message, ProcessId, Timeout};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DtdConfig {
    pub initiator: ProcessId,
    pub probe_timeout: u64,
    /// Pause between two consecutive waves.
    pub wave_interval: u64,
}

impl DtdConfig {
    pub fn new(initiator: ProcessId) -> Self {
        DtdConfig {
            initiator,
            probe_timeout: 64,
            wave_interval: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Control {
    Probe { wave: u64, phase: u64, failed: BTreeSet<ProcessId> },
    Echo { wave: u64, clean: bool, failed: BTreeSet<ProcessId> },
    Ack { phase: u64 },
    Ping { wave: u64 },
    Terminated { phase: u64, failure: bool, failed: BTreeSet<ProcessId> },
}

impl Control {
    fn tag(&self) -> &'static str {
        match self {
            Control::Probe { .. } => "dtd:probe",
            Control::Echo { .. } => "dtd:echo",
            Control::Ack { .. } => "dtd:ack",
            Control::Ping { .. } => "dtd:ping",
            Control::Terminated { .. } => "dtd:terminated",
        }
    }
}

struct Wave {
    id: u64,
    phase: u64,
    parent: Option<ProcessId>,
    pending: BTreeSet<ProcessId>,
    clean: bool,
    failed: BTreeSet<ProcessId>,
    next_ping: u64,
}

/// Initiator bookkeeping.
struct Lead {
    counter: u64,
    next_wave_at: u64,
    /// Failures already seen by a completed wave.
    known_failed: BTreeSet<ProcessId>,
    phase_failure: bool,
}

/// Per-process termination detection state.
pub struct Dtd {
    ctx: Ctx,
    config: DtdConfig,
    buddies: BTreeSet<ProcessId>,
    phase: u64,
    initialized: bool,
    attached: bool,
    retired: bool,
    passive: bool,
    black: bool,
    outbox: Vec<(String, Vec<u8>, Vec<ProcessId>)>,
    queue: VecDeque<Message>,
    raw: VecDeque<Message>,
    later: Vec<Message>,
    outstanding: BTreeMap<ProcessId, u64>,
    failed: BTreeSet<ProcessId>,
    bounced: Vec<Message>,
    wave: Option<Wave>,
    latest_wave: u64,
    lead: Option<Lead>,
    ended: bool,
    last_failure: Option<bool>,
    barriers: u64,
}

impl Dtd {
    /// `attached` processes take part in the checker's bookkeeping from the
    /// start; others attach on their first application message.
    pub fn new(ctx: Ctx, config: DtdConfig, buddies: impl IntoIterator<Item = ProcessId>, attached: bool) -> Self {
        let lead = (config.initiator == ctx.id()).then(|| Lead {
            counter: 0,
            next_wave_at: 0,
            known_failed: BTreeSet::new(),
            phase_failure: false,
        });
        Dtd {
            ctx,
            config,
            buddies: buddies.into_iter().collect(),
            phase: 0,
            initialized: false,
            attached,
            retired: false,
            passive: false,
            black: false,
            outbox: Vec::new(),
            queue: VecDeque::new(),
            raw: VecDeque::new(),
            later: Vec::new(),
            outstanding: BTreeMap::new(),
            failed: BTreeSet::new(),
            bounced: Vec::new(),
            wave: None,
            latest_wave: 0,
            lead,
            ended: false,
            last_failure: None,
            barriers: 0,
        }
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn phase(&self) -> u64 {
        self.phase
    }

    pub fn barriers(&self) -> u64 {
        self.barriers
    }

    pub fn buddies(&self) -> &BTreeSet<ProcessId> {
        &self.buddies
    }

    pub fn add_buddy(&mut self, p: ProcessId) {
        self.buddies.insert(p);
    }

    pub fn remove_buddy(&mut self, p: ProcessId) {
        self.buddies.remove(&p);
        self.outstanding.remove(&p);
        if let Some(w) = self.wave.as_mut() {
            w.pending.remove(&p);
        }
        self.try_finish_wave();
    }

    /// Processes known to have crashed.
    pub fn failed(&self) -> &BTreeSet<ProcessId> {
        &self.failed
    }

    /// Application messages that came back from dead targets.
    pub fn take_bounced(&mut self) -> Vec<Message> {
        std::mem::take(&mut self.bounced)
    }

    /// Enters the current phase.
    pub fn initialize(&mut self) -> Result<(), SimError> {
        if self.initialized {
            return Err(SimError::AlreadyInitialized(self.phase));
        }
        self.initialized = true;
        self.retired = false;
        self.passive = false;
        self.ended = false;
        let phase = self.phase;
        let (now, rest): (Vec<Message>, Vec<Message>) = self.later.drain(..).partition(|m| m.phase == phase);
        self.later = rest;
        self.queue.extend(now);
        self.report();
        Ok(())
    }

    /// Stops taking part in phases; probes are still answered as clean.
    pub fn retire(&mut self) {
        self.retired = true;
        self.initialized = false;
        self.ctx.clear_status();
    }

    /// Catches up with a phase already running elsewhere.
    pub fn join(&mut self, phase: u64) {
        if phase <= self.phase {
            return;
        }
        self.ctx
            .note(Some(phase), format!("joined at phase {phase} from {}", self.phase));
        self.phase = phase;
        self.initialized = true;
        self.ended = false;
        let (now, rest): (Vec<Message>, Vec<Message>) = self.later.drain(..).partition(|m| m.phase == phase);
        self.later = rest;
        self.queue.extend(now);
        self.report();
    }

    pub fn attach(&mut self) {
        if !self.attached {
            self.attached = true;
            self.report();
        }
    }

    pub fn had_failure_in_last_phase(&self) -> Result<bool, SimError> {
        self.last_failure.ok_or(SimError::NoBarrierYet)
    }

    /// Delayed multicast: dispatched by the next receive or priority send.
    pub fn send(&mut self, tag: &str, payload: Vec<u8>, targets: &[ProcessId]) {
        if !targets.is_empty() {
            self.outbox.push((tag.to_string(), payload, targets.to_vec()));
        }
    }

    /// Flushes the outbox, then multicasts immediately.
    pub fn priority_send(&mut self, tag: &str, payload: Vec<u8>, targets: &[ProcessId]) {
        self.flush();
        self.dispatch(tag, payload, targets);
    }

    /// Raw message outside the detector's accounting.
    pub fn raw_send(&self, target: ProcessId, tag: &str, payload: Vec<u8>) -> bool {
        self.ctx.llsend(Message::new(self.ctx.id(), target, self.phase, Class::Raw, tag, payload))
    }

    fn dispatch(&mut self, tag: &str, payload: Vec<u8>, targets: &[ProcessId]) {
        for &t in targets {
            let msg = Message::new(self.ctx.id(), t, self.phase, Class::App, tag, payload.clone());
            if self.ctx.llsend(msg) {
                self.black = true;
                if !self.failed.contains(&t) {
                    *self.outstanding.entry(t).or_insert(0) += 1;
                }
            }
        }
    }

    /// Dispatches everything queued by `send`.
    pub fn flush(&mut self) {
        for (tag, payload, targets) in std::mem::take(&mut self.outbox) {
            self.dispatch(&tag, payload, &targets);
        }
    }

    fn control(&self, target: ProcessId, c: &Control) {
        let payload = serde_json::to_vec(c).expect("control messages serialize");
        self.ctx
            .llsend(Message::new(self.ctx.id(), target, self.phase, Class::Control, c.tag(), payload));
    }

    fn active(&self) -> bool {
        !self.passive || !self.queue.is_empty()
    }

    fn report(&self) {
        if self.attached && !self.retired {
            self.ctx.report_status(self.phase, self.active() || !self.initialized);
        }
    }

    /// Blocks until a message arrives (`Some`) or the phase ends (`None`).
    pub async fn passive_receive(&mut self) -> Option<Message> {
        self.flush();
        loop {
            if let Some(m) = self.raw.pop_front() {
                return Some(m);
            }
            if self.initialized {
                if let Some(m) = self.queue.pop_front() {
                    self.passive = false;
                    self.report();
                    return Some(m);
                }
            }
            if self.ended || !self.initialized {
                self.ended = false;
                return None;
            }
            if !self.passive {
                self.passive = true;
                self.report();
            }
            self.wait(None).await;
        }
    }

    /// Active wait for at most `timeout` steps; `None` on timeout.
    pub async fn receive(&mut self, timeout: u64) -> Option<Message> {
        self.flush();
        self.passive = false;
        self.report();
        let deadline = self.ctx.now() + timeout;
        loop {
            if let Some(m) = self.raw.pop_front() {
                return Some(m);
            }
            if self.initialized {
                if let Some(m) = self.queue.pop_front() {
                    return Some(m);
                }
            }
            if self.ctx.now() >= deadline {
                return None;
            }
            self.wait(Some(deadline)).await;
        }
    }

    fn next_timer(&self) -> Option<u64> {
        let mut t: Option<u64> = None;
        let mut take = |x: u64| t = Some(t.map_or(x, |y: u64| y.min(x)));
        if let Some(w) = &self.wave {
            if !w.pending.is_empty() {
                take(w.next_ping);
            }
        }
        if let Some(lead) = &self.lead {
            if self.wave.is_none() {
                take(lead.next_wave_at);
            }
        }
        t
    }

    async fn wait(&mut self, deadline: Option<u64>) {
        let now = self.ctx.now();
        let wake = match (self.next_timer(), deadline) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let timeout = match wake {
            Some(w) => Timeout::After(w.saturating_sub(now)),
            None => Timeout::Never,
        };
        if let Some(m) = self.ctx.llreceive(timeout).await {
            self.handle(m);
        }
        self.on_timer();
    }

    fn on_timer(&mut self) {
        let now = self.ctx.now();
        let mut pings = Vec::new();
        if let Some(w) = self.wave.as_mut() {
            if !w.pending.is_empty() && now >= w.next_ping {
                pings.extend(w.pending.iter().map(|&p| (p, w.id)));
                w.next_ping = now + self.config.probe_timeout;
            }
        }
        for (p, wave) in pings {
            self.control(p, &Control::Ping { wave });
        }
        let start = self.wave.is_none() && self.lead.as_ref().is_some_and(|l| now >= l.next_wave_at);
        if start {
            self.start_wave();
        }
    }

    fn start_wave(&mut self) {
        let lead = self.lead.as_mut().expect("initiator");
        lead.counter += 1;
        let id = lead.counter;
        self.latest_wave = id;
        self.begin(id, None, self.phase);
    }

    fn begin(&mut self, id: u64, parent: Option<ProcessId>, phase: u64) {
        let children: BTreeSet<ProcessId> = self
            .buddies
            .iter()
            .copied()
            .filter(|b| Some(*b) != parent && !self.failed.contains(b))
            .collect();
        let probe = Control::Probe {
            wave: id,
            phase,
            failed: self.failed.clone(),
        };
        for &c in &children {
            self.control(c, &probe);
        }
        self.wave = Some(Wave {
            id,
            phase,
            parent,
            pending: children,
            clean: true,
            failed: BTreeSet::new(),
            next_ping: self.ctx.now() + self.config.probe_timeout,
        });
        self.try_finish_wave();
    }

    fn own_clean(&self, probe_phase: u64) -> bool {
        if !self.attached || self.retired {
            return true;
        }
        let owed = self.outstanding.iter().any(|(p, n)| *n > 0 && !self.failed.contains(p));
        probe_phase == self.phase && self.initialized && !self.ended && self.passive && self.queue.is_empty() && !self.black && !owed
    }

    fn try_finish_wave(&mut self) {
        let Some(w) = self.wave.as_ref() else { return };
        if !w.pending.is_empty() {
            return;
        }
        let w = self.wave.take().expect("checked");
        let clean = w.clean && self.own_clean(w.phase);
        self.black = false;
        let mut failed = w.failed;
        failed.extend(self.failed.iter().copied());
        match w.parent {
            Some(parent) => {
                self.control(parent, &Control::Echo { wave: w.id, clean, failed });
            }
            None => self.complete_wave(clean, failed),
        }
    }

    fn complete_wave(&mut self, clean: bool, failed: BTreeSet<ProcessId>) {
        self.failed.extend(failed);
        for f in self.failed.clone() {
            self.outstanding.remove(&f);
        }
        let now = self.ctx.now();
        let latency = self.ctx.max_latency();
        let lead = self.lead.as_mut().expect("initiator");
        let fresh = !self.failed.is_subset(&lead.known_failed);
        lead.known_failed = self.failed.clone();
        if fresh {
            lead.phase_failure = true;
            // Messages sent by a crashed process may still be in flight.
            lead.next_wave_at = now + latency + 1;
            return;
        }
        if !clean {
            lead.next_wave_at = now + self.config.wave_interval;
            return;
        }
        let failure = lead.phase_failure;
        lead.phase_failure = false;
        lead.next_wave_at = now + self.config.wave_interval;
        let phase = self.phase;
        self.ctx.check_barrier(phase, failure);
        let msg = Control::Terminated {
            phase,
            failure,
            failed: self.failed.clone(),
        };
        for b in self.buddies.clone() {
            if !self.failed.contains(&b) {
                self.control(b, &msg);
            }
        }
        self.end_phase(failure);
    }

    fn end_phase(&mut self, failure: bool) {
        self.last_failure = Some(failure);
        self.barriers += 1;
        self.phase += 1;
        self.initialized = false;
        self.ended = true;
        self.black = false;
        self.passive = false;
        self.outstanding.retain(|_, n| *n > 0);
        self.report();
    }

    fn handle(&mut self, m: Message) {
        if m.returned {
            self.handle_bounce(m);
            return;
        }
        match m.class {
            Class::Raw => self.raw.push_back(m),
            Class::App => {
                self.control(m.sender, &Control::Ack { phase: m.phase });
                self.black = true;
                if !self.attached {
                    self.attached = true;
                }
                if m.phase == self.phase && self.initialized {
                    self.queue.push_back(m);
                } else if m.phase >= self.phase {
                    self.later.push(m);
                } else {
                    self.ctx.note(Some(m.phase), format!("stale {} from {}", m.tag, m.sender));
                }
                self.report();
            }
            Class::Control => {
                let Ok(c) = serde_json::from_slice::<Control>(&m.payload) else {
                    return;
                };
                self.handle_control(m.sender, c);
            }
        }
    }

    fn mark_failed(&mut self, p: ProcessId) {
        if self.buddies.contains(&p) || self.outstanding.contains_key(&p) {
            self.failed.insert(p);
        }
        self.outstanding.remove(&p);
    }

    fn handle_bounce(&mut self, m: Message) {
        let target = m.target;
        match m.class {
            Class::App => {
                if let Some(n) = self.outstanding.get_mut(&target) {
                    *n = n.saturating_sub(1);
                }
                self.failed.insert(target);
                self.outstanding.remove(&target);
                self.bounced.push(m);
            }
            Class::Control => {
                let was_buddy = self.buddies.contains(&target);
                self.mark_failed(target);
                if let Some(w) = self.wave.as_mut() {
                    if w.pending.remove(&target) && was_buddy {
                        w.clean = false;
                        w.failed.insert(target);
                    }
                }
                self.try_finish_wave();
            }
            Class::Raw => {}
        }
    }

    fn handle_control(&mut self, from: ProcessId, c: Control) {
        match c {
            Control::Ack { .. } => {
                if let Some(n) = self.outstanding.get_mut(&from) {
                    *n = n.saturating_sub(1);
                }
                self.black = true;
            }
            Control::Ping { wave } => {
                // A child that lost track of the wave answers unclean.
                if self.wave.as_ref().map(|w| w.id) != Some(wave) {
                    let failed = self.failed.clone();
                    self.control(from, &Control::Echo { wave, clean: false, failed });
                }
            }
            Control::Probe { wave, phase, failed } => {
                for f in failed {
                    self.failed.insert(f);
                    self.outstanding.remove(&f);
                }
                if wave <= self.latest_wave {
                    // Non-tree edge or stale wave.
                    self.control(
                        from,
                        &Control::Echo {
                            wave,
                            clean: true,
                            failed: BTreeSet::new(),
                        },
                    );
                    return;
                }
                self.latest_wave = wave;
                self.begin(wave, Some(from), phase);
            }
            Control::Echo { wave, clean, failed } => {
                if let Some(w) = self.wave.as_mut() {
                    if w.id == wave && w.pending.remove(&from) {
                        w.clean &= clean;
                        w.failed.extend(failed);
                    }
                }
                self.try_finish_wave();
            }
            Control::Terminated { phase, failure, failed } => {
                if phase < self.phase {
                    return;
                }
                for f in failed {
                    self.failed.insert(f);
                }
                if phase > self.phase {
                    self.ctx
                        .note(Some(phase), format!("skipped from phase {} to {}", self.phase, phase));
                    self.phase = phase;
                }
                let msg = Control::Terminated {
                    phase,
                    failure,
                    failed: self.failed.clone(),
                };
                for b in self.buddies.clone() {
                    if b != from && !self.failed.contains(&b) {
                        self.control(b, &msg);
                    }
                }
                if self.wave.as_ref().is_some_and(|w| w.phase <= phase) {
                    self.wave = None;
                }
                self.end_phase(failure);
            }
        }
    }
}
