use std::collections::{BTreeSet, VecDeque};

use super::{send_frame, Dest, Frame, PolicyInstance, Reason, Signal, TYPE_TAG};
use crate::dtd::{Dtd, DtdConfig};
use crate::error::SimError;
use crate::kernel::{Class, Ctx, Message, ProcessId};

/// An application message as seen by its recipient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub origin: ProcessId,
    pub origin_seq: Option<u32>,
    pub tag: String,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Accepted {
    pub alias: ProcessId,
    pub gateway: Option<ProcessId>,
    pub policy: PolicyInstance,
    /// Round the registry is in, which can be ahead for a late joiner.
    pub round: u32,
}

const SIGNIN_POLL: u64 = 10_000;

/// Player side of the communication layer.
pub struct Client {
    dtd: Dtd,
    registry: ProcessId,
    self_copy: bool,
    accepted: Option<Accepted>,
    round: u32,
    armed: bool,
    typed: bool,
    earlier: BTreeSet<u32>,
    held: VecDeque<Delivery>,
    ready: VecDeque<Delivery>,
}

impl Client {
    pub fn new(ctx: Ctx, config: DtdConfig, registry: ProcessId, self_copy: bool) -> Self {
        Client {
            dtd: Dtd::new(ctx, config, [registry], false),
            registry,
            self_copy,
            accepted: None,
            round: 0,
            armed: false,
            typed: false,
            earlier: BTreeSet::new(),
            held: VecDeque::new(),
            ready: VecDeque::new(),
        }
    }

    /// A member wired to its registry from the start, such as the collector.
    pub fn preregistered(ctx: Ctx, config: DtdConfig, registry: ProcessId) -> Self {
        let alias = ctx.id();
        let mut c = Client::new(ctx, config, registry, false);
        c.dtd.attach();
        c.accepted = Some(Accepted {
            alias,
            gateway: None,
            policy: PolicyInstance::Simultaneous,
            round: 0,
        });
        c
    }

    pub fn dtd(&mut self) -> &mut Dtd {
        &mut self.dtd
    }

    pub fn ctx(&self) -> &Ctx {
        self.dtd.ctx()
    }

    pub fn accepted(&self) -> Option<Accepted> {
        self.accepted
    }

    pub fn initialize(&mut self) -> Result<(), SimError> {
        self.dtd.initialize()
    }

    pub fn had_failure(&self) -> Result<bool, SimError> {
        self.dtd.had_failure_in_last_phase()
    }

    /// Registers with the registry; on success the client is attached.
    pub async fn signin(&mut self, region: &str) -> Result<Accepted, Reason> {
        let signal = Signal::SignIn { region: region.to_string() };
        self.dtd.raw_send(self.registry, "SIGNIN", signal.encode());
        loop {
            let Some(m) = self.dtd.receive(SIGNIN_POLL).await else {
                continue;
            };
            match m.class {
                Class::Raw => match Signal::decode(&m.payload) {
                    Some(Signal::Reject { reason }) => return Err(reason),
                    Some(Signal::Welcome { phase, round: r }) => {
                        self.dtd.join(phase);
                        self.round = self.round.max(r);
                    }
                    _ => {}
                },
                _ => {
                    if let Some(Frame::Accept { alias, gateway, policy }) = Frame::decode(&m.payload) {
                        let a = Accepted {
                            alias,
                            gateway,
                            policy,
                            round: self.round,
                        };
                        self.accepted = Some(a);
                        self.typed = false;
                        self.armed = false;
                        self.earlier.clear();
                        return Ok(a);
                    }
                }
            }
        }
    }

    /// Latest round announced by the registry.
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn signout(&mut self) {
        self.dtd.raw_send(self.registry, "SIGNOUT", Signal::SignOut.encode());
        self.accepted = None;
        self.dtd.retire();
    }

    /// Applies the locking policy until the own type is broadcast.
    pub fn arm_policy(&mut self) {
        self.armed = self.accepted.is_some();
        self.typed = false;
        self.earlier.clear();
        self.held.clear();
    }

    fn seq(&self) -> Option<u32> {
        match self.accepted.map(|a| a.policy) {
            Some(PolicyInstance::Sequential { seq, .. }) => Some(seq),
            _ => None,
        }
    }

    /// Counts an excluded earlier player as heard under the sequential policy.
    pub fn excuse(&mut self, seq: u32) {
        if matches!(self.seq(), Some(j) if seq < j) {
            self.earlier.insert(seq);
        }
    }

    /// Broadcast to every registered player.
    pub fn bsend(&mut self, tag: &str, body: Vec<u8>) -> Result<(), SimError> {
        let dest = Dest::AllPlayers { self_copy: self.self_copy };
        self.submit(dest, tag, body)
    }

    /// Multicast to the given aliases.
    pub fn msend(&mut self, tag: &str, body: Vec<u8>, targets: &[ProcessId]) -> Result<(), SimError> {
        if targets.is_empty() {
            return Ok(());
        }
        self.submit(Dest::Only(targets.to_vec()), tag, body)
    }

    fn submit(&mut self, dest: Dest, tag: &str, body: Vec<u8>) -> Result<(), SimError> {
        if self.accepted.is_none() {
            return Err(SimError::NotRegistered(self.ctx().id()));
        }
        if tag == TYPE_TAG && self.armed {
            if let Some(j) = self.seq() {
                if self.earlier.len() + 1 < j as usize {
                    return Err(SimError::PolicyViolation(format!(
                        "player {j} broadcast before {} earlier types",
                        j - 1
                    )));
                }
            }
            self.typed = true;
            self.ready.extend(self.held.drain(..));
        }
        let frame = Frame::Submit {
            dest,
            tag: tag.to_string(),
            body,
        };
        send_frame(&mut self.dtd, &frame, &[self.registry]);
        Ok(())
    }

    /// Frames to the own registry outside the broadcast machinery.
    pub fn to_registry(&mut self, frame: &Frame) {
        send_frame(&mut self.dtd, frame, &[self.registry]);
    }

    fn check_receive(&self) -> Result<(), SimError> {
        if self.armed && !self.typed && self.seq().is_none() {
            return Err(SimError::PolicyViolation("receive before own type broadcast".into()));
        }
        Ok(())
    }

    /// Sorts an incoming message into `ready` or `held`.
    fn accept(&mut self, m: Message) {
        if m.class != Class::App {
            return;
        }
        let Some(Frame::Deliver { origin, origin_seq, tag, body }) = Frame::decode(&m.payload) else {
            return;
        };
        let d = Delivery { origin, origin_seq, tag, body };
        if self.armed && !self.typed && d.tag == TYPE_TAG {
            if let (Some(j), Some(k)) = (self.seq(), d.origin_seq) {
                if k < j {
                    self.earlier.insert(k);
                } else {
                    self.held.push_back(d);
                    return;
                }
            }
        }
        self.ready.push_back(d);
    }

    /// Active receive; `Ok(None)` on timeout.
    pub async fn receive(&mut self, timeout: u64) -> Result<Option<Delivery>, SimError> {
        self.check_receive()?;
        let deadline = self.ctx().now() + timeout;
        loop {
            if let Some(d) = self.ready.pop_front() {
                return Ok(Some(d));
            }
            let now = self.ctx().now();
            if now >= deadline {
                return Ok(None);
            }
            match self.dtd.receive(deadline - now).await {
                Some(m) => self.accept(m),
                None => return Ok(None),
            }
        }
    }

    /// Termination loop step; `Ok(None)` once the phase has ended.
    pub async fn passive_receive(&mut self) -> Result<Option<Delivery>, SimError> {
        self.check_receive()?;
        loop {
            if let Some(d) = self.ready.pop_front() {
                return Ok(Some(d));
            }
            match self.dtd.passive_receive().await {
                Some(m) => self.accept(m),
                None => return Ok(None),
            }
        }
    }

    /// Dispatches queued sends now.
    pub fn flush(&mut self) {
        self.dtd.flush();
    }
}
