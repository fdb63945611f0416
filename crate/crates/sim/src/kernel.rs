//! Discrete-step simulated network with cooperatively scheduled processes.
//!
//! Every process is an `async` task polled by the scheduler. A task only
//! makes progress inside [`Ctx::llreceive`] or [`Ctx::sleep_until`], so the
//! whole run is a deterministic function of the seed.

use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::fmt;
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll, Waker};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProcessId(pub u64);

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Traffic class. The kernel never looks inside payloads; the class and tag
/// only feed the trace and the omniscient checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class {
    /// Outside termination detection (registration handshakes).
    Raw,
    /// Application traffic counted by termination detection.
    App,
    /// Termination-detection control traffic.
    Control,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub sender: ProcessId,
    pub target: ProcessId,
    pub phase: u64,
    pub class: Class,
    pub tag: String,
    pub payload: Vec<u8>,
    /// Set when the message bounced off a dead target.
    pub returned: bool,
}

impl Message {
    pub fn new(sender: ProcessId, target: ProcessId, phase: u64, class: Class, tag: &str, payload: Vec<u8>) -> Self {
        Message {
            sender,
            target,
            phase,
            class,
            tag: tag.to_string(),
            payload,
            returned: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timeout {
    Never,
    After(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Spawn,
    Send,
    Deliver,
    Return,
    Drop,
    Crash,
    Finish,
    Barrier,
    Note,
    Violation,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Spawn => "spawn",
            EventKind::Send => "send",
            EventKind::Deliver => "deliver",
            EventKind::Return => "return",
            EventKind::Drop => "drop",
            EventKind::Crash => "crash",
            EventKind::Finish => "finish",
            EventKind::Barrier => "barrier",
            EventKind::Note => "note",
            EventKind::Violation => "violation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: u64,
    pub kind: EventKind,
    pub source: Option<ProcessId>,
    pub target: Option<ProcessId>,
    pub phase: Option<u64>,
    pub summary: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let id = |p: Option<ProcessId>| p.map_or("-".to_string(), |p| p.to_string());
        let phase = self.phase.map_or("-".to_string(), |p| p.to_string());
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.step,
            self.kind.as_str(),
            id(self.source),
            id(self.target),
            phase,
            self.summary
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelConfig {
    pub seed: u64,
    /// Latency of every hop and every bounce is uniform in `1..=max_latency`.
    pub max_latency: u64,
    /// Largest accepted payload in bytes.
    pub capacity: usize,
    pub max_steps: u64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            seed: 0,
            max_latency: 16,
            capacity: 1 << 20,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcState {
    Alive,
    Crashed,
    Finished,
}

struct Slot {
    name: String,
    daemon: bool,
    state: ProcState,
    started: bool,
    mailbox: VecDeque<Message>,
    wake_at: Option<u64>,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Due {
    step: u64,
    key: u64,
    seq: u64,
}

/// One barrier detection as seen by the checker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BarrierRecord {
    pub phase: u64,
    pub step: u64,
    /// Steps since the last application activity in the phase.
    pub latency: u64,
    pub failure: bool,
}

struct Shared {
    config: KernelConfig,
    clock: u64,
    rng: ChaCha8Rng,
    next_id: u64,
    slots: BTreeMap<ProcessId, Slot>,
    heap: BinaryHeap<Reverse<Due>>,
    in_flight: BTreeMap<u64, (ProcessId, Message)>,
    next_seq: u64,
    trace: Vec<TraceEvent>,
    status: BTreeMap<ProcessId, (u64, bool)>,
    last_activity: BTreeMap<u64, u64>,
    barriers: Vec<BarrierRecord>,
    violations: Vec<String>,
    sent: u64,
}

impl Shared {
    fn log(&mut self, kind: EventKind, source: Option<ProcessId>, target: Option<ProcessId>, phase: Option<u64>, summary: String) {
        self.trace.push(TraceEvent {
            step: self.clock,
            kind,
            source,
            target,
            phase,
            summary,
        });
    }

    fn latency(&mut self) -> u64 {
        self.rng.gen_range(1..=self.config.max_latency)
    }

    fn enqueue(&mut self, to: ProcessId, msg: Message) {
        let step = self.clock + self.latency();
        let key = self.rng.gen();
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Due { step, key, seq }));
        self.in_flight.insert(seq, (to, msg));
    }

    fn alive(&self, p: ProcessId) -> bool {
        self.slots.get(&p).is_some_and(|s| s.state == ProcState::Alive)
    }

    fn touch(&mut self, phase: u64) {
        self.last_activity.insert(phase, self.clock);
    }

    fn bounce(&mut self, mut msg: Message) {
        if msg.returned {
            self.log(EventKind::Drop, Some(msg.sender), Some(msg.target), Some(msg.phase), msg.tag.clone());
            return;
        }
        msg.returned = true;
        let sender = msg.sender;
        self.enqueue(sender, msg);
    }

    fn deliver_due(&mut self) {
        while let Some(Reverse(top)) = self.heap.peek() {
            if top.step > self.clock {
                break;
            }
            let Reverse(due) = self.heap.pop().expect("peeked");
            let (to, msg) = self.in_flight.remove(&due.seq).expect("scheduled message");
            if self.alive(to) {
                let kind = if msg.returned { EventKind::Return } else { EventKind::Deliver };
                self.log(kind, Some(msg.sender), Some(msg.target), Some(msg.phase), msg.tag.clone());
                if msg.class == Class::App && !msg.returned {
                    self.touch(msg.phase);
                }
                self.slots.get_mut(&to).expect("alive").mailbox.push_back(msg);
            } else {
                self.bounce(msg);
            }
        }
    }

    fn crash(&mut self, p: ProcessId) {
        let Some(slot) = self.slots.get_mut(&p) else { return };
        if slot.state != ProcState::Alive {
            return;
        }
        slot.state = ProcState::Crashed;
        let queued: Vec<Message> = slot.mailbox.drain(..).collect();
        self.status.remove(&p);
        self.log(EventKind::Crash, Some(p), None, None, String::new());
        for m in queued {
            self.bounce(m);
        }
    }

    fn check_barrier(&mut self, phase: u64, failure: bool) {
        let mut problems = Vec::new();
        for (to, m) in self.in_flight.values() {
            if m.class == Class::App && m.phase == phase && !m.returned && self.alive(*to) {
                problems.push(format!("message {} {}->{} in flight", m.tag, m.sender, m.target));
            }
        }
        for (p, slot) in &self.slots {
            if slot.state != ProcState::Alive {
                continue;
            }
            for m in &slot.mailbox {
                if m.class == Class::App && m.phase == phase && !m.returned {
                    problems.push(format!("message {} {}->{} undelivered", m.tag, m.sender, m.target));
                }
            }
            if let Some((ph, true)) = self.status.get(p) {
                if *ph == phase {
                    problems.push(format!("{p} still active"));
                }
            }
        }
        let since = self.last_activity.get(&phase).copied().unwrap_or(0);
        self.barriers.push(BarrierRecord {
            phase,
            step: self.clock,
            latency: self.clock.saturating_sub(since),
            failure,
        });
        self.log(
            EventKind::Barrier,
            None,
            None,
            Some(phase),
            if failure { "failure".into() } else { "clean".into() },
        );
        for p in problems {
            let text = format!("early termination of phase {phase}: {p}");
            self.log(EventKind::Violation, None, None, Some(phase), text.clone());
            self.violations.push(text);
        }
    }
}

/// Handle a process uses to talk to the kernel.
#[derive(Clone)]
pub struct Ctx {
    id: ProcessId,
    shared: Rc<RefCell<Shared>>,
}

impl Ctx {
    pub fn id(&self) -> ProcessId {
        self.id
    }

    pub fn now(&self) -> u64 {
        self.shared.borrow().clock
    }

    pub fn max_latency(&self) -> u64 {
        self.shared.borrow().config.max_latency
    }

    /// Dispatches `msg`; `false` if the payload exceeds the capacity.
    pub fn llsend(&self, msg: Message) -> bool {
        let mut s = self.shared.borrow_mut();
        if msg.payload.len() > s.config.capacity {
            return false;
        }
        s.log(EventKind::Send, Some(msg.sender), Some(msg.target), Some(msg.phase), msg.tag.clone());
        if msg.class == Class::App {
            s.touch(msg.phase);
        }
        s.sent += 1;
        let to = msg.target;
        s.enqueue(to, msg);
        true
    }

    /// Next delivered message, or `None` once the timeout expires.
    pub fn llreceive(&self, timeout: Timeout) -> Receive<'_> {
        Receive {
            ctx: self,
            timeout,
            deadline: None,
        }
    }

    /// Waits until step `at` without consuming messages.
    pub fn sleep_until(&self, at: u64) -> Sleep<'_> {
        Sleep { ctx: self, at }
    }

    /// Crashes the calling process; the returned future never completes.
    pub fn crash_self(&self) -> std::future::Pending<()> {
        self.shared.borrow_mut().crash(self.id);
        std::future::pending()
    }

    /// Declares the DTD status of this process for the omniscient checker.
    pub fn report_status(&self, phase: u64, active: bool) {
        let mut s = self.shared.borrow_mut();
        if s.status.get(&self.id) != Some(&(phase, active)) {
            s.touch(phase);
        }
        s.status.insert(self.id, (phase, active));
    }

    pub fn clear_status(&self) {
        self.shared.borrow_mut().status.remove(&self.id);
    }

    /// Called by the detector when it announces a barrier.
    pub fn check_barrier(&self, phase: u64, failure: bool) {
        self.shared.borrow_mut().check_barrier(phase, failure);
    }

    pub fn note(&self, phase: Option<u64>, summary: impl Into<String>) {
        let mut s = self.shared.borrow_mut();
        let id = self.id;
        s.log(EventKind::Note, Some(id), None, phase, summary.into());
    }

    /// A new id that will never be handed to a process.
    pub fn fresh_id(&self) -> ProcessId {
        let mut s = self.shared.borrow_mut();
        s.next_id += 1;
        ProcessId(s.next_id - 1)
    }

    pub fn random_below(&self, n: usize) -> usize {
        self.shared.borrow_mut().rng.gen_range(0..n)
    }
}

pub struct Receive<'a> {
    ctx: &'a Ctx,
    timeout: Timeout,
    deadline: Option<Option<u64>>,
}

impl Future for Receive<'_> {
    type Output = Option<Message>;

    fn poll(mut self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<Option<Message>> {
        let ctx = self.ctx;
        let mut s = ctx.shared.borrow_mut();
        let now = s.clock;
        let timeout = self.timeout;
        let deadline = *self.deadline.get_or_insert(match timeout {
            Timeout::Never => None,
            Timeout::After(t) => Some(now + t),
        });
        let slot = s.slots.get_mut(&ctx.id).expect("own slot");
        if let Some(m) = slot.mailbox.pop_front() {
            slot.wake_at = None;
            return Poll::Ready(Some(m));
        }
        match deadline {
            Some(d) if d <= now => {
                slot.wake_at = None;
                Poll::Ready(None)
            }
            _ => {
                slot.wake_at = deadline;
                Poll::Pending
            }
        }
    }
}

pub struct Sleep<'a> {
    ctx: &'a Ctx,
    at: u64,
}

impl Future for Sleep<'_> {
    type Output = ();

    fn poll(self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<()> {
        let mut s = self.ctx.shared.borrow_mut();
        let now = s.clock;
        let slot = s.slots.get_mut(&self.ctx.id).expect("own slot");
        if now >= self.at {
            slot.wake_at = None;
            Poll::Ready(())
        } else {
            slot.wake_at = Some(self.at);
            Poll::Pending
        }
    }
}

type Task = Pin<Box<dyn Future<Output = ()>>>;

/// Summary of a finished simulation.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub steps: u64,
    pub trace: Vec<TraceEvent>,
    pub barriers: Vec<BarrierRecord>,
    pub violations: Vec<String>,
    pub stalled: bool,
    pub messages_sent: u64,
}

pub struct Kernel {
    shared: Rc<RefCell<Shared>>,
    tasks: BTreeMap<ProcessId, Task>,
    crashes: BTreeMap<u64, Vec<ProcessId>>,
}

impl Kernel {
    pub fn new(config: KernelConfig) -> Self {
        Kernel {
            shared: Rc::new(RefCell::new(Shared {
                config,
                clock: 0,
                rng: ChaCha8Rng::seed_from_u64(config.seed),
                next_id: 1,
                slots: BTreeMap::new(),
                heap: BinaryHeap::new(),
                in_flight: BTreeMap::new(),
                next_seq: 0,
                trace: Vec::new(),
                status: BTreeMap::new(),
                last_activity: BTreeMap::new(),
                barriers: Vec::new(),
                violations: Vec::new(),
                sent: 0,
            })),
            tasks: BTreeMap::new(),
            crashes: BTreeMap::new(),
        }
    }

    /// Reserves an id so that processes can be wired before they exist.
    pub fn reserve(&mut self) -> ProcessId {
        let mut s = self.shared.borrow_mut();
        s.next_id += 1;
        ProcessId(s.next_id - 1)
    }

    /// Registers a process under a previously reserved id. Daemons do not
    /// keep the simulation alive.
    pub fn spawn_as<F, Fut>(&mut self, id: ProcessId, name: &str, daemon: bool, body: F)
    where
        F: FnOnce(Ctx) -> Fut,
        Fut: Future<Output = ()> + 'static,
    {
        let ctx = Ctx {
            id,
            shared: self.shared.clone(),
        };
        {
            let mut s = self.shared.borrow_mut();
            s.slots.insert(
                id,
                Slot {
                    name: name.to_string(),
                    daemon,
                    state: ProcState::Alive,
                    started: false,
                    mailbox: VecDeque::new(),
                    wake_at: None,
                },
            );
            s.log(EventKind::Spawn, Some(id), None, None, name.to_string());
        }
        self.tasks.insert(id, Box::pin(body(ctx)));
    }

    pub fn spawn<F, Fut>(&mut self, name: &str, daemon: bool, body: F) -> ProcessId
    where
        F: FnOnce(Ctx) -> Fut,
        Fut: Future<Output = ()> + 'static,
    {
        let id = self.reserve();
        self.spawn_as(id, name, daemon, body);
        id
    }

    pub fn schedule_crash(&mut self, p: ProcessId, at: u64) -> Result<(), SimError> {
        if !self.shared.borrow().slots.contains_key(&p) {
            return Err(SimError::UnknownProcess(p));
        }
        self.crashes.entry(at).or_default().push(p);
        Ok(())
    }

    pub fn name(&self, p: ProcessId) -> Option<String> {
        self.shared.borrow().slots.get(&p).map(|s| s.name.clone())
    }

    pub fn state(&self, p: ProcessId) -> Option<ProcState> {
        self.shared.borrow().slots.get(&p).map(|s| s.state)
    }

    fn done(&self) -> bool {
        let s = self.shared.borrow();
        s.slots.values().all(|slot| slot.daemon || slot.state != ProcState::Alive)
    }

    fn runnable(&self, p: ProcessId) -> bool {
        let s = self.shared.borrow();
        let slot = &s.slots[&p];
        slot.state == ProcState::Alive
            && (!slot.started || !slot.mailbox.is_empty() || slot.wake_at.is_some_and(|w| w <= s.clock))
    }

    /// Runs until every non-daemon process has finished or crashed.
    pub fn run(mut self) -> RunReport {
        let mut cx = Context::from_waker(Waker::noop());
        let mut stalled = false;
        loop {
            let now = self.shared.borrow().clock;
            if let Some(victims) = self.crashes.remove(&now) {
                for p in victims {
                    self.shared.borrow_mut().crash(p);
                    self.tasks.remove(&p);
                }
            }
            self.shared.borrow_mut().deliver_due();
            let ids: Vec<ProcessId> = self.tasks.keys().copied().collect();
            for p in ids {
                if !self.runnable(p) {
                    continue;
                }
                self.shared.borrow_mut().slots.get_mut(&p).expect("slot").started = true;
                let task = self.tasks.get_mut(&p).expect("task");
                let finished = task.as_mut().poll(&mut cx).is_ready();
                let mut s = self.shared.borrow_mut();
                let state = s.slots[&p].state;
                if finished && state == ProcState::Alive {
                    let slot = s.slots.get_mut(&p).expect("slot");
                    slot.state = ProcState::Finished;
                    let queued: Vec<Message> = slot.mailbox.drain(..).collect();
                    s.status.remove(&p);
                    s.log(EventKind::Finish, Some(p), None, None, String::new());
                    for m in queued {
                        s.bounce(m);
                    }
                }
                if finished || state != ProcState::Alive {
                    drop(s);
                    self.tasks.remove(&p);
                }
            }
            if self.done() {
                break;
            }
            let mut s = self.shared.borrow_mut();
            let idle = s.heap.is_empty()
                && s.slots.values().all(|slot| slot.state != ProcState::Alive || (slot.started && slot.mailbox.is_empty() && slot.wake_at.is_none()))
                && self.crashes.keys().all(|&at| at <= s.clock);
            if idle || s.clock >= s.config.max_steps {
                stalled = true;
                break;
            }
            s.clock += 1;
        }
        let s = self.shared.borrow();
        RunReport {
            steps: s.clock,
            trace: s.trace.clone(),
            barriers: s.barriers.clone(),
            violations: s.violations.clone(),
            stalled,
            messages_sent: s.sent,
        }
    }
}
