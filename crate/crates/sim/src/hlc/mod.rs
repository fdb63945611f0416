//! High level communication: registries, gateways and the player client.
//!
//! A player only ever talks to its own registry. Registries fan broadcasts
//! out to their local players and hand remote copies to the backbone of
//! gateways and registries, so application payloads never pass through
//! another player.

mod backbone;
mod client;
mod registry;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use backbone::Backbone;
pub use client::{Accepted, Client, Delivery};
pub use registry::{Registry, RegistryBook, RegistryConfig};

use crate::dtd::{Dtd, DtdConfig};
use crate::kernel::{Ctx, ProcessId};

pub const TYPE_TAG: &str = "TYPE";
pub const EXCLUSION_TAG: &str = "EXCLUSION";
pub const POLICE_SUBMIT_TAG: &str = "POLICE_SUBMIT";
pub const POLICE_DISPATCH_TAG: &str = "POLICE_DISPATCH";

/// Body of an exclusion notice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionNotice {
    pub excluded: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegistrationRule {
    /// Open until `deadline` steps after the round started.
    Deadline { deadline: u64 },
    /// Open until this registry holds `count` players, or the deadline.
    LocalQuorum { count: usize, deadline: u64 },
    /// Open until all registries together hold `count` players, or the deadline.
    GlobalQuorum { count: usize, deadline: u64 },
}

impl RegistrationRule {
    pub fn deadline(&self) -> u64 {
        match self {
            RegistrationRule::Deadline { deadline }
            | RegistrationRule::LocalQuorum { deadline, .. }
            | RegistrationRule::GlobalQuorum { deadline, .. } => *deadline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    Simultaneous,
    Sequential,
}

/// Locking policy loaded into a client on acceptance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyInstance {
    Simultaneous,
    /// `seq` starts at 1.
    Sequential { seq: u32, is_last: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dest {
    AllPlayers { self_copy: bool },
    Only(Vec<ProcessId>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Member {
    Player,
    Collector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub alias: ProcessId,
    pub seq: Option<u32>,
    pub member: Member,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    Late,
    Ineligible,
    Duplicate,
    Excluded,
}

/// Raw registration traffic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signal {
    SignIn { region: String },
    SignOut,
    Reject { reason: Reason },
    /// Sent ahead of an acceptance so a late joiner can catch up.
    Welcome { phase: u64, round: u32 },
}

impl Signal {
    pub fn encode(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("signals serialize")
    }

    pub fn decode(bytes: &[u8]) -> Option<Signal> {
        serde_json::from_slice(bytes).ok()
    }
}

/// Application frames carried between players, registries and gateways.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Accept {
        alias: ProcessId,
        gateway: Option<ProcessId>,
        policy: PolicyInstance,
    },
    Submit {
        dest: Dest,
        tag: String,
        body: Vec<u8>,
    },
    Forward {
        to: ProcessId,
        origin: ProcessId,
        origin_seq: Option<u32>,
        targets: Vec<ProcessId>,
        tag: String,
        body: Vec<u8>,
    },
    Deliver {
        origin: ProcessId,
        origin_seq: Option<u32>,
        tag: String,
        body: Vec<u8>,
    },
    Directory {
        to: ProcessId,
        registry: ProcessId,
        entries: Vec<Entry>,
    },
    Registered {
        to: ProcessId,
        registry: ProcessId,
        count: usize,
    },
    Report {
        winners: Vec<ProcessId>,
    },
}

impl Frame {
    pub fn tag(&self) -> String {
        match self {
            Frame::Accept { .. } => "ACCEPT".into(),
            Frame::Submit { tag, .. } | Frame::Forward { tag, .. } | Frame::Deliver { tag, .. } => tag.clone(),
            Frame::Directory { .. } => "DIRECTORY".into(),
            Frame::Registered { .. } => "REGISTERED".into(),
            Frame::Report { .. } => "REPORT".into(),
        }
    }

    /// Registry a backbone frame is heading for.
    pub fn destination(&self) -> Option<ProcessId> {
        match self {
            Frame::Forward { to, .. } | Frame::Directory { to, .. } | Frame::Registered { to, .. } => Some(*to),
            _ => None,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("frames serialize")
    }

    pub fn decode(bytes: &[u8]) -> Option<Frame> {
        serde_json::from_slice(bytes).ok()
    }
}

pub(crate) fn send_frame(dtd: &mut Dtd, frame: &Frame, targets: &[ProcessId]) {
    dtd.send(&frame.tag(), frame.encode(), targets);
}

/// Functionally empty bridge: forwards backbone frames toward their
/// registry without reading the body.
pub async fn run_gateway(ctx: Ctx, dtd_config: DtdConfig, backbone: std::rc::Rc<Backbone>) {
    let me = ctx.id();
    let buddies = backbone.neighbours(me);
    let mut dtd = Dtd::new(ctx, dtd_config, buddies, true);
    loop {
        dtd.initialize().expect("fresh phase");
        while let Some(m) = dtd.passive_receive().await {
            let Some(to) = Frame::decode(&m.payload).and_then(|f| f.destination()) else {
                continue;
            };
            let hop = backbone.next_hop(me, to);
            dtd.send(&m.tag, m.payload, &[hop]);
        }
    }
}

/// Alias to real id, for the harness.
pub type AliasMap = BTreeMap<ProcessId, ProcessId>;
