//! Wires registries, gateways, the collector and players into one kernel run.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use mechnet_core::catalog::{Mechanism, TypeReport};
use mechnet_core::Scalar;

use crate::dtd::DtdConfig;
use crate::hlc::{run_gateway, AliasMap, Backbone, PolicyKind, Registry, RegistryConfig, RegistrationRule};
use crate::kernel::{Kernel, KernelConfig, ProcessId, RunReport};
use crate::protocol::{
    run_collector, run_player, CollectorConfig, CrashPoint, Journal, PlayerConfig, Strategy,
};

#[derive(Debug, Clone)]
pub struct RegistrySpec {
    pub name: String,
    pub region: String,
    pub rule: RegistrationRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crash {
    AtStep(u64),
    At { round: u32, point: CrashPoint },
}

#[derive(Debug, Clone)]
pub struct PlayerSpec<S> {
    pub name: String,
    pub registry: String,
    pub region: String,
    pub truth: TypeReport<S>,
    pub strategy: Strategy<S>,
    pub crash: Option<Crash>,
    pub skip_rounds: BTreeSet<u32>,
    pub start_at: u64,
}

#[derive(Debug, Clone)]
pub struct WorldSpec<S> {
    pub seed: u64,
    pub max_latency: u64,
    pub max_steps: u64,
    pub capacity: usize,
    pub mechanism: Mechanism<S>,
    /// The first registry hosts the collector and initiates detection waves.
    pub registries: Vec<RegistrySpec>,
    pub gateways: Vec<String>,
    pub links: Vec<(String, String)>,
    pub policy: PolicyKind,
    pub masking: bool,
    pub self_copy: bool,
    pub react_deadline: u64,
    pub policing: bool,
    pub exclude_winners: bool,
    pub rounds: u32,
    pub inspect_timeout: u64,
    pub probe_timeout: u64,
    pub wave_interval: u64,
    pub players: Vec<PlayerSpec<S>>,
}

impl<S> WorldSpec<S> {
    /// One registry, no gateways, default timings.
    pub fn single_registry(mechanism: Mechanism<S>, players: Vec<PlayerSpec<S>>, rule: RegistrationRule) -> Self {
        WorldSpec {
            seed: 0,
            max_latency: 16,
            max_steps: 1_000_000,
            capacity: 1 << 20,
            mechanism,
            registries: vec![RegistrySpec {
                name: "R1".into(),
                region: "any".into(),
                rule,
            }],
            gateways: Vec::new(),
            links: Vec::new(),
            policy: PolicyKind::Simultaneous,
            masking: false,
            self_copy: false,
            react_deadline: 300,
            policing: false,
            exclude_winners: false,
            rounds: 1,
            inspect_timeout: 100,
            probe_timeout: 64,
            wave_interval: 4,
            players,
        }
    }
}

impl<S> PlayerSpec<S> {
    pub fn honest(name: &str, registry: &str, truth: TypeReport<S>) -> Self {
        PlayerSpec {
            name: name.into(),
            registry: registry.into(),
            region: "any".into(),
            truth,
            strategy: Strategy::Honest,
            crash: None,
            skip_rounds: BTreeSet::new(),
            start_at: 0,
        }
    }
}

#[derive(Debug)]
pub struct WorldRun<S> {
    pub report: RunReport,
    pub journal: Journal<S>,
    pub names: BTreeMap<ProcessId, String>,
    pub aliases: AliasMap,
    pub players: Vec<(String, ProcessId)>,
    pub registries: Vec<ProcessId>,
    pub collector: ProcessId,
}

impl<S> WorldRun<S> {
    /// Scenario name behind an alias.
    pub fn name_of_alias(&self, alias: ProcessId) -> String {
        if alias == self.collector {
            return "TC".into();
        }
        let real = self.aliases.get(&alias).copied().unwrap_or(alias);
        self.names.get(&real).cloned().unwrap_or_else(|| real.to_string())
    }
}

pub fn run_world<S: Scalar>(spec: &WorldSpec<S>) -> Result<WorldRun<S>, String> {
    if spec.registries.is_empty() {
        return Err("at least one registry is required".into());
    }
    let mut kernel = Kernel::new(KernelConfig {
        seed: spec.seed,
        max_latency: spec.max_latency,
        max_steps: spec.max_steps,
        capacity: spec.capacity,
    });
    let mut ids: BTreeMap<String, ProcessId> = BTreeMap::new();
    let mut reserve = |kernel: &mut Kernel, name: &str| -> Result<ProcessId, String> {
        let id = kernel.reserve();
        if ids.insert(name.to_string(), id).is_some() {
            return Err(format!("duplicate process name `{name}`"));
        }
        Ok(id)
    };
    let registries: Vec<ProcessId> = spec
        .registries
        .iter()
        .map(|r| reserve(&mut kernel, &r.name))
        .collect::<Result<_, _>>()?;
    let gateways: Vec<ProcessId> = spec
        .gateways
        .iter()
        .map(|g| reserve(&mut kernel, g))
        .collect::<Result<_, _>>()?;
    let collector = reserve(&mut kernel, "TC")?;
    let players: Vec<(String, ProcessId)> = spec
        .players
        .iter()
        .map(|p| reserve(&mut kernel, &p.name).map(|id| (p.name.clone(), id)))
        .collect::<Result<_, _>>()?;
    let lookup = |name: &str| ids.get(name).copied().ok_or_else(|| format!("unknown process `{name}`"));
    let links = spec
        .links
        .iter()
        .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
        .collect::<Result<Vec<_>, String>>()?;
    let backbone = Rc::new(Backbone::new(&registries, &gateways, &links)?);
    let dtd = DtdConfig {
        probe_timeout: spec.probe_timeout,
        wave_interval: spec.wave_interval,
        ..DtdConfig::new(registries[0])
    };
    let aliases: Rc<RefCell<AliasMap>> = Rc::default();
    let journal: Rc<RefCell<Journal<S>>> = Rc::default();

    for (i, (r, &id)) in spec.registries.iter().zip(&registries).enumerate() {
        let config = RegistryConfig {
            region: r.region.clone(),
            rule: r.rule.clone(),
            policy: spec.policy,
            masking: spec.masking,
            react_deadline: spec.react_deadline,
            policing: spec.policing,
            exclude_winners: spec.exclude_winners,
            rounds: spec.rounds,
            collector: (i == 0).then_some(collector),
            backbone: backbone.clone(),
            dtd,
            aliases: aliases.clone(),
        };
        kernel.spawn_as(id, &r.name, true, move |ctx| Registry::new(ctx, config).run());
    }
    for (g, &id) in spec.gateways.iter().zip(&gateways) {
        let backbone = backbone.clone();
        kernel.spawn_as(id, g, true, move |ctx| run_gateway(ctx, dtd, backbone));
    }
    let collector_config = CollectorConfig {
        registry: registries[0],
        rounds: spec.rounds,
        policing: spec.policing,
        dtd,
        journal: journal.clone(),
    };
    kernel.spawn_as(collector, "TC", false, move |ctx| run_collector(ctx, collector_config));
    for (p, &(_, id)) in spec.players.iter().zip(&players) {
        let registry = lookup(&p.registry)?;
        if !backbone.is_registry(registry) {
            return Err(format!("`{}` is not a registry", p.registry));
        }
        let crash = match p.crash {
            Some(Crash::At { round, point }) => Some((round, point)),
            _ => None,
        };
        let config = PlayerConfig {
            registry,
            collector,
            region: p.region.clone(),
            truth: p.truth.clone(),
            strategy: p.strategy.clone(),
            crash,
            skip_rounds: p.skip_rounds.clone(),
            start_at: p.start_at,
            rounds: spec.rounds,
            mechanism: spec.mechanism.clone(),
            policing: spec.policing,
            self_copy: spec.self_copy,
            inspect_timeout: spec.inspect_timeout,
            dtd,
            journal: journal.clone(),
        };
        kernel.spawn_as(id, &p.name, false, move |ctx| run_player(ctx, config));
        if let Some(Crash::AtStep(step)) = p.crash {
            kernel.schedule_crash(id, step).map_err(|e| e.to_string())?;
        }
    }
    let names: BTreeMap<ProcessId, String> = ids.iter().map(|(n, &id)| (id, n.clone())).collect();
    let report = kernel.run();
    let journal = journal.borrow().clone();
    let aliases = aliases.borrow().clone();
    Ok(WorldRun {
        report,
        journal,
        names,
        aliases,
        players,
        registries,
        collector,
    })
}
