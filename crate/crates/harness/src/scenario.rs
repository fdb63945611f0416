//! Line-oriented scenario files.
//!
//! ```text
//! # comment
//! mechanism single-minded
//! items 3
//! registry R1 region=west rule=deadline:200
//! gateway G1
//! link R1 G1
//! player p1 registry=R1 type=20[1,2]
//! ```
//!
//! Global settings are `key value` lines. Registries and players take
//! `key=value` attributes after their name. Round numbers are 1-based.

use std::collections::BTreeSet;
use std::fmt::{self, Write};
use std::str::FromStr;

use mechnet_core::catalog::MechanismKind;
use mechnet_sim::hlc::{PolicyKind, RegistrationRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Exact,
    Float,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategySpec {
    Honest,
    Misreport(String),
    Falsify,
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashSpec {
    Step(u64),
    BeforeType,
    AfterType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryLine {
    pub name: String,
    pub region: String,
    pub rule: RegistrationRule,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayerLine {
    pub name: String,
    pub registry: String,
    /// Defaults to the region of the registry.
    pub region: Option<String>,
    pub announced: String,
    pub strategy: StrategySpec,
    pub crash: Option<CrashSpec>,
    pub crash_round: u32,
    pub skip: BTreeSet<u32>,
    pub start: u64,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeLine {
    pub label: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub title: Option<String>,
    pub seed: u64,
    pub scalar: ScalarKind,
    pub mechanism: MechanismKind,
    pub items: Option<usize>,
    pub cost: Option<String>,
    pub source: Option<String>,
    pub sink: Option<String>,
    pub edges: Vec<EdgeLine>,
    pub rounds: u32,
    pub policing: bool,
    pub masking: bool,
    pub self_copy: bool,
    pub exclude_winners: bool,
    pub policy: PolicyKind,
    pub react_deadline: u64,
    pub inspect_timeout: u64,
    pub probe_timeout: u64,
    pub wave_interval: u64,
    pub max_latency: u64,
    pub max_steps: u64,
    pub capacity: usize,
    pub registries: Vec<RegistryLine>,
    pub gateways: Vec<String>,
    pub links: Vec<(String, String)>,
    pub players: Vec<PlayerLine>,
}

/// A problem found while reading or validating a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

fn issue(line: usize, message: impl Into<String>) -> Issue {
    Issue {
        line,
        message: message.into(),
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            title: None,
            seed: 0,
            scalar: ScalarKind::Exact,
            mechanism: MechanismKind::Vickrey,
            items: None,
            cost: None,
            source: None,
            sink: None,
            edges: Vec::new(),
            rounds: 1,
            policing: false,
            masking: false,
            self_copy: false,
            exclude_winners: false,
            policy: PolicyKind::Simultaneous,
            react_deadline: 300,
            inspect_timeout: 100,
            probe_timeout: 64,
            wave_interval: 4,
            max_latency: 16,
            max_steps: 1_000_000,
            capacity: 1 << 20,
            registries: Vec::new(),
            gateways: Vec::new(),
            links: Vec::new(),
            players: Vec::new(),
        }
    }
}

fn number<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, Issue> {
    v.parse().map_err(|_| issue(line, format!("`{key}` expects a number, got `{v}`")))
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool, Issue> {
    match v {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(issue(line, format!("`{key}` expects on or off, got `{v}`"))),
    }
}

pub fn parse_rule(line: usize, v: &str) -> Result<RegistrationRule, Issue> {
    let parts: Vec<&str> = v.split(':').collect();
    let bad = || issue(line, format!("unknown registration rule `{v}`"));
    match parts.as_slice() {
        ["deadline", d] => Ok(RegistrationRule::Deadline {
            deadline: number(line, "deadline", d)?,
        }),
        ["local-quorum", c, d] => Ok(RegistrationRule::LocalQuorum {
            count: number(line, "quorum", c)?,
            deadline: number(line, "deadline", d)?,
        }),
        ["global-quorum", c, d] => Ok(RegistrationRule::GlobalQuorum {
            count: number(line, "quorum", c)?,
            deadline: number(line, "deadline", d)?,
        }),
        _ => Err(bad()),
    }
}

fn rule_text(rule: &RegistrationRule) -> String {
    match rule {
        RegistrationRule::Deadline { deadline } => format!("deadline:{deadline}"),
        RegistrationRule::LocalQuorum { count, deadline } => format!("local-quorum:{count}:{deadline}"),
        RegistrationRule::GlobalQuorum { count, deadline } => format!("global-quorum:{count}:{deadline}"),
    }
}

fn attributes(line: usize, words: &[&str]) -> Result<Vec<(String, String)>, Issue> {
    words
        .iter()
        .map(|w| {
            w.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| issue(line, format!("expected key=value, got `{w}`")))
        })
        .collect()
}

fn parse_strategy(line: usize, v: &str) -> Result<StrategySpec, Issue> {
    match v {
        "honest" => Ok(StrategySpec::Honest),
        "falsify" => Ok(StrategySpec::Falsify),
        "duplicate" => Ok(StrategySpec::Duplicate),
        _ => match v.strip_prefix("misreport:") {
            Some(t) => Ok(StrategySpec::Misreport(t.to_string())),
            None => Err(issue(line, format!("unknown strategy `{v}`"))),
        },
    }
}

fn parse_crash(line: usize, v: &str) -> Result<CrashSpec, Issue> {
    match v {
        "before-type" => Ok(CrashSpec::BeforeType),
        "after-type" => Ok(CrashSpec::AfterType),
        _ => match v.strip_prefix("step:") {
            Some(n) => Ok(CrashSpec::Step(number(line, "crash", n)?)),
            None => Err(issue(line, format!("unknown crash point `{v}`"))),
        },
    }
}

fn parse_player(line: usize, name: &str, attrs: Vec<(String, String)>) -> Result<PlayerLine, Issue> {
    let mut p = PlayerLine {
        name: name.to_string(),
        registry: String::new(),
        region: None,
        announced: String::new(),
        strategy: StrategySpec::Honest,
        crash: None,
        crash_round: 1,
        skip: BTreeSet::new(),
        start: 0,
        line,
    };
    for (k, v) in attrs {
        match k.as_str() {
            "registry" => p.registry = v,
            "region" => p.region = Some(v),
            "type" => p.announced = v,
            "strategy" => p.strategy = parse_strategy(line, &v)?,
            "crash" => p.crash = Some(parse_crash(line, &v)?),
            "crash-round" => p.crash_round = number(line, &k, &v)?,
            "skip" => {
                for r in v.split(',').filter(|s| !s.is_empty()) {
                    p.skip.insert(number(line, "skip", r)?);
                }
            }
            "start" => p.start = number(line, &k, &v)?,
            _ => return Err(issue(line, format!("unknown player attribute `{k}`"))),
        }
    }
    if p.registry.is_empty() {
        return Err(issue(line, format!("player {name} needs registry=")));
    }
    if p.announced.is_empty() {
        return Err(issue(line, format!("player {name} needs type=")));
    }
    Ok(p)
}

impl Scenario {
    /// Reads the text form; reports every malformed line.
    pub fn parse(text: &str) -> Result<Scenario, Vec<Issue>> {
        let mut s = Scenario::default();
        let mut issues = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Err(e) = s.apply(line, content) {
                issues.push(e);
            }
        }
        if issues.is_empty() {
            Ok(s)
        } else {
            Err(issues)
        }
    }

    fn apply(&mut self, line: usize, content: &str) -> Result<(), Issue> {
        let words: Vec<&str> = content.split_whitespace().collect();
        let key = words[0];
        let rest = &words[1..];
        let single = || -> Result<&str, Issue> {
            match rest {
                [v] => Ok(v),
                _ => Err(issue(line, format!("`{key}` takes exactly one value"))),
            }
        };
        match key {
            "title" => self.title = Some(rest.join(" ")),
            "seed" => self.seed = number(line, key, single()?)?,
            "scalar" => {
                self.scalar = match single()? {
                    "exact" => ScalarKind::Exact,
                    "float" => ScalarKind::Float,
                    v => return Err(issue(line, format!("scalar must be exact or float, got `{v}`"))),
                }
            }
            "mechanism" => self.mechanism = single()?.parse().map_err(|e: String| issue(line, e))?,
            "items" => self.items = Some(number(line, key, single()?)?),
            "cost" => self.cost = Some(single()?.to_string()),
            "source" => self.source = Some(single()?.to_string()),
            "sink" => self.sink = Some(single()?.to_string()),
            "edge" => match rest {
                [label, from, to] => self.edges.push(EdgeLine {
                    label: label.to_string(),
                    from: from.to_string(),
                    to: to.to_string(),
                }),
                _ => return Err(issue(line, "edge takes a label, a tail and a head")),
            },
            "rounds" => self.rounds = number(line, key, single()?)?,
            "policing" => self.policing = boolean(line, key, single()?)?,
            "masking" => self.masking = boolean(line, key, single()?)?,
            "self-copy" => self.self_copy = boolean(line, key, single()?)?,
            "exclude-winners" => self.exclude_winners = boolean(line, key, single()?)?,
            "policy" => {
                self.policy = match single()? {
                    "simultaneous" => PolicyKind::Simultaneous,
                    "sequential" => PolicyKind::Sequential,
                    v => return Err(issue(line, format!("unknown policy `{v}`"))),
                }
            }
            "react-deadline" => self.react_deadline = number(line, key, single()?)?,
            "inspect-timeout" => self.inspect_timeout = number(line, key, single()?)?,
            "probe-timeout" => self.probe_timeout = number(line, key, single()?)?,
            "wave-interval" => self.wave_interval = number(line, key, single()?)?,
            "max-latency" => self.max_latency = number(line, key, single()?)?,
            "max-steps" => self.max_steps = number(line, key, single()?)?,
            "capacity" => self.capacity = number(line, key, single()?)?,
            "registry" => {
                let Some((name, attrs)) = rest.split_first() else {
                    return Err(issue(line, "registry needs a name"));
                };
                let mut r = RegistryLine {
                    name: name.to_string(),
                    region: "any".into(),
                    rule: RegistrationRule::Deadline { deadline: 200 },
                    line,
                };
                for (k, v) in attributes(line, attrs)? {
                    match k.as_str() {
                        "region" => r.region = v,
                        "rule" => r.rule = parse_rule(line, &v)?,
                        _ => return Err(issue(line, format!("unknown registry attribute `{k}`"))),
                    }
                }
                self.registries.push(r);
            }
            "gateway" => self.gateways.push(single()?.to_string()),
            "link" => match rest {
                [a, b] => self.links.push((a.to_string(), b.to_string())),
                _ => return Err(issue(line, "link takes two process names")),
            },
            "player" => {
                let Some((name, attrs)) = rest.split_first() else {
                    return Err(issue(line, "player needs a name"));
                };
                let attrs = attributes(line, attrs)?;
                self.players.push(parse_player(line, name, attrs)?);
            }
            _ => return Err(issue(line, format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal scenario up to line numbers.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let b = |v: bool| if v { "on" } else { "off" };
        if let Some(t) = &self.title {
            writeln!(out, "title {t}").unwrap();
        }
        writeln!(out, "seed {}", self.seed).unwrap();
        let scalar = match self.scalar {
            ScalarKind::Exact => "exact",
            ScalarKind::Float => "float",
        };
        writeln!(out, "scalar {scalar}").unwrap();
        writeln!(out, "mechanism {}", self.mechanism.tag()).unwrap();
        if let Some(m) = self.items {
            writeln!(out, "items {m}").unwrap();
        }
        if let Some(c) = &self.cost {
            writeln!(out, "cost {c}").unwrap();
        }
        if let Some(s) = &self.source {
            writeln!(out, "source {s}").unwrap();
        }
        if let Some(s) = &self.sink {
            writeln!(out, "sink {s}").unwrap();
        }
        for e in &self.edges {
            writeln!(out, "edge {} {} {}", e.label, e.from, e.to).unwrap();
        }
        writeln!(out, "rounds {}", self.rounds).unwrap();
        writeln!(out, "policing {}", b(self.policing)).unwrap();
        writeln!(out, "masking {}", b(self.masking)).unwrap();
        writeln!(out, "self-copy {}", b(self.self_copy)).unwrap();
        writeln!(out, "exclude-winners {}", b(self.exclude_winners)).unwrap();
        let policy = match self.policy {
            PolicyKind::Simultaneous => "simultaneous",
            PolicyKind::Sequential => "sequential",
        };
        writeln!(out, "policy {policy}").unwrap();
        writeln!(out, "react-deadline {}", self.react_deadline).unwrap();
        writeln!(out, "inspect-timeout {}", self.inspect_timeout).unwrap();
        writeln!(out, "probe-timeout {}", self.probe_timeout).unwrap();
        writeln!(out, "wave-interval {}", self.wave_interval).unwrap();
        writeln!(out, "max-latency {}", self.max_latency).unwrap();
        writeln!(out, "max-steps {}", self.max_steps).unwrap();
        writeln!(out, "capacity {}", self.capacity).unwrap();
        for r in &self.registries {
            writeln!(out, "registry {} region={} rule={}", r.name, r.region, rule_text(&r.rule)).unwrap();
        }
        for g in &self.gateways {
            writeln!(out, "gateway {g}").unwrap();
        }
        for (a, z) in &self.links {
            writeln!(out, "link {a} {z}").unwrap();
        }
        for p in &self.players {
            write!(out, "player {} registry={}", p.name, p.registry).unwrap();
            if let Some(r) = &p.region {
                write!(out, " region={r}").unwrap();
            }
            write!(out, " type={}", p.announced).unwrap();
            match &p.strategy {
                StrategySpec::Honest => {}
                StrategySpec::Misreport(t) => write!(out, " strategy=misreport:{t}").unwrap(),
                StrategySpec::Falsify => write!(out, " strategy=falsify").unwrap(),
                StrategySpec::Duplicate => write!(out, " strategy=duplicate").unwrap(),
            }
            match p.crash {
                Some(CrashSpec::Step(n)) => write!(out, " crash=step:{n}").unwrap(),
                Some(CrashSpec::BeforeType) => write!(out, " crash=before-type").unwrap(),
                Some(CrashSpec::AfterType) => write!(out, " crash=after-type").unwrap(),
                None => {}
            }
            if p.crash_round != 1 {
                write!(out, " crash-round={}", p.crash_round).unwrap();
            }
            if !p.skip.is_empty() {
                let rounds: Vec<String> = p.skip.iter().map(|r| r.to_string()).collect();
                write!(out, " skip={}", rounds.join(",")).unwrap();
            }
            if p.start != 0 {
                write!(out, " start={}", p.start).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Same scenario with line numbers cleared, for comparisons.
    pub fn without_positions(&self) -> Scenario {
        let mut s = self.clone();
        for r in &mut s.registries {
            r.line = 0;
        }
        for p in &mut s.players {
            p.line = 0;
        }
        s
    }

    pub fn region_of(&self, player: &PlayerLine) -> String {
        player.region.clone().unwrap_or_else(|| {
            self.registries
                .iter()
                .find(|r| r.name == player.registry)
                .map(|r| r.region.clone())
                .unwrap_or_default()
        })
    }
}
