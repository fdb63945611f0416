use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::kernel::ProcessId;

/// Static graph of registries and gateways with shortest-path next hops.
#[derive(Debug, Clone, Default)]
pub struct Backbone {
    registries: BTreeSet<ProcessId>,
    adjacency: BTreeMap<ProcessId, BTreeSet<ProcessId>>,
    next: BTreeMap<(ProcessId, ProcessId), ProcessId>,
}

impl Backbone {
    /// Fails when some registry cannot reach another.
    pub fn new(
        registries: &[ProcessId],
        gateways: &[ProcessId],
        links: &[(ProcessId, ProcessId)],
    ) -> Result<Self, String> {
        let mut adjacency: BTreeMap<ProcessId, BTreeSet<ProcessId>> = BTreeMap::new();
        for &p in registries.iter().chain(gateways) {
            adjacency.entry(p).or_default();
        }
        for &(a, b) in links {
            if !adjacency.contains_key(&a) || !adjacency.contains_key(&b) {
                return Err(format!("link {a}-{b} leaves the backbone"));
            }
            adjacency.get_mut(&a).unwrap().insert(b);
            adjacency.get_mut(&b).unwrap().insert(a);
        }
        let mut next = BTreeMap::new();
        for &dest in registries {
            // BFS from the destination, recording each node's parent toward it.
            let mut seen = BTreeSet::from([dest]);
            let mut queue = VecDeque::from([dest]);
            while let Some(u) = queue.pop_front() {
                for &v in &adjacency[&u] {
                    if seen.insert(v) {
                        next.insert((v, dest), u);
                        queue.push_back(v);
                    }
                }
            }
            if let Some(r) = registries.iter().find(|r| !seen.contains(r)) {
                return Err(format!("registry {r} cannot reach registry {dest}"));
            }
        }
        Ok(Backbone {
            registries: registries.iter().copied().collect(),
            adjacency,
            next,
        })
    }

    pub fn is_registry(&self, p: ProcessId) -> bool {
        self.registries.contains(&p)
    }

    pub fn registries(&self) -> impl Iterator<Item = ProcessId> + '_ {
        self.registries.iter().copied()
    }

    pub fn neighbours(&self, p: ProcessId) -> Vec<ProcessId> {
        self.adjacency.get(&p).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    pub fn gateways_of(&self, registry: ProcessId) -> Vec<ProcessId> {
        self.neighbours(registry).into_iter().filter(|p| !self.is_registry(*p)).collect()
    }

    /// Next hop from `from` toward registry `to`.
    pub fn next_hop(&self, from: ProcessId, to: ProcessId) -> ProcessId {
        if from == to {
            return to;
        }
        self.next[&(from, to)]
    }

    /// Hop count from `from` to registry `to`.
    pub fn distance(&self, mut from: ProcessId, to: ProcessId) -> usize {
        let mut d = 0;
        while from != to {
            from = self.next_hop(from, to);
            d += 1;
        }
        d
    }
}
