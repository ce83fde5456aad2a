use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::FabricError;
use crate::secret_sharing::BitString;
use crate::symbolic::VarId;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Self {
        NodeId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Compact name used in key and message labels: `alice` → `A`,
    /// `bob` → `B`, `n3` → `3`, anything else unchanged.
    pub fn short(&self) -> String {
        match self.0.as_str() {
            "alice" => "A".to_string(),
            "bob" => "B".to_string(),
            s => match s.strip_prefix('n') {
                Some(d) if !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) => d.to_string(),
                _ => s.to_string(),
            },
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    EndHost,
    Relay,
    Satellite,
    CentralKms,
}

impl NodeKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "end_host" => NodeKind::EndHost,
            "relay" => NodeKind::Relay,
            "satellite" => NodeKind::Satellite,
            "central_kms" => NodeKind::CentralKms,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::EndHost => "end_host",
            NodeKind::Relay => "relay",
            NodeKind::Satellite => "satellite",
            NodeKind::CentralKms => "central_kms",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub a: String,
    pub b: String,
    pub secure: bool,
}

/// Declarative description of a network, as read from a scenario file.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub nodes: Vec<(String, NodeKind)>,
    pub qlinks: Vec<(String, String)>,
    pub cchannels: Vec<ChannelSpec>,
}

impl TopologySpec {
    /// `alice – n1 – … – nN – bob` with relay kinds.
    pub fn chain(relays: usize) -> Self {
        let mut names = vec!["alice".to_string()];
        names.extend((1..=relays).map(|i| format!("n{i}")));
        names.push("bob".to_string());
        let nodes = names
            .iter()
            .map(|n| {
                let kind = if n == "alice" || n == "bob" {
                    NodeKind::EndHost
                } else {
                    NodeKind::Relay
                };
                (n.clone(), kind)
            })
            .collect();
        let qlinks = names
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        TopologySpec {
            nodes,
            qlinks,
            cchannels: Vec::new(),
        }
    }

    pub fn with_node(mut self, name: &str, kind: NodeKind) -> Self {
        self.nodes.push((name.to_string(), kind));
        self
    }

    pub fn with_qlink(mut self, a: &str, b: &str) -> Self {
        self.qlinks.push((a.to_string(), b.to_string()));
        self
    }

    pub fn with_channel(mut self, a: &str, b: &str, secure: bool) -> Self {
        self.cchannels.push(ChannelSpec {
            a: a.to_string(),
            b: b.to_string(),
            secure,
        });
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkId(pub usize);

/// One pre-shared key in a link pool.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PooledKey {
    pub key_id: u32,
    pub label: String,
    pub var: VarId,
    pub value: BitString,
    pub consumed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantumLink {
    pub id: String,
    pub a: NodeId,
    pub b: NodeId,
    pub pool: Vec<PooledKey>,
    pub provisioned: u32,
    pub drawn: u32,
}

impl QuantumLink {
    pub fn has_endpoint(&self, n: &NodeId) -> bool {
        &self.a == n || &self.b == n
    }

    pub fn other(&self, n: &NodeId) -> &NodeId {
        if &self.a == n {
            &self.b
        } else {
            &self.a
        }
    }

    /// Base key label, e.g. `K_A1` or `K_{sat,B}`.
    pub fn key_label(&self) -> String {
        let (x, y) = (self.a.short(), self.b.short());
        if x.chars().count() == 1 && y.chars().count() == 1 {
            format!("K_{x}{y}")
        } else {
            format!("K_{{{x},{y}}}")
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// Declared classical channel (KMS uplinks, satellite transport).
    Declared,
    /// Public classical channel that accompanies every quantum link and
    /// carries hop-by-hop ciphertexts.
    LinkCompanion,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalChannel {
    pub id: String,
    pub a: NodeId,
    pub b: NodeId,
    pub secure: bool,
    pub kind: ChannelKind,
    pub broadcast_tap: BTreeSet<NodeId>,
}

impl ClassicalChannel {
    pub fn connects(&self, x: &NodeId, y: &NodeId) -> bool {
        (&self.a == x && &self.b == y) || (&self.a == y && &self.b == x)
    }
}

/// Validated network: nodes, quantum links with key pools, classical channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    pub(crate) order: Vec<NodeId>,
    pub(crate) kinds: BTreeMap<NodeId, NodeKind>,
    pub(crate) links: Vec<QuantumLink>,
    pub(crate) channels: Vec<ClassicalChannel>,
}

pub fn build_topology(spec: &TopologySpec) -> Result<Topology, FabricError> {
    let mut kinds = BTreeMap::new();
    let mut order = Vec::new();
    for (name, kind) in &spec.nodes {
        if name.is_empty() || name.contains(|c: char| c.is_whitespace() || ",;:-".contains(c)) {
            return Err(FabricError::BadName(name.clone()));
        }
        let id = NodeId::new(name.as_str());
        if kinds.insert(id.clone(), *kind).is_some() {
            return Err(FabricError::DuplicateNode(name.clone()));
        }
        order.push(id);
    }
    let known = |n: &str| -> Result<NodeId, FabricError> {
        let id = NodeId::new(n);
        if kinds.contains_key(&id) {
            Ok(id)
        } else {
            Err(FabricError::UnknownNode(n.to_string()))
        }
    };

    let mut links: Vec<QuantumLink> = Vec::new();
    let mut channels = Vec::new();
    for (a, b) in &spec.qlinks {
        let (a, b) = (known(a)?, known(b)?);
        if a == b {
            return Err(FabricError::SelfLoop(a.0));
        }
        if links.iter().any(|l| l.has_endpoint(&a) && l.has_endpoint(&b)) {
            return Err(FabricError::DuplicateLink(format!("{a}-{b}")));
        }
        let id = format!("{a}-{b}");
        channels.push(ClassicalChannel {
            id: id.clone(),
            a: a.clone(),
            b: b.clone(),
            secure: false,
            kind: ChannelKind::LinkCompanion,
            broadcast_tap: BTreeSet::new(),
        });
        links.push(QuantumLink {
            id,
            a,
            b,
            pool: Vec::new(),
            provisioned: 0,
            drawn: 0,
        });
    }
    for c in &spec.cchannels {
        let (a, b) = (known(&c.a)?, known(&c.b)?);
        if a == b {
            return Err(FabricError::SelfLoop(a.0));
        }
        if channels.iter().any(|ch: &ClassicalChannel| ch.connects(&a, &b)) {
            return Err(FabricError::DuplicateLink(format!("{a}-{b}")));
        }
        channels.push(ClassicalChannel {
            id: format!("{a}-{b}"),
            a,
            b,
            secure: c.secure,
            kind: ChannelKind::Declared,
            broadcast_tap: BTreeSet::new(),
        });
    }
    Ok(Topology {
        order,
        kinds,
        links,
        channels,
    })
}

impl Topology {
    pub fn nodes(&self) -> &[NodeId] {
        &self.order
    }

    pub fn kind(&self, n: &NodeId) -> Option<NodeKind> {
        self.kinds.get(n).copied()
    }

    pub fn contains(&self, n: &NodeId) -> bool {
        self.kinds.contains_key(n)
    }

    pub fn require(&self, n: &NodeId) -> Result<(), FabricError> {
        if self.contains(n) {
            Ok(())
        } else {
            Err(FabricError::UnknownNode(n.0.clone()))
        }
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> Vec<NodeId> {
        self.order
            .iter()
            .filter(|n| self.kinds[*n] == kind)
            .cloned()
            .collect()
    }

    pub fn links(&self) -> &[QuantumLink] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &QuantumLink {
        &self.links[id.0]
    }

    pub fn channels(&self) -> &[ClassicalChannel] {
        &self.channels
    }

    pub fn link_between(&self, a: &NodeId, b: &NodeId) -> Result<LinkId, FabricError> {
        self.links
            .iter()
            .position(|l| l.has_endpoint(a) && l.has_endpoint(b) && a != b)
            .map(LinkId)
            .ok_or_else(|| FabricError::UnknownLink(format!("{a}-{b}")))
    }

    pub fn link_by_name(&self, id: &str) -> Result<LinkId, FabricError> {
        self.links
            .iter()
            .position(|l| l.id == id)
            .map(LinkId)
            .ok_or_else(|| FabricError::UnknownLink(id.to_string()))
    }

    pub fn channel_between(&self, a: &NodeId, b: &NodeId) -> Result<&ClassicalChannel, FabricError> {
        self.channels
            .iter()
            .find(|c| c.connects(a, b))
            .ok_or_else(|| FabricError::UnknownChannel(format!("{a}-{b}")))
    }

    /// Looks a channel up by its id, accepting either endpoint order.
    pub fn channel_index(&self, id: &str) -> Result<usize, FabricError> {
        if let Some(i) = self.channels.iter().position(|c| c.id == id) {
            return Ok(i);
        }
        if let Some((a, b)) = id.split_once('-') {
            let (a, b) = (NodeId::new(a), NodeId::new(b));
            if let Some(i) = self.channels.iter().position(|c| c.connects(&a, &b)) {
                return Ok(i);
            }
        }
        Err(FabricError::UnknownChannel(id.to_string()))
    }

    pub fn quantum_neighbors(&self, n: &NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .links
            .iter()
            .filter(|l| l.has_endpoint(n))
            .map(|l| l.other(n).clone())
            .collect();
        out.sort();
        out
    }

    /// The quantum-link chain `alice – … – bob`. Every interior node must have
    /// exactly two quantum neighbours and alice exactly one.
    pub fn chain(&self, alice: &NodeId, bob: &NodeId) -> Result<Vec<NodeId>, FabricError> {
        self.require(alice)?;
        self.require(bob)?;
        let not_chain = |why: String| FabricError::NotAChain(why);
        let mut path = vec![alice.clone()];
        let mut prev: Option<NodeId> = None;
        let mut cur = alice.clone();
        while &cur != bob {
            let next: Vec<NodeId> = self
                .quantum_neighbors(&cur)
                .into_iter()
                .filter(|n| Some(n) != prev.as_ref())
                .collect();
            if next.len() != 1 {
                return Err(not_chain(format!(
                    "{cur} has {} onward quantum links",
                    next.len()
                )));
            }
            let n = next.into_iter().next().expect("one neighbour");
            if path.contains(&n) {
                return Err(not_chain(format!("cycle through {n}")));
            }
            prev = Some(cur);
            cur = n.clone();
            path.push(n);
        }
        if self.quantum_neighbors(bob).len() != 1 {
            return Err(not_chain(format!("{bob} has extra quantum links")));
        }
        Ok(path)
    }
}
