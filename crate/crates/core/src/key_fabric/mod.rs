//! Network model: nodes, quantum links with pre-shared key pools, classical
//! channels, and the per-node transcripts that record every value a node
//! touches.

mod topology;
mod transcript;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::rng::DetRng;
use crate::secret_sharing::BitString;
use crate::symbolic::{Tracked, VarKind, VarTable};

pub use topology::{
    build_topology, ChannelKind, ChannelSpec, ClassicalChannel, LinkId, NodeId, NodeKind,
    PooledKey, QuantumLink, Topology, TopologySpec,
};
pub use transcript::{Entry, Message, Role, Transcript};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FabricError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("duplicate node {0:?}")]
    DuplicateNode(String),
    #[error("invalid node name {0:?}")]
    BadName(String),
    #[error("link from {0:?} to itself")]
    SelfLoop(String),
    #[error("duplicate link or channel {0}")]
    DuplicateLink(String),
    #[error("no quantum link {0}")]
    UnknownLink(String),
    #[error("no classical channel {0}")]
    UnknownChannel(String),
    #[error("{node} is not an endpoint of {link}")]
    NotEndpoint { node: String, link: String },
    #[error("key pool of link {0} is exhausted")]
    KeyExhausted(String),
    #[error("not a relay chain: {0}")]
    NotAChain(String),
    #[error("channel {0} is declared secure; declare it insecure to model eavesdropping")]
    TapOnSecure(String),
}

/// Mutable state of one run: topology with key pools, the registry of
/// primitive unknowns, per-node transcripts and the wire log.
#[derive(Clone, Debug)]
pub struct Network {
    topology: Topology,
    vars: VarTable,
    transcripts: BTreeMap<NodeId, Transcript>,
    wire: Vec<Message>,
    next_seq: u64,
}

impl Network {
    pub fn new(topology: Topology) -> Self {
        let transcripts = topology
            .nodes()
            .iter()
            .map(|n| (n.clone(), Transcript::new(n.clone())))
            .collect();
        Network {
            topology,
            vars: VarTable::new(),
            transcripts,
            wire: Vec::new(),
            next_seq: 0,
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn vars(&self) -> &VarTable {
        &self.vars
    }

    pub fn vars_mut(&mut self) -> &mut VarTable {
        &mut self.vars
    }

    pub fn transcript(&self, node: &NodeId) -> Option<&Transcript> {
        self.transcripts.get(node)
    }

    pub fn transcripts(&self) -> &BTreeMap<NodeId, Transcript> {
        &self.transcripts
    }

    pub fn wire(&self) -> &[Message] {
        &self.wire
    }

    /// Appends `count` fresh uniform keys of `bit_length` bits to the pool
    /// shared by both endpoints of `link`.
    pub fn provision_link_keys(
        &mut self,
        link: LinkId,
        count: usize,
        bit_length: usize,
        rng: &mut DetRng,
    ) -> usize {
        for _ in 0..count {
            let value = BitString::random(bit_length, rng);
            self.install_key(link, value);
        }
        self.pool_level(link)
    }

    /// Appends a key with a chosen value to the pool of `link`.
    pub fn install_key(&mut self, link: LinkId, value: BitString) -> u32 {
        let l = &mut self.topology.links[link.0];
        let key_id = l.provisioned;
        let base = l.key_label();
        let label = if key_id == 0 {
            base
        } else {
            format!("{base}#{key_id}")
        };
        let (var, _) = self.vars.register(label.clone(), VarKind::LinkKey, value.clone());
        l.pool.push(PooledKey {
            key_id,
            label,
            var,
            value,
            consumed: false,
        });
        l.provisioned += 1;
        key_id
    }

    pub fn pool_level(&self, link: LinkId) -> usize {
        self.topology.links[link.0]
            .pool
            .iter()
            .filter(|k| !k.consumed)
            .count()
    }

    /// Takes the oldest unconsumed key of `link`. Both endpoints log it as
    /// held material.
    pub fn draw_key(&mut self, link: LinkId, caller: &NodeId) -> Result<(u32, Tracked), FabricError> {
        let l = &mut self.topology.links[link.0];
        if !l.has_endpoint(caller) {
            return Err(FabricError::NotEndpoint {
                node: caller.0.clone(),
                link: l.id.clone(),
            });
        }
        let key = l
            .pool
            .iter_mut()
            .find(|k| !k.consumed)
            .ok_or_else(|| FabricError::KeyExhausted(l.id.clone()))?;
        key.consumed = true;
        l.drawn += 1;
        let (key_id, label, var) = (key.key_id, key.label.clone(), key.var);
        let (a, b) = (l.a.clone(), l.b.clone());
        let value = self.vars.tracked(var);
        self.note(&a, Role::HeldKey, &label, value.clone());
        self.note(&b, Role::HeldKey, &label, value.clone());
        Ok((key_id, value))
    }

    /// Records a value a node holds or derived locally.
    pub fn note(&mut self, node: &NodeId, role: Role, label: &str, value: Tracked) {
        let seq = self.bump();
        if let Some(t) = self.transcripts.get_mut(node) {
            t.push(Entry {
                seq,
                role,
                label: label.to_string(),
                value,
                message: None,
            });
        }
    }

    /// Sends `payload` over the classical channel joining `from` and `to`.
    pub fn send(
        &mut self,
        from: &NodeId,
        to: &NodeId,
        label: &str,
        payload: Tracked,
        share_index: Option<u64>,
    ) -> Result<u64, FabricError> {
        let channel = self.topology.channel_between(from, to)?;
        let channel_id = channel.id.clone();
        let taps: Vec<NodeId> = channel.broadcast_tap.iter().cloned().collect();
        let msg_seq = self.wire.len() as u64;
        let message = Message {
            seq: msg_seq,
            from: from.clone(),
            to: to.clone(),
            channel: channel_id,
            label: label.to_string(),
            payload,
            share_index,
        };
        self.log_message(from, Role::Sent, &message);
        self.log_message(to, Role::Received, &message);
        for t in taps.iter().filter(|t| *t != from && *t != to) {
            self.log_message(t, Role::Overheard, &message);
        }
        self.wire.push(message);
        Ok(msg_seq)
    }

    fn log_message(&mut self, node: &NodeId, role: Role, m: &Message) {
        let seq = self.bump();
        if let Some(t) = self.transcripts.get_mut(node) {
            t.push(Entry {
                seq,
                role,
                label: m.label.clone(),
                value: m.payload.clone(),
                message: Some(m.seq),
            });
        }
    }

    fn bump(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    /// Lets `tappers` overhear every message on `channel`, including those
    /// already sent. Declared-secure channels refuse taps.
    pub fn apply_tap(&mut self, channel: &str, tappers: &[NodeId]) -> Result<(), FabricError> {
        let idx = self.topology.channel_index(channel)?;
        for t in tappers {
            self.topology.require(t)?;
        }
        let ch = &mut self.topology.channels[idx];
        if ch.secure {
            return Err(FabricError::TapOnSecure(ch.id.clone()));
        }
        let id = ch.id.clone();
        let (a, b) = (ch.a.clone(), ch.b.clone());
        let fresh: Vec<NodeId> = tappers
            .iter()
            .filter(|t| ch.broadcast_tap.insert((*t).clone()))
            .cloned()
            .collect();
        let past: Vec<Message> = self.wire.iter().filter(|m| m.channel == id).cloned().collect();
        for m in &past {
            for t in fresh.iter().filter(|t| **t != a && **t != b) {
                self.log_message(t, Role::Overheard, m);
            }
        }
        Ok(())
    }
}
