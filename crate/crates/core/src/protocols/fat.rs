//! Hop-by-hop forwarding through fully trusted relays.
//!
//! The sender one-time-pads the payload with the first link key; each relay
//! strips the inbound pad and applies the outbound one; the receiver strips
//! the last pad. Every relay therefore holds the payload in the clear.

use super::ProtocolError;
use crate::key_fabric::{Message, Network, NodeId, Role};
use crate::symbolic::Tracked;

/// A link key as held by the node about to use it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopKey {
    pub label: String,
    pub key: Tracked,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForwardOutcome {
    /// Payload as decrypted by the last node of the path.
    pub delivered: Tracked,
    pub hops: usize,
    /// Wire sequence numbers of the hop ciphertexts, in path order.
    pub messages: Vec<u64>,
}

pub(crate) fn draw(net: &mut Network, a: &NodeId, b: &NodeId) -> Result<HopKey, ProtocolError> {
    let link = net.topology().link_between(a, b)?;
    let (key_id, key) = net.draw_key(link, a)?;
    let base = net.topology().link(link).key_label();
    let label = if key_id == 0 {
        base
    } else {
        format!("{base}#{key_id}")
    };
    Ok(HopKey { label, key })
}

fn check_len(payload: &Tracked, key: &HopKey) -> Result<(), ProtocolError> {
    if payload.len() != key.key.len() {
        return Err(ProtocolError::KeyLength {
            key: key.label.clone(),
            key_bits: key.key.len(),
            payload_bits: payload.len(),
        });
    }
    Ok(())
}

/// One relay step: decrypt with `key_in`, draw the outbound key towards
/// `next`, re-encrypt and send. The decrypted intermediate is logged as
/// computed knowledge even though the outbound value is formed in one step.
pub fn fat_relay_hop(
    net: &mut Network,
    node: &NodeId,
    inbound: &Message,
    key_in: &HopKey,
    next: &NodeId,
    payload_label: &str,
) -> Result<(Message, HopKey), ProtocolError> {
    let key_out = draw(net, node, next)?;
    check_len(&inbound.payload, &key_out)?;
    let plain = inbound.payload.xor(&key_in.key)?;
    net.note(node, Role::Computed, payload_label, plain.clone());
    let outbound = inbound.payload.xor(&key_in.key)?.xor(&key_out.key)?;
    let label = format!("{payload_label}⊕{}", key_out.label);
    let seq = net.send(node, next, &label, outbound, inbound.share_index)?;
    Ok((net.wire()[seq as usize].clone(), key_out))
}

/// Forwards `payload` from `path[0]` to the last node of `path`.
pub fn fat_forward(
    net: &mut Network,
    path: &[NodeId],
    payload: &Tracked,
    payload_label: &str,
    share_index: Option<u64>,
) -> Result<ForwardOutcome, ProtocolError> {
    if path.len() < 2 {
        return Err(ProtocolError::PathTooShort);
    }
    let key = draw(net, &path[0], &path[1])?;
    check_len(payload, &key)?;
    let cipher = payload.xor(&key.key)?;
    let label = format!("{payload_label}⊕{}", key.label);
    let seq = net.send(&path[0], &path[1], &label, cipher, share_index)?;
    let mut messages = vec![seq];
    let mut inbound = net.wire()[seq as usize].clone();
    let mut key_in = key;
    for w in path[1..].windows(2) {
        let (msg, key_out) = fat_relay_hop(net, &w[0], &inbound, &key_in, &w[1], payload_label)?;
        messages.push(msg.seq);
        inbound = msg;
        key_in = key_out;
    }
    let last = path.last().expect("non-empty path");
    let delivered = inbound.payload.xor(&key_in.key)?;
    net.note(last, Role::Computed, payload_label, delivered.clone());
    Ok(ForwardOutcome {
        delivered,
        hops: path.len() - 1,
        messages,
    })
}

/// End-to-end transfer of `secret` along the quantum-link chain joining
/// `alice` and `bob`.
pub fn fat_send(
    net: &mut Network,
    alice: &NodeId,
    bob: &NodeId,
    secret: &Tracked,
) -> Result<ForwardOutcome, ProtocolError> {
    let path = net.topology().chain(alice, bob)?;
    fat_forward(net, &path, secret, "K_S", None)
}
