//! Key delivery through a central key manager.
//!
//! Alice submits `K_S ⊕ K_A1`; every relay submits the XOR of its two link
//! keys. Interior keys cancel in the fold, so the manager obtains
//! `K_S ⊕ K_NB` and forwards it to Bob, who strips `K_NB`.

use std::collections::BTreeSet;

use crate::key_fabric::{Network, NodeId, NodeKind, Role};
use crate::protocols::{draw_hop_key, HopKey, ProtocolError};
use crate::secret_sharing::{BitString, SharingError};
use crate::symbolic::Tracked;
use crate::trust_analyzer::SecretModel;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub origin: NodeId,
    pub value: BitString,
    pub label: String,
}

pub fn make_alice_mask(alice: &NodeId, secret: &BitString, link_key_a1: &BitString) -> Result<Mask, SharingError> {
    Ok(Mask {
        origin: alice.clone(),
        value: secret.xor(link_key_a1)?,
        label: "K_S⊕K_A1".to_string(),
    })
}

pub fn make_relay_mask(node: &NodeId, key_in: &HopKey, key_out: &HopKey) -> Result<Mask, SharingError> {
    Ok(Mask {
        origin: node.clone(),
        value: key_in.key.value.xor(&key_out.key.value)?,
        label: format!("{}⊕{}", key_in.label, key_out.label),
    })
}

/// XOR fold of one mask per expected origin.
pub fn central_combine(masks: &[Mask], expected: &[NodeId]) -> Result<BitString, ProtocolError> {
    let mut seen = BTreeSet::new();
    for m in masks {
        if !expected.contains(&m.origin) || !seen.insert(&m.origin) {
            return Err(ProtocolError::UnexpectedMask(m.origin.to_string()));
        }
    }
    if let Some(missing) = expected.iter().find(|n| !seen.contains(n)) {
        return Err(ProtocolError::MissingMask(missing.to_string()));
    }
    let mut acc = masks[0].value.clone();
    for m in &masks[1..] {
        acc = acc.xor(&m.value)?;
    }
    Ok(acc)
}

pub fn bob_recover(combined: &BitString, link_key_nb: &BitString) -> Result<BitString, SharingError> {
    combined.xor(link_key_nb)
}

#[derive(Clone, Debug)]
pub struct CentralOutcome {
    pub combined: BitString,
    pub recovered: BitString,
    pub masks: Vec<Mask>,
    pub keys_consumed: usize,
    pub model: SecretModel,
}

/// Runs the protocol over the quantum chain joining `alice` and `bob`.
pub fn centralized_send(
    net: &mut Network,
    alice: &NodeId,
    bob: &NodeId,
    central: &NodeId,
    secret: &Tracked,
) -> Result<CentralOutcome, ProtocolError> {
    if net.topology().kind(central) != Some(NodeKind::CentralKms) {
        return Err(ProtocolError::MissingCentralManager(central.to_string()));
    }
    let chain = net.topology().chain(alice, bob)?;
    let origins: Vec<NodeId> = chain[..chain.len() - 1].to_vec();

    let mut masks = Vec::with_capacity(origins.len());
    let mut tracked: Vec<Tracked> = Vec::with_capacity(origins.len());
    let first = draw_hop_key(net, &chain[0], &chain[1])?;
    check_len(secret, &first)?;
    let mut alice_mask = make_alice_mask(alice, &secret.value, &first.key.value)?;
    alice_mask.label = format!("K_S⊕{}", first.label);
    let t = secret.xor(&first.key)?;
    net.note(alice, Role::Computed, &alice_mask.label, t.clone());
    net.send(alice, central, &alice_mask.label, t.clone(), None)?;
    masks.push(alice_mask);
    tracked.push(t);

    let mut key_in = first;
    for w in chain[1..].windows(2) {
        let key_out = draw_hop_key(net, &w[0], &w[1])?;
        check_len(secret, &key_out)?;
        let mask = make_relay_mask(&w[0], &key_in, &key_out)?;
        let t = key_in.key.xor(&key_out.key)?;
        net.note(&w[0], Role::Computed, &mask.label, t.clone());
        net.send(&w[0], central, &mask.label, t.clone(), None)?;
        masks.push(mask);
        tracked.push(t);
        key_in = key_out;
    }

    let combined = central_combine(&masks, &origins)?;
    let mut c = tracked[0].clone();
    for t in &tracked[1..] {
        c = c.xor(t)?;
    }
    debug_assert_eq!(c.value, combined);
    net.note(central, Role::Computed, "C", c.clone());
    net.send(central, bob, "C", c.clone(), None)?;

    let recovered = bob_recover(&combined, &key_in.key.value)?;
    net.note(bob, Role::Computed, "K_S", c.xor(&key_in.key)?);
    Ok(CentralOutcome {
        combined,
        recovered,
        masks,
        keys_consumed: chain.len() - 1,
        model: SecretModel {
            secret: secret.expr.clone(),
            material: Vec::new(),
            shamir: None,
        },
    })
}

fn check_len(secret: &Tracked, key: &HopKey) -> Result<(), ProtocolError> {
    if key.key.len() != secret.len() {
        return Err(ProtocolError::KeyLength {
            key: key.label.clone(),
            key_bits: key.key.len(),
            payload_bits: secret.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key_fabric::{build_topology, LinkId, TopologySpec};
    use crate::symbolic::VarKind;

    fn b(s: &str) -> BitString {
        BitString::from_bin(s)
    }

    fn hop(label: &str, bits: &str) -> HopKey {
        HopKey {
            label: label.to_string(),
            key: Tracked::constant(b(bits)),
        }
    }

    fn star(relays: usize, keys: &[&str]) -> Network {
        let mut spec = TopologySpec::chain(relays).with_node("kms", NodeKind::CentralKms);
        spec = spec.with_channel("alice", "kms", true).with_channel("kms", "bob", true);
        for i in 1..=relays {
            spec = spec.with_channel(&format!("n{i}"), "kms", true);
        }
        let mut net = Network::new(build_topology(&spec).unwrap());
        for (i, k) in keys.iter().enumerate() {
            net.install_key(LinkId(i), b(k));
        }
        net
    }

    #[test]
    fn masks_by_hand() {
        let a = make_alice_mask(&"alice".into(), &b("1010"), &b("0110")).unwrap();
        assert_eq!(a.value, b("1100"));
        let r = make_relay_mask(&"n1".into(), &hop("K_A1", "0110"), &hop("K_12", "0011")).unwrap();
        assert_eq!(r.value, b("0101"));
        assert_eq!(r.label, "K_A1⊕K_12");
        let same = make_relay_mask(&"n1".into(), &hop("K_A1", "0110"), &hop("K_12", "0110")).unwrap();
        assert!(same.value.is_zero());
    }

    #[test]
    fn combine_by_hand() {
        let masks = vec![
            Mask { origin: "alice".into(), value: b("1100"), label: String::new() },
            Mask { origin: "n1".into(), value: b("0101"), label: String::new() },
            Mask { origin: "n2".into(), value: b("1010"), label: String::new() },
        ];
        let expected: Vec<NodeId> = vec!["alice".into(), "n1".into(), "n2".into()];
        let c = central_combine(&masks, &expected).unwrap();
        assert_eq!(c, b("0011"));
        assert_eq!(bob_recover(&c, &b("1001")).unwrap(), b("1010"));
        assert_eq!(
            central_combine(&masks[..2], &expected),
            Err(ProtocolError::MissingMask("n2".into()))
        );
        assert_eq!(
            central_combine(&[masks[0].clone(), masks[0].clone()], &expected[..1]),
            Err(ProtocolError::UnexpectedMask("alice".into()))
        );
    }

    #[test]
    fn end_to_end_by_hand() {
        let mut net = star(2, &["0110", "0011", "1001"]);
        let secret = net.vars_mut().fresh("K_S", VarKind::Secret, b("1010"));
        let out = centralized_send(&mut net, &"alice".into(), &"bob".into(), &"kms".into(), &secret).unwrap();
        let vals: Vec<BitString> = out.masks.iter().map(|m| m.value.clone()).collect();
        assert_eq!(vals, vec![b("1100"), b("0101"), b("1010")]);
        assert_eq!(out.combined, b("0011"));
        assert_eq!(out.recovered, b("1010"));
        let labels: Vec<&str> = net.wire().iter().map(|m| m.label.as_str()).collect();
        assert_eq!(labels, vec!["K_S⊕K_A1", "K_A1⊕K_12", "K_12⊕K_2B", "C"]);
    }

    #[test]
    fn zero_keys_expose_the_secret_to_the_manager() {
        let mut net = star(1, &["0000", "0000"]);
        let secret = net.vars_mut().fresh("K_S", VarKind::Secret, b("1010"));
        let out = centralized_send(&mut net, &"alice".into(), &"bob".into(), &"kms".into(), &secret).unwrap();
        assert_eq!(out.combined, b("1010"));
    }

    #[test]
    fn no_manager_no_delivery() {
        let spec = TopologySpec::chain(1);
        let mut net = Network::new(build_topology(&spec).unwrap());
        net.install_key(LinkId(0), b("0110"));
        net.install_key(LinkId(1), b("0110"));
        let secret = net.vars_mut().fresh("K_S", VarKind::Secret, b("1010"));
        let err = centralized_send(&mut net, &"alice".into(), &"bob".into(), &"kms".into(), &secret).unwrap_err();
        assert_eq!(err, ProtocolError::MissingCentralManager("kms".into()));
    }
}
