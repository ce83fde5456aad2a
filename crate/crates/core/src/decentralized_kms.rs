//! Dual-path key exchange without a central manager.
//!
//! Each party splits a random string into two halves and sends the XOR of
//! the halves over the terrestrial relay chain and the first half over a
//! satellite transport. The receiver recovers the second half, which never
//! appears on any channel. The shared key is the two hidden halves
//! concatenated, Alice's first.

use serde::{Deserialize, Serialize};

use crate::key_fabric::{Network, NodeId, NodeKind, Role};
use crate::protocols::{fat_forward, ProtocolError};
use crate::secret_sharing::{concat_join, concat_split, BitString, SharingError};
use crate::symbolic::{Tracked, VarKind};
use crate::trust_analyzer::{Material, SecretModel};

/// A party's random string with its halves and their XOR.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfSplit {
    pub original: BitString,
    pub first_half: BitString,
    pub second_half: BitString,
    pub xor_mask: BitString,
}

pub fn dkms_prepare(party_random: &BitString) -> Result<HalfSplit, SharingError> {
    let (first_half, second_half) = concat_split(party_random)?;
    let xor_mask = first_half.xor(&second_half)?;
    Ok(HalfSplit {
        original: party_random.clone(),
        first_half,
        second_half,
        xor_mask,
    })
}

/// Hidden half from the mask and the half that travelled.
pub fn dkms_recover(mask: &BitString, transmitted_half: &BitString) -> Result<BitString, SharingError> {
    mask.xor(transmitted_half)
}

/// `alice_half ∥ bob_half`, whichever party computes it.
pub fn dkms_compose_secret(alice_half: &BitString, bob_half: &BitString) -> Result<BitString, SharingError> {
    if alice_half.len() != bob_half.len() {
        return Err(SharingError::LengthMismatch {
            left: alice_half.len(),
            right: bob_half.len(),
        });
    }
    concat_join(alice_half, bob_half)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionOrder {
    /// Alice's transfers complete before Bob's.
    #[default]
    EastFirst,
    WestFirst,
}

/// Which value uses which path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Routing {
    /// Masks over the relay chain, first halves via the satellite.
    #[default]
    MasksTerrestrial,
    /// Masks via the satellite, first halves over the relay chain.
    MasksSatellite,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DkmsOptions {
    pub order: DirectionOrder,
    pub routing: Routing,
    /// Terrestrial route from Alice to Bob; the quantum chain by default.
    pub terrestrial: Option<Vec<NodeId>>,
}

#[derive(Clone, Debug)]
pub struct DkmsOutcome {
    pub alice_key: BitString,
    pub bob_key: BitString,
    pub keys_consumed: usize,
    pub model: SecretModel,
    /// `[K'_A1, K'_A2, K'_B1, K'_B2]`.
    pub halves: [Tracked; 4],
}

struct Party {
    node: NodeId,
    first: Tracked,
    second: Tracked,
    mask: Tracked,
}

fn register_party(net: &mut Network, node: &NodeId, random: &BitString) -> Result<Party, ProtocolError> {
    let split = dkms_prepare(random)?;
    let s = node.short();
    let first = net
        .vars_mut()
        .fresh(format!("K'_{s}1"), VarKind::PartyRandom, split.first_half);
    let second = net
        .vars_mut()
        .fresh(format!("K'_{s}2"), VarKind::PartyRandom, split.second_half);
    let mask = first.xor(&second)?;
    net.note(node, Role::Computed, &format!("K'_{s}1"), first.clone());
    net.note(node, Role::Computed, &format!("K'_{s}2"), second.clone());
    Ok(Party {
        node: node.clone(),
        first,
        second,
        mask,
    })
}

fn mask_label(p: &Party) -> String {
    let s = p.node.short();
    if s == "A" {
        "K_X".to_string()
    } else if s == "B" {
        "K_Y".to_string()
    } else {
        format!("K_X{s}")
    }
}

/// Moves `value` from `from` through the satellite to `to` in the clear.
fn via_satellite(
    net: &mut Network,
    from: &NodeId,
    sat: &NodeId,
    to: &NodeId,
    label: &str,
    value: &Tracked,
) -> Result<Tracked, ProtocolError> {
    net.send(from, sat, label, value.clone(), None)?;
    net.send(sat, to, label, value.clone(), None)?;
    Ok(value.clone())
}

/// One direction: `sender`'s mask and first half reach `receiver`, who
/// recovers the hidden half. Returns (hidden half as recovered, keys used).
fn transfer(
    net: &mut Network,
    sender: &Party,
    receiver: &NodeId,
    route: &[NodeId],
    sat: &NodeId,
    routing: Routing,
) -> Result<(Tracked, usize), ProtocolError> {
    let m_label = mask_label(sender);
    let h_label = format!("K'_{}1", sender.node.short());
    let (mask, half, keys) = match routing {
        Routing::MasksTerrestrial => {
            let out = fat_forward(net, route, &sender.mask, &m_label, None)?;
            let half = via_satellite(net, &sender.node, sat, receiver, &h_label, &sender.first)?;
            (out.delivered, half, out.hops)
        }
        Routing::MasksSatellite => {
            let mask = via_satellite(net, &sender.node, sat, receiver, &m_label, &sender.mask)?;
            let out = fat_forward(net, route, &sender.first, &h_label, None)?;
            (mask, out.delivered, out.hops)
        }
    };
    let hidden = mask.xor(&half)?;
    net.note(receiver, Role::Computed, &format!("K'_{}2", sender.node.short()), hidden.clone());
    Ok((hidden, keys))
}

/// Runs both directions of the exchange. `k_a` and `k_b` are the parties'
/// random strings; link keys on the terrestrial route must be half their
/// length.
pub fn dkms_exchange(
    net: &mut Network,
    alice: &NodeId,
    bob: &NodeId,
    satellite: &NodeId,
    k_a: &BitString,
    k_b: &BitString,
    opts: &DkmsOptions,
) -> Result<DkmsOutcome, ProtocolError> {
    if net.topology().kind(satellite) != Some(NodeKind::Satellite) {
        return Err(ProtocolError::MissingSatellite(satellite.to_string()));
    }
    for end in [alice, bob] {
        if net.topology().channel_between(end, satellite).is_err() {
            return Err(ProtocolError::MissingSatellite(format!("{end}-{satellite}")));
        }
    }
    if k_a.len() != k_b.len() {
        return Err(SharingError::LengthMismatch {
            left: k_a.len(),
            right: k_b.len(),
        }
        .into());
    }
    let east: Vec<NodeId> = match &opts.terrestrial {
        Some(r) => r.clone(),
        None => net.topology().chain(alice, bob)?,
    };
    if east.first() != Some(alice) || east.last() != Some(bob) {
        return Err(ProtocolError::PathEndpoints);
    }
    let west: Vec<NodeId> = east.iter().rev().cloned().collect();

    let pa = register_party(net, alice, k_a)?;
    let pb = register_party(net, bob, k_b)?;

    let (a2_at_bob, b2_at_alice, keys) = match opts.order {
        DirectionOrder::EastFirst => {
            let (a2, ke) = transfer(net, &pa, bob, &east, satellite, opts.routing)?;
            let (b2, kw) = transfer(net, &pb, alice, &west, satellite, opts.routing)?;
            (a2, b2, ke + kw)
        }
        DirectionOrder::WestFirst => {
            let (b2, kw) = transfer(net, &pb, alice, &west, satellite, opts.routing)?;
            let (a2, ke) = transfer(net, &pa, bob, &east, satellite, opts.routing)?;
            (a2, b2, ke + kw)
        }
    };

    let at_alice = pa.second.concat(&b2_at_alice);
    let at_bob = a2_at_bob.concat(&pb.second);
    let alice_key = dkms_compose_secret(&pa.second.value, &b2_at_alice.value)?;
    let bob_key = dkms_compose_secret(&a2_at_bob.value, &pb.second.value)?;
    net.note(alice, Role::Computed, "K_S", at_alice);
    net.note(bob, Role::Computed, "K_S", at_bob);

    let model = SecretModel {
        secret: pa.second.expr.concat(&pb.second.expr),
        material: [
            ("K'_A1", &pa.first),
            ("K'_A2", &pa.second),
            ("K'_B1", &pb.first),
            ("K'_B2", &pb.second),
        ]
        .into_iter()
        .map(|(label, t)| Material {
            label: label.to_string(),
            expr: t.expr.clone(),
        })
        .collect(),
        shamir: None,
    };
    Ok(DkmsOutcome {
        alice_key,
        bob_key,
        keys_consumed: keys,
        model,
        halves: [pa.first, pa.second, pb.first, pb.second],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key_fabric::{build_topology, LinkId, TopologySpec};
    use crate::rng::DetRng;

    fn b(s: &str) -> BitString {
        BitString::from_bin(s)
    }

    fn dual_path(relays: usize) -> Network {
        let spec = TopologySpec::chain(relays)
            .with_node("sat", NodeKind::Satellite)
            .with_channel("alice", "sat", true)
            .with_channel("sat", "bob", true);
        let mut net = Network::new(build_topology(&spec).unwrap());
        for i in 0..net.topology().links().len() {
            let mut rng = DetRng::new(3, &format!("l{i}"));
            net.provision_link_keys(LinkId(i), 2, 4, &mut rng);
        }
        net
    }

    #[test]
    fn prepare_by_hand() {
        let h = dkms_prepare(&b("10110100")).unwrap();
        assert_eq!((h.first_half.clone(), h.second_half.clone()), (b("1011"), b("0100")));
        assert_eq!(h.xor_mask, b("1111"));
        assert_eq!(h.xor_mask.xor(&h.first_half).unwrap(), h.second_half);
        assert!(dkms_prepare(&b("00000000")).unwrap().xor_mask.is_zero());
        assert_eq!(dkms_prepare(&b("101")), Err(SharingError::OddLength(3)));
    }

    #[test]
    fn recover_and_compose_by_hand() {
        assert_eq!(dkms_recover(&b("1111"), &b("1011")).unwrap(), b("0100"));
        assert_eq!(dkms_recover(&b("0110"), &b("0000")).unwrap(), b("0110"));
        assert_eq!(dkms_compose_secret(&b("0100"), &b("1100")).unwrap(), b("01001100"));
        assert!(dkms_compose_secret(&BitString::default(), &BitString::default()).is_err());
    }

    #[test]
    fn exchange_by_hand() {
        let mut net = dual_path(2);
        let out = dkms_exchange(
            &mut net,
            &"alice".into(),
            &"bob".into(),
            &"sat".into(),
            &b("10110100"),
            &b("01011100"),
            &DkmsOptions::default(),
        )
        .unwrap();
        assert_eq!(out.alice_key, b("01001100"));
        assert_eq!(out.bob_key, b("01001100"));
        assert_eq!(out.keys_consumed, 6);
        let y = net.wire().iter().find(|m| m.label == "K'_B1").unwrap();
        assert_eq!(y.payload.value, b("0101"));
    }

    #[test]
    fn zero_randomness_gives_zero_key() {
        let mut net = dual_path(1);
        let z = BitString::zeros(8);
        let out = dkms_exchange(&mut net, &"alice".into(), &"bob".into(), &"sat".into(), &z, &z, &DkmsOptions::default())
            .unwrap();
        assert!(out.alice_key.is_zero());
    }

    #[test]
    fn direction_order_and_routing_do_not_change_the_key() {
        let mut keys = Vec::new();
        for order in [DirectionOrder::EastFirst, DirectionOrder::WestFirst] {
            for routing in [Routing::MasksTerrestrial, Routing::MasksSatellite] {
                let mut net = dual_path(2);
                let opts = DkmsOptions {
                    order,
                    routing,
                    terrestrial: None,
                };
                let out = dkms_exchange(
                    &mut net,
                    &"alice".into(),
                    &"bob".into(),
                    &"sat".into(),
                    &b("10110100"),
                    &b("01011100"),
                    &opts,
                )
                .unwrap();
                assert_eq!(out.alice_key, out.bob_key);
                keys.push(out.alice_key);
            }
        }
        assert!(keys.iter().all(|k| *k == b("01001100")));
    }

    #[test]
    fn hidden_halves_stay_off_the_wire() {
        let mut net = dual_path(2);
        let out = dkms_exchange(
            &mut net,
            &"alice".into(),
            &"bob".into(),
            &"sat".into(),
            &b("10110100"),
            &b("01011100"),
            &DkmsOptions::default(),
        )
        .unwrap();
        for hidden in [&out.halves[1], &out.halves[3]] {
            assert!(net.wire().iter().all(|m| m.payload.expr != hidden.expr));
        }
    }

    #[test]
    fn missing_satellite_is_rejected() {
        let mut net = Network::new(build_topology(&TopologySpec::chain(1)).unwrap());
        let err = dkms_exchange(
            &mut net,
            &"alice".into(),
            &"bob".into(),
            &"sat".into(),
            &b("1010"),
            &b("1010"),
            &DkmsOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err, ProtocolError::MissingSatellite("sat".into()));
    }
}
