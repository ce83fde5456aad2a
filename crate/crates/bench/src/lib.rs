//! Scenario fixtures shared by the benches.

use qkdn_core::key_fabric::{NodeKind, TopologySpec};
use qkdn_core::sim_harness::{Protocol, Scenario};
use qkdn_core::ShamirParams;

/// Relay chain with a central manager reachable from every hop.
pub fn centralized(relays: usize, bits: usize) -> Scenario {
    let mut t = TopologySpec::chain(relays)
        .with_node("kms", NodeKind::CentralKms)
        .with_channel("alice", "kms", true)
        .with_channel("kms", "bob", true);
    for i in 1..=relays {
        t = t.with_channel(&format!("n{i}"), "kms", true);
    }
    Scenario::new(t, Protocol::Centralized, bits, 1)
}

pub fn fat_chain(relays: usize, bits: usize) -> Scenario {
    Scenario::new(TopologySpec::chain(relays), Protocol::FatChain, bits, 1)
}

pub fn decentralized(relays: usize, bits: usize) -> Scenario {
    let t = TopologySpec::chain(relays)
        .with_node("sat", NodeKind::Satellite)
        .with_channel("alice", "sat", true)
        .with_channel("sat", "bob", true);
    Scenario::new(t, Protocol::Decentralized, bits, 1)
}

fn parallel(k: usize) -> TopologySpec {
    let mut t = TopologySpec {
        nodes: vec![("alice".into(), NodeKind::EndHost), ("bob".into(), NodeKind::EndHost)],
        qlinks: Vec::new(),
        cchannels: Vec::new(),
    };
    for i in 1..=k {
        let p = format!("p{i}");
        t = t.with_node(&p, NodeKind::Relay).with_qlink("alice", &p).with_qlink(&p, "bob");
    }
    t
}

pub fn xor(k: usize, bits: usize) -> Scenario {
    let mut sc = Scenario::new(parallel(k), Protocol::PatXor, bits, 1);
    sc.shares = Some(k);
    sc
}

pub fn shamir(q: u64, t: usize, k: usize, bits: usize) -> Scenario {
    let mut sc = Scenario::new(parallel(k), Protocol::PatShamir, bits, 1);
    sc.shamir = Some(ShamirParams::new(q, t, k).expect("valid parameters"));
    sc
}
