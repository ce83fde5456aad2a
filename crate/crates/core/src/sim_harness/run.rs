use std::collections::{BTreeMap, BTreeSet};

use super::report::{CoalitionReport, RunReport, WireRecord};
use super::scenario::{topo_nodes, Protocol, Scenario};
use super::HarnessError;
use crate::centralized_kms::centralized_send;
use crate::decentralized_kms::{dkms_exchange, DkmsOptions};
use crate::key_fabric::{build_topology, LinkId, Network, NodeId, NodeKind, Role};
use crate::protocols::{
    fat_send, find_disjoint_paths, pat_multipath_send, share_payload_bits, Carrier, PathSet,
    ProtocolError, Scheme,
};
use crate::rng::DetRng;
use crate::secret_sharing::BitString;
use crate::symbolic::{LinExpr, Tracked, VarKind};
use crate::trust_analyzer::{
    classify_coalition, classify_with, AnalysisError, Coalition, Engine, SecretModel, TrustLevel,
};

/// A finished (or aborted) protocol run, before analysis.
#[derive(Clone, Debug)]
pub struct Execution {
    pub net: Network,
    pub model: Option<SecretModel>,
    pub delivered: bool,
    pub key_match: bool,
    pub error: Option<String>,
    pub alice_key: Option<BitString>,
    pub bob_key: Option<BitString>,
    pub paths: Option<PathSet>,
    /// Values that must never travel as a payload.
    pub hidden: Vec<LinExpr>,
    /// Central manager's output against `K_S ⊕ K_NB`.
    pub telescoping: Option<bool>,
}

/// Payload width on every link for this scenario.
pub fn link_key_bits(sc: &Scenario) -> usize {
    match sc.protocol {
        Protocol::FatChain | Protocol::PatXor | Protocol::Centralized => sc.secret_bits,
        Protocol::PatShamir => match &sc.shamir {
            Some(p) => share_payload_bits(&Scheme::Shamir(*p), sc.secret_bits),
            None => sc.secret_bits,
        },
        Protocol::Decentralized => sc.secret_bits / 2,
    }
}

fn node(s: &str) -> NodeId {
    NodeId::new(s)
}

/// Builds the network, provisions keys, applies taps and runs the protocol.
/// Configuration problems are errors; protocol aborts are recorded in the
/// returned execution.
pub fn execute(sc: &Scenario) -> Result<Execution, HarnessError> {
    sc.validate()?;
    let bits = link_key_bits(sc);
    if let Some(b) = sc.link_key_bits {
        if b != bits {
            return Err(HarnessError::Config(format!(
                "link_key_bits = {b}, but {} payloads on each link are {bits} bits",
                sc.protocol.as_str()
            )));
        }
    }
    let mut net = Network::new(build_topology(&sc.topology)?);
    for tap in &sc.taps {
        let who: Vec<NodeId> = tap.nodes.iter().map(|n| node(n)).collect();
        net.apply_tap(&tap.channel, &who)?;
    }
    for i in 0..net.topology().links().len() {
        let label = format!("link:{}", net.topology().link(LinkId(i)).id);
        let mut rng = DetRng::new(sc.seed, &label);
        net.provision_link_keys(LinkId(i), sc.pool_keys, bits, &mut rng);
    }

    let (alice, bob) = (node(&sc.alice), node(&sc.bob));
    let mut ex = Execution {
        net,
        model: None,
        delivered: false,
        key_match: false,
        error: None,
        alice_key: None,
        bob_key: None,
        paths: None,
        hidden: Vec::new(),
        telescoping: None,
    };

    if sc.protocol == Protocol::Decentralized {
        let sat = sc.satellite_name(&topo_nodes(&sc.topology, NodeKind::Satellite))?;
        let k_a = BitString::random(sc.secret_bits, &mut DetRng::new(sc.seed, "party:alice"));
        let k_b = BitString::random(sc.secret_bits, &mut DetRng::new(sc.seed, "party:bob"));
        let opts = DkmsOptions {
            order: sc.order,
            routing: sc.routing,
            terrestrial: None,
        };
        match dkms_exchange(&mut ex.net, &alice, &bob, &node(&sat), &k_a, &k_b, &opts) {
            Ok(out) => {
                ex.delivered = true;
                ex.key_match = out.alice_key == out.bob_key;
                ex.alice_key = Some(out.alice_key);
                ex.bob_key = Some(out.bob_key);
                ex.hidden = vec![out.halves[1].expr.clone(), out.halves[3].expr.clone()];
                ex.model = Some(out.model);
            }
            Err(e) => ex.error = Some(e.to_string()),
        }
        return Ok(ex);
    }

    let value = BitString::random(sc.secret_bits, &mut DetRng::new(sc.seed, "secret"));
    let secret = ex.net.vars_mut().fresh("K_S", VarKind::Secret, value.clone());
    ex.net.note(&alice, Role::Computed, "K_S", secret.clone());
    ex.alice_key = Some(value.clone());
    let plain_model = SecretModel {
        secret: secret.expr.clone(),
        material: Vec::new(),
        shamir: None,
    };

    let finish = |ex: &mut Execution, got: Option<BitString>| {
        ex.delivered = got.is_some();
        ex.key_match = got.as_ref() == Some(&value);
        ex.bob_key = got;
    };

    match sc.protocol {
        Protocol::FatChain => {
            ex.model = Some(plain_model);
            match fat_send(&mut ex.net, &alice, &bob, &secret) {
                Ok(out) => finish(&mut ex, Some(out.delivered.value)),
                Err(e) => ex.error = Some(e.to_string()),
            }
        }
        Protocol::Centralized => {
            ex.model = Some(plain_model);
            let central = sc.central_name().unwrap_or_else(|| "kms".to_string());
            match centralized_send(&mut ex.net, &alice, &bob, &node(&central), &secret) {
                Ok(out) => {
                    ex.telescoping = Some(telescoping_holds(&ex.net, &alice, &bob, &secret));
                    finish(&mut ex, Some(out.recovered));
                }
                Err(e) => ex.error = Some(e.to_string()),
            }
        }
        Protocol::PatXor | Protocol::PatShamir => {
            let scheme = match sc.shamir {
                Some(p) => Scheme::Shamir(p),
                None => Scheme::Xor { k: sc.share_count() },
            };
            let paths = select_paths(sc, &ex.net, &alice, &bob, scheme.share_count())?;
            let failed: BTreeSet<usize> = sc.drop_paths.iter().map(|d| d - 1).collect();
            let label = if sc.shamir.is_some() { "shamir" } else { "xor-split" };
            let mut rng = DetRng::new(sc.seed, label);
            match pat_multipath_send(&mut ex.net, &alice, &bob, &secret, &scheme, &paths, &failed, &mut rng) {
                Ok(out) => {
                    ex.model = Some(out.model);
                    if out.recovered.is_none() {
                        ex.error = Some(format!(
                            "only {} of {} shares delivered",
                            out.delivered_paths.len(),
                            scheme.share_count()
                        ));
                    }
                    finish(&mut ex, out.recovered);
                }
                Err(e) => ex.error = Some(e.to_string()),
            }
            ex.paths = Some(paths);
        }
        Protocol::Decentralized => unreachable!("handled above"),
    }
    Ok(ex)
}

fn select_paths(sc: &Scenario, net: &Network, alice: &NodeId, bob: &NodeId, k: usize) -> Result<PathSet, HarnessError> {
    let paths = if sc.routes.is_empty() {
        find_disjoint_paths(net.topology(), alice, bob, k, Carrier::Quantum)
    } else {
        let routes = sc
            .routes
            .iter()
            .map(|r| r.iter().map(|n| node(n)).collect())
            .collect();
        PathSet::from_routes(net.topology(), routes)
    }
    .map_err(|e| HarnessError::Config(e.to_string()))?;
    if !paths.disjoint && !sc.allow_overlap {
        return Err(HarnessError::Config(
            "routes share relays; set allow_overlap = true to accept".into(),
        ));
    }
    for p in &paths.paths {
        if p.first() != Some(alice) || p.last() != Some(bob) {
            return Err(HarnessError::Config(ProtocolError::PathEndpoints.to_string()));
        }
    }
    Ok(paths)
}

/// Recomputes `K_S ⊕ K_NB` from the key pool and compares it with what the
/// manager sent to Bob.
fn telescoping_holds(net: &Network, alice: &NodeId, bob: &NodeId, secret: &Tracked) -> bool {
    let Ok(chain) = net.topology().chain(alice, bob) else {
        return false;
    };
    let Ok(last) = net.topology().link_between(&chain[chain.len() - 2], bob) else {
        return false;
    };
    let Some(k_nb) = net.topology().link(last).pool.iter().find(|k| k.consumed) else {
        return false;
    };
    let expected = secret.value.xor(&k_nb.value).expect("equal lengths");
    net.wire()
        .iter()
        .filter(|m| m.label == "C" && &m.to == bob)
        .all(|m| m.payload.value == expected)
        && net.wire().iter().any(|m| m.label == "C")
}

/// Payload written as an XOR of whole primitives.
fn formula(net: &Network, payload: &Tracked) -> String {
    let Some((parts, constant)) = payload.expr.placements(net.vars()) else {
        return "(mixed)".to_string();
    };
    let mut terms: Vec<String> = parts
        .iter()
        .map(|p| {
            let v = net.vars().get(p.var);
            if p.at == 0 && v.len() == payload.len() {
                v.name.clone()
            } else {
                format!("{}@{}", v.name, p.at)
            }
        })
        .collect();
    if !constant.is_zero() || terms.is_empty() {
        terms.push(format!("0x{}", constant.to_hex()));
    }
    terms.join(" ⊕ ")
}

fn expected_level(p: Protocol) -> TrustLevel {
    match p {
        Protocol::FatChain => TrustLevel::Fat,
        Protocol::PatXor | Protocol::PatShamir | Protocol::Decentralized => TrustLevel::Pat,
        Protocol::Centralized => TrustLevel::Nat,
    }
}

/// Fewest relays whose paths together carry `need` shares.
fn coalition_bound(paths: &PathSet, need: usize) -> Option<usize> {
    let relays: Vec<NodeId> = paths
        .paths
        .iter()
        .flat_map(|p| p[1..p.len() - 1].iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if relays.len() > 20 {
        return None;
    }
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << relays.len()) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let covered = paths
            .paths
            .iter()
            .filter(|p| {
                relays
                    .iter()
                    .enumerate()
                    .any(|(i, r)| mask >> i & 1 == 1 && p[1..p.len() - 1].contains(r))
            })
            .count();
        if covered >= need {
            best = Some(size);
        }
    }
    best
}

/// Runs the scenario and analyses every node and declared coalition.
pub fn run_scenario(sc: &Scenario) -> Result<RunReport, HarnessError> {
    let ex = execute(sc)?;
    let net = &ex.net;
    let (alice, bob) = (node(&sc.alice), node(&sc.bob));

    let mut verdicts = BTreeMap::new();
    let mut unanalyzed = BTreeMap::new();
    let mut coalitions = Vec::new();
    let mut sound = true;
    let mut agree = true;
    let mut cross_checked = false;
    if let Some(model) = &ex.model {
        for n in net.topology().nodes() {
            let c = Coalition::new(net, [n.clone()])?;
            match classify_coalition(net, model, &c) {
                Ok(v) => {
                    if model.shamir.is_none() {
                        match classify_with(net, model, &c, Engine::Enumeration) {
                            Ok(e) => {
                                cross_checked = true;
                                agree &= e.level == v.level
                                    && e.determined_bits == v.determined_bits
                                    && e.posterior_entropy_bits == v.posterior_entropy_bits
                                    && e.correlation_witness == v.correlation_witness;
                            }
                            Err(AnalysisError::DomainTooLarge { .. }) => {}
                            Err(_) => agree = false,
                        }
                    }
                    verdicts.insert(n.to_string(), v);
                }
                Err(e) => {
                    sound &= !matches!(e, AnalysisError::Unsound(_));
                    unanalyzed.insert(n.to_string(), e.to_string());
                }
            }
        }
        for members in &sc.coalitions {
            let c = Coalition::new(net, members.iter().map(|m| node(m)))?;
            let (verdict, error) = match classify_coalition(net, model, &c) {
                Ok(v) => (Some(v), None),
                Err(e) => {
                    sound &= !matches!(e, AnalysisError::Unsound(_));
                    (None, Some(e.to_string()))
                }
            };
            coalitions.push(CoalitionReport {
                members: c.members().iter().map(|m| m.to_string()).collect(),
                verdict,
                error,
            });
        }
    }

    let mut checks = BTreeMap::new();
    let replay = net
        .wire()
        .iter()
        .all(|m| m.payload.expr.eval_truth(net.vars()) == m.payload.value);
    checks.insert("wire_replay".to_string(), replay);
    if ex.model.is_some() {
        checks.insert("soundness".to_string(), sound);
    }
    if cross_checked {
        checks.insert("engine_agreement".to_string(), agree);
    }
    if let Some(t) = ex.telescoping {
        checks.insert("telescoping".to_string(), t);
    }
    if !ex.hidden.is_empty() {
        let clean = net.transcripts().values().all(|t| {
            t.entries()
                .iter()
                .filter(|e| matches!(e.role, Role::Sent | Role::Received | Role::Overheard))
                .all(|e| !ex.hidden.contains(&e.value.expr))
        }) && net.wire().iter().all(|m| !ex.hidden.contains(&m.payload.expr));
        checks.insert("never_transmitted".to_string(), clean);
    }

    let expected = expected_level(sc.protocol);
    let escalations = verdicts
        .iter()
        .filter(|(n, v)| **n != alice.0 && **n != bob.0 && v.level > expected)
        .map(|(n, v)| format!("{n}: {} above {}", v.level, expected))
        .collect();

    let bound = ex.paths.as_ref().and_then(|p| {
        let need = match &sc.shamir {
            Some(params) => params.threshold,
            None => p.len(),
        };
        coalition_bound(p, need)
    });

    let keys_consumed = net
        .topology()
        .links()
        .iter()
        .map(|l| (l.id.clone(), l.drawn))
        .collect();
    let variables = net
        .vars()
        .vars()
        .iter()
        .map(|v| (v.name.clone(), v.value.to_hex()))
        .collect();
    let wire = net
        .wire()
        .iter()
        .map(|m| WireRecord {
            seq: m.seq,
            from: m.from.to_string(),
            to: m.to.to_string(),
            channel: m.channel.clone(),
            label: m.label.clone(),
            payload: m.payload.value.to_hex(),
            bits: m.payload.len(),
            share_index: m.share_index,
            formula: formula(net, &m.payload),
        })
        .collect();

    Ok(RunReport {
        scenario: sc.clone(),
        delivered: ex.delivered,
        key_match: ex.key_match,
        error: ex.error.clone(),
        alice_key: ex.alice_key.as_ref().map(BitString::to_hex),
        bob_key: ex.bob_key.as_ref().map(BitString::to_hex),
        keys_consumed,
        verdicts,
        unanalyzed,
        coalitions,
        escalations,
        coalition_bound: bound,
        checks,
        variables,
        wire,
    })
}
