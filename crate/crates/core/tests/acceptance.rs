//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::Rng;

use qkdn_core::centralized_kms::centralized_send;
use qkdn_core::key_fabric::{build_topology, LinkId, Network, NodeId, NodeKind, Role, TopologySpec};
use qkdn_core::secret_sharing::{shamir_reconstruct, shamir_split, BitString, ShamirParams};
use qkdn_core::sim_harness::{emit_report, execute, run_scenario, Format, Protocol, Scenario, Tap};
use qkdn_core::symbolic::VarKind;
use qkdn_core::trust_analyzer::{
    classify_coalition, classify_with, posterior_entropy, shamir_posterior, Coalition, Engine,
    SecretModel, TrustLevel,
};
use qkdn_core::DetRng;

type Outcome = Result<String, String>;
type Check = Box<dyn Fn() -> Outcome>;

fn chain_with_kms(relays: usize, kms_bob_secure: bool) -> TopologySpec {
    let mut t = TopologySpec::chain(relays).with_node("kms", NodeKind::CentralKms);
    t = t.with_channel("alice", "kms", true);
    for i in 1..=relays {
        t = t.with_channel(&format!("n{i}"), "kms", true);
    }
    t.with_channel("kms", "bob", kms_bob_secure)
}

fn chain_with_sat(relays: usize) -> TopologySpec {
    TopologySpec::chain(relays)
        .with_node("sat", NodeKind::Satellite)
        .with_channel("alice", "sat", true)
        .with_channel("sat", "bob", true)
}

/// `k` one-relay paths `alice - pi - bob`.
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

fn relays(topo: &TopologySpec) -> Vec<String> {
    topo.nodes
        .iter()
        .filter(|(n, _)| n != "alice" && n != "bob")
        .map(|(n, _)| n.clone())
        .collect()
}

fn coalition(net: &Network, names: &[String]) -> Coalition {
    Coalition::new(net, names.iter().map(NodeId::new)).expect("members exist")
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    match limit {
        Some(l) if took > l => Err(format!("{out}, but took {took:.2?} (limit {l:?})")),
        _ => Ok(format!("{out} in {took:.2?}")),
    }
}

// Combined mask against the secret and the last-hop key read straight from
// the pool.
fn telescoping() -> Outcome {
    let mut runs = 0;
    for n in 1..=8 {
        for seed in 0..1000u64 {
            let mut net = Network::new(build_topology(&chain_with_kms(n, true)).unwrap());
            for i in 0..net.topology().links().len() {
                let mut rng = DetRng::new(seed, &format!("link:{i}"));
                net.provision_link_keys(LinkId(i), 1, 16, &mut rng);
            }
            let value = BitString::random(16, &mut DetRng::new(seed, "secret"));
            let secret = net.vars_mut().fresh("K_S", VarKind::Secret, value.clone());
            let (alice, bob) = (NodeId::new("alice"), NodeId::new("bob"));
            let out = centralized_send(&mut net, &alice, &bob, &NodeId::new("kms"), &secret)
                .map_err(|e| format!("N={n} seed {seed}: {e}"))?;
            let last = net.topology().link_between(&NodeId::new(format!("n{n}")), &bob).unwrap();
            let k_nb = &net.topology().link(last).pool[0].value;
            let want: Vec<bool> = value.bits().iter().zip(k_nb.bits()).map(|(a, b)| a ^ b).collect();
            if out.combined.bits() != want.as_slice() {
                return Err(format!("N={n} seed {seed}: combined mask differs"));
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} chains"))
}

fn agreement() -> Outcome {
    let mut cases: Vec<(&str, Scenario)> = vec![
        ("fat_chain", Scenario::new(TopologySpec::chain(3), Protocol::FatChain, 16, 0)),
        ("pat_xor", Scenario::new(parallel(3), Protocol::PatXor, 16, 0)),
        ("decentralized", Scenario::new(chain_with_sat(2), Protocol::Decentralized, 16, 0)),
        ("centralized", Scenario::new(chain_with_kms(3, true), Protocol::Centralized, 16, 0)),
    ];
    cases[1].1.shares = Some(3);
    let mut sh = Scenario::new(parallel(3), Protocol::PatShamir, 16, 0);
    sh.shamir = Some(ShamirParams::new(11, 2, 3).unwrap());
    cases.push(("pat_shamir", sh));
    for (name, base) in &cases {
        for seed in 0..1000 {
            let mut sc = base.clone();
            sc.seed = seed;
            let ex = execute(&sc).map_err(|e| format!("{name}: {e}"))?;
            let (a, b) = (ex.alice_key.as_ref(), ex.bob_key.as_ref());
            if ex.error.is_some() || a.is_none() || a != b || a.map(|k| k.len()) != Some(16) {
                return Err(format!("{name} seed {seed}: {:?} vs {:?} ({:?})", a, b, ex.error));
            }
        }
    }
    Ok(format!("{} protocols x 1000 seeds", cases.len()))
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

fn shamir_threshold() -> Outcome {
    let mut checked = 0;
    for q in [5u64, 7, 11, 13] {
        for k in 1..=4 {
            for t in 1..=k {
                let p = ShamirParams::new(q, t, k).unwrap();
                let mut rng = DetRng::new(q * 100 + (t * 10 + k) as u64, "shamir");
                for s in 0..q {
                    let shares = shamir_split(p.modulus.element(s), &p, &mut rng).unwrap();
                    for sub in subsets(k, t) {
                        let pick: Vec<_> = sub.iter().map(|&i| shares[i]).collect();
                        let got = shamir_reconstruct(&pick, t).map_err(|e| e.to_string())?;
                        if got.value() != s {
                            return Err(format!("q={q} t={t} k={k}: {sub:?} rebuilt {} not {s}", got.value()));
                        }
                    }
                    for sub in subsets(k, t - 1) {
                        let pick: Vec<_> = sub.iter().map(|&i| shares[i]).collect();
                        let post = shamir_posterior(&pick, &p).map_err(|e| e.to_string())?;
                        let flat = post.counts.iter().all(|&c| c == post.counts[0] && c > 0);
                        if !flat || post.counts.len() != q as usize {
                            return Err(format!("q={q} t={t} k={k} s={s}: {sub:?} gives {:?}", post.counts));
                        }
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} (q,t,k,secret) cases"))
}

fn verdict_matrix() -> Outcome {
    let mut xor = Scenario::new(parallel(3), Protocol::PatXor, 8, 1);
    xor.shares = Some(3);
    let mut sh = Scenario::new(parallel(3), Protocol::PatShamir, 8, 1);
    sh.shamir = Some(ShamirParams::new(7, 2, 3).unwrap());
    let cases = [
        (Scenario::new(TopologySpec::chain(3), Protocol::FatChain, 8, 1), TrustLevel::Fat),
        (xor, TrustLevel::Pat),
        (sh, TrustLevel::Pat),
        (Scenario::new(chain_with_sat(2), Protocol::Decentralized, 8, 1), TrustLevel::Pat),
        (Scenario::new(chain_with_kms(3, true), Protocol::Centralized, 8, 1), TrustLevel::Nat),
    ];
    let mut cells = 0;
    for (sc, want) in &cases {
        let name = sc.protocol.as_str();
        let ex = execute(sc).map_err(|e| format!("{name}: {e}"))?;
        let model = ex.model.as_ref().ok_or(format!("{name}: no model"))?;
        let engines: &[Engine] = if model.shamir.is_some() {
            &[Engine::Shamir]
        } else {
            &[Engine::Linear, Engine::Enumeration]
        };
        for node in relays(&sc.topology) {
            let c = coalition(&ex.net, std::slice::from_ref(&node));
            for &engine in engines {
                let v = classify_with(&ex.net, model, &c, engine).map_err(|e| format!("{name}/{node}: {e}"))?;
                if v.level != *want {
                    return Err(format!("{name}: {node} is {} under {engine:?}, expected {want}", v.level));
                }
                cells += 1;
            }
        }
    }
    Ok(format!("{cells} node/engine verdicts"))
}

fn coalition_thresholds() -> Outcome {
    let mut sc = Scenario::new(parallel(3), Protocol::PatXor, 8, 5);
    sc.shares = Some(3);
    let ex = execute(&sc).map_err(|e| e.to_string())?;
    let model = ex.model.as_ref().unwrap();
    for sub in subsets(3, 2).into_iter().chain(subsets(3, 3)) {
        let names: Vec<String> = sub.iter().map(|i| format!("p{}", i + 1)).collect();
        let v = classify_coalition(&ex.net, model, &coalition(&ex.net, &names)).map_err(|e| e.to_string())?;
        let want = if names.len() == 3 { TrustLevel::Fat } else { TrustLevel::Pat };
        if v.level != want {
            return Err(format!("xor {names:?}: {} expected {want}", v.level));
        }
    }

    // field level: any two of four shares leave log2 q, any three pin it
    for q in [5u64, 7, 11, 13] {
        let p = ShamirParams::new(q, 3, 4).unwrap();
        let mut rng = DetRng::new(q, "c5");
        for s in 0..q {
            let shares = shamir_split(p.modulus.element(s), &p, &mut rng).unwrap();
            for (size, want) in [(2, (q as f64).log2()), (3, 0.0)] {
                for sub in subsets(4, size) {
                    let pick: Vec<_> = sub.iter().map(|&i| shares[i]).collect();
                    let h = shamir_posterior(&pick, &p).map_err(|e| e.to_string())?.entropy();
                    if (h - want).abs() > 1e-9 {
                        return Err(format!("q={q} s={s} {sub:?}: entropy {h}, expected {want}"));
                    }
                }
            }
        }
    }

    // protocol level, through the relays
    let mut sh = Scenario::new(parallel(4), Protocol::PatShamir, 4, 5);
    sh.shamir = Some(ShamirParams::new(5, 3, 4).unwrap());
    let ex = execute(&sh).map_err(|e| e.to_string())?;
    let model = ex.model.as_ref().unwrap();
    for (size, want) in [(2, TrustLevel::Pat), (3, TrustLevel::Fat)] {
        for sub in subsets(4, size) {
            let names: Vec<String> = sub.iter().map(|i| format!("p{}", i + 1)).collect();
            let v = classify_coalition(&ex.net, model, &coalition(&ex.net, &names)).map_err(|e| e.to_string())?;
            if v.level != want {
                return Err(format!("shamir {names:?}: {} expected {want}", v.level));
            }
        }
    }
    Ok("xor k=3 and shamir t=3,k=4 over q in {5,7,11,13}".into())
}

fn tap_escalation() -> Outcome {
    for n in 1..=6 {
        let relay = format!("n{n}");
        let base = Scenario::new(chain_with_kms(n, false), Protocol::Centralized, 8, 7);
        let mut tapped = base.clone();
        tapped.taps.push(Tap {
            channel: "kms-bob".into(),
            nodes: vec![relay.clone()],
        });
        let mut levels = Vec::new();
        for sc in [&base, &tapped] {
            let ex = execute(sc).map_err(|e| e.to_string())?;
            let model = ex.model.as_ref().unwrap();
            let v = classify_coalition(&ex.net, model, &coalition(&ex.net, std::slice::from_ref(&relay)))
                .map_err(|e| e.to_string())?;
            levels.push(v.level);
        }
        if levels != [TrustLevel::Nat, TrustLevel::Fat] {
            return Err(format!("N={n}: {relay} went {} -> {}", levels[0], levels[1]));
        }
    }
    Ok("relay N goes NAT -> FAT for N = 1..6".into())
}

fn unknown_bits(net: &Network, model: &SecretModel) -> usize {
    let mut bits: BTreeSet<_> = model.secret.support();
    for t in net.transcripts().values() {
        for e in t.entries() {
            bits.extend(e.value.expr.support());
        }
    }
    bits.len()
}

fn random_scenario(rng: &mut DetRng, seed: u64) -> Scenario {
    let relays = rng.gen_range(1..=3);
    let mut sc = match rng.gen_range(0..4) {
        0 => Scenario::new(TopologySpec::chain(relays), Protocol::FatChain, rng.gen_range(1..=4), seed),
        1 => {
            let k = rng.gen_range(2..=3);
            let mut sc = Scenario::new(parallel(k), Protocol::PatXor, rng.gen_range(1..=3), seed);
            sc.shares = Some(k);
            sc
        }
        2 => Scenario::new(chain_with_sat(relays.min(2)), Protocol::Decentralized, 2, seed),
        _ => {
            let tap = rng.gen_bool(0.5);
            let mut sc = Scenario::new(chain_with_kms(relays, !tap), Protocol::Centralized, rng.gen_range(1..=3), seed);
            if tap {
                sc.taps.push(Tap {
                    channel: "kms-bob".into(),
                    nodes: vec![format!("n{}", rng.gen_range(1..=relays))],
                });
            }
            sc
        }
    };
    sc.pool_keys = if sc.protocol == Protocol::Decentralized { 2 } else { 1 };
    sc
}

fn engine_agreement() -> Outcome {
    let mut rng = DetRng::new(2024, "criterion-7");
    let (mut scenarios, mut verdicts) = (0, 0);
    while scenarios < 200 {
        let seed = rng.gen();
        let sc = random_scenario(&mut rng, seed);
        let ex = execute(&sc).map_err(|e| format!("{sc:?}: {e}"))?;
        let model = ex.model.as_ref().ok_or_else(|| format!("{} aborted: {:?}", sc.protocol.as_str(), ex.error))?;
        if unknown_bits(&ex.net, model) > 12 {
            continue;
        }
        scenarios += 1;
        let nodes: Vec<String> = sc.topology.nodes.iter().map(|(n, _)| n.clone()).collect();
        let mask = rng.gen_range(1u32..1 << nodes.len());
        let group: Vec<String> = nodes.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| n.clone()).collect();
        let mut coalitions: Vec<Vec<String>> = nodes.iter().map(|n| vec![n.clone()]).collect();
        coalitions.push(group);
        for members in coalitions {
            let c = coalition(&ex.net, &members);
            let lin = classify_with(&ex.net, model, &c, Engine::Linear).map_err(|e| e.to_string())?;
            let en = classify_with(&ex.net, model, &c, Engine::Enumeration).map_err(|e| e.to_string())?;
            let h = posterior_entropy(&ex.net, model, &c).map_err(|e| e.to_string())?;
            let same = lin.level == en.level
                && lin.determined_bits == en.determined_bits
                && lin.posterior_entropy_bits == h
                && (lin.correlation_witness.is_some()) == (en.correlation_witness.is_some());
            if !same {
                return Err(format!(
                    "{} seed {} {members:?}: linear {:?} vs enumeration {:?}",
                    sc.protocol.as_str(),
                    sc.seed,
                    lin,
                    en
                ));
            }
            verdicts += 1;
        }
    }
    Ok(format!("{scenarios} scenarios, {verdicts} verdicts"))
}

fn never_transmitted() -> Outcome {
    for seed in 0..1000 {
        let sc = Scenario::new(chain_with_sat(2), Protocol::Decentralized, 16, seed);
        let ex = execute(&sc).map_err(|e| e.to_string())?;
        let vars = ex.net.vars();
        for name in ["K'_A2", "K'_B2"] {
            let (id, _) = vars.by_name(name).ok_or(format!("no {name}"))?;
            let hidden = vars.tracked(id).expr;
            let leaked = ex.net.transcripts().values().any(|t| {
                t.entries().iter().any(|e| {
                    matches!(e.role, Role::Sent | Role::Received | Role::Overheard) && e.value.expr == hidden
                })
            }) || ex.net.wire().iter().any(|m| m.payload.expr == hidden);
            if leaked {
                return Err(format!("seed {seed}: {name} travelled as a payload"));
            }
        }
    }
    Ok("1000 runs".into())
}

fn determinism() -> Outcome {
    let mut xor = Scenario::new(parallel(3), Protocol::PatXor, 16, 11);
    xor.shares = Some(3);
    let mut cases = vec![
        Scenario::new(TopologySpec::chain(3), Protocol::FatChain, 16, 11),
        xor,
        Scenario::new(chain_with_sat(2), Protocol::Decentralized, 16, 11),
        Scenario::new(chain_with_kms(3, true), Protocol::Centralized, 16, 11),
    ];
    let mut sh = Scenario::new(parallel(3), Protocol::PatShamir, 16, 11);
    sh.shamir = Some(ShamirParams::new(13, 2, 3).unwrap());
    cases.push(sh);
    for sc in &cases {
        let a = emit_report(&run_scenario(sc).map_err(|e| e.to_string())?, Format::Json);
        let b = emit_report(&run_scenario(sc).map_err(|e| e.to_string())?, Format::Json);
        if a != b {
            return Err(format!("{} reports differ", sc.protocol.as_str()));
        }
    }
    Ok(format!("{} protocols", cases.len()))
}

fn main() {
    let criteria: Vec<(&str, Check)> = vec![
        ("telescoping mask identity", Box::new(|| timed(Some(Duration::from_secs(5)), telescoping))),
        ("end-to-end agreement", Box::new(|| timed(None, agreement))),
        ("shamir threshold", Box::new(|| timed(Some(Duration::from_secs(30)), shamir_threshold))),
        ("verdict matrix", Box::new(|| timed(None, verdict_matrix))),
        ("coalition thresholds", Box::new(|| timed(None, coalition_thresholds))),
        ("tap escalation", Box::new(|| timed(None, tap_escalation))),
        ("engine cross-validation", Box::new(|| timed(None, engine_agreement))),
        ("never transmitted", Box::new(|| timed(None, never_transmitted))),
        ("determinism", Box::new(|| timed(None, determinism))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(d) => println!("criterion {}: PASS  {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {d}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
