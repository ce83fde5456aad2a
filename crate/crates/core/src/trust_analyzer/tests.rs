use proptest::prelude::*;

use super::*;
use crate::rng::DetRng;
use crate::secret_sharing::{shamir_split, LeadingCoefficient, ShamirParams};
use crate::sim_harness::{builtin_scenarios, execute, parse_scenario, Execution, Scenario};

fn scenario(name: &str) -> Scenario {
    let text = builtin_scenarios()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| t)
        .unwrap();
    parse_scenario(text).unwrap()
}

fn run(sc: &Scenario) -> (Execution, SecretModel) {
    let ex = execute(sc).unwrap();
    let model = ex.model.clone().expect("model");
    (ex, model)
}

fn verdict(ex: &Execution, model: &SecretModel, names: &[&str]) -> TrustVerdict {
    let c = Coalition::new(&ex.net, names.iter().map(|n| NodeId::new(*n))).unwrap();
    classify_coalition(&ex.net, model, &c).unwrap()
}

#[test]
fn fat_relay_sees_everything() {
    let (ex, m) = run(&scenario("fat_chain"));
    let v = verdict(&ex, &m, &["n1"]);
    assert_eq!(v.level, TrustLevel::Fat);
    assert_eq!(v.determined_bits, 16);
    assert_eq!(v.posterior_entropy_bits, 0.0);
}

#[test]
fn xor_relay_is_partial() {
    let (ex, m) = run(&scenario("pat_xor"));
    let v = verdict(&ex, &m, &["n2"]);
    assert_eq!(v.level, TrustLevel::Pat);
    assert_eq!(v.determined_bits, 0);
    assert_eq!(v.posterior_entropy_bits, 8.0);
    assert!(v.correlation_witness.is_some());
    // every path together rebuilds the key
    assert_eq!(verdict(&ex, &m, &["n1", "n2", "n3"]).level, TrustLevel::Fat);
}

#[test]
fn centralized_relay_learns_nothing() {
    let (ex, m) = run(&scenario("centralized"));
    for n in ["n1", "n2", "n3", "kms"] {
        let v = verdict(&ex, &m, &[n]);
        assert_eq!(v.level, TrustLevel::Nat, "{n}");
        assert!(v.correlation_witness.is_none());
    }
}

#[test]
fn dkms_relays_and_satellite_are_partial() {
    let (ex, m) = run(&scenario("decentralized"));
    for n in ["n1", "n2", "sat"] {
        assert_eq!(verdict(&ex, &m, &[n]).level, TrustLevel::Pat, "{n}");
    }
}

#[test]
fn end_hosts_hold_the_key() {
    for (name, _) in builtin_scenarios() {
        let (ex, m) = run(&scenario(name));
        assert_eq!(verdict(&ex, &m, &["alice"]).level, TrustLevel::Fat, "{name}");
        assert_eq!(verdict(&ex, &m, &["bob"]).level, TrustLevel::Fat, "{name}");
    }
}

#[test]
fn empty_coalition_is_nat() {
    let (ex, m) = run(&scenario("pat_xor"));
    let v = verdict(&ex, &m, &[]);
    assert_eq!(v.level, TrustLevel::Nat);
    assert_eq!(v.posterior_entropy_bits, 8.0);
}

#[test]
fn unknown_coalition_member() {
    let (ex, _) = run(&scenario("pat_xor"));
    assert!(matches!(
        Coalition::new(&ex.net, [NodeId::new("mallory")]),
        Err(AnalysisError::UnknownNode(_))
    ));
}

#[test]
fn tapping_the_last_mask_lifts_a_relay() {
    let mut sc = scenario("centralized");
    for ch in sc.topology.cchannels.iter_mut() {
        if ch.a == "kms" && ch.b == "bob" {
            ch.secure = false;
        }
    }
    let plain = run(&sc);
    assert_eq!(verdict(&plain.0, &plain.1, &["n3"]).level, TrustLevel::Nat);
    sc.taps.push(crate::sim_harness::Tap {
        channel: "kms-bob".into(),
        nodes: vec!["n3".into()],
    });
    let (ex, m) = run(&sc);
    assert_eq!(verdict(&ex, &m, &["n3"]).level, TrustLevel::Fat);
    assert_eq!(verdict(&ex, &m, &["n2"]).level, TrustLevel::Nat);
}

#[test]
fn shamir_relay_is_partial_and_threshold_rebuilds() {
    let (ex, m) = run(&scenario("pat_shamir"));
    let one = verdict(&ex, &m, &["n1"]);
    assert_eq!(one.engine, Engine::Shamir);
    assert_eq!(one.level, TrustLevel::Pat);
    assert_eq!(verdict(&ex, &m, &["n1", "n3"]).level, TrustLevel::Fat);
}

#[test]
fn linear_engine_refuses_threshold_model() {
    let (ex, m) = run(&scenario("pat_shamir"));
    let c = Coalition::new(&ex.net, [NodeId::new("n1")]).unwrap();
    assert!(matches!(
        classify_with(&ex.net, &m, &c, Engine::Linear),
        Err(AnalysisError::NonLinear(_))
    ));
}

fn naive_posterior(q: u64, t: usize, leading_nonzero: bool, shares: &[(u64, u64)]) -> Vec<u64> {
    // odometer over (secret, a_1..a_{t-1})
    let mut counts = vec![0u64; q as usize];
    let total = q.pow(t as u32);
    for code in 0..total {
        let mut digits = Vec::with_capacity(t);
        let mut c = code;
        for _ in 0..t {
            digits.push(c % q);
            c /= q;
        }
        if leading_nonzero && t > 1 && digits[t - 1] == 0 {
            continue;
        }
        let ok = shares.iter().all(|&(x, y)| {
            let mut acc = 0;
            let mut xp = 1;
            for d in &digits {
                acc = (acc + d * xp) % q;
                xp = xp * x % q;
            }
            acc == y
        });
        if ok {
            counts[digits[0] as usize] += 1;
        }
    }
    counts
}

#[test]
fn one_share_below_threshold_leaves_log_q() {
    let p = ShamirParams::new(5, 2, 3).unwrap();
    let mut rng = DetRng::new(3, "test");
    let shares = shamir_split(p.modulus.element(4), &p, &mut rng).unwrap();
    let post = shamir_posterior(&shares[..1], &p).unwrap();
    assert!(post.is_uniform());
    assert!((post.entropy() - 5f64.log2()).abs() < 1e-12);
    let both = shamir_posterior(&shares[..2], &p).unwrap();
    assert_eq!(both.support(), 1);
    assert_eq!(both.entropy(), 0.0);
    assert_eq!(both.counts[4], 1);
}

#[test]
fn nonzero_leading_coefficient_leaks() {
    let p = ShamirParams::new(7, 2, 2)
        .unwrap()
        .with_leading(LeadingCoefficient::NonZero);
    let mut rng = DetRng::new(9, "test");
    let shares = shamir_split(p.modulus.element(2), &p, &mut rng).unwrap();
    let post = shamir_posterior(&shares[..1], &p).unwrap();
    assert_eq!(post.support(), 6);
    assert!((post.entropy() - 6f64.log2()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn posterior_matches_naive_count(
        qi in 0usize..4,
        t in 1usize..4,
        secret in 0u64..13,
        seed in any::<u64>(),
        nonzero in any::<bool>(),
        take in 0usize..4,
    ) {
        let q = [5u64, 7, 11, 13][qi];
        let secret = secret % q;
        let mut p = ShamirParams::new(q, t, 3).unwrap();
        if nonzero {
            p = p.with_leading(LeadingCoefficient::NonZero);
        }
        let mut rng = DetRng::new(seed, "prop");
        let shares = shamir_split(p.modulus.element(secret), &p, &mut rng).unwrap();
        let seen = &shares[..take.min(3)];
        let post = shamir_posterior(seen, &p).unwrap();
        let pairs: Vec<(u64, u64)> = seen.iter().map(|s| (s.index, s.value.value())).collect();
        prop_assert_eq!(post.counts, naive_posterior(q, t, nonzero, &pairs));
    }

    #[test]
    fn coalitions_are_monotone(seed in 0u64..64, mask in 0u8..8, extra in 0usize..3) {
        let mut sc = scenario("pat_xor");
        sc.seed = seed;
        let (ex, m) = run(&sc);
        let relays = ["n1", "n2", "n3"];
        let small: Vec<&str> = relays.iter().enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0).map(|(_, r)| *r).collect();
        let mut big = small.clone();
        if !big.contains(&relays[extra]) {
            big.push(relays[extra]);
        }
        let a = verdict(&ex, &m, &small);
        let b = verdict(&ex, &m, &big);
        prop_assert!(a.level <= b.level);
        prop_assert!(a.determined_bits <= b.determined_bits);
        prop_assert!(a.posterior_entropy_bits >= b.posterior_entropy_bits);
    }

    #[test]
    fn linear_and_enumeration_agree(seed in 0u64..200, proto in 0usize..4) {
        let name = ["fat_chain", "pat_xor", "decentralized", "centralized"][proto];
        let mut sc = scenario(name);
        sc.seed = seed;
        sc.secret_bits = if name == "pat_xor" { 4 } else { 6 };
        let (ex, m) = run(&sc);
        for n in ex.net.topology().nodes().to_vec() {
            let c = Coalition::new(&ex.net, [n.clone()]).unwrap();
            let lin = classify_with(&ex.net, &m, &c, Engine::Linear).unwrap();
            let en = classify_with(&ex.net, &m, &c, Engine::Enumeration).unwrap();
            prop_assert_eq!(lin.level, en.level, "{}", n);
            prop_assert_eq!(lin.determined_bits, en.determined_bits);
            prop_assert!((lin.posterior_entropy_bits - en.posterior_entropy_bits).abs() < 1e-9);
        }
    }
}
