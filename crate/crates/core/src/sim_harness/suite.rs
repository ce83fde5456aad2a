//! Built-in scenarios and the invariant suite run by `qkdn check`.

use super::{emit_report, parse_scenario, run_scenario, Format, Protocol, RunReport};
use crate::trust_analyzer::TrustLevel;

const FAT_CHAIN: &str = "\
[topology]
nodes = alice:end_host, n1:relay, n2:relay, bob:end_host
qlinks = alice-n1, n1-n2, n2-bob
[scenario]
protocol = fat_chain
secret_bits = 16
coalitions = n1; n1,n2
";

const PAT_XOR: &str = "\
[topology]
nodes = alice:end_host, n1:relay, n2:relay, n3:relay, bob:end_host
qlinks = alice-n1, n1-bob, alice-n2, n2-bob, alice-n3, n3-bob
[scenario]
protocol = pat_xor
secret_bits = 8
k = 3
coalitions = n1,n2; n1,n2,n3
";

const PAT_SHAMIR: &str = "\
[topology]
nodes = alice:end_host, n1:relay, n2:relay, n3:relay, bob:end_host
qlinks = alice-n1, n1-bob, alice-n2, n2-bob, alice-n3, n3-bob
[scenario]
protocol = pat_shamir
secret_bits = 8
q = 7
t = 2
k = 3
coalitions = n1,n2
";

const DECENTRALIZED: &str = "\
[topology]
nodes = alice:end_host, n1:relay, n2:relay, bob:end_host, sat:satellite
qlinks = alice-n1, n1-n2, n2-bob
cchannels = alice-sat:secure, sat-bob:secure
[scenario]
protocol = decentralized
secret_bits = 16
coalitions = n1,sat
";

const CENTRALIZED: &str = "\
[topology]
nodes = alice:end_host, n1:relay, n2:relay, n3:relay, bob:end_host, kms:central_kms
qlinks = alice-n1, n1-n2, n2-n3, n3-bob
cchannels = alice-kms:secure, n1-kms:secure, n2-kms:secure, n3-kms:secure, kms-bob:secure
[scenario]
protocol = centralized
secret_bits = 16
coalitions = n1,n2,n3; kms
";

/// One scenario per protocol, named by protocol.
pub fn builtin_scenarios() -> Vec<(&'static str, &'static str)> {
    vec![
        ("fat_chain", FAT_CHAIN),
        ("pat_xor", PAT_XOR),
        ("pat_shamir", PAT_SHAMIR),
        ("decentralized", DECENTRALIZED),
        ("centralized", CENTRALIZED),
    ]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn relay_level(p: Protocol) -> TrustLevel {
    match p {
        Protocol::FatChain => TrustLevel::Fat,
        Protocol::Centralized => TrustLevel::Nat,
        _ => TrustLevel::Pat,
    }
}

fn inspect(r: &RunReport, failures: &mut Vec<String>) {
    let seed = r.scenario.seed;
    if !(r.delivered && r.key_match) {
        failures.push(format!("seed {seed}: keys disagree"));
    }
    for (name, ok) in &r.checks {
        if !ok {
            failures.push(format!("seed {seed}: {name} failed"));
        }
    }
    if !r.unanalyzed.is_empty() {
        failures.push(format!("seed {seed}: unanalysed nodes {:?}", r.unanalyzed));
    }
    let want = relay_level(r.scenario.protocol);
    for (node, v) in &r.verdicts {
        if *node == r.scenario.alice || *node == r.scenario.bob {
            if v.level != TrustLevel::Fat {
                failures.push(format!("seed {seed}: end host {node} is {}", v.level));
            }
        } else if v.level != want {
            failures.push(format!("seed {seed}: {node} is {}, expected {want}", v.level));
        }
    }
}

/// Runs every built-in scenario over `runs` seeds and checks agreement,
/// the per-run checks, the relay verdicts and report determinism.
pub fn invariant_suite(runs: u64) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for (name, text) in builtin_scenarios() {
        let base = match parse_scenario(text) {
            Ok(s) => s,
            Err(e) => {
                out.push(CheckOutcome {
                    name: name.to_string(),
                    passed: false,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let mut failures = Vec::new();
        for seed in 0..runs {
            let mut sc = base.clone();
            sc.seed = seed;
            match run_scenario(&sc) {
                Ok(r) => inspect(&r, &mut failures),
                Err(e) => failures.push(format!("seed {seed}: {e}")),
            }
        }
        let twice: Vec<Option<String>> = (0..2)
            .map(|_| run_scenario(&base).ok().map(|r| emit_report(&r, Format::Json)))
            .collect();
        if twice[0].is_none() || twice[0] != twice[1] {
            failures.push("reports differ between identical runs".into());
        }
        out.push(CheckOutcome {
            name: name.to_string(),
            passed: failures.is_empty(),
            detail: if failures.is_empty() {
                format!("{runs} seeds")
            } else {
                failures.truncate(5);
                failures.join("; ")
            },
        });
    }
    out
}
