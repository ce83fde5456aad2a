use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{HarnessError, Scenario};
use crate::trust_analyzer::TrustVerdict;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireRecord {
    pub seq: u64,
    pub from: String,
    pub to: String,
    pub channel: String,
    pub label: String,
    /// Lowercase hex, padded to the payload width.
    pub payload: String,
    pub bits: usize,
    pub share_index: Option<u64>,
    /// The payload as an XOR of named primitives, e.g. `K_S ⊕ K_A1`.
    pub formula: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalitionReport {
    pub members: Vec<String>,
    pub verdict: Option<TrustVerdict>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub delivered: bool,
    pub key_match: bool,
    pub error: Option<String>,
    pub alice_key: Option<String>,
    pub bob_key: Option<String>,
    pub keys_consumed: BTreeMap<String, u32>,
    pub verdicts: BTreeMap<String, TrustVerdict>,
    /// Nodes whose view could not be analysed, with the reason.
    pub unanalyzed: BTreeMap<String, String>,
    pub coalitions: Vec<CoalitionReport>,
    /// Nodes other than the end hosts that learn more than the protocol
    /// intends.
    pub escalations: Vec<String>,
    /// Fewest relays that together see enough shares to rebuild the key.
    pub coalition_bound: Option<usize>,
    pub checks: BTreeMap<String, bool>,
    pub variables: BTreeMap<String, String>,
    pub wire: Vec<WireRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            _ => Err(HarnessError::Config(format!("unknown format {s:?}"))),
        }
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn verdict_line(v: &TrustVerdict) -> String {
    let mut s = format!(
        "{}  determined {}/{}  entropy {:.3}",
        v.level, v.determined_bits, v.secret_bits, v.posterior_entropy_bits
    );
    if let Some(w) = &v.correlation_witness {
        let _ = write!(s, "  witness {}#{} {}", w.node, w.seq, w.label);
    }
    s
}

pub fn emit_report(report: &RunReport, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Text => text(report),
    }
}

fn text(r: &RunReport) -> String {
    let mut s = String::new();
    let sc = &r.scenario;
    let _ = writeln!(
        s,
        "protocol {}  secret_bits {}  seed {}",
        sc.protocol.as_str(),
        sc.secret_bits,
        sc.seed
    );
    let _ = writeln!(s, "delivered {}  key_match {}", yes(r.delivered), yes(r.key_match));
    if let Some(e) = &r.error {
        let _ = writeln!(s, "error: {e}");
    }
    let _ = writeln!(s, "keys consumed:");
    for (link, n) in &r.keys_consumed {
        let _ = writeln!(s, "  {link:<12} {n}");
    }
    let _ = writeln!(s, "verdicts:");
    for (node, v) in &r.verdicts {
        let _ = writeln!(s, "  {node:<8} {}", verdict_line(v));
    }
    for (node, e) in &r.unanalyzed {
        let _ = writeln!(s, "  {node:<8} not analysed: {e}");
    }
    if !r.coalitions.is_empty() {
        let _ = writeln!(s, "coalitions:");
        for c in &r.coalitions {
            let who = c.members.join(",");
            match (&c.verdict, &c.error) {
                (Some(v), _) => {
                    let _ = writeln!(s, "  {who:<12} {}", verdict_line(v));
                }
                (None, Some(e)) => {
                    let _ = writeln!(s, "  {who:<12} not analysed: {e}");
                }
                (None, None) => {}
            }
        }
    }
    if let Some(b) = r.coalition_bound {
        let _ = writeln!(s, "coalition bound: {b} relays");
    }
    let esc = if r.escalations.is_empty() {
        "none".to_string()
    } else {
        r.escalations.join(", ")
    };
    let _ = writeln!(s, "escalations: {esc}");
    let checks: Vec<String> = r
        .checks
        .iter()
        .map(|(k, v)| format!("{k} {}", if *v { "ok" } else { "FAILED" }))
        .collect();
    let _ = writeln!(s, "checks: {}", checks.join(", "));
    let _ = writeln!(s, "wire:");
    for m in &r.wire {
        let _ = writeln!(
            s,
            "  #{:<3} {} -> {} [{}] {} = {}  ({})",
            m.seq, m.from, m.to, m.channel, m.label, m.payload, m.formula
        );
    }
    s
}
