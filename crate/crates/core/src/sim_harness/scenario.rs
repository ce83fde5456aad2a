//! Scenario files.
//!
//! ```text
//! [topology]
//! nodes = alice:end_host, n1:relay, n2:relay, bob:end_host
//! qlinks = alice-n1, n1-n2, n2-bob
//! [scenario]
//! protocol = fat_chain
//! secret_bits = 16
//! seed = 42
//! coalitions = n1; n1,n2
//! ```

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::decentralized_kms::{DirectionOrder, Routing};
use crate::key_fabric::{build_topology, ChannelSpec, NodeId, NodeKind, TopologySpec};
use crate::secret_sharing::{LeadingCoefficient, ShamirParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    FatChain,
    PatXor,
    PatShamir,
    Decentralized,
    Centralized,
}

impl Protocol {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fat_chain" => Protocol::FatChain,
            "pat_xor" => Protocol::PatXor,
            "pat_shamir" => Protocol::PatShamir,
            "decentralized" => Protocol::Decentralized,
            "centralized" => Protocol::Centralized,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::FatChain => "fat_chain",
            Protocol::PatXor => "pat_xor",
            Protocol::PatShamir => "pat_shamir",
            Protocol::Decentralized => "decentralized",
            Protocol::Centralized => "centralized",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tap {
    pub channel: String,
    pub nodes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub topology: TopologySpec,
    pub protocol: Protocol,
    pub secret_bits: usize,
    pub seed: u64,
    pub alice: String,
    pub bob: String,
    /// Number of shares (and paths) for the multipath protocols.
    pub shares: Option<usize>,
    pub shamir: Option<ShamirParams>,
    /// Explicit multipath routes; found by max-flow when empty.
    pub routes: Vec<Vec<String>>,
    pub allow_overlap: bool,
    /// Paths (numbered from 1) that deliver nothing.
    pub drop_paths: Vec<usize>,
    pub satellite: Option<String>,
    pub central: Option<String>,
    pub order: DirectionOrder,
    pub routing: Routing,
    /// Keys provisioned on every link before the run.
    pub pool_keys: usize,
    pub link_key_bits: Option<usize>,
    pub taps: Vec<Tap>,
    pub coalitions: Vec<Vec<String>>,
}

impl Scenario {
    pub fn new(topology: TopologySpec, protocol: Protocol, secret_bits: usize, seed: u64) -> Self {
        Scenario {
            topology,
            protocol,
            secret_bits,
            seed,
            alice: "alice".into(),
            bob: "bob".into(),
            shares: None,
            shamir: None,
            routes: Vec::new(),
            allow_overlap: false,
            drop_paths: Vec::new(),
            satellite: None,
            central: None,
            order: DirectionOrder::default(),
            routing: Routing::default(),
            pool_keys: 2,
            link_key_bits: None,
            taps: Vec::new(),
            coalitions: Vec::new(),
        }
    }

    /// Share count for multipath protocols.
    pub fn share_count(&self) -> usize {
        match (&self.shamir, self.shares) {
            (Some(p), _) => p.share_count,
            (None, Some(k)) => k,
            (None, None) if !self.routes.is_empty() => self.routes.len(),
            (None, None) => 2,
        }
    }

    /// Checks the parameters against each other and against the topology.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg = |m: String| Err(HarnessError::Config(m));
        if self.secret_bits == 0 {
            return cfg("secret_bits must be positive".into());
        }
        let topo = build_topology(&self.topology)?;
        for n in [&self.alice, &self.bob] {
            topo.require(&NodeId::new(n.as_str()))?;
        }
        if self.alice == self.bob {
            return cfg("alice and bob must differ".into());
        }
        let (alice, bob) = (NodeId::new(self.alice.as_str()), NodeId::new(self.bob.as_str()));
        match self.protocol {
            Protocol::FatChain | Protocol::Centralized => {
                topo.chain(&alice, &bob)?;
            }
            Protocol::PatXor => {
                if self.share_count() < 2 {
                    return cfg("pat_xor needs at least two shares".into());
                }
            }
            Protocol::PatShamir => {
                let p = self
                    .shamir
                    .ok_or_else(|| HarnessError::Config("pat_shamir needs q, t and k".into()))?;
                p.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            }
            Protocol::Decentralized => {
                if !self.secret_bits.is_multiple_of(2) {
                    return cfg(format!("decentralized needs an even secret_bits, got {}", self.secret_bits));
                }
                topo.chain(&alice, &bob)?;
                let sat = self.satellite_name(&topo_nodes(&self.topology, NodeKind::Satellite))?;
                topo.require(&NodeId::new(sat.as_str()))?;
            }
        }
        if !self.routes.is_empty() && self.routes.len() != self.share_count() {
            return cfg(format!(
                "{} routes for {} shares",
                self.routes.len(),
                self.share_count()
            ));
        }
        for r in &self.routes {
            for n in r {
                topo.require(&NodeId::new(n.as_str()))?;
            }
        }
        for &d in &self.drop_paths {
            if d == 0 || d > self.share_count() {
                return cfg(format!("drop_paths entry {d} is not a path number"));
            }
        }
        for c in &self.coalitions {
            for n in c {
                topo.require(&NodeId::new(n.as_str()))?;
            }
        }
        for t in &self.taps {
            topo.channel_index(&t.channel)?;
            for n in &t.nodes {
                topo.require(&NodeId::new(n.as_str()))?;
            }
        }
        Ok(())
    }

    /// The declared satellite, or the only satellite node.
    pub(crate) fn satellite_name(&self, satellites: &[String]) -> Result<String, HarnessError> {
        match (&self.satellite, satellites) {
            (Some(s), _) => Ok(s.clone()),
            (None, [only]) => Ok(only.clone()),
            (None, []) => Err(HarnessError::Config("no satellite node".into())),
            (None, _) => Err(HarnessError::Config("several satellites; name one with `satellite`".into())),
        }
    }

    /// The declared central manager, or the only one; `None` when the
    /// topology has none (the run then aborts).
    pub(crate) fn central_name(&self) -> Option<String> {
        self.central.clone().or_else(|| {
            let c = topo_nodes(&self.topology, NodeKind::CentralKms);
            (c.len() == 1).then(|| c[0].clone())
        })
    }
}

pub(crate) fn topo_nodes(spec: &TopologySpec, kind: NodeKind) -> Vec<String> {
    spec.nodes
        .iter()
        .filter(|(_, k)| *k == kind)
        .map(|(n, _)| n.clone())
        .collect()
}

fn split_list(v: &str, sep: char) -> Vec<String> {
    v.split(sep)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn pair(item: &str, line: usize) -> Result<(String, String), HarnessError> {
    let (a, b) = item.split_once('-').ok_or_else(|| HarnessError::Parse {
        line,
        msg: format!("expected a-b, got {item:?}"),
    })?;
    Ok((a.trim().to_string(), b.trim().to_string()))
}

fn number<T: std::str::FromStr>(v: &str, key: &str, line: usize) -> Result<T, HarnessError> {
    v.parse().map_err(|_| HarnessError::Parse {
        line,
        msg: format!("{key} expects a number, got {v:?}"),
    })
}

fn boolean(v: &str, key: &str, line: usize) -> Result<bool, HarnessError> {
    match v {
        "true" | "yes" => Ok(true),
        "false" | "no" => Ok(false),
        _ => Err(HarnessError::Parse {
            line,
            msg: format!("{key} expects true or false, got {v:?}"),
        }),
    }
}

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, HarnessError> {
    let mut topology = TopologySpec::default();
    let mut protocol = None;
    let mut secret_bits = None;
    let mut seed = 0u64;
    let mut sc = Scenario::new(TopologySpec::default(), Protocol::FatChain, 0, 0);
    let (mut q, mut t, mut k) = (None, None, None);
    let mut leading = LeadingCoefficient::default();
    let mut section = String::new();
    let mut seen = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            if section != "topology" && section != "scenario" {
                return Err(HarnessError::Parse {
                    line,
                    msg: format!("unknown section [{section}]"),
                });
            }
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| HarnessError::Parse {
            line,
            msg: format!("expected key = value, got {content:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if section.is_empty() {
            return Err(HarnessError::Parse {
                line,
                msg: "key outside a section".into(),
            });
        }
        if !seen.insert(format!("{section}.{key}")) {
            return Err(HarnessError::Parse {
                line,
                msg: format!("duplicate key {key}"),
            });
        }
        let unknown = || HarnessError::Parse {
            line,
            msg: format!("unknown key {key:?} in [{section}]"),
        };
        match (section.as_str(), key) {
            ("topology", "nodes") => {
                for item in split_list(value, ',') {
                    let (name, kind) = item.split_once(':').ok_or_else(|| HarnessError::Parse {
                        line,
                        msg: format!("expected name:kind, got {item:?}"),
                    })?;
                    let kind = NodeKind::parse(kind.trim()).ok_or_else(|| HarnessError::Parse {
                        line,
                        msg: format!("unknown node kind {kind:?}"),
                    })?;
                    topology.nodes.push((name.trim().to_string(), kind));
                }
            }
            ("topology", "qlinks") => {
                for item in split_list(value, ',') {
                    topology.qlinks.push(pair(&item, line)?);
                }
            }
            ("topology", "cchannels") => {
                for item in split_list(value, ',') {
                    let (ends, attr) = item.split_once(':').unwrap_or((item.as_str(), "secure"));
                    let secure = match attr.trim() {
                        "secure" => true,
                        "insecure" => false,
                        other => {
                            return Err(HarnessError::Parse {
                                line,
                                msg: format!("channel attribute must be secure or insecure, got {other:?}"),
                            })
                        }
                    };
                    let (a, b) = pair(ends, line)?;
                    topology.cchannels.push(ChannelSpec { a, b, secure });
                }
            }
            ("scenario", "protocol") => {
                protocol = Some(Protocol::parse(value).ok_or_else(|| HarnessError::Parse {
                    line,
                    msg: format!("unknown protocol {value:?}"),
                })?);
            }
            ("scenario", "secret_bits") => secret_bits = Some(number(value, key, line)?),
            ("scenario", "seed") => seed = number(value, key, line)?,
            ("scenario", "alice") => sc.alice = value.to_string(),
            ("scenario", "bob") => sc.bob = value.to_string(),
            ("scenario", "q") => q = Some(number::<u64>(value, key, line)?),
            ("scenario", "t") => t = Some(number::<usize>(value, key, line)?),
            ("scenario", "k") | ("scenario", "paths") => {
                if k.is_some() {
                    return Err(HarnessError::Parse {
                        line,
                        msg: "give the share count once, as k or paths".into(),
                    });
                }
                k = Some(number::<usize>(value, key, line)?);
            }
            ("scenario", "leading_coefficient") => {
                leading = match value {
                    "uniform" => LeadingCoefficient::Uniform,
                    "nonzero" | "non_zero" => LeadingCoefficient::NonZero,
                    _ => {
                        return Err(HarnessError::Parse {
                            line,
                            msg: format!("leading_coefficient must be uniform or nonzero, got {value:?}"),
                        })
                    }
                }
            }
            ("scenario", "routes") => {
                sc.routes = split_list(value, ';')
                    .iter()
                    .map(|r| split_list(r, '-'))
                    .collect();
            }
            ("scenario", "allow_overlap") => sc.allow_overlap = boolean(value, key, line)?,
            ("scenario", "drop_paths") => {
                sc.drop_paths = split_list(value, ',')
                    .iter()
                    .map(|v| number(v, key, line))
                    .collect::<Result<_, _>>()?;
            }
            ("scenario", "satellite") => sc.satellite = Some(value.to_string()),
            ("scenario", "central") => sc.central = Some(value.to_string()),
            ("scenario", "order") => {
                sc.order = match value {
                    "east_first" => DirectionOrder::EastFirst,
                    "west_first" => DirectionOrder::WestFirst,
                    _ => {
                        return Err(HarnessError::Parse {
                            line,
                            msg: format!("order must be east_first or west_first, got {value:?}"),
                        })
                    }
                }
            }
            ("scenario", "routing") => {
                sc.routing = match value {
                    "masks_terrestrial" => Routing::MasksTerrestrial,
                    "masks_satellite" => Routing::MasksSatellite,
                    _ => {
                        return Err(HarnessError::Parse {
                            line,
                            msg: format!("routing must be masks_terrestrial or masks_satellite, got {value:?}"),
                        })
                    }
                }
            }
            ("scenario", "pool_keys") => sc.pool_keys = number(value, key, line)?,
            ("scenario", "link_key_bits") => sc.link_key_bits = Some(number(value, key, line)?),
            ("scenario", "taps") => {
                for item in split_list(value, ';') {
                    let (channel, nodes) = item.split_once(':').ok_or_else(|| HarnessError::Parse {
                        line,
                        msg: format!("expected channel:node,node, got {item:?}"),
                    })?;
                    sc.taps.push(Tap {
                        channel: channel.trim().to_string(),
                        nodes: split_list(nodes, ','),
                    });
                }
            }
            ("scenario", "coalitions") => {
                sc.coalitions = split_list(value, ';')
                    .iter()
                    .map(|c| split_list(c, ','))
                    .collect();
            }
            _ => return Err(unknown()),
        }
    }

    sc.topology = topology;
    sc.protocol = protocol.ok_or_else(|| HarnessError::Config("missing protocol".into()))?;
    sc.secret_bits = secret_bits.ok_or_else(|| HarnessError::Config("missing secret_bits".into()))?;
    sc.seed = seed;
    sc.shares = k;
    match (sc.protocol, q, t) {
        (Protocol::PatShamir, Some(q), Some(t)) => {
            let k = k.ok_or_else(|| HarnessError::Config("pat_shamir needs k".into()))?;
            sc.shamir = Some(
                ShamirParams::new(q, t, k)
                    .map_err(|e| HarnessError::Config(e.to_string()))?
                    .with_leading(leading),
            );
        }
        (Protocol::PatShamir, _, _) => return Err(HarnessError::Config("pat_shamir needs q, t and k".into())),
        (_, None, None) => {}
        _ => {
            return Err(HarnessError::Config(format!(
                "q and t only apply to pat_shamir, not {}",
                sc.protocol.as_str()
            )))
        }
    }
    sc.validate()?;
    Ok(sc)
}
