//! Key-management protocols for QKD networks and a mechanical analysis of
//! what each honest-but-curious node learns from running them.
//!
//! The crate covers four relay constructions: hop-by-hop trusted forwarding,
//! multipath forwarding of threshold or XOR shares, a decentralized
//! dual-path exchange, and a centralized mask-combining key manager. Every
//! run records per-node transcripts whose values carry their GF(2)
//! derivation, and [`trust_analyzer`] classifies each node (or coalition) as
//! full, partial, or no access.

pub mod centralized_kms;
pub mod decentralized_kms;
pub mod key_fabric;
pub mod protocols;
pub mod rng;
pub mod secret_sharing;
pub mod sim_harness;
pub mod symbolic;
pub mod trust_analyzer;

pub use key_fabric::{build_topology, Network, NodeId, NodeKind, Topology, TopologySpec};
pub use rng::DetRng;
pub use secret_sharing::{BitString, FieldElement, Modulus, ShamirParams};
pub use sim_harness::{emit_report, parse_scenario, run_scenario, RunReport, Scenario};
pub use trust_analyzer::{classify_coalition, classify_node, TrustLevel, TrustVerdict};
