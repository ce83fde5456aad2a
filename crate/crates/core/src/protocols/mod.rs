//! Relay protocols: hop-by-hop forwarding through trusted relays and
//! multipath forwarding of shares over disjoint paths.

mod fat;
mod multipath;
mod paths;

use thiserror::Error;

use crate::key_fabric::FabricError;
use crate::secret_sharing::SharingError;

pub(crate) use fat::draw as draw_hop_key;
pub use fat::{fat_forward, fat_relay_hop, fat_send, ForwardOutcome, HopKey};
pub use multipath::{chunk_layout, pat_multipath_send, share_payload_bits, MultipathOutcome, Scheme};
pub use paths::{find_disjoint_paths, Carrier, PathSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Fabric(#[from] FabricError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error("key {key} has {key_bits} bits but the payload has {payload_bits}")]
    KeyLength {
        key: String,
        key_bits: usize,
        payload_bits: usize,
    },
    #[error("a path needs at least two nodes")]
    PathTooShort,
    #[error("wanted {wanted} disjoint paths, found {found}")]
    NotEnoughPaths { wanted: usize, found: usize },
    #[error("{paths} paths for {shares} shares")]
    PathCountMismatch { paths: usize, shares: usize },
    #[error("every path must run from the sender to the receiver")]
    PathEndpoints,
    #[error("secret is empty")]
    EmptySecret,
    #[error("chunk {chunk} reconstructed to {value}, outside the chunk range")]
    ChunkOverflow { chunk: usize, value: u64 },
    #[error("no satellite node {0:?}")]
    MissingSatellite(String),
    #[error("no central key manager {0:?}")]
    MissingCentralManager(String),
    #[error("no mask from {0}")]
    MissingMask(String),
    #[error("unexpected mask from {0}")]
    UnexpectedMask(String),
}
