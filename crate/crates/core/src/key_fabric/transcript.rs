use serde::{Deserialize, Serialize};

use super::topology::NodeId;
use crate::symbolic::Tracked;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    HeldKey,
    Received,
    Sent,
    Computed,
    /// Copy of a message on a tapped channel.
    Overheard,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub seq: u64,
    pub role: Role,
    pub label: String,
    pub value: Tracked,
    /// Wire sequence number for sent, received and overheard entries.
    pub message: Option<u64>,
}

/// Append-only record of everything a node held, computed, or saw.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub owner: NodeId,
    entries: Vec<Entry>,
}

impl Transcript {
    pub fn new(owner: NodeId) -> Self {
        Transcript {
            owner,
            entries: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, entry: Entry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// One classical message as it appeared on the wire.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub seq: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub channel: String,
    pub label: String,
    pub payload: Tracked,
    /// Public share index travelling in the clear with threshold shares.
    pub share_index: Option<u64>,
}
