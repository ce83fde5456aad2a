//! Node-disjoint path search by unit-capacity max-flow with node splitting.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::key_fabric::{ChannelKind, NodeId, Topology};

/// Which edges a path may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Carrier {
    /// Quantum links only; every hop has a key pool.
    Quantum,
    /// Quantum links and declared classical channels.
    Any,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<Vec<NodeId>>,
    pub disjoint: bool,
}

impl PathSet {
    /// Wraps explicit routes, checking that consecutive nodes are quantum
    /// neighbours and computing whether routes share interior nodes.
    pub fn from_routes(topology: &Topology, routes: Vec<Vec<NodeId>>) -> Result<Self, ProtocolError> {
        for r in &routes {
            if r.len() < 2 {
                return Err(ProtocolError::PathTooShort);
            }
            for w in r.windows(2) {
                topology.link_between(&w[0], &w[1])?;
            }
        }
        let disjoint = interiors_disjoint(&routes);
        Ok(PathSet {
            paths: routes,
            disjoint,
        })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Interior nodes of path `i`.
    pub fn relays(&self, i: usize) -> &[NodeId] {
        let p = &self.paths[i];
        &p[1..p.len() - 1]
    }
}

fn interiors_disjoint(routes: &[Vec<NodeId>]) -> bool {
    let mut seen = BTreeSet::new();
    for r in routes {
        for n in &r[1..r.len() - 1] {
            if !seen.insert(n) {
                return false;
            }
        }
    }
    true
}

struct Arc {
    to: usize,
    cap: i32,
    flow: i32,
    original: bool,
}

struct FlowGraph {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        FlowGraph {
            arcs: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i32) {
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap, flow: 0, original: true });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc { to: from, cap: 0, flow: 0, original: false });
    }

    fn residual(&self, a: usize) -> i32 {
        self.arcs[a].cap - self.arcs[a].flow
    }

    /// One BFS augmentation; adjacency order fixes tie-breaking.
    fn augment(&mut self, s: usize, t: usize) -> bool {
        let mut parent = vec![usize::MAX; self.adj.len()];
        let mut visited = vec![false; self.adj.len()];
        visited[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let v = self.arcs[a].to;
                if !visited[v] && self.residual(a) > 0 {
                    visited[v] = true;
                    parent[v] = a;
                    queue.push_back(v);
                }
            }
        }
        if !visited[t] {
            return false;
        }
        let mut v = t;
        while v != s {
            let a = parent[v];
            self.arcs[a].flow += 1;
            self.arcs[a ^ 1].flow -= 1;
            v = self.arcs[a ^ 1].to;
        }
        true
    }
}

/// Finds `k` interior-node-disjoint paths from `alice` to `bob`. Neighbours
/// are explored in lexicographic order and the result is sorted.
pub fn find_disjoint_paths(
    topology: &Topology,
    alice: &NodeId,
    bob: &NodeId,
    k: usize,
    carrier: Carrier,
) -> Result<PathSet, ProtocolError> {
    topology.require(alice)?;
    topology.require(bob)?;
    if k == 0 {
        return Err(ProtocolError::NotEnoughPaths { wanted: 0, found: 0 });
    }
    let mut names: Vec<NodeId> = topology.nodes().to_vec();
    names.sort();
    let idx = |n: &NodeId| names.binary_search(n).expect("known node");
    let (s, t) = (idx(alice), idx(bob));

    let mut edges: Vec<(usize, usize)> = topology
        .links()
        .iter()
        .map(|l| (idx(&l.a), idx(&l.b)))
        .collect();
    if carrier == Carrier::Any {
        edges.extend(
            topology
                .channels()
                .iter()
                .filter(|c| c.kind == ChannelKind::Declared)
                .map(|c| (idx(&c.a), idx(&c.b))),
        );
    }
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
    for &(a, b) in &edges {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }

    // node v splits into in = 2v and out = 2v + 1
    let big = k as i32;
    let mut g = FlowGraph::new(names.len() * 2);
    for (v, list) in nbrs.iter_mut().enumerate() {
        let cap = if v == s || v == t { big } else { 1 };
        g.add(2 * v, 2 * v + 1, cap);
        list.sort();
        list.dedup();
        for &w in list.iter() {
            g.add(2 * v + 1, 2 * w, 1);
        }
    }
    let (src, sink) = (2 * s + 1, 2 * t);
    let mut found = 0;
    while found < k && g.augment(src, sink) {
        found += 1;
    }
    if found < k {
        return Err(ProtocolError::NotEnoughPaths { wanted: k, found });
    }

    let mut paths = Vec::new();
    for _ in 0..k {
        let mut path = vec![s];
        let mut u = src;
        while u != sink {
            let a = *g.adj[u]
                .iter()
                .find(|&&a| g.arcs[a].original && g.arcs[a].flow > 0)
                .expect("flow is conserved");
            g.arcs[a].flow -= 1;
            let v = g.arcs[a].to;
            path.push(v / 2);
            if v == sink {
                break;
            }
            let split = *g.adj[v]
                .iter()
                .find(|&&a| g.arcs[a].original && g.arcs[a].to == v + 1)
                .expect("split arc");
            g.arcs[split].flow -= 1;
            u = v + 1;
        }
        paths.push(path.into_iter().map(|i| names[i].clone()).collect::<Vec<_>>());
    }
    paths.sort();
    Ok(PathSet {
        disjoint: interiors_disjoint(&paths),
        paths,
    })
}
