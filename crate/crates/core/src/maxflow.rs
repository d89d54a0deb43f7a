//! Maximum flow / minimum s-t cut.
//!
//! The solver grows two search trees (rooted at the source and at the sink)
//! over the residual graph, augments along the path found where they touch,
//! and re-attaches orphaned subtrees instead of restarting the search. This
//! suits the shallow, highly regular column graphs built from ray fans.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Capacity {
    Finite(f64),
    Infinite,
}

impl Capacity {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Capacity::Infinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub cap: Capacity,
}

impl Arc {
    pub fn finite(from: usize, to: usize, cap: f64) -> Self {
        Arc { from, to, cap: Capacity::Finite(cap) }
    }

    pub fn infinite(from: usize, to: usize) -> Self {
        Arc { from, to, cap: Capacity::Infinite }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    pub node_count: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(node_count: usize, source: usize, sink: usize, arcs: Vec<Arc>) -> Result<Self> {
        let net = FlowNetwork { node_count, source, sink, arcs };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.source >= self.node_count || self.sink >= self.node_count {
            return Err(Error::InvalidNetwork("terminal id out of range"));
        }
        if self.source == self.sink {
            return Err(Error::InvalidNetwork("source equals sink"));
        }
        for a in &self.arcs {
            if a.from >= self.node_count || a.to >= self.node_count {
                return Err(Error::InvalidNetwork("arc endpoint out of range"));
            }
            if a.from == a.to {
                return Err(Error::InvalidNetwork("self-loop"));
            }
            if let Capacity::Finite(c) = a.cap {
                if !(c >= 0.0) || !c.is_finite() {
                    return Err(Error::InvalidNetwork("capacity must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }

    /// Stand-in value for infinite arcs: one more than all finite capacity
    /// combined, so no finite cut can reach it.
    pub fn infinity_sentinel(&self) -> f64 {
        self.finite_total() + 1.0
    }

    pub fn finite_total(&self) -> f64 {
        self.arcs
            .iter()
            .map(|a| match a.cap {
                Capacity::Finite(c) => c,
                Capacity::Infinite => 0.0,
            })
            .sum()
    }

    /// Capacity of the cut with the given source side; `None` if an infinite arc crosses it.
    pub fn cut_capacity(&self, source_side: &[bool]) -> Option<f64> {
        let mut total = 0.0;
        for a in &self.arcs {
            if source_side[a.from] && !source_side[a.to] {
                match a.cap {
                    Capacity::Finite(c) => total += c,
                    Capacity::Infinite => return None,
                }
            }
        }
        Some(total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    pub max_flow_value: f64,
    /// Membership of every node (terminals included) in the source side.
    pub source_side: Vec<bool>,
}

/// Which minimum cut to report when several exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutSide {
    /// Nodes reachable from the source in the residual graph.
    #[default]
    Minimal,
    /// Every node that cannot reach the sink in the residual graph.
    Maximal,
}

/// Exact maximum flow; the source side is the residual-reachable set.
pub fn max_flow(net: &FlowNetwork) -> Result<CutResult> {
    max_flow_with(net, CutSide::Minimal)
}

pub fn max_flow_with(net: &FlowNetwork, side: CutSide) -> Result<CutResult> {
    net.validate()?;
    let mut solver = Solver::new(net);
    let flow = solver.run();
    if flow >= solver.infinity {
        return Err(Error::InfiniteFlow);
    }
    let source_side = match side {
        CutSide::Minimal => solver.reachable_from_source(),
        CutSide::Maximal => solver.not_reaching_sink(),
    };
    Ok(CutResult { max_flow_value: flow, source_side })
}

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const INF_DIST: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tree {
    Free,
    Source,
    Sink,
}

struct Solver {
    n: usize,
    s: usize,
    t: usize,
    infinity: f64,
    // CSR adjacency over residual edges; edge `e` and `sister[e]` are reverses.
    first: Vec<u32>,
    head: Vec<u32>,
    sister: Vec<u32>,
    rescap: Vec<f64>,
    tree: Vec<Tree>,
    // Edge from the node towards its parent (head == parent), NONE, or TERMINAL.
    parent: Vec<u32>,
    ts: Vec<u64>,
    dist: Vec<u32>,
    active: VecDeque<u32>,
    in_active: Vec<bool>,
    orphans: VecDeque<u32>,
    time: u64,
}

impl Solver {
    fn new(net: &FlowNetwork) -> Self {
        let n = net.node_count;
        let infinity = net.infinity_sentinel();
        let m = net.arcs.len();
        let mut degree = alloc::vec![0u32; n + 1];
        for a in &net.arcs {
            degree[a.from] += 1;
            degree[a.to] += 1;
        }
        let mut first = alloc::vec![0u32; n + 1];
        for v in 0..n {
            first[v + 1] = first[v] + degree[v];
        }
        let mut fill = first.clone();
        let mut head = alloc::vec![0u32; 2 * m];
        let mut sister = alloc::vec![0u32; 2 * m];
        let mut rescap = alloc::vec![0.0f64; 2 * m];
        for a in &net.arcs {
            let cap = match a.cap {
                Capacity::Finite(c) => c,
                Capacity::Infinite => infinity,
            };
            let e = fill[a.from];
            fill[a.from] += 1;
            let r = fill[a.to];
            fill[a.to] += 1;
            head[e as usize] = a.to as u32;
            head[r as usize] = a.from as u32;
            sister[e as usize] = r;
            sister[r as usize] = e;
            rescap[e as usize] = cap;
        }
        Solver {
            n,
            s: net.source,
            t: net.sink,
            infinity,
            first,
            head,
            sister,
            rescap,
            tree: alloc::vec![Tree::Free; n],
            parent: alloc::vec![NONE; n],
            ts: alloc::vec![0; n],
            dist: alloc::vec![0; n],
            active: VecDeque::new(),
            in_active: alloc::vec![false; n],
            orphans: VecDeque::new(),
            time: 0,
        }
    }

    #[inline]
    fn edges(&self, v: usize) -> core::ops::Range<usize> {
        self.first[v] as usize..self.first[v + 1] as usize
    }

    fn activate(&mut self, v: usize) {
        if !self.in_active[v] {
            self.in_active[v] = true;
            self.active.push_back(v as u32);
        }
    }

    fn run(&mut self) -> f64 {
        let (s, t) = (self.s, self.t);
        self.tree[s] = Tree::Source;
        self.tree[t] = Tree::Sink;
        self.parent[s] = TERMINAL;
        self.parent[t] = TERMINAL;
        self.activate(s);
        self.activate(t);
        let mut flow = 0.0;

        while let Some(&front) = self.active.front() {
            let u = front as usize;
            if self.tree[u] == Tree::Free {
                self.active.pop_front();
                self.in_active[u] = false;
                continue;
            }
            match self.grow(u) {
                Some(bridge) => {
                    self.time += 1;
                    flow += self.augment(bridge);
                    if flow >= self.infinity {
                        return flow;
                    }
                    self.adopt();
                    // `u` stays at the front and is scanned again.
                }
                None => {
                    self.active.pop_front();
                    self.in_active[u] = false;
                }
            }
        }
        flow
    }

    // Expands the tree of `u` by one layer of residual edges. Returns the
    // source-tree to sink-tree edge when the trees meet.
    fn grow(&mut self, u: usize) -> Option<usize> {
        let side = self.tree[u];
        for e in self.edges(u) {
            let v = self.head[e] as usize;
            let (residual, into_v_parent) = match side {
                Tree::Source => (self.rescap[e], self.sister[e]),
                _ => (self.rescap[self.sister[e] as usize], self.sister[e]),
            };
            if residual <= 0.0 {
                continue;
            }
            match self.tree[v] {
                Tree::Free => {
                    self.tree[v] = side;
                    // parent edge points from v back to u
                    self.parent[v] = into_v_parent;
                    self.ts[v] = self.ts[u];
                    self.dist[v] = self.dist[u].saturating_add(1);
                    self.activate(v);
                }
                tv if tv != side => {
                    return Some(match side {
                        Tree::Source => e,
                        _ => self.sister[e] as usize,
                    });
                }
                _ => {}
            }
        }
        None
    }

    // `bridge` runs from a source-tree node to a sink-tree node.
    fn augment(&mut self, bridge: usize) -> f64 {
        let mut bottleneck = self.rescap[bridge];
        // source side: walk from the tail of the bridge up to s
        let mut v = self.head[self.sister[bridge] as usize] as usize;
        while self.parent[v] != TERMINAL {
            let e = self.parent[v] as usize; // v -> parent
            bottleneck = bottleneck.min(self.rescap[self.sister[e] as usize]);
            v = self.head[e] as usize;
        }
        let mut v = self.head[bridge] as usize;
        while self.parent[v] != TERMINAL {
            let e = self.parent[v] as usize;
            bottleneck = bottleneck.min(self.rescap[e]);
            v = self.head[e] as usize;
        }

        self.push(bridge, bottleneck);
        let mut v = self.head[self.sister[bridge] as usize] as usize;
        while self.parent[v] != TERMINAL {
            let e = self.parent[v] as usize;
            let fwd = self.sister[e] as usize; // parent -> v
            self.push(fwd, bottleneck);
            let p = self.head[e] as usize;
            if self.rescap[fwd] <= 0.0 {
                self.parent[v] = NONE;
                self.orphans.push_back(v as u32);
            }
            v = p;
        }
        let mut v = self.head[bridge] as usize;
        while self.parent[v] != TERMINAL {
            let e = self.parent[v] as usize; // v -> parent
            self.push(e, bottleneck);
            let p = self.head[e] as usize;
            if self.rescap[e] <= 0.0 {
                self.parent[v] = NONE;
                self.orphans.push_back(v as u32);
            }
            v = p;
        }
        bottleneck
    }

    #[inline]
    fn push(&mut self, e: usize, f: f64) {
        self.rescap[e] -= f;
        let r = self.sister[e] as usize;
        self.rescap[r] += f;
    }

    fn adopt(&mut self) {
        while let Some(x) = self.orphans.pop_front() {
            let x = x as usize;
            if self.tree[x] == Tree::Source {
                self.adopt_source(x);
            } else {
                self.adopt_sink(x);
            }
        }
    }

    // Distance to a terminal root following parent edges, or INF_DIST if the
    // chain ends in an orphan. Marks the visited chain with the current time.
    fn origin_distance(&mut self, start: usize) -> u32 {
        let mut d: u32 = 0;
        let mut j = start;
        loop {
            if self.ts[j] == self.time {
                d = d.saturating_add(self.dist[j]);
                break;
            }
            let a = self.parent[j];
            d = d.saturating_add(1);
            if a == TERMINAL {
                self.ts[j] = self.time;
                self.dist[j] = 1;
                break;
            }
            if a == NONE {
                return INF_DIST;
            }
            j = self.head[a as usize] as usize;
        }
        let mut k = d;
        let mut j = start;
        while self.ts[j] != self.time {
            self.ts[j] = self.time;
            self.dist[j] = k;
            k = k.saturating_sub(1);
            j = self.head[self.parent[j] as usize] as usize;
        }
        d
    }

    fn adopt_source(&mut self, x: usize) {
        let mut best: Option<(u32, u32)> = None;
        for g in self.edges(x) {
            let into_x = self.sister[g] as usize; // y -> x
            let y = self.head[g] as usize;
            if self.tree[y] != Tree::Source || self.rescap[into_x] <= 0.0 || self.parent[y] == NONE {
                continue;
            }
            let d = self.origin_distance(y);
            if d != INF_DIST && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((g as u32, d));
            }
        }
        if let Some((g, d)) = best {
            self.parent[x] = g;
            self.ts[x] = self.time;
            self.dist[x] = d + 1;
            return;
        }
        for g in self.edges(x) {
            let y = self.head[g] as usize;
            if self.tree[y] != Tree::Source {
                continue;
            }
            if self.rescap[self.sister[g] as usize] > 0.0 {
                self.activate(y);
            }
            let p = self.parent[y];
            if p != NONE && p != TERMINAL && self.head[p as usize] as usize == x {
                self.parent[y] = NONE;
                self.orphans.push_back(y as u32);
            }
        }
        self.tree[x] = Tree::Free;
    }

    fn adopt_sink(&mut self, x: usize) {
        let mut best: Option<(u32, u32)> = None;
        for g in self.edges(x) {
            let y = self.head[g] as usize; // x -> y
            if self.tree[y] != Tree::Sink || self.rescap[g] <= 0.0 || self.parent[y] == NONE {
                continue;
            }
            let d = self.origin_distance(y);
            if d != INF_DIST && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((g as u32, d));
            }
        }
        if let Some((g, d)) = best {
            self.parent[x] = g;
            self.ts[x] = self.time;
            self.dist[x] = d + 1;
            return;
        }
        for g in self.edges(x) {
            let y = self.head[g] as usize;
            if self.tree[y] != Tree::Sink {
                continue;
            }
            if self.rescap[g] > 0.0 {
                self.activate(y);
            }
            let p = self.parent[y];
            if p != NONE && p != TERMINAL && self.head[p as usize] as usize == x {
                self.parent[y] = NONE;
                self.orphans.push_back(y as u32);
            }
        }
        self.tree[x] = Tree::Free;
    }

    fn reachable_from_source(&self) -> Vec<bool> {
        let mut seen = alloc::vec![false; self.n];
        let mut queue = VecDeque::new();
        seen[self.s] = true;
        queue.push_back(self.s);
        while let Some(u) = queue.pop_front() {
            for e in self.edges(u) {
                let v = self.head[e] as usize;
                if !seen[v] && self.rescap[e] > 0.0 {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    fn not_reaching_sink(&self) -> Vec<bool> {
        let mut reaches = alloc::vec![false; self.n];
        let mut queue = VecDeque::new();
        reaches[self.t] = true;
        queue.push_back(self.t);
        while let Some(u) = queue.pop_front() {
            for e in self.edges(u) {
                // residual edge v -> u is the sister of u -> v
                let v = self.head[e] as usize;
                if !reaches[v] && self.rescap[self.sister[e] as usize] > 0.0 {
                    reaches[v] = true;
                    queue.push_back(v);
                }
            }
        }
        reaches.iter().map(|&r| !r).collect()
    }
}

/// Largest inner-node count accepted by [`brute_force_min_cut`].
pub const BRUTE_FORCE_MAX_NODES: usize = 20;

/// Exhaustive minimum cut over every source-side assignment of the inner
/// nodes. Ties resolve to the lexicographically smallest membership vector
/// (inner nodes in id order, outside before inside).
pub fn brute_force_min_cut(net: &FlowNetwork) -> Result<CutResult> {
    net.validate()?;
    let inner: Vec<usize> = (0..net.node_count).filter(|&v| v != net.source && v != net.sink).collect();
    let k = inner.len();
    if k > BRUTE_FORCE_MAX_NODES {
        return Err(Error::TooLarge { max: BRUTE_FORCE_MAX_NODES, got: k });
    }
    let infinity = net.infinity_sentinel();
    let mut side = alloc::vec![false; net.node_count];
    side[net.source] = true;
    let mut best: Option<(f64, Vec<bool>)> = None;
    for code in 0u64..(1u64 << k) {
        // inner[0] is the most significant bit, so counting order is lexicographic
        for (i, &v) in inner.iter().enumerate() {
            side[v] = (code >> (k - 1 - i)) & 1 == 1;
        }
        let mut total = 0.0;
        for a in &net.arcs {
            if side[a.from] && !side[a.to] {
                total += match a.cap {
                    Capacity::Finite(c) => c,
                    Capacity::Infinite => infinity,
                };
            }
        }
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, side.clone()));
        }
    }
    let (value, source_side) = best.expect("at least one assignment");
    if value >= infinity {
        return Err(Error::InfiniteFlow);
    }
    Ok(CutResult { max_flow_value: value, source_side })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn diamond() -> FlowNetwork {
        // s=0, a=1, b=2, t=3
        FlowNetwork::new(
            4,
            0,
            3,
            vec![
                Arc::finite(0, 1, 3.0),
                Arc::finite(0, 2, 2.0),
                Arc::finite(1, 3, 2.0),
                Arc::finite(2, 3, 3.0),
                Arc::finite(1, 2, 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_arc() {
        let net = FlowNetwork::new(2, 0, 1, vec![Arc::finite(0, 1, 5.0)]).unwrap();
        let cut = max_flow(&net).unwrap();
        assert_eq!(cut.max_flow_value, 5.0);
        assert_eq!(cut.source_side, vec![true, false]);
    }

    #[test]
    fn diamond_flow_is_five() {
        let net = diamond();
        let cut = max_flow(&net).unwrap();
        assert_eq!(cut.max_flow_value, 5.0);
        assert_eq!(net.cut_capacity(&cut.source_side), Some(5.0));
        let brute = brute_force_min_cut(&net).unwrap();
        assert_eq!(brute.max_flow_value, 5.0);
        // the four cuts are {s}:5, {s,a}:5, {s,b}:6, {s,a,b}:5; lexicographic minimum is {s}
        assert_eq!(brute.source_side, vec![true, false, false, false]);
    }

    #[test]
    fn zero_capacity_sink_cut() {
        let net = FlowNetwork::new(
            4,
            0,
            3,
            vec![Arc::finite(0, 1, 4.0), Arc::infinite(1, 2), Arc::finite(2, 3, 0.0)],
        )
        .unwrap();
        let cut = max_flow(&net).unwrap();
        assert_eq!(cut.max_flow_value, 0.0);
        assert_eq!(cut.source_side, vec![true, true, true, false]);
    }

    #[test]
    fn source_weighted_node_cuts_nothing() {
        // one inner node tied to the source with capacity 3 and nothing else
        let net = FlowNetwork::new(3, 0, 2, vec![Arc::finite(0, 1, 3.0)]).unwrap();
        assert_eq!(brute_force_min_cut(&net).unwrap().max_flow_value, 0.0);
        assert_eq!(max_flow(&net).unwrap().max_flow_value, 0.0);
    }

    #[test]
    fn empty_middle() {
        let net = FlowNetwork::new(2, 0, 1, vec![]).unwrap();
        assert_eq!(brute_force_min_cut(&net).unwrap().max_flow_value, 0.0);
        assert_eq!(max_flow(&net).unwrap().max_flow_value, 0.0);
    }

    #[test]
    fn infinite_path_detected() {
        let net = FlowNetwork::new(3, 0, 2, vec![Arc::infinite(0, 1), Arc::infinite(1, 2), Arc::finite(0, 2, 1.0)])
            .unwrap();
        assert_eq!(max_flow(&net), Err(Error::InfiniteFlow));
        assert_eq!(brute_force_min_cut(&net), Err(Error::InfiniteFlow));
    }

    #[test]
    fn minimal_and_maximal_sides() {
        // s -> a (2), a -> t (2): both {s} and {s,a} are minimum cuts
        let net = FlowNetwork::new(3, 0, 2, vec![Arc::finite(0, 1, 2.0), Arc::finite(1, 2, 2.0)]).unwrap();
        let lo = max_flow_with(&net, CutSide::Minimal).unwrap();
        let hi = max_flow_with(&net, CutSide::Maximal).unwrap();
        assert_eq!(lo.source_side, vec![true, false, false]);
        assert_eq!(hi.source_side, vec![true, true, false]);
        assert_eq!(lo.max_flow_value, hi.max_flow_value);
    }

    #[test]
    fn invalid_networks() {
        assert!(FlowNetwork::new(2, 0, 0, vec![]).is_err());
        assert!(FlowNetwork::new(2, 0, 1, vec![Arc::finite(1, 1, 1.0)]).is_err());
        assert!(FlowNetwork::new(2, 0, 1, vec![Arc::finite(0, 1, -1.0)]).is_err());
        assert!(FlowNetwork::new(2, 0, 5, vec![]).is_err());
    }

    #[test]
    fn brute_force_rejects_large_graphs() {
        let net = FlowNetwork::new(23, 0, 1, vec![]).unwrap();
        assert!(matches!(brute_force_min_cut(&net), Err(Error::TooLarge { got: 21, .. })));
    }
}
