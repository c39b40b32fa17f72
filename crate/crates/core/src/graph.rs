//! Graph instances, edge belief states and certificate searches.
//!
//! Every other module consumes the three searches defined here:
//! [`certificate_status`], [`min_hidden_path`] and [`min_hidden_cut`].
//! Edge ids are dense indices ordered by the natural order of their labels,
//! so "smallest edge id" tie-breaks are reproducible from the input labels.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};
use core::fmt;

use hashbrown::HashMap;

use crate::error::GraphError;
use crate::flow::FlowNetwork;

/// Dense edge index. Order follows the natural order of edge labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense node index, in order of first appearance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub label: String,
    pub tail: NodeId,
    pub head: NodeId,
}

/// Compares labels numerically when both parse as integers, else as strings.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// Immutable graph topology.
#[derive(Clone, Debug)]
pub struct Graph {
    directed: bool,
    node_labels: Vec<String>,
    edges: Vec<Edge>,
    /// Edges leaving each node in the s-to-t traversal direction, sorted by id.
    out_adj: Vec<Vec<(EdgeId, NodeId)>>,
    /// Edges entering each node, sorted by id. Equal to `out_adj` when undirected.
    in_adj: Vec<Vec<(EdgeId, NodeId)>>,
    edge_index: HashMap<String, EdgeId>,
    node_index: HashMap<String, NodeId>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.directed == other.directed
            && self.node_labels == other.node_labels
            && self.edges == other.edges
    }
}

impl Eq for Graph {}

#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    directed: bool,
    nodes: Vec<String>,
    node_index: HashMap<String, NodeId>,
    edges: Vec<(String, NodeId, NodeId)>,
}

impl GraphBuilder {
    pub fn new(directed: bool) -> Self {
        Self {
            directed,
            ..Self::default()
        }
    }

    pub fn node(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.node_index.get(label) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(label.into());
        self.node_index.insert(label.into(), id);
        id
    }

    pub fn edge(&mut self, label: &str, tail: &str, head: &str) -> &mut Self {
        let t = self.node(tail);
        let h = self.node(head);
        self.edges.push((label.into(), t, h));
        self
    }

    pub fn build(self) -> Result<Graph, GraphError> {
        let GraphBuilder {
            directed,
            nodes,
            node_index,
            mut edges,
        } = self;
        edges.sort_by(|a, b| natural_cmp(&a.0, &b.0));
        for pair in edges.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(GraphError::DuplicateEdge(pair[0].0.clone()));
            }
        }
        let mut endpoints: HashMap<(NodeId, NodeId), usize> = HashMap::new();
        for (i, (label, t, h)) in edges.iter().enumerate() {
            let key = if directed || t <= h { (*t, *h) } else { (*h, *t) };
            if let Some(prev) = endpoints.insert(key, i) {
                return Err(GraphError::ParallelEdge {
                    first: edges[prev].0.clone(),
                    second: label.clone(),
                });
            }
        }
        let n = nodes.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut stored = Vec::with_capacity(edges.len());
        for (i, (label, t, h)) in edges.into_iter().enumerate() {
            let id = EdgeId(i as u32);
            out_adj[t.index()].push((id, h));
            in_adj[h.index()].push((id, t));
            if !directed && t != h {
                out_adj[h.index()].push((id, t));
                in_adj[t.index()].push((id, h));
            }
            edge_index.insert(label.clone(), id);
            stored.push(Edge {
                label,
                tail: t,
                head: h,
            });
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Graph {
            directed,
            node_labels: nodes,
            edges: stored,
            out_adj,
            in_adj,
            edge_index,
            node_index,
        })
    }
}

impl Graph {
    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn node_count(&self) -> usize {
        self.node_labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.index()]
    }

    pub fn edge_label(&self, id: EdgeId) -> &str {
        &self.edges[id.index()].label
    }

    pub fn node_label(&self, id: NodeId) -> &str {
        &self.node_labels[id.index()]
    }

    pub fn node_labels(&self) -> &[String] {
        &self.node_labels
    }

    pub fn edge_id(&self, label: &str) -> Option<EdgeId> {
        self.edge_index.get(label).copied()
    }

    pub fn node_id(&self, label: &str) -> Option<NodeId> {
        self.node_index.get(label).copied()
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len() as u32).map(EdgeId)
    }

    pub fn out_edges(&self, v: NodeId) -> &[(EdgeId, NodeId)] {
        &self.out_adj[v.index()]
    }

    pub fn in_edges(&self, v: NodeId) -> &[(EdgeId, NodeId)] {
        &self.in_adj[v.index()]
    }

    /// Nodes reachable from `from` using edges accepted by `usable`.
    pub fn reachable_from(&self, from: NodeId, mut usable: impl FnMut(EdgeId) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![from];
        seen[from.index()] = true;
        while let Some(u) = stack.pop() {
            for &(e, w) in &self.out_adj[u.index()] {
                if !seen[w.index()] && usable(e) {
                    seen[w.index()] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Nodes that can reach `to` using edges accepted by `usable`.
    pub fn reaching(&self, to: NodeId, mut usable: impl FnMut(EdgeId) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![to];
        seen[to.index()] = true;
        while let Some(u) = stack.pop() {
            for &(e, w) in &self.in_adj[u.index()] {
                if !seen[w.index()] && usable(e) {
                    seen[w.index()] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Edges leaving `side` (directed) or with exactly one endpoint in it.
    fn boundary(&self, side: &[bool]) -> Vec<EdgeId> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                let t = side[e.tail.index()];
                let h = side[e.head.index()];
                if self.directed {
                    t && !h
                } else {
                    t != h
                }
            })
            .map(|(i, _)| EdgeId(i as u32))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EdgeState {
    Hidden,
    On,
    Off,
}

impl EdgeState {
    pub fn from_answer(on: bool) -> Self {
        if on {
            EdgeState::On
        } else {
            EdgeState::Off
        }
    }
}

/// Per-edge belief. Labels only move away from `Hidden`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Belief {
    states: Vec<EdgeState>,
}

impl Belief {
    pub fn hidden(edge_count: usize) -> Self {
        Self {
            states: vec![EdgeState::Hidden; edge_count],
        }
    }

    pub fn from_states(states: Vec<EdgeState>) -> Self {
        Self { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    #[inline]
    pub fn state(&self, e: EdgeId) -> EdgeState {
        self.states[e.index()]
    }

    #[inline]
    pub fn is_hidden(&self, e: EdgeId) -> bool {
        self.states[e.index()] == EdgeState::Hidden
    }

    pub fn states(&self) -> &[EdgeState] {
        &self.states
    }

    pub fn reveal(&mut self, e: EdgeId, state: EdgeState) -> Result<(), GraphError> {
        let slot = self
            .states
            .get_mut(e.index())
            .ok_or(GraphError::UnknownEdge(e))?;
        if *slot != EdgeState::Hidden || state == EdgeState::Hidden {
            return Err(GraphError::AlreadyRevealed(e));
        }
        *slot = state;
        Ok(())
    }

    /// Copy of `self` with `e` revealed. `e` must be hidden.
    pub fn with(&self, e: EdgeId, state: EdgeState) -> Belief {
        debug_assert!(self.is_hidden(e));
        let mut b = self.clone();
        b.states[e.index()] = state;
        b
    }

    pub fn revealed_count(&self) -> usize {
        self.states.iter().filter(|s| **s != EdgeState::Hidden).count()
    }

    pub fn hidden_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == EdgeState::Hidden)
            .map(|(i, _)| EdgeId(i as u32))
    }
}

/// A graph together with endpoints, the On-probability and the query budget.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphInstance {
    pub graph: Arc<Graph>,
    pub source: NodeId,
    pub sink: NodeId,
    pub p: f64,
    pub budget: usize,
}

impl GraphInstance {
    pub fn new(
        graph: Arc<Graph>,
        source: NodeId,
        sink: NodeId,
        p: f64,
        budget: usize,
    ) -> Result<Self, GraphError> {
        if source.index() >= graph.node_count() {
            return Err(GraphError::UnknownNode(source));
        }
        if sink.index() >= graph.node_count() {
            return Err(GraphError::UnknownNode(sink));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(GraphError::Probability(p));
        }
        if budget > graph.edge_count() {
            return Err(GraphError::Budget {
                budget,
                edges: graph.edge_count(),
            });
        }
        Ok(Self {
            graph,
            source,
            sink,
            p,
            budget,
        })
    }

    /// Builds an instance from node labels.
    pub fn from_labels(
        graph: Graph,
        source: &str,
        sink: &str,
        p: f64,
        budget: usize,
    ) -> Result<Self, GraphError> {
        let s = graph
            .node_id(source)
            .ok_or_else(|| GraphError::UnknownNodeLabel(source.into()))?;
        let t = graph
            .node_id(sink)
            .ok_or_else(|| GraphError::UnknownNodeLabel(sink.into()))?;
        Self::new(Arc::new(graph), s, t, p, budget)
    }

    pub fn with_budget(&self, budget: usize) -> Self {
        Self {
            budget,
            ..self.clone()
        }
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn fresh_belief(&self) -> Belief {
        Belief::hidden(self.edge_count())
    }

    fn check(&self, b: &Belief) -> Result<(), GraphError> {
        if b.len() != self.edge_count() {
            return Err(GraphError::BeliefSize {
                expected: self.edge_count(),
                got: b.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CertKind {
    Path,
    Cut,
}

/// A path (ordered s-to-t edges) or a cut (sorted edge set).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Certificate {
    pub kind: CertKind,
    pub edges: Vec<EdgeId>,
}

impl Certificate {
    pub fn path(edges: Vec<EdgeId>) -> Self {
        Self {
            kind: CertKind::Path,
            edges,
        }
    }

    pub fn cut(mut edges: Vec<EdgeId>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        Self {
            kind: CertKind::Cut,
            edges,
        }
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.edges.contains(&e)
    }

    /// A path is dead once any edge is Off; a cut once any edge is On.
    pub fn is_dead(&self, b: &Belief) -> bool {
        let killer = match self.kind {
            CertKind::Path => EdgeState::Off,
            CertKind::Cut => EdgeState::On,
        };
        self.edges.iter().any(|&e| b.state(e) == killer)
    }

    pub fn hidden_count(&self, b: &Belief) -> usize {
        self.edges.iter().filter(|&&e| b.is_hidden(e)).count()
    }

    /// Edges still hidden under `b`, sorted.
    pub fn hidden_edges(&self, b: &Belief) -> Vec<EdgeId> {
        let mut v: Vec<EdgeId> = self.edges.iter().copied().filter(|&e| b.is_hidden(e)).collect();
        v.sort_unstable();
        v
    }

    /// Human-readable form such as `(b,c)` or `{a,b}`.
    pub fn display<'a>(&'a self, g: &'a Graph) -> CertDisplay<'a> {
        CertDisplay { cert: self, graph: g }
    }
}

pub struct CertDisplay<'a> {
    cert: &'a Certificate,
    graph: &'a Graph,
}

impl fmt::Display for CertDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (open, close) = match self.cert.kind {
            CertKind::Path => ('(', ')'),
            CertKind::Cut => ('{', '}'),
        };
        write!(f, "{open}")?;
        for (i, e) in self.cert.edges.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.graph.edge_label(*e))?;
        }
        write!(f, "{close}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    PathFound(Certificate),
    CutFound(Certificate),
    Open,
}

impl Status {
    pub fn is_open(&self) -> bool {
        matches!(self, Status::Open)
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Status::PathFound(c) | Status::CutFound(c) => Some(c),
            Status::Open => None,
        }
    }
}

/// Whether the revealed edges already decide connectivity.
pub fn certificate_status(g: &GraphInstance, b: &Belief) -> Result<Status, GraphError> {
    g.check(b)?;
    if let Some(path) = lex_min_path(g, |e| (b.state(e) == EdgeState::On).then_some(1)) {
        return Ok(Status::PathFound(Certificate::path(path)));
    }
    let graph = &g.graph;
    let side = graph.reachable_from(g.source, |e| b.state(e) != EdgeState::Off);
    if !side[g.sink.index()] {
        return Ok(Status::CutFound(Certificate::cut(minimal_cut(g, &side))));
    }
    Ok(Status::Open)
}

/// Cheap status test without building certificates.
pub fn is_decided(g: &GraphInstance, b: &Belief) -> bool {
    has_on_path(g, b) || has_off_cut(g, b)
}

pub fn has_on_path(g: &GraphInstance, b: &Belief) -> bool {
    g.graph.reachable_from(g.source, |e| b.state(e) == EdgeState::On)[g.sink.index()]
}

pub fn has_off_cut(g: &GraphInstance, b: &Belief) -> bool {
    !g.graph.reachable_from(g.source, |e| b.state(e) != EdgeState::Off)[g.sink.index()]
}

/// Path avoiding Off edges with the fewest Hidden edges.
///
/// Ties break by hop count, then by the lexicographically smallest edge-id
/// sequence.
pub fn min_hidden_path(g: &GraphInstance, b: &Belief) -> Option<(Certificate, usize)> {
    min_hidden_path_avoiding(g, b, &[])
}

/// [`min_hidden_path`] with additional edges forbidden.
pub fn min_hidden_path_avoiding(
    g: &GraphInstance,
    b: &Belief,
    excluded: &[EdgeId],
) -> Option<(Certificate, usize)> {
    let mut banned = vec![false; g.edge_count()];
    for e in excluded {
        banned[e.index()] = true;
    }
    let hidden_weight = g.graph.node_count() as u64 + 1;
    let path = lex_min_path(g, |e| {
        if banned[e.index()] {
            return None;
        }
        match b.state(e) {
            EdgeState::Off => None,
            EdgeState::On => Some(1),
            EdgeState::Hidden => Some(1 + hidden_weight),
        }
    })?;
    let hidden = path.iter().filter(|&&e| b.is_hidden(e)).count();
    Some((Certificate::path(path), hidden))
}

/// Cut avoiding On edges with the fewest Hidden edges.
///
/// Returns the inclusion-minimal subset of the source-side canonical minimum
/// cut, which makes the choice deterministic.
pub fn min_hidden_cut(g: &GraphInstance, b: &Belief) -> Option<(Certificate, usize)> {
    min_hidden_cut_avoiding(g, b, &[])
}

/// [`min_hidden_cut`] with additional edges that may not be cut.
pub fn min_hidden_cut_avoiding(
    g: &GraphInstance,
    b: &Belief,
    excluded: &[EdgeId],
) -> Option<(Certificate, usize)> {
    let graph = &g.graph;
    let mut uncuttable = vec![false; g.edge_count()];
    for e in excluded {
        uncuttable[e.index()] = true;
    }
    for e in graph.edge_ids() {
        if b.state(e) == EdgeState::On {
            uncuttable[e.index()] = true;
        }
    }
    if g.source == g.sink
        || graph.reachable_from(g.source, |e| uncuttable[e.index()])[g.sink.index()]
    {
        return None;
    }
    let infinite = g.edge_count() as u32 + 1;
    let mut net = FlowNetwork::new(graph.node_count());
    for (i, edge) in graph.edges().iter().enumerate() {
        let cap = if uncuttable[i] {
            infinite
        } else if b.states()[i] == EdgeState::Hidden {
            1
        } else {
            continue;
        };
        net.add_edge(edge.tail.index(), edge.head.index(), cap, !graph.is_directed());
    }
    let flow = net.max_flow(g.source.index(), g.sink.index());
    let side = net.residual_reachable(g.source.index());
    let cut = minimal_cut(g, &side);
    let hidden = cut.iter().filter(|&&e| b.is_hidden(e)).count();
    debug_assert_eq!(hidden as u32, flow);
    Some((Certificate::cut(cut), hidden))
}

/// Boundary of `side` restricted to edges whose far end still reaches the sink
/// once the boundary is removed. The result is an inclusion-minimal cut.
fn minimal_cut(g: &GraphInstance, side: &[bool]) -> Vec<EdgeId> {
    let graph = &g.graph;
    let boundary = graph.boundary(side);
    let mut in_cut = vec![false; graph.edge_count()];
    for e in &boundary {
        in_cut[e.index()] = true;
    }
    let to_sink = graph.reaching(g.sink, |e| !in_cut[e.index()]);
    boundary
        .into_iter()
        .filter(|&e| {
            let edge = graph.edge(e);
            let far = if side[edge.tail.index()] { edge.head } else { edge.tail };
            to_sink[far.index()]
        })
        .collect()
}

/// Lexicographically smallest minimum-weight path with positive weights.
///
/// `weight` returns `None` for unusable edges. Uses reverse Dijkstra from the
/// sink, then walks tight edges from the source in id order.
fn lex_min_path(g: &GraphInstance, weight: impl Fn(EdgeId) -> Option<u64>) -> Option<Vec<EdgeId>> {
    let graph = &g.graph;
    if g.source == g.sink {
        return Some(Vec::new());
    }
    let n = graph.node_count();
    let mut dist = vec![u64::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[g.sink.index()] = 0;
    heap.push(Reverse((0u64, g.sink.0)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        if v == g.source.0 {
            break;
        }
        for &(e, u) in graph.in_edges(NodeId(v)) {
            if let Some(w) = weight(e) {
                let nd = d + w;
                if nd < dist[u.index()] {
                    dist[u.index()] = nd;
                    heap.push(Reverse((nd, u.0)));
                }
            }
        }
    }
    if dist[g.source.index()] == u64::MAX {
        return None;
    }
    let mut path = Vec::new();
    let mut u = g.source;
    while u != g.sink {
        let du = dist[u.index()];
        let step = graph.out_edges(u).iter().find(|&&(e, w)| {
            let dw = dist[w.index()];
            dw != u64::MAX && weight(e).is_some_and(|we| we + dw == du)
        });
        // Nodes settled after the source may carry stale upper bounds, but
        // every tight edge still strictly decreases the distance.
        let &(e, w) = step?;
        path.push(e);
        u = w;
    }
    Some(path)
}
