//! Policy-tree shapes, labels, reach probabilities and correctness checks.
//!
//! Left children follow an On answer, right children an Off answer. Node ids
//! are always in breadth-first order (left before right), so two structures
//! with the same shape compare equal.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::TreeError;
use crate::graph::{Certificate, EdgeId, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TreeNode {
    pub parent: Option<usize>,
    /// (On child, Off child).
    pub children: Option<(usize, usize)>,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreeStructure {
    nodes: Vec<TreeNode>,
}

impl TreeStructure {
    pub fn root() -> Self {
        Self::complete(1)
    }

    /// Complete binary tree with `layers` levels (`layers >= 1`).
    pub fn complete(layers: usize) -> Self {
        let layers = layers.max(1);
        let n = (1usize << layers) - 1;
        let nodes = (0..n)
            .map(|i| {
                let depth = (usize::BITS - (i + 1).leading_zeros() - 1) as usize;
                TreeNode {
                    parent: (i > 0).then(|| (i - 1) / 2),
                    children: (depth + 1 < layers).then(|| (2 * i + 1, 2 * i + 2)),
                    depth,
                }
            })
            .collect();
        Self { nodes }
    }

    /// Builds a canonical structure from per-node child lists rooted at 0.
    /// Returns the structure and the old-to-new id map.
    fn canonical(children: &[Option<(usize, usize)>]) -> (Self, Vec<usize>) {
        let mut map = vec![usize::MAX; children.len()];
        let mut order = Vec::with_capacity(children.len());
        let mut queue = VecDeque::from([0usize]);
        while let Some(old) = queue.pop_front() {
            map[old] = order.len();
            order.push(old);
            if let Some((l, r)) = children[old] {
                queue.push_back(l);
                queue.push_back(r);
            }
        }
        let mut nodes = vec![
            TreeNode {
                parent: None,
                children: None,
                depth: 0
            };
            order.len()
        ];
        for (new, &old) in order.iter().enumerate() {
            if let Some((l, r)) = children[old] {
                let (nl, nr) = (map[l], map[r]);
                nodes[new].children = Some((nl, nr));
                nodes[nl].parent = Some(new);
                nodes[nr].parent = Some(new);
                nodes[nl].depth = nodes[new].depth + 1;
                nodes[nr].depth = nodes[new].depth + 1;
            }
        }
        (Self { nodes }, map)
    }

    /// Attaches two children to each listed leaf.
    pub fn expand(&self, leaves: &[usize]) -> Result<Self, TreeError> {
        let mut children: Vec<Option<(usize, usize)>> =
            self.nodes.iter().map(|n| n.children).collect();
        for &leaf in leaves {
            let node = self.nodes.get(leaf).ok_or(TreeError::UnknownNode(leaf))?;
            if node.children.is_none() && children[leaf].is_none() {
                let l = children.len();
                children.push(None);
                children.push(None);
                children[leaf] = Some((l, l + 1));
            }
        }
        Ok(Self::canonical(&children).0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> Result<&TreeNode, TreeError> {
        self.nodes.get(i).ok_or(TreeError::UnknownNode(i))
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.nodes[i].parent
    }

    pub fn children(&self, i: usize) -> Option<(usize, usize)> {
        self.nodes[i].children
    }

    pub fn depth(&self, i: usize) -> usize {
        self.nodes[i].depth
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.nodes[i].children.is_none()
    }

    pub fn is_left(&self, i: usize) -> bool {
        self.nodes[i]
            .parent
            .is_some_and(|p| self.nodes[p].children.is_some_and(|(l, _)| l == i))
    }

    pub fn is_right(&self, i: usize) -> bool {
        self.nodes[i]
            .parent
            .is_some_and(|p| self.nodes[p].children.is_some_and(|(_, r)| r == i))
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.is_leaf(i))
    }

    /// Nodes from the root to `i`, inclusive.
    pub fn route(&self, i: usize) -> Vec<usize> {
        let mut route = vec![i];
        let mut cur = i;
        while let Some(p) = self.nodes[cur].parent {
            route.push(p);
            cur = p;
        }
        route.reverse();
        route
    }

    /// Parents whose answer was On (for a left node) or Off (for a right
    /// node) along the route to `i`.
    pub fn answered_parents(&self, i: usize, on: bool) -> Vec<usize> {
        self.route(i)
            .into_iter()
            .filter(|&j| if on { self.is_left(j) } else { self.is_right(j) })
            .filter_map(|j| self.nodes[j].parent)
            .collect()
    }
}

/// Probability of reaching `node`: `p^(left turns) * (1-p)^(right turns)`.
pub fn node_reach_prob(s: &TreeStructure, node: usize, p: f64) -> Result<f64, TreeError> {
    s.node(node)?;
    let route = s.route(node);
    let mut prob = 1.0;
    for &j in &route[1..] {
        prob *= if s.is_left(j) { p } else { 1.0 - p };
    }
    Ok(prob)
}

/// Reach probabilities of every node, accumulated top-down.
pub fn reach_probs(s: &TreeStructure, p: f64) -> Vec<f64> {
    let mut probs = vec![1.0; s.len()];
    // BFS order guarantees parents precede children.
    for i in 0..s.len() {
        if let Some((l, r)) = s.children(i) {
            probs[l] = probs[i] * p;
            probs[r] = probs[i] * (1.0 - p);
        }
    }
    probs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    Query(EdgeId),
    Done,
    Limit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTree {
    pub structure: TreeStructure,
    pub labels: Vec<NodeLabel>,
    pub p: f64,
}

/// A Done claim that disproves neither every path nor every cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub node: usize,
    pub path: Option<Certificate>,
    pub cut: Option<Certificate>,
}

impl PolicyTree {
    pub fn new(structure: TreeStructure, labels: Vec<NodeLabel>, p: f64) -> Result<Self, TreeError> {
        if structure.len() != labels.len() {
            return Err(TreeError::LabelCount {
                labels: labels.len(),
                nodes: structure.len(),
            });
        }
        Ok(Self {
            structure,
            labels,
            p,
        })
    }

    /// Single Done node.
    pub fn done() -> Self {
        Self {
            structure: TreeStructure::root(),
            labels: vec![NodeLabel::Done],
            p: 0.5,
        }
    }

    pub fn label(&self, i: usize) -> NodeLabel {
        self.labels[i]
    }

    pub fn root_query(&self) -> Option<EdgeId> {
        match self.labels.first() {
            Some(NodeLabel::Query(e)) => Some(*e),
            _ => None,
        }
    }

    /// Rejects repeated edges on a route, non-Done children of Done nodes
    /// and (when `budget` is given) Limit leaves off depth `budget`.
    pub fn check_well_formed(&self, budget: Option<usize>) -> Result<(), TreeError> {
        let s = &self.structure;
        for i in 0..s.len() {
            if let Some(parent) = s.parent(i) {
                if self.labels[parent] == NodeLabel::Done && self.labels[i] != NodeLabel::Done {
                    return Err(TreeError::DoneChild(i));
                }
            }
            if let NodeLabel::Query(e) = self.labels[i] {
                let repeated = s.route(i)[..s.depth(i)]
                    .iter()
                    .any(|&j| self.labels[j] == NodeLabel::Query(e));
                if repeated {
                    return Err(TreeError::RepeatedEdge { node: i, edge: e });
                }
            }
            if let (NodeLabel::Limit, Some(b)) = (self.labels[i], budget) {
                if s.depth(i) != b || !s.is_leaf(i) {
                    return Err(TreeError::LimitDepth {
                        node: i,
                        depth: s.depth(i),
                        budget: b,
                    });
                }
            }
        }
        Ok(())
    }

    /// Expected number of queries: reach probabilities of Query nodes summed
    /// in node-id order.
    pub fn expected_cost(&self) -> f64 {
        let probs = reach_probs(&self.structure, self.p);
        self.labels
            .iter()
            .zip(probs)
            .filter(|(l, _)| matches!(l, NodeLabel::Query(_)))
            .map(|(_, pr)| pr)
            .sum()
    }

    /// The same policy with the children of Done nodes removed.
    pub fn pruned(&self) -> Self {
        let s = &self.structure;
        let children: Vec<Option<(usize, usize)>> = (0..s.len())
            .map(|i| if self.labels[i] == NodeLabel::Done { None } else { s.children(i) })
            .collect();
        let (structure, map) = TreeStructure::canonical(&children);
        let mut labels = vec![NodeLabel::Done; structure.len()];
        for (old, &new) in map.iter().enumerate() {
            if new != usize::MAX {
                labels[new] = self.labels[old];
            }
        }
        Self {
            structure,
            labels,
            p: self.p,
        }
    }

    /// Edges answered On and Off on the way to `i`.
    pub fn route_answers(&self, i: usize) -> (Vec<EdgeId>, Vec<EdgeId>) {
        let s = &self.structure;
        let mut on = Vec::new();
        let mut off = Vec::new();
        for &j in &s.route(i)[1..] {
            let parent = s.parent(j).expect("non-root has a parent");
            if let NodeLabel::Query(e) = self.labels[parent] {
                if s.is_left(j) {
                    on.push(e);
                } else {
                    off.push(e);
                }
            }
        }
        (on, off)
    }

    /// Done nodes whose parent is not Done.
    pub fn is_first_done(&self, i: usize) -> bool {
        self.labels[i] == NodeLabel::Done
            && self
                .structure
                .parent(i)
                .is_none_or(|p| self.labels[p] != NodeLabel::Done)
    }

    /// Every first-time Done must disprove all cuts through On answers on its
    /// route, or all paths through Off answers.
    pub fn validate_done_claims(&self, paths: &[Certificate], cuts: &[Certificate]) -> Vec<Violation> {
        let mut violations = Vec::new();
        for i in 0..self.structure.len() {
            if !self.is_first_done(i) {
                continue;
            }
            let (on, off) = self.route_answers(i);
            let open_path = paths
                .iter()
                .find(|c| !c.edges.iter().any(|e| off.contains(e)));
            let open_cut = cuts.iter().find(|c| !c.edges.iter().any(|e| on.contains(e)));
            if let (Some(path), Some(cut)) = (open_path, open_cut) {
                violations.push(Violation {
                    node: i,
                    path: Some(path.clone()),
                    cut: Some(cut.clone()),
                });
            }
        }
        violations
    }

    /// Serializes as `Q:<edge>|DONE|LIMIT` nodes with `(left,right)` children.
    pub fn to_text(&self, graph: &Graph) -> String {
        let mut out = String::new();
        self.write_node(0, graph, &mut out);
        out
    }

    fn write_node(&self, i: usize, graph: &Graph, out: &mut String) {
        match self.labels[i] {
            NodeLabel::Query(e) => {
                out.push_str("Q:");
                out.push_str(graph.edge_label(e));
            }
            NodeLabel::Done => out.push_str("DONE"),
            NodeLabel::Limit => out.push_str("LIMIT"),
        }
        if let Some((l, r)) = self.structure.children(i) {
            out.push('(');
            self.write_node(l, graph, out);
            out.push(',');
            self.write_node(r, graph, out);
            out.push(')');
        }
    }

    /// Parses the text produced by [`PolicyTree::to_text`].
    pub fn from_text(text: &str, graph: &Graph, p: f64) -> Result<Self, TreeError> {
        let mut parser = TextParser {
            src: text.trim().as_bytes(),
            pos: 0,
            graph,
            children: Vec::new(),
            labels: Vec::new(),
        };
        parser.node()?;
        if parser.pos != parser.src.len() {
            return Err(parser.error("trailing input"));
        }
        let (structure, map) = TreeStructure::canonical(&parser.children);
        let mut labels = vec![NodeLabel::Done; structure.len()];
        for (old, label) in parser.labels.into_iter().enumerate() {
            labels[map[old]] = label;
        }
        Self::new(structure, labels, p)
    }
}

struct TextParser<'a> {
    src: &'a [u8],
    pos: usize,
    graph: &'a Graph,
    children: Vec<Option<(usize, usize)>>,
    labels: Vec<NodeLabel>,
}

impl TextParser<'_> {
    fn error(&self, what: &str) -> TreeError {
        TreeError::Parse(format!("{what} at byte {}", self.pos))
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn node(&mut self) -> Result<usize, TreeError> {
        let label = if self.eat("DONE") {
            NodeLabel::Done
        } else if self.eat("LIMIT") {
            NodeLabel::Limit
        } else if self.eat("Q:") {
            let start = self.pos;
            while self.pos < self.src.len() && !b"(),".contains(&self.src[self.pos]) {
                self.pos += 1;
            }
            let name = core::str::from_utf8(&self.src[start..self.pos])
                .map_err(|_| self.error("invalid utf-8"))?;
            let e = self
                .graph
                .edge_id(name)
                .ok_or_else(|| TreeError::Parse(format!("unknown edge `{name}`")))?;
            NodeLabel::Query(e)
        } else {
            return Err(self.error("expected Q:<edge>, DONE or LIMIT"));
        };
        let id = self.labels.len();
        self.labels.push(label);
        self.children.push(None);
        if self.eat("(") {
            let l = self.node()?;
            if !self.eat(",") {
                return Err(self.error("expected `,`"));
            }
            let r = self.node()?;
            if !self.eat(")") {
                return Err(self.error("expected `)`"));
            }
            self.children[id] = Some((l, r));
        }
        Ok(id)
    }
}

/// Answers to the first `B - 1` queries of an episode; `true` means On.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ResponseVector {
    pub bits: Vec<bool>,
}

impl ResponseVector {
    /// Vector of length `len` whose bit `k` is bit `len-1-k` of `x`.
    pub fn from_index(x: u64, len: usize) -> Self {
        Self {
            bits: (0..len).map(|k| (x >> (len - 1 - k)) & 1 == 1).collect(),
        }
    }

    /// All `2^(budget-1)` vectors in counting order.
    pub fn all(budget: usize) -> impl Iterator<Item = ResponseVector> {
        let len = budget.saturating_sub(1);
        (0..1u64 << len).map(move |x| Self::from_index(x, len))
    }

    pub fn probability(&self, p: f64) -> f64 {
        self.bits
            .iter()
            .map(|&on| if on { p } else { 1.0 - p })
            .product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::triangle;
    use crate::graph::CertKind;

    fn cert(g: &Graph, kind: CertKind, names: &[&str]) -> Certificate {
        let edges = names.iter().map(|n| g.edge_id(n).unwrap()).collect();
        match kind {
            CertKind::Path => Certificate::path(edges),
            CertKind::Cut => Certificate::cut(edges),
        }
    }

    fn claim_sets(g: &Graph) -> (Vec<Certificate>, Vec<Certificate>) {
        (
            vec![cert(g, CertKind::Path, &["a"]), cert(g, CertKind::Path, &["b", "c"])],
            vec![cert(g, CertKind::Cut, &["a", "b"]), cert(g, CertKind::Cut, &["a", "c"])],
        )
    }

    #[test]
    fn reach_probabilities() {
        let s = TreeStructure::complete(6);
        assert_eq!(node_reach_prob(&s, 0, 0.3).unwrap(), 1.0);
        // left, left, right, left, right
        let mut i = 0;
        for on in [true, true, false, true, false] {
            let (l, r) = s.children(i).unwrap();
            i = if on { l } else { r };
        }
        assert_eq!(node_reach_prob(&s, i, 0.5).unwrap(), 0.03125);
        let (_, r) = s.children(0).unwrap();
        assert_eq!(node_reach_prob(&s, r, 0.25).unwrap(), 0.75);
        assert!(node_reach_prob(&s, 999, 0.5).is_err());
    }

    #[test]
    fn expected_costs() {
        let g = triangle();
        let t = PolicyTree::from_text("Q:a(DONE,Q:b(Q:c(DONE,DONE),DONE))", &g.graph, 0.5).unwrap();
        assert_eq!(t.expected_cost(), 1.75);
        assert_eq!(PolicyTree::done().expected_cost(), 0.0);
        let t = PolicyTree::from_text("Q:a(DONE,Q:b(DONE,DONE))", &g.graph, 0.5).unwrap();
        assert_eq!(t.expected_cost(), 1.5);
    }

    #[test]
    fn done_claims_example() {
        let g = triangle();
        let (paths, cuts) = claim_sets(&g.graph);
        let correct = PolicyTree::from_text("Q:a(DONE(DONE,DONE),Q:b)", &g.graph, 0.5).unwrap();
        assert!(correct.validate_done_claims(&paths, &cuts).is_empty());
        let wrong = PolicyTree::from_text("Q:a(DONE,DONE)", &g.graph, 0.5).unwrap();
        let v = wrong.validate_done_claims(&paths, &cuts);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].node, 2);
        assert_eq!(v[0].path, Some(paths[1].clone()));
        assert!(PolicyTree::done().validate_done_claims(&[], &cuts).is_empty());
    }

    #[test]
    fn text_round_trip_and_errors() {
        let g = triangle();
        for text in ["Q:a(DONE,Q:b(Q:c(DONE,DONE),DONE))", "DONE", "Q:a(LIMIT,Q:b)"] {
            let t = PolicyTree::from_text(text, &g.graph, 0.5).unwrap();
            assert_eq!(t.to_text(&g.graph), text);
        }
        assert!(PolicyTree::from_text("Q:z", &g.graph, 0.5).is_err());
        assert!(PolicyTree::from_text("Q:a(DONE)", &g.graph, 0.5).is_err());
        assert!(PolicyTree::from_text("DONE,", &g.graph, 0.5).is_err());
    }

    #[test]
    fn pruning_drops_done_subtrees() {
        let g = triangle();
        let t = PolicyTree::from_text("Q:a(DONE(DONE,DONE),Q:b(DONE(DONE,DONE),LIMIT))", &g.graph, 0.5).unwrap();
        let p = t.pruned();
        assert_eq!(p.to_text(&g.graph), "Q:a(DONE,Q:b(DONE,LIMIT))");
        assert_eq!(p.expected_cost(), t.expected_cost());
    }

    #[test]
    fn well_formedness() {
        let g = triangle();
        let t = PolicyTree::from_text("Q:a(DONE,Q:a)", &g.graph, 0.5).unwrap();
        assert!(matches!(t.check_well_formed(None), Err(TreeError::RepeatedEdge { .. })));
        let t = PolicyTree::from_text("DONE(DONE,Q:a)", &g.graph, 0.5).unwrap();
        assert_eq!(t.check_well_formed(None), Err(TreeError::DoneChild(2)));
        let t = PolicyTree::from_text("Q:a(LIMIT,DONE)", &g.graph, 0.5).unwrap();
        assert!(t.check_well_formed(Some(1)).is_ok());
        assert!(t.check_well_formed(Some(2)).is_err());
    }

    #[test]
    fn expand_keeps_bfs_order() {
        let s = TreeStructure::complete(2).expand(&[2]).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.children(2), Some((3, 4)));
        assert!(s.is_left(3) && s.is_right(4));
        let s = s.expand(&[1]).unwrap();
        assert_eq!(s.children(1), Some((3, 4)));
        assert_eq!(s.children(2), Some((5, 6)));
        assert_eq!(s.route(6), [0, 2, 6]);
        assert_eq!(s.answered_parents(6, false), [0, 2]);
    }

    #[test]
    fn response_vectors_sum_to_one() {
        for b in 1..=8 {
            let total: f64 = ResponseVector::all(b).map(|v| v.probability(0.3)).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert_eq!(ResponseVector::all(b).count(), 1 << (b - 1));
        }
    }
}
