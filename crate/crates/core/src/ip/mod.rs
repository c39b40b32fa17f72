//! The optimal-correct-tree integer program.
//!
//! Given a tree structure `S`, a path set `P` and a cut set `C`, the program
//! places one label per node (a query on an edge of `E^R`, Done, or a limit
//! leaf at depth `B`) so that every first-time Done disproves all of `C`
//! through On answers (left children) or all of `P` through Off answers
//! (right children), minimizing the probability-weighted number of queries.
//!
//! Variable `v_{e,i}` sits at index `i * (|E^R| + 1) + k` where `k` is the
//! position of `e` in `E^R`; `d_i` takes the last slot of node `i`.

mod bnb;
mod flat;
mod hitting;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

pub use bnb::StructuredBackend;
pub use flat::FlatBackend;
pub use hitting::min_hitting_set;

use crate::error::SolveError;
use crate::graph::{Certificate, EdgeId, Graph};
use crate::tree::{reach_probs, NodeLabel, PolicyTree, TreeStructure};

/// Union of the edges of `paths` and `cuts`, sorted by id.
pub fn referenced_edges(paths: &[Certificate], cuts: &[Certificate]) -> Vec<EdgeId> {
    let mut edges: Vec<EdgeId> = paths.iter().chain(cuts).flat_map(|c| c.edges.iter().copied()).collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

impl Constraint {
    pub fn holds(&self, values: &[bool]) -> bool {
        let lhs: i64 = self.terms.iter().filter(|(v, _)| values[*v]).map(|(_, c)| c).sum();
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Ge => lhs >= self.rhs,
            Sense::Eq => lhs == self.rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpInstance {
    pub structure: TreeStructure,
    /// `E^R`, sorted by id.
    pub edges: Vec<EdgeId>,
    pub edge_names: Vec<String>,
    /// Certificates as positions into `edges`.
    pub paths: Vec<Vec<usize>>,
    pub cuts: Vec<Vec<usize>>,
    pub p: f64,
    pub budget: usize,
}

pub fn build_ip(
    structure: &TreeStructure,
    paths: &[Certificate],
    cuts: &[Certificate],
    graph: &Graph,
    p: f64,
    budget: usize,
) -> IpInstance {
    let edges = referenced_edges(paths, cuts);
    let pos = |e: &EdgeId| edges.binary_search(e).expect("referenced edge");
    let project = |cs: &[Certificate]| -> Vec<Vec<usize>> {
        cs.iter()
            .map(|c| {
                let mut v: Vec<usize> = c.edges.iter().map(pos).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect()
    };
    IpInstance {
        structure: structure.clone(),
        edge_names: edges.iter().map(|&e| sanitize(graph.edge_label(e))).collect(),
        paths: project(paths),
        cuts: project(cuts),
        edges,
        p,
        budget,
    }
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

impl IpInstance {
    pub fn stride(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn var(&self, node: usize, k: usize) -> usize {
        node * self.stride() + k
    }

    pub fn done_var(&self, node: usize) -> usize {
        node * self.stride() + self.edges.len()
    }

    pub fn variable_count(&self) -> usize {
        self.structure.len() * self.stride()
    }

    pub fn variable_name(&self, v: usize) -> String {
        let (node, k) = (v / self.stride(), v % self.stride());
        if k == self.edges.len() {
            format!("d_{node}")
        } else {
            format!("v_{}_{node}", self.edge_names[k])
        }
    }

    /// Reach probability on every query variable, zero on Done variables.
    pub fn objective(&self) -> Vec<f64> {
        let probs = reach_probs(&self.structure, self.p);
        let mut obj = vec![0.0; self.variable_count()];
        for (i, &pr) in probs.iter().enumerate() {
            for k in 0..self.edges.len() {
                obj[self.var(i, k)] = pr;
            }
        }
        obj
    }

    pub fn constraints(&self) -> Vec<Constraint> {
        let s = &self.structure;
        let m = self.edges.len();
        let mut out = Vec::new();
        for i in 0..s.len() {
            let queries = (0..m).map(|k| (self.var(i, k), 1));
            if s.depth(i) < self.budget {
                out.push(Constraint {
                    name: format!("part_{i}"),
                    terms: queries.chain([(self.done_var(i), 1)]).collect(),
                    sense: Sense::Eq,
                    rhs: 1,
                });
            } else if m > 0 {
                out.push(Constraint {
                    name: format!("noq_{i}"),
                    terms: queries.collect(),
                    sense: Sense::Eq,
                    rhs: 0,
                });
            }
            if let Some(q) = s.parent(i) {
                out.push(Constraint {
                    name: format!("inh_{i}"),
                    terms: vec![(self.done_var(i), 1), (self.done_var(q), -1)],
                    sense: Sense::Ge,
                    rhs: 0,
                });
            }
        }
        for i in s.leaves() {
            let route = s.route(i);
            for k in 0..m {
                out.push(Constraint {
                    name: format!("uniq_{i}_{}", self.edge_names[k]),
                    terms: route.iter().map(|&j| (self.var(j, k), 1)).collect(),
                    sense: Sense::Le,
                    rhs: 1,
                });
            }
        }
        if !self.paths.is_empty() && !self.cuts.is_empty() {
            out.push(Constraint {
                name: String::from("root_done"),
                terms: vec![(self.done_var(0), -1)],
                sense: Sense::Ge,
                rhs: 0,
            });
        }
        for i in 1..s.len() {
            let on = s.is_left(i);
            let (certs, tag) = if on { (&self.cuts, "cut") } else { (&self.paths, "path") };
            let answered = s.answered_parents(i, on);
            let q = s.parent(i).expect("non-root");
            for (c, cert) in certs.iter().enumerate() {
                let mut terms: Vec<(usize, i64)> = answered
                    .iter()
                    .flat_map(|&j| cert.iter().map(move |&k| (j, k)))
                    .map(|(j, k)| (self.var(j, k), 1))
                    .collect();
                terms.push((self.done_var(i), -1));
                terms.push((self.done_var(q), 1));
                out.push(Constraint {
                    name: format!("{tag}{c}_{i}"),
                    terms,
                    sense: Sense::Ge,
                    rhs: 0,
                });
            }
        }
        out
    }

    /// Name of the first violated constraint, if any.
    pub fn violated(&self, values: &[bool]) -> Option<String> {
        self.constraints().into_iter().find(|c| !c.holds(values)).map(|c| c.name)
    }

    pub fn objective_value(&self, values: &[bool]) -> f64 {
        let probs = reach_probs(&self.structure, self.p);
        (0..self.structure.len())
            .filter(|&i| (0..self.edges.len()).any(|k| values[self.var(i, k)]))
            .map(|i| probs[i])
            .sum()
    }

    pub fn decode(&self, values: &[bool]) -> Result<PolicyTree, SolveError> {
        if values.len() != self.variable_count() {
            return Err(SolveError::Infeasible);
        }
        let labels = (0..self.structure.len())
            .map(|i| {
                match (0..self.edges.len()).find(|&k| values[self.var(i, k)]) {
                    Some(k) => NodeLabel::Query(self.edges[k]),
                    None if values[self.done_var(i)] => NodeLabel::Done,
                    None => NodeLabel::Limit,
                }
            })
            .collect();
        PolicyTree::new(self.structure.clone(), labels, self.p).map_err(|_| SolveError::Infeasible)
    }

    pub fn encode(&self, tree: &PolicyTree) -> Vec<bool> {
        let mut values = vec![false; self.variable_count()];
        for (i, label) in tree.labels.iter().enumerate() {
            match label {
                NodeLabel::Query(e) => {
                    if let Ok(k) = self.edges.binary_search(e) {
                        values[self.var(i, k)] = true;
                    }
                }
                NodeLabel::Done => values[self.done_var(i)] = true,
                NodeLabel::Limit => {}
            }
        }
        values
    }

    /// CPLEX LP text.
    pub fn to_lp(&self) -> String {
        let mut out = String::from("Minimize\n obj:");
        let obj = self.objective();
        let mut first = true;
        for (v, &c) in obj.iter().enumerate() {
            if v % self.stride() == self.edges.len() {
                continue;
            }
            let sep = if first { " " } else { " + " };
            let _ = write!(out, "{sep}{c} {}", self.variable_name(v));
            first = false;
        }
        if first {
            let _ = write!(out, " 0 {}", self.variable_name(self.done_var(0)));
        }
        out.push_str("\nSubject To\n");
        for c in self.constraints() {
            let _ = write!(out, " {}:", c.name);
            for (n, &(v, coef)) in c.terms.iter().enumerate() {
                let sign = match (n, coef < 0) {
                    (0, false) => " ",
                    (0, true) => " - ",
                    (_, false) => " + ",
                    (_, true) => " - ",
                };
                let mag = coef.unsigned_abs();
                if mag == 1 {
                    let _ = write!(out, "{sign}{}", self.variable_name(v));
                } else {
                    let _ = write!(out, "{sign}{mag} {}", self.variable_name(v));
                }
            }
            let sense = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {sense} {}", c.rhs);
        }
        out.push_str("Binary\n");
        for v in 0..self.variable_count() {
            let _ = writeln!(out, " {}", self.variable_name(v));
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Capabilities {
    /// Largest program the backend accepts.
    pub max_variables: Option<usize>,
    /// Whether ties are broken to the lexicographically smallest labeling.
    pub lex_tie_break: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpSolution {
    pub values: Vec<bool>,
    pub objective: f64,
}

pub trait SolverBackend {
    fn name(&self) -> &str;
    fn capabilities(&self) -> Capabilities;
    /// Solves to optimality; `stop` is polled and aborts with
    /// [`SolveError::Interrupted`].
    fn solve(&self, ip: &IpInstance, stop: &dyn Fn() -> bool) -> Result<IpSolution, SolveError>;
}

/// Solves `ip` and returns the labeled tree with its expected cost.
pub fn solve_optimal_tree(
    ip: &IpInstance,
    backend: &dyn SolverBackend,
    stop: &dyn Fn() -> bool,
) -> Result<(PolicyTree, f64), SolveError> {
    let sol = backend.solve(ip, stop)?;
    let tree = ip.decode(&sol.values)?;
    let cost = tree.expected_cost();
    Ok((tree, cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::triangle;
    use crate::graph::CertKind;

    fn certs(g: &Graph, kind: CertKind, sets: &[&[&str]]) -> Vec<Certificate> {
        sets.iter()
            .map(|names| {
                let edges = names.iter().map(|n| g.edge_id(n).unwrap()).collect();
                match kind {
                    CertKind::Path => Certificate::path(edges),
                    CertKind::Cut => Certificate::cut(edges),
                }
            })
            .collect()
    }

    #[test]
    fn referenced_edge_union() {
        let g = triangle();
        let p = certs(&g.graph, CertKind::Path, &[&["a"], &["b", "c"]]);
        let c = certs(&g.graph, CertKind::Cut, &[&["a", "b"], &["a", "c"]]);
        assert_eq!(referenced_edges(&p, &c).len(), 3);
        assert_eq!(referenced_edges(&p[..1], &c[..1]).len(), 2);
        assert!(referenced_edges(&[], &[]).is_empty());
    }

    #[test]
    fn variable_count_and_root_done() {
        let g = triangle();
        let p = certs(&g.graph, CertKind::Path, &[&["a"]]);
        let c = certs(&g.graph, CertKind::Cut, &[&["a", "b"]]);
        let ip = build_ip(&TreeStructure::complete(2), &p, &c, &g.graph, 0.5, 3);
        assert_eq!(ip.variable_count(), 9);
        let root = build_ip(&TreeStructure::root(), &p, &c, &g.graph, 0.5, 3);
        let rd = root.constraints().into_iter().find(|c| c.name == "root_done").unwrap();
        assert_eq!(rd.terms, [(root.done_var(0), -1)]);
        let free = build_ip(&TreeStructure::root(), &[], &c, &g.graph, 0.5, 3);
        let mut values = vec![false; free.variable_count()];
        values[free.done_var(0)] = true;
        assert_eq!(free.violated(&values), None);
        assert_eq!(free.objective_value(&values), 0.0);
    }

    #[test]
    fn encode_decode_round_trip() {
        let g = triangle();
        let p = certs(&g.graph, CertKind::Path, &[&["a"], &["b", "c"]]);
        let c = certs(&g.graph, CertKind::Cut, &[&["a", "b"], &["a", "c"]]);
        let t = PolicyTree::from_text("Q:a(DONE,Q:b(Q:c(DONE,DONE),DONE))", &g.graph, 0.5).unwrap();
        let ip = build_ip(&t.structure, &p, &c, &g.graph, 0.5, 3);
        let values = ip.encode(&t);
        assert_eq!(ip.violated(&values), None);
        assert_eq!(ip.decode(&values).unwrap(), t);
        assert_eq!(ip.objective_value(&values), 1.75);
        let wrong = PolicyTree::from_text("Q:a(DONE,DONE)", &g.graph, 0.5).unwrap();
        let ip = build_ip(&wrong.structure, &p, &c, &g.graph, 0.5, 3);
        assert_eq!(ip.violated(&ip.encode(&wrong)).as_deref(), Some("path1_2"));
    }
}
