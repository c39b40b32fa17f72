//! The exact algorithm with anytime lower bounds.
//!
//! Each iteration solves the integer program for the current tree structure
//! `S`, path set `P` and cut set `C`, then grows `P` and `C` at Done nodes
//! that do not hold a real certificate and grows `S` at inconclusive leaves.
//! Every intermediate cost is a lower bound on the optimum; when nothing
//! grows, the tree is optimal.
//!
//! The solver also runs from a partially revealed belief: certificates are
//! then restricted to the edges still hidden, which is how the Tree heuristic
//! re-plans from the middle of an episode.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::SolveError;
use crate::graph::{
    certificate_status, min_hidden_cut, min_hidden_path, Belief, Certificate, EdgeState, GraphInstance, Status,
};
use crate::ip::{build_ip, solve_optimal_tree, SolverBackend};
use crate::tree::{NodeLabel, PolicyTree, TreeStructure};
use crate::Clock;

pub const DEFAULT_TIME_BUDGET_MS: u64 = 72 * 3600 * 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactConfig {
    /// Layers of the initial complete tree, capped at `B + 1`.
    pub initial_layers: usize,
    pub max_iterations: usize,
    pub time_budget_ms: u64,
    /// Starting sets; by default one minimum-hidden path and cut.
    pub initial_paths: Option<Vec<Certificate>>,
    pub initial_cuts: Option<Vec<Certificate>>,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            initial_layers: 4,
            max_iterations: 10_000,
            time_budget_ms: DEFAULT_TIME_BUDGET_MS,
            initial_paths: None,
            initial_cuts: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolveStatus {
    Optimal,
    LowerBoundOnly,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationReport {
    pub iteration: usize,
    /// `c(S, P, C)`, a lower bound on the optimum.
    pub cost: f64,
    pub paths: usize,
    pub cuts: usize,
    pub nodes: usize,
    pub elapsed_ms: u64,
    pub added_paths: usize,
    pub added_cuts: usize,
    pub expanded: usize,
}

impl IterationReport {
    /// `iter,cost,|P|,|C|,|S|,ms`
    pub fn log_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.iteration, self.cost, self.paths, self.cuts, self.nodes, self.elapsed_ms
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactResult {
    pub status: SolveStatus,
    pub tree: PolicyTree,
    pub cost: f64,
    pub reports: Vec<IterationReport>,
    pub paths: Vec<Certificate>,
    pub cuts: Vec<Certificate>,
}

fn project(c: Certificate, base: &Belief) -> Certificate {
    let edges = c.edges.into_iter().filter(|&e| base.is_hidden(e)).collect();
    Certificate { kind: c.kind, edges }
}

fn node_belief(tree: &PolicyTree, node: usize, base: &Belief) -> Belief {
    let (on, off) = tree.route_answers(node);
    let mut b = base.clone();
    for e in on {
        b = b.with(e, EdgeState::On);
    }
    for e in off {
        b = b.with(e, EdgeState::Off);
    }
    b
}

/// Certificates to add for first-time Done nodes whose claim rests on `P`
/// or `C` alone rather than on a real certificate.
pub fn grow_certificates(
    tree: &PolicyTree,
    g: &GraphInstance,
    base: &Belief,
    paths: &[Certificate],
    cuts: &[Certificate],
) -> Result<(Vec<Certificate>, Vec<Certificate>), SolveError> {
    let mut new_paths: Vec<Certificate> = Vec::new();
    let mut new_cuts: Vec<Certificate> = Vec::new();
    for i in 0..tree.structure.len() {
        if !tree.is_first_done(i) {
            continue;
        }
        let (on, off) = tree.route_answers(i);
        let belief = node_belief(tree, i, base);
        let status = certificate_status(g, &belief)?;
        let paths_gone = paths.iter().all(|c| c.edges.iter().any(|e| off.contains(e)));
        let cuts_gone = cuts.iter().all(|c| c.edges.iter().any(|e| on.contains(e)));
        if paths_gone && !matches!(status, Status::CutFound(_)) {
            if let Some((c, _)) = min_hidden_path(g, &belief) {
                let c = project(c, base);
                if !paths.contains(&c) && !new_paths.contains(&c) {
                    new_paths.push(c);
                }
            }
        }
        if cuts_gone && !matches!(status, Status::PathFound(_)) {
            if let Some((c, _)) = min_hidden_cut(g, &belief) {
                let c = project(c, base);
                if !cuts.contains(&c) && !new_cuts.contains(&c) {
                    new_cuts.push(c);
                }
            }
        }
    }
    Ok((new_paths, new_cuts))
}

/// Attaches children to every query leaf above depth `budget`.
pub fn grow_structure(tree: &PolicyTree, budget: usize) -> (TreeStructure, usize) {
    let s = &tree.structure;
    let leaves: Vec<usize> = s
        .leaves()
        .filter(|&i| matches!(tree.label(i), NodeLabel::Query(_)) && s.depth(i) < budget)
        .collect();
    let grown = s.expand(&leaves).expect("leaves belong to the structure");
    (grown, leaves.len())
}

/// Stepwise exact solver; each [`ExactSolver::step`] runs one iteration.
pub struct ExactSolver<'a> {
    g: &'a GraphInstance,
    base: Belief,
    backend: &'a dyn SolverBackend,
    paths: Vec<Certificate>,
    cuts: Vec<Certificate>,
    structure: TreeStructure,
    best: Option<(PolicyTree, f64)>,
    iteration: usize,
    converged: bool,
}

impl<'a> ExactSolver<'a> {
    /// Solver for `g` from `base`, with `g.budget` queries left.
    pub fn new(
        g: &'a GraphInstance,
        base: &Belief,
        config: &ExactConfig,
        backend: &'a dyn SolverBackend,
    ) -> Result<Self, SolveError> {
        let status = certificate_status(g, base)?;
        let mut solver = Self {
            g,
            base: base.clone(),
            backend,
            paths: Vec::new(),
            cuts: Vec::new(),
            structure: TreeStructure::root(),
            best: None,
            iteration: 0,
            converged: false,
        };
        if !status.is_open() || g.budget == 0 {
            let label = if status.is_open() { NodeLabel::Limit } else { NodeLabel::Done };
            let tree = PolicyTree::new(TreeStructure::root(), vec![label], g.p).expect("one label");
            solver.best = Some((tree, 0.0));
            solver.converged = true;
            return Ok(solver);
        }
        let initial = |given: &Option<Vec<Certificate>>, found: Option<(Certificate, usize)>| match given {
            Some(v) => v.iter().cloned().map(|c| project(c, base)).collect(),
            None => found.map(|(c, _)| project(c, base)).into_iter().collect(),
        };
        solver.paths = initial(&config.initial_paths, min_hidden_path(g, base));
        solver.cuts = initial(&config.initial_cuts, min_hidden_cut(g, base));
        solver.structure = TreeStructure::complete(config.initial_layers.clamp(1, g.budget + 1));
        Ok(solver)
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn paths(&self) -> &[Certificate] {
        &self.paths
    }

    pub fn cuts(&self) -> &[Certificate] {
        &self.cuts
    }

    pub fn structure(&self) -> &TreeStructure {
        &self.structure
    }

    /// Last solved tree and its cost.
    pub fn best(&self) -> Option<&(PolicyTree, f64)> {
        self.best.as_ref()
    }

    /// Solves the current program and grows `P`, `C` and `S`.
    pub fn step(&mut self, stop: &dyn Fn() -> bool) -> Result<IterationReport, SolveError> {
        self.iteration += 1;
        if self.converged {
            let cost = self.best.as_ref().map_or(0.0, |b| b.1);
            return Ok(self.report(cost, 0, 0, 0));
        }
        let ip = build_ip(&self.structure, &self.paths, &self.cuts, &self.g.graph, self.g.p, self.g.budget);
        let (tree, cost) = solve_optimal_tree(&ip, self.backend, stop)?;
        let (new_paths, new_cuts) = grow_certificates(&tree, self.g, &self.base, &self.paths, &self.cuts)?;
        let (grown, expanded) = grow_structure(&tree, self.g.budget);
        let report = self.report(cost, new_paths.len(), new_cuts.len(), expanded);
        self.converged = new_paths.is_empty() && new_cuts.is_empty() && expanded == 0;
        self.paths.extend(new_paths);
        self.cuts.extend(new_cuts);
        self.structure = grown;
        self.best = Some((tree, cost));
        Ok(report)
    }

    fn report(&self, cost: f64, added_paths: usize, added_cuts: usize, expanded: usize) -> IterationReport {
        IterationReport {
            iteration: self.iteration,
            cost,
            paths: self.paths.len(),
            cuts: self.cuts.len(),
            nodes: self.structure.len(),
            elapsed_ms: 0,
            added_paths,
            added_cuts,
            expanded,
        }
    }

    fn into_result(self, reports: Vec<IterationReport>) -> Result<ExactResult, SolveError> {
        let status = if self.converged {
            SolveStatus::Optimal
        } else {
            SolveStatus::LowerBoundOnly
        };
        let (tree, cost) = self.best.ok_or(SolveError::Interrupted)?;
        Ok(ExactResult {
            status,
            tree: tree.pruned(),
            cost,
            reports,
            paths: self.paths,
            cuts: self.cuts,
        })
    }
}

/// Runs the exact algorithm on `g` from the fresh belief.
pub fn solve(
    g: &GraphInstance,
    config: &ExactConfig,
    backend: &dyn SolverBackend,
    clock: &dyn Clock,
    on_report: &mut dyn FnMut(&IterationReport),
) -> Result<ExactResult, SolveError> {
    solve_from(g, &g.fresh_belief(), config, backend, clock, &|| false, on_report)
}

/// Runs the exact algorithm from `base` until convergence, the iteration
/// cap, the time budget or `cancel`. An interrupted program leaves the last
/// completed iteration's cost as the bound; interruption before the first
/// iteration completes is an error.
pub fn solve_from(
    g: &GraphInstance,
    base: &Belief,
    config: &ExactConfig,
    backend: &dyn SolverBackend,
    clock: &dyn Clock,
    cancel: &dyn Fn() -> bool,
    on_report: &mut dyn FnMut(&IterationReport),
) -> Result<ExactResult, SolveError> {
    let start = clock.now_ms();
    let expired = || cancel() || clock.now_ms().saturating_sub(start) >= config.time_budget_ms;
    let mut solver = ExactSolver::new(g, base, config, backend)?;
    let mut reports = Vec::new();
    if solver.is_converged() {
        let mut report = solver.step(&expired)?;
        report.elapsed_ms = clock.now_ms().saturating_sub(start);
        on_report(&report);
        reports.push(report);
        return solver.into_result(reports);
    }
    while !solver.is_converged() && solver.iteration() < config.max_iterations {
        match solver.step(&expired) {
            Ok(mut report) => {
                report.elapsed_ms = clock.now_ms().saturating_sub(start);
                on_report(&report);
                reports.push(report);
            }
            Err(SolveError::Interrupted) => break,
            Err(e) => return Err(e),
        }
        if expired() {
            break;
        }
    }
    solver.into_result(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{triangle, serial2};
    use crate::ip::StructuredBackend;
    use crate::NoClock;

    #[test]
    fn triangle_is_optimal() {
        let g = triangle();
        let r = solve(&g, &ExactConfig::default(), &StructuredBackend, &NoClock, &mut |_| {}).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.cost, 1.75);
        assert_eq!(r.tree.to_text(&g.graph), "Q:a(DONE,Q:b(Q:c(DONE,DONE),DONE))");
    }

    #[test]
    fn serial_pair_costs_one_and_a_half() {
        let g = serial2();
        let r = solve(&g, &ExactConfig::default(), &StructuredBackend, &NoClock, &mut |_| {}).unwrap();
        assert_eq!((r.status, r.cost), (SolveStatus::Optimal, 1.5));
    }

    #[test]
    fn decided_and_zero_budget() {
        let g = triangle();
        let a = g.graph.edge_id("a").unwrap();
        let base = g.fresh_belief().with(a, EdgeState::On);
        let r = solve_from(&g, &base, &ExactConfig::default(), &StructuredBackend, &NoClock, &|| false, &mut |_| {})
            .unwrap();
        assert_eq!(r.tree.labels, [NodeLabel::Done]);
        let r = solve(&g.with_budget(0), &ExactConfig::default(), &StructuredBackend, &NoClock, &mut |_| {}).unwrap();
        assert_eq!((r.tree.labels.as_slice(), r.cost), ([NodeLabel::Limit].as_slice(), 0.0));
    }

    #[test]
    fn iteration_cap_gives_a_bound() {
        let g = triangle();
        let config = ExactConfig {
            max_iterations: 1,
            initial_layers: 1,
            ..ExactConfig::default()
        };
        let r = solve(&g, &config, &StructuredBackend, &NoClock, &mut |_| {}).unwrap();
        assert_eq!(r.status, SolveStatus::LowerBoundOnly);
        assert!(r.cost <= 1.75);
        assert_eq!(r.reports[0].log_line(), "1,1,1,1,1,0");
    }

    struct Interrupting;

    impl SolverBackend for Interrupting {
        fn name(&self) -> &str {
            "interrupting"
        }

        fn capabilities(&self) -> crate::ip::Capabilities {
            StructuredBackend.capabilities()
        }

        fn solve(&self, _: &crate::ip::IpInstance, _: &dyn Fn() -> bool) -> Result<crate::ip::IpSolution, SolveError> {
            Err(SolveError::Interrupted)
        }
    }

    #[test]
    fn interrupted_before_first_iteration_is_an_error() {
        let g = triangle();
        let r = solve(&g, &ExactConfig::default(), &Interrupting, &NoClock, &mut |_| {});
        assert_eq!(r.unwrap_err(), SolveError::Interrupted);
    }
}
