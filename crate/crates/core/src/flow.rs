//! Dinic max-flow on small integer capacities.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug)]
struct Arc {
    to: u32,
    cap: u32,
}

pub(crate) struct FlowNetwork {
    arcs: Vec<Arc>,
    adj: Vec<Vec<u32>>,
    level: Vec<i32>,
    cursor: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            arcs: Vec::new(),
            adj: vec![Vec::new(); nodes],
            level: vec![0; nodes],
            cursor: vec![0; nodes],
        }
    }

    /// Adds `u -> v` with capacity `cap`; the paired arc gets `cap` too when
    /// `both_ways`, else zero. Arcs `2k` and `2k + 1` are mutual reverses.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: u32, both_ways: bool) {
        let k = self.arcs.len() as u32;
        self.arcs.push(Arc { to: v as u32, cap });
        self.arcs.push(Arc {
            to: u as u32,
            cap: if both_ways { cap } else { 0 },
        });
        self.adj[u].push(k);
        self.adj[v].push(k + 1);
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let arc = self.arcs[a as usize];
                if arc.cap > 0 && self.level[arc.to as usize] < 0 {
                    self.level[arc.to as usize] = self.level[u] + 1;
                    queue.push_back(arc.to as usize);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: u32) -> u32 {
        if u == t {
            return pushed;
        }
        while self.cursor[u] < self.adj[u].len() {
            let a = self.adj[u][self.cursor[u]] as usize;
            let Arc { to, cap } = self.arcs[a];
            let to = to as usize;
            if cap > 0 && self.level[to] == self.level[u] + 1 {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > 0 {
                    self.arcs[a].cap -= got;
                    self.arcs[a ^ 1].cap += got;
                    return got;
                }
            }
            self.cursor[u] += 1;
        }
        0
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> u32 {
        if s == t {
            return 0;
        }
        let mut total = 0;
        while self.bfs(s, t) {
            self.cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let f = self.dfs(s, t, u32::MAX);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }

    /// Nodes reachable from `s` along arcs with residual capacity.
    pub fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &a in &self.adj[u] {
                let arc = self.arcs[a as usize];
                if arc.cap > 0 && !seen[arc.to as usize] {
                    seen[arc.to as usize] = true;
                    stack.push(arc.to as usize);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond_flow() {
        let mut net = FlowNetwork::new(4);
        net.add_edge(0, 1, 1, false);
        net.add_edge(0, 2, 1, false);
        net.add_edge(1, 3, 1, false);
        net.add_edge(2, 3, 1, false);
        net.add_edge(1, 2, 5, false);
        assert_eq!(net.max_flow(0, 3), 2);
        assert_eq!(net.residual_reachable(0), [true, false, false, false]);
    }

    #[test]
    fn undirected_arcs_flow_both_ways() {
        let mut net = FlowNetwork::new(3);
        net.add_edge(1, 0, 2, true);
        net.add_edge(2, 1, 1, true);
        assert_eq!(net.max_flow(0, 2), 1);
    }
}
