//! Integral maximum flow (Dinic) with min-cut recovery.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
struct Edge {
    to: usize,
    rev: usize,
    cap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct EdgeKey {
    node: usize,
    slot: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    graph: Vec<Vec<Edge>>,
    original: Vec<(EdgeKey, u64)>,
    level: Vec<i32>,
    cursor: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            graph: vec![Vec::new(); nodes],
            original: Vec::new(),
            level: vec![-1; nodes],
            cursor: vec![0; nodes],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: u64) -> EdgeKey {
        let fwd = self.graph[from].len();
        let back = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Edge { to, rev: back, cap });
        self.graph[to].push(Edge {
            to: from,
            rev: fwd,
            cap: 0,
        });
        let key = EdgeKey { node: from, slot: fwd };
        self.original.push((key, cap));
        key
    }

    /// Flow currently routed along an edge returned by `add_edge`.
    pub fn flow_on(&self, key: EdgeKey) -> u64 {
        let e = self.graph[key.node][key.slot];
        self.graph[e.to][e.rev].cap
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for e in &self.graph[v] {
                if e.cap > 0 && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[v] + 1;
                    queue.push_back(e.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, limit: u64) -> u64 {
        if v == t {
            return limit;
        }
        while self.cursor[v] < self.graph[v].len() {
            let Edge { to, rev, cap } = self.graph[v][self.cursor[v]];
            if cap > 0 && self.level[v] < self.level[to] {
                let pushed = self.dfs(to, t, limit.min(cap));
                if pushed > 0 {
                    let slot = self.cursor[v];
                    self.graph[v][slot].cap -= pushed;
                    self.graph[to][rev].cap += pushed;
                    return pushed;
                }
            }
            self.cursor[v] += 1;
        }
        0
    }

    /// Maximum `s`-`t` flow; may be called again after adding edges to
    /// augment the current flow.
    pub fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let mut total = 0u64;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return total;
            }
            self.cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let f = self.dfs(s, t, u64::MAX);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
    }

    /// Nodes reachable from `s` in the residual graph: the source side of a
    /// minimum cut once `max_flow` has run.
    pub fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.graph.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for e in &self.graph[v] {
                if e.cap > 0 && !seen[e.to] {
                    seen[e.to] = true;
                    queue.push_back(e.to);
                }
            }
        }
        seen
    }

    #[cfg(test)]
    fn cut_capacity(&self, side: &[bool]) -> u64 {
        self.original
            .iter()
            .filter(|(k, _)| {
                let e = self.graph[k.node][k.slot];
                side[k.node] && !side[e.to]
            })
            .map(|&(_, c)| c)
            .sum()
    }
}
