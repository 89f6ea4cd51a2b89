//! Boykov-Kolmogorov max-flow on a graph with implicit terminals.
//!
//! Nodes carry a signed terminal capacity: positive means residual capacity
//! from the source, negative means residual capacity to the sink. Arcs are
//! stored in pairs; the sister of arc `a` is `a ^ 1`.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parent {
    /// Free node, in neither search tree.
    None,
    Terminal,
    Orphan,
    /// Arc from this node towards its parent.
    Arc(usize),
}

#[derive(Debug, Clone)]
struct Node {
    arcs: Vec<usize>,
    parent: Parent,
    in_sink_tree: bool,
    tr_cap: f64,
    added_tr: f64,
    ts: usize,
    dist: usize,
    active: bool,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    nodes: Vec<Node>,
    head: Vec<usize>,
    r_cap: Vec<f64>,
    cap: Vec<f64>,
    flow: f64,
    time: usize,
    queue: VecDeque<usize>,
    orphans: VecDeque<usize>,
    solved: bool,
}

fn check_cap(c: f64) {
    assert!(c.is_finite() && c >= 0.0, "capacity must be finite and non-negative, got {c}");
}

impl FlowNetwork {
    pub fn new(num_nodes: usize) -> Self {
        let node = Node {
            arcs: Vec::new(),
            parent: Parent::None,
            in_sink_tree: false,
            tr_cap: 0.0,
            added_tr: 0.0,
            ts: 0,
            dist: 0,
            active: false,
        };
        Self {
            nodes: vec![node; num_nodes],
            head: Vec::new(),
            r_cap: Vec::new(),
            cap: Vec::new(),
            flow: 0.0,
            time: 0,
            queue: VecDeque::new(),
            orphans: VecDeque::new(),
            solved: false,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Add capacities `source -> i` and `i -> sink`. The common part flows
    /// straight through and is counted in the flow value immediately.
    ///
    /// # Panics
    /// On negative or non-finite capacities, or after [`max_flow`](Self::max_flow).
    pub fn add_terminal_weights(&mut self, i: usize, to_source: f64, to_sink: f64) {
        assert!(!self.solved, "network already solved");
        check_cap(to_source);
        check_cap(to_sink);
        let (mut cs, mut ct) = (to_source, to_sink);
        let delta = self.nodes[i].tr_cap;
        if delta > 0.0 {
            cs += delta;
        } else {
            ct -= delta;
        }
        self.flow += cs.min(ct);
        self.nodes[i].tr_cap = cs - ct;
        self.nodes[i].added_tr += to_source - to_sink;
    }

    /// Add arc `i -> j` with capacity `cap` and its reverse with `rev_cap`.
    /// Returns the id of the forward arc.
    ///
    /// # Panics
    /// On self-loops, negative or non-finite capacities, or after solving.
    pub fn add_edge(&mut self, i: usize, j: usize, cap: f64, rev_cap: f64) -> usize {
        assert!(!self.solved, "network already solved");
        assert!(i != j, "self-loop on node {i}");
        check_cap(cap);
        check_cap(rev_cap);
        let a = self.head.len();
        self.head.extend([j, i]);
        self.r_cap.extend([cap, rev_cap]);
        self.cap.extend([cap, rev_cap]);
        self.nodes[i].arcs.push(a);
        self.nodes[j].arcs.push(a + 1);
        a
    }

    /// Net flow along arc `a` in its forward direction (negative when flow
    /// runs along the reverse arc).
    pub fn edge_flow(&self, a: usize) -> f64 {
        self.cap[a] - self.r_cap[a]
    }

    /// Flow entering `i` from the source minus flow leaving `i` to the sink.
    pub fn terminal_net_inflow(&self, i: usize) -> f64 {
        self.nodes[i].added_tr - self.nodes[i].tr_cap
    }

    /// Arc ids leaving `i`, including reverse arcs of edges into `i`.
    pub fn arcs_of(&self, i: usize) -> &[usize] {
        &self.nodes[i].arcs
    }

    pub fn arc_head(&self, a: usize) -> usize {
        self.head[a]
    }

    pub fn flow(&self) -> f64 {
        self.flow
    }

    /// True if `i` ends on the source side of the minimum cut. Only nodes
    /// that reach the sink in the residual graph go to the sink side.
    pub fn in_source_set(&self, i: usize) -> bool {
        let n = &self.nodes[i];
        n.parent == Parent::None || !n.in_sink_tree
    }

    fn activate(&mut self, i: usize) {
        if !self.nodes[i].active {
            self.nodes[i].active = true;
            self.queue.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<usize> {
        while let Some(i) = self.queue.pop_front() {
            self.nodes[i].active = false;
            if self.nodes[i].parent != Parent::None {
                return Some(i);
            }
        }
        None
    }

    /// Compute the maximum flow. Subsequent calls return the same value.
    pub fn max_flow(&mut self) -> f64 {
        if self.solved {
            return self.flow;
        }
        self.solved = true;
        for i in 0..self.nodes.len() {
            let tr = self.nodes[i].tr_cap;
            if tr != 0.0 {
                let n = &mut self.nodes[i];
                n.in_sink_tree = tr < 0.0;
                n.parent = Parent::Terminal;
                n.ts = 0;
                n.dist = 1;
                self.activate(i);
            }
        }
        while let Some(i) = self.next_active() {
            let Some(mid) = self.grow(i) else { continue };
            // Keep expanding from `i` after augmenting.
            self.nodes[i].active = true;
            self.queue.push_front(i);
            self.time += 1;
            self.augment(mid);
            self.adopt();
        }
        self.flow
    }

    /// Grow the tree of `i` by one layer; return an arc from the source tree
    /// to the sink tree if the trees meet.
    fn grow(&mut self, i: usize) -> Option<usize> {
        let sink = self.nodes[i].in_sink_tree;
        for k in 0..self.nodes[i].arcs.len() {
            let a = self.nodes[i].arcs[k];
            let residual = if sink { self.r_cap[a ^ 1] } else { self.r_cap[a] };
            if residual <= 0.0 {
                continue;
            }
            let j = self.head[a];
            if self.nodes[j].parent == Parent::None {
                let (ts, dist) = (self.nodes[i].ts, self.nodes[i].dist);
                let nj = &mut self.nodes[j];
                nj.in_sink_tree = sink;
                nj.parent = Parent::Arc(a ^ 1);
                nj.ts = ts;
                nj.dist = dist + 1;
                self.activate(j);
            } else if self.nodes[j].in_sink_tree != sink {
                return Some(if sink { a ^ 1 } else { a });
            } else if self.nodes[j].ts <= self.nodes[i].ts && self.nodes[j].dist > self.nodes[i].dist {
                let (ts, dist) = (self.nodes[i].ts, self.nodes[i].dist);
                let nj = &mut self.nodes[j];
                nj.parent = Parent::Arc(a ^ 1);
                nj.ts = ts;
                nj.dist = dist + 1;
            }
        }
        None
    }

    fn set_orphan(&mut self, i: usize) {
        self.nodes[i].parent = Parent::Orphan;
        self.orphans.push_back(i);
    }

    /// Push the bottleneck flow along the path through arc `mid`.
    fn augment(&mut self, mid: usize) {
        let mut bottleneck = self.r_cap[mid];
        let mut i = self.head[mid ^ 1];
        loop {
            match self.nodes[i].parent {
                Parent::Arc(a) => {
                    bottleneck = bottleneck.min(self.r_cap[a ^ 1]);
                    i = self.head[a];
                }
                _ => {
                    bottleneck = bottleneck.min(self.nodes[i].tr_cap);
                    break;
                }
            }
        }
        let mut i = self.head[mid];
        loop {
            match self.nodes[i].parent {
                Parent::Arc(a) => {
                    bottleneck = bottleneck.min(self.r_cap[a]);
                    i = self.head[a];
                }
                _ => {
                    bottleneck = bottleneck.min(-self.nodes[i].tr_cap);
                    break;
                }
            }
        }

        self.r_cap[mid ^ 1] += bottleneck;
        self.r_cap[mid] -= bottleneck;
        let mut i = self.head[mid ^ 1];
        loop {
            match self.nodes[i].parent {
                Parent::Arc(a) => {
                    self.r_cap[a] += bottleneck;
                    self.r_cap[a ^ 1] -= bottleneck;
                    if self.r_cap[a ^ 1] <= 0.0 {
                        self.set_orphan(i);
                    }
                    i = self.head[a];
                }
                _ => {
                    self.nodes[i].tr_cap -= bottleneck;
                    if self.nodes[i].tr_cap <= 0.0 {
                        self.set_orphan(i);
                    }
                    break;
                }
            }
        }
        let mut i = self.head[mid];
        loop {
            match self.nodes[i].parent {
                Parent::Arc(a) => {
                    self.r_cap[a ^ 1] += bottleneck;
                    self.r_cap[a] -= bottleneck;
                    if self.r_cap[a] <= 0.0 {
                        self.set_orphan(i);
                    }
                    i = self.head[a];
                }
                _ => {
                    self.nodes[i].tr_cap += bottleneck;
                    if self.nodes[i].tr_cap >= 0.0 {
                        self.set_orphan(i);
                    }
                    break;
                }
            }
        }
        self.flow += bottleneck;
    }

    /// Distance from `j` to its tree's terminal, marking the visited path
    /// with the current time stamp; `None` if the path reaches an orphan.
    fn origin_distance(&mut self, j: usize) -> Option<usize> {
        let mut d = 0usize;
        let mut k = j;
        loop {
            if self.nodes[k].ts == self.time {
                d += self.nodes[k].dist;
                break;
            }
            d += 1;
            match self.nodes[k].parent {
                Parent::Terminal => {
                    self.nodes[k].ts = self.time;
                    self.nodes[k].dist = 1;
                    break;
                }
                Parent::Arc(a) => k = self.head[a],
                _ => return None,
            }
        }
        let mut dd = d;
        let mut k = j;
        while self.nodes[k].ts != self.time {
            self.nodes[k].ts = self.time;
            self.nodes[k].dist = dd;
            dd -= 1;
            match self.nodes[k].parent {
                Parent::Arc(a) => k = self.head[a],
                _ => break,
            }
        }
        Some(d)
    }

    fn adopt(&mut self) {
        while let Some(i) = self.orphans.pop_front() {
            let sink = self.nodes[i].in_sink_tree;
            let mut best: Option<(usize, usize)> = None;
            for k in 0..self.nodes[i].arcs.len() {
                let a = self.nodes[i].arcs[k];
                // A new parent must reach `i` through residual capacity.
                let residual = if sink { self.r_cap[a] } else { self.r_cap[a ^ 1] };
                if residual <= 0.0 {
                    continue;
                }
                let j = self.head[a];
                if self.nodes[j].in_sink_tree != sink || self.nodes[j].parent == Parent::None {
                    continue;
                }
                if let Some(d) = self.origin_distance(j) {
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((a, d));
                    }
                }
            }
            if let Some((a, d)) = best {
                let n = &mut self.nodes[i];
                n.parent = Parent::Arc(a);
                n.ts = self.time;
                n.dist = d + 1;
                continue;
            }
            // No valid parent: free `i` and orphan its children.
            for k in 0..self.nodes[i].arcs.len() {
                let a = self.nodes[i].arcs[k];
                let j = self.head[a];
                if self.nodes[j].in_sink_tree != sink || self.nodes[j].parent == Parent::None {
                    continue;
                }
                let residual = if sink { self.r_cap[a] } else { self.r_cap[a ^ 1] };
                if residual > 0.0 {
                    self.activate(j);
                }
                if self.nodes[j].parent == Parent::Arc(a ^ 1) {
                    self.set_orphan(j);
                }
            }
            self.nodes[i].parent = Parent::None;
        }
    }
}

/// Max-flow between explicit terminals `s` and `t` of a general directed
/// network. Returns the flow value and, per node, whether it lies on the
/// source side of a minimum cut.
pub fn max_flow_st(num_nodes: usize, s: usize, t: usize, arcs: &[(usize, usize, f64)]) -> (f64, Vec<bool>) {
    assert!(s != t && s < num_nodes && t < num_nodes, "invalid terminals");
    let inner: Vec<usize> = (0..num_nodes).filter(|&v| v != s && v != t).collect();
    let mut index = vec![usize::MAX; num_nodes];
    for (k, &v) in inner.iter().enumerate() {
        index[v] = k;
    }
    let mut net = FlowNetwork::new(inner.len());
    let mut direct = 0.0;
    for &(u, v, c) in arcs {
        check_cap(c);
        match (u == s, u == t, v == s, v == t) {
            (true, _, _, true) => direct += c,
            (true, _, false, false) => net.add_terminal_weights(index[v], c, 0.0),
            (false, false, _, true) => net.add_terminal_weights(index[u], 0.0, c),
            (false, false, false, false) if u != v => {
                net.add_edge(index[u], index[v], c, 0.0);
            }
            // Arcs into the source, out of the sink, or self-loops carry no s-t flow.
            _ => {}
        }
    }
    let flow = net.max_flow() + direct;
    let side = (0..num_nodes)
        .map(|v| v == s || (v != t && net.in_source_set(index[v])))
        .collect();
    (flow, side)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_arc() {
        let (f, side) = max_flow_st(2, 0, 1, &[(0, 1, 3.0)]);
        assert_eq!(f, 3.0);
        assert_eq!(side, vec![true, false]);
    }

    #[test]
    fn diamond() {
        let arcs = [(0, 2, 2.0), (0, 3, 2.0), (2, 1, 1.0), (3, 1, 1.0)];
        let (f, side) = max_flow_st(4, 0, 1, &arcs);
        assert_eq!(f, 2.0);
        assert!(side[2] && side[3]);
    }

    #[test]
    fn terminal_trick_counts_shared_capacity() {
        let mut net = FlowNetwork::new(1);
        net.add_terminal_weights(0, 5.0, 3.0);
        net.add_terminal_weights(0, 0.0, 4.0);
        assert_eq!(net.max_flow(), 5.0);
        assert!(!net.in_source_set(0));
        assert_eq!(net.terminal_net_inflow(0), 0.0);
    }

    #[test]
    fn chain_conserves_flow() {
        let mut net = FlowNetwork::new(3);
        net.add_terminal_weights(0, 4.0, 0.0);
        let a = net.add_edge(0, 1, 3.0, 0.0);
        let b = net.add_edge(1, 2, 5.0, 0.0);
        net.add_terminal_weights(2, 0.0, 10.0);
        assert_eq!(net.max_flow(), 3.0);
        assert_eq!(net.edge_flow(a), 3.0);
        assert_eq!(net.edge_flow(b), 3.0);
        assert_eq!(net.terminal_net_inflow(0), 3.0);
        assert_eq!(net.terminal_net_inflow(2), -3.0);
        assert!(net.in_source_set(0) && !net.in_source_set(1));
    }
}
