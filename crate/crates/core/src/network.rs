//! Credit network topology, escrow configurations and transaction feasibility.
//!
//! Each edge `e = (tail, head)` with capacity `c(e)` carries an escrow split:
//! the tail owns `owned(e)` and the head owns `c(e) − owned(e)`. Viewed as a
//! directed graph, the edge is a pair of mutually reverse arcs whose
//! capacities are exactly the two ownership shares, so sending money is
//! pushing flow in a residual graph.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

/// Absolute slack used when comparing flow values.
pub const FLOW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.tail {
            self.head
        } else {
            self.tail
        }
    }

    pub fn joins(&self, a: usize, b: usize) -> bool {
        (self.tail == a && self.head == b) || (self.tail == b && self.head == a)
    }
}

/// Undirected multigraph with capacities. The stored `(tail, head)` order is
/// the positive orientation of the edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditNetwork {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    vertex_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
}

impl CreditNetwork {
    /// Builds a validated network from vertex ids and `(id, tail, head, capacity)` edges.
    pub fn new<V, E>(vertices: V, edges: E) -> Result<Self>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        E: IntoIterator<Item = (String, String, String, f64)>,
    {
        let mut net = CreditNetwork {
            vertices: Vec::new(),
            edges: Vec::new(),
            vertex_index: HashMap::new(),
            edge_index: HashMap::new(),
        };
        for v in vertices {
            let v = v.into();
            if net.vertex_index.contains_key(&v) {
                return Err(Error::DuplicateVertex(v));
            }
            net.vertex_index.insert(v.clone(), net.vertices.len());
            net.vertices.push(v);
        }
        for (id, tail, head, capacity) in edges {
            let t = net.vertex(&tail)?;
            let h = net.vertex(&head)?;
            net.push_edge(id, t, h, capacity)?;
        }
        Ok(net)
    }

    /// Vertices `v0..v{n-1}` and edges `e0..` given by vertex index.
    pub fn from_indexed(vertex_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let names: Vec<String> = (0..vertex_count).map(|i| format!("v{i}")).collect();
        let edges = edges.iter().enumerate().map(|(i, &(t, h, c))| {
            (
                format!("e{i}"),
                names.get(t).cloned().unwrap_or_else(|| format!("v{t}")),
                names.get(h).cloned().unwrap_or_else(|| format!("v{h}")),
                c,
            )
        });
        CreditNetwork::new(names.clone(), edges.collect::<Vec<_>>())
    }

    fn push_edge(&mut self, id: String, tail: usize, head: usize, capacity: f64) -> Result<()> {
        if self.edge_index.contains_key(&id) {
            return Err(Error::DuplicateEdge(id));
        }
        if !capacity.is_finite() || capacity < 0.0 {
            return Err(Error::InvalidCapacity { edge: id, capacity });
        }
        if tail == head {
            return Err(Error::SelfLoop(id));
        }
        self.edge_index.insert(id.clone(), self.edges.len());
        self.edges.push(Edge { id, tail, head, capacity });
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Ambient dimension `n = |V| − 1` of the configuration zonotope.
    pub fn dimension(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn vertex(&self, id: &str) -> Result<usize> {
        self.vertex_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn edge_by_id(&self, id: &str) -> Result<usize> {
        self.edge_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownEdge(id.to_string()))
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.capacity).collect()
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.vertices.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(format!("#{v}")))
        }
    }

    /// Edges (by index) joining `a` and `b`, in either orientation.
    pub fn edges_between(&self, a: usize, b: usize) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].joins(a, b)).collect()
    }

    /// Total capacity of all parallel edges joining `a` and `b`.
    pub fn capacity_between(&self, a: usize, b: usize) -> f64 {
        self.edges_between(a, b).iter().map(|&e| self.edges[e].capacity).sum()
    }

    /// Incident edge lists per vertex, in edge order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.tail].push(i);
            adj[e.head].push(i);
        }
        adj
    }

    /// Connectivity over all edges (zero-capacity edges included).
    pub fn is_connected(&self) -> bool {
        self.is_connected_by(|_| true)
    }

    /// Connectivity using only edges with positive capacity.
    pub fn is_connected_positive(&self) -> bool {
        self.is_connected_by(|e| e.capacity > 0.0)
    }

    fn is_connected_by(&self, keep: impl Fn(&Edge) -> bool) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &e in &adj[v] {
                if !keep(&self.edges[e]) {
                    continue;
                }
                let w = self.edges[e].other(v);
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.vertices.len()
    }

    /// Copy with one capacity replaced.
    pub fn with_capacity(&self, e: usize, capacity: f64) -> Result<Self> {
        if !capacity.is_finite() || capacity < 0.0 {
            return Err(Error::InvalidCapacity { edge: self.edges[e].id.clone(), capacity });
        }
        let mut net = self.clone();
        net.edges[e].capacity = capacity;
        Ok(net)
    }

    /// Copy with an extra edge appended.
    pub fn with_edge(&self, id: &str, tail: usize, head: usize, capacity: f64) -> Result<Self> {
        self.check_vertex(tail)?;
        self.check_vertex(head)?;
        let mut net = self.clone();
        net.push_edge(id.to_string(), tail, head, capacity)?;
        Ok(net)
    }

    /// Copy with `h` added to the capacity between `a` and `b`. The first
    /// existing parallel edge is boosted; otherwise a new edge is created.
    /// Returns the network and the index of the boosted edge.
    pub fn boosted(&self, a: usize, b: usize, h: f64) -> Result<(Self, usize)> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        if a == b {
            return Err(Error::Precondition("cannot boost a self-loop".into()));
        }
        match self.edges_between(a, b).first() {
            Some(&e) => Ok((self.with_capacity(e, self.edges[e].capacity + h)?, e)),
            None => {
                let mut id = format!("boost_{}_{}", self.vertices[a], self.vertices[b]);
                while self.edge_index.contains_key(&id) {
                    id.push('_');
                }
                let net = self.with_edge(&id, a, b, h)?;
                let e = net.edge_count() - 1;
                Ok((net, e))
            }
        }
    }

    /// Block (biconnected component) label of every positive-capacity edge;
    /// `None` for zero-capacity edges. Two edges lie on a common simple cycle
    /// exactly when they share a block and the block has more than one edge.
    pub fn edge_blocks(&self) -> Vec<Option<usize>> {
        let n = self.vertices.len();
        let adj = self.adjacency();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut block = vec![None; self.edges.len()];
        let mut stack: Vec<usize> = Vec::new();
        let mut timer = 0;
        let mut next_block = 0;

        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            // (vertex, parent edge, next adjacency position)
            let mut frames: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
            while let Some(frame) = frames.last_mut() {
                let (v, parent_edge, pos) = *frame;
                if pos < adj[v].len() {
                    frame.2 += 1;
                    let e = adj[v][pos];
                    if Some(e) == parent_edge || self.edges[e].capacity <= 0.0 {
                        continue;
                    }
                    let w = self.edges[e].other(v);
                    if disc[w] == usize::MAX {
                        stack.push(e);
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        frames.push((w, Some(e), 0));
                    } else if disc[w] < disc[v] {
                        stack.push(e);
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    frames.pop();
                    if let (Some(pe), Some(&(u, _, _))) = (parent_edge, frames.last()) {
                        low[u] = low[u].min(low[v]);
                        if low[v] >= disc[u] {
                            while let Some(e) = stack.pop() {
                                block[e] = Some(next_block);
                                if e == pe {
                                    break;
                                }
                            }
                            next_block += 1;
                        }
                    }
                }
            }
        }
        block
    }

    /// Whether two distinct edges lie on a common simple cycle (positive-capacity edges only).
    pub fn edges_share_cycle(&self, e1: usize, e2: usize) -> bool {
        if e1 == e2 {
            return false;
        }
        let blocks = self.edge_blocks();
        matches!((blocks[e1], blocks[e2]), (Some(a), Some(b)) if a == b)
    }
}

/// Ownership split of every edge: `owned[e]` belongs to the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct EscrowConfiguration {
    owned: Vec<f64>,
}

impl EscrowConfiguration {
    pub fn new(net: &CreditNetwork, owned: Vec<f64>) -> Result<Self> {
        if owned.len() != net.edge_count() {
            return Err(Error::InvalidConfiguration(format!(
                "expected {} entries, got {}",
                net.edge_count(),
                owned.len()
            )));
        }
        for (e, &w) in net.edges().iter().zip(&owned) {
            if !w.is_finite() || w < 0.0 || w > e.capacity {
                return Err(Error::InvalidConfiguration(format!(
                    "edge `{}` owns {w} of capacity {}",
                    e.id, e.capacity
                )));
            }
        }
        Ok(EscrowConfiguration { owned })
    }

    /// Every tail owns nothing.
    pub fn zero(net: &CreditNetwork) -> Self {
        EscrowConfiguration { owned: vec![0.0; net.edge_count()] }
    }

    /// Every tail owns the full capacity.
    pub fn full(net: &CreditNetwork) -> Self {
        EscrowConfiguration { owned: net.capacities() }
    }

    pub fn owned(&self) -> &[f64] {
        &self.owned
    }

    /// `w(u, v)` for the arc of edge `e` leaving `from`.
    pub fn share(&self, net: &CreditNetwork, e: usize, from: usize) -> f64 {
        let edge = net.edge(e);
        if from == edge.tail {
            self.owned[e]
        } else {
            edge.capacity - self.owned[e]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Transaction {
    pub sender: usize,
    pub receiver: usize,
    /// Negative amounts move money from receiver to sender.
    pub amount: f64,
}

impl Transaction {
    pub fn new(sender: usize, receiver: usize, amount: f64) -> Result<Self> {
        if sender == receiver {
            return Err(Error::Precondition("sender and receiver must differ".into()));
        }
        if !amount.is_finite() {
            return Err(Error::Precondition("transaction amount must be finite".into()));
        }
        Ok(Transaction { sender, receiver, amount })
    }

    pub fn by_name(net: &CreditNetwork, sender: &str, receiver: &str, amount: f64) -> Result<Self> {
        Transaction::new(net.vertex(sender)?, net.vertex(receiver)?, amount)
    }

    /// Same movement of money with a nonnegative amount.
    pub fn normalized(&self) -> Transaction {
        if self.amount < 0.0 {
            Transaction { sender: self.receiver, receiver: self.sender, amount: -self.amount }
        } else {
            *self
        }
    }

    pub fn reversed(&self) -> Transaction {
        Transaction { sender: self.receiver, receiver: self.sender, amount: self.amount }
    }

    fn check(&self, net: &CreditNetwork) -> Result<()> {
        net.check_vertex(self.sender)?;
        net.check_vertex(self.receiver)?;
        if self.sender == self.receiver {
            return Err(Error::Precondition("sender and receiver must differ".into()));
        }
        Ok(())
    }
}

/// Per-edge flow in each direction: `forward` runs tail→head.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
}

impl Flow {
    pub fn zero(net: &CreditNetwork) -> Self {
        Flow { forward: vec![0.0; net.edge_count()], backward: vec![0.0; net.edge_count()] }
    }

    /// Net tail→head flow on edge `e`.
    pub fn net(&self, e: usize) -> f64 {
        self.forward[e] - self.backward[e]
    }

    /// The same routing traversed in the opposite direction.
    pub fn reversed(&self) -> Flow {
        Flow { forward: self.backward.clone(), backward: self.forward.clone() }
    }

    /// Flow along a vertex path, using the first edge between consecutive vertices.
    pub fn along_path(net: &CreditNetwork, path: &[usize], amount: f64) -> Result<Flow> {
        let mut flow = Flow::zero(net);
        for w in path.windows(2) {
            let e = *net
                .edges_between(w[0], w[1])
                .first()
                .ok_or_else(|| Error::InvalidFlow(format!("vertices #{} and #{} are not adjacent", w[0], w[1])))?;
            if net.edge(e).tail == w[0] {
                flow.forward[e] += amount;
            } else {
                flow.backward[e] += amount;
            }
        }
        Ok(flow)
    }
}

/// Residual arc structure: arc `2e` is tail→head, arc `2e+1` head→tail.
struct Residual {
    head: Vec<usize>,
    cap: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn new(net: &CreditNetwork, cfg: &EscrowConfiguration) -> Self {
        let mut head = Vec::with_capacity(2 * net.edge_count());
        let mut cap = Vec::with_capacity(2 * net.edge_count());
        let mut adj = vec![Vec::new(); net.vertex_count()];
        for (i, e) in net.edges().iter().enumerate() {
            head.push(e.head);
            cap.push(cfg.owned[i]);
            adj[e.tail].push(2 * i);
            head.push(e.tail);
            cap.push(e.capacity - cfg.owned[i]);
            adj[e.head].push(2 * i + 1);
        }
        Residual { head, cap, adj }
    }

    fn levels(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &a in &self.adj[v] {
                let w = self.head[a];
                if self.cap[a] > 1e-15 && level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        (level[t] != usize::MAX).then_some(level)
    }

    fn augment(&mut self, v: usize, t: usize, limit: f64, level: &[usize], iter: &mut [usize]) -> f64 {
        if v == t {
            return limit;
        }
        while iter[v] < self.adj[v].len() {
            let a = self.adj[v][iter[v]];
            let w = self.head[a];
            if self.cap[a] > 1e-15 && level[w] == level[v] + 1 {
                let pushed = self.augment(w, t, limit.min(self.cap[a]), level, iter);
                if pushed > 0.0 {
                    self.cap[a] -= pushed;
                    self.cap[a ^ 1] += pushed;
                    return pushed;
                }
            }
            iter[v] += 1;
        }
        0.0
    }

    /// Dinic's algorithm, stopping once `limit` has been routed.
    fn max_flow(&mut self, s: usize, t: usize, limit: f64) -> f64 {
        let mut total = 0.0;
        while total < limit {
            let Some(level) = self.levels(s, t) else { break };
            let mut iter = vec![0; self.adj.len()];
            loop {
                let pushed = self.augment(s, t, limit - total, &level, &mut iter);
                if pushed <= 0.0 {
                    break;
                }
                total += pushed;
                if total >= limit {
                    break;
                }
            }
        }
        total
    }
}

/// Maximum amount `x` can send to `y`, with arc capacities `w(u, v)`.
pub fn max_sendable(net: &CreditNetwork, cfg: &EscrowConfiguration, x: usize, y: usize) -> Result<f64> {
    net.check_vertex(x)?;
    net.check_vertex(y)?;
    if x == y {
        return Err(Error::Precondition("sender and receiver must differ".into()));
    }
    Ok(Residual::new(net, cfg).max_flow(x, y, f64::INFINITY))
}

pub fn is_feasible(net: &CreditNetwork, cfg: &EscrowConfiguration, tx: &Transaction) -> Result<bool> {
    tx.check(net)?;
    let tx = tx.normalized();
    if tx.amount == 0.0 {
        return Ok(true);
    }
    Ok(max_sendable(net, cfg, tx.sender, tx.receiver)? >= tx.amount - FLOW_TOLERANCE)
}

/// A feasible routing of `tx`, obtained from an augmenting-path max-flow
/// stopped at the requested amount.
pub fn route_transaction(net: &CreditNetwork, cfg: &EscrowConfiguration, tx: &Transaction) -> Result<Flow> {
    tx.check(net)?;
    let norm = tx.normalized();
    let mut residual = Residual::new(net, cfg);
    let routed = residual.max_flow(norm.sender, norm.receiver, norm.amount);
    if routed < norm.amount - FLOW_TOLERANCE {
        return Err(Error::Infeasible {
            sender: net.vertex_name(tx.sender).to_string(),
            receiver: net.vertex_name(tx.receiver).to_string(),
            amount: tx.amount,
        });
    }
    let mut flow = Flow::zero(net);
    for e in 0..net.edge_count() {
        let moved = cfg.owned[e] - residual.cap[2 * e];
        if moved > 0.0 {
            flow.forward[e] = moved;
        } else {
            flow.backward[e] = -moved;
        }
    }
    Ok(flow)
}

/// Applies a routing of `tx`. The flow must conserve value at intermediate
/// vertices, deliver `tx.amount` net from sender to receiver, and respect the
/// ownership shares of `cfg`.
pub fn execute(net: &CreditNetwork, cfg: &EscrowConfiguration, tx: &Transaction, flow: &Flow) -> Result<EscrowConfiguration> {
    tx.check(net)?;
    if flow.forward.len() != net.edge_count() || flow.backward.len() != net.edge_count() {
        return Err(Error::InvalidFlow("flow length differs from edge count".into()));
    }
    let mut balance = vec![0.0; net.vertex_count()];
    for (e, edge) in net.edges().iter().enumerate() {
        let (f, b) = (flow.forward[e], flow.backward[e]);
        if f < 0.0 || b < 0.0 || !f.is_finite() || !b.is_finite() {
            return Err(Error::InvalidFlow(format!("edge `{}` has negative flow", edge.id)));
        }
        if f > cfg.owned[e] + FLOW_TOLERANCE {
            return Err(Error::InvalidFlow(format!(
                "edge `{}` forward flow {f} exceeds tail share {}",
                edge.id, cfg.owned[e]
            )));
        }
        if b > edge.capacity - cfg.owned[e] + FLOW_TOLERANCE {
            return Err(Error::InvalidFlow(format!(
                "edge `{}` backward flow {b} exceeds head share {}",
                edge.id,
                edge.capacity - cfg.owned[e]
            )));
        }
        balance[edge.tail] -= f - b;
        balance[edge.head] += f - b;
    }
    let norm = tx.normalized();
    for (v, &bal) in balance.iter().enumerate() {
        let expected = if v == norm.sender {
            -norm.amount
        } else if v == norm.receiver {
            norm.amount
        } else {
            0.0
        };
        if (bal - expected).abs() > FLOW_TOLERANCE {
            return Err(Error::InvalidFlow(format!(
                "vertex `{}` has net inflow {bal}, expected {expected}",
                net.vertex_name(v)
            )));
        }
    }
    let owned = net
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| (cfg.owned[e] - flow.net(e)).clamp(0.0, edge.capacity))
        .collect();
    Ok(EscrowConfiguration { owned })
}
