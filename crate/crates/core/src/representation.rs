//! Spanning representations, the score map and zonotope membership.
//!
//! A spanning representation assigns every edge an integer vector in `ℝⁿ`.
//! The canonical construction sends the edges of a spanning tree to the
//! standard basis and every other edge to the signed sum of tree directions
//! along its tree path. Equivalently, each vertex gets a potential (the signed
//! sum of tree directions on the root→vertex path) and an edge's direction is
//! `potential(head) − potential(tail)`, which makes every cycle sum vanish
//! exactly.

use std::collections::VecDeque;
use std::ops::{Deref, Sub};

use crate::error::{Error, Result};
use crate::lp::{self, BoxLp, LpOutcome};
use crate::network::{CreditNetwork, EscrowConfiguration, Transaction};

/// A point of the configuration space `ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePoint {
    pub coords: Vec<f64>,
}

impl StatePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        StatePoint { coords }
    }

    pub fn zeros(n: usize) -> Self {
        StatePoint { coords: vec![0.0; n] }
    }

    /// `self + t·v`.
    pub fn offset(&self, v: &[f64], t: f64) -> StatePoint {
        StatePoint { coords: self.coords.iter().zip(v).map(|(a, b)| a + t * b).collect() }
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.coords.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

impl Deref for StatePoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.coords
    }
}

impl Sub<&[f64]> for &StatePoint {
    type Output = StatePoint;

    fn sub(self, v: &[f64]) -> StatePoint {
        self.offset(v, -1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningRepresentation {
    basis_tree: Vec<usize>,
    potentials: Vec<Vec<i64>>,
    directions: Vec<Vec<i64>>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.0[v] != v {
            self.0[v] = self.0[self.0[v]];
            v = self.0[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// BFS spanning tree from vertex 0, edges in discovery order.
pub fn bfs_tree(net: &CreditNetwork, keep: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
    let n = net.vertex_count();
    if n == 0 {
        return None;
    }
    let adj = net.adjacency();
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut tree = Vec::with_capacity(n - 1);
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        for &e in &adj[v] {
            if !keep(e) {
                continue;
            }
            let w = net.edge(e).other(v);
            if !seen[w] {
                seen[w] = true;
                tree.push(e);
                queue.push_back(w);
            }
        }
    }
    (tree.len() == n - 1).then_some(tree)
}

/// Whether `edges` is a spanning tree of `net`.
pub fn is_spanning_tree(net: &CreditNetwork, edges: &[usize]) -> bool {
    if edges.len() != net.dimension() || edges.iter().any(|&e| e >= net.edge_count()) {
        return false;
    }
    let mut uf = UnionFind::new(net.vertex_count());
    edges.iter().all(|&e| uf.union(net.edge(e).tail, net.edge(e).head))
}

impl SpanningRepresentation {
    /// Builds the representation sending `tree_hint` (or the BFS tree from
    /// the first vertex) to the standard basis, in order.
    pub fn build(net: &CreditNetwork, tree_hint: Option<&[usize]>) -> Result<Self> {
        if !net.is_connected() {
            return Err(Error::Disconnected);
        }
        let basis_tree = match tree_hint {
            Some(hint) => {
                if !is_spanning_tree(net, hint) {
                    return Err(Error::Precondition("tree hint is not a spanning tree".into()));
                }
                hint.to_vec()
            }
            None => bfs_tree(net, |_| true).ok_or(Error::Disconnected)?,
        };

        let n = net.dimension();
        let mut slot = vec![None; net.edge_count()];
        for (i, &e) in basis_tree.iter().enumerate() {
            slot[e] = Some(i);
        }
        let adj = net.adjacency();
        let mut potentials: Vec<Option<Vec<i64>>> = vec![None; net.vertex_count()];
        potentials[0] = Some(vec![0; n]);
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            for &e in &adj[v] {
                let Some(i) = slot[e] else { continue };
                let w = net.edge(e).other(v);
                if potentials[w].is_some() {
                    continue;
                }
                let mut p = potentials[v].clone().expect("visited vertex has a potential");
                p[i] += if net.edge(e).tail == v { 1 } else { -1 };
                potentials[w] = Some(p);
                queue.push_back(w);
            }
        }
        let potentials: Vec<Vec<i64>> = potentials
            .into_iter()
            .map(|p| p.expect("spanning tree reaches every vertex"))
            .collect();
        let directions = net
            .edges()
            .iter()
            .map(|e| {
                potentials[e.head]
                    .iter()
                    .zip(&potentials[e.tail])
                    .map(|(h, t)| h - t)
                    .collect()
            })
            .collect();
        Ok(SpanningRepresentation { basis_tree, potentials, directions })
    }

    pub fn canonical(net: &CreditNetwork) -> Result<Self> {
        SpanningRepresentation::build(net, None)
    }

    pub fn dimension(&self) -> usize {
        self.potentials.first().map_or(0, Vec::len)
    }

    pub fn basis_tree(&self) -> &[usize] {
        &self.basis_tree
    }

    pub fn direction(&self, e: usize) -> &[i64] {
        &self.directions[e]
    }

    pub fn directions(&self) -> &[Vec<i64>] {
        &self.directions
    }

    /// Direction of any path from `x` to `y`.
    pub fn pair_direction(&self, x: usize, y: usize) -> Vec<i64> {
        self.potentials[y]
            .iter()
            .zip(&self.potentials[x])
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Signed sum of directions along consecutive vertices of `path`.
    /// Parallel edges share a direction, so the edge choice is immaterial.
    pub fn direction_of_path(&self, net: &CreditNetwork, path: &[usize]) -> Result<Vec<i64>> {
        let mut sum = vec![0i64; self.dimension()];
        for &v in path {
            net.check_vertex(v)?;
        }
        for w in path.windows(2) {
            let e = *net.edges_between(w[0], w[1]).first().ok_or_else(|| {
                Error::Precondition(format!(
                    "`{}` and `{}` are not adjacent",
                    net.vertex_name(w[0]),
                    net.vertex_name(w[1])
                ))
            })?;
            let sign = if net.edge(e).tail == w[0] { 1 } else { -1 };
            for (s, d) in sum.iter_mut().zip(&self.directions[e]) {
                *s += sign * d;
            }
        }
        Ok(sum)
    }

    /// `S_D(w) = Σ_e owned(e)·D(e)` over positively oriented edges.
    pub fn score(&self, cfg: &EscrowConfiguration) -> StatePoint {
        let mut z = vec![0.0; self.dimension()];
        for (d, &w) in self.directions.iter().zip(cfg.owned()) {
            for (zi, &di) in z.iter_mut().zip(d) {
                *zi += w * di as f64;
            }
        }
        StatePoint::new(z)
    }

    /// The vector `k·D(p)` of a transaction along any path `p` from sender to receiver.
    pub fn transaction_vector(&self, net: &CreditNetwork, tx: &Transaction) -> Result<Vec<f64>> {
        net.check_vertex(tx.sender)?;
        net.check_vertex(tx.receiver)?;
        Ok(self
            .pair_direction(tx.sender, tx.receiver)
            .into_iter()
            .map(|d| tx.amount * d as f64)
            .collect())
    }

    /// Capacity-scaled edge directions `c(e)·D(e)`.
    pub fn generators(&self, net: &CreditNetwork) -> Vec<Vec<f64>> {
        self.directions
            .iter()
            .zip(net.edges())
            .map(|(d, e)| d.iter().map(|&x| e.capacity * x as f64).collect())
            .collect()
    }

    pub fn zonotope(&self, net: &CreditNetwork) -> Zonotope {
        Zonotope::new(self.generators(net), self.dimension())
    }

    pub fn membership(&self, net: &CreditNetwork, z: &[f64]) -> Result<bool> {
        self.zonotope(net).contains(z)
    }

    /// A configuration in the cycle-equivalence class represented by `z`.
    pub fn point_to_configuration(&self, net: &CreditNetwork, z: &[f64]) -> Result<EscrowConfiguration> {
        let lambda = self.zonotope(net).witness(z)?.ok_or(Error::NotInZonotope)?;
        let owned = lambda
            .iter()
            .zip(net.edges())
            .map(|(l, e)| (l * e.capacity).clamp(0.0, e.capacity))
            .collect();
        EscrowConfiguration::new(net, owned)
    }
}

/// Minkowski sum of the segments `[0, gᵢ]` in `ℝᵈ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    generators: Vec<Vec<f64>>,
    dim: usize,
    reach: f64,
}

impl Zonotope {
    pub fn new(generators: Vec<Vec<f64>>, dim: usize) -> Self {
        let reach = generators.iter().map(|g| norm(g)).sum();
        Zonotope { generators, dim, reach }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    /// Sum of generator lengths; bounds the diameter.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// `½ Σ gᵢ`, the center of symmetry.
    pub fn centroid(&self) -> StatePoint {
        let mut c = vec![0.0; self.dim];
        for g in &self.generators {
            for (ci, gi) in c.iter_mut().zip(g) {
                *ci += 0.5 * gi;
            }
        }
        StatePoint::new(c)
    }

    /// `Σ gᵢ`, the corner opposite the origin.
    pub fn far_corner(&self) -> StatePoint {
        let mut c = self.centroid();
        c.coords.iter_mut().for_each(|x| *x *= 2.0);
        c
    }

    fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::Precondition(format!("point has {} coordinates, expected {}", z.len(), self.dim)));
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::Precondition("point has non-finite coordinates".into()));
        }
        Ok(())
    }

    /// Coefficients `λ ∈ [0,1]^m` with `Σ λᵢ gᵢ = z`, if any.
    pub fn witness(&self, z: &[f64]) -> Result<Option<Vec<f64>>> {
        self.check_point(z)?;
        let upper = vec![1.0; self.generators.len()];
        Ok(lp::feasible(&self.generators, z, &upper)?)
    }

    pub fn contains(&self, z: &[f64]) -> Result<bool> {
        Ok(self.witness(z)?.is_some())
    }

    /// Largest (or smallest) `t` such that `z + t·d ∈ Z`.
    pub fn extent(&self, z: &[f64], d: &[f64], maximize: bool) -> Result<f64> {
        self.check_point(z)?;
        let dn = norm(d);
        if dn == 0.0 || d.len() != self.dim {
            return Err(Error::Precondition("direction must be a nonzero vector of the right dimension".into()));
        }
        // t = s − L with s ∈ [0, 2L].
        let half = (self.reach + norm(z)) / dn + 1.0;
        let mut columns = self.generators.clone();
        columns.push(d.iter().map(|x| -x).collect());
        let rhs: Vec<f64> = z.iter().zip(d).map(|(zi, di)| zi - half * di).collect();
        let mut upper = vec![1.0; self.generators.len()];
        upper.push(2.0 * half);
        let mut objective = vec![0.0; self.generators.len()];
        objective.push(if maximize { 1.0 } else { -1.0 });
        let problem = BoxLp::from_columns(&columns, rhs, upper, objective);
        match lp::solve(&problem)? {
            LpOutcome::Optimal { x, .. } => Ok(x[self.generators.len()] - half),
            LpOutcome::Infeasible => Err(Error::NotInZonotope),
            LpOutcome::Unbounded => Err(Error::Lp(lp::LpError::Numerical("bounded chord LP unbounded".into()))),
        }
    }

    /// `(t_min, t_max)` with `z + t·d ∈ Z` exactly for `t` in the interval.
    pub fn chord(&self, z: &[f64], d: &[f64]) -> Result<(f64, f64)> {
        if !self.contains(z)? {
            return Err(Error::NotInZonotope);
        }
        let hi = self.extent(z, d, true)?;
        let lo = self.extent(z, d, false)?;
        Ok((lo.min(0.0), hi.max(0.0)))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
