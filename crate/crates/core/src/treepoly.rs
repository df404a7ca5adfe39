//! The weighted spanning-tree polynomial `Γ(c) = Σ_T Π_{e∈T} c(e)`, its
//! contractions `Γ_{a=b}`, effective resistance and enumeration oracles.
//!
//! `Γ` is evaluated by the matrix-tree theorem: any principal cofactor of the
//! weighted Laplacian. Contracting vertex pairs relabels vertices and drops
//! the resulting self-loops, which lie in no spanning tree.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::CreditNetwork;
use crate::representation::SpanningRepresentation;

/// Largest edge count accepted by the exhaustive oracles.
pub const ENUMERATION_LIMIT: usize = 20;

/// `Γ` evaluated at the capacities.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GammaValue(pub f64);

impl GammaValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Vertex relabelling after identifying pairs; returns `(labels, count)`.
fn contract_labels(vertex_count: usize, pairs: &[(usize, usize)]) -> (Vec<usize>, usize) {
    let mut parent: Vec<usize> = (0..vertex_count).collect();
    fn find(p: &mut [usize], mut v: usize) -> usize {
        while p[v] != v {
            p[v] = p[p[v]];
            v = p[v];
        }
        v
    }
    for &(a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut label = vec![usize::MAX; vertex_count];
    let mut labels = vec![0; vertex_count];
    let mut count = 0;
    for v in 0..vertex_count {
        let r = find(&mut parent, v);
        if label[r] == usize::MAX {
            label[r] = count;
            count += 1;
        }
        labels[v] = label[r];
    }
    (labels, count)
}

/// Weighted edges with positive weight and distinct endpoints.
fn weighted_edges(net: &CreditNetwork, labels: &[usize]) -> Vec<(usize, usize, f64)> {
    net.edges()
        .iter()
        .filter(|e| e.capacity > 0.0 && labels[e.tail] != labels[e.head])
        .map(|e| (labels[e.tail], labels[e.head], e.capacity))
        .collect()
}

fn connected(vertex_count: usize, edges: &[(usize, usize, f64)]) -> bool {
    let pairs: Vec<(usize, usize)> = edges.iter().map(|&(a, b, _)| (a, b)).collect();
    contract_labels(vertex_count, &pairs).1 == 1
}

/// Laplacian with the last vertex grounded.
pub fn reduced_laplacian(vertex_count: usize, edges: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let k = vertex_count.saturating_sub(1);
    let mut lap = DMatrix::zeros(k, k);
    for &(a, b, w) in edges {
        if a < k {
            lap[(a, a)] += w;
        }
        if b < k {
            lap[(b, b)] += w;
        }
        if a < k && b < k {
            lap[(a, b)] -= w;
            lap[(b, a)] -= w;
        }
    }
    lap
}

/// Spanning-tree polynomial of a labelled multigraph via matrix-tree.
pub fn tree_polynomial(vertex_count: usize, edges: &[(usize, usize, f64)]) -> Result<GammaValue> {
    if vertex_count == 0 || !connected(vertex_count, edges) {
        return Err(Error::Disconnected);
    }
    if vertex_count == 1 {
        return Ok(GammaValue(1.0));
    }
    let det = reduced_laplacian(vertex_count, edges).lu().determinant();
    Ok(GammaValue(det))
}

pub fn gamma(net: &CreditNetwork) -> Result<GammaValue> {
    gamma_contracted(net, &[])
}

/// `Γ` of the multigraph with every listed pair identified.
pub fn gamma_contracted(net: &CreditNetwork, identified: &[(usize, usize)]) -> Result<GammaValue> {
    for &(a, b) in identified {
        net.check_vertex(a)?;
        net.check_vertex(b)?;
    }
    let (labels, count) = contract_labels(net.vertex_count(), identified);
    tree_polynomial(count, &weighted_edges(net, &labels))
}

/// Effective resistance between `x` and `y` with conductances `c(e)`,
/// from a grounded Laplacian solve.
pub fn effective_resistance(net: &CreditNetwork, x: usize, y: usize) -> Result<f64> {
    net.check_vertex(x)?;
    net.check_vertex(y)?;
    if x == y {
        return Err(Error::Precondition("effective resistance needs distinct vertices".into()));
    }
    let labels: Vec<usize> = (0..net.vertex_count()).collect();
    resistance(net.vertex_count(), &weighted_edges(net, &labels), x, y)
}

/// Effective resistance in a labelled multigraph.
pub fn resistance(vertex_count: usize, edges: &[(usize, usize, f64)], x: usize, y: usize) -> Result<f64> {
    if x == y {
        return Ok(0.0);
    }
    if !connected(vertex_count, edges) {
        return Err(Error::Disconnected);
    }
    // Ground y by swapping it into the last slot.
    let last = vertex_count - 1;
    let relabel = |v: usize| {
        if v == y {
            last
        } else if v == last {
            y
        } else {
            v
        }
    };
    let swapped: Vec<(usize, usize, f64)> = edges.iter().map(|&(a, b, w)| (relabel(a), relabel(b), w)).collect();
    let lap = reduced_laplacian(vertex_count, &swapped);
    let mut rhs = DVector::zeros(last);
    let xs = relabel(x);
    rhs[xs] = 1.0;
    let potential = lap.lu().solve(&rhs).ok_or(Error::Disconnected)?;
    Ok(potential[xs])
}

/// `Γ_{a=b}·Γ_{x=y} − Γ_{x=y,a=b}·Γ`, nonnegative for the graphic matroid.
pub fn rayleigh_gap(net: &CreditNetwork, pair1: (usize, usize), pair2: (usize, usize)) -> Result<f64> {
    let same = |p: (usize, usize), q: (usize, usize)| (p.0 == q.0 && p.1 == q.1) || (p.0 == q.1 && p.1 == q.0);
    if pair1.0 == pair1.1 || pair2.0 == pair2.1 {
        return Err(Error::Precondition("identified pairs must join distinct vertices".into()));
    }
    if same(pair1, pair2) {
        return Err(Error::Precondition("rayleigh_gap needs two distinct vertex pairs".into()));
    }
    let g = gamma(net)?.0;
    let g_xy = gamma_contracted(net, &[pair1])?.0;
    let g_ab = gamma_contracted(net, &[pair2])?.0;
    let g_both = gamma_contracted(net, &[pair1, pair2])?.0;
    Ok(g_ab * g_xy - g_both * g)
}

/// All spanning trees as sorted edge-index sets. Zero-capacity edges are
/// included; the weight of such a tree is zero.
pub fn enumerate_trees(net: &CreditNetwork) -> Result<Vec<Vec<usize>>> {
    let m = net.edge_count();
    if m > ENUMERATION_LIMIT {
        return Err(Error::TooLarge(m));
    }
    let n = net.dimension();
    if net.vertex_count() == 0 || m < n {
        return Ok(Vec::new());
    }
    Ok((0..m)
        .combinations(n)
        .filter(|set| crate::representation::is_spanning_tree(net, set))
        .collect())
}

/// `Σ_T Π_{e∈T} c(e)` over enumerated trees.
pub fn tree_weight_sum(net: &CreditNetwork, trees: &[Vec<usize>]) -> f64 {
    trees
        .iter()
        .map(|t| t.iter().map(|&e| net.edge(e).capacity).product::<f64>())
        .sum()
}

/// Volume of the Minkowski sum of `vectors` in `ℝᵈ`: `Σ |det|` over all
/// `d`-subsets.
pub fn minkowski_volume(vectors: &[Vec<f64>], dim: usize) -> Result<f64> {
    if vectors.len() > ENUMERATION_LIMIT {
        return Err(Error::TooLarge(vectors.len()));
    }
    if dim == 0 {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for subset in (0..vectors.len()).combinations(dim) {
        let m = DMatrix::from_fn(dim, dim, |i, j| vectors[subset[j]][i]);
        total += m.lu().determinant().abs();
    }
    Ok(total)
}

/// Basis-determinant volume of the configuration zonotope.
pub fn volume_oracle(rep: &SpanningRepresentation, net: &CreditNetwork) -> Result<f64> {
    minkowski_volume(&rep.generators(net), rep.dimension())
}
