//! Uniform sampling of the configuration zonotope.
//!
//! [`ExactSampler`] draws exactly uniform points by peeling generators off
//! the Minkowski sum one at a time. With `Z_k` the sum of the first `k`
//! segments, `Z_k` splits into `Z_{k−1}` and a slab of constant thickness
//! `c_k` along `v_k` sitting on the part of `∂Z_{k−1}` visible from `+v_k`.
//! The slab holds a `c_k·R_eff(e_k)` fraction of the volume, where the
//! resistance is taken in the (contracted) graph of the first `k` edges. A
//! slab point is a uniform point of the projection of `Z_{k−1}` along `v_k`
//! (itself a zonotope, sampled recursively), lifted to the visible surface by
//! an LP and pushed a uniform distance `λ·c_k` along `v_k`.
//!
//! The branch structure depends only on which edges were contracted or
//! dropped, so the sampler memoizes the tree of sub-problems and only the
//! lifting LPs run per sample.
//!
//! [`hit_and_run`] is the independent Markov-chain cross-check.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::network::CreditNetwork;
use crate::representation::{bfs_tree, norm, SpanningRepresentation, StatePoint, Zonotope};
use crate::rng::{self, SimRng};
use crate::treepoly;

/// Pivot threshold of the independence test, relative to the largest generator.
const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub burn_in: usize,
    pub thinning: usize,
    /// Membership slack used when re-verifying emitted points.
    pub tolerance: f64,
}

impl SamplerConfig {
    /// Defaults for an `n`-dimensional zonotope: burn-in `100n`, thinning `10n`.
    pub fn for_dimension(n: usize, seed: u64) -> Self {
        SamplerConfig { seed, burn_in: 100 * n.max(1), thinning: 10 * n.max(1), tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone)]
struct Item {
    v: Vec<f64>,
    cap: f64,
    ends: (usize, usize),
}

#[derive(Debug)]
enum Kind {
    Independent,
    Branch {
        slab_probability: f64,
        /// Householder vector `w` with `(I − 2wwᵀ)·v̂_k = ±e_d`.
        reflector: Vec<f64>,
        lower: Zonotope,
        slab: Option<usize>,
        reject: Option<usize>,
    },
}

#[derive(Debug)]
struct Node {
    items: Vec<Item>,
    vertex_count: usize,
    dim: usize,
    kind: Kind,
}

fn rank(vectors: &[Vec<f64>], dim: usize) -> usize {
    let scale = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut rows: Vec<Vec<f64>> = vectors.iter().map(|v| v.iter().map(|x| x / scale).collect()).collect();
    let mut r = 0;
    for col in 0..dim {
        let Some(p) = (r..rows.len()).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs())) else {
            break;
        };
        if rows[p][col].abs() <= RANK_TOLERANCE {
            continue;
        }
        rows.swap(r, p);
        for i in r + 1..rows.len() {
            let f = rows[i][col] / rows[r][col];
            let pivot = rows[r].clone();
            for (x, p) in rows[i][col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
        }
        r += 1;
    }
    r
}

fn reflect(w: &[f64], x: &[f64]) -> Vec<f64> {
    let d: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
    x.iter().zip(w).map(|(xi, wi)| xi - 2.0 * d * wi).collect()
}

impl Node {
    fn new(items: Vec<Item>, vertex_count: usize, dim: usize) -> Result<Node> {
        let scale = items.iter().map(|it| norm(&it.v)).fold(0.0, f64::max).max(1.0);
        let items: Vec<Item> = items
            .into_iter()
            .filter(|it| it.cap > 0.0 && it.ends.0 != it.ends.1 && norm(&it.v) > 1e-12 * scale)
            .collect();

        let scaled: Vec<Vec<f64>> = items.iter().map(|it| it.v.iter().map(|x| x * it.cap).collect()).collect();
        if items.len() <= dim && rank(&scaled, dim) == items.len() {
            return Ok(Node { items, vertex_count, dim, kind: Kind::Independent });
        }

        let k = items.len() - 1;
        let edges: Vec<(usize, usize, f64)> = items.iter().map(|it| (it.ends.0, it.ends.1, it.cap)).collect();
        let last = &items[k];
        let r = treepoly::resistance(vertex_count, &edges, last.ends.0, last.ends.1)?;
        let mut p = (last.cap * r).clamp(0.0, 1.0);
        if p > 1.0 - 1e-9 {
            // e_k is a bridge: Z_{k−1} is lower-dimensional.
            p = 1.0;
        }

        let unit: Vec<f64> = last.v.iter().map(|x| x / norm(&last.v)).collect();
        let mut reflector = unit.clone();
        let sign = if unit[dim - 1] >= 0.0 { 1.0 } else { -1.0 };
        reflector[dim - 1] += sign;
        let wn = norm(&reflector);
        reflector.iter_mut().for_each(|x| *x /= wn);

        let lower = Zonotope::new(scaled[..k].to_vec(), dim);
        Ok(Node {
            items,
            vertex_count,
            dim,
            kind: Kind::Branch { slab_probability: p, reflector, lower, slab: None, reject: None },
        })
    }

    /// Sub-problem for the projection along the last generator.
    fn slab_child(&self) -> Result<Node> {
        let Kind::Branch { reflector, .. } = &self.kind else {
            unreachable!("independent nodes have no children")
        };
        let k = self.items.len() - 1;
        let last = &self.items[k];
        let unit: Vec<f64> = last.v.iter().map(|x| x / norm(&last.v)).collect();
        let (keep, gone) = (last.ends.0.min(last.ends.1), last.ends.0.max(last.ends.1));
        let relabel = |v: usize| {
            if v == gone {
                keep
            } else if v > gone {
                v - 1
            } else {
                v
            }
        };
        let items = self.items[..k]
            .iter()
            .map(|it| {
                let along: f64 = it.v.iter().zip(&unit).map(|(a, b)| a * b).sum();
                let perp: Vec<f64> = it.v.iter().zip(&unit).map(|(a, u)| a - along * u).collect();
                let mut reduced = reflect(reflector, &perp);
                reduced.pop();
                Item { v: reduced, cap: it.cap, ends: (relabel(it.ends.0), relabel(it.ends.1)) }
            })
            .collect();
        Node::new(items, self.vertex_count - 1, self.dim - 1)
    }

    fn reject_child(&self) -> Result<Node> {
        let k = self.items.len() - 1;
        Node::new(self.items[..k].to_vec(), self.vertex_count, self.dim)
    }
}

/// Exactly uniform sampler for the configuration zonotope of one network
/// under one spanning representation.
#[derive(Debug)]
pub struct ExactSampler {
    nodes: Vec<Node>,
    dim: usize,
}

impl ExactSampler {
    /// Generators are ordered with the BFS spanning tree of positive-capacity
    /// edges first, followed by the remaining edges in index order.
    /// Zero-capacity edges contribute nothing and are dropped. The order
    /// depends on the graph alone, so under the same random stream two
    /// representations yield samples related by their change of basis.
    pub fn new(rep: &SpanningRepresentation, net: &CreditNetwork) -> Result<Self> {
        if !net.is_connected_positive() {
            return Err(Error::Disconnected);
        }
        let tree = bfs_tree(net, |e| net.edge(e).capacity > 0.0).ok_or(Error::Disconnected)?;
        let mut order = tree.clone();
        order.extend((0..net.edge_count()).filter(|e| !tree.contains(e) && net.edge(*e).capacity > 0.0));
        let items = order
            .iter()
            .map(|&e| {
                let edge = net.edge(e);
                Item {
                    v: rep.direction(e).iter().map(|&x| x as f64).collect(),
                    cap: edge.capacity,
                    ends: (edge.tail, edge.head),
                }
            })
            .collect();
        let dim = rep.dimension();
        let root = Node::new(items, net.vertex_count(), dim)?;
        Ok(ExactSampler { nodes: vec![root], dim })
    }

    /// Probability of the slab branch at the top level, `None` when the
    /// generators are already independent.
    pub fn top_slab_probability(&self) -> Option<f64> {
        match self.nodes[0].kind {
            Kind::Branch { slab_probability, .. } => Some(slab_probability),
            Kind::Independent => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StatePoint> {
        if self.dim == 0 {
            return Ok(StatePoint::zeros(0));
        }
        self.sample_node(0, rng).map(StatePoint::new)
    }

    pub fn sample_many<R: Rng + ?Sized>(&mut self, count: usize, rng: &mut R) -> Result<Vec<StatePoint>> {
        (0..count).map(|_| self.sample(rng)).collect()
    }

    fn child(&mut self, idx: usize, slab_side: bool) -> Result<usize> {
        let existing = match &self.nodes[idx].kind {
            Kind::Branch { slab, reject, .. } => {
                if slab_side {
                    *slab
                } else {
                    *reject
                }
            }
            Kind::Independent => unreachable!("independent nodes have no children"),
        };
        if let Some(c) = existing {
            return Ok(c);
        }
        let node = if slab_side {
            self.nodes[idx].slab_child()?
        } else {
            self.nodes[idx].reject_child()?
        };
        let c = self.nodes.len();
        self.nodes.push(node);
        if let Kind::Branch { slab, reject, .. } = &mut self.nodes[idx].kind {
            if slab_side {
                *slab = Some(c);
            } else {
                *reject = Some(c);
            }
        }
        Ok(c)
    }

    fn sample_node<R: Rng + ?Sized>(&mut self, idx: usize, rng: &mut R) -> Result<Vec<f64>> {
        let p = match &self.nodes[idx].kind {
            Kind::Independent => {
                let node = &self.nodes[idx];
                let mut z = vec![0.0; node.dim];
                for it in &node.items {
                    let t = rng.random::<f64>() * it.cap;
                    for (zi, vi) in z.iter_mut().zip(&it.v) {
                        *zi += t * vi;
                    }
                }
                return Ok(z);
            }
            Kind::Branch { slab_probability, .. } => *slab_probability,
        };

        if rng.random::<f64>() >= p {
            let c = self.child(idx, false)?;
            return self.sample_node(c, rng);
        }

        let c = self.child(idx, true)?;
        let mut projected = self.sample_node(c, rng)?;
        let node = &self.nodes[idx];
        let Kind::Branch { reflector, lower, .. } = &node.kind else {
            unreachable!()
        };
        projected.push(0.0);
        let base = reflect(reflector, &projected);
        let last = &node.items[node.items.len() - 1];
        let alpha = lower.extent(&base, &last.v, true)?;
        let lambda = 1.0 - rng.random::<f64>();
        let t = alpha + lambda * last.cap;
        Ok(base.iter().zip(&last.v).map(|(b, v)| b + t * v).collect())
    }
}

/// One exactly uniform point of the configuration zonotope.
pub fn sample_uniform_exact<R: Rng + ?Sized>(rep: &SpanningRepresentation, net: &CreditNetwork, rng: &mut R) -> Result<StatePoint> {
    ExactSampler::new(rep, net)?.sample(rng)
}

/// Uniformly random unit vector in `ℝⁿ`.
pub fn random_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let len = norm(&d);
        if len > 1e-12 {
            return d.into_iter().map(|x| x / len).collect();
        }
    }
}

/// `(t_min, t_max)` such that `z + t·d ∈ Z` exactly for `t` in between.
pub fn chord_extent(rep: &SpanningRepresentation, net: &CreditNetwork, z: &[f64], d: &[f64]) -> Result<(f64, f64)> {
    rep.zonotope(net).chord(z, d)
}

/// Hit-and-run on the configuration zonotope started from its center.
pub fn hit_and_run(rep: &SpanningRepresentation, net: &CreditNetwork, cfg: &SamplerConfig, count: usize) -> Result<Vec<StatePoint>> {
    let zonotope = rep.zonotope(net);
    let mut rng = rng::stream(cfg.seed, 0);
    hit_and_run_from(&zonotope, zonotope.centroid(), cfg, count, &mut rng)
}

pub fn hit_and_run_from(
    zonotope: &Zonotope,
    start: StatePoint,
    cfg: &SamplerConfig,
    count: usize,
    rng: &mut SimRng,
) -> Result<Vec<StatePoint>> {
    let n = zonotope.dim();
    let thinning = cfg.thinning.max(1);
    let mut z = start;
    let mut out = Vec::with_capacity(count);
    if n == 0 {
        return Ok(vec![z; count]);
    }
    let mut step = 0usize;
    while out.len() < count {
        let d = random_direction(n, rng);
        let hi = zonotope.extent(&z, &d, true)?.max(0.0);
        let lo = zonotope.extent(&z, &d, false)?.min(0.0);
        let t = lo + (hi - lo) * rng.random::<f64>();
        z = z.offset(&d, t);
        step += 1;
        if step > cfg.burn_in && (step - cfg.burn_in).is_multiple_of(thinning) {
            out.push(z.clone());
        }
    }
    Ok(out)
}
