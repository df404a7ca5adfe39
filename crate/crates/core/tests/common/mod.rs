#![allow(dead_code)]

use chanliq::network::CreditNetwork;
use chanliq::representation::is_spanning_tree;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn data(name: &str) -> String {
    let path = format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn unit(n: usize, edges: &[(usize, usize)]) -> CreditNetwork {
    let e: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
    CreditNetwork::from_indexed(n, &e).unwrap()
}

pub fn triangle() -> CreditNetwork {
    unit(3, &[(0, 1), (1, 2), (0, 2)])
}

pub fn square() -> CreditNetwork {
    unit(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])
}

/// Connected multigraph with `n` vertices in `[2, max_n]`, `m` edges in
/// `[max(n−1, min_extra + n − 1), max_m]`, capacities uniform in `[lo, hi]`.
pub fn random_graph<R: Rng>(rng: &mut R, max_n: usize, max_m: usize, min_extra: usize, lo: f64, hi: f64) -> CreditNetwork {
    let n = rng.random_range(2..=max_n);
    let m = rng.random_range((n - 1 + min_extra).min(max_m)..=max_m);
    let mut edges = Vec::with_capacity(m);
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push(if rng.random() { (u, v) } else { (v, u) });
    }
    while edges.len() < m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.push((a, b));
        }
    }
    edges.shuffle(rng);
    let edges: Vec<_> = edges.into_iter().map(|(a, b)| (a, b, rng.random_range(lo..=hi))).collect();
    CreditNetwork::from_indexed(n, &edges).unwrap()
}

/// A uniformly shuffled Kruskal spanning tree.
pub fn random_tree<R: Rng>(rng: &mut R, net: &CreditNetwork) -> Vec<usize> {
    let mut order: Vec<usize> = (0..net.edge_count()).collect();
    order.shuffle(rng);
    let mut tree = Vec::new();
    for e in order {
        tree.push(e);
        if !forest(net, &tree) {
            tree.pop();
        }
    }
    assert!(is_spanning_tree(net, &tree));
    tree
}

fn forest(net: &CreditNetwork, edges: &[usize]) -> bool {
    let mut parent: Vec<usize> = (0..net.vertex_count()).collect();
    fn find(p: &mut [usize], mut v: usize) -> usize {
        while p[v] != v {
            v = p[v];
        }
        v
    }
    for &e in edges {
        let (a, b) = (find(&mut parent, net.edge(e).tail), find(&mut parent, net.edge(e).head));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}
