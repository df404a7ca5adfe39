//! Transaction success probabilities under the uniform measure on `Z`.
//!
//! A transaction of size `k` from `x` to `y` fails at state `z` when
//! `z − k·D(x,y) ∉ Z`. Under the uniform measure the failure probability has
//! derivative at most `R_eff(x,y) = Γ_{x=y}/Γ`, with equality everywhere when
//! `x` and `y` share channel capacity of at least `k`; then
//! `P[fail] = k·Γ_{x=y}/Γ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{CreditNetwork, Transaction};
use crate::representation::{SpanningRepresentation, StatePoint};
use crate::treepoly;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Bound,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Bound => "bound",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiquidityReport {
    pub tx: Transaction,
    /// Failure probability, present exactly when the bound is tight.
    pub exact_failure: Option<f64>,
    /// Sampled failure frequency, for [`Method::MonteCarlo`].
    pub empirical_failure: Option<f64>,
    pub lower_bound_success: f64,
    pub tight: bool,
    pub method: Method,
    /// `k·R_eff` exceeded 1 and the bound was clamped to 0.
    pub clamped: bool,
}

fn check_pair(net: &CreditNetwork, x: usize, y: usize, k: f64) -> Result<()> {
    net.check_vertex(x)?;
    net.check_vertex(y)?;
    if x == y {
        return Err(Error::Precondition("transaction endpoints must differ".into()));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::Precondition(format!("transaction size must be finite and nonnegative, got {k}")));
    }
    Ok(())
}

/// True when the channel capacity between `x` and `y` is at least `k`.
pub fn is_bound_tight(net: &CreditNetwork, x: usize, y: usize, k: f64) -> bool {
    k <= 0.0 || net.capacity_between(x, y) >= k
}

fn require_adjacent(net: &CreditNetwork, x: usize, y: usize, k: f64) -> Result<()> {
    check_pair(net, x, y, k)?;
    if !is_bound_tight(net, x, y, k) {
        return Err(Error::Precondition(format!(
            "closed form needs channel capacity at least {k} between {} and {}, found {}",
            net.vertex_name(x),
            net.vertex_name(y),
            net.capacity_between(x, y)
        )));
    }
    Ok(())
}

/// `k·Γ_{x=y}/Γ`, valid when `x` and `y` share capacity at least `k`.
pub fn exact_failure_probability(net: &CreditNetwork, x: usize, y: usize, k: f64) -> Result<f64> {
    require_adjacent(net, x, y, k)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    let ratio = treepoly::gamma_contracted(net, &[(x, y)])?.0 / treepoly::gamma(net)?.0;
    Ok((k * ratio).clamp(0.0, 1.0))
}

/// The same probability as [`exact_failure_probability`], computed as the
/// chance that `f₁` lies in a weighted random spanning tree after the `x–y`
/// capacity is split into channels `f₁` (capacity `k`) and `f₂` (the rest).
pub fn duplicated_edge_equivalence(net: &CreditNetwork, x: usize, y: usize, k: f64) -> Result<f64> {
    require_adjacent(net, x, y, k)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    let total = net.capacity_between(x, y);
    let mut edges: Vec<(usize, usize, f64)> = net
        .edges()
        .iter()
        .filter(|e| !e.joins(x, y))
        .map(|e| (e.tail, e.head, e.capacity))
        .collect();
    let f1 = edges.len();
    edges.push((x, y, k));
    edges.push((x, y, total - k));
    let split = CreditNetwork::from_indexed(net.vertex_count(), &edges)?;

    // Trees through f₁ are, after contracting f₁, spanning trees of the rest.
    let (t, h) = (split.edge(f1).tail, split.edge(f1).head);
    let through = k * treepoly::gamma_contracted(&split, &[(t, h)])?.0;
    Ok(through / treepoly::gamma(&split)?.0)
}

/// `max(0, 1 − k·R_eff(x,y))`, a lower bound on success for any pair.
pub fn success_lower_bound(net: &CreditNetwork, x: usize, y: usize, k: f64) -> Result<f64> {
    Ok(raw_bound(net, x, y, k)?.0)
}

fn raw_bound(net: &CreditNetwork, x: usize, y: usize, k: f64) -> Result<(f64, bool)> {
    check_pair(net, x, y, k)?;
    if !net.is_connected_positive() {
        return Err(Error::Disconnected);
    }
    if k == 0.0 {
        return Ok((1.0, false));
    }
    let raw = 1.0 - k * treepoly::effective_resistance(net, x, y)?;
    Ok((raw.clamp(0.0, 1.0), raw < 0.0))
}

/// Closed form when the bound is tight, otherwise the lower bound alone.
pub fn analyze(net: &CreditNetwork, tx: &Transaction) -> Result<LiquidityReport> {
    let (bound, clamped) = raw_bound(net, tx.sender, tx.receiver, tx.amount)?;
    let tight = is_bound_tight(net, tx.sender, tx.receiver, tx.amount);
    let exact_failure = if tight {
        Some(exact_failure_probability(net, tx.sender, tx.receiver, tx.amount)?)
    } else {
        None
    };
    Ok(LiquidityReport {
        tx: *tx,
        exact_failure,
        empirical_failure: None,
        lower_bound_success: bound,
        tight,
        method: if tight { Method::ClosedForm } else { Method::Bound },
        clamped,
    })
}

/// [`analyze`] plus a sampled failure frequency.
pub fn analyze_with_samples(
    net: &CreditNetwork,
    rep: &SpanningRepresentation,
    tx: &Transaction,
    samples: &[StatePoint],
) -> Result<LiquidityReport> {
    let mut report = analyze(net, tx)?;
    report.empirical_failure = Some(1.0 - empirical_liquidity(samples, rep, net, tx)?);
    report.method = Method::MonteCarlo;
    Ok(report)
}

/// Fraction of `samples` from which `tx` is feasible.
pub fn empirical_liquidity(samples: &[StatePoint], rep: &SpanningRepresentation, net: &CreditNetwork, tx: &Transaction) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Precondition("empirical liquidity needs at least one sample".into()));
    }
    if tx.amount == 0.0 {
        return Ok(1.0);
    }
    let zonotope = rep.zonotope(net);
    let v = rep.transaction_vector(net, tx)?;
    let mut ok = 0usize;
    for z in samples {
        if zonotope.contains(&(z - v.as_slice()))? {
            ok += 1;
        }
    }
    Ok(ok as f64 / samples.len() as f64)
}

/// Per-sample largest feasible size from `x` to `y`.
pub fn sendable_amounts(samples: &[StatePoint], rep: &SpanningRepresentation, net: &CreditNetwork, x: usize, y: usize) -> Result<Vec<f64>> {
    let zonotope = rep.zonotope(net);
    let unit = Transaction::new(x, y, 1.0)?;
    let v: Vec<f64> = rep.transaction_vector(net, &unit)?.iter().map(|d| -d).collect();
    samples
        .iter()
        .map(|z| Ok(zonotope.extent(z, &v, true)?.max(0.0)))
        .collect()
}

/// Sampled `P[fail]` of an `x → y` transaction at each size in `k_grid`.
///
/// `Z` is convex, so a sample fails at size `k` exactly when `k` exceeds its
/// chord length along `−D(x,y)`; one LP per sample covers the whole grid.
pub fn failure_curve(
    samples: &[StatePoint],
    rep: &SpanningRepresentation,
    net: &CreditNetwork,
    x: usize,
    y: usize,
    k_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    check_pair(net, x, y, 0.0)?;
    if samples.is_empty() {
        return Err(Error::Precondition("failure curve needs at least one sample".into()));
    }
    let reach = sendable_amounts(samples, rep, net, x, y)?;
    let tol = 1e-9 * (1.0 + rep.zonotope(net).reach());
    Ok(k_grid
        .iter()
        .map(|&k| {
            let fails = reach.iter().filter(|&&r| r + tol < k).count();
            (k, fails as f64 / samples.len() as f64)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityOutcome {
    pub before: f64,
    pub after: f64,
    /// Index of the boosted (or created) edge in the boosted network.
    pub boosted_edge: usize,
}

impl MonotonicityOutcome {
    pub fn gap(&self) -> f64 {
        self.after - self.before
    }
}

/// Exact success probabilities of `tx` before and after adding `h` to the
/// `a–b` channel, creating it if absent.
pub fn monotonicity_experiment(net: &CreditNetwork, tx: &Transaction, boost: (usize, usize, f64)) -> Result<MonotonicityOutcome> {
    let (a, b, h) = boost;
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::Precondition(format!("boost must be finite and nonnegative, got {h}")));
    }
    let before = 1.0 - exact_failure_probability(net, tx.sender, tx.receiver, tx.amount)?;
    let (boosted, boosted_edge) = net.boosted(a, b, h)?;
    let after = 1.0 - exact_failure_probability(&boosted, tx.sender, tx.receiver, tx.amount)?;
    Ok(MonotonicityOutcome { before, after, boosted_edge })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::samplers::ExactSampler;

    fn unit(n: usize, edges: &[(usize, usize)]) -> CreditNetwork {
        let e: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
        CreditNetwork::from_indexed(n, &e).unwrap()
    }

    fn triangle() -> CreditNetwork {
        unit(3, &[(0, 1), (1, 2), (0, 2)])
    }

    fn square() -> CreditNetwork {
        unit(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])
    }

    #[test]
    fn hand_values() {
        let single = CreditNetwork::from_indexed(2, &[(0, 1, 4.0)]).unwrap();
        assert!((exact_failure_probability(&single, 0, 1, 1.0).unwrap() - 0.25).abs() < 1e-12);
        assert!((exact_failure_probability(&triangle(), 0, 1, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((exact_failure_probability(&square(), 0, 1, 1.0).unwrap() - 0.75).abs() < 1e-12);
        assert!(matches!(exact_failure_probability(&square(), 0, 2, 0.5), Err(Error::Precondition(_))));
        assert!(matches!(exact_failure_probability(&triangle(), 0, 1, 1.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn split_channel_agrees() {
        let net = CreditNetwork::from_indexed(4, &[(0, 1, 2.0), (1, 2, 1.0), (2, 0, 3.0), (2, 3, 0.5), (3, 1, 1.5)]).unwrap();
        for k in [0.0, 0.3, 1.0, 2.0] {
            let a = exact_failure_probability(&net, 0, 1, k).unwrap();
            let b = duplicated_edge_equivalence(&net, 0, 1, k).unwrap();
            assert!((a - b).abs() < 1e-12, "{k}: {a} vs {b}");
        }
        let full = duplicated_edge_equivalence(&net, 0, 1, 2.0).unwrap();
        assert!((full - 2.0 * treepoly::effective_resistance(&net, 0, 1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bounds() {
        assert!((success_lower_bound(&square(), 0, 2, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(success_lower_bound(&square(), 0, 2, 0.0).unwrap(), 1.0);
        assert!(is_bound_tight(&triangle(), 0, 1, 0.5));
        assert!(!is_bound_tight(&square(), 0, 2, 0.1));
        assert!(is_bound_tight(&square(), 0, 2, 0.0));
        let r = analyze(&square(), &Transaction::new(0, 2, 3.0).unwrap()).unwrap();
        assert!(r.clamped && r.lower_bound_success == 0.0 && r.exact_failure.is_none());
        let t = analyze(&triangle(), &Transaction::new(0, 1, 0.5).unwrap()).unwrap();
        assert_eq!(t.method, Method::ClosedForm);
        assert!((t.lower_bound_success + t.exact_failure.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_cases() {
        let net = triangle();
        let tx = Transaction::new(0, 1, 0.5).unwrap();
        let out = monotonicity_experiment(&net, &tx, (1, 2, 1.0)).unwrap();
        assert!(out.gap() >= -1e-12);
        assert_eq!(monotonicity_experiment(&net, &tx, (1, 2, 0.0)).unwrap().gap(), 0.0);
        // A pendant vertex shares no cycle with the triangle.
        let tail = CreditNetwork::from_indexed(4, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let out = monotonicity_experiment(&tail, &tx, (2, 3, 2.0)).unwrap();
        assert!(out.gap().abs() < 1e-12);
    }

    #[test]
    fn sampled_triangle_liquidity() {
        let net = triangle();
        let rep = SpanningRepresentation::canonical(&net).unwrap();
        let mut sampler = ExactSampler::new(&rep, &net).unwrap();
        let samples = sampler.sample_many(20_000, &mut rng::seeded(1)).unwrap();
        let tx = Transaction::new(0, 1, 0.5).unwrap();
        let liq = empirical_liquidity(&samples, &rep, &net, &tx).unwrap();
        assert!((liq - 2.0 / 3.0).abs() < 0.02, "{liq}");
        assert_eq!(empirical_liquidity(&samples, &rep, &net, &Transaction::new(0, 1, 0.0).unwrap()).unwrap(), 1.0);

        let curve = failure_curve(&samples, &rep, &net, 0, 1, &[0.0, 0.25, 0.5]).unwrap();
        assert_eq!(curve[0].1, 0.0);
        assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!((curve[2].1 - (1.0 - liq)).abs() < 1e-3);
    }
}
