//! The random-transaction Markov chain on `Z`.
//!
//! Each step draws a pair `(a, b)` with probability `φ(a,b)` and a size
//! `k ~ k_{a,b}`, and moves `z ↦ z − k·D(a,b)` when the result stays in `Z`.
//! Negative sizes send money from `b` to `a` through the same formula.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{CreditNetwork, Transaction};
use crate::representation::{SpanningRepresentation, StatePoint, Zonotope};
use crate::rng::SimRng;
use crate::samplers::SamplerConfig;
use crate::stats;

/// Number of batches for the batch-means standard error of monitored rates.
pub const BATCHES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeDistribution {
    /// Uniform on `[−ε, ε]`.
    Uniform { epsilon: f64 },
    Gaussian { mean: f64, sd: f64 },
    PointMass { k: f64 },
    /// Uniform on `[lo, hi]`.
    ShiftedUniform { lo: f64, hi: f64 },
}

impl SizeDistribution {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SizeDistribution::Uniform { epsilon } => epsilon > 0.0 && epsilon.is_finite(),
            SizeDistribution::Gaussian { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            SizeDistribution::PointMass { k } => k.is_finite(),
            SizeDistribution::ShiftedUniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("invalid size distribution {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SizeDistribution::Uniform { epsilon } => epsilon * (2.0 * rng.random::<f64>() - 1.0),
            SizeDistribution::Gaussian { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            SizeDistribution::PointMass { k } => k,
            SizeDistribution::ShiftedUniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match *self {
            SizeDistribution::Uniform { .. } => true,
            SizeDistribution::Gaussian { mean, .. } => mean == 0.0,
            SizeDistribution::PointMass { k } => k == 0.0,
            SizeDistribution::ShiftedUniform { lo, hi } => lo == -hi,
        }
    }

    /// Whether the support contains some interval `[−δ, δ]`, `δ > 0`.
    pub fn covers_zero(&self) -> bool {
        match *self {
            SizeDistribution::Uniform { .. } | SizeDistribution::Gaussian { .. } => true,
            SizeDistribution::PointMass { .. } => false,
            SizeDistribution::ShiftedUniform { lo, hi } => lo < 0.0 && hi > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelPair {
    pub a: usize,
    pub b: usize,
    /// Normalized weight `φ(a,b)`.
    pub weight: f64,
    pub size: SizeDistribution,
}

#[derive(Debug, Clone)]
pub struct TransactionModel {
    vertex_count: usize,
    pairs: Vec<ModelPair>,
    picker: WeightedIndex<f64>,
}

impl TransactionModel {
    pub fn new(net: &CreditNetwork, pairs: Vec<(usize, usize, f64, SizeDistribution)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Precondition("transaction model needs at least one pair".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut total = 0.0;
        for &(a, b, w, ref size) in &pairs {
            net.check_vertex(a)?;
            net.check_vertex(b)?;
            if a == b {
                return Err(Error::Precondition(format!("model pair {} joins a vertex to itself", net.vertex_name(a))));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::Precondition(format!(
                    "model pair {}–{} listed twice",
                    net.vertex_name(a),
                    net.vertex_name(b)
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Precondition(format!("model weights must be positive, got {w}")));
            }
            size.validate()?;
            total += w;
        }
        let pairs: Vec<ModelPair> = pairs
            .into_iter()
            .map(|(a, b, w, size)| ModelPair { a, b, weight: w / total, size })
            .collect();
        let picker = WeightedIndex::new(pairs.iter().map(|p| p.weight))
            .map_err(|e| Error::Precondition(format!("model weights: {e}")))?;
        Ok(TransactionModel { vertex_count: net.vertex_count(), pairs, picker })
    }

    /// Every unordered vertex pair with equal weight and sizes uniform on `[−ε, ε]`.
    pub fn complete_uniform(net: &CreditNetwork, epsilon: f64) -> Result<Self> {
        let n = net.vertex_count();
        let pairs = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b, 1.0, SizeDistribution::Uniform { epsilon })))
            .collect();
        TransactionModel::new(net, pairs)
    }

    pub fn pairs(&self) -> &[ModelPair] {
        &self.pairs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelValidity {
    /// The pair graph spans every vertex and every size law covers an interval around 0.
    pub connected: bool,
    /// Every size law is symmetric about 0.
    pub symmetric: bool,
}

pub fn validate_model(net: &CreditNetwork, model: &TransactionModel) -> ModelValidity {
    let n = net.vertex_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut v: usize) -> usize {
        while p[v] != v {
            p[v] = p[p[v]];
            v = p[v];
        }
        v
    }
    let mut components = n;
    for p in &model.pairs {
        let (ra, rb) = (find(&mut parent, p.a), find(&mut parent, p.b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    let spans = model.vertex_count == n && components == 1;
    ModelValidity {
        connected: spans && model.pairs.iter().all(|p| p.size.covers_zero()),
        symmetric: model.pairs.iter().all(|p| p.size.is_symmetric()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub current: StatePoint,
    pub steps: u64,
    pub accepted: u64,
}

impl ChainState {
    pub fn new(current: StatePoint) -> Self {
        ChainState { current, steps: 0, accepted: 0 }
    }
}

/// Per-transaction failure statistics over the recorded states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorStats {
    pub tx: Transaction,
    pub checks: usize,
    pub failures: usize,
    pub failure_rate: f64,
    /// Batch-means standard error of `failure_rate`.
    pub std_error: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Starting point; the image of the all-zero configuration when absent.
    pub start: Option<StatePoint>,
    pub monitors: Vec<Transaction>,
    pub keep_states: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: u64,
    pub accepted: u64,
    pub recorded: usize,
    pub monitors: Vec<MonitorStats>,
    pub states: Vec<StatePoint>,
    pub final_state: ChainState,
}

impl RunSummary {
    pub fn acceptance_ratio(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }
}

/// The chain over one network, representation and model.
#[derive(Debug, Clone)]
pub struct Chain<'a> {
    net: &'a CreditNetwork,
    rep: &'a SpanningRepresentation,
    model: &'a TransactionModel,
    zonotope: Zonotope,
    /// `D(a,b)` for every model pair.
    directions: Vec<Vec<f64>>,
}

impl<'a> Chain<'a> {
    pub fn new(rep: &'a SpanningRepresentation, net: &'a CreditNetwork, model: &'a TransactionModel) -> Result<Self> {
        if model.vertex_count != net.vertex_count() {
            return Err(Error::Precondition("model was built for a different network".into()));
        }
        let directions = model
            .pairs
            .iter()
            .map(|p| rep.pair_direction(p.a, p.b).into_iter().map(|d| d as f64).collect())
            .collect();
        Ok(Chain { net, rep, model, zonotope: rep.zonotope(net), directions })
    }

    pub fn zonotope(&self) -> &Zonotope {
        &self.zonotope
    }

    /// One transition: draw a transaction and perform it when feasible.
    pub fn step(&self, state: &mut ChainState, rng: &mut SimRng) -> Result<bool> {
        let i = self.model.picker.sample(rng);
        let k = self.model.pairs[i].size.sample(rng);
        state.steps += 1;
        if k == 0.0 {
            state.accepted += 1;
            return Ok(true);
        }
        let next = state.current.offset(&self.directions[i], -k);
        if self.zonotope.contains(&next)? {
            state.current = next;
            state.accepted += 1;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Runs `steps` transitions, recording every `cfg.thinning`-th state after
    /// `cfg.burn_in`. Monitored transactions are checked at recorded states.
    pub fn run(&self, steps: u64, cfg: &SamplerConfig, opts: &RunOptions, rng: &mut SimRng) -> Result<RunSummary> {
        let start = match &opts.start {
            Some(z) => {
                if !self.zonotope.contains(z)? {
                    return Err(Error::NotInZonotope);
                }
                z.clone()
            }
            None => StatePoint::zeros(self.rep.dimension()),
        };
        let vectors = opts
            .monitors
            .iter()
            .map(|tx| self.rep.transaction_vector(self.net, tx))
            .collect::<Result<Vec<_>>>()?;
        let mut outcomes: Vec<Vec<f64>> = vec![Vec::new(); opts.monitors.len()];
        let mut states = Vec::new();
        let mut recorded = 0usize;
        let thinning = cfg.thinning.max(1) as u64;
        let mut state = ChainState::new(start);

        for t in 1..=steps {
            self.step(&mut state, rng)?;
            if t <= cfg.burn_in as u64 || !(t - cfg.burn_in as u64).is_multiple_of(thinning) {
                continue;
            }
            recorded += 1;
            for (v, out) in vectors.iter().zip(outcomes.iter_mut()) {
                let fail = !self.zonotope.contains(&(&state.current - v.as_slice()))?;
                out.push(if fail { 1.0 } else { 0.0 });
            }
            if opts.keep_states {
                states.push(state.current.clone());
            }
        }

        let monitors = opts
            .monitors
            .iter()
            .zip(&outcomes)
            .map(|(tx, out)| {
                let failures = out.iter().filter(|&&x| x > 0.5).count();
                MonitorStats {
                    tx: *tx,
                    checks: out.len(),
                    failures,
                    failure_rate: if out.is_empty() { 0.0 } else { failures as f64 / out.len() as f64 },
                    std_error: stats::batch_means_std_error(out, BATCHES),
                }
            })
            .collect();
        Ok(RunSummary { steps, accepted: state.accepted, recorded, monitors, states, final_state: state })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn triangle() -> CreditNetwork {
        CreditNetwork::from_indexed(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn validity_flags() {
        let net = triangle();
        let uni = TransactionModel::complete_uniform(&net, 0.5).unwrap();
        assert_eq!(validate_model(&net, &uni), ModelValidity { connected: true, symmetric: true });
        let point = TransactionModel::new(&net, vec![(0, 1, 1.0, SizeDistribution::PointMass { k: 0.5 }), (1, 2, 1.0, SizeDistribution::PointMass { k: 0.5 })]).unwrap();
        assert_eq!(validate_model(&net, &point), ModelValidity { connected: false, symmetric: false });
        let drift = TransactionModel::new(&net, vec![(0, 1, 1.0, SizeDistribution::Gaussian { mean: 0.1, sd: 1.0 }), (1, 2, 3.0, SizeDistribution::Uniform { epsilon: 1.0 })]).unwrap();
        let v = validate_model(&net, &drift);
        assert!(v.connected && !v.symmetric);
        let partial = TransactionModel::new(&net, vec![(0, 1, 1.0, SizeDistribution::Uniform { epsilon: 1.0 })]).unwrap();
        assert!(!validate_model(&net, &partial).connected);
        assert!((drift.pairs()[1].weight - 0.75).abs() < 1e-12);
    }

    #[test]
    fn bad_models_rejected() {
        let net = triangle();
        let u = SizeDistribution::Uniform { epsilon: 1.0 };
        assert!(TransactionModel::new(&net, vec![(0, 0, 1.0, u)]).is_err());
        assert!(TransactionModel::new(&net, vec![(0, 1, 1.0, u), (1, 0, 1.0, u)]).is_err());
        assert!(TransactionModel::new(&net, vec![(0, 1, 0.0, u)]).is_err());
        assert!(TransactionModel::new(&net, vec![(0, 1, 1.0, SizeDistribution::Uniform { epsilon: 0.0 })]).is_err());
        assert!(TransactionModel::new(&net, vec![(0, 1, 1.0, SizeDistribution::Gaussian { mean: 0.0, sd: 0.0 })]).is_err());
    }

    #[test]
    fn infeasible_draw_stays_put() {
        let net = CreditNetwork::from_indexed(2, &[(0, 1, 1.0)]).unwrap();
        let rep = SpanningRepresentation::canonical(&net).unwrap();
        // From z = 0 the sender owns nothing; sending 0.5 always fails.
        let model = TransactionModel::new(&net, vec![(0, 1, 1.0, SizeDistribution::PointMass { k: 0.5 })]).unwrap();
        let chain = Chain::new(&rep, &net, &model).unwrap();
        let mut rng = rng::seeded(0);
        let mut state = ChainState::new(StatePoint::zeros(1));
        for _ in 0..10 {
            chain.step(&mut state, &mut rng).unwrap();
        }
        let reverse = TransactionModel::new(&net, vec![(1, 0, 1.0, SizeDistribution::PointMass { k: 0.5 })]).unwrap();
        let chain2 = Chain::new(&rep, &net, &reverse).unwrap();
        let moved = chain2.step(&mut state, &mut rng).unwrap();
        assert_eq!(state.steps, 11);
        assert_eq!(state.accepted, 1);
        assert!(moved == (state.current[0] != 0.0));
    }

    #[test]
    fn single_edge_chain_is_uniform() {
        let net = CreditNetwork::from_indexed(2, &[(0, 1, 1.0)]).unwrap();
        let rep = SpanningRepresentation::canonical(&net).unwrap();
        let model = TransactionModel::new(&net, vec![(0, 1, 1.0, SizeDistribution::Uniform { epsilon: 0.5 })]).unwrap();
        let chain = Chain::new(&rep, &net, &model).unwrap();
        let cfg = SamplerConfig { seed: 0, burn_in: 100, thinning: 20, tolerance: 1e-9 };
        let opts = RunOptions { keep_states: true, ..Default::default() };
        let summary = chain.run(40_000, &cfg, &opts, &mut rng::seeded(9)).unwrap();
        let xs: Vec<f64> = summary.states.iter().map(|z| z[0]).collect();
        assert!(xs.iter().all(|&x| (-1e-9..=1.0 + 1e-9).contains(&x)));
        assert!(stats::ks_uniform(&xs, 0.0, 1.0).1 > 1e-3);
    }

    #[test]
    fn zero_steps_is_empty() {
        let net = triangle();
        let rep = SpanningRepresentation::canonical(&net).unwrap();
        let model = TransactionModel::complete_uniform(&net, 0.5).unwrap();
        let chain = Chain::new(&rep, &net, &model).unwrap();
        let opts = RunOptions { monitors: vec![Transaction::new(0, 1, 0.5).unwrap()], ..Default::default() };
        let s = chain.run(0, &SamplerConfig::for_dimension(2, 0), &opts, &mut rng::seeded(0)).unwrap();
        assert_eq!((s.steps, s.recorded, s.monitors[0].checks), (0, 0, 0));
    }
}
