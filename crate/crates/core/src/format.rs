//! JSON file schemas: network files and transaction-model files.
//!
//! Network file:
//!
//! ```json
//! {
//!   "vertices": ["A", "B", "C"],
//!   "edges": [
//!     {"id": "ab", "tail": "A", "head": "B", "capacity": 10.0},
//!     {"id": "bc", "tail": "B", "head": "C", "capacity": 4.0}
//!   ],
//!   "configuration": {"ab": 5.0, "bc": 2.0}
//! }
//! ```
//!
//! `configuration` is optional and maps edge ids to the amount owned by the
//! tail; omitted edges default to 0.
//!
//! Model file:
//!
//! ```json
//! {
//!   "pairs": [
//!     {"a": "A", "b": "B", "weight": 1.0, "size": {"uniform": {"epsilon": 0.5}}},
//!     {"a": "B", "b": "C", "weight": 2.0, "size": {"gaussian": {"mean": 0.0, "sd": 0.3}}}
//!   ],
//!   "monitor": [{"sender": "A", "receiver": "B", "amount": 0.5}],
//!   "steps": 100000
//! }
//! ```
//!
//! Size distributions: `uniform {epsilon}`, `gaussian {mean, sd}`,
//! `point_mass {k}`, `shifted_uniform {lo, hi}`. Weights are normalized on load.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{CreditNetwork, EscrowConfiguration, Transaction};
use crate::simulate::{SizeDistribution, TransactionModel};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub capacity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub configuration: Option<BTreeMap<String, f64>>,
}

impl NetworkFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn network(&self) -> Result<CreditNetwork> {
        CreditNetwork::new(
            self.vertices.iter().cloned(),
            self.edges
                .iter()
                .map(|e| (e.id.clone(), e.tail.clone(), e.head.clone(), e.capacity))
                .collect::<Vec<_>>(),
        )
    }

    pub fn configuration(&self, net: &CreditNetwork) -> Result<Option<EscrowConfiguration>> {
        let Some(map) = &self.configuration else {
            return Ok(None);
        };
        let mut owned = vec![0.0; net.edge_count()];
        for (id, &w) in map {
            owned[net.edge_by_id(id)?] = w;
        }
        EscrowConfiguration::new(net, owned).map(Some)
    }

    pub fn from_network(net: &CreditNetwork, cfg: Option<&EscrowConfiguration>) -> Self {
        NetworkFile {
            vertices: net.vertices().to_vec(),
            edges: net
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    id: e.id.clone(),
                    tail: net.vertex_name(e.tail).to_string(),
                    head: net.vertex_name(e.head).to_string(),
                    capacity: e.capacity,
                })
                .collect(),
            configuration: cfg.map(|c| {
                net.edges()
                    .iter()
                    .zip(c.owned())
                    .map(|(e, &w)| (e.id.clone(), w))
                    .collect()
            }),
        }
    }
}

/// Parses a network description, returning the network and its optional configuration.
pub fn load_network_with_configuration(text: &str) -> Result<(CreditNetwork, Option<EscrowConfiguration>)> {
    let file = NetworkFile::parse(text)?;
    let net = file.network()?;
    let cfg = file.configuration(&net)?;
    Ok((net, cfg))
}

pub fn load_network(text: &str) -> Result<CreditNetwork> {
    load_network_with_configuration(text).map(|(net, _)| net)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SizeRecord {
    Uniform { epsilon: f64 },
    Gaussian { mean: f64, sd: f64 },
    PointMass { k: f64 },
    ShiftedUniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub a: String,
    pub b: String,
    pub weight: f64,
    pub size: SizeRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorRecord {
    pub sender: String,
    pub receiver: String,
    pub amount: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub pairs: Vec<PairRecord>,
    #[serde(default)]
    pub monitor: Vec<MonitorRecord>,
    #[serde(default)]
    pub steps: Option<u64>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn model(&self, net: &CreditNetwork) -> Result<TransactionModel> {
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for p in &self.pairs {
            let size = match p.size {
                SizeRecord::Uniform { epsilon } => SizeDistribution::Uniform { epsilon },
                SizeRecord::Gaussian { mean, sd } => SizeDistribution::Gaussian { mean, sd },
                SizeRecord::PointMass { k } => SizeDistribution::PointMass { k },
                SizeRecord::ShiftedUniform { lo, hi } => SizeDistribution::ShiftedUniform { lo, hi },
            };
            pairs.push((net.vertex(&p.a)?, net.vertex(&p.b)?, p.weight, size));
        }
        TransactionModel::new(net, pairs)
    }

    pub fn monitors(&self, net: &CreditNetwork) -> Result<Vec<Transaction>> {
        self.monitor
            .iter()
            .map(|m| Transaction::by_name(net, &m.sender, &m.receiver, m.amount))
            .collect()
    }
}
