//! Liquidity analysis for payment-channel (credit) networks.
//!
//! A network state is identified with a point of the configuration zonotope
//! `Z ⊂ ℝⁿ` (`n = |V| − 1`), the Minkowski sum of the capacity-scaled edge
//! directions of a spanning representation. On top of that geometry the crate
//! provides:
//!
//! * [`network`]: topology, escrow configurations, max-flow feasibility.
//! * [`representation`]: spanning representations, score map, zonotope membership.
//! * [`treepoly`]: the spanning-tree polynomial, contractions, effective resistance.
//! * [`lp`]: a small bounded-variable simplex solver.
//! * [`samplers`]: exact uniform sampling of `Z` and hit-and-run.
//! * [`liquidity`]: closed-form and bounded transaction success probabilities.
//! * [`simulate`]: the random-transaction Markov chain on `Z`.

pub mod error;
pub mod format;
pub mod liquidity;
pub mod lp;
pub mod network;
pub mod representation;
pub mod rng;
pub mod samplers;
pub mod simulate;
pub mod stats;
pub mod treepoly;

pub use error::{Error, Result};
pub use network::{CreditNetwork, EscrowConfiguration, Flow, Transaction};
pub use representation::{SpanningRepresentation, StatePoint, Zonotope};
