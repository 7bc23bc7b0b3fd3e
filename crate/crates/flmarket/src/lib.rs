//! Market simulator and mechanism library for a wireless federated-learning
//! services market.
//!
//! The library models data owners that sell federated-training service to a
//! platform over conflicting wireless channels. It provides:
//!
//! - the closed-form economics of the market (costs, data quality, social
//!   welfare) in [`market`],
//! - the spectrum conflict graph in [`graph`],
//! - two strategy-proof reverse auctions: the greedy [`rma`] mechanism and the
//!   learned [`drla`] mechanism (GCN embeddings + monotone scoring network),
//! - an exhaustive [`oracle`] for small instances and a bisection oracle for
//!   critical payments,
//! - a minimal reverse-mode autodiff engine and ADAM optimizer in [`nn`],
//! - double-deep-Q [`training`] for the learned auction,
//! - a desk-scale FedAvg simulator and data-quality curve fitter in [`fedsim`],
//! - a reusable property harness ([`properties`]) certifying truthfulness,
//!   individual rationality and payment criticality,
//! - scenario generation, a bid-price benchmark mechanism and sweep runners
//!   in [`scenario`], [`benchmark`] and [`sweep`].

pub mod benchmark;
pub mod drla;
pub mod error;
pub mod fedsim;
pub mod files;
pub mod graph;
pub mod market;
pub mod nn;
pub mod oracle;
pub mod properties;
pub mod rma;
pub mod scenario;
pub mod sweep;
pub mod training;

pub use error::{Error, Result};
pub use graph::ConflictGraph;
pub use market::{AuctionOutcome, DataOwnerType, LabelDistribution, MarketConfig};
pub use scenario::{Instance, ScenarioConfig};
