//! Closed-form economics of the federated-learning services market: label
//! distributions and EMD, the data-quality curve, owner and platform costs,
//! utilities and social welfare.
//!
//! All money and cost quantities are dimensionless model units at double
//! precision. Every operation here is a pure function of its inputs.

use crate::error::{Error, Result};

/// A probability distribution over class labels.
///
/// Invariant: each probability lies in `[0, 1]` and they sum to one within
/// `1e-9`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelDistribution {
    probs: Vec<f64>,
}

impl LabelDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("label distribution is empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidInput(format!(
                "label probability {p} outside [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "label probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Uniform distribution over `labels` classes.
    pub fn uniform(labels: usize) -> Self {
        assert!(labels > 0, "need at least one label");
        Self {
            probs: vec![1.0 / labels as f64; labels],
        }
    }

    /// Empirical distribution from per-label sample counts.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if counts.is_empty() || total == 0 {
            return Err(Error::InvalidInput("no samples in label counts".into()));
        }
        Ok(Self {
            probs: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Earth mover's distance between a local label distribution and the
/// reference distribution: the L1 distance of the per-label probabilities.
pub fn emd(local: &LabelDistribution, reference: &LabelDistribution) -> Result<f64> {
    if local.len() != reference.len() {
        return Err(Error::InvalidInput(format!(
            "label set mismatch: {} vs {}",
            local.len(),
            reference.len()
        )));
    }
    Ok(local
        .probs
        .iter()
        .zip(&reference.probs)
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// One data owner's reported type plus its private unit costs.
///
/// Under truthful bidding the bid equals [`owner_total_cost`] evaluated on
/// the owner's own fields.
#[derive(Clone, Debug)]
pub struct DataOwnerType {
    /// Reported bid (asking price) for the full service.
    pub bid: f64,
    /// Local data size, in `[0, d_max]`.
    pub data_size: f64,
    /// EMD of the local label distribution vs the reference, in `[0, sigma_max]`.
    pub emd: f64,
    /// Requested wireless channel ids, sorted and deduplicated.
    pub channels: Vec<u32>,
    /// Normalized channel power gain, strictly positive.
    pub channel_gain: f64,
    /// Private unit cost of local data (gamma).
    pub unit_data_cost: f64,
    /// Private unit computational cost (alpha).
    pub unit_compute_cost: f64,
    /// Private unit transmit-energy cost (beta).
    pub unit_energy_cost: f64,
}

impl DataOwnerType {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Sets the bid to the owner's true total service cost.
    pub fn with_truthful_bid(mut self, cfg: &MarketConfig) -> Self {
        self.bid = owner_total_cost(&self, cfg);
        self
    }
}

/// All model constants of the market.
#[derive(Clone, Debug)]
pub struct MarketConfig {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    pub kappa5: f64,
    pub kappa6: f64,
    pub kappa7: f64,
    /// Largest EMD the platform accepts.
    pub sigma_max: f64,
    /// Largest per-owner data size.
    pub d_max: f64,
    /// Number of EMD groups used by the greedy auction.
    pub groups: usize,
    /// Local epochs per global round.
    pub local_epochs: f64,
    /// Global aggregation rounds.
    pub global_epochs: f64,
    /// Model size constant.
    pub model_size: f64,
    /// Per-channel bandwidth in Hz.
    pub bandwidth: f64,
    /// Required uplink rate in bit/s.
    pub rate: f64,
    /// Platform unit computational cost (alpha hat).
    pub platform_compute_cost: f64,
    /// Platform unit transmit-energy cost (beta hat).
    pub platform_energy_cost: f64,
    /// Default population size.
    pub owner_count: usize,
    /// Size of the total channel pool, channels are `1..=channel_count`.
    pub channel_count: u32,
    /// Number of class labels.
    pub label_count: usize,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            kappa1: 0.361,
            kappa2: 4.348,
            kappa3: 1e-3,
            kappa4: 0.993,
            kappa5: 0.31,
            kappa6: 1.743,
            kappa7: 100.0,
            sigma_max: 1.2,
            d_max: 10.0,
            groups: 10,
            local_epochs: 5.0,
            global_epochs: 10.0,
            model_size: 0.5,
            bandwidth: 1e4,
            rate: 1e6,
            platform_compute_cost: 5e-2,
            platform_energy_cost: 5e-5,
            owner_count: 50,
            channel_count: 100,
            label_count: 10,
        }
    }
}

impl MarketConfig {
    /// Checks the constant invariants, in particular that the quality prefactor
    /// stays below one for every admissible EMD.
    pub fn validate(&self) -> Result<()> {
        let kappas = [
            self.kappa1,
            self.kappa2,
            self.kappa3,
            self.kappa4,
            self.kappa5,
            self.kappa6,
            self.kappa7,
        ];
        if kappas.iter().any(|k| *k <= 0.0 || !k.is_finite()) {
            return Err(Error::InvalidInput(
                "all quality constants must be positive and finite".into(),
            ));
        }
        // alpha(delta) < 1 for all delta >= 0 iff kappa4 < exp((kappa5/kappa6)^2).
        let bound = ((self.kappa5 / self.kappa6).powi(2)).exp();
        if self.kappa4 >= bound {
            return Err(Error::InvalidInput(format!(
                "kappa4 = {} must be below exp((kappa5/kappa6)^2) = {bound}",
                self.kappa4
            )));
        }
        if self.groups < 1 {
            return Err(Error::InvalidInput("group count must be at least 1".into()));
        }
        if self.bandwidth <= 0.0 || self.rate <= 0.0 {
            return Err(Error::InvalidInput(
                "bandwidth and rate must be positive".into(),
            ));
        }
        if self.sigma_max <= 0.0 || self.d_max <= 0.0 {
            return Err(Error::InvalidInput(
                "sigma_max and d_max must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of running an auction mechanism on a population.
#[derive(Clone, Debug)]
pub struct AuctionOutcome {
    /// Winning owner ids, sorted ascending.
    pub winners: Vec<usize>,
    /// Payment per owner id; zero for every loser.
    pub payments: Vec<f64>,
    /// Realized social welfare of the winner set under true costs.
    pub social_welfare: f64,
}

impl AuctionOutcome {
    pub fn empty(n: usize) -> Self {
        Self {
            winners: Vec::new(),
            payments: vec![0.0; n],
            social_welfare: 0.0,
        }
    }

    pub fn is_winner(&self, owner: usize) -> bool {
        self.winners.binary_search(&owner).is_ok()
    }

    pub fn total_payments(&self) -> f64 {
        self.winners.iter().map(|&i| self.payments[i]).sum()
    }

    pub fn worker_count(&self) -> usize {
        self.winners.len()
    }
}

/// Quality prefactor `alpha(delta) = kappa4 * exp(-((delta + kappa5)/kappa6)^2)`.
///
/// Strictly decreasing in the average EMD `delta`.
pub fn quality_alpha(delta: f64, cfg: &MarketConfig) -> f64 {
    let z = (delta + cfg.kappa5) / cfg.kappa6;
    cfg.kappa4 * (-z * z).exp()
}

/// Model quality for total data size `total_data` and average EMD `mean_emd`:
/// `alpha(delta) - kappa1 * exp(-kappa2 * (kappa3 D)^alpha(delta))`.
pub fn data_quality(total_data: f64, mean_emd: f64, cfg: &MarketConfig) -> f64 {
    let a = quality_alpha(mean_emd, cfg);
    a - cfg.kappa1 * (-cfg.kappa2 * (cfg.kappa3 * total_data).powf(a)).exp()
}

/// Total data size of a worker set.
pub fn total_data(workers: &[usize], owners: &[DataOwnerType]) -> f64 {
    workers.iter().map(|&i| owners[i].data_size).sum()
}

/// Average EMD of a worker set; zero for the empty set.
pub fn mean_emd(workers: &[usize], owners: &[DataOwnerType]) -> f64 {
    if workers.is_empty() {
        return 0.0;
    }
    workers.iter().map(|&i| owners[i].emd).sum::<f64>() / workers.len() as f64
}

/// Platform data utility `kappa7 * q(D, Delta)`; zero for the empty set by
/// convention (the empty trade is welfare-neutral).
pub fn data_utility(workers: &[usize], owners: &[DataOwnerType], cfg: &MarketConfig) -> f64 {
    if workers.is_empty() {
        return 0.0;
    }
    cfg.kappa7 * data_quality(total_data(workers, owners), mean_emd(workers, owners), cfg)
}

/// Owner's local data cost `d * gamma`.
pub fn owner_data_cost(data_size: f64, unit_data_cost: f64) -> f64 {
    data_size * unit_data_cost
}

/// Owner's computational cost `d * delta_l * delta_g * M * alpha`.
pub fn owner_compute_cost(data_size: f64, cfg: &MarketConfig, unit_compute_cost: f64) -> f64 {
    data_size * cfg.local_epochs * cfg.global_epochs * cfg.model_size * unit_compute_cost
}

/// Communication power from Shannon's formula over `channel_count` channels
/// of bandwidth `B` at required rate `R`: `(2^(R/(B C)) - 1) B C / h`.
///
/// Strictly decreasing in the channel count for fixed rate and bandwidth.
pub fn comm_power(channel_count: usize, channel_gain: f64, cfg: &MarketConfig) -> f64 {
    assert!(channel_count >= 1, "owner must request at least one channel");
    assert!(channel_gain > 0.0, "channel gain must be positive");
    let total_bandwidth = cfg.bandwidth * channel_count as f64;
    ((cfg.rate / total_bandwidth).exp2() - 1.0) * total_bandwidth / channel_gain
}

/// Owner's total communication energy cost: power times transmit time
/// `(M/R) * delta_g` times the unit energy cost.
pub fn owner_comm_cost(
    channel_count: usize,
    channel_gain: f64,
    cfg: &MarketConfig,
    unit_energy_cost: f64,
) -> f64 {
    comm_power(channel_count, channel_gain, cfg) * (cfg.model_size / cfg.rate)
        * cfg.global_epochs
        * unit_energy_cost
}

/// Owner's total service cost: data + computation + communication.
pub fn owner_total_cost(owner: &DataOwnerType, cfg: &MarketConfig) -> f64 {
    owner_data_cost(owner.data_size, owner.unit_data_cost)
        + owner_compute_cost(owner.data_size, cfg, owner.unit_compute_cost)
        + owner_comm_cost(owner.channel_count(), owner.channel_gain, cfg, owner.unit_energy_cost)
}

/// Platform-side communication cost for receiving one worker's model uploads.
pub fn platform_comm_cost(owner: &DataOwnerType, cfg: &MarketConfig) -> f64 {
    comm_power(owner.channel_count(), owner.channel_gain, cfg) * (cfg.model_size / cfg.rate)
        * cfg.global_epochs
        * cfg.platform_energy_cost
}

/// Platform total cost: aggregation compute `delta_g M (W-1) alpha_hat` plus
/// the per-worker communication terms. Zero for the empty set by convention.
pub fn platform_cost(workers: &[usize], owners: &[DataOwnerType], cfg: &MarketConfig) -> f64 {
    if workers.is_empty() {
        return 0.0;
    }
    let compute = cfg.global_epochs
        * cfg.model_size
        * (workers.len() as f64 - 1.0)
        * cfg.platform_compute_cost;
    let comm: f64 = workers
        .iter()
        .map(|&i| platform_comm_cost(&owners[i], cfg))
        .sum();
    compute + comm
}

/// Marginal platform cost of adding `owner` to an outcome that already has
/// `existing_workers` workers: the compute increment applies to every worker
/// except the first, the communication term always.
pub fn platform_marginal_cost(
    owner: &DataOwnerType,
    existing_workers: usize,
    cfg: &MarketConfig,
) -> f64 {
    let compute = if existing_workers >= 1 {
        cfg.global_epochs * cfg.model_size * cfg.platform_compute_cost
    } else {
        0.0
    };
    compute + platform_comm_cost(owner, cfg)
}

/// Social welfare of a worker set under true costs:
/// `data_utility - platform_cost - sum of owner total costs`. Zero for the
/// empty set.
pub fn social_welfare(workers: &[usize], owners: &[DataOwnerType], cfg: &MarketConfig) -> f64 {
    if workers.is_empty() {
        return 0.0;
    }
    let owner_costs: f64 = workers
        .iter()
        .map(|&i| owner_total_cost(&owners[i], cfg))
        .sum();
    data_utility(workers, owners, cfg) - platform_cost(workers, owners, cfg) - owner_costs
}

/// A worker's utility: payment minus true service cost.
pub fn worker_utility(payment: f64, cost: f64) -> f64 {
    payment - cost
}

/// Platform utility of an outcome: data utility minus platform cost minus all
/// payments.
pub fn platform_utility(
    outcome: &AuctionOutcome,
    owners: &[DataOwnerType],
    cfg: &MarketConfig,
) -> f64 {
    data_utility(&outcome.winners, owners, cfg)
        - platform_cost(&outcome.winners, owners, cfg)
        - outcome.total_payments()
}
