//! Random population generation for simulation studies.
//!
//! Draws data-owner populations from the configured ranges, sets truthful
//! bids equal to the owners' true service costs, and builds the conflict
//! graph. Generation is reproducible: the same master seed yields the same
//! instance set, and every instance records its own seed for replay.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::graph::ConflictGraph;
use crate::market::{DataOwnerType, MarketConfig};

/// Ranges for the random population draws.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub owner_count: usize,
    /// Normalized channel power gain range.
    pub gain_range: (f64, f64),
    /// Data size is uniform on `[0, d_max]`.
    pub d_max: f64,
    /// EMD is uniform on `[0, sigma_max]`.
    pub sigma_max: f64,
    /// Unit data collection cost range.
    pub data_cost_range: (f64, f64),
    /// Unit computational cost range.
    pub compute_cost_range: (f64, f64),
    /// Unit transmit-energy cost range.
    pub energy_cost_range: (f64, f64),
    /// Channels are sampled without replacement from `1..=channel_pool`.
    pub channel_pool: u32,
    /// Inclusive range for the per-owner channel count.
    pub channels_per_owner: (u32, u32),
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            owner_count: 50,
            gain_range: (1e6, 1e7),
            d_max: 10.0,
            sigma_max: 1.2,
            data_cost_range: (1e-5, 1e-4),
            compute_cost_range: (1e-5, 1e-4),
            energy_cost_range: (1e-2, 1e-1),
            channel_pool: 100,
            channels_per_owner: (2, 6),
        }
    }
}

impl ScenarioConfig {
    /// Scenario whose population bounds follow the market configuration.
    pub fn from_market(cfg: &MarketConfig) -> Self {
        Self {
            owner_count: cfg.owner_count,
            d_max: cfg.d_max,
            sigma_max: cfg.sigma_max,
            channel_pool: cfg.channel_count,
            ..Self::default()
        }
    }

    pub fn with_owner_count(mut self, n: usize) -> Self {
        self.owner_count = n;
        self
    }
}

/// One auction instance: a population, its conflict graph and the seed it was
/// drawn from.
#[derive(Clone, Debug)]
pub struct Instance {
    pub owners: Vec<DataOwnerType>,
    pub graph: ConflictGraph,
    pub seed: u64,
}

impl Instance {
    pub fn from_owners(owners: Vec<DataOwnerType>, seed: u64) -> Self {
        let graph = ConflictGraph::from_owners(&owners);
        Self { owners, graph, seed }
    }

    pub fn len(&self) -> usize {
        self.owners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owners.is_empty()
    }
}

/// Draws one population from the scenario ranges with truthful bids.
pub fn generate_owners(
    scenario: &ScenarioConfig,
    cfg: &MarketConfig,
    rng: &mut impl Rng,
) -> Vec<DataOwnerType> {
    (0..scenario.owner_count)
        .map(|_| {
            let (c_lo, c_hi) = scenario.channels_per_owner;
            let channel_count = rng.random_range(c_lo..=c_hi) as usize;
            let mut channels: Vec<u32> = sample(rng, scenario.channel_pool as usize, channel_count)
                .into_iter()
                .map(|c| c as u32 + 1)
                .collect();
            channels.sort_unstable();
            let owner = DataOwnerType {
                bid: 0.0,
                data_size: rng.random_range(0.0..=scenario.d_max),
                emd: rng.random_range(0.0..=scenario.sigma_max),
                channels,
                channel_gain: rng.random_range(scenario.gain_range.0..=scenario.gain_range.1),
                unit_data_cost: rng
                    .random_range(scenario.data_cost_range.0..=scenario.data_cost_range.1),
                unit_compute_cost: rng
                    .random_range(scenario.compute_cost_range.0..=scenario.compute_cost_range.1),
                unit_energy_cost: rng
                    .random_range(scenario.energy_cost_range.0..=scenario.energy_cost_range.1),
            };
            owner.with_truthful_bid(cfg)
        })
        .collect()
}

/// Generates `count` reproducible instances from a master seed.
pub fn generate_instances(
    scenario: &ScenarioConfig,
    cfg: &MarketConfig,
    count: usize,
    seed: u64,
) -> Vec<Instance> {
    let mut master = ChaCha12Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let instance_seed = master.next_u64();
            generate_instance(scenario, cfg, instance_seed)
        })
        .collect()
}

/// Generates the single instance identified by `instance_seed`.
pub fn generate_instance(
    scenario: &ScenarioConfig,
    cfg: &MarketConfig,
    instance_seed: u64,
) -> Instance {
    let mut rng = ChaCha12Rng::seed_from_u64(instance_seed);
    let owners = generate_owners(scenario, cfg, &mut rng);
    Instance::from_owners(owners, instance_seed)
}
