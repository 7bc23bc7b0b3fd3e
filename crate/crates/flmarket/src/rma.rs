//! Reverse multi-dimensional auction: randomized grouping by EMD, greedy
//! winner selection by marginal virtual social-welfare density, and critical
//! payments.
//!
//! The auction partitions owners into `G` groups of equal EMD width, assigns
//! every group member the group's midpoint ("virtual") EMD, and processes
//! groups in uniformly random order. Within a group it greedily selects the
//! owner with the largest marginal density while positive, removing conflict
//! neighbors after each pick. Payments replay the selection without the
//! winner and take the largest break-even bid across replay steps, which is
//! the winner's critical bid.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::graph::ConflictGraph;
use crate::market::{
    platform_marginal_cost, quality_alpha, social_welfare, AuctionOutcome, DataOwnerType,
    MarketConfig,
};

/// Assignment of owners to EMD groups.
#[derive(Clone, Debug)]
pub struct GroupPartition {
    /// 1-based group index per owner.
    pub group_of: Vec<usize>,
    /// Midpoint EMD per group, `(2j - 1) sigma_max / (2G)`.
    pub virtual_emd: Vec<f64>,
    /// Interval width `sigma_max / G`.
    pub width: f64,
}

/// Partitions owners by EMD: owner `i` with EMD in `[(j-1)eps, j eps)` joins
/// group `j`; an EMD of zero maps to group 1 and values at the top edge clamp
/// to group `G`.
pub fn partition_by_emd(owners: &[DataOwnerType], cfg: &MarketConfig) -> GroupPartition {
    let g = cfg.groups;
    let width = cfg.sigma_max / g as f64;
    let group_of = owners
        .iter()
        .map(|o| ((o.emd / width).ceil() as usize).clamp(1, g))
        .collect();
    let virtual_emd = (1..=g)
        .map(|j| (2 * j - 1) as f64 * cfg.sigma_max / (2.0 * g as f64))
        .collect();
    GroupPartition {
        group_of,
        virtual_emd,
        width,
    }
}

/// Marginal virtual social-welfare density of adding owner `i` to the set `s`
/// while evaluating data utility at group `j`'s virtual EMD:
/// `[o(D) - o(D + d_i) - chat(i) - b_i] / ell_i` with
/// `o(z) = kappa1 kappa7 exp(-kappa2 (kappa3 z)^alpha)` and
/// `ell_i` the owner's conflict degree plus one.
pub fn marginal_density(
    i: usize,
    s: &[usize],
    group_j: usize,
    owners: &[DataOwnerType],
    cfg: &MarketConfig,
    graph: &ConflictGraph,
) -> f64 {
    debug_assert!(!s.contains(&i));
    let partition = partition_by_emd(owners, cfg);
    let ctx = RmaContext::new(owners, cfg, graph, &partition);
    let total_d: f64 = s.iter().map(|&k| owners[k].data_size).sum();
    ctx.density(i, group_j, total_d, s.len())
}

/// Shared per-auction tables: virtual-EMD exponents per group, per-owner
/// conflict degrees and platform-side communication costs.
struct RmaContext<'a> {
    owners: &'a [DataOwnerType],
    cfg: &'a MarketConfig,
    graph: &'a ConflictGraph,
    /// `alpha(virtual EMD)` per group, index 0 = group 1.
    group_alpha: Vec<f64>,
    /// Conflict degree + 1 per owner.
    ell: Vec<f64>,
}

impl<'a> RmaContext<'a> {
    fn new(
        owners: &'a [DataOwnerType],
        cfg: &'a MarketConfig,
        graph: &'a ConflictGraph,
        partition: &GroupPartition,
    ) -> Self {
        let group_alpha = partition
            .virtual_emd
            .iter()
            .map(|&v| quality_alpha(v, cfg))
            .collect();
        let ell = (0..owners.len())
            .map(|i| (graph.degree(i) + 1) as f64)
            .collect();
        Self {
            owners,
            cfg,
            graph,
            group_alpha,
            ell,
        }
    }

    /// `o(z)` at group `j`'s virtual EMD.
    fn o(&self, group_j: usize, z: f64) -> f64 {
        let a = self.group_alpha[group_j - 1];
        self.cfg.kappa1
            * self.cfg.kappa7
            * (-self.cfg.kappa2 * (self.cfg.kappa3 * z).powf(a)).exp()
    }

    /// Marginal virtual utility of adding `i` at total data `total_d`, minus
    /// the marginal platform cost at `existing` workers.
    fn marginal_gain(&self, i: usize, group_j: usize, total_d: f64, existing: usize) -> f64 {
        self.o(group_j, total_d) - self.o(group_j, total_d + self.owners[i].data_size)
            - platform_marginal_cost(&self.owners[i], existing, self.cfg)
    }

    fn density(&self, i: usize, group_j: usize, total_d: f64, existing: usize) -> f64 {
        (self.marginal_gain(i, group_j, total_d, existing) - self.owners[i].bid) / self.ell[i]
    }

    /// Bid that makes owner `i`'s density equal `v_target` at the given state.
    fn break_even_bid(&self, i: usize, group_j: usize, total_d: f64, existing: usize, v_target: f64) -> f64 {
        self.marginal_gain(i, group_j, total_d, existing) - v_target * self.ell[i]
    }

    /// Highest-density candidate in `pool`; ties break toward the smallest id
    /// because the pool is kept in ascending order.
    fn best_candidate(&self, pool: &[usize], group_j: usize, total_d: f64, existing: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &k in pool {
            let v = self.density(k, group_j, total_d, existing);
            if best.map_or(true, |(_, bv)| v > bv) {
                best = Some((k, v));
            }
        }
        best
    }

    /// Greedy selection over `pool` for group `j`, starting from the
    /// accumulated data size and worker count of previously selected groups.
    /// Selects while the best density is strictly positive.
    fn select(&self, mut pool: Vec<usize>, group_j: usize, mut total_d: f64, mut existing: usize) -> Vec<usize> {
        let mut selected = Vec::new();
        while let Some((k, v)) = self.best_candidate(&pool, group_j, total_d, existing) {
            if v <= 0.0 {
                break;
            }
            selected.push(k);
            total_d += self.owners[k].data_size;
            existing += 1;
            pool.retain(|&x| x != k && !self.graph.conflicts(x, k));
        }
        selected
    }

    /// Critical payment for winner `i`: replays the selection on the group
    /// pool without `i` and takes the largest bid at which `i` still ties the
    /// step's candidate (or a zero density once candidates run out or turn
    /// non-positive). Stops at the first candidate conflicting with `i`,
    /// beyond which `i` cannot win at any bid.
    fn payment(&self, i: usize, pool_without_i: &[usize], group_j: usize, mut total_d: f64, mut existing: usize) -> f64 {
        let mut pool = pool_without_i.to_vec();
        let mut payment = 0.0_f64;
        loop {
            match self.best_candidate(&pool, group_j, total_d, existing) {
                None => {
                    // Pool exhausted: i wins as long as its density stays positive.
                    payment = payment.max(self.break_even_bid(i, group_j, total_d, existing, 0.0));
                    break;
                }
                Some((k, v)) => {
                    if v <= 0.0 {
                        // Selection would stop here; i only needs positive density.
                        payment =
                            payment.max(self.break_even_bid(i, group_j, total_d, existing, 0.0));
                        break;
                    }
                    payment = payment.max(self.break_even_bid(i, group_j, total_d, existing, v));
                    if self.graph.conflicts(i, k) {
                        // Once a conflicting candidate outranks i, i is removed
                        // from the pool and cannot win.
                        break;
                    }
                    total_d += self.owners[k].data_size;
                    existing += 1;
                    pool.retain(|&x| x != k && !self.graph.conflicts(x, k));
                }
            }
        }
        payment
    }
}

/// Runs the full randomized auction. Deterministic given the seed: the seed
/// fixes the uniformly random group processing order.
pub fn run_rma(
    owners: &[DataOwnerType],
    graph: &ConflictGraph,
    cfg: &MarketConfig,
    seed: u64,
) -> AuctionOutcome {
    let n = owners.len();
    if n == 0 {
        return AuctionOutcome::empty(0);
    }
    let partition = partition_by_emd(owners, cfg);
    let ctx = RmaContext::new(owners, cfg, graph, &partition);

    let mut group_members: Vec<Vec<usize>> = vec![Vec::new(); cfg.groups];
    for (i, &j) in partition.group_of.iter().enumerate() {
        group_members[j - 1].push(i);
    }

    let mut order: Vec<usize> = (1..=cfg.groups).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut winners: Vec<usize> = Vec::new();
    let mut payments = vec![0.0; n];
    let mut total_d = 0.0;

    for &j in &order {
        // Candidates: group members not conflicting with winners so far.
        let pool: Vec<usize> = group_members[j - 1]
            .iter()
            .copied()
            .filter(|&k| !graph.conflicts_with_any(k, &winners))
            .collect();
        if pool.is_empty() {
            continue;
        }
        let existing = winners.len();
        let group_winners = ctx.select(pool.clone(), j, total_d, existing);
        for &i in &group_winners {
            let pool_without_i: Vec<usize> = pool.iter().copied().filter(|&k| k != i).collect();
            payments[i] = ctx.payment(i, &pool_without_i, j, total_d, existing);
        }
        for &i in &group_winners {
            total_d += owners[i].data_size;
        }
        winners.extend(group_winners);
    }

    winners.sort_unstable();
    let social = social_welfare(&winners, owners, cfg);
    AuctionOutcome {
        winners,
        payments,
        social_welfare: social,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::critical_bid_bisection;
    use crate::scenario::{generate_instances, ScenarioConfig};
    use rand::Rng;

    fn cfg_one_group_no_platform() -> MarketConfig {
        MarketConfig {
            groups: 1,
            platform_compute_cost: 0.0,
            platform_energy_cost: 0.0,
            ..MarketConfig::default()
        }
    }

    fn isolated_owner(d: f64, bid: f64, channel: u32) -> DataOwnerType {
        DataOwnerType {
            bid,
            data_size: d,
            emd: 0.5,
            channels: vec![channel],
            channel_gain: 5e6,
            unit_data_cost: 1e-5,
            unit_compute_cost: 1e-5,
            unit_energy_cost: 1e-2,
        }
    }

    #[test]
    fn partition_examples() {
        let cfg = MarketConfig::default(); // G = 10, sigma_max = 1.2, eps = 0.12
        let mk = |emd: f64| DataOwnerType {
            emd,
            ..isolated_owner(1.0, 1.0, 1)
        };
        let owners = vec![mk(0.0), mk(0.05), mk(0.12), mk(0.6), mk(1.2)];
        let p = partition_by_emd(&owners, &cfg);
        assert_eq!(p.group_of, vec![1, 1, 1, 5, 10]);
        assert!((p.width - 0.12).abs() < 1e-12);
        assert!((p.virtual_emd[0] - 0.06).abs() < 1e-12);
        assert!((p.virtual_emd[9] - 1.14).abs() < 1e-12);
    }

    #[test]
    fn marginal_density_matches_direct_evaluation() {
        let cfg = cfg_one_group_no_platform();
        // Single group G=1: virtual EMD = 0.6.
        let owners = vec![isolated_owner(10.0, 1.0, 1)];
        let graph = ConflictGraph::from_owners(&owners);
        let v = marginal_density(0, &[], 1, &owners, &cfg, &graph);
        assert!((v - 3.5177010197506746).abs() < 1e-9, "{v}");
    }

    #[test]
    fn density_zero_at_break_even_bid_and_halves_with_degree() {
        let cfg = cfg_one_group_no_platform();
        let break_even = 4.517701019750675;
        let owners = vec![isolated_owner(10.0, break_even, 1)];
        let graph = ConflictGraph::from_owners(&owners);
        assert!(marginal_density(0, &[], 1, &owners, &cfg, &graph).abs() < 1e-9);

        // A conflicting neighbor doubles ell and halves the density.
        let mut with_neighbor = vec![isolated_owner(10.0, 1.0, 1), isolated_owner(1.0, 1.0, 1)];
        with_neighbor[1].channels = vec![1];
        let graph2 = ConflictGraph::from_owners(&with_neighbor);
        let solo = vec![isolated_owner(10.0, 1.0, 1)];
        let graph1 = ConflictGraph::from_owners(&solo);
        let v1 = marginal_density(0, &[], 1, &solo, &cfg, &graph1);
        let v2 = marginal_density(0, &[], 1, &with_neighbor, &cfg, &graph2);
        assert!((v1 - 2.0 * v2).abs() < 1e-12);
    }

    #[test]
    fn lone_winner_pays_the_zero_density_bid() {
        let cfg = cfg_one_group_no_platform();
        let owners = vec![isolated_owner(10.0, 1.0, 1)];
        let graph = ConflictGraph::from_owners(&owners);
        let outcome = run_rma(&owners, &graph, &cfg, 0);
        assert_eq!(outcome.winners, vec![0]);
        assert!((outcome.payments[0] - 4.517701019750675).abs() < 1e-9);
    }

    #[test]
    fn selection_respects_conflicts_and_density_order() {
        let cfg = cfg_one_group_no_platform();
        // Owner 0 conflicts with owner 1; owner 2 isolated. Owner 0 has the
        // largest density, so 1 must be dropped and 2 still selected.
        let owners = vec![
            isolated_owner(10.0, 0.5, 1),
            isolated_owner(9.0, 0.5, 1),
            isolated_owner(3.0, 0.5, 7),
        ];
        let graph = ConflictGraph::from_owners(&owners);
        let outcome = run_rma(&owners, &graph, &cfg, 0);
        assert_eq!(outcome.winners, vec![0, 2]);
        assert_eq!(outcome.payments[1], 0.0);
    }

    #[test]
    fn greedy_trace_matches_manual_replay() {
        let cfg = cfg_one_group_no_platform();
        let owners = vec![
            isolated_owner(6.0, 0.8, 1),
            isolated_owner(5.0, 0.2, 2),
            isolated_owner(4.0, 0.1, 3),
        ];
        let graph = ConflictGraph::from_owners(&owners);
        // Manual replay of the greedy rule.
        let mut pool: Vec<usize> = vec![0, 1, 2];
        let mut chosen: Vec<usize> = Vec::new();
        loop {
            let best = pool
                .iter()
                .copied()
                .map(|k| (k, marginal_density(k, &chosen, 1, &owners, &cfg, &graph)))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .filter(|&(_, v)| v > 0.0);
            match best {
                Some((k, _)) => {
                    chosen.push(k);
                    pool.retain(|&x| x != k);
                }
                None => break,
            }
        }
        chosen.sort_unstable();
        let outcome = run_rma(&owners, &graph, &cfg, 0);
        assert_eq!(outcome.winners, chosen);
    }

    #[test]
    fn empty_and_overpriced_populations() {
        let cfg = MarketConfig::default();
        let graph = ConflictGraph::build::<Vec<u32>>(&[]);
        let outcome = run_rma(&[], &graph, &cfg, 0);
        assert!(outcome.winners.is_empty());
        assert_eq!(outcome.social_welfare, 0.0);

        // Bids far above any attainable marginal utility lose.
        let owners: Vec<DataOwnerType> = (0..5)
            .map(|i| isolated_owner(5.0, 1e4, i as u32 + 1))
            .collect();
        let graph = ConflictGraph::from_owners(&owners);
        let outcome = run_rma(&owners, &graph, &cfg, 1);
        assert!(outcome.winners.is_empty());
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = MarketConfig::default();
        let scenario = ScenarioConfig::default().with_owner_count(20);
        let instance = &generate_instances(&scenario, &cfg, 1, 5)[0];
        let a = run_rma(&instance.owners, &instance.graph, &cfg, 99);
        let b = run_rma(&instance.owners, &instance.graph, &cfg, 99);
        assert_eq!(a.winners, b.winners);
        assert_eq!(a.payments, b.payments);
        assert_eq!(a.social_welfare, b.social_welfare);
    }

    #[test]
    fn payments_cover_bids_and_losers_get_zero() {
        let cfg = MarketConfig::default();
        let scenario = ScenarioConfig::default().with_owner_count(15);
        for instance in generate_instances(&scenario, &cfg, 20, 21) {
            let outcome = run_rma(&instance.owners, &instance.graph, &cfg, instance.seed);
            for i in 0..instance.owners.len() {
                if outcome.is_winner(i) {
                    assert!(
                        outcome.payments[i] >= instance.owners[i].bid - 1e-9,
                        "winner {i} paid below bid"
                    );
                } else {
                    assert_eq!(outcome.payments[i], 0.0);
                }
            }
            assert!(instance.graph.is_feasible(&outcome.winners));
        }
    }

    #[test]
    fn winner_keeps_winning_with_lower_bid_or_more_data() {
        let cfg = MarketConfig::default();
        let scenario = ScenarioConfig::default().with_owner_count(12);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for instance in generate_instances(&scenario, &cfg, 15, 33) {
            let outcome = run_rma(&instance.owners, &instance.graph, &cfg, instance.seed);
            for &i in &outcome.winners {
                let mut lower = instance.owners.clone();
                lower[i].bid *= rng.random_range(0.1..1.0);
                let o2 = run_rma(&lower, &instance.graph, &cfg, instance.seed);
                assert!(o2.is_winner(i), "lowering the bid must keep {i} winning");

                let mut more = instance.owners.clone();
                more[i].data_size = (more[i].data_size * rng.random_range(1.0..1.5))
                    .min(cfg.d_max);
                let o3 = run_rma(&more, &instance.graph, &cfg, instance.seed);
                assert!(o3.is_winner(i), "raising the data size must keep {i} winning");
            }
        }
    }

    #[test]
    fn closed_form_payment_matches_bisection() {
        let cfg = MarketConfig::default();
        let scenario = ScenarioConfig::default().with_owner_count(10);
        for instance in generate_instances(&scenario, &cfg, 10, 77) {
            let seed = instance.seed;
            let graph = instance.graph.clone();
            let cfg = cfg.clone();
            let mech = move |owners: &[DataOwnerType]| run_rma(owners, &graph, &cfg, seed);
            let outcome = mech(&instance.owners);
            for &i in &outcome.winners {
                let p =
                    critical_bid_bisection(&mech, &instance.owners, &MarketConfig::default(), i, 1e-9)
                        .unwrap();
                assert!(
                    (p - outcome.payments[i]).abs() <= 1e-6 * (1.0 + p.abs()),
                    "instance {seed} owner {i}: closed form {} vs bisection {p}",
                    outcome.payments[i]
                );
            }
        }
    }
}
