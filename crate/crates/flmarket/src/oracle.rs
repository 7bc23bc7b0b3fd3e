//! Ground-truth solvers for small instances: exhaustive social-welfare
//! maximization over feasible subsets and a bisection oracle for critical
//! bids.

use crate::error::{Error, Result};
use crate::graph::ConflictGraph;
use crate::market::{
    data_utility, owner_total_cost, platform_comm_cost, quality_alpha, AuctionOutcome,
    DataOwnerType, MarketConfig,
};

/// Largest population the exhaustive solver accepts.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Welfare-maximizing feasible set, sorted ascending.
    pub best_set: Vec<usize>,
    pub best_welfare: f64,
    /// Number of feasible subsets evaluated, including the empty set.
    pub evaluated_count: u64,
}

struct Enumerator<'a> {
    owners: &'a [DataOwnerType],
    cfg: &'a MarketConfig,
    graph: &'a ConflictGraph,
    comm_cost: Vec<f64>,
    best_set: Vec<usize>,
    best_welfare: f64,
    evaluated: u64,
    current: Vec<usize>,
}

impl Enumerator<'_> {
    /// Welfare of the current set from the running sums, O(1) per node.
    fn welfare(&self, total_d: f64, emd_sum: f64, owner_cost: f64, comm: f64) -> f64 {
        let w = self.current.len();
        if w == 0 {
            return 0.0;
        }
        let a = quality_alpha(emd_sum / w as f64, self.cfg);
        let quality =
            a - self.cfg.kappa1 * (-self.cfg.kappa2 * (self.cfg.kappa3 * total_d).powf(a)).exp();
        let platform = self.cfg.global_epochs
            * self.cfg.model_size
            * (w as f64 - 1.0)
            * self.cfg.platform_compute_cost
            + comm;
        self.cfg.kappa7 * quality - platform - owner_cost
    }

    fn record(&mut self, welfare: f64) {
        self.evaluated += 1;
        let better = welfare > self.best_welfare
            || (welfare == self.best_welfare
                && (self.current.len() < self.best_set.len()
                    || (self.current.len() == self.best_set.len()
                        && self.current < self.best_set)));
        if better {
            self.best_welfare = welfare;
            self.best_set = self.current.clone();
        }
    }

    fn recurse(&mut self, next: usize, total_d: f64, emd_sum: f64, owner_cost: f64, comm: f64) {
        if next == self.owners.len() {
            return;
        }
        // Exclude branch first so ties resolve toward lexicographically
        // smaller sets.
        self.recurse(next + 1, total_d, emd_sum, owner_cost, comm);
        if !self.graph.conflicts_with_any(next, &self.current) {
            let o = &self.owners[next];
            let total_d = total_d + o.data_size;
            let emd_sum = emd_sum + o.emd;
            let owner_cost = owner_cost + owner_total_cost(o, self.cfg);
            let comm = comm + self.comm_cost[next];
            self.current.push(next);
            let welfare = self.welfare(total_d, emd_sum, owner_cost, comm);
            self.record(welfare);
            self.recurse(next + 1, total_d, emd_sum, owner_cost, comm);
            self.current.pop();
        }
    }
}

/// Exhaustively enumerates every channel-feasible subset and returns the
/// exact social-welfare maximizer. Refuses populations beyond
/// [`ENUMERATION_LIMIT`].
pub fn optimal_welfare(
    owners: &[DataOwnerType],
    cfg: &MarketConfig,
    graph: &ConflictGraph,
) -> Result<OracleResult> {
    if owners.len() > ENUMERATION_LIMIT {
        return Err(Error::OracleCapacity {
            n: owners.len(),
            limit: ENUMERATION_LIMIT,
        });
    }
    let comm_cost = owners
        .iter()
        .map(|o| platform_comm_cost(o, cfg))
        .collect();
    let mut e = Enumerator {
        owners,
        cfg,
        graph,
        comm_cost,
        best_set: Vec::new(),
        best_welfare: 0.0,
        evaluated: 1, // the empty set
        current: Vec::new(),
    };
    e.recurse(0, 0.0, 0.0, 0.0, 0.0);
    Ok(OracleResult {
        best_set: e.best_set,
        best_welfare: e.best_welfare,
        evaluated_count: e.evaluated,
    })
}

/// Ratio of a mechanism's welfare to the oracle welfare, clamped to `[0, 1]`.
pub fn approx_ratio(mechanism_welfare: f64, oracle_welfare: f64) -> Result<f64> {
    if oracle_welfare <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "oracle welfare must be positive, got {oracle_welfare}"
        )));
    }
    Ok((mechanism_welfare / oracle_welfare).clamp(0.0, 1.0))
}

/// Supremum winning bid for owner `i` under `mechanism`, found by bisection.
///
/// The mechanism must be deterministic and its win predicate monotone
/// non-increasing in the bid. The initial bracket upper bound is the owner's
/// standalone data utility plus one; it is expanded geometrically if the
/// owner still wins there.
pub fn critical_bid_bisection<M>(
    mechanism: &M,
    owners: &[DataOwnerType],
    cfg: &MarketConfig,
    i: usize,
    tol: f64,
) -> Result<f64>
where
    M: Fn(&[DataOwnerType]) -> AuctionOutcome,
{
    let mut probe = owners.to_vec();
    let mut win = move |bid: f64| {
        probe[i].bid = bid;
        mechanism(&probe).is_winner(i)
    };
    let upper = data_utility(&[i], owners, cfg) + 1.0;
    bisect_win_boundary(&mut win, owners[i].bid, upper, tol, true).map_err(|e| match e {
        Error::OracleViolation(msg) => Error::OracleViolation(format!("owner {i}: {msg}")),
        other => other,
    })
}

/// Bisection on a boolean win predicate assumed monotone non-increasing in
/// the bid. `scan` additionally probes interior points and rejects
/// win-after-lose inversions.
pub fn bisect_win_boundary<F>(
    win: &mut F,
    current_bid: f64,
    upper_hint: f64,
    tol: f64,
    scan: bool,
) -> Result<f64>
where
    F: FnMut(f64) -> bool,
{
    if !win(current_bid) {
        return Err(Error::OracleViolation(
            "never wins: owner loses at its current bid".into(),
        ));
    }
    let mut lo = current_bid;
    let mut hi = upper_hint.max(current_bid + 1.0);
    let mut expansions = 0;
    while win(hi) {
        lo = hi;
        hi = hi * 2.0 + 1.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::OracleViolation(
                "no losing bid found within the expanded bracket".into(),
            ));
        }
    }
    if scan {
        let mut seen_loss = false;
        for k in 1..8 {
            let b = lo + (hi - lo) * k as f64 / 8.0;
            let w = win(b);
            if w && seen_loss {
                return Err(Error::OracleViolation(format!(
                    "win predicate not monotone near bid {b}"
                )));
            }
            seen_loss |= !w;
        }
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if win(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
