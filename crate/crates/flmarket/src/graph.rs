//! Wireless-spectrum conflict graph over data owners.
//!
//! Two owners conflict iff their requested channel sets intersect. Feasible
//! winner sets are independent sets of this graph. The graph is immutable
//! after construction and safe to share across threads.

use crate::market::DataOwnerType;

/// Symmetric, irreflexive conflict relation stored as one bitset row per
/// owner.
#[derive(Clone, Debug)]
pub struct ConflictGraph {
    n: usize,
    words: usize,
    adj: Vec<u64>,
    degree: Vec<usize>,
}

impl ConflictGraph {
    /// Builds the graph from per-owner channel request sets by exact pairwise
    /// intersection test. Channel lists need not be sorted.
    pub fn build<S: AsRef<[u32]>>(channel_requests: &[S]) -> Self {
        let n = channel_requests.len();
        let words = n.div_ceil(64).max(1);
        let mut adj = vec![0u64; n * words];
        let mut degree = vec![0usize; n];

        let sorted: Vec<Vec<u32>> = channel_requests
            .iter()
            .map(|s| {
                let mut v = s.as_ref().to_vec();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();

        for i in 0..n {
            for j in (i + 1)..n {
                if intersects(&sorted[i], &sorted[j]) {
                    adj[i * words + j / 64] |= 1 << (j % 64);
                    adj[j * words + i / 64] |= 1 << (i % 64);
                    degree[i] += 1;
                    degree[j] += 1;
                }
            }
        }
        Self { n, words, adj, degree }
    }

    pub fn from_owners(owners: &[DataOwnerType]) -> Self {
        let requests: Vec<&[u32]> = owners.iter().map(|o| o.channels.as_slice()).collect();
        Self::build(&requests)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn conflicts(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Number of owners in conflict with `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.degree[i]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.conflicts(i, j))
    }

    /// Conflict set of `set`: owners outside `set` adjacent to some member.
    pub fn conflict_set(&self, set: &[usize]) -> Vec<usize> {
        let mut mask = vec![0u64; self.words];
        for &i in set {
            for (w, m) in mask.iter_mut().zip(&self.adj[i * self.words..(i + 1) * self.words]) {
                *w |= m;
            }
        }
        for &i in set {
            mask[i / 64] &= !(1 << (i % 64));
        }
        (0..self.n)
            .filter(|&j| mask[j / 64] >> (j % 64) & 1 == 1)
            .collect()
    }

    /// True iff `set` contains no internal conflict edge.
    pub fn is_feasible(&self, set: &[usize]) -> bool {
        for (k, &i) in set.iter().enumerate() {
            for &j in &set[k + 1..] {
                if self.conflicts(i, j) {
                    return false;
                }
            }
        }
        true
    }

    /// True iff `candidate` conflicts with any member of `set`.
    pub fn conflicts_with_any(&self, candidate: usize, set: &[usize]) -> bool {
        set.iter().any(|&i| self.conflicts(candidate, i))
    }

    /// Symmetrically normalized adjacency with self-loops,
    /// `B^{-1/2} (A + I) B^{-1/2}` with `B` the row-sum diagonal of `A + I`,
    /// returned row-major as an `n x n` matrix.
    pub fn normalized_adjacency(&self) -> Vec<f64> {
        let n = self.n;
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|i| 1.0 / ((self.degree[i] + 1) as f64).sqrt())
            .collect();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            out[i * n + i] = inv_sqrt[i] * inv_sqrt[i];
            for j in 0..n {
                if i != j && self.conflicts(i, j) {
                    out[i * n + j] = inv_sqrt[i] * inv_sqrt[j];
                }
            }
        }
        out
    }
}

fn intersects(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three-owner channel request pattern where only the first two share a
    /// channel (channel 6).
    fn example_requests() -> Vec<Vec<u32>> {
        vec![vec![1, 4, 6], vec![2, 5, 6], vec![3, 7]]
    }

    #[test]
    fn build_detects_single_shared_channel() {
        let g = ConflictGraph::build(&example_requests());
        assert!(g.conflicts(0, 1));
        assert!(g.conflicts(1, 0));
        assert!(!g.conflicts(0, 2));
        assert!(!g.conflicts(1, 2));
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.degree(2), 0);
    }

    #[test]
    fn disjoint_requests_give_edgeless_graph() {
        let g = ConflictGraph::build(&[vec![1u32, 2], vec![3, 4], vec![5]]);
        for i in 0..3 {
            assert_eq!(g.degree(i), 0);
        }
        assert!(g.is_feasible(&[0, 1, 2]));
    }

    #[test]
    fn shared_channel_gives_complete_graph() {
        let g = ConflictGraph::build(&[vec![1u32], vec![1, 2], vec![1, 3], vec![1]]);
        for i in 0..4 {
            assert_eq!(g.degree(i), 3);
            for j in 0..4 {
                assert_eq!(g.conflicts(i, j), i != j);
            }
        }
    }

    #[test]
    fn conflict_set_examples() {
        let g = ConflictGraph::build(&example_requests());
        assert!(g.conflict_set(&[]).is_empty());
        assert_eq!(g.conflict_set(&[0]), vec![1]);
        assert!(g.conflict_set(&[2]).is_empty());
        // Members of the query set are excluded from the result.
        assert_eq!(g.conflict_set(&[0, 1]), Vec::<usize>::new());
    }

    #[test]
    fn feasibility_examples() {
        let g = ConflictGraph::build(&example_requests());
        assert!(g.is_feasible(&[]));
        assert!(!g.is_feasible(&[0, 1]));
        assert!(g.is_feasible(&[0, 2]));
        assert!(g.is_feasible(&[1, 2]));
    }

    #[test]
    fn feasibility_downward_closed() {
        let g = ConflictGraph::build(&[
            vec![1u32, 2],
            vec![3],
            vec![4, 5],
            vec![6],
            vec![2, 7],
        ]);
        let feasible = vec![1usize, 2, 3];
        assert!(g.is_feasible(&feasible));
        // Every subset of a feasible set is feasible.
        for mask in 0u32..8 {
            let sub: Vec<usize> = feasible
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            assert!(g.is_feasible(&sub));
        }
    }

    #[test]
    fn normalized_adjacency_isolated_node() {
        let g = ConflictGraph::build(&[vec![1u32]]);
        assert_eq!(g.normalized_adjacency(), vec![1.0]);
    }

    #[test]
    fn normalized_adjacency_two_connected_nodes() {
        let g = ConflictGraph::build(&[vec![1u32], vec![1u32]]);
        let m = g.normalized_adjacency();
        for v in m {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_adjacency_symmetric_with_bounded_rows() {
        let g = ConflictGraph::build(&example_requests());
        let m = g.normalized_adjacency();
        let n = g.len();
        for i in 0..n {
            for j in 0..n {
                assert!((m[i * n + j] - m[j * n + i]).abs() < 1e-15);
            }
            // Row sums of the symmetric normalization are at most 1.
            let row: f64 = m[i * n..(i + 1) * n].iter().sum();
            assert!(row <= 1.0 + 1e-12);
        }
    }
}
