//! The one-ended limit tree seen from a typical vertex.
//!
//! The distinguished vertex S_0 sits at the bottom of an infinite ancestor
//! spine S_0, S_1, S_2, ...; truncating at spine depth `K` gives a finite
//! tree rooted at S_K in which the descendant subtree of each S_k is the
//! recursive tree built from k+1 glued branching processes: independent
//! Exp(1) inter-arrival times tau_0..tau_K put S_k's process at age
//! tau_0 + ... + tau_k when observed.
//!
//! Sampling runs one merged race: every present vertex spawns children at
//! rate 1, and at scheduled instants the next spine vertex down appears as
//! a child of the current deepest spine vertex. Labels follow creation
//! order, so the merged structure is itself a valid recursive tree rooted
//! at S_K.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::Result;
use crate::tree::RecursiveTree;

/// Truncated limit tree: the merged structure, the spine labels
/// (`spine[k]` is S_k, with S_K the root label 1), and the inter-arrival
/// times that drove the construction.
#[derive(Debug, Clone)]
pub struct LocalLimitSample {
    pub tree: RecursiveTree,
    pub spine: Vec<u32>,
    pub taus: Vec<f64>,
}

impl LocalLimitSample {
    pub fn spine_depth(&self) -> usize {
        self.spine.len() - 1
    }

    /// Label of S_k.
    pub fn spine_vertex(&self, k: usize) -> u32 {
        self.spine[k]
    }

    /// Size of the descendant subtree of S_k (the k-th glued tree).
    pub fn descendant_subtree_size(&self, k: usize) -> u64 {
        self.tree.subtree_size(self.spine[k])
    }
}

/// Sample the limit tree truncated at spine depth `K`.
pub fn sample_local_limit<R: Rng>(depth: usize, rng: &mut R) -> Result<LocalLimitSample> {
    let k_max = depth;
    let taus: Vec<f64> = (0..=k_max).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let mut cum = Vec::with_capacity(k_max + 1);
    let mut acc = 0.0;
    for &t in &taus {
        acc += t;
        cum.push(acc); // cum[k] = tau_0 + ... + tau_k
    }
    let total = cum[k_max];

    // Elapsed time runs from 0 (birth of S_K's process) to `total`
    // (observation). S_j joins at elapsed total - cum[j].
    let mut graft_times: Vec<(f64, usize)> = (0..k_max)
        .map(|j| (total - cum[j], j))
        .collect();
    graft_times.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut tree = RecursiveTree::single();
    let mut spine = vec![0u32; k_max + 1];
    spine[k_max] = 1;
    let mut deepest = k_max; // smallest k whose spine vertex exists
    let mut elapsed = 0.0;
    let mut next_graft = 0usize;
    loop {
        let step: f64 = rng.sample::<f64, _>(Exp1) / tree.n() as f64;
        let split_at = elapsed + step;
        // Memorylessness lets the race restart after each graft.
        if next_graft < graft_times.len() && graft_times[next_graft].0 <= split_at {
            let (at, j) = graft_times[next_graft];
            next_graft += 1;
            elapsed = at;
            let label = tree.attach(spine[deepest]);
            spine[j] = label;
            deepest = j;
            continue;
        }
        if split_at >= total {
            break;
        }
        elapsed = split_at;
        tree.grow(rng);
    }
    debug_assert!(next_graft == graft_times.len());

    let sample = LocalLimitSample { tree, spine, taus };
    for k in 0..k_max {
        debug_assert_eq!(
            sample.tree.parent(sample.spine[k]),
            Some(sample.spine[k + 1])
        );
    }
    Ok(sample)
}

/// Convenience: number of children of the distinguished vertex S_0. In the
/// limit this is Geometric(1/2) on {0, 1, 2, ...}: the number of rate-1
/// arrivals over an Exp(1) window.
pub fn distinguished_children_count(sample: &LocalLimitSample) -> usize {
    sample.tree.children(sample.spine_vertex(0)).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::stats::tv_on_support;
    use std::collections::HashMap;

    #[test]
    fn structure_invariants_hold() {
        let mut rng = rng_from_seed(51);
        for depth in [0usize, 1, 2, 4] {
            for _ in 0..50 {
                let s = sample_local_limit(depth, &mut rng).unwrap();
                assert_eq!(s.spine.len(), depth + 1);
                assert_eq!(s.spine[depth], 1);
                assert!(s.tree.validate().is_ok());
                for k in 0..depth {
                    assert_eq!(s.tree.parent(s.spine[k]), Some(s.spine[k + 1]));
                }
                // Descendant subtrees are finite and nested.
                let mut last = 0;
                for k in 0..=depth {
                    let size = s.descendant_subtree_size(k);
                    assert!(size >= 1);
                    assert!(size > last || k == 0);
                    last = size;
                }
            }
        }
    }

    #[test]
    fn depth_zero_size_law_matches_exponential_window() {
        // |T^(0)| for an Exp(1)-aged process has P(N = s) = 1/(s(s+1)).
        let trials = 100_000u64;
        let mut rng = rng_from_seed(52);
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for _ in 0..trials {
            let s = sample_local_limit(0, &mut rng).unwrap();
            *counts.entry(u64::from(s.tree.n())).or_insert(0) += 1;
        }
        let counts: Vec<(u64, u64)> = counts.into_iter().collect();
        let tv = tv_on_support(
            &counts,
            trials,
            |s| 1.0 / (s as f64 * (s as f64 + 1.0)),
            1,
            30,
        );
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn deeper_truncations_keep_the_base_size_law() {
        // The subtree below S_0 has the same law at any spine depth.
        let trials = 30_000u64;
        let mut rng = rng_from_seed(53);
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for _ in 0..trials {
            let s = sample_local_limit(2, &mut rng).unwrap();
            *counts.entry(s.descendant_subtree_size(0)).or_insert(0) += 1;
        }
        let counts: Vec<(u64, u64)> = counts.into_iter().collect();
        let tv = tv_on_support(
            &counts,
            trials,
            |s| 1.0 / (s as f64 * (s as f64 + 1.0)),
            1,
            30,
        );
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn distinguished_children_are_geometric_half() {
        let trials = 100_000u64;
        let mut rng = rng_from_seed(54);
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for _ in 0..trials {
            let s = sample_local_limit(0, &mut rng).unwrap();
            *counts
                .entry(distinguished_children_count(&s) as u64)
                .or_insert(0) += 1;
        }
        let counts: Vec<(u64, u64)> = counts.into_iter().collect();
        let tv = tv_on_support(&counts, trials, |k| 0.5f64.powi(k as i32 + 1), 0, 20);
        assert!(tv < 0.02, "tv = {tv}");
    }
}
