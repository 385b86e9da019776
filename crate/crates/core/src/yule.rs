//! Continuous-time binary branching construction of recursive trees.
//!
//! A single particle born at time 0 lives an Exp(1) lifetime, then splits
//! into two independent copies. Cutting the process at time `t` and
//! contracting every maximal left-going chain of the plane tree into one
//! vertex yields a recursive tree whose size is Geometric(e^{-t}) on
//! `{1, 2, ...}`; labeling the chains in split-time order makes the sizes
//! of the embedded trees a uniform recursive tree at every split time.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::tree::RecursiveTree;

/// Split of a particle: time and the two children it becomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitEvent {
    pub time: f64,
    pub left: u32,
    pub right: u32,
}

/// Plane binary branching structure cut at a fixed time. Particles are
/// numbered in creation order; particle 0 is the initial one. A particle
/// without a split outlives the cutoff and is alive at `t`.
#[derive(Debug, Clone)]
pub struct YuleTree {
    cutoff: f64,
    birth: Vec<f64>,
    split: Vec<Option<SplitEvent>>,
}

struct Death {
    time: f64,
    particle: u32,
}

impl PartialEq for Death {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.particle == other.particle
    }
}
impl Eq for Death {}
impl PartialOrd for Death {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Death {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap pops the earliest death first.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.particle.cmp(&self.particle))
    }
}

/// Event-driven simulation of the branching process up to time `t`.
pub fn sample_yule_tree<R: Rng>(t: f64, rng: &mut R) -> Result<YuleTree> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cutoff time must be >= 0, got {t}"
        )));
    }
    let mut birth = vec![0.0];
    let mut split: Vec<Option<SplitEvent>> = vec![None];
    let mut heap = BinaryHeap::new();
    let first: f64 = rng.sample(Exp1);
    heap.push(Death { time: first, particle: 0 });
    while let Some(Death { time, particle }) = heap.pop() {
        if time > t {
            break;
        }
        let left = birth.len() as u32;
        let right = left + 1;
        birth.push(time);
        birth.push(time);
        split.push(None);
        split.push(None);
        split[particle as usize] = Some(SplitEvent { time, left, right });
        for child in [left, right] {
            let life: f64 = rng.sample(Exp1);
            heap.push(Death { time: time + life, particle: child });
        }
    }
    Ok(YuleTree { cutoff: t, birth, split })
}

impl YuleTree {
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn particle_count(&self) -> usize {
        self.birth.len()
    }

    pub fn birth(&self, particle: u32) -> f64 {
        self.birth[particle as usize]
    }

    pub fn split(&self, particle: u32) -> Option<SplitEvent> {
        self.split[particle as usize]
    }

    pub fn is_alive(&self, particle: u32) -> bool {
        self.split[particle as usize].is_none()
    }

    /// Particles alive at the cutoff.
    pub fn alive_count(&self) -> u64 {
        self.split.iter().filter(|s| s.is_none()).count() as u64
    }

    /// All splits in time order.
    pub fn splits_by_time(&self) -> Vec<(u32, SplitEvent)> {
        let mut events: Vec<(u32, SplitEvent)> = self
            .split
            .iter()
            .enumerate()
            .filter_map(|(p, s)| s.map(|e| (p as u32, e)))
            .collect();
        events.sort_by(|a, b| a.1.time.total_cmp(&b.1.time));
        events
    }
}

/// Contract maximal left-going chains into vertices: at each split the
/// left child continues its particle's vertex and the right child starts a
/// new vertex, child of the owner and labeled with the smallest unused
/// label (creation order). The result has one vertex per alive particle.
pub fn yule_to_recursive(yule: &YuleTree) -> RecursiveTree {
    let mut owner = vec![0u32; yule.particle_count()];
    owner[0] = 1;
    let mut tree = RecursiveTree::single();
    for (particle, ev) in yule.splits_by_time() {
        let v = owner[particle as usize];
        owner[ev.left as usize] = v;
        owner[ev.right as usize] = tree.attach(v);
    }
    debug_assert_eq!(u64::from(tree.n()), yule.alive_count());
    tree
}

/// Size of the tree at time `t`: Geometric(e^{-t}) on `{1, 2, ...}`,
/// i.e. `P(N = k) = e^{-t} (1 - e^{-t})^{k-1}` with mean `e^t`.
pub fn sample_tree_size_at<R: Rng>(t: f64, rng: &mut R) -> Result<u64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time must be >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(1);
    }
    // Inverse cdf; ln(1 - e^{-t}) through ln_1p stays accurate for large t.
    let u: f64 = rng.random();
    let denom = (-(-t).exp()).ln_1p();
    let x = (1.0 - u).ln() / denom;
    Ok((x.floor() as u64).saturating_add(1))
}

/// Materialization guard for the dense time-`t` sampler.
pub const MAX_DENSE_VERTICES: u64 = 50_000_000;

/// The recursive tree at time `t`, sampled by size (geometric law) and
/// then shape (uniform recursive tree of that size). Distributionally
/// equal to converting an event-driven simulation, without the event
/// queue; large sizes are refused rather than materialized.
pub fn sample_recursive_tree_at<R: Rng>(t: f64, rng: &mut R) -> Result<RecursiveTree> {
    let n = sample_tree_size_at(t, rng)?;
    if n > MAX_DENSE_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "tree of {n} vertices exceeds the dense materialization cap \
             ({MAX_DENSE_VERTICES}); use the sparse path"
        )));
    }
    crate::tree::sample_recursive_tree(n as u32, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::stats::{proportion_se, summarize, tv_on_support};
    use std::collections::HashMap;

    #[test]
    fn zero_cutoff_is_one_particle() {
        let y = sample_yule_tree(0.0, &mut rng_from_seed(4)).unwrap();
        assert_eq!(y.alive_count(), 1);
        assert_eq!(y.particle_count(), 1);
        let t = yule_to_recursive(&y);
        assert_eq!(t.n(), 1);
    }

    #[test]
    fn negative_cutoff_rejected() {
        assert!(sample_yule_tree(-1.0, &mut rng_from_seed(0)).is_err());
        assert!(sample_tree_size_at(-0.5, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn birth_times_increase_along_paths() {
        let y = sample_yule_tree(3.0, &mut rng_from_seed(8)).unwrap();
        for p in 0..y.particle_count() as u32 {
            if let Some(ev) = y.split(p) {
                assert!(ev.time <= y.cutoff());
                assert!(ev.time > y.birth(p) || y.birth(p) == 0.0 && ev.time > 0.0);
                assert_eq!(y.birth(ev.left), ev.time);
                assert_eq!(y.birth(ev.right), ev.time);
            }
        }
    }

    #[test]
    fn one_split_converts_to_edge() {
        let mut rng = rng_from_seed(2);
        loop {
            let y = sample_yule_tree(0.7, &mut rng).unwrap();
            if y.alive_count() == 2 {
                let t = yule_to_recursive(&y);
                assert_eq!(t.n(), 2);
                assert_eq!(t.parent(2), Some(1));
                break;
            }
        }
    }

    #[test]
    fn alive_count_mean_is_exponential() {
        let trials = 100_000;
        let mut rng = rng_from_seed(12);
        let sizes: Vec<f64> = (0..trials)
            .map(|_| sample_yule_tree(1.0, &mut rng).unwrap().alive_count() as f64)
            .collect();
        let s = summarize(&sizes);
        let mean = 1.0f64.exp();
        assert!(
            (s.mean - mean).abs() < 3.0 * s.se,
            "mean = {}, want {mean} +- {}",
            s.mean,
            3.0 * s.se
        );
    }

    #[test]
    fn singleton_probability_at_t_two() {
        let trials = 100_000u64;
        let mut rng = rng_from_seed(13);
        let ones = (0..trials)
            .filter(|_| sample_yule_tree(2.0, &mut rng).unwrap().alive_count() == 1)
            .count() as u64;
        let freq = ones as f64 / trials as f64;
        let p = (-2.0f64).exp();
        let sigma = proportion_se(ones, trials).max(1e-9);
        assert!((freq - p).abs() < 3.0 * sigma, "freq = {freq}, want {p}");
    }

    #[test]
    fn event_sizes_match_geometric_law() {
        // TV on {1..30} below 0.02 for t in {0.5, 1, 2}.
        let trials = 100_000u64;
        for (seed, t) in [(21u64, 0.5f64), (22, 1.0), (23, 2.0)] {
            let mut rng = rng_from_seed(seed);
            let mut counts: HashMap<u64, u64> = HashMap::new();
            for _ in 0..trials {
                *counts
                    .entry(sample_yule_tree(t, &mut rng).unwrap().alive_count())
                    .or_insert(0) += 1;
            }
            let counts: Vec<(u64, u64)> = counts.into_iter().collect();
            let p = (-t).exp();
            let tv = tv_on_support(
                &counts,
                trials,
                |k| p * (1.0 - p).powi((k - 1) as i32),
                1,
                30,
            );
            assert!(tv < 0.02, "t = {t}: tv = {tv}");
        }
    }

    #[test]
    fn size_sampler_matches_geometric_law() {
        let trials = 100_000u64;
        let mut rng = rng_from_seed(31);
        let t = 1.5;
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for _ in 0..trials {
            *counts
                .entry(sample_tree_size_at(t, &mut rng).unwrap())
                .or_insert(0) += 1;
        }
        let counts: Vec<(u64, u64)> = counts.into_iter().collect();
        let p = (-t as f64).exp();
        let tv = tv_on_support(&counts, trials, |k| p * (1.0 - p).powi((k - 1) as i32), 1, 40);
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn size_sampler_handles_edge_times() {
        let mut rng = rng_from_seed(1);
        assert_eq!(sample_tree_size_at(0.0, &mut rng).unwrap(), 1);
        // Large t must not overflow or panic; mean is e^25 ~ 7e10.
        let n = sample_tree_size_at(25.0, &mut rng).unwrap();
        assert!(n >= 1);
    }

    #[test]
    fn conversion_conditioned_on_size_is_uniform() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        // Condition event-driven samples on |T_t| = 4 and chi-square the
        // 6 labeled shapes against the uniform law.
        let mut rng = rng_from_seed(37);
        let t = 4.0f64.ln(); // maximizes P(size = 4)
        let mut counts = [0u64; 6];
        let mut kept = 0u64;
        while kept < 6000 {
            let y = sample_yule_tree(t, &mut rng).unwrap();
            if y.alive_count() != 4 {
                continue;
            }
            let tree = yule_to_recursive(&y);
            let p3 = tree.parent(3).unwrap() as usize;
            let p4 = tree.parent(4).unwrap() as usize;
            counts[(p3 - 1) * 3 + (p4 - 1)] += 1;
            kept += 1;
        }
        let expected = kept as f64 / 6.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let p = 1.0 - ChiSquared::new(5.0).unwrap().cdf(chi2);
        assert!(p > 0.001, "chi2 = {chi2}, p = {p}, counts = {counts:?}");
    }

    #[test]
    fn dense_sampler_guards_size() {
        let mut rng = rng_from_seed(3);
        let t = sample_recursive_tree_at(1.0, &mut rng).unwrap();
        assert!(t.n() >= 1);
    }
}
