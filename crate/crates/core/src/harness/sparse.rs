//! Exact root statistics on implicitly sampled trees.
//!
//! In a uniform recursive tree the parent of vertex `v` is uniform on
//! `1..v`, independently across vertices, so the rootward path from any
//! vertex can be sampled lazily. Cars only ever move along such paths:
//! the parking outcome at the root is fully determined by the sub-forest
//! spanned by the car-carrying vertices and their ancestor closures, with
//! every untouched vertex holding no cars and absorbing nothing. Sampling
//! the car positions first (multinomial counts, then distinct uniform
//! labels) and walking only those paths makes exact simulation of
//! `visits(root)` affordable at sizes far beyond materialization.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::car_laws::CarLaw;
use crate::error::{Error, Result};
use crate::yule::sample_tree_size_at;

/// Root outcome of one parked configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootOutcome {
    /// Tree size.
    pub n: u64,
    /// Total cars that arrived.
    pub cars: u64,
    /// Cars passing by the root.
    pub root_visits: u64,
    /// Cars exiting: `(root_visits - 1)_+`.
    pub flux: u64,
}

/// Below this size the tree is materialized as a flat parent array.
const DENSE_LIMIT: u64 = 1 << 20;

/// Guard on the number of car-carrying vertices a sparse trial may touch.
const MAX_CAR_VERTICES: u64 = 20_000_000;

/// Exact `visits(root)` and flux for a uniform recursive tree of size `n`
/// with i.i.d. arrivals.
pub fn root_visits_uniform_tree<R: Rng>(n: u64, law: &CarLaw, rng: &mut R) -> Result<RootOutcome> {
    if n == 0 {
        return Err(Error::InvalidArgument("tree size must be >= 1".into()));
    }
    if n <= DENSE_LIMIT {
        Ok(dense(n, law, rng))
    } else {
        sparse(n, law, rng)
    }
}

/// Same outcome for the time-`t` tree: size Geometric(e^{-t}), then a
/// uniform recursive tree of that size.
pub fn root_visits_at_time<R: Rng>(t: f64, law: &CarLaw, rng: &mut R) -> Result<RootOutcome> {
    let n = sample_tree_size_at(t, rng)?;
    root_visits_uniform_tree(n, law, rng)
}

fn dense<R: Rng>(n: u64, law: &CarLaw, rng: &mut R) -> RootOutcome {
    let n_us = n as usize;
    // parent[v-1] for v >= 2 (0-based index of the parent label).
    let mut parent = vec![0u32; n_us];
    for v in 2..=n_us {
        parent[v - 1] = rng.random_range(1..v as u32);
    }
    let mut visits = vec![0u64; n_us];
    let mut cars = 0u64;
    for cell in visits.iter_mut() {
        let c = law.sample(rng) as u64;
        cars += c;
        *cell = c;
    }
    for v in (2..=n_us).rev() {
        let over = visits[v - 1].saturating_sub(1);
        if over > 0 {
            visits[(parent[v - 1] - 1) as usize] += over;
        }
    }
    let root_visits = visits[0];
    RootOutcome { n, cars, root_visits, flux: root_visits.saturating_sub(1) }
}

fn sparse<R: Rng>(n: u64, law: &CarLaw, rng: &mut R) -> Result<RootOutcome> {
    // Multinomial counts per positive car value, leftover mass to zero.
    let k_max = law.max_cars();
    let mut counts = vec![0u64; k_max + 1];
    let mut rem_n = n;
    let mut rem_p = 1.0f64;
    for k in 1..=k_max {
        let p = law.pmf(k);
        if p <= 0.0 || rem_n == 0 {
            rem_p -= p;
            continue;
        }
        let q = (p / rem_p).clamp(0.0, 1.0);
        let draw = Binomial::new(rem_n, q)
            .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?
            .sample(rng);
        counts[k] = draw;
        rem_n -= draw;
        rem_p -= p;
    }
    let total_carriers: u64 = counts[1..].iter().sum();
    if total_carriers > MAX_CAR_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "sparse trial would touch {total_carriers} car-carrying vertices \
             (cap {MAX_CAR_VERTICES}); reduce t or the density"
        )));
    }
    let mut cars = 0u64;
    for (k, &c) in counts.iter().enumerate() {
        cars += k as u64 * c;
    }
    if total_carriers == 0 {
        return Ok(RootOutcome { n, cars: 0, root_visits: 0, flux: 0 });
    }

    // Distinct uniform labels for the carriers; the labels are sorted for
    // deterministic replay and the car values assigned by shuffle, since
    // label order is correlated with depth.
    let mut labels: HashSet<u64> = HashSet::with_capacity(total_carriers as usize);
    while (labels.len() as u64) < total_carriers {
        labels.insert(rng.random_range(1..=n));
    }
    let mut labels: Vec<u64> = labels.into_iter().collect();
    labels.sort_unstable();
    let mut values: Vec<u32> = Vec::with_capacity(total_carriers as usize);
    for (k, &c) in counts.iter().enumerate().skip(1) {
        values.extend(std::iter::repeat_n(k as u32, c as usize));
    }
    values.shuffle(rng);

    // Ancestor closure: lazily draw parent pointers along each rootward
    // path, stopping at the root or at an already-drawn vertex.
    let mut parent: HashMap<u64, u64> = HashMap::with_capacity(labels.len() * 4);
    for &start in &labels {
        let mut w = start;
        while w != 1 {
            match parent.entry(w) {
                Entry::Occupied(_) => break,
                Entry::Vacant(slot) => {
                    let p = rng.random_range(1..w);
                    slot.insert(p);
                    w = p;
                }
            }
        }
    }

    // Park the reduced forest: descending labels see children first.
    let mut visits: HashMap<u64, u64> = HashMap::with_capacity(parent.len() + 1);
    for (&label, &value) in labels.iter().zip(values.iter()) {
        *visits.entry(label).or_insert(0) += value as u64;
    }
    let mut touched: Vec<u64> = parent.keys().copied().collect();
    touched.sort_unstable_by(|a, b| b.cmp(a));
    for &v in &touched {
        let w = visits.get(&v).copied().unwrap_or(0);
        let over = w.saturating_sub(1);
        if over > 0 {
            *visits.entry(parent[&v]).or_insert(0) += over;
        }
    }
    let root_visits = visits.get(&1).copied().unwrap_or(0);
    Ok(RootOutcome { n, cars, root_visits, flux: root_visits.saturating_sub(1) })
}
