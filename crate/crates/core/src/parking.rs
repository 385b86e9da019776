//! Parking dynamics on rooted trees.
//!
//! Each vertex holds at most one car. A car arriving at an occupied vertex
//! drives towards the root and parks at the first empty vertex; a car that
//! passes the root exits and contributes to the flux. The outcome is
//! abelian: it does not depend on the order in which cars are processed,
//! which the sequential simulator exists to witness.
//!
//! Quantities per vertex: `visits[v]` counts the cars that pass by `v`
//! (including those arriving there); `v` ends up occupied iff
//! `visits[v] >= 1`; the flux is `(visits[root] - 1)_+`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::car_laws::CarLaw;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, splitmix64};
use crate::tree::RecursiveTree;

/// Per-vertex car arrival counts, indexed by vertex label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarConfig(Vec<u32>);

impl CarConfig {
    pub fn new(counts: Vec<u32>) -> Self {
        CarConfig(counts)
    }

    pub fn zeros(n: u32) -> Self {
        CarConfig(vec![0; n as usize])
    }

    pub fn len(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: u32) -> u32 {
        self.0[(v - 1) as usize]
    }

    pub fn set(&mut self, v: u32, cars: u32) {
        self.0[(v - 1) as usize] = cars;
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    /// Text export: one line `v c_v` per vertex.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, &c) in self.0.iter().enumerate() {
            out.push_str(&format!("{} {}\n", i + 1, c));
        }
        out
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let mut counts = Vec::new();
        for (i, line) in s.lines().enumerate() {
            let mut it = line.split_whitespace();
            let v: usize = it
                .next()
                .ok_or_else(|| Error::Parse(format!("missing vertex on line {}", i + 1)))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad vertex on line {}", i + 1)))?;
            if v != i + 1 {
                return Err(Error::Parse(format!("expected vertex {}, got {v}", i + 1)));
            }
            let c: u32 = it
                .next()
                .ok_or_else(|| Error::Parse(format!("missing count on line {}", i + 1)))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad count on line {}", i + 1)))?;
            counts.push(c);
        }
        if counts.is_empty() {
            return Err(Error::Parse("empty car config".into()));
        }
        Ok(CarConfig(counts))
    }
}

/// Draw i.i.d. arrivals from `law`, one per vertex.
pub fn assign_cars<R: Rng>(tree: &RecursiveTree, law: &CarLaw, rng: &mut R) -> CarConfig {
    CarConfig((0..tree.n()).map(|_| law.sample(rng)).collect())
}

/// Outcome of parking a car configuration on a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParkingResult {
    /// Cars passing by each vertex, indexed by label - 1.
    pub visits: Vec<u64>,
    /// occupied[v-1] iff visits[v-1] >= 1.
    pub occupied: Vec<bool>,
    /// Cars exiting at the root: `(visits[root] - 1)_+`.
    pub flux: u64,
}

impl ParkingResult {
    pub fn visits_of(&self, v: u32) -> u64 {
        self.visits[(v - 1) as usize]
    }

    pub fn is_occupied(&self, v: u32) -> bool {
        self.occupied[(v - 1) as usize]
    }

    pub fn occupied_count(&self) -> u64 {
        self.occupied.iter().filter(|&&o| o).count() as u64
    }
}

/// Batch parking in one pass. Labels decrease towards the root, so a
/// single descending sweep sees every child before its parent:
/// `visits[v] = c_v + sum over children u of (visits[u] - 1)_+`.
pub fn park(tree: &RecursiveTree, config: &CarConfig) -> Result<ParkingResult> {
    let n = tree.n();
    if config.len() != n {
        return Err(Error::SizeMismatch(format!(
            "config has {} entries for a tree of size {n}",
            config.len()
        )));
    }
    let mut visits: Vec<u64> = config.counts().iter().map(|&c| c as u64).collect();
    for v in (2..=n).rev() {
        let over = visits[(v - 1) as usize].saturating_sub(1);
        if over > 0 {
            let p = tree.parent(v).unwrap();
            visits[(p - 1) as usize] += over;
        }
    }
    let occupied: Vec<bool> = visits.iter().map(|&w| w >= 1).collect();
    let flux = visits[0].saturating_sub(1);
    let result = ParkingResult { visits, occupied, flux };
    debug_assert_eq!(
        config.total(),
        result.occupied_count() + result.flux,
        "car conservation"
    );
    Ok(result)
}

/// Drive the cars one by one in an explicit order. `order` lists the
/// arrival vertex of each individual car and must contain vertex `v`
/// exactly `config[v]` times. Exists as the independence oracle for
/// [`park`].
pub fn park_sequential(
    tree: &RecursiveTree,
    config: &CarConfig,
    order: &[u32],
) -> Result<ParkingResult> {
    let n = tree.n();
    if config.len() != n {
        return Err(Error::SizeMismatch(format!(
            "config has {} entries for a tree of size {n}",
            config.len()
        )));
    }
    let mut remaining: Vec<u64> = config.counts().iter().map(|&c| c as u64).collect();
    if order.len() as u64 != config.total() {
        return Err(Error::InvalidArgument(format!(
            "order lists {} cars, config has {}",
            order.len(),
            config.total()
        )));
    }
    let mut visits = vec![0u64; n as usize];
    let mut occupied = vec![false; n as usize];
    let mut flux = 0u64;
    for &arrival in order {
        if arrival == 0 || arrival > n {
            return Err(Error::InvalidArgument(format!(
                "car arrives at unknown vertex {arrival}"
            )));
        }
        let slot = &mut remaining[(arrival - 1) as usize];
        if *slot == 0 {
            return Err(Error::InvalidArgument(format!(
                "order lists too many cars at vertex {arrival}"
            )));
        }
        *slot -= 1;
        let mut w = arrival;
        loop {
            visits[(w - 1) as usize] += 1;
            if !occupied[(w - 1) as usize] {
                occupied[(w - 1) as usize] = true;
                break;
            }
            match tree.parent(w) {
                Some(p) => w = p,
                None => {
                    flux += 1;
                    break;
                }
            }
        }
    }
    Ok(ParkingResult { visits, occupied, flux })
}

/// Root component of the graph kept on edges whose two endpoints are both
/// occupied; empty when the root itself is empty.
pub fn parked_cluster(tree: &RecursiveTree, result: &ParkingResult) -> Vec<u32> {
    if !result.is_occupied(1) {
        return Vec::new();
    }
    let mut cluster = Vec::new();
    let mut stack = vec![1u32];
    while let Some(v) = stack.pop() {
        cluster.push(v);
        for &c in tree.children(v) {
            if result.is_occupied(c) {
                stack.push(c);
            }
        }
    }
    cluster.sort_unstable();
    cluster
}

/// Growing tree with parking state maintained incrementally.
///
/// Attaching a vertex with `c` cars occupies the new leaf when `c >= 1`
/// and sends the surplus `(c - 1)_+` up the ancestor path; every
/// previously-empty ancestor absorbs one car, and whatever passes the root
/// adds to the flux. Each attachment therefore costs the path length to
/// absorption, and the state matches a from-scratch recomputation exactly.
#[derive(Debug, Clone)]
pub struct ParkState {
    parent: Vec<u32>,
    visits: Vec<u32>,
    flux: u64,
    cars_total: u64,
}

impl ParkState {
    pub fn new_root(root_cars: u32) -> Self {
        ParkState {
            parent: vec![0],
            visits: vec![root_cars],
            flux: (root_cars as u64).saturating_sub(1),
            cars_total: root_cars as u64,
        }
    }

    pub fn n(&self) -> u64 {
        self.parent.len() as u64
    }

    pub fn flux(&self) -> u64 {
        self.flux
    }

    pub fn cars_total(&self) -> u64 {
        self.cars_total
    }

    pub fn root_visits(&self) -> u64 {
        self.visits[0] as u64
    }

    pub fn visits_of(&self, v: u32) -> u64 {
        self.visits[(v - 1) as usize] as u64
    }

    pub fn is_occupied(&self, v: u32) -> bool {
        self.visits[(v - 1) as usize] >= 1
    }

    pub fn visits(&self) -> &[u32] {
        &self.visits
    }

    pub fn parents(&self) -> &[u32] {
        &self.parent
    }

    /// Attach a new vertex carrying `cars` below `parent`; returns the new
    /// label. Flux never decreases.
    pub fn attach(&mut self, parent: u32, cars: u32) -> u32 {
        let v = self.parent.len() as u32 + 1;
        assert!(parent >= 1 && parent < v, "parent {parent} out of range");
        self.parent.push(parent);
        self.visits.push(cars);
        self.cars_total = self
            .cars_total
            .checked_add(cars as u64)
            .expect("total car count overflow");
        assert!(self.cars_total <= u32::MAX as u64, "visit counters would overflow");
        let mut over = (cars).saturating_sub(1);
        let mut w = parent;
        while over > 0 {
            let cell = &mut self.visits[(w - 1) as usize];
            let was_empty = *cell == 0;
            *cell = cell.checked_add(over).expect("visit counter overflow");
            if was_empty {
                over -= 1;
            }
            if w == 1 {
                self.flux += over as u64;
                break;
            }
            w = self.parent[(w - 1) as usize];
        }
        debug_assert_eq!(self.flux, (self.visits[0] as u64).saturating_sub(1));
        v
    }

    /// Snapshot as a plain tree (children lists rebuilt).
    pub fn tree(&self) -> RecursiveTree {
        RecursiveTree::from_parents(&self.parent[1..]).expect("state holds a valid tree")
    }
}

/// Self-driving incremental parker: grows the coupled tree one uniform
/// attachment at a time, drawing arrivals from the law as vertices appear.
///
/// Tree growth and car draws use two independent streams derived from the
/// seed, and each car draw consumes exactly one uniform; coupling runs
/// that share a seed therefore see the same tree and, across two laws,
/// arrivals coupled through shared uniforms.
#[derive(Debug, Clone)]
pub struct IncrementalParker {
    state: ParkState,
    law: CarLaw,
    tree_rng: ChaCha8Rng,
    car_rng: ChaCha8Rng,
    config: Option<Vec<u32>>,
}

impl IncrementalParker {
    pub fn new(law: CarLaw, seed: u64) -> Self {
        Self::build(law, seed, false)
    }

    /// Also record the car configuration so tests can recompute the batch
    /// result from scratch.
    pub fn with_recording(law: CarLaw, seed: u64) -> Self {
        Self::build(law, seed, true)
    }

    fn build(law: CarLaw, seed: u64, record: bool) -> Self {
        let mut tree_rng = rng_from_seed(splitmix64(seed ^ 0x7245_4545));
        let mut car_rng = rng_from_seed(splitmix64(seed ^ 0x4341_5253));
        // Burn-in keeps the two streams decorrelated even for tiny seeds.
        let _ = tree_rng.random::<u64>();
        let _ = car_rng.random::<u64>();
        let c0 = law.sample(&mut car_rng);
        IncrementalParker {
            state: ParkState::new_root(c0),
            law,
            tree_rng,
            car_rng,
            config: record.then(|| vec![c0]),
        }
    }

    /// Attach vertex `n + 1`; returns `(n + 1, flux)`.
    pub fn step(&mut self) -> (u64, u64) {
        let n = self.state.n();
        let parent = self.tree_rng.random_range(1..=n as u32);
        let cars = self.law.sample(&mut self.car_rng);
        if let Some(cfg) = self.config.as_mut() {
            cfg.push(cars);
        }
        let flux_before = self.state.flux();
        self.state.attach(parent, cars);
        debug_assert!(self.state.flux() >= flux_before, "flux must be monotone");
        (self.state.n(), self.state.flux())
    }

    pub fn n(&self) -> u64 {
        self.state.n()
    }

    pub fn flux(&self) -> u64 {
        self.state.flux()
    }

    pub fn root_visits(&self) -> u64 {
        self.state.root_visits()
    }

    pub fn state(&self) -> &ParkState {
        &self.state
    }

    /// Tree and recorded configuration (recording mode only).
    pub fn snapshot(&self) -> Option<(RecursiveTree, CarConfig)> {
        let cfg = self.config.as_ref()?;
        Some((self.state.tree(), CarConfig::new(cfg.clone())))
    }
}

/// First tree size at which the coupled flux reaches `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaOutcome {
    Reached { n: u64 },
    NotReached { cap: u64, flux: u64 },
}

impl ThetaOutcome {
    pub fn reached(&self) -> Option<u64> {
        match self {
            ThetaOutcome::Reached { n } => Some(*n),
            ThetaOutcome::NotReached { .. } => None,
        }
    }

    /// Hitting size, or the cap as a censored lower bound.
    pub fn value_or_cap(&self) -> u64 {
        match self {
            ThetaOutcome::Reached { n } => *n,
            ThetaOutcome::NotReached { cap, .. } => *cap,
        }
    }
}

/// `theta(law, C) = inf { n >= 1 : flux(T_n, law) >= C }` under the
/// increasing coupling, scanned up to `n_cap`.
pub fn theta(law: &CarLaw, threshold: u64, n_cap: u64, seed: u64) -> Result<ThetaOutcome> {
    if threshold == 0 {
        return Err(Error::InvalidArgument("threshold must be >= 1".into()));
    }
    if n_cap == 0 {
        return Err(Error::InvalidArgument("n_cap must be >= 1".into()));
    }
    let mut parker = IncrementalParker::new(law.clone(), seed);
    if parker.flux() >= threshold {
        return Ok(ThetaOutcome::Reached { n: 1 });
    }
    while parker.n() < n_cap {
        let (n, flux) = parker.step();
        if flux >= threshold {
            return Ok(ThetaOutcome::Reached { n });
        }
    }
    Ok(ThetaOutcome::NotReached { cap: n_cap, flux: parker.flux() })
}
