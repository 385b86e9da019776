//! Neighborhood statistics around uniform vertices of large trees.
//!
//! Each trial samples a fresh tree, two independent uniform vertices, and
//! records the canonical radius-`r` balls around both plus the children
//! count of the first. The children histogram is compared with the
//! Geometric(1/2) limit; the joint frequency of the two ball classes is
//! compared with the product of the marginals over the top classes, which
//! is the factorization characterizing quenched local convergence.

use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::output::{fmt_f64, CsvRow};
use crate::harness::{ExperimentId, Report, RunContext};
use crate::rng::rng_from_seed;
use crate::stats::tv_on_support;
use crate::tree::{encode_ball, Adjacency};

/// Parent array plus CSR children lists; no per-vertex allocations.
struct FlatTree {
    parent: Vec<u32>,  // parent[v-1], parent[0] = 0
    offsets: Vec<u32>, // children of v at targets[offsets[v-1]..offsets[v]]
    targets: Vec<u32>,
}

impl FlatTree {
    fn sample<R: Rng>(n: u32, rng: &mut R) -> FlatTree {
        let n_us = n as usize;
        let mut parent = vec![0u32; n_us];
        for v in 2..=n_us {
            parent[v - 1] = rng.random_range(1..v as u32);
        }
        let mut counts = vec![0u32; n_us];
        for v in 2..=n_us {
            counts[(parent[v - 1] - 1) as usize] += 1;
        }
        let mut offsets = vec![0u32; n_us + 1];
        for i in 0..n_us {
            offsets[i + 1] = offsets[i] + counts[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; n_us - 1];
        // Filling in label order keeps each child list ascending.
        for v in 2..=n_us {
            let p = (parent[v - 1] - 1) as usize;
            targets[cursor[p] as usize] = v as u32;
            cursor[p] += 1;
        }
        FlatTree { parent, offsets, targets }
    }

    fn children_count(&self, v: u32) -> usize {
        let i = (v - 1) as usize;
        (self.offsets[i + 1] - self.offsets[i]) as usize
    }
}

impl Adjacency for FlatTree {
    fn parent_of(&self, v: u32) -> Option<u32> {
        if v == 1 {
            None
        } else {
            Some(self.parent[(v - 1) as usize])
        }
    }

    fn children_of(&self, v: u32) -> &[u32] {
        let i = (v - 1) as usize;
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BallConfig {
    pub n: u32,
    pub radius: u32,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    /// How many top classes enter the joint-factorization deviation.
    pub top_classes: usize,
}

/// One output row; `section` is `children`, `ball_class`, or `summary`.
#[derive(Debug, Clone, Serialize)]
pub struct BallRow {
    pub section: String,
    pub key: String,
    pub count: u64,
    pub value: f64,
}

impl CsvRow for BallRow {
    fn csv_header() -> &'static str {
        "section,key,count,value"
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{}",
            self.section,
            self.key,
            self.count,
            fmt_f64(self.value)
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BallTrialRow {
    pub trial: u64,
    pub children: u32,
    pub ball_u: String,
    pub ball_v: String,
}

impl CsvRow for BallTrialRow {
    fn csv_header() -> &'static str {
        "trial,children,ball_u,ball_v"
    }
    fn csv_line(&self) -> String {
        format!("{},{},{},{}", self.trial, self.children, self.ball_u, self.ball_v)
    }
}

/// Aggregated statistics, also returned programmatically for tests.
#[derive(Debug, Clone)]
pub struct BallStats {
    /// TV distance of the children histogram to Geometric(1/2) on {0..10}.
    pub children_tv: f64,
    /// Max |joint - product of marginals| over the top classes.
    pub max_joint_deviation: f64,
    pub rows: Vec<BallRow>,
}

pub fn run(
    config: BallConfig,
) -> Result<(Report<BallConfig, BallRow>, Vec<BallTrialRow>, BallStats)> {
    if config.n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if config.radius > 3 {
        return Err(Error::InvalidArgument("radius is limited to 3".into()));
    }
    let start = Instant::now();
    let ctx = RunContext::new(config.seed, config.workers);
    let per_cell = ctx.run_cells(ExperimentId::BsBall, 1, config.trials, |_, _, seed| {
        let mut rng = rng_from_seed(seed);
        let tree = FlatTree::sample(config.n, &mut rng);
        let u = rng.random_range(1..=config.n);
        let v = rng.random_range(1..=config.n);
        Ok((
            tree.children_count(u) as u32,
            encode_ball(&tree, u, config.radius),
            encode_ball(&tree, v, config.radius),
        ))
    })?;
    let samples = &per_cell[0];
    let trials = config.trials;

    let mut children_counts: HashMap<u64, u64> = HashMap::new();
    let mut marg_u: HashMap<&str, u64> = HashMap::new();
    let mut marg_v: HashMap<&str, u64> = HashMap::new();
    let mut joint: HashMap<(&str, &str), u64> = HashMap::new();
    for (c, bu, bv) in samples {
        *children_counts.entry(*c as u64).or_insert(0) += 1;
        *marg_u.entry(bu.as_str()).or_insert(0) += 1;
        *marg_v.entry(bv.as_str()).or_insert(0) += 1;
        *joint.entry((bu.as_str(), bv.as_str())).or_insert(0) += 1;
    }

    let children_vec: Vec<(u64, u64)> = children_counts.iter().map(|(&k, &c)| (k, c)).collect();
    let children_tv = tv_on_support(
        &children_vec,
        trials,
        |k| 0.5f64.powi(k as i32 + 1),
        0,
        10,
    );

    // Top classes by first-marginal count, ties broken by encoding.
    let mut classes: Vec<(&str, u64)> = marg_u.iter().map(|(&s, &c)| (s, c)).collect();
    classes.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let top: Vec<&str> = classes
        .iter()
        .take(config.top_classes)
        .map(|&(s, _)| s)
        .collect();
    let mut max_dev = 0.0f64;
    for &a in &top {
        let fa = *marg_u.get(a).unwrap_or(&0) as f64 / trials as f64;
        for &b in &top {
            let fb = *marg_v.get(b).unwrap_or(&0) as f64 / trials as f64;
            let fj = *joint.get(&(a, b)).unwrap_or(&0) as f64 / trials as f64;
            max_dev = max_dev.max((fj - fa * fb).abs());
        }
    }

    let mut rows = Vec::new();
    let mut ks: Vec<u64> = children_counts.keys().copied().collect();
    ks.sort_unstable();
    for k in ks {
        let c = children_counts[&k];
        rows.push(BallRow {
            section: "children".into(),
            key: k.to_string(),
            count: c,
            value: c as f64 / trials as f64,
        });
    }
    for &(s, c) in classes.iter().take(50) {
        rows.push(BallRow {
            section: "ball_class".into(),
            key: s.to_string(),
            count: c,
            value: c as f64 / trials as f64,
        });
    }
    rows.push(BallRow {
        section: "summary".into(),
        key: "children_tv_vs_geometric_half".into(),
        count: trials,
        value: children_tv,
    });
    rows.push(BallRow {
        section: "summary".into(),
        key: "max_joint_product_deviation".into(),
        count: top.len() as u64,
        value: max_dev,
    });

    let trial_rows: Vec<BallTrialRow> = samples
        .iter()
        .enumerate()
        .map(|(j, (c, bu, bv))| BallTrialRow {
            trial: j as u64,
            children: *c,
            ball_u: bu.clone(),
            ball_v: bv.clone(),
        })
        .collect();

    let stats = BallStats {
        children_tv,
        max_joint_deviation: max_dev,
        rows: rows.clone(),
    };
    let elapsed = start.elapsed().as_secs_f64();
    Ok((Report::new(config, rows, elapsed), trial_rows, stats))
}
