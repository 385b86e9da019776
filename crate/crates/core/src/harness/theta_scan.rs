//! Flux-onset scaling: for each density `alpha`, the first coupled tree
//! size at which the flux reaches a threshold, and the normalized ratio
//! `log log theta / |log alpha|` whose limit identifies the critical
//! exponent.

use std::time::Instant;

use serde::Serialize;

use crate::car_laws::LawSpec;
use crate::error::{Error, Result};
use crate::harness::output::{fmt_f64, CsvRow};
use crate::harness::{ExperimentId, Report, RunContext};
use crate::parking::{theta, ThetaOutcome};
use crate::stats::{median_f64, summarize};

#[derive(Debug, Clone, Serialize)]
pub struct ThetaConfig {
    pub law: String,
    pub alpha_grid: Vec<f64>,
    /// Flux threshold C >= 1.
    pub threshold: u64,
    /// Scan cap; capped trials are censored at this size and counted.
    pub n_cap: u64,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaRow {
    pub alpha: f64,
    pub trials: u64,
    /// Trials that hit the cap; their theta enters the aggregates censored
    /// at the cap.
    pub capped: u64,
    pub theta_median: f64,
    pub theta_mean: f64,
    /// Median over trials of `log log theta / |log alpha|`.
    pub ratio_median: f64,
    /// Mean of the ratio over trials with theta >= 2 (the transform is
    /// undefined at theta = 1); `finite_trials` counts them.
    pub ratio_mean: f64,
    pub finite_trials: u64,
}

impl CsvRow for ThetaRow {
    fn csv_header() -> &'static str {
        "alpha,trials,capped,theta_median,theta_mean,ratio_median,ratio_mean,finite_trials"
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            fmt_f64(self.alpha),
            self.trials,
            self.capped,
            fmt_f64(self.theta_median),
            fmt_f64(self.theta_mean),
            fmt_f64(self.ratio_median),
            fmt_f64(self.ratio_mean),
            self.finite_trials
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaTrialRow {
    pub alpha: f64,
    pub trial: u64,
    pub theta: u64,
    pub reached: bool,
}

impl CsvRow for ThetaTrialRow {
    fn csv_header() -> &'static str {
        "alpha,trial,theta,reached"
    }
    fn csv_line(&self) -> String {
        format!("{},{},{},{}", fmt_f64(self.alpha), self.trial, self.theta, self.reached)
    }
}

fn loglog_ratio(theta_value: u64, alpha: f64) -> f64 {
    let denom = alpha.ln().abs();
    (theta_value as f64).ln().ln() / denom
}

pub fn run(
    spec: &LawSpec,
    config: ThetaConfig,
) -> Result<(Report<ThetaConfig, ThetaRow>, Vec<ThetaTrialRow>)> {
    if config.threshold == 0 {
        return Err(Error::InvalidArgument("threshold must be >= 1".into()));
    }
    if config
        .alpha_grid
        .iter()
        .any(|&a| !(a > 0.0 && a <= 1.0))
    {
        return Err(Error::InvalidArgument(
            "alpha grid must lie in (0, 1]".into(),
        ));
    }
    let start = Instant::now();
    let laws: Vec<crate::car_laws::CarLaw> = config
        .alpha_grid
        .iter()
        .map(|&a| spec.law_at(a))
        .collect::<Result<_>>()?;
    let ctx = RunContext::new(config.seed, config.workers);
    let per_cell = ctx.run_cells(
        ExperimentId::Theta,
        config.alpha_grid.len(),
        config.trials,
        |g, _j, seed| theta(&laws[g], config.threshold, config.n_cap, seed),
    )?;

    let mut rows = Vec::new();
    let mut trial_rows = Vec::new();
    for (g, outcomes) in per_cell.iter().enumerate() {
        let alpha = config.alpha_grid[g];
        let mut capped = 0u64;
        let mut values = Vec::with_capacity(outcomes.len());
        for (j, out) in outcomes.iter().enumerate() {
            let reached = out.reached().is_some();
            if !reached {
                capped += 1;
            }
            if let ThetaOutcome::NotReached { .. } = out {}
            let v = out.value_or_cap();
            values.push(v);
            trial_rows.push(ThetaTrialRow { alpha, trial: j as u64, theta: v, reached });
        }
        let ratios: Vec<f64> = values.iter().map(|&v| loglog_ratio(v, alpha)).collect();
        let finite: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite()).collect();
        let vals_f: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        rows.push(ThetaRow {
            alpha,
            trials: config.trials,
            capped,
            theta_median: crate::stats::median_u64(&values),
            theta_mean: summarize(&vals_f).mean,
            ratio_median: median_f64(&ratios),
            ratio_mean: if finite.is_empty() {
                f64::NAN
            } else {
                summarize(&finite).mean
            },
            finite_trials: finite.len() as u64,
        });
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok((Report::new(config, rows, elapsed), trial_rows))
}
