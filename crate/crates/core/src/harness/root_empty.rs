//! Probability that the root of the time-`t` tree sees no car, against
//! the analytic bound `e^{-delta t}`.

use std::time::Instant;

use serde::Serialize;

use crate::car_laws::CarLaw;
use crate::error::{Error, Result};
use crate::exact::root_empty_bound;
use crate::harness::output::{fmt_f64, CsvRow};
use crate::harness::sparse::root_visits_at_time;
use crate::harness::{ExperimentId, Report, RunContext};
use crate::rng::rng_from_seed;
use crate::stats::proportion_se;

#[derive(Debug, Clone, Serialize)]
pub struct RootEmptyConfig {
    pub law: String,
    pub t_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootEmptyRow {
    pub t: f64,
    pub trials: u64,
    pub empty_probability: f64,
    pub empty_se: f64,
    /// Analytic bound `e^{-delta t}`.
    pub bound: f64,
}

impl CsvRow for RootEmptyRow {
    fn csv_header() -> &'static str {
        "t,trials,empty_probability,empty_se,bound"
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            fmt_f64(self.t),
            self.trials,
            fmt_f64(self.empty_probability),
            fmt_f64(self.empty_se),
            fmt_f64(self.bound)
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RootEmptyTrialRow {
    pub t: f64,
    pub trial: u64,
    pub n: u64,
    pub root_visits: u64,
}

impl CsvRow for RootEmptyTrialRow {
    fn csv_header() -> &'static str {
        "t,trial,n,root_visits"
    }
    fn csv_line(&self) -> String {
        format!("{},{},{},{}", fmt_f64(self.t), self.trial, self.n, self.root_visits)
    }
}

pub fn run(
    law: &CarLaw,
    config: RootEmptyConfig,
) -> Result<(Report<RootEmptyConfig, RootEmptyRow>, Vec<RootEmptyTrialRow>)> {
    if config.t_grid.iter().any(|&t| !(0.0..=25.0).contains(&t)) {
        return Err(Error::InvalidArgument(
            "t grid must lie in [0, 25]".into(),
        ));
    }
    let start = Instant::now();
    let ctx = RunContext::new(config.seed, config.workers);
    let per_cell = ctx.run_cells(
        ExperimentId::RootEmpty,
        config.t_grid.len(),
        config.trials,
        |g, _j, seed| {
            let mut rng = rng_from_seed(seed);
            root_visits_at_time(config.t_grid[g], law, &mut rng)
        },
    )?;
    let delta = law.delta();
    let mut rows = Vec::new();
    let mut trial_rows = Vec::new();
    for (g, outcomes) in per_cell.iter().enumerate() {
        let t = config.t_grid[g];
        let mut empties = 0u64;
        for (j, out) in outcomes.iter().enumerate() {
            if out.root_visits == 0 {
                empties += 1;
            }
            trial_rows.push(RootEmptyTrialRow {
                t,
                trial: j as u64,
                n: out.n,
                root_visits: out.root_visits,
            });
        }
        rows.push(RootEmptyRow {
            t,
            trials: config.trials,
            empty_probability: empties as f64 / config.trials as f64,
            empty_se: proportion_se(empties, config.trials),
            bound: root_empty_bound(delta, t),
        });
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok((Report::new(config, rows, elapsed), trial_rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_zero_is_a_single_vertex() {
        // Empty probability equals pmf(0); the bound is trivially 1.
        let law = CarLaw::binary(0.6).unwrap();
        let config = RootEmptyConfig {
            law: "binary:alpha=0.6".into(),
            t_grid: vec![0.0],
            trials: 20_000,
            seed: 5,
            workers: 1,
        };
        let (report, trials) = run(&law, config).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.bound, 1.0);
        assert!(trials.iter().all(|t| t.n == 1));
        let expect = law.pmf(0);
        assert!(
            (row.empty_probability - expect).abs() < 3.0 * row.empty_se.max(1e-9),
            "{} vs {expect}",
            row.empty_probability
        );
    }

    #[test]
    fn se_column_is_binomial() {
        let law = CarLaw::binary(1.0).unwrap();
        let config = RootEmptyConfig {
            law: "binary:alpha=1".into(),
            t_grid: vec![1.0],
            trials: 5000,
            seed: 6,
            workers: 1,
        };
        let (report, trials) = run(&law, config).unwrap();
        let row = &report.rows[0];
        let empties = trials.iter().filter(|t| t.root_visits == 0).count() as u64;
        assert_eq!(row.empty_probability, empties as f64 / 5000.0);
        assert_eq!(row.empty_se, proportion_se(empties, 5000));
    }

    #[test]
    fn rejects_out_of_range_times() {
        let law = CarLaw::binary(0.5).unwrap();
        let config = RootEmptyConfig {
            law: "binary:alpha=0.5".into(),
            t_grid: vec![30.0],
            trials: 10,
            seed: 0,
            workers: 1,
        };
        assert!(run(&law, config).is_err());
    }
}
