//! Macroscopic flux scaling: Monte Carlo estimates of `flux(T_n)/n` over
//! an `n` grid at a fixed car law.

use std::time::Instant;

use serde::Serialize;

use crate::car_laws::CarLaw;
use crate::error::Result;
use crate::harness::output::{fmt_f64, CsvRow};
use crate::harness::{ExperimentId, Report, RunContext};
use crate::parking::IncrementalParker;
use crate::stats::summarize;

#[derive(Debug, Clone, Serialize)]
pub struct FluxConfig {
    pub law: String,
    pub n_grid: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxRow {
    pub n: u64,
    pub trials: u64,
    pub flux_mean: f64,
    pub flux_se: f64,
    pub flux_per_n: f64,
    pub flux_per_n_se: f64,
}

impl CsvRow for FluxRow {
    fn csv_header() -> &'static str {
        "n,trials,flux_mean,flux_se,flux_per_n,flux_per_n_se"
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n,
            self.trials,
            fmt_f64(self.flux_mean),
            fmt_f64(self.flux_se),
            fmt_f64(self.flux_per_n),
            fmt_f64(self.flux_per_n_se)
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxTrialRow {
    pub n: u64,
    pub trial: u64,
    pub flux: u64,
}

impl CsvRow for FluxTrialRow {
    fn csv_header() -> &'static str {
        "n,trial,flux"
    }
    fn csv_line(&self) -> String {
        format!("{},{},{}", self.n, self.trial, self.flux)
    }
}

/// Final flux of the coupled tree grown to size `n`.
pub fn terminal_flux(law: &CarLaw, n: u64, seed: u64) -> u64 {
    let mut parker = IncrementalParker::new(law.clone(), seed);
    while parker.n() < n {
        parker.step();
    }
    parker.flux()
}

pub fn run(
    law: &CarLaw,
    config: FluxConfig,
) -> Result<(Report<FluxConfig, FluxRow>, Vec<FluxTrialRow>)> {
    let start = Instant::now();
    let ctx = RunContext::new(config.seed, config.workers);
    let per_cell = ctx.run_cells(
        ExperimentId::SimFlux,
        config.n_grid.len(),
        config.trials,
        |g, _j, seed| Ok(terminal_flux(law, config.n_grid[g], seed)),
    )?;
    let mut rows = Vec::new();
    let mut trial_rows = Vec::new();
    for (g, fluxes) in per_cell.iter().enumerate() {
        let n = config.n_grid[g];
        for (j, &f) in fluxes.iter().enumerate() {
            trial_rows.push(FluxTrialRow { n, trial: j as u64, flux: f });
        }
        let vals: Vec<f64> = fluxes.iter().map(|&f| f as f64).collect();
        let s = summarize(&vals);
        rows.push(FluxRow {
            n,
            trials: config.trials,
            flux_mean: s.mean,
            flux_se: s.se,
            flux_per_n: s.mean / n as f64,
            flux_per_n_se: s.se / n as f64,
        });
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok((Report::new(config, rows, elapsed), trial_rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_arrivals_give_zero_estimates() {
        let law = CarLaw::point_mass(0);
        let config = FluxConfig {
            law: "point0".into(),
            n_grid: vec![10, 100],
            trials: 20,
            seed: 7,
            workers: 1,
        };
        let (report, trials) = run(&law, config).unwrap();
        for row in &report.rows {
            assert_eq!(row.flux_mean, 0.0);
            assert_eq!(row.flux_per_n, 0.0);
        }
        assert!(trials.iter().all(|t| t.flux == 0));
    }

    #[test]
    fn estimates_agree_with_small_n_oracle() {
        use crate::exact::exact_expected_flux;
        let law = CarLaw::binary(0.5).unwrap();
        let config = FluxConfig {
            law: "binary:alpha=0.5".into(),
            n_grid: vec![2],
            trials: 60_000,
            seed: 11,
            workers: 1,
        };
        let (report, _) = run(&law, config).unwrap();
        let row = &report.rows[0];
        let exact = exact_expected_flux(2, &law).unwrap();
        assert!((exact - 0.3125).abs() < 1e-12);
        assert!(
            (row.flux_mean - exact).abs() < 3.0 * row.flux_se,
            "mc {} vs exact {exact}",
            row.flux_mean
        );
    }
}
