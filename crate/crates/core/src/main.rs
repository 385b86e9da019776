//! Command-line front end for the parking experiments.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 divergent analytic
//! bound (the report is still written).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rrt_parking::car_laws::{CarLaw, GeneralFamily, LawSpec};
use rrt_parking::error::Error;
use rrt_parking::exact::{exact_expected_flux, first_moment_bound, fpt_count};
use rrt_parking::harness::output::{fmt_f64, trials_csv, CsvRow};
use rrt_parking::harness::{balls, flux, root_empty, spine, theta_scan, window};
use rrt_parking::harness::{write_output, OutputFormat, Report};

#[derive(Parser)]
#[command(
    name = "rrt-parking",
    version,
    about = "Parking on random recursive trees: Monte Carlo experiments and exact kits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct McArgs {
    /// Car law, e.g. `binary:alpha=0.5` or `family:K=4,C2=0.5,b2=0.5`.
    #[arg(long)]
    law: String,
    /// Master seed; the whole output is a deterministic function of it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Also write raw per-trial rows to this CSV path.
    #[arg(long)]
    dump_trials: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Mean flux and flux/n over an n grid at a fixed law.
    SimFlux {
        #[command(flatten)]
        mc: McArgs,
        /// Comma-separated tree sizes, e.g. `1e4,1e5,1e6`.
        #[arg(long, value_name = "GRID")]
        n_grid: String,
    },
    /// Critical-window scan with alpha_n = coef * (log n)^(-p).
    Window {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long, default_value_t = 1.0)]
        coef: f64,
        #[arg(long, value_name = "P")]
        p: f64,
        #[arg(long, value_name = "GRID")]
        n_grid: String,
    },
    /// Flux-onset size theta over an alpha grid.
    Theta {
        #[command(flatten)]
        mc: McArgs,
        /// Comma-separated densities in (0, 1].
        #[arg(long, value_name = "GRID")]
        alpha_grid: String,
        /// Flux threshold C.
        #[arg(long, default_value_t = 1)]
        threshold: u64,
        /// Scan cap on the tree size.
        #[arg(long, default_value_t = 10_000_000)]
        n_cap: u64,
    },
    /// Occupancy probabilities along the limit spine.
    Spine {
        #[command(flatten)]
        mc: McArgs,
        /// Spine depth K (at most 20).
        #[arg(long, default_value_t = 10)]
        depth: usize,
    },
    /// P(no car reaches the root of the time-t tree) over a t grid.
    RootEmpty {
        #[command(flatten)]
        mc: McArgs,
        /// Comma-separated times in [0, 25].
        #[arg(long, value_name = "GRID")]
        t_grid: String,
    },
    /// Canonical ball statistics around uniform vertices.
    BsBall {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        radius: u32,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 20)]
        top_classes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        dump_trials: Option<PathBuf>,
    },
    /// Fully-parked-tree counts as CSV (columns n, m, K, count).
    FptEnum {
        /// Largest cluster size (at most 9).
        #[arg(long)]
        n_max: usize,
        /// Per-vertex car cap K.
        #[arg(long)]
        k_max: usize,
        /// Optional cap on the car count m.
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// First-moment bound report at one (t, alpha).
    Bound {
        /// Family spec (`binary` expands to `family:K=2,C2=0.5,b2=0.5`).
        #[arg(long)]
        law: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        #[arg(long, default_value_t = 8)]
        m_max: usize,
        /// Exposed plane-tree constant multiplying the closed form.
        #[arg(long, default_value_t = 1.0)]
        cst: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Exact expected flux by full enumeration, n = 1..=n_max (<= 7).
    ExactFlux {
        #[arg(long)]
        law: String,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

fn parse_u64_grid(s: &str) -> Result<Vec<u64>, Error> {
    let mut out = Vec::new();
    for item in s.split(',').filter(|x| !x.is_empty()) {
        let v: f64 = item
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid value `{item}`")))?;
        if !(v >= 1.0) || v > 1e15 {
            return Err(Error::Parse(format!("grid value `{item}` out of range")));
        }
        out.push(v.round() as u64);
    }
    if out.is_empty() {
        return Err(Error::Parse("empty grid".into()));
    }
    Ok(out)
}

fn parse_f64_grid(s: &str) -> Result<Vec<f64>, Error> {
    let mut out = Vec::new();
    for item in s.split(',').filter(|x| !x.is_empty()) {
        let v: f64 = item
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid value `{item}`")))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Parse("empty grid".into()));
    }
    Ok(out)
}

fn fixed_law(spec_str: &str) -> Result<(LawSpec, CarLaw), Error> {
    let spec: LawSpec = spec_str.parse()?;
    let law = spec.fixed_law()?;
    Ok((spec, law))
}

#[derive(Serialize)]
struct FptRow {
    n: usize,
    m: usize,
    k: usize,
    count: u64,
}

impl CsvRow for FptRow {
    fn csv_header() -> &'static str {
        "n,m,K,count"
    }
    fn csv_line(&self) -> String {
        format!("{},{},{},{}", self.n, self.m, self.k, self.count)
    }
}

#[derive(Serialize)]
struct FptConfig {
    n_max: usize,
    k_max: usize,
    m_max: Option<usize>,
}

#[derive(Serialize)]
struct BoundRow {
    t: f64,
    alpha: f64,
    n_max: usize,
    m_max: usize,
    beta_star: f64,
    big_c: f64,
    small_c: f64,
    cst: f64,
    truncated_exact: f64,
    truncated_coarse: f64,
    closed_form: Option<f64>,
    tail: f64,
    diverged: bool,
}

impl CsvRow for BoundRow {
    fn csv_header() -> &'static str {
        "t,alpha,n_max,m_max,beta_star,big_c,small_c,cst,truncated_exact,truncated_coarse,closed_form,tail,diverged"
    }
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(self.t),
            fmt_f64(self.alpha),
            self.n_max,
            self.m_max,
            fmt_f64(self.beta_star),
            fmt_f64(self.big_c),
            fmt_f64(self.small_c),
            fmt_f64(self.cst),
            fmt_f64(self.truncated_exact),
            fmt_f64(self.truncated_coarse),
            self.closed_form.map(fmt_f64).unwrap_or_else(|| "diverged".into()),
            fmt_f64(self.tail),
            self.diverged
        )
    }
}

#[derive(Serialize)]
struct BoundConfig {
    law: String,
    t: f64,
    alpha: f64,
    n_max: usize,
    m_max: usize,
    cst: f64,
}

#[derive(Serialize)]
struct ExactFluxRow {
    n: usize,
    expected_flux: f64,
}

impl CsvRow for ExactFluxRow {
    fn csv_header() -> &'static str {
        "n,expected_flux"
    }
    fn csv_line(&self) -> String {
        format!("{},{}", self.n, fmt_f64(self.expected_flux))
    }
}

#[derive(Serialize)]
struct ExactFluxConfig {
    law: String,
    n_max: usize,
}

fn emit<C: Serialize, R: Serialize + CsvRow>(
    report: &Report<C, R>,
    out: Option<&PathBuf>,
    format: &str,
) -> Result<(), Error> {
    let format: OutputFormat = format.parse()?;
    write_output(out.map(|p| p.as_path()), &report.render(format))
}

fn dump<T: CsvRow>(rows: &[T], path: Option<&PathBuf>) -> Result<(), Error> {
    if let Some(p) = path {
        write_output(Some(p.as_path()), &trials_csv(rows))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::SimFlux { mc, n_grid } => {
            let (_, law) = fixed_law(&mc.law)?;
            let config = flux::FluxConfig {
                law: mc.law.clone(),
                n_grid: parse_u64_grid(&n_grid)?,
                trials: mc.trials,
                seed: mc.seed,
                workers: mc.workers,
            };
            let (report, trial_rows) = flux::run(&law, config)?;
            emit(&report, mc.out.as_ref(), &mc.format)?;
            dump(&trial_rows, mc.dump_trials.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Window { mc, coef, p, n_grid } => {
            let spec: LawSpec = mc.law.parse()?;
            let config = window::WindowConfig {
                law: mc.law.clone(),
                coef,
                exponent: p,
                n_grid: parse_u64_grid(&n_grid)?,
                trials: mc.trials,
                seed: mc.seed,
                workers: mc.workers,
            };
            let (report, trial_rows) = window::run(&spec, config)?;
            emit(&report, mc.out.as_ref(), &mc.format)?;
            dump(&trial_rows, mc.dump_trials.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Theta { mc, alpha_grid, threshold, n_cap } => {
            let spec: LawSpec = mc.law.parse()?;
            let config = theta_scan::ThetaConfig {
                law: mc.law.clone(),
                alpha_grid: parse_f64_grid(&alpha_grid)?,
                threshold,
                n_cap,
                trials: mc.trials,
                seed: mc.seed,
                workers: mc.workers,
            };
            let (report, trial_rows) = theta_scan::run(&spec, config)?;
            emit(&report, mc.out.as_ref(), &mc.format)?;
            dump(&trial_rows, mc.dump_trials.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Spine { mc, depth } => {
            let (_, law) = fixed_law(&mc.law)?;
            let config = spine::SpineConfig {
                law: mc.law.clone(),
                depth,
                trials: mc.trials,
                seed: mc.seed,
                workers: mc.workers,
            };
            let (report, trial_rows) = spine::run(&law, config)?;
            emit(&report, mc.out.as_ref(), &mc.format)?;
            dump(&trial_rows, mc.dump_trials.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::RootEmpty { mc, t_grid } => {
            let (_, law) = fixed_law(&mc.law)?;
            let config = root_empty::RootEmptyConfig {
                law: mc.law.clone(),
                t_grid: parse_f64_grid(&t_grid)?,
                trials: mc.trials,
                seed: mc.seed,
                workers: mc.workers,
            };
            let (report, trial_rows) = root_empty::run(&law, config)?;
            emit(&report, mc.out.as_ref(), &mc.format)?;
            dump(&trial_rows, mc.dump_trials.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::BsBall {
            n,
            radius,
            trials,
            seed,
            workers,
            top_classes,
            out,
            format,
            dump_trials,
        } => {
            let config = balls::BallConfig { n, radius, trials, seed, workers, top_classes };
            let (report, trial_rows, _) = balls::run(config)?;
            emit(&report, out.as_ref(), &format)?;
            dump(&trial_rows, dump_trials.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::FptEnum { n_max, k_max, m_max, out, format } => {
            let mut rows = Vec::new();
            for n in 1..=n_max {
                let hi = m_max.unwrap_or(n * k_max).min(n * k_max);
                for m in n..=hi {
                    rows.push(FptRow { n, m, k: k_max, count: fpt_count(n, m, k_max)? });
                }
            }
            let report = Report::new(FptConfig { n_max, k_max, m_max }, rows, 0.0);
            emit(&report, out.as_ref(), &format)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bound { law, t, alpha, n_max, m_max, cst, out, format } => {
            let spec: LawSpec = law.parse()?;
            let family: GeneralFamily = spec.family();
            let r = first_moment_bound(&family, t, alpha, n_max, m_max, cst)?;
            let diverged = r.diverged();
            let row = BoundRow {
                t: r.t,
                alpha: r.alpha,
                n_max: r.n_max,
                m_max: r.m_max,
                beta_star: family.beta_star(),
                big_c: r.big_c,
                small_c: r.small_c,
                cst: r.cst,
                truncated_exact: r.truncated_exact,
                truncated_coarse: r.truncated_coarse,
                closed_form: r.closed_form,
                tail: r.tail(),
                diverged,
            };
            let report = Report::new(
                BoundConfig { law, t, alpha, n_max, m_max, cst },
                vec![row],
                0.0,
            );
            emit(&report, out.as_ref(), &format)?;
            if diverged {
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ExactFlux { law, n_max, out, format } => {
            let (_, fixed) = fixed_law(&law)?;
            let mut rows = Vec::new();
            for n in 1..=n_max {
                rows.push(ExactFluxRow { n, expected_flux: exact_expected_flux(n, &fixed)? });
            }
            let report = Report::new(ExactFluxConfig { law, n_max }, rows, 0.0);
            emit(&report, out.as_ref(), &format)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
