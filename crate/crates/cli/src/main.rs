//! Command-line front end: config parsing, subcommand dispatch and CSV
//! emission for the coverage / meta-distribution analysis engine.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure.

// Validations use `!(x > 0.0)` so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod report;

use clap::{Parser, Subcommand};

use cellcov::capacity::{
    optimize_height_with, scc, src, sweep_with, CapacitySearchSpace, SweepAxis, SweepRequest,
};
use cellcov::coverage::{metric_coverage_with, Metric};
use cellcov::metadist::{meta_curve_with, MetaMethod};
use cellcov::moments::moment_sequence_with;
use cellcov::simulator::empirical_meta;
use cellcov::Error as CoreError;

use config::{parse_grid, CommonArgs, RunConfig};
use report::CsvReport;

#[derive(Parser)]
#[command(
    name = "cellcov",
    version,
    about = "Coverage, rate and SIR meta-distribution analysis for downlink cellular networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Coverage probability for the SIR threshold.
    Coverage,
    /// Rate coverage probability for the rate threshold.
    Rate,
    /// Moment sequence M_0..M_mu of the conditional success probability.
    Moments,
    /// Meta-distribution CCDF over a reliability grid.
    Meta {
        /// Recovery method.
        #[arg(long, default_value = "mnatsakanov")]
        method: String,
        /// Reliability grid `lo:hi:count` or comma list, values in (0,1).
        #[arg(long = "x-grid", default_value = "0.05:0.95:0.05")]
        x_grid: String,
    },
    /// Spatial coverage capacity at reliability x.
    Scc {
        #[arg(long)]
        x: f64,
    },
    /// Spatial rate capacity at reliability x.
    Src {
        #[arg(long)]
        x: f64,
    },
    /// Maximize coverage over the BS height, or capacity over (λ, h, N_s).
    Optimize {
        /// "height" or "capacity".
        #[arg(long, default_value = "height")]
        target: String,
        /// Height bracket for the height target, meters.
        #[arg(long = "h-min", default_value_t = 1.0)]
        h_min: f64,
        #[arg(long = "h-max", default_value_t = 100.0)]
        h_max: f64,
        /// Density grid for the capacity target (log-spaced `lo:hi:count`).
        #[arg(long = "lambda-grid")]
        lambda_grid: Option<String>,
        /// Height grid for the capacity target.
        #[arg(long = "height-grid")]
        height_grid: Option<String>,
        /// Partition range for the capacity target.
        #[arg(long = "ns-min", default_value_t = 1)]
        ns_min: u32,
        #[arg(long = "ns-max", default_value_t = 30)]
        ns_max: u32,
        /// Reliability for the capacity objective.
        #[arg(long)]
        x: Option<f64>,
        /// Couple N_a = N_s during the capacity search.
        #[arg(long = "full-load", default_value_t = true)]
        full_load: bool,
    },
    /// Tabulate coverage, variance, meta-CCDF and capacity along one axis.
    Sweep {
        /// Axis: lambda | height | n-s | theta-db | rate-bps | x.
        #[arg(long)]
        axis: String,
        /// Grid `lo:hi:count` (lambda log-spaced) or comma list.
        #[arg(long)]
        grid: String,
        /// Reliability for the meta-CCDF and capacity columns.
        #[arg(long, default_value_t = 0.5)]
        x: f64,
        /// Couple N_a = N_s when sweeping partitions.
        #[arg(long = "full-load", default_value_t = false)]
        full_load: bool,
    },
    /// Monte Carlo estimates of coverage, moments and the meta-distribution.
    Simulate {
        /// Realization count.
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        /// RNG seed.
        #[arg(long, default_value_t = 1, env = "CELLCOV_SEED")]
        seed: u64,
        #[arg(long = "x-grid", default_value = "0.05:0.95:0.05")]
        x_grid: String,
        /// Also run the explicit fading-sampled estimator as a cross-check.
        #[arg(long = "with-fading-check", default_value_t = false)]
        with_fading_check: bool,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outputs, not input errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    match run(cli) {
        Ok(()) => {}
        Err(RunError::Input(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(RunError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            std::process::exit(2);
        }
    }
}

enum RunError {
    Input(String),
    Numerical(String),
}

impl From<String> for RunError {
    fn from(msg: String) -> Self {
        RunError::Input(msg)
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::QuadratureNonConvergence { .. } | CoreError::InconsistentMoments(_) => {
                RunError::Numerical(e.to_string())
            }
            _ => RunError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Input(format!("cannot write output: {e}"))
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    let cfg = RunConfig::resolve(&cli.common)?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }

    match cli.command {
        Command::Coverage => {
            let metric = cfg.require_metric()?;
            if !matches!(metric, Metric::SirThreshold(_)) {
                return Err(RunError::Input(
                    "`coverage` takes an SIR threshold; use --theta-db (or `rate` for --rate-bps)"
                        .into(),
                ));
            }
            let p = metric_coverage_with(&cfg.network, &metric, &cfg.spec)?;
            let mut report = csv(
                &cfg,
                "coverage",
                vec!["theta_db", "theta_linear", "coverage_probability"],
            );
            let theta = metric.effective_sir_threshold(&cfg.network)?;
            report.push_row(&[cfg.theta_db.unwrap_or(10.0 * theta.log10()), theta, p]);
            report.write(cfg.out.as_deref())?;
        }

        Command::Rate => {
            let metric = cfg.require_metric()?;
            if !matches!(metric, Metric::RateThreshold(_)) {
                return Err(RunError::Input(
                    "`rate` takes a rate threshold; use --rate-bps (or `coverage` for --theta-db)"
                        .into(),
                ));
            }
            let p = metric_coverage_with(&cfg.network, &metric, &cfg.spec)?;
            let theta = metric.effective_sir_threshold(&cfg.network)?;
            let mut report = csv(
                &cfg,
                "rate",
                vec![
                    "rate_bps",
                    "effective_theta_linear",
                    "rate_coverage_probability",
                ],
            );
            report.push_row(&[cfg.rate_bps.unwrap(), theta, p]);
            report.write(cfg.out.as_deref())?;
        }

        Command::Moments => {
            let metric = cfg.require_metric()?;
            let seq = moment_sequence_with(&cfg.network, &metric, cfg.mu, &cfg.spec)?;
            let mut report = csv(&cfg, "moments", vec!["order", "moment"]);
            for (m, &v) in seq.values().iter().enumerate() {
                report.push_row(&[m as f64, v]);
            }
            if seq.mu >= 2 {
                let variance = (seq.value(2) - seq.value(1) * seq.value(1)).max(0.0);
                report.comment(format!("variance = {variance}"));
            }
            report.write(cfg.out.as_deref())?;
        }

        Command::Meta { method, x_grid } => {
            let metric = cfg.require_metric()?;
            let method = match method.as_str() {
                "mnatsakanov" => MetaMethod::Mnatsakanov,
                "gil-pelaez" => MetaMethod::GilPelaez,
                other => {
                    return Err(RunError::Input(format!(
                        "unknown method `{other}`; expected mnatsakanov or gil-pelaez"
                    )))
                }
            };
            let grid = parse_grid(&x_grid, false)?;
            let curve = meta_curve_with(
                &cfg.network,
                &metric,
                &grid,
                method,
                cfg.mu,
                cfg.t_max,
                &cfg.spec,
            )?;
            let diagnostics = diagnostics_token(&curve);
            let mut report =
                csv(&cfg, "meta", vec!["x", "ccdf", "method", "mu", "diagnostics"]);
            for (x, ccdf) in curve.x_grid.iter().zip(&curve.ccdf) {
                report.push_mixed_row(vec![
                    format!("{x}"),
                    format!("{ccdf}"),
                    curve.method.name().to_string(),
                    curve.mu.map_or_else(|| "".to_string(), |m| m.to_string()),
                    diagnostics.clone(),
                ]);
            }
            report.write(cfg.out.as_deref())?;
        }

        Command::Scc { x } => {
            let metric = cfg.require_metric()?;
            let Metric::SirThreshold(theta) = metric else {
                return Err(RunError::Input("`scc` needs --theta-db".into()));
            };
            let point = scc(&cfg.network, x, theta, cfg.mu)?;
            let mut report = csv(&cfg, "scc", vec!["x", "meta_ccdf", "scc_per_m2"]);
            let ccdf = point.value / (cfg.network.n_active as f64 * cfg.network.lambda);
            report.push_row(&[x, ccdf, point.value]);
            report.write(cfg.out.as_deref())?;
        }

        Command::Src { x } => {
            let metric = cfg.require_metric()?;
            let Metric::RateThreshold(r_o) = metric else {
                return Err(RunError::Input("`src` needs --rate-bps".into()));
            };
            let point = src(&cfg.network, x, r_o, cfg.mu)?;
            let mut report = csv(&cfg, "src", vec!["x", "meta_ccdf", "src_per_m2"]);
            let ccdf = point.value / (cfg.network.n_active as f64 * cfg.network.lambda);
            report.push_row(&[x, ccdf, point.value]);
            report.write(cfg.out.as_deref())?;
        }

        Command::Optimize {
            target,
            h_min,
            h_max,
            lambda_grid,
            height_grid,
            ns_min,
            ns_max,
            x,
            full_load,
        } => match target.as_str() {
            "height" => {
                let metric = cfg.require_metric()?;
                let report_data =
                    optimize_height_with(&cfg.network, &metric, (h_min, h_max), &cfg.spec)?;
                let mut report = csv(&cfg, "optimize", vec!["height_m", "objective"]);
                for (params, value) in &report_data.trace {
                    report.push_row(&[params[0], *value]);
                }
                report.comment(format!("optimal_height_m = {}", report_data.height));
                report.comment(format!("optimal_objective = {}", report_data.objective));
                for w in &report_data.warnings {
                    report.comment(format!("warning: {w}"));
                }
                report.write(cfg.out.as_deref())?;
            }
            "capacity" => {
                let metric = cfg.require_metric()?;
                let x = x.ok_or_else(|| "capacity optimization needs --x".to_string())?;
                let space = CapacitySearchSpace {
                    lambda: match lambda_grid {
                        Some(g) => parse_grid(&g, true)?,
                        None => vec![cfg.network.lambda],
                    },
                    height: match height_grid {
                        Some(g) => parse_grid(&g, false)?,
                        None => vec![cfg.network.height],
                    },
                    partitions: (ns_min..=ns_max).collect(),
                    full_load,
                };
                let report_data = cellcov::capacity::optimize_capacity_with(
                    &cfg.network,
                    &space,
                    x,
                    &metric,
                    cfg.mu,
                    &cfg.spec,
                )?;
                let mut report = csv(
                    &cfg,
                    "optimize",
                    vec![
                        "lambda_per_m2",
                        "height_m",
                        "n_partitions",
                        "objective_per_m2",
                    ],
                );
                for (params, value) in &report_data.trace {
                    report.push_row(&[params[0], params[1], params[2], *value]);
                }
                report.comment(format!("optimal_lambda_per_m2 = {}", report_data.lambda));
                report.comment(format!("optimal_height_m = {}", report_data.height));
                report.comment(format!(
                    "optimal_n_partitions = {}",
                    report_data.n_partitions
                ));
                report.comment(format!(
                    "optimal_objective_per_m2 = {}",
                    report_data.objective
                ));
                for w in &report_data.warnings {
                    report.comment(format!("warning: {w}"));
                }
                report.write(cfg.out.as_deref())?;
            }
            other => {
                return Err(RunError::Input(format!(
                    "unknown optimize target `{other}`; expected height or capacity"
                )))
            }
        },

        Command::Sweep {
            axis,
            grid,
            x,
            full_load,
        } => {
            let metric = cfg.require_metric()?;
            let (axis, log_spaced) = match axis.as_str() {
                "lambda" => (SweepAxis::Lambda, true),
                "height" => (SweepAxis::Height, false),
                "n-s" => (SweepAxis::Partitions, false),
                "theta-db" => (SweepAxis::ThetaDb, false),
                "rate-bps" => (SweepAxis::RateBps, false),
                "x" => (SweepAxis::Reliability, false),
                other => {
                    return Err(RunError::Input(format!(
                        "unknown axis `{other}`; expected lambda | height | n-s | theta-db | \
                         rate-bps | x"
                    )))
                }
            };
            let grid = parse_grid(&grid, log_spaced)?;
            let request = SweepRequest {
                cfg: cfg.network.clone(),
                metric,
                x,
                mu: cfg.mu,
                full_load,
            };
            let rows = sweep_with(&request, axis, &grid, &cfg.spec)?;
            let mut report = csv(
                &cfg,
                "sweep",
                vec![
                    axis.name(),
                    "coverage_probability",
                    "variance",
                    "meta_ccdf_at_x",
                    "capacity_per_m2",
                ],
            );
            for row in rows {
                report.push_row(&[
                    row.axis_value,
                    row.coverage,
                    row.variance,
                    row.meta_ccdf,
                    row.capacity,
                ]);
            }
            report.comment(format!("reliability_x = {x}"));
            report.write(cfg.out.as_deref())?;
        }

        Command::Simulate {
            n,
            seed,
            x_grid,
            with_fading_check,
        } => {
            let metric = cfg.require_metric()?;
            let grid = parse_grid(&x_grid, false)?;
            let summary = empirical_meta(&cfg.network, &metric, n, seed, &grid)?;
            let mut report = csv(
                &cfg,
                "simulate",
                vec!["x", "ccdf_empirical", "ccdf_std_error"],
            );
            for &(x, v) in &summary.ccdf {
                let se = (v * (1.0 - v) / n as f64).sqrt();
                report.push_row(&[x, v, se]);
            }
            report.comment(format!("n = {n}"));
            report.comment(format!("seed = {seed}"));
            report.comment(format!("window_radius_m = {}", summary.window_radius));
            report.comment(format!(
                "coverage_estimate = {} +- {}",
                summary.estimate, summary.std_error
            ));
            for (i, (m, se)) in summary
                .moments
                .iter()
                .zip(&summary.moment_std_errors)
                .enumerate()
            {
                report.comment(format!("moment_{} = {m} +- {se}", i + 1));
            }
            if with_fading_check {
                let (p, se) =
                    cellcov::simulator::empirical_coverage_fading(&cfg.network, &metric, n, seed)?;
                report.comment(format!("fading_sampled_coverage = {p} +- {se}"));
            }
            report.write(cfg.out.as_deref())?;
        }
    }
    Ok(())
}

fn csv(cfg: &RunConfig, command: &str, header: Vec<&'static str>) -> CsvReport {
    CsvReport::new(command, header, &cfg.canonical_lines())
}

/// Compact comma-free token summarizing the curve diagnostics.
fn diagnostics_token(curve: &cellcov::metadist::MetaCurve) -> String {
    let mut parts = Vec::new();
    if let Some(t) = curve.diagnostics.tail_norm {
        parts.push(format!("tail_norm={t:e}"));
    }
    if let Some(t) = curve.diagnostics.t_max_used {
        parts.push(format!("t_max={t}"));
    }
    if let Some(r) = curve.diagnostics.roundoff {
        parts.push(format!("roundoff={r:e}"));
    }
    parts.join(";")
}
