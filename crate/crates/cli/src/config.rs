//! Run configuration: plain `key = value` file, flag and environment
//! overrides, validation, and the canonical form echoed into report
//! metadata.
//!
//! Precedence: command-line flag (or its `CELLCOV_*` environment variable,
//! handled by clap) > config file > built-in default.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use cellcov::coverage::{Metric, NetworkConfig};
use cellcov::numerics::QuadratureSpec;
use cellcov::propagation::Environment;

/// Keys accepted in a config file.
const FILE_KEYS: &[&str] = &[
    "deployment",
    "lambda",
    "height",
    "n_a",
    "n_s",
    "bandwidth_hz",
    "carrier_ghz",
    "window_factor",
    "env_a",
    "env_b",
    "theta_db",
    "rate_bps",
    "mu",
    "t_max",
    "rel_tol",
    "abs_tol",
    "n",
    "seed",
    "x",
];

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    map: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        let mut map = BTreeMap::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    line_no + 1
                ));
            };
            let key = key.trim().to_string();
            if !FILE_KEYS.contains(&key.as_str()) {
                return Err(format!(
                    "{}:{}: unknown key `{key}`; valid keys: {}",
                    path.display(),
                    line_no + 1,
                    FILE_KEYS.join(", ")
                ));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(FileConfig { map })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| format!("config key `{key}`: cannot parse `{raw}`: {e}")),
        }
    }
}

/// Network and method options shared by every subcommand, before
/// resolution against the config file and defaults.
#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Plain key=value config file; flags override its entries.
    #[arg(long, global = true, env = "CELLCOV_CONFIG")]
    pub config: Option<std::path::PathBuf>,

    /// Deployment preset: "umi" or "uma".
    #[arg(long, global = true, env = "CELLCOV_DEPLOYMENT")]
    pub deployment: Option<String>,

    /// BS density, per m².
    #[arg(long, global = true, env = "CELLCOV_LAMBDA")]
    pub lambda: Option<f64>,

    /// BS height, meters.
    #[arg(long, global = true, env = "CELLCOV_HEIGHT")]
    pub height: Option<f64>,

    /// Active users per cell.
    #[arg(long = "n-a", global = true, env = "CELLCOV_N_A")]
    pub n_a: Option<u32>,

    /// Channel partitions per cell.
    #[arg(long = "n-s", global = true, env = "CELLCOV_N_S")]
    pub n_s: Option<u32>,

    /// Total BS bandwidth, Hz.
    #[arg(long, global = true, env = "CELLCOV_BANDWIDTH_HZ")]
    pub bandwidth_hz: Option<f64>,

    /// Carrier frequency, GHz.
    #[arg(long, global = true, env = "CELLCOV_CARRIER_GHZ")]
    pub carrier_ghz: Option<f64>,

    /// Scales the interference horizon (1.0 = default rule).
    #[arg(long, global = true, env = "CELLCOV_WINDOW_FACTOR")]
    pub window_factor: Option<f64>,

    /// LoS probability constant a (degrees), overriding the preset.
    #[arg(long, global = true, env = "CELLCOV_ENV_A")]
    pub env_a: Option<f64>,

    /// LoS probability constant b (per degree), overriding the preset.
    #[arg(long, global = true, env = "CELLCOV_ENV_B")]
    pub env_b: Option<f64>,

    /// SIR threshold in dB (exactly one of --theta-db / --rate-bps).
    #[arg(long, global = true, env = "CELLCOV_THETA_DB")]
    pub theta_db: Option<f64>,

    /// Rate threshold in bit/s (exactly one of --theta-db / --rate-bps).
    #[arg(long, global = true, env = "CELLCOV_RATE_BPS")]
    pub rate_bps: Option<f64>,

    /// Moment count for the moment-based recovery.
    #[arg(long, global = true, env = "CELLCOV_MU")]
    pub mu: Option<u32>,

    /// Gil-Pelaez integration cutoff.
    #[arg(long = "t-max", global = true, env = "CELLCOV_T_MAX")]
    pub t_max: Option<f64>,

    /// Relative quadrature tolerance.
    #[arg(long = "rel-tol", global = true, env = "CELLCOV_REL_TOL")]
    pub rel_tol: Option<f64>,

    /// Absolute quadrature tolerance.
    #[arg(long = "abs-tol", global = true, env = "CELLCOV_ABS_TOL")]
    pub abs_tol: Option<f64>,

    /// Output file (stdout when omitted).
    #[arg(long, global = true, env = "CELLCOV_OUT")]
    pub out: Option<std::path::PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub metric: Option<Metric>,
    pub theta_db: Option<f64>,
    pub rate_bps: Option<f64>,
    pub mu: u32,
    pub t_max: f64,
    pub spec: QuadratureSpec,
    pub out: Option<std::path::PathBuf>,
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, String> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let deployment = args
            .deployment
            .clone()
            .or(file.get::<String>("deployment")?)
            .unwrap_or_else(|| "umi".to_string());
        let mut env = Environment::from_name(&deployment).map_err(|e| e.to_string())?;
        if let Some(a) = args.env_a.or(file.get("env_a")?) {
            env.a = a;
        }
        if let Some(b) = args.env_b.or(file.get("env_b")?) {
            env.b = b;
        }

        let lambda = args.lambda.or(file.get("lambda")?).unwrap_or(1e-4);
        let height = args.height.or(file.get("height")?).unwrap_or(10.0);
        let mut network = NetworkConfig::new(lambda, height, env).map_err(|e| e.to_string())?;
        network.n_active = args.n_a.or(file.get("n_a")?).unwrap_or(1);
        network.n_partitions = args.n_s.or(file.get("n_s")?).unwrap_or(1);
        network.bandwidth_hz = args
            .bandwidth_hz
            .or(file.get("bandwidth_hz")?)
            .unwrap_or(20e6);
        network.carrier_ghz = args.carrier_ghz.or(file.get("carrier_ghz")?).unwrap_or(2.0);
        network.window_factor = args
            .window_factor
            .or(file.get("window_factor")?)
            .unwrap_or(1.0);
        network.validate().map_err(|e| e.to_string())?;

        let theta_db = args.theta_db.or(file.get("theta_db")?);
        let rate_bps = args.rate_bps.or(file.get("rate_bps")?);
        let metric = match (theta_db, rate_bps) {
            (Some(_), Some(_)) => {
                return Err(
                    "exactly one of --theta-db / --rate-bps may be given, got both".to_string(),
                )
            }
            // dB thresholds convert to linear at this boundary only.
            (Some(db), None) => Some(Metric::SirThreshold(10f64.powf(db / 10.0))),
            (None, Some(r)) => Some(Metric::RateThreshold(r)),
            (None, None) => None,
        };
        if let Some(m) = &metric {
            m.validate().map_err(|e| e.to_string())?;
        }

        let defaults = QuadratureSpec::default();
        let spec = QuadratureSpec {
            rel_tol: args
                .rel_tol
                .or(file.get("rel_tol")?)
                .unwrap_or(defaults.rel_tol),
            abs_tol: args
                .abs_tol
                .or(file.get("abs_tol")?)
                .unwrap_or(defaults.abs_tol),
            ..defaults
        };
        spec.validate().map_err(|e| e.to_string())?;

        Ok(RunConfig {
            warnings: network.warnings(),
            network,
            metric,
            theta_db,
            rate_bps,
            mu: args
                .mu
                .or(file.get("mu")?)
                .unwrap_or(cellcov::metadist::DEFAULT_MU),
            t_max: args
                .t_max
                .or(file.get("t_max")?)
                .unwrap_or(cellcov::metadist::DEFAULT_T_MAX),
            spec,
            out: args.out.clone(),
        })
    }

    pub fn require_metric(&self) -> Result<Metric, String> {
        self.metric
            .ok_or_else(|| "this command needs a QoS metric: --theta-db or --rate-bps".to_string())
    }

    /// Canonical `key = value` lines echoed into report metadata; parsing
    /// them back as a config file reproduces the run.
    pub fn canonical_lines(&self) -> String {
        let n = &self.network;
        let mut s = String::new();
        let _ = writeln!(s, "# deployment = {}", n.env.deployment.name());
        let _ = writeln!(s, "# lambda = {}", n.lambda);
        let _ = writeln!(s, "# height = {}", n.height);
        let _ = writeln!(s, "# n_a = {}", n.n_active);
        let _ = writeln!(s, "# n_s = {}", n.n_partitions);
        let _ = writeln!(s, "# bandwidth_hz = {}", n.bandwidth_hz);
        let _ = writeln!(s, "# carrier_ghz = {}", n.carrier_ghz);
        let _ = writeln!(s, "# window_factor = {}", n.window_factor);
        let _ = writeln!(s, "# env_a = {}", n.env.a);
        let _ = writeln!(s, "# env_b = {}", n.env.b);
        if let Some(db) = self.theta_db {
            let _ = writeln!(s, "# theta_db = {db}");
        }
        if let Some(r) = self.rate_bps {
            let _ = writeln!(s, "# rate_bps = {r}");
        }
        let _ = writeln!(s, "# mu = {}", self.mu);
        let _ = writeln!(s, "# t_max = {}", self.t_max);
        let _ = writeln!(s, "# rel_tol = {}", self.spec.rel_tol);
        let _ = writeln!(s, "# abs_tol = {}", self.spec.abs_tol);
        let _ = writeln!(s, "# config_digest = {:016x}", n.digest());
        s
    }
}

/// Parse a `lo:hi:step` grid description, or a comma list of explicit
/// values. On linear axes `step` is additive (`1:100:1` gives 1, 2, …,
/// 100); on log axes it is the per-step ratio (`1e-5:1e-3:10` gives 1e-5,
/// 1e-4, 1e-3).
pub fn parse_grid(text: &str, log_spaced: bool) -> Result<Vec<f64>, String> {
    if text.contains(',') {
        return text
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad grid value `{v}`: {e}"))
            })
            .collect();
    }
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!(
            "grid must be `lo:hi:step` or a comma-separated list, got `{text}`"
        ));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|e| format!("bad grid lo `{}`: {e}", parts[0]))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|e| format!("bad grid hi `{}`: {e}", parts[1]))?;
    let step: f64 = parts[2]
        .parse()
        .map_err(|e| format!("bad grid step `{}`: {e}", parts[2]))?;
    if !(lo <= hi) {
        return Err(format!("grid needs lo <= hi, got `{text}`"));
    }
    let count = if log_spaced {
        if !(lo > 0.0) {
            return Err("log-spaced grid needs lo > 0".to_string());
        }
        if !(step > 1.0) {
            return Err(format!("log-spaced grid needs a step ratio > 1, got {step}"));
        }
        ((hi / lo).ln() / step.ln() + 1e-9).floor() as usize + 1
    } else {
        if !(step > 0.0) {
            return Err(format!("grid needs a step > 0, got {step}"));
        }
        (((hi - lo) / step) + 1e-9).floor() as usize + 1
    };
    if count > 100_000 {
        return Err(format!("grid `{text}` has {count} points; refusing"));
    }
    Ok((0..count)
        .map(|i| {
            if log_spaced {
                lo * step.powi(i as i32)
            } else {
                lo + step * i as f64
            }
        })
        .collect())
}
