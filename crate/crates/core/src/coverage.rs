//! Coverage probability and rate coverage for the downlink network:
//! Laplace-functional factors over the interfering field, the interference
//! kernel `η(s,r)`, and the serving-distance average.

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::numerics::QuadratureSpec;
use crate::propagation::{path_gain, Environment, LinkType};

/// Deployment state of the network under analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// BS density in BS per m².
    pub lambda: f64,
    /// BS height above the user plane, meters.
    pub height: f64,
    /// Active users per cell.
    pub n_active: u32,
    /// Channel partitions (sub-carriers or time slots) per cell.
    pub n_partitions: u32,
    /// Total BS bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Carrier frequency, GHz.
    pub carrier_ghz: f64,
    pub env: Environment,
    /// Scales the interference horizon; 1.0 is the default window rule.
    pub window_factor: f64,
}

impl NetworkConfig {
    pub fn new(lambda: f64, height: f64, env: Environment) -> Result<Self> {
        let cfg = NetworkConfig {
            lambda,
            height,
            n_active: 1,
            n_partitions: 1,
            bandwidth_hz: 20e6,
            carrier_ghz: 2.0,
            env,
            window_factor: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("BS density must be > 0, got {}", self.lambda),
            });
        }
        if !(self.height >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "height",
                reason: format!("BS height must be >= 0, got {}", self.height),
            });
        }
        if self.n_active < 1 || self.n_active > self.n_partitions {
            return Err(Error::InvalidParameter {
                name: "n_active",
                reason: format!(
                    "must satisfy 1 <= N_a <= N_s, got N_a = {}, N_s = {}",
                    self.n_active, self.n_partitions
                ),
            });
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "bandwidth_hz",
                reason: format!("must be > 0, got {}", self.bandwidth_hz),
            });
        }
        if !(self.carrier_ghz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "carrier_ghz",
                reason: format!("must be > 0, got {}", self.carrier_ghz),
            });
        }
        if !(self.window_factor > 0.0) {
            return Err(Error::InvalidParameter {
                name: "window_factor",
                reason: format!("must be > 0, got {}", self.window_factor),
            });
        }
        Ok(())
    }

    /// Non-fatal configuration warnings (density outside the preset range).
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (lo, hi) = self.env.density_range;
        if self.lambda < lo || self.lambda > hi {
            out.push(format!(
                "lambda = {:e} lies outside the {} density range [{:e}, {:e}]",
                self.lambda,
                self.env.deployment.name(),
                lo,
                hi
            ));
        }
        out
    }

    /// Absolute ceiling of the interference horizon, meters. Far beyond any
    /// terrestrial deployment scale; keeps the vanishing-density limit
    /// interference-free instead of scale-invariant.
    pub const MAX_INTERFERENCE_RADIUS_M: f64 = 1e5;

    /// Interference horizon in meters:
    /// `window_factor · 10 / sqrt(πλ)`, capped at
    /// [`Self::MAX_INTERFERENCE_RADIUS_M`].
    ///
    /// The UMi LoS distance exponent equals the spatial dimension, so the
    /// expected far-field LoS interference grows without bound as the
    /// network radius does; analysis and simulation therefore share one
    /// explicit finite horizon. The default encloses an expected 100
    /// co-channel BS for every in-range density and keeps the NLoS tail
    /// below a few percent of the NLoS total.
    pub fn interference_radius(&self) -> f64 {
        (self.window_factor * 10.0 / (std::f64::consts::PI * self.lambda).sqrt())
            .min(Self::MAX_INTERFERENCE_RADIUS_M)
    }

    /// Stable digest of the configuration, for report metadata and caching.
    pub fn digest(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.lambda.to_bits().hash(&mut h);
        self.height.to_bits().hash(&mut h);
        self.n_active.hash(&mut h);
        self.n_partitions.hash(&mut h);
        self.bandwidth_hz.to_bits().hash(&mut h);
        self.carrier_ghz.to_bits().hash(&mut h);
        self.window_factor.to_bits().hash(&mut h);
        self.env.deployment.name().hash(&mut h);
        self.env.a.to_bits().hash(&mut h);
        self.env.b.to_bits().hash(&mut h);
        for p in [&self.env.los, &self.env.nlos] {
            p.alpha.to_bits().hash(&mut h);
            p.beta_db.to_bits().hash(&mut h);
            p.gamma.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

/// QoS target: either an SIR threshold (linear) or a rate threshold (bit/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    SirThreshold(f64),
    RateThreshold(f64),
}

impl Metric {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Metric::SirThreshold(theta) if !(theta > 0.0) => Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("SIR threshold must be > 0, got {theta}"),
            }),
            Metric::RateThreshold(r_o) if !(r_o > 0.0) => Err(Error::InvalidParameter {
                name: "r_o",
                reason: format!("rate threshold must be > 0, got {r_o}"),
            }),
            _ => Ok(()),
        }
    }

    /// The SIR threshold this metric induces under `cfg`'s partitioning.
    pub fn effective_sir_threshold(&self, cfg: &NetworkConfig) -> Result<f64> {
        self.validate()?;
        match *self {
            Metric::SirThreshold(theta) => Ok(theta),
            Metric::RateThreshold(r_o) => {
                rate_to_sir_threshold(r_o, cfg.n_partitions, cfg.bandwidth_hz)
            }
        }
    }
}

/// Linear interference-scaling parameter of the Laplace-functional kernels:
/// the QoS threshold times the serving-link path loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelScale(f64);

impl KernelScale {
    pub fn new(s: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "s",
                reason: format!("kernel scale must be >= 0, got {s}"),
            });
        }
        Ok(KernelScale(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// SIR threshold equivalent to rate threshold `r_o` bit/s over one of `n_s`
/// partitions of `w` Hz: `2^(r_o n_s / w) - 1`.
pub fn rate_to_sir_threshold(r_o: f64, n_s: u32, w: f64) -> Result<f64> {
    if !(r_o > 0.0) || n_s < 1 || !(w > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rate_to_sir_threshold",
            reason: format!("need r_o > 0, n_s >= 1, w > 0; got {r_o}, {n_s}, {w}"),
        });
    }
    let exponent = r_o * n_s as f64 / w;
    if exponent > 1000.0 {
        return Err(Error::NonPhysicalRate { exponent });
    }
    // exp_m1 keeps precision for vanishing rate demands, where 2^x - 1
    // underflows to zero in the naive form.
    Ok((exponent * std::f64::consts::LN_2).exp_m1())
}

/// Interference kernel of the coverage integral:
/// `η(s,r) = P_L(h,r)/(1+s·G_L(h,r)) + P_NL(h,r)/(1+s·G_NL(h,r))`.
pub fn eta(s: KernelScale, r: f64, h: f64, env: &Environment, f_ghz: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: format!("interferer distance must be > 0, got {r}"),
        });
    }
    let pl = crate::propagation::los_probability(h, r, env)?;
    let g_l = path_gain(h, r, LinkType::Los, env, f_ghz)?;
    let g_n = path_gain(h, r, LinkType::Nlos, env, f_ghz)?;
    Ok(pl / (1.0 + s.value() * g_l) + (1.0 - pl) / (1.0 + s.value() * g_n))
}

/// Laplace-functional factor of the interfering field beyond `r_1`:
/// `exp(-2π λ N_a/N_s ∫_{r_1}^{horizon} (1-η(s,r)) r dr)`.
pub fn laplace_factor(r_1: f64, s: KernelScale, cfg: &NetworkConfig) -> Result<f64> {
    laplace_factor_with(r_1, s, cfg, &QuadratureSpec::default())
}

pub fn laplace_factor_with(
    r_1: f64,
    s: KernelScale,
    cfg: &NetworkConfig,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(r_1 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "r_1",
            reason: format!("serving distance must be > 0, got {r_1}"),
        });
    }
    let kernel = Kernel::new(cfg, &Metric::SirThreshold(1.0))?;
    let exponent = kernel.interference_exponent(s.value(), r_1, spec)?;
    Ok((-exponent).exp())
}

/// Coverage probability `P_θ` for a linear SIR threshold.
pub fn coverage_probability(cfg: &NetworkConfig, theta: f64) -> Result<f64> {
    coverage_probability_with(cfg, theta, &QuadratureSpec::default())
}

pub fn coverage_probability_with(
    cfg: &NetworkConfig,
    theta: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let kernel = Kernel::new(cfg, &Metric::SirThreshold(theta))?;
    kernel.coverage_adaptive(spec)
}

/// Rate coverage probability `P_{R_o}`: coverage at the SIR threshold
/// `2^(R_o N_s / W) - 1`.
pub fn rate_coverage_probability(cfg: &NetworkConfig, r_o: f64) -> Result<f64> {
    rate_coverage_probability_with(cfg, r_o, &QuadratureSpec::default())
}

pub fn rate_coverage_probability_with(
    cfg: &NetworkConfig,
    r_o: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let theta = rate_to_sir_threshold(r_o, cfg.n_partitions, cfg.bandwidth_hz)?;
    coverage_probability_with(cfg, theta, spec)
}

/// Coverage for an arbitrary metric (SIR or rate threshold).
pub fn metric_coverage(cfg: &NetworkConfig, metric: &Metric) -> Result<f64> {
    metric_coverage_with(cfg, metric, &QuadratureSpec::default())
}

pub fn metric_coverage_with(
    cfg: &NetworkConfig,
    metric: &Metric,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let theta = metric.effective_sir_threshold(cfg)?;
    coverage_probability_with(cfg, theta, spec)
}
