//! Monte Carlo oracle: samples Poisson network realizations with static
//! per-link LoS states and co-channel thinning, and evaluates the
//! conditional success probability in closed form over the Rayleigh fading.
//!
//! Fading is fast (averaged analytically inside the conditional success
//! probability); BS positions, LoS states and channel occupancy are static
//! per realization. This split matches the probability space of the
//! analytical moments, so empirical and analytical moments are directly
//! comparable.
//!
//! Randomness is drawn from per-realization counter-based ChaCha8 streams
//! keyed by `(seed, realization index)`, and accumulation runs over
//! fixed-size batches reduced in index order, so summaries are bit-identical
//! for a fixed seed regardless of thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::coverage::{Metric, NetworkConfig};
use crate::error::{Error, Result};
use crate::propagation::{los_probability_raw, LinkGain, LinkType};

/// Realizations per accumulation batch. Fixed so the reduction order does
/// not depend on the thread count.
const BATCH: u64 = 1024;

/// Highest power of the conditional success probability accumulated; powers
/// up to `2 * MOMENT_COUNT` feed the standard errors.
const MOMENT_COUNT: usize = 5;

/// One sampled network snapshot: serving link plus the thinned interferer
/// field beyond the serving distance, all with frozen LoS states.
#[derive(Debug, Clone)]
pub struct Realization {
    pub serving_distance: f64,
    pub serving_link: LinkType,
    /// Horizontal distance and LoS state per co-channel interferer.
    pub interferers: Vec<(f64, LinkType)>,
}

/// Summary statistics of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub n: u64,
    pub seed: u64,
    /// Empirical coverage for the run's metric: mean conditional success.
    pub estimate: f64,
    pub std_error: f64,
    /// Empirical moments `M_1..M_5` (sample means of powers).
    pub moments: Vec<f64>,
    pub moment_std_errors: Vec<f64>,
    /// Empirical CCDF of the conditional success probability.
    pub ccdf: Vec<(f64, f64)>,
    /// Interference window radius used, meters.
    pub window_radius: f64,
}

fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draw one network realization. Draw order per stream: serving distance,
/// serving LoS state, interferer count, then (distance, LoS) per interferer.
pub fn sample_realization(cfg: &NetworkConfig, rng: &mut impl Rng) -> Realization {
    let lambda_eff = cfg.lambda * cfg.n_active as f64 / cfg.n_partitions as f64;
    let window = cfg.interference_radius();

    // Inverse transform of the nearest-BS distance CDF 1 - exp(-πλr²).
    let u: f64 = rng.random();
    let r_1 = (-(1.0 - u).ln() / (std::f64::consts::PI * cfg.lambda)).sqrt();

    let p_serv = los_probability_raw(cfg.height, r_1, cfg.env.a, cfg.env.b);
    let serving_link = if rng.random::<f64>() < p_serv {
        LinkType::Los
    } else {
        LinkType::Nlos
    };

    let mut interferers = Vec::new();
    if r_1 < window {
        let area = std::f64::consts::PI * (window * window - r_1 * r_1);
        let mean = lambda_eff * area;
        let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
        interferers.reserve(count);
        for _ in 0..count {
            // Uniform over the annulus area.
            let u: f64 = rng.random();
            let r = (r_1 * r_1 + u * (window * window - r_1 * r_1)).sqrt();
            let p = los_probability_raw(cfg.height, r, cfg.env.a, cfg.env.b);
            let link = if rng.random::<f64>() < p {
                LinkType::Los
            } else {
                LinkType::Nlos
            };
            interferers.push((r, link));
        }
    }

    Realization {
        serving_distance: r_1,
        serving_link,
        interferers,
    }
}

/// Exact conditional success probability of one realization over iid Exp(1)
/// fading: `Π_i 1/(1 + s·G_i)` with `s = θ_eff · L_serving(h, r_1)`.
pub fn conditional_success(
    real: &Realization,
    cfg: &NetworkConfig,
    metric: &Metric,
) -> Result<f64> {
    let theta_eff = metric.effective_sir_threshold(cfg)?;
    let gain_los = LinkGain::new(&cfg.env, LinkType::Los, cfg.carrier_ghz);
    let gain_nlos = LinkGain::new(&cfg.env, LinkType::Nlos, cfg.carrier_ghz);
    let serving_gain = match real.serving_link {
        LinkType::Los => gain_los.gain(cfg.height, real.serving_distance),
        LinkType::Nlos => gain_nlos.gain(cfg.height, real.serving_distance),
    };
    let s = theta_eff / serving_gain;
    let mut p = 1.0;
    for &(r, link) in &real.interferers {
        let g = match link {
            LinkType::Los => gain_los.gain(cfg.height, r),
            LinkType::Nlos => gain_nlos.gain(cfg.height, r),
        };
        p /= 1.0 + s * g;
    }
    Ok(p)
}

#[derive(Clone)]
struct Accumulator {
    power_sums: [f64; 2 * MOMENT_COUNT],
    ccdf_counts: Vec<u64>,
    n: u64,
}

impl Accumulator {
    fn new(grid_len: usize) -> Self {
        Accumulator {
            power_sums: [0.0; 2 * MOMENT_COUNT],
            ccdf_counts: vec![0; grid_len],
            n: 0,
        }
    }

    fn push(&mut self, p: f64, x_grid: &[f64]) {
        let mut power = 1.0;
        for slot in self.power_sums.iter_mut() {
            power *= p;
            *slot += power;
        }
        for (count, &x) in self.ccdf_counts.iter_mut().zip(x_grid) {
            if p > x {
                *count += 1;
            }
        }
        self.n += 1;
    }

    fn merge(mut self, other: &Accumulator) -> Accumulator {
        for (a, b) in self.power_sums.iter_mut().zip(other.power_sums) {
            *a += b;
        }
        for (a, b) in self.ccdf_counts.iter_mut().zip(&other.ccdf_counts) {
            *a += b;
        }
        self.n += other.n;
        self
    }
}

fn run_batches<F>(n: u64, per_realization: F, grid_len: usize, x_grid: &[f64]) -> Accumulator
where
    F: Fn(u64) -> f64 + Sync,
{
    let batches = n.div_ceil(BATCH);
    let partials: Vec<Accumulator> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut acc = Accumulator::new(grid_len);
            let lo = b * BATCH;
            let hi = ((b + 1) * BATCH).min(n);
            for idx in lo..hi {
                acc.push(per_realization(idx), x_grid);
            }
            acc
        })
        .collect();
    partials
        .into_iter()
        .fold(Accumulator::new(grid_len), |acc, p| acc.merge(&p))
}

/// Empirical meta-distribution, coverage and moments from `n` realizations.
pub fn empirical_meta(
    cfg: &NetworkConfig,
    metric: &Metric,
    n: u64,
    seed: u64,
    x_grid: &[f64],
) -> Result<SimulationSummary> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("need at least 2 realizations, got {n}"),
        });
    }
    cfg.validate()?;
    // Evaluate once up front so configuration errors surface before work.
    metric.effective_sir_threshold(cfg)?;

    let acc = run_batches(
        n,
        |idx| {
            let mut rng = stream_rng(seed, idx);
            let real = sample_realization(cfg, &mut rng);
            conditional_success(&real, cfg, metric).expect("validated metric")
        },
        x_grid.len(),
        x_grid,
    );

    let nf = n as f64;
    let mean = |k: usize| acc.power_sums[k - 1] / nf;
    let se = |k: usize| {
        let m = mean(k);
        (((acc.power_sums[2 * k - 1] / nf) - m * m).max(0.0) / nf).sqrt()
    };

    Ok(SimulationSummary {
        n,
        seed,
        estimate: mean(1),
        std_error: se(1),
        moments: (1..=MOMENT_COUNT).map(mean).collect(),
        moment_std_errors: (1..=MOMENT_COUNT).map(se).collect(),
        ccdf: x_grid
            .iter()
            .zip(&acc.ccdf_counts)
            .map(|(&x, &c)| (x, c as f64 / nf))
            .collect(),
        window_radius: cfg.interference_radius(),
    })
}

/// Fully sampled estimator: draws explicit Exp(1) gains for the serving and
/// interfering links, forms the SIR and counts threshold crossings. Slower
/// and noisier than [`empirical_meta`]; validates the closed-form fading
/// average end to end. Returns the estimate and its standard error.
pub fn empirical_coverage_fading(
    cfg: &NetworkConfig,
    metric: &Metric,
    n: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("need at least 2 realizations, got {n}"),
        });
    }
    cfg.validate()?;
    let theta_eff = metric.effective_sir_threshold(cfg)?;
    let gain_los = LinkGain::new(&cfg.env, LinkType::Los, cfg.carrier_ghz);
    let gain_nlos = LinkGain::new(&cfg.env, LinkType::Nlos, cfg.carrier_ghz);

    let acc = run_batches(
        n,
        |idx| {
            let mut rng = stream_rng(seed, idx);
            let real = sample_realization(cfg, &mut rng);
            let exp1 = |rng: &mut ChaCha8Rng| -> f64 { -(1.0 - rng.random::<f64>()).ln() };
            let serving_gain = match real.serving_link {
                LinkType::Los => gain_los.gain(cfg.height, real.serving_distance),
                LinkType::Nlos => gain_nlos.gain(cfg.height, real.serving_distance),
            };
            let signal = exp1(&mut rng) * serving_gain;
            let mut interference = 0.0;
            for &(r, link) in &real.interferers {
                let g = match link {
                    LinkType::Los => gain_los.gain(cfg.height, r),
                    LinkType::Nlos => gain_nlos.gain(cfg.height, r),
                };
                interference += exp1(&mut rng) * g;
            }
            // No interferers: SIR is unbounded, always covered.
            if interference == 0.0 || signal / interference >= theta_eff {
                1.0
            } else {
                0.0
            }
        },
        0,
        &[],
    );

    let p = acc.power_sums[0] / n as f64;
    Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
}
