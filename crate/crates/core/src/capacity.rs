//! Spatial coverage capacity (SCC), spatial rate capacity (SRC), and the
//! optimization problems over BS height, density and channel partitioning.
//!
//! SCC and SRC are the effective density of users meeting the QoS target
//! with reliability at least `x`: `N_a · λ · F̄(x)`, with the meta-CCDF from
//! the moment-based recovery.

use rayon::prelude::*;

use crate::coverage::{metric_coverage_with, Metric, NetworkConfig};
use crate::error::{Error, Result};
use crate::metadist::{meta_curve_with, MetaMethod};
use crate::moments::moment_sequence_with;
use crate::numerics::{
    golden_section_max, grid_refine_max, GridAxis, OptimizerSpec, QuadratureSpec,
};

/// One evaluated capacity value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityPoint {
    pub config_digest: u64,
    pub x: f64,
    pub metric: Metric,
    /// Effective user density, per m².
    pub value: f64,
}

/// Result of an optimization run.
#[derive(Debug, Clone)]
pub struct OptimumReport {
    pub lambda: f64,
    pub height: f64,
    pub n_partitions: u32,
    pub objective: f64,
    /// Every evaluated point `(parameters, objective)` in evaluation order.
    pub trace: Vec<(Vec<f64>, f64)>,
    pub warnings: Vec<String>,
}

fn capacity_point(
    cfg: &NetworkConfig,
    x: f64,
    metric: Metric,
    mu: u32,
    spec: &QuadratureSpec,
) -> Result<CapacityPoint> {
    let curve = meta_curve_with(
        cfg,
        &metric,
        &[x],
        MetaMethod::Mnatsakanov,
        mu,
        0.0_f64.max(200.0),
        spec,
    )?;
    let value = cfg.n_active as f64 * cfg.lambda * curve.ccdf[0];
    Ok(CapacityPoint {
        config_digest: cfg.digest(),
        x,
        metric,
        value,
    })
}

/// Spatial coverage capacity `N_a λ F̄_{P_θ}(x)`.
pub fn scc(cfg: &NetworkConfig, x: f64, theta: f64, mu: u32) -> Result<CapacityPoint> {
    capacity_point(
        cfg,
        x,
        Metric::SirThreshold(theta),
        mu,
        &QuadratureSpec::default(),
    )
}

/// Spatial rate capacity `N_a λ F̄_{P_{R_o}}(x)`.
pub fn src(cfg: &NetworkConfig, x: f64, r_o: f64, mu: u32) -> Result<CapacityPoint> {
    capacity_point(
        cfg,
        x,
        Metric::RateThreshold(r_o),
        mu,
        &QuadratureSpec::default(),
    )
}

/// Maximize coverage (or rate coverage) over the BS height on `bracket`.
pub fn optimize_height(
    cfg: &NetworkConfig,
    metric: &Metric,
    bracket: (f64, f64),
) -> Result<OptimumReport> {
    optimize_height_with(cfg, metric, bracket, &QuadratureSpec::default())
}

pub fn optimize_height_with(
    cfg: &NetworkConfig,
    metric: &Metric,
    bracket: (f64, f64),
    spec: &QuadratureSpec,
) -> Result<OptimumReport> {
    if !(bracket.0 >= 1.0 && bracket.1 <= 200.0) {
        return Err(Error::InvalidBracket {
            lo: bracket.0,
            hi: bracket.1,
            reason: "height bracket must lie within [1, 200] m".into(),
        });
    }
    let trace = std::sync::Mutex::new(Vec::new());
    let objective = |h: f64| -> f64 {
        let mut c = cfg.clone();
        c.height = h;
        let v = metric_coverage_with(&c, metric, spec).unwrap_or(f64::NEG_INFINITY);
        trace.lock().unwrap().push((vec![h], v));
        v
    };
    let opt_spec = OptimizerSpec {
        bracket,
        x_tol: 0.05,
        max_evals: 400,
    };
    let scalar = golden_section_max(objective, &opt_spec)?;

    let mut warnings = Vec::new();
    if scalar.on_boundary {
        warnings.push(format!(
            "height optimum {:.2} m sits on the bracket boundary [{}, {}]",
            scalar.argmax, bracket.0, bracket.1
        ));
    }
    if !scalar.converged {
        warnings.push("height search stopped on the evaluation budget".into());
    }
    Ok(OptimumReport {
        lambda: cfg.lambda,
        height: scalar.argmax,
        n_partitions: cfg.n_partitions,
        objective: scalar.max,
        trace: trace.into_inner().unwrap(),
        warnings,
    })
}

/// Search ranges for the capacity optimization.
#[derive(Debug, Clone)]
pub struct CapacitySearchSpace {
    /// Candidate BS densities (per m²), ascending.
    pub lambda: Vec<f64>,
    /// Candidate BS heights (m), ascending.
    pub height: Vec<f64>,
    /// Candidate partition counts, ascending.
    pub partitions: Vec<u32>,
    /// Couple `N_a = N_s` at every point (full load).
    pub full_load: bool,
}

/// Maximize SCC or SRC over `(λ, h, N_s)`: exhaustive over the grid (the
/// partition axis is integer), golden refinement on the continuous axes,
/// ties broken toward the smallest `(λ, h, N_s)`.
pub fn optimize_capacity(
    cfg_template: &NetworkConfig,
    space: &CapacitySearchSpace,
    x: f64,
    metric: &Metric,
    mu: u32,
) -> Result<OptimumReport> {
    optimize_capacity_with(
        cfg_template,
        space,
        x,
        metric,
        mu,
        &QuadratureSpec::default(),
    )
}

pub fn optimize_capacity_with(
    cfg_template: &NetworkConfig,
    space: &CapacitySearchSpace,
    x: f64,
    metric: &Metric,
    mu: u32,
    spec: &QuadratureSpec,
) -> Result<OptimumReport> {
    if space.lambda.is_empty() || space.height.is_empty() || space.partitions.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let axes = [
        GridAxis::continuous(space.lambda.clone()),
        GridAxis::continuous(space.height.clone()),
        GridAxis::integer(space.partitions.iter().map(|&n| n as f64).collect()),
    ];
    let objective = |p: &[f64]| -> f64 {
        let mut c = cfg_template.clone();
        c.lambda = p[0];
        c.height = p[1];
        c.n_partitions = p[2] as u32;
        c.n_active = if space.full_load {
            c.n_partitions
        } else {
            c.n_active.min(c.n_partitions)
        };
        capacity_point(&c, x, *metric, mu, spec)
            .map(|pt| pt.value)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let grid = grid_refine_max(objective, &axes, 1e-3)?;

    let mut warnings = Vec::new();
    for (axis, (&hit, name)) in grid
        .on_boundary
        .iter()
        .zip(["lambda", "height", "partitions"])
        .enumerate()
    {
        if hit && axes[axis].values.len() > 1 {
            warnings.push(format!("optimum sits on the {name} grid boundary"));
        }
    }
    Ok(OptimumReport {
        lambda: grid.argmax[0],
        height: grid.argmax[1],
        n_partitions: grid.argmax[2] as u32,
        objective: grid.max,
        trace: grid.trace,
        warnings,
    })
}

/// Axis of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Lambda,
    Height,
    Partitions,
    ThetaDb,
    RateBps,
    Reliability,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda_per_m2",
            SweepAxis::Height => "height_m",
            SweepAxis::Partitions => "n_partitions",
            SweepAxis::ThetaDb => "theta_db",
            SweepAxis::RateBps => "rate_bps",
            SweepAxis::Reliability => "reliability_x",
        }
    }
}

/// One row of a sweep table.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub axis_value: f64,
    /// Coverage (or rate coverage) probability for the row's metric.
    pub coverage: f64,
    /// Variance of the conditional success probability.
    pub variance: f64,
    /// Meta-distribution CCDF at the requested reliability.
    pub meta_ccdf: f64,
    /// SCC or SRC, per m².
    pub capacity: f64,
}

/// Sweep request: base configuration, metric, reliability and moment order.
#[derive(Debug, Clone)]
pub struct SweepRequest {
    pub cfg: NetworkConfig,
    pub metric: Metric,
    pub x: f64,
    pub mu: u32,
    /// Couple `N_a = N_s` when sweeping partitions.
    pub full_load: bool,
}

/// Evaluate coverage, variance, meta-CCDF and capacity along one axis.
pub fn sweep(req: &SweepRequest, axis: SweepAxis, grid: &[f64]) -> Result<Vec<SweepRow>> {
    sweep_with(req, axis, grid, &QuadratureSpec::default())
}

pub fn sweep_with(
    req: &SweepRequest,
    axis: SweepAxis,
    grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !(req.x > 0.0 && req.x < 1.0) {
        return Err(Error::InvalidReliability(req.x));
    }
    grid.par_iter()
        .map(|&v| {
            let mut cfg = req.cfg.clone();
            let mut metric = req.metric;
            let mut x = req.x;
            match axis {
                SweepAxis::Lambda => cfg.lambda = v,
                SweepAxis::Height => cfg.height = v,
                SweepAxis::Partitions => {
                    cfg.n_partitions = v as u32;
                    cfg.n_active = if req.full_load {
                        cfg.n_partitions
                    } else {
                        cfg.n_active.min(cfg.n_partitions)
                    };
                }
                SweepAxis::ThetaDb => metric = Metric::SirThreshold(10f64.powf(v / 10.0)),
                SweepAxis::RateBps => metric = Metric::RateThreshold(v),
                SweepAxis::Reliability => x = v,
            }
            cfg.validate()?;

            // One shared-mesh moment sequence serves the variance, the
            // meta-CCDF and the capacity column.
            let seq = moment_sequence_with(&cfg, &metric, req.mu.max(2), spec)?;
            let m1 = seq.value(1);
            let m2 = seq.value(2);
            let ccdf = (1.0 - crate::metadist::mnatsakanov_cdf(&seq, x)?).clamp(0.0, 1.0);
            Ok(SweepRow {
                axis_value: v,
                coverage: m1,
                variance: (m2 - m1 * m1).max(0.0),
                meta_ccdf: ccdf,
                capacity: cfg.n_active as f64 * cfg.lambda * ccdf,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{Deployment, Environment};

    fn umi_cfg(lambda: f64, height: f64) -> NetworkConfig {
        NetworkConfig::new(lambda, height, Environment::preset(Deployment::UMi)).unwrap()
    }

    #[test]
    fn capacity_is_density_times_ccdf() {
        let cfg = umi_cfg(1e-5, 10.0);
        let point = scc(&cfg, 0.4, 1.0, 10).unwrap();
        assert!(point.value >= 0.0);
        assert!(point.value <= cfg.n_active as f64 * cfg.lambda);
    }

    #[test]
    fn sparse_network_has_no_capacity() {
        let cfg = umi_cfg(1e-12, 10.0);
        let point = scc(&cfg, 0.4, 1.0, 10).unwrap();
        // F̄ -> 1 but the density factor vanishes.
        assert!(point.value <= 1e-12 + 1e-18);
    }

    #[test]
    fn src_with_unit_partitioning_equals_scc_at_unit_threshold() {
        let cfg = umi_cfg(1e-5, 20.0);
        // R_o = W with N_s = 1 gives threshold 2^1 - 1 = 1.
        let a = src(&cfg, 0.4, cfg.bandwidth_hz, 15).unwrap();
        let b = scc(&cfg, 0.4, 1.0, 15).unwrap();
        assert!((a.value - b.value).abs() < 1e-12 * a.value.max(1e-30));
    }

    #[test]
    fn reliability_one_side_capacity_vanishes() {
        let cfg = umi_cfg(1e-4, 10.0);
        let near_one = scc(&cfg, 0.999, 1.0, 25).unwrap();
        let moderate = scc(&cfg, 0.2, 1.0, 25).unwrap();
        assert!(near_one.value < moderate.value);
    }

    #[test]
    fn height_bracket_is_validated() {
        let cfg = umi_cfg(1e-4, 10.0);
        assert!(optimize_height(&cfg, &Metric::SirThreshold(1.0), (0.1, 50.0)).is_err());
        assert!(optimize_height(&cfg, &Metric::SirThreshold(1.0), (5.0, 500.0)).is_err());
    }

    #[test]
    fn optimal_height_tracks_density() {
        // The coverage-optimal height is not a constant of the deployment:
        // sparser networks favor taller masts.
        let metric = Metric::SirThreshold(1.0);
        let dense = optimize_height(&umi_cfg(1e-4, 10.0), &metric, (1.0, 100.0)).unwrap();
        let sparse = optimize_height(&umi_cfg(1e-5, 10.0), &metric, (1.0, 100.0)).unwrap();
        assert!(
            (dense.height - sparse.height).abs() > 5.0,
            "h*({:.1}) vs h*({:.1}) should differ",
            dense.height,
            sparse.height
        );
        assert!(sparse.height > dense.height);
    }

    #[test]
    fn single_point_capacity_search_returns_that_point() {
        let cfg = umi_cfg(1e-5, 10.0);
        let space = CapacitySearchSpace {
            lambda: vec![1e-5],
            height: vec![15.0],
            partitions: vec![4],
            full_load: true,
        };
        let report = optimize_capacity(&cfg, &space, 0.4, &Metric::RateThreshold(5e6), 10).unwrap();
        assert_eq!(report.lambda, 1e-5);
        assert_eq!(report.height, 15.0);
        assert_eq!(report.n_partitions, 4);
        assert!(report.objective >= 0.0);
    }

    #[test]
    fn sweep_single_point_consistent_with_point_ops() {
        let cfg = umi_cfg(1e-4, 10.0);
        let req = SweepRequest {
            cfg: cfg.clone(),
            metric: Metric::SirThreshold(1.0),
            x: 0.4,
            mu: 10,
            full_load: false,
        };
        let rows = sweep(&req, SweepAxis::Height, &[10.0]).unwrap();
        assert_eq!(rows.len(), 1);
        let p = crate::coverage::coverage_probability(&cfg, 1.0).unwrap();
        assert!((rows[0].coverage - p).abs() < 1e-6);
        let point = scc(&cfg, 0.4, 1.0, 10).unwrap();
        assert!((rows[0].capacity - point.value).abs() < 1e-9 * point.value.max(1e-30));
    }

    #[test]
    fn theta_sweep_is_monotone() {
        let cfg = umi_cfg(1e-4, 10.0);
        let req = SweepRequest {
            cfg,
            metric: Metric::SirThreshold(1.0),
            x: 0.4,
            mu: 4,
            full_load: false,
        };
        let rows = sweep(&req, SweepAxis::ThetaDb, &[-6.0, -3.0, 0.0, 3.0, 6.0]).unwrap();
        for w in rows.windows(2) {
            assert!(
                w[1].coverage < w[0].coverage,
                "coverage must fall with the threshold"
            );
        }
    }

    #[test]
    fn empty_sweep_grid_is_rejected() {
        let cfg = umi_cfg(1e-4, 10.0);
        let req = SweepRequest {
            cfg,
            metric: Metric::SirThreshold(1.0),
            x: 0.4,
            mu: 4,
            full_load: false,
        };
        assert!(matches!(
            sweep(&req, SweepAxis::Height, &[]),
            Err(Error::EmptyGrid)
        ));
    }
}
