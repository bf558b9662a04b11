//! Meta-distribution of the conditional success probability: the CCDF
//! `F̄(x) = P(P_s > x)` recovered by two independent routes.
//!
//! * Gil-Pelaez inversion over imaginary moments `M_{jt}` — exact up to
//!   quadrature and cutoff error, slow; retained as the validation path.
//! * Mnatsakanov's moment reconstruction from the first `μ` integer
//!   moments — the fast default.
//!
//! The double sum of the moment reconstruction telescopes to the CDF (the
//! point-mass cases pin this exactly), so the CCDF is one minus the sum.

use std::cell::RefCell;
use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coverage::{Metric, NetworkConfig};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::moments::MomentSequence;
use crate::numerics::{
    gil_pelaez_integral, half_period_panels, PanelMesh, QuadratureSpec, TAIL_NORM_TARGET,
    T_MAX_CEILING,
};

/// Default number of moments for the Mnatsakanov route.
pub const DEFAULT_MU: u32 = 25;

/// Hard cap on the recovery order: beyond 60 the alternating binomial sums
/// leave the exactly-representable integer range of f64 by too much.
pub const MU_CAP: u32 = 60;

/// Default Gil-Pelaez cutoff before automatic extension.
pub const DEFAULT_T_MAX: f64 = 200.0;

/// Recovery method of a [`MetaCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaMethod {
    GilPelaez,
    Mnatsakanov,
}

impl MetaMethod {
    pub fn name(self) -> &'static str {
        match self {
            MetaMethod::GilPelaez => "gil-pelaez",
            MetaMethod::Mnatsakanov => "mnatsakanov",
        }
    }
}

/// Numerical diagnostics of a recovered curve.
#[derive(Debug, Clone, Copy, Default)]
pub struct MetaDiagnostics {
    /// `|M_{j t_max}|` at the final cutoff (Gil-Pelaez only).
    pub tail_norm: Option<f64>,
    /// Cutoff used after automatic extension (Gil-Pelaez only).
    pub t_max_used: Option<f64>,
    /// Disagreement between pairwise and compensated summation of the
    /// alternating binomial sums (Mnatsakanov, orders <= 30 only).
    pub roundoff: Option<f64>,
}

/// Tabulated meta-distribution CCDF over a reliability grid.
#[derive(Debug, Clone)]
pub struct MetaCurve {
    pub x_grid: Vec<f64>,
    pub ccdf: Vec<f64>,
    pub method: MetaMethod,
    /// Moment count (Mnatsakanov only).
    pub mu: Option<u32>,
    pub diagnostics: MetaDiagnostics,
}

fn check_reliability(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidReliability(x));
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Gil-Pelaez route
// ---------------------------------------------------------------------------

/// Imaginary-moment provider with a per-curve cache so repeated panel nodes
/// reuse their `M_{jt}` evaluations. Each moment is an adaptive nested
/// quadrature at a tolerance derived from the curve-level one: measured true
/// moment errors sit several orders below the conservative error estimates,
/// so the loose setting still leaves ~1e-6 accuracy on the CCDF.
struct MomentCache {
    kernel: Kernel,
    spec: QuadratureSpec,
    values: HashMap<u64, Complex64>,
}

impl MomentCache {
    fn moment_spec(curve_spec: &QuadratureSpec) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: (curve_spec.rel_tol * 1e4).clamp(1e-8, 1e-2),
            abs_tol: curve_spec.abs_tol.max(1e-9),
            ..*curve_spec
        }
    }

    fn get(&mut self, t: f64) -> Result<Complex64> {
        let bits = t.to_bits();
        if let Some(&v) = self.values.get(&bits) {
            return Ok(v);
        }
        let v = self.kernel.moment_adaptive_complex(t, &self.spec)?;
        self.values.insert(bits, v);
        Ok(v)
    }

    /// Evaluate the moment at every node in parallel and cache the results.
    fn prefill(&mut self, nodes: &[f64]) -> Result<()> {
        let mut missing: Vec<f64> = nodes
            .iter()
            .copied()
            .filter(|t| !self.values.contains_key(&t.to_bits()))
            .collect();
        missing.sort_by(f64::total_cmp);
        missing.dedup();
        let computed: Vec<(u64, Complex64)> = missing
            .par_iter()
            .map(|&t| {
                Ok((
                    t.to_bits(),
                    self.kernel.moment_adaptive_complex(t, &self.spec)?,
                ))
            })
            .collect::<Result<_>>()?;
        self.values.extend(computed);
        Ok(())
    }
}

fn gil_pelaez_curve(
    cfg: &NetworkConfig,
    metric: &Metric,
    x_grid: &[f64],
    t_max: f64,
    spec: &QuadratureSpec,
) -> Result<MetaCurve> {
    for &x in x_grid {
        check_reliability(x)?;
    }
    let kernel = Kernel::new(cfg, metric)?;
    let mut cache = MomentCache {
        kernel,
        spec: MomentCache::moment_spec(spec),
        values: HashMap::new(),
    };

    // Cutoff extension: the target |M| <= 1e-4 is projected from the local
    // decay exponent before committing, because this moment family can
    // decay as slowly as t^(-1/3), where no feasible cutoff reaches the
    // target and extending only burns time. Truncation stays observable
    // through the reported |M_{j t_max}| and is damped by tail averaging in
    // the panel sums.
    let ceiling = (2.0 * t_max).min(T_MAX_CEILING);
    let mut t_hi = t_max;
    let m_at_cut = cache.get(t_hi)?.norm();
    if m_at_cut > TAIL_NORM_TARGET {
        let m_probe = cache.get(1.3 * t_hi)?.norm();
        let kappa = (m_at_cut / m_probe).ln() / 1.3f64.ln();
        if kappa > 0.05 {
            let projected = t_hi * (m_at_cut / TAIL_NORM_TARGET).powf(1.0 / kappa);
            if projected <= ceiling {
                t_hi = projected.max(t_hi);
            }
        }
    }

    // One panel decomposition sized to the fastest oscillation in the grid
    // serves every x, so all moment evaluations at the panel nodes are
    // shared. Slower-oscillating grid points are merely over-resolved.
    let max_log = x_grid
        .iter()
        .map(|&x| x.ln().abs())
        .fold(f64::MIN, f64::max);
    let shared_wavelength = 2.0 * std::f64::consts::PI / max_log;

    // Pre-compute the moments at every panel node in parallel; the per-x
    // integration below then reads the cache.
    let mut nodes: Vec<f64> = vec![t_hi];
    for (lo, hi) in half_period_panels(shared_wavelength, t_hi) {
        nodes.extend(PanelMesh::new(lo, hi).nodes().into_iter().map(|(t, _)| t));
    }
    cache.prefill(&nodes)?;
    let cache = RefCell::new(cache);

    let mut ccdf = Vec::with_capacity(x_grid.len());
    let mut last_outcome = None;
    for &x in x_grid {
        let log_x = x.ln();
        let failure: std::cell::Cell<Option<Error>> = std::cell::Cell::new(None);
        let moment_at = |t: f64| -> Complex64 {
            match cache.borrow_mut().get(t) {
                Ok(m) => m,
                Err(e) => {
                    failure.set(Some(e));
                    Complex64::new(0.0, 0.0)
                }
            }
        };
        let g = |t: f64| -> f64 {
            if t == 0.0 {
                return 0.0;
            }
            (Complex64::new(0.0, -t * log_x).exp() * moment_at(t)).im / t
        };
        // The loose cache spec also sets the per-panel tolerance: panel
        // values carry conservative error estimates, and a tight tolerance
        // here would trigger pointless subdivision past the cached nodes.
        let out = gil_pelaez_integral(
            g,
            shared_wavelength,
            t_hi,
            t_hi, // extension already resolved above
            |t| moment_at(t).norm(),
            &MomentCache::moment_spec(spec),
        )?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        ccdf.push((0.5 + out.value / std::f64::consts::PI).clamp(0.0, 1.0));
        last_outcome = Some(out);
    }

    let diag = last_outcome
        .map(|o| MetaDiagnostics {
            tail_norm: Some(o.tail_norm),
            t_max_used: Some(o.t_max_used),
            roundoff: None,
        })
        .unwrap_or_default();
    Ok(MetaCurve {
        x_grid: x_grid.to_vec(),
        ccdf,
        method: MetaMethod::GilPelaez,
        mu: None,
        diagnostics: diag,
    })
}

/// Meta-distribution CCDF at reliability `x` by Gil-Pelaez inversion:
/// `1/2 + (1/π) ∫_0^∞ Im[e^{-jt ln x} M_{jt}]/t dt`, clamped to `[0,1]`.
pub fn meta_ccdf_gil_pelaez(cfg: &NetworkConfig, metric: &Metric, x: f64) -> Result<f64> {
    meta_ccdf_gil_pelaez_with(cfg, metric, x, DEFAULT_T_MAX, &QuadratureSpec::default())
}

pub fn meta_ccdf_gil_pelaez_with(
    cfg: &NetworkConfig,
    metric: &Metric,
    x: f64,
    t_max: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_reliability(x)?;
    let curve = gil_pelaez_curve(cfg, metric, &[x], t_max, spec)?;
    Ok(curve.ccdf[0])
}

// ---------------------------------------------------------------------------
// Mnatsakanov route
// ---------------------------------------------------------------------------

/// Exact binomial coefficient as f64. All C(n, k) for n <= 60 fit in u64;
/// for n <= 50 they are exactly representable in f64 as well.
fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // Multiply-then-divide stays integral at every step.
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc as f64
}

/// Pairwise sum, which keeps alternating binomial cancellation well behaved.
fn pairwise_sum(terms: &[f64]) -> f64 {
    match terms.len() {
        0 => 0.0,
        1 => terms[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
        }
    }
}

/// Neumaier compensated sum, used as a roundoff cross-check.
fn compensated_sum(terms: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &t in terms {
        let new_sum = sum + t;
        c += if sum.abs() >= t.abs() {
            (sum - new_sum) + t
        } else {
            (t - new_sum) + sum
        };
        sum = new_sum;
    }
    sum + c
}

fn mnatsakanov_sum(values: &[f64], mu: u32, x: f64) -> (f64, f64) {
    // S(x) = Σ_{k<=⌊μx⌋} C(μ,k) Σ_i (-1)^i C(μ-k, i) M_{k+i}, written in the
    // factored form C(μ,j)C(j,k) = C(μ,k)C(μ-k,j-k).
    let k_max = ((mu as f64) * x).floor() as u32;
    let mut outer = Vec::with_capacity(k_max as usize + 1);
    let mut outer_ref = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max.min(mu) {
        let rem = mu - k;
        let mut inner = Vec::with_capacity(rem as usize + 1);
        for i in 0..=rem {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            inner.push(sign * binomial(rem, i) * values[(k + i) as usize]);
        }
        let c = binomial(mu, k);
        outer.push(c * pairwise_sum(&inner));
        outer_ref.push(c * compensated_sum(&inner));
    }
    (pairwise_sum(&outer), compensated_sum(&outer_ref))
}

/// Mnatsakanov CDF reconstruction `S(x) ≈ P(P_s <= x)` from the first `μ`
/// moments. Returns the value and a roundoff diagnostic (pairwise vs
/// compensated summation; only meaningful for `μ <= 30` where every binomial
/// is exactly representable).
pub fn mnatsakanov_cdf(moments: &MomentSequence, x: f64) -> Result<f64> {
    Ok(mnatsakanov_cdf_diag(moments, x)?.0)
}

pub fn mnatsakanov_cdf_diag(moments: &MomentSequence, x: f64) -> Result<(f64, f64)> {
    check_reliability(x)?;
    let mu = moments.mu;
    if mu > MU_CAP {
        return Err(Error::MomentOrderTooLarge { mu, cap: MU_CAP });
    }
    let (s, s_ref) = mnatsakanov_sum(moments.values(), mu, x);
    Ok((s, (s - s_ref).abs()))
}

/// Meta-distribution CCDF at `x` via Mnatsakanov recovery with `μ` moments:
/// `1 - S(x)`, clamped to `[0,1]`.
pub fn meta_ccdf_mnatsakanov(cfg: &NetworkConfig, metric: &Metric, x: f64, mu: u32) -> Result<f64> {
    check_reliability(x)?;
    if mu > MU_CAP {
        return Err(Error::MomentOrderTooLarge { mu, cap: MU_CAP });
    }
    let seq = crate::moments::moment_sequence(cfg, metric, mu)?;
    Ok((1.0 - mnatsakanov_cdf(&seq, x)?).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

/// Tabulate the meta-distribution CCDF over a strictly increasing grid.
/// Mnatsakanov computes the moment sequence once and reuses it across the
/// grid; Gil-Pelaez inverts per point over one shared moment cache.
pub fn meta_curve(
    cfg: &NetworkConfig,
    metric: &Metric,
    x_grid: &[f64],
    method: MetaMethod,
    mu: u32,
) -> Result<MetaCurve> {
    meta_curve_with(
        cfg,
        metric,
        x_grid,
        method,
        mu,
        DEFAULT_T_MAX,
        &QuadratureSpec::default(),
    )
}

pub fn meta_curve_with(
    cfg: &NetworkConfig,
    metric: &Metric,
    x_grid: &[f64],
    method: MetaMethod,
    mu: u32,
    t_max: f64,
    spec: &QuadratureSpec,
) -> Result<MetaCurve> {
    if x_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for pair in x_grid.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(Error::InvalidParameter {
                name: "x_grid",
                reason: "grid must be strictly increasing".into(),
            });
        }
    }
    for &x in x_grid {
        check_reliability(x)?;
    }
    match method {
        MetaMethod::GilPelaez => gil_pelaez_curve(cfg, metric, x_grid, t_max, spec),
        MetaMethod::Mnatsakanov => {
            if mu > MU_CAP {
                return Err(Error::MomentOrderTooLarge { mu, cap: MU_CAP });
            }
            let seq = crate::moments::moment_sequence_with(cfg, metric, mu, spec)?;
            let mut ccdf = Vec::with_capacity(x_grid.len());
            let mut worst_roundoff = 0.0f64;
            for &x in x_grid {
                let (s, roundoff) = mnatsakanov_cdf_diag(&seq, x)?;
                worst_roundoff = worst_roundoff.max(roundoff);
                ccdf.push((1.0 - s).clamp(0.0, 1.0));
            }
            Ok(MetaCurve {
                x_grid: x_grid.to_vec(),
                ccdf,
                method,
                mu: Some(mu),
                diagnostics: MetaDiagnostics {
                    roundoff: Some(worst_roundoff),
                    ..Default::default()
                },
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::NetworkConfig;
    use crate::propagation::{Deployment, Environment};

    fn point_mass_sequence(at_one: bool, mu: u32) -> MomentSequence {
        let values = if at_one {
            vec![1.0; mu as usize + 1]
        } else {
            let mut v = vec![0.0; mu as usize + 1];
            v[0] = 1.0;
            v
        };
        MomentSequence::from_values(Metric::SirThreshold(1.0), 0, values).unwrap()
    }

    #[test]
    fn point_mass_at_one_reconstructs_exactly() {
        for mu in [5, 25, 50] {
            let seq = point_mass_sequence(true, mu);
            for x in [0.05, 0.3, 0.5, 0.8, 0.99] {
                let s = mnatsakanov_cdf(&seq, x).unwrap();
                assert_eq!(
                    s, 0.0,
                    "CDF below a point mass at 1 must be exactly 0 (mu={mu})"
                );
            }
        }
    }

    #[test]
    fn point_mass_at_zero_reconstructs_exactly() {
        for mu in [5, 25, 50] {
            let seq = point_mass_sequence(false, mu);
            for x in [0.05, 0.3, 0.5, 0.8, 0.99] {
                let s = mnatsakanov_cdf(&seq, x).unwrap();
                assert_eq!(
                    s, 1.0,
                    "CDF above a point mass at 0 must be exactly 1 (mu={mu})"
                );
            }
        }
    }

    #[test]
    fn bernoulli_half_reconstructs_near_half() {
        // Fair mass at {0,1}: M_0 = 1, M_j = 0.5 for j >= 1. Brute-force
        // value of the double sum at x = 0.5 is exactly 0.5.
        let mut values = vec![0.5; 26];
        values[0] = 1.0;
        let seq = MomentSequence::from_values(Metric::SirThreshold(1.0), 0, values).unwrap();
        let s = mnatsakanov_cdf(&seq, 0.5).unwrap();
        assert!((s - 0.5).abs() < 1e-12, "got {s}");
    }

    #[test]
    fn mnatsakanov_rejects_oversize_order() {
        let seq = point_mass_sequence(true, 61);
        assert!(matches!(
            mnatsakanov_cdf(&seq, 0.5),
            Err(Error::MomentOrderTooLarge { .. })
        ));
    }

    #[test]
    fn binomials_are_exact_integers() {
        assert_eq!(binomial(60, 30), 118264581564861424_u64 as f64);
        assert_eq!(binomial(50, 25), 126410606437752.0);
        assert_eq!(binomial(25, 12), 5200300.0);
        assert_eq!(binomial(5, 6), 0.0);
    }

    #[test]
    fn curve_rejects_bad_grids() {
        let cfg = NetworkConfig::new(1e-4, 10.0, Environment::preset(Deployment::UMi)).unwrap();
        let metric = Metric::SirThreshold(1.0);
        assert!(meta_curve(&cfg, &metric, &[], MetaMethod::Mnatsakanov, 5).is_err());
        assert!(meta_curve(&cfg, &metric, &[0.5, 0.5], MetaMethod::Mnatsakanov, 5).is_err());
        assert!(meta_curve(&cfg, &metric, &[0.5, 1.2], MetaMethod::Mnatsakanov, 5).is_err());
        assert!(matches!(
            meta_ccdf_mnatsakanov(&cfg, &metric, 1.0, 5),
            Err(Error::InvalidReliability(_))
        ));
    }

    #[test]
    fn sparse_network_ccdf_is_one() {
        // lambda -> 0 proxy: P_s is concentrated at 1.
        let cfg = NetworkConfig::new(1e-12, 10.0, Environment::preset(Deployment::UMi)).unwrap();
        let metric = Metric::SirThreshold(1.0);
        let v = meta_ccdf_mnatsakanov(&cfg, &metric, 0.5, 25).unwrap();
        assert!(v > 0.999, "got {v}");
    }

    #[test]
    fn mnatsakanov_curve_is_nonincreasing() {
        let cfg = NetworkConfig::new(1e-4, 10.0, Environment::preset(Deployment::UMi)).unwrap();
        let metric = Metric::SirThreshold(1.0);
        let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let curve = meta_curve(&cfg, &metric, &grid, MetaMethod::Mnatsakanov, 25).unwrap();
        for w in curve.ccdf.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-6,
                "CCDF must be nonincreasing: {:?}",
                curve.ccdf
            );
        }
        assert!(curve.ccdf.iter().all(|v| (0.0..=1.0).contains(v)));
        // Alternating binomial terms reach C(25,12) ~ 5e6, so ~1e-7 absolute
        // cancellation noise is the expected scale at mu = 25.
        let roundoff = curve.diagnostics.roundoff.unwrap();
        assert!(
            roundoff < 1e-5,
            "pairwise vs compensated disagreement {roundoff}"
        );
    }

    #[test]
    fn single_point_curve_matches_point_operation() {
        let cfg = NetworkConfig::new(1e-4, 10.0, Environment::preset(Deployment::UMi)).unwrap();
        let metric = Metric::SirThreshold(1.0);
        let point = meta_ccdf_mnatsakanov(&cfg, &metric, 0.5, 25).unwrap();
        let curve = meta_curve(&cfg, &metric, &[0.5], MetaMethod::Mnatsakanov, 25).unwrap();
        assert_eq!(curve.ccdf[0], point);
    }
}
