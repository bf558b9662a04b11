//! Adaptive Gauss–Kronrod quadrature for real- and complex-valued integrands
//! on finite and semi-infinite intervals.
//!
//! The engine is a 7-15 Gauss–Kronrod rule with worst-segment-first
//! bisection. Semi-infinite integrals are mapped onto (0, 1] with
//! `u = 1/(1 + r - a)` after a probe pass locates the integrand peak and the
//! point where the tail falls below `tail_cutoff` times that peak.
//!
//! All evaluation orders are fixed, so results are bit-reproducible.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerances and budgets for one quadrature call.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of segment bisections before giving up.
    pub max_subdivisions: usize,
    /// Integrand-to-peak ratio at which a semi-infinite tail is truncated.
    pub tail_cutoff: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-6,
            abs_tol: 1e-10,
            max_subdivisions: 400,
            tail_cutoff: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "rel_tol",
                reason: format!("must be > 0, got {}", self.rel_tol),
            });
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "abs_tol",
                reason: format!("must be >= 0, got {}", self.abs_tol),
            });
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter {
                name: "max_subdivisions",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.tail_cutoff > 0.0 && self.tail_cutoff < 1.0) {
            return Err(Error::InvalidParameter {
                name: "tail_cutoff",
                reason: format!("must lie in (0, 1), got {}", self.tail_cutoff),
            });
        }
        Ok(())
    }
}

/// Result of a quadrature call.
#[derive(Debug, Clone, Copy)]
pub struct QuadOutcome<T> {
    pub value: T,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

/// Scalar type a quadrature rule can accumulate: `f64` or `Complex64`.
pub trait IntegrandValue:
    Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self>
{
    fn zero() -> Self;
    fn scale(self, k: f64) -> Self;
    fn norm(self) -> f64;
}

impl IntegrandValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl IntegrandValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn norm(self) -> f64 {
        num_complex::Complex::norm(self)
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK QK15).
// Abscissae are for the interval [-1, 1]; only the non-negative half is
// stored, the rule is symmetric.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// QUADPACK-style error rescaling: sharpens the raw |K15 - G7| difference
/// while keeping it an upper bound in practice.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// Apply the 7-15 rule to `f` on `[a, b]`. Returns the Kronrod estimate and
/// a rescaled error bound.
pub(crate) fn kronrod15<T, F>(f: &mut F, a: f64, b: f64) -> (T, f64)
where
    T: IntegrandValue,
    F: FnMut(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut kronrod = f_center.scale(WGK[7]);
    let mut gauss = f_center.scale(WG[3]);
    let mut res_abs = f_center.norm() * WGK[7];

    let mut samples = [T::zero(); 15];
    samples[7] = f_center;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f_lo = f(center - dx);
        let f_hi = f(center + dx);
        samples[j] = f_lo;
        samples[14 - j] = f_hi;
        let pair = f_lo + f_hi;
        kronrod = kronrod + pair.scale(WGK[j]);
        res_abs += WGK[j] * (f_lo.norm() + f_hi.norm());
        if j % 2 == 1 {
            gauss = gauss + pair.scale(WG[j / 2]);
        }
    }

    let mean = kronrod.scale(0.5);
    let mut res_asc = WGK[7] * (samples[7] - mean).norm();
    for j in 0..7 {
        res_asc += WGK[j] * ((samples[j] - mean).norm() + (samples[14 - j] - mean).norm());
    }

    let raw_err = (kronrod - gauss).norm() * half.abs();
    let err = rescale_error(raw_err, res_abs * half.abs(), res_asc * half.abs());
    (kronrod.scale(half), err)
}

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

/// Adaptive bisection over an initial segment list. Segments are split
/// worst-error-first until the summed error meets the tolerance or the
/// subdivision budget runs out.
fn adapt_segments<T, F>(
    f: &mut F,
    mut segments: Vec<Segment<T>>,
    spec: &QuadratureSpec,
) -> (Vec<Segment<T>>, usize, bool)
where
    T: IntegrandValue,
    F: FnMut(f64) -> T,
{
    let mut subdivisions = 0usize;
    loop {
        let mut total = T::zero();
        let mut total_err = 0.0;
        for s in &segments {
            total = total + s.value;
            total_err += s.error;
        }
        let tol = spec.abs_tol.max(spec.rel_tol * total.norm());
        if total_err <= tol {
            return (segments, subdivisions, true);
        }
        if subdivisions >= spec.max_subdivisions {
            return (segments, subdivisions, false);
        }

        // Worst segment first; ties resolve to the lowest index.
        let mut worst = 0;
        for (i, s) in segments.iter().enumerate() {
            if s.error > segments[worst].error {
                worst = i;
            }
        }
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval no longer splittable in f64; accept what we have.
            return (segments, subdivisions, false);
        }
        let (v1, e1) = kronrod15(f, seg.a, mid);
        let (v2, e2) = kronrod15(f, mid, seg.b);
        segments[worst] = Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        };
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        subdivisions += 1;
    }
}

fn sum_segments<T: IntegrandValue>(segments: &[Segment<T>]) -> (T, f64) {
    let mut sorted: Vec<&Segment<T>> = segments.iter().collect();
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut total = T::zero();
    let mut err = 0.0;
    for s in sorted {
        total = total + s.value;
        err += s.error;
    }
    (total, err)
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadOutcome<T>>
where
    T: IntegrandValue,
    F: FnMut(f64) -> T,
{
    if a == b {
        spec.validate()?;
        return Ok(QuadOutcome {
            value: T::zero(),
            error_estimate: 0.0,
            subdivisions: 0,
        });
    }
    integrate_seeded(f, &[a, b], spec)
}

/// Integrate over `[boundaries[0], boundaries[last]]` starting from the
/// given panel decomposition.
pub fn integrate_seeded<T, F>(
    mut f: F,
    boundaries: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadOutcome<T>>
where
    T: IntegrandValue,
    F: FnMut(f64) -> T,
{
    spec.validate()?;
    if boundaries.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "boundaries",
            reason: "need at least two panel boundaries".into(),
        });
    }
    let init: Vec<Segment<T>> = boundaries
        .windows(2)
        .map(|w| {
            let (value, error) = kronrod15(&mut f, w[0], w[1]);
            Segment {
                a: w[0],
                b: w[1],
                value,
                error,
            }
        })
        .collect();
    let (segments, subdivisions, converged) = adapt_segments(&mut f, init, spec);
    let (value, error_estimate) = sum_segments(&segments);
    // 5% slack: the conservative per-panel error estimates routinely land a
    // hair above the requested tolerance on the last subdivision.
    if !converged && error_estimate > 1.05 * spec.abs_tol.max(spec.rel_tol * value.norm()) {
        return Err(Error::QuadratureNonConvergence {
            estimate: value.norm(),
            error_bound: error_estimate,
            subdivisions,
        });
    }
    Ok(QuadOutcome {
        value,
        error_estimate,
        subdivisions,
    })
}

/// Integrate `f` over `[a, ∞)` for an integrand that decays to zero.
///
/// A geometric probe pass locates the peak magnitude and the radius beyond
/// which `|f|` stays below `tail_cutoff` times the peak; the integral is then
/// evaluated on the transformed variable `u = 1/(1 + r - a)` over
/// `[u_min, 1]`, which compresses the retained tail into a finite interval.
pub fn integrate_semi_infinite<T, F>(
    mut f: F,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<QuadOutcome<T>>
where
    T: IntegrandValue,
    F: FnMut(f64) -> T,
{
    spec.validate()?;

    // Probe |f| on a + 2^k for k in [-20, 60]: peak detection plus tail cut.
    let mut peak = 0.0f64;
    let mut probes = Vec::with_capacity(81);
    for k in -20..=60 {
        let offset = 2f64.powi(k);
        let norm = f(a + offset).norm();
        probes.push((offset, norm));
        peak = peak.max(norm);
    }
    if peak == 0.0 {
        return Ok(QuadOutcome {
            value: T::zero(),
            error_estimate: 0.0,
            subdivisions: 0,
        });
    }
    let threshold = spec.tail_cutoff * peak;
    // Largest probe still above the cutoff, with two octaves of margin.
    let last_alive = probes.iter().rposition(|&(_, n)| n >= threshold);
    let tail_offset = match last_alive {
        Some(i) if i + 2 < probes.len() => probes[i + 2].0,
        _ => probes.last().unwrap().0,
    };

    let u_min = 1.0 / (1.0 + tail_offset);
    let mut g = |u: f64| {
        let r = a + (1.0 - u) / u;
        f(r).scale(1.0 / (u * u))
    };
    let (value, error) = kronrod15(&mut g, u_min, 1.0);
    let init = vec![Segment {
        a: u_min,
        b: 1.0,
        value,
        error,
    }];
    let (segments, subdivisions, converged) = adapt_segments(&mut g, init, spec);
    let (value, mut error_estimate) = sum_segments(&segments);
    // Account for the discarded tail.
    error_estimate += threshold * tail_offset;
    if !converged && error_estimate > spec.abs_tol.max(spec.rel_tol * value.norm()) {
        return Err(Error::QuadratureNonConvergence {
            estimate: value.norm(),
            error_bound: error_estimate,
            subdivisions,
        });
    }
    Ok(QuadOutcome {
        value,
        error_estimate,
        subdivisions,
    })
}

/// A frozen panel decomposition of a finite interval.
///
/// `refine` grows the panel set until the given integrand meets the
/// tolerance; repeated calls with different integrands accumulate panels, so
/// several related integrands can share one mesh. `nodes` exposes the
/// Kronrod evaluation points and weights of the final mesh.
#[derive(Debug, Clone)]
pub struct PanelMesh {
    panels: Vec<(f64, f64)>,
}

impl PanelMesh {
    pub fn new(a: f64, b: f64) -> Self {
        PanelMesh {
            panels: vec![(a, b)],
        }
    }

    /// Mesh seeded with the given ascending panel boundaries. Useful when
    /// the integrand structure is known (log-spaced panels for power-law
    /// tails) and plain bisection from one panel would converge slowly.
    pub fn from_boundaries(boundaries: &[f64]) -> Self {
        assert!(boundaries.len() >= 2, "need at least two boundaries");
        PanelMesh {
            panels: boundaries.windows(2).map(|w| (w[0], w[1])).collect(),
        }
    }

    /// Subdivide panels until `f` integrates to within `spec` tolerances.
    /// Existing panel boundaries are preserved.
    pub fn refine<T, F>(&mut self, mut f: F, spec: &QuadratureSpec) -> Result<()>
    where
        T: IntegrandValue,
        F: FnMut(f64) -> T,
    {
        let segments: Vec<Segment<T>> = self
            .panels
            .iter()
            .map(|&(a, b)| {
                let (value, error) = kronrod15(&mut f, a, b);
                Segment { a, b, value, error }
            })
            .collect();
        let spec_scaled = QuadratureSpec {
            max_subdivisions: spec.max_subdivisions.max(segments.len() * 2),
            ..*spec
        };
        let (segments, _, _) = adapt_segments(&mut f, segments, &spec_scaled);
        let mut panels: Vec<(f64, f64)> = segments.iter().map(|s| (s.a, s.b)).collect();
        panels.sort_by(|x, y| x.0.total_cmp(&y.0));
        self.panels = panels;
        Ok(())
    }

    /// Kronrod nodes and weights for every panel, in ascending order.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.panels.len() * 15);
        for &(a, b) in &self.panels {
            let center = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for j in 0..7 {
                out.push((center - half * XGK[j], WGK[j] * half));
            }
            out.push((center, WGK[7] * half));
            for j in (0..7).rev() {
                out.push((center + half * XGK[j], WGK[j] * half));
            }
        }
        out
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exponential_tail() {
        let spec = QuadratureSpec::default();
        let out = integrate_semi_infinite(|r: f64| (-r).exp(), 0.0, &spec).unwrap();
        assert!((out.value - 1.0).abs() < 1e-8, "got {}", out.value);
    }

    #[test]
    fn rayleigh_density_normalizes() {
        let spec = QuadratureSpec::default();
        let lambda = 1e-4;
        let out = integrate_semi_infinite(
            |r: f64| 2.0 * PI * lambda * r * (-PI * lambda * r * r).exp(),
            0.0,
            &spec,
        )
        .unwrap();
        assert!((out.value - 1.0).abs() < 1e-8, "got {}", out.value);
    }

    #[test]
    fn oscillatory_complex_matches_trapezoid_reference() {
        // Brute-force oracle: 1e6-point trapezoid on [0, 12] (the integrand
        // is ~1e-63 at r = 12).
        let f = |r: f64| Complex64::new(0.0, r).exp() * r * (-r * r).exp();
        let n = 1_000_000usize;
        let h = 12.0 / n as f64;
        let mut reference = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let r = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            reference += f(r) * (w * h);
        }

        let spec = QuadratureSpec::default();
        let out = integrate_semi_infinite(f, 0.0, &spec).unwrap();
        assert!(
            (out.value - reference).norm() < 1e-7,
            "adaptive {} vs reference {}",
            out.value,
            reference
        );
    }

    #[test]
    fn error_estimate_brackets_true_error() {
        // Closed-form suite at several tolerances; the reported error bound
        // must not understate the actual error.
        let cases: Vec<(Box<dyn Fn(f64) -> f64>, f64, f64)> = vec![
            (Box::new(|r: f64| (-r).exp()), 0.0, 1.0),
            (
                Box::new(|r: f64| (-r * r / 2.0).exp()),
                0.0,
                (PI / 2.0).sqrt(),
            ),
            (Box::new(|r: f64| 1.0 / (1.0 + r * r)), 0.0, PI / 2.0),
            (Box::new(|r: f64| r * (-r).exp()), 0.0, 1.0),
            (Box::new(|r: f64| r * r * (-r).exp()), 0.0, 2.0),
            (
                Box::new(|r: f64| (-2.0 * r).exp() * (3.0 * r).cos()),
                0.0,
                2.0 / 13.0,
            ),
            (Box::new(|r: f64| 1.0 / (1.0 + r).powi(3)), 0.0, 0.5),
            (Box::new(|r: f64| r / (1.0 + r * r).powi(2)), 0.0, 0.5),
            (
                Box::new(|r: f64| (-r.sqrt()).exp() / r.sqrt().max(1e-300)),
                1e-12,
                2.0,
            ),
            (Box::new(|r: f64| (-(r - 3.0) * (r - 3.0)).exp()), 0.0, {
                // erfc-based: sqrt(pi)/2 * (1 + erf(3)); erf(3) = 0.9999779095030014
                (PI).sqrt() / 2.0 * (1.0 + 0.999_977_909_503_001_4)
            }),
        ];
        for rel_tol in [1e-4, 1e-6, 1e-8] {
            let spec = QuadratureSpec {
                rel_tol,
                abs_tol: 1e-14,
                ..Default::default()
            };
            for (i, (f, a, exact)) in cases.iter().enumerate() {
                let out = integrate_semi_infinite(|r| f(r), *a, &spec).unwrap();
                let true_err = (out.value - exact).abs();
                assert!(
                    true_err <= out.error_estimate.max(1e-13),
                    "case {i} at rel_tol {rel_tol}: true error {true_err:e} \
                     exceeds estimate {:e}",
                    out.error_estimate
                );
            }
        }
    }

    #[test]
    fn complex_path_reduces_to_real_path() {
        let spec = QuadratureSpec::default();
        let real = integrate_semi_infinite(|r: f64| (-r).exp() * r.cos(), 0.0, &spec).unwrap();
        let complex = integrate_semi_infinite(
            |r: f64| Complex64::new((-r).exp() * r.cos(), 0.0),
            0.0,
            &spec,
        )
        .unwrap();
        assert_eq!(real.value, complex.value.re);
        assert_eq!(complex.value.im, 0.0);
    }

    #[test]
    fn finite_interval_polynomial_is_exact() {
        let spec = QuadratureSpec::default();
        let out = integrate(|x: f64| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, &spec).unwrap();
        // Antiderivative x^4/4 - x^2 + x evaluated at the ends: 16.
        assert!((out.value - 16.0).abs() < 1e-12, "got {}", out.value);
    }

    #[test]
    fn non_convergence_carries_estimate() {
        let spec = QuadratureSpec {
            max_subdivisions: 3,
            rel_tol: 1e-12,
            abs_tol: 0.0,
            ..Default::default()
        };
        let err = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 20.0, &spec).unwrap_err();
        match err {
            Error::QuadratureNonConvergence {
                estimate,
                error_bound,
                ..
            } => {
                assert!(estimate > 0.0 && error_bound > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn mesh_refinement_accumulates_panels() {
        let spec = QuadratureSpec::default();
        let mut mesh = PanelMesh::new(0.0, 10.0);
        mesh.refine(|x: f64| (-x).exp(), &spec).unwrap();
        let after_first = mesh.panel_count();
        mesh.refine(|x: f64| (-(x - 9.0) * (x - 9.0) * 50.0).exp(), &spec)
            .unwrap();
        assert!(mesh.panel_count() >= after_first);
        // The frozen nodes integrate both functions accurately.
        let nodes = mesh.nodes();
        let i1: f64 = nodes.iter().map(|&(x, w)| w * (-x).exp()).sum();
        assert!((i1 - (1.0 - (-10.0f64).exp())).abs() < 1e-8);
        let i2: f64 = nodes
            .iter()
            .map(|&(x, w)| w * (-(x - 9.0) * (x - 9.0) * 50.0).exp())
            .sum();
        assert!((i2 - (PI / 50.0).sqrt()).abs() < 1e-7, "got {i2}");
    }
}
