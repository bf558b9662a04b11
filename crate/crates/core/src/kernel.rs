//! Shared integration engine behind the coverage, moment and
//! meta-distribution operations.
//!
//! Everything here evaluates variants of one nested integral: an outer
//! average over the serving distance `r_1` (Rayleigh-distributed under the
//! PPP) of Laplace-functional factors `exp(-2πλ' ∫ (1-η_m(s,r)) r dr)`, with
//! the inner integral running from `r_1` to the interference horizon and
//! `s` set by the QoS threshold and the serving-link path loss.
//!
//! Two evaluation paths exist:
//!  * fully adaptive nested quadrature, used for point queries and for the
//!    imaginary-order moments feeding Gil-Pelaez inversion;
//!  * a frozen Kronrod mesh shared across real moment orders, used for
//!    moment sequences, which keeps a computed sequence an exact moment
//!    sequence of a (discretized) distribution and therefore
//!    Hausdorff-consistent to machine precision.

use std::cell::Cell;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coverage::{Metric, NetworkConfig};
use crate::error::{Error, Result};
use crate::numerics::{integrate, integrate_seeded, PanelMesh, QuadratureSpec};
use crate::propagation::{los_probability_raw, LinkGain, LinkType};

/// Outer integral truncation: drop `r_1` where `exp(-πλ r_1²)` is below this.
const OUTER_TAIL_MASS: f64 = 1e-12;

/// Internal stages run tighter than the requested tolerance so that the
/// composed result still meets it.
const OUTER_TOL_FACTOR: f64 = 0.05;
const INNER_TOL_FACTOR: f64 = 0.01;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    pub theta_eff: f64,
    /// `2π λ N_a / N_s`: thinned interferer intensity factor.
    pub thinned: f64,
    pub lambda: f64,
    pub height: f64,
    /// Interference horizon shared with the Monte Carlo oracle.
    pub horizon: f64,
    /// Upper limit of the serving-distance integral.
    pub outer_limit: f64,
    pub gain_los: LinkGain,
    pub gain_nlos: LinkGain,
    a: f64,
    b: f64,
}

impl Kernel {
    pub(crate) fn new(cfg: &NetworkConfig, metric: &Metric) -> Result<Self> {
        cfg.validate()?;
        let theta_eff = metric.effective_sir_threshold(cfg)?;
        Ok(Kernel {
            theta_eff,
            thinned: 2.0 * std::f64::consts::PI * cfg.lambda * cfg.n_active as f64
                / cfg.n_partitions as f64,
            lambda: cfg.lambda,
            height: cfg.height,
            horizon: cfg.interference_radius(),
            outer_limit: (-OUTER_TAIL_MASS.ln() / (std::f64::consts::PI * cfg.lambda)).sqrt(),
            gain_los: LinkGain::new(&cfg.env, LinkType::Los, cfg.carrier_ghz),
            gain_nlos: LinkGain::new(&cfg.env, LinkType::Nlos, cfg.carrier_ghz),
            a: cfg.env.a,
            b: cfg.env.b,
        })
    }

    #[inline]
    pub(crate) fn los_prob(&self, r: f64) -> f64 {
        los_probability_raw(self.height, r, self.a, self.b)
    }

    /// Serving-link interference scale for one link type: `θ_eff / gain`.
    #[inline]
    pub(crate) fn serving_scale(&self, link: LinkType, r_1: f64) -> f64 {
        let gain = match link {
            LinkType::Los => self.gain_los.gain(self.height, r_1),
            LinkType::Nlos => self.gain_nlos.gain(self.height, r_1),
        };
        self.theta_eff / gain
    }

    /// Interference kernel `η(s,r)` of the coverage integral.
    #[inline]
    pub(crate) fn eta(&self, s: f64, r: f64) -> f64 {
        let pl = self.los_prob(r);
        pl / (1.0 + s * self.gain_los.gain(self.height, r))
            + (1.0 - pl) / (1.0 + s * self.gain_nlos.gain(self.height, r))
    }

    /// Moment kernel `η_m(s,r)` for real order `m`.
    #[inline]
    pub(crate) fn eta_m_real(&self, s: f64, r: f64, m: f64) -> f64 {
        let pl = self.los_prob(r);
        let ul = (s * self.gain_los.gain(self.height, r)).ln_1p();
        let un = (s * self.gain_nlos.gain(self.height, r)).ln_1p();
        pl * (-m * ul).exp() + (1.0 - pl) * (-m * un).exp()
    }

    /// Moment kernel for imaginary order `jt`: `(1+x)^{-jt} = exp(-jt ln(1+x))`.
    #[inline]
    pub(crate) fn eta_m_complex(&self, s: f64, r: f64, t: f64) -> Complex64 {
        let pl = self.los_prob(r);
        let ul = (s * self.gain_los.gain(self.height, r)).ln_1p();
        let un = (s * self.gain_nlos.gain(self.height, r)).ln_1p();
        let (sin_l, cos_l) = (t * ul).sin_cos();
        let (sin_n, cos_n) = (t * un).sin_cos();
        Complex64::new(
            pl * cos_l + (1.0 - pl) * cos_n,
            -(pl * sin_l + (1.0 - pl) * sin_n),
        )
    }

    fn inner_spec(&self, spec: &QuadratureSpec) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: spec.rel_tol * INNER_TOL_FACTOR,
            // The inner integral only enters through exp(-thinned * I), so
            // its absolute tolerance is set by the exponent scale, not by
            // the raw magnitude of I (which can reach ~1e6).
            abs_tol: (spec.rel_tol * INNER_TOL_FACTOR + spec.abs_tol * 0.1) / self.thinned,
            // Complex orders oscillate over hundreds of radians of phase
            // along the inner range and need a deeper subdivision budget.
            max_subdivisions: spec.max_subdivisions * 4,
            ..*spec
        }
    }

    /// Log-spaced initial panels for the inner integral: the integrand mixes
    /// power-law tails over up to five decades of radius, where plain
    /// bisection from a single panel converges slowly.
    fn inner_boundaries(&self, r_1: f64) -> Vec<f64> {
        let mut bounds = vec![r_1];
        let mut r = r_1.max(1.0);
        loop {
            r *= 2.0;
            if r >= self.horizon {
                break;
            }
            bounds.push(r);
        }
        bounds.push(self.horizon);
        bounds
    }

    fn outer_spec(&self, spec: &QuadratureSpec) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: spec.rel_tol * OUTER_TOL_FACTOR,
            abs_tol: spec.abs_tol * OUTER_TOL_FACTOR,
            ..*spec
        }
    }

    /// `2πλ' ∫_{r_1}^{horizon} (1 - η(s,r)) r dr` with the coverage kernel.
    pub(crate) fn interference_exponent(
        &self,
        s: f64,
        r_1: f64,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        if r_1 >= self.horizon {
            return Ok(0.0);
        }
        let out = integrate_seeded(
            |r| (1.0 - self.eta(s, r)) * r,
            &self.inner_boundaries(r_1),
            &self.inner_spec(spec),
        )?;
        Ok(self.thinned * out.value)
    }

    fn interference_exponent_real(
        &self,
        s: f64,
        r_1: f64,
        m: f64,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        if r_1 >= self.horizon {
            return Ok(0.0);
        }
        let out = integrate_seeded(
            |r| (1.0 - self.eta_m_real(s, r, m)) * r,
            &self.inner_boundaries(r_1),
            &self.inner_spec(spec),
        )?;
        Ok(self.thinned * out.value)
    }

    fn interference_exponent_complex(
        &self,
        s: f64,
        r_1: f64,
        t: f64,
        spec: &QuadratureSpec,
    ) -> Result<Complex64> {
        if r_1 >= self.horizon {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let one = Complex64::new(1.0, 0.0);
        let out = integrate_seeded(
            |r| (one - self.eta_m_complex(s, r, t)) * r,
            &self.inner_boundaries(r_1),
            &self.inner_spec(spec),
        )?;
        Ok(out.value * self.thinned)
    }

    #[inline]
    fn serving_density(&self, r_1: f64) -> f64 {
        2.0 * std::f64::consts::PI
            * self.lambda
            * r_1
            * (-std::f64::consts::PI * self.lambda * r_1 * r_1).exp()
    }

    /// Coverage probability by fully adaptive nested quadrature, using the
    /// direct `η` kernel of the coverage integral.
    pub(crate) fn coverage_adaptive(&self, spec: &QuadratureSpec) -> Result<f64> {
        let failure: Cell<Option<Error>> = Cell::new(None);
        let integrand = |r_1: f64| -> f64 {
            let pl = self.los_prob(r_1);
            let a = self.interference_exponent(self.serving_scale(LinkType::Los, r_1), r_1, spec);
            let b = self.interference_exponent(self.serving_scale(LinkType::Nlos, r_1), r_1, spec);
            match (a, b) {
                (Ok(ea), Ok(eb)) => {
                    (pl * (-ea).exp() + (1.0 - pl) * (-eb).exp()) * self.serving_density(r_1)
                }
                (Err(e), _) | (_, Err(e)) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        };
        let out = integrate(integrand, 0.0, self.outer_limit, &self.outer_spec(spec))?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(out.value.clamp(0.0, 1.0))
    }

    /// Real-order moment by fully adaptive nested quadrature.
    pub(crate) fn moment_adaptive_real(&self, m: f64, spec: &QuadratureSpec) -> Result<f64> {
        let failure: Cell<Option<Error>> = Cell::new(None);
        let integrand = |r_1: f64| -> f64 {
            let pl = self.los_prob(r_1);
            let a = self.interference_exponent_real(
                self.serving_scale(LinkType::Los, r_1),
                r_1,
                m,
                spec,
            );
            let b = self.interference_exponent_real(
                self.serving_scale(LinkType::Nlos, r_1),
                r_1,
                m,
                spec,
            );
            match (a, b) {
                (Ok(ea), Ok(eb)) => {
                    (pl * (-ea).exp() + (1.0 - pl) * (-eb).exp()) * self.serving_density(r_1)
                }
                (Err(e), _) | (_, Err(e)) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        };
        let out = integrate(integrand, 0.0, self.outer_limit, &self.outer_spec(spec))?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(out.value.clamp(0.0, 1.0))
    }

    /// Imaginary-order moment `M_{jt}` by fully adaptive nested quadrature.
    pub(crate) fn moment_adaptive_complex(
        &self,
        t: f64,
        spec: &QuadratureSpec,
    ) -> Result<Complex64> {
        let failure: Cell<Option<Error>> = Cell::new(None);
        let integrand = |r_1: f64| -> Complex64 {
            let pl = self.los_prob(r_1);
            let a = self.interference_exponent_complex(
                self.serving_scale(LinkType::Los, r_1),
                r_1,
                t,
                spec,
            );
            let b = self.interference_exponent_complex(
                self.serving_scale(LinkType::Nlos, r_1),
                r_1,
                t,
                spec,
            );
            match (a, b) {
                (Ok(ea), Ok(eb)) => {
                    ((-ea).exp() * pl + (-eb).exp() * (1.0 - pl)) * self.serving_density(r_1)
                }
                (Err(e), _) | (_, Err(e)) => {
                    failure.set(Some(e));
                    Complex64::new(0.0, 0.0)
                }
            }
        };
        let out = integrate(integrand, 0.0, self.outer_limit, &self.outer_spec(spec))?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(out.value)
    }
}

/// One inner-integral node of the frozen mesh. `c_*` carry the quadrature
/// weight, the radial Jacobian, the LoS mixture weight and the thinned
/// intensity; `ln_u_*` is `ln(1 + s·gain)` for the respective link type.
#[derive(Debug, Clone, Copy)]
struct InnerNode {
    c_los: f64,
    ln_u_los: f64,
    c_nlos: f64,
    ln_u_nlos: f64,
}

/// Frozen inner integral: `exponent(m) = base - Σ c·exp(-m·ln_u)`.
#[derive(Debug, Clone)]
struct InnerSum {
    base: f64,
    nodes: Vec<InnerNode>,
}

impl InnerSum {
    fn build(kernel: &Kernel, s: f64, mesh: &PanelMesh) -> Self {
        let mut base = 0.0;
        let nodes = mesh
            .nodes()
            .into_iter()
            .map(|(r, w)| {
                let c = kernel.thinned * w * r;
                base += c;
                let pl = kernel.los_prob(r);
                InnerNode {
                    c_los: c * pl,
                    ln_u_los: (s * kernel.gain_los.gain(kernel.height, r)).ln_1p(),
                    c_nlos: c * (1.0 - pl),
                    ln_u_nlos: (s * kernel.gain_nlos.gain(kernel.height, r)).ln_1p(),
                }
            })
            .collect();
        InnerSum { base, nodes }
    }

    #[inline]
    fn exponent_real(&self, m: f64) -> f64 {
        let mut acc = 0.0;
        for n in &self.nodes {
            acc += n.c_los * (-m * n.ln_u_los).exp() + n.c_nlos * (-m * n.ln_u_nlos).exp();
        }
        self.base - acc
    }
}

#[derive(Debug, Clone)]
struct OuterNode {
    /// `w_q f_{R_1}(r_q) P_L(r_q)` and the NLoS counterpart.
    w_los: f64,
    w_nlos: f64,
    inner_los: InnerSum,
    inner_nlos: InnerSum,
}

/// Frozen two-level Kronrod mesh for one network configuration and metric.
///
/// Every moment order is evaluated on identical nodes with identical
/// positive weights, so computed real-order sequences are exact Hausdorff
/// moment sequences up to floating-point roundoff.
#[derive(Debug, Clone)]
pub(crate) struct FrozenKernel {
    outer: Vec<OuterNode>,
}

impl FrozenKernel {
    /// Build the mesh, refining against every pilot order.
    pub(crate) fn build(kernel: &Kernel, pilots: &[f64], spec: &QuadratureSpec) -> Result<Self> {
        let outer_spec = kernel.outer_spec(spec);
        let inner_spec = kernel.inner_spec(spec);

        // Outer panels: refine the full nested integrand per pilot.
        let failure: Cell<Option<Error>> = Cell::new(None);
        let mut outer_mesh = PanelMesh::new(0.0, kernel.outer_limit);
        for &m in pilots {
            let f = |r_1: f64| -> f64 {
                let pl = kernel.los_prob(r_1);
                let ea = kernel.interference_exponent_real(
                    kernel.serving_scale(LinkType::Los, r_1),
                    r_1,
                    m,
                    spec,
                );
                let eb = kernel.interference_exponent_real(
                    kernel.serving_scale(LinkType::Nlos, r_1),
                    r_1,
                    m,
                    spec,
                );
                match (ea, eb) {
                    (Ok(ea), Ok(eb)) => {
                        (pl * (-ea).exp() + (1.0 - pl) * (-eb).exp()) * kernel.serving_density(r_1)
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        failure.set(Some(e));
                        0.0
                    }
                }
            };
            outer_mesh.refine(f, &outer_spec)?;
        }
        if let Some(e) = failure.take() {
            return Err(e);
        }

        // Inner meshes per outer node, shared across orders.
        let outer_nodes = outer_mesh.nodes();
        let outer: Vec<OuterNode> = outer_nodes
            .into_par_iter()
            .map(|(r_1, w)| {
                let pl = kernel.los_prob(r_1);
                let density = kernel.serving_density(r_1);
                let s_los = kernel.serving_scale(LinkType::Los, r_1);
                let s_nlos = kernel.serving_scale(LinkType::Nlos, r_1);
                let build_inner = |s: f64| -> Result<InnerSum> {
                    let mut mesh = if r_1 < kernel.horizon {
                        PanelMesh::from_boundaries(&kernel.inner_boundaries(r_1))
                    } else {
                        PanelMesh::new(r_1, r_1)
                    };
                    if r_1 < kernel.horizon {
                        for &m in pilots {
                            mesh.refine(|r| (1.0 - kernel.eta_m_real(s, r, m)) * r, &inner_spec)?;
                        }
                    }
                    Ok(InnerSum::build(kernel, s, &mesh))
                };
                Ok(OuterNode {
                    w_los: w * density * pl,
                    w_nlos: w * density * (1.0 - pl),
                    inner_los: build_inner(s_los)?,
                    inner_nlos: build_inner(s_nlos)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(FrozenKernel { outer })
    }

    /// Real-order moment on the frozen mesh.
    pub(crate) fn moment_real(&self, m: f64) -> f64 {
        let mut acc = 0.0;
        for node in &self.outer {
            acc += node.w_los * (-node.inner_los.exponent_real(m)).exp()
                + node.w_nlos * (-node.inner_nlos.exponent_real(m)).exp();
        }
        acc
    }

    /// Total number of frozen inner nodes (cost proxy, used in tests).
    #[allow(dead_code)]
    pub(crate) fn inner_node_count(&self) -> usize {
        self.outer
            .iter()
            .map(|n| n.inner_los.nodes.len() + n.inner_nlos.nodes.len())
            .sum()
    }
}
