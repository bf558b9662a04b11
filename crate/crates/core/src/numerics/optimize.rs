//! Scalar and grid maximizers: golden-section search with a coarse bracketing
//! scan, and an exhaustive grid maximizer with local refinement on
//! continuous axes.

use crate::error::{Error, Result};

/// Bracket and stopping parameters for scalar maximization.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerSpec {
    pub bracket: (f64, f64),
    pub x_tol: f64,
    pub max_evals: usize,
}

impl OptimizerSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bracket;
        if !(lo < hi) {
            return Err(Error::InvalidBracket {
                lo,
                hi,
                reason: "lo must be < hi".into(),
            });
        }
        if !(self.x_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "x_tol",
                reason: format!("must be > 0, got {}", self.x_tol),
            });
        }
        Ok(())
    }
}

/// Outcome of a scalar maximization.
#[derive(Debug, Clone, Copy)]
pub struct ScalarMax {
    pub argmax: f64,
    pub max: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out before `x_tol` was reached.
    pub converged: bool,
    /// True when the maximum sits on the bracket boundary.
    pub on_boundary: bool,
}

/// Number of points in the coarse scan that selects the golden-section
/// bracket. Guards against mild multimodality.
const GRID_SCAN_POINTS: usize = 33;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximize `f` on the bracket: coarse grid scan, then golden-section search
/// inside the best grid cell.
pub fn golden_section_max<F>(mut f: F, spec: &OptimizerSpec) -> Result<ScalarMax>
where
    F: FnMut(f64) -> f64,
{
    spec.validate()?;
    let (lo, hi) = spec.bracket;
    let n = GRID_SCAN_POINTS.max(17);
    let step = (hi - lo) / (n - 1) as f64;

    let mut evaluations = 0usize;
    let mut best_idx = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut grid_vals = Vec::with_capacity(n);
    for i in 0..n {
        let x = if i == n - 1 { hi } else { lo + i as f64 * step };
        let v = f(x);
        evaluations += 1;
        grid_vals.push((x, v));
        if v > best_val {
            best_val = v;
            best_idx = i;
        }
    }

    // Golden section inside the cell around the best scan point.
    let mut a = grid_vals[best_idx.saturating_sub(1)].0;
    let mut b = grid_vals[(best_idx + 1).min(n - 1)].0;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    evaluations += 2;

    let mut converged = true;
    while (b - a) > spec.x_tol {
        if evaluations >= spec.max_evals {
            converged = false;
            break;
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        evaluations += 1;
    }

    let (mut argmax, mut max) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    // The coarse scan endpoints can still dominate a flat interior.
    if best_val > max {
        argmax = grid_vals[best_idx].0;
        max = best_val;
    }
    let on_boundary = (argmax - lo).abs() <= spec.x_tol || (hi - argmax).abs() <= spec.x_tol;
    Ok(ScalarMax {
        argmax,
        max,
        evaluations,
        converged,
        on_boundary,
    })
}

/// One axis of a multivariate grid search.
#[derive(Debug, Clone)]
pub struct GridAxis {
    /// Candidate values, ascending.
    pub values: Vec<f64>,
    /// Integer-valued axes are never refined between grid points.
    pub integer: bool,
}

impl GridAxis {
    pub fn continuous(values: Vec<f64>) -> Self {
        GridAxis {
            values,
            integer: false,
        }
    }
    pub fn integer(values: Vec<f64>) -> Self {
        GridAxis {
            values,
            integer: true,
        }
    }
}

/// Outcome of a grid maximization.
#[derive(Debug, Clone)]
pub struct GridMax {
    pub argmax: Vec<f64>,
    pub max: f64,
    pub evaluations: usize,
    /// Per-axis flag: argmax on the first or last grid value.
    pub on_boundary: Vec<bool>,
    /// Every evaluated point with its objective value, in evaluation order.
    pub trace: Vec<(Vec<f64>, f64)>,
}

/// Exhaustive search over the cartesian grid, then golden-section refinement
/// along each continuous axis. Ties resolve to the lexicographically
/// smallest grid tuple (axes in caller order), and a refinement step is only
/// accepted when it strictly improves the objective.
pub fn grid_refine_max<F>(mut f: F, axes: &[GridAxis], x_tol: f64) -> Result<GridMax>
where
    F: FnMut(&[f64]) -> f64,
{
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::EmptyGrid);
    }

    let mut trace = Vec::new();
    let mut indices = vec![0usize; axes.len()];
    let mut best_idx = indices.clone();
    let mut best_val = f64::NEG_INFINITY;
    let mut evaluations = 0usize;
    'outer: loop {
        let point: Vec<f64> = indices
            .iter()
            .zip(axes)
            .map(|(&i, ax)| ax.values[i])
            .collect();
        let v = f(&point);
        evaluations += 1;
        trace.push((point, v));
        if v > best_val {
            best_val = v;
            best_idx = indices.clone();
        }
        // Advance odometer: last axis fastest, so earlier tuples win ties in
        // lexicographic (smallest-first) order.
        for axis in (0..axes.len()).rev() {
            indices[axis] += 1;
            if indices[axis] < axes[axis].values.len() {
                continue 'outer;
            }
            indices[axis] = 0;
            if axis == 0 {
                break 'outer;
            }
        }
    }

    let mut argmax: Vec<f64> = best_idx
        .iter()
        .zip(axes)
        .map(|(&i, ax)| ax.values[i])
        .collect();
    let mut max = best_val;

    // Local refinement on continuous axes, two sweeps.
    for _ in 0..2 {
        for (axis_i, axis) in axes.iter().enumerate() {
            if axis.integer || axis.values.len() < 2 {
                continue;
            }
            let i = best_idx[axis_i];
            let lo = axis.values[i.saturating_sub(1)];
            let hi = axis.values[(i + 1).min(axis.values.len() - 1)];
            if !(lo < hi) {
                continue;
            }
            let spec = OptimizerSpec {
                bracket: (lo, hi),
                x_tol,
                max_evals: 200,
            };
            let mut point = argmax.clone();
            let scalar = golden_section_max(
                |x| {
                    point[axis_i] = x;
                    f(&point)
                },
                &spec,
            )?;
            evaluations += scalar.evaluations;
            if scalar.max > max {
                max = scalar.max;
                argmax[axis_i] = scalar.argmax;
                trace.push((argmax.clone(), scalar.max));
            }
        }
    }

    let on_boundary = best_idx
        .iter()
        .zip(axes)
        .map(|(&i, ax)| i == 0 || i + 1 == ax.values.len())
        .collect();
    Ok(GridMax {
        argmax,
        max,
        evaluations,
        on_boundary,
        trace,
    })
}
